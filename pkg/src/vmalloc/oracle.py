"""Independent checks on solved thresholds.

``dp_threshold`` is a backward-induction dynamic program over (units left,
time step) with at most one arrival per step. ``perturbation_check`` scales a
curve and confirms its expected revenue is not beaten.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError
from .policy import PricingParams
from .revenue import RevenueQuery, expected_revenue
from .solver import ThresholdCurve, TimeGrid, infinite_limit_threshold

MAX_STEP_LOAD = 0.25


@dataclass(frozen=True)
class DpConfig:
    n_time_steps: int = 600

    def __post_init__(self):
        if int(self.n_time_steps) != self.n_time_steps or self.n_time_steps < 10:
            raise ConfigurationError("n_time_steps must be an integer >= 10")


@dataclass(frozen=True, eq=False)
class DpResult:
    """values[i, k]: optimal expected revenue with k units from step i on.
    thresholds[i, k]: complexity cutoff applied during step i with k units."""

    grid: TimeGrid
    values: np.ndarray
    thresholds: np.ndarray

    def curve(self, k):
        return ThresholdCurve(k, self.grid, self.thresholds[:, k])


def dp_threshold(d, lam, horizon, n_vms, cfg: DpConfig | None = None) -> DpResult:
    """Backward induction for the seller's problem.

    Within a step an arrival occurs with probability p = 1 - exp(-lam dt).
    An arriving task is served when its complexity clears the cutoff and
    pays that cutoff, so the cutoff theta maximizes
    sf(theta) * (theta - dV) with dV = V(k, i+1) - V(k-1, i+1). Its first
    order condition is theta - hazard_gap(theta) = dV, and the value gain
    is p * sf(theta) * hazard_gap(theta).
    """
    cfg = cfg or DpConfig()
    nt = cfg.n_time_steps
    dt = horizon / nt
    if lam * dt > MAX_STEP_LOAD:
        need = math.ceil(lam * horizon / MAX_STEP_LOAD)
        raise ConfigurationError(
            f"lambda*dt = {lam * dt:.3g} exceeds {MAX_STEP_LOAD}; use n_time_steps >= {need}")
    p = -math.expm1(-lam * dt)
    val = np.zeros((nt + 1, n_vms + 1))
    thr = np.empty((nt + 1, n_vms + 1))
    thr[:, 0] = np.inf
    thr[nt, 1:] = infinite_limit_threshold(d)
    for i in range(nt - 1, -1, -1):
        nxt = val[i + 1]
        cut = np.asarray(d.inverse_virtual_valuation(nxt[1:] - nxt[:-1]), dtype=float)
        thr[i, 1:] = cut
        val[i, 1:] = nxt[1:] + p * np.asarray(d.sf(cut)) * np.asarray(d.hazard_gap(cut))
    return DpResult(TimeGrid(0.0, horizon, nt), val, thr)


@dataclass
class PerturbationReport:
    base_revenue: float
    scales: list
    revenues: list
    margins: list  # base minus scaled; positive means the base curve wins

    @property
    def passed(self):
        return all(m > 0 or s == 1.0 for s, m in zip(self.scales, self.margins))

    def lines(self):
        out = [f"base revenue {self.base_revenue:.10g}"]
        for s, r, m in zip(self.scales, self.revenues, self.margins):
            out.append(f"  scale {s:g}: revenue {r:.10g}  margin {m:+.4g}")
        return out


def perturbation_check(curve, d, lam, n_vms, pricing=None, scales=(0.8, 0.9, 1.1, 1.2),
                       t_from=None):
    pricing = pricing or PricingParams()
    t0 = curve.grid.t_start if t_from is None else t_from
    rev = lambda c: expected_revenue(RevenueQuery(c, d, pricing, lam, t0, n_vms))
    base = rev(curve)
    revs = [rev(curve.scaled(a)) for a in scales]
    return PerturbationReport(base, list(scales), revs, [base - r for r in revs])


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str
    seconds: float = 0.0

    def line(self):
        return f"[{'PASS' if self.passed else 'FAIL'}] {self.name}: {self.detail} ({self.seconds:.1f}s)"


@dataclass(frozen=True)
class VerifyConfig:
    alpha: float = 1.0
    lam: float = 100.0
    horizon: float = 12.0
    n_vms: int = 100
    n_steps: int = 1024
    dp_steps: int = 48000
    dp_counts: tuple = (1, 10, 100)
    mc_runs: int = 2000
    seed: int = 12345
    extra: dict = field(default_factory=dict)


def dp_distance(curve, dp: DpResult, k, horizon, margin=0.5):
    """Sup-distance of the DP curve for k units to ``curve``, relative to
    the curve's sup-norm, over t <= horizon - margin."""
    t = curve.t
    mask = t <= horizon - margin
    ref = curve.values[mask]
    other = np.interp(t[mask], dp.grid.nodes, dp.thresholds[:, k])
    return float(np.max(np.abs(other - ref)) / np.max(np.abs(ref)))


def run_checks(vc: VerifyConfig | None = None):
    """Oracle suite behind ``vmalloc verify``; returns a list of CheckResult."""
    from .dist import Exponential
    from .sim import Scenario, monte_carlo
    from .policy import PolicyTable
    from .solver import SolverConfig, j_factor, solve_family, solve_plan

    vc = vc or VerifyConfig()
    d = Exponential(vc.alpha)
    cfg = SolverConfig(grid=TimeGrid(0.0, vc.horizon, vc.n_steps))
    out = []

    def timed(name, fn):
        t0 = time.perf_counter()
        ok, detail = fn()
        out.append(CheckResult(name, bool(ok), detail, time.perf_counter() - t0))

    fam = []

    def family():
        fam.extend(solve_family(d, vc.lam, vc.n_vms, cfg))
        vals = np.array([c.values for c in fam])
        rise = float(np.max(vals[1:] - vals[:-1])) if len(fam) > 1 else -np.inf
        return rise <= 1e-6 and all(c.converged for c in fam), f"max rise in N {rise:.3g}"

    timed("ordering in N", family)

    def closed_form():
        t = fam[0].t
        ref = np.log(math.e + vc.lam * (vc.horizon - t)) / vc.alpha
        err = float(np.max(np.abs(fam[0].values - ref)))
        return err <= 1e-3, f"sup error {err:.3g}"

    timed("N=1 closed form", closed_form)

    def boundary():
        err = max(abs(c.values[-1] - 1.0 / vc.alpha) for c in fam)
        return err <= 1e-6, f"max terminal gap {err:.3g}"

    timed("terminal condition", boundary)

    def jfac():
        h = np.linspace(0.0, 50.0, 50)
        j = np.array([j_factor(h, n) for n in range(1, 51)])
        worst = float(np.max(j[1:] - j[:-1]))
        return worst <= 0 and j.min() >= 0 and j.max() <= 1, f"max increase in N {worst:.3g}"

    timed("J monotone and bounded", jfac)

    def dp_check():
        dp = dp_threshold(d, vc.lam, vc.horizon, max(vc.dp_counts), DpConfig(vc.dp_steps))
        dists = {k: dp_distance(fam[k - 1], dp, k, vc.horizon) for k in vc.dp_counts
                 if k <= len(fam)}
        worst = max(dists.values())
        return worst <= 0.05, ", ".join(f"N={k}: {v:.2%}" for k, v in dists.items())

    timed("DP agreement", dp_check)

    def perturb():
        parts, ok = [], True
        for k in vc.dp_counts:
            plan = solve_plan(d, vc.lam, k, cfg)
            rep = perturbation_check(plan.curve, d, vc.lam, k)
            ok &= rep.passed
            parts.append(f"N={k}: min margin {min(rep.margins):.3g}")
        return ok, ", ".join(parts)

    timed("perturbation optimality", perturb)

    def mc():
        curves = {(0, c.n_vms): c for c in fam}
        table = PolicyTable(d, vc.horizon, (vc.lam,), len(fam), curves)
        sc = Scenario(vc.horizon, len(fam), vc.lam, d, seed=vc.seed, switch_on_allocation=False)
        res = monte_carlo(sc, table, vc.mc_runs)
        exp = expected_revenue(RevenueQuery(fam[-1], d, PricingParams(), vc.lam))
        z = (res.mean - exp) / res.std_error
        return abs(z) <= 3, f"MC {res.mean:.4f} +/- {res.std_error:.4f} vs {exp:.4f} (z={z:+.2f})"

    timed("Monte Carlo vs quadrature", mc)
    return out
