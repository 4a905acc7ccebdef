"""Optimal qualification thresholds.

The threshold equation is solved in operational time. Along the curve, u is
the expected number of qualified arrivals still to come. In that variable
the equation for a unit pool facing an expected load K reads

    y(u) = hazard_gap(y(u)) + integral_u^K hazard_gap(y(w)) J_N(w) dw

and wall-clock time is recovered from dtau = du / qualified_rate(y). This
removes the sharp layer that the thresholds develop just before the
horizon when they are sampled in calendar time.

Each node update is a small fixed-point problem solved by damped Picard
iteration. For exponential complexities the hazard gap is constant, so a
single pass is exact.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import PchipInterpolator
from scipy.optimize import brentq

from .dist import ComplexityDistribution
from .errors import (ConfigurationError, ConvergenceWarning, DomainError, EvaluationError,
                     SolverError)


@dataclass(frozen=True)
class TimeGrid:
    t_start: float = 0.0
    t_end: float = 12.0
    n_steps: int = 1024

    def __post_init__(self):
        if not (self.t_end > self.t_start):
            raise ConfigurationError("grid needs t_end > t_start")
        if int(self.n_steps) != self.n_steps or self.n_steps < 2:
            raise ConfigurationError("grid needs at least 2 steps")
        object.__setattr__(self, "n_steps", int(self.n_steps))

    @property
    def step(self):
        return (self.t_end - self.t_start) / self.n_steps

    @property
    def nodes(self):
        return np.linspace(self.t_start, self.t_end, self.n_steps + 1)


@dataclass(frozen=True)
class SolverConfig:
    """Knobs for the threshold solver.

    ``tolerance``, ``max_iterations`` and ``damping`` control the per-node
    Picard iteration. ``n_operational`` is the number of steps of the
    operational-time grid.
    """

    grid: TimeGrid = field(default_factory=TimeGrid)
    tolerance: float = 1e-8
    max_iterations: int = 500
    damping: float = 1.0
    n_operational: int = 2048

    def __post_init__(self):
        if not self.tolerance > 0:
            raise ConfigurationError("tolerance must be positive")
        if self.max_iterations < 1:
            raise ConfigurationError("max_iterations must be positive")
        if not 0 < self.damping <= 1:
            raise ConfigurationError("damping must lie in (0, 1]")
        if self.n_operational < 16:
            raise ConfigurationError("n_operational must be at least 16")

    def to_dict(self):
        return {
            "tolerance": self.tolerance,
            "max_iterations": self.max_iterations,
            "damping": self.damping,
            "n_operational": self.n_operational,
            "n_steps": self.grid.n_steps,
        }


@dataclass(frozen=True, eq=False)
class ThresholdCurve:
    """y_N sampled on a uniform time grid."""

    n_vms: int
    grid: TimeGrid
    values: np.ndarray
    converged: bool = True
    iterations: int = 0
    residual: float = 0.0
    lam: float | None = None

    def __post_init__(self):
        vals = np.array(self.values, dtype=float)
        if vals.shape != (self.grid.n_steps + 1,):
            raise ConfigurationError("curve length does not match its grid")
        if not np.all(np.isfinite(vals)) or np.any(vals < 0):
            raise SolverError("threshold values must be finite and nonnegative")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @property
    def t(self):
        return self.grid.nodes

    def __call__(self, t):
        return np.interp(t, self.t, self.values)

    def scaled(self, factor):
        return ThresholdCurve(self.n_vms, self.grid, factor * self.values,
                              self.converged, self.iterations, self.residual, self.lam)


def j_factor(h, n_vms):
    """Poisson mass at N-1 over the Poisson mass of {0, ..., N-1} at mean h.

    Uses J_1 = 1 and J_{k+1} = h J_k / (h J_k + k), which is the ratio of
    the normalized partial-sum terms and never forms a power or factorial.
    """
    n = int(n_vms)
    if n != n_vms or n < 1:
        raise DomainError("n_vms must be a positive integer")
    arr = np.asarray(h, dtype=float)
    if np.any(arr < 0):
        raise DomainError("accumulated intensity must be nonnegative")
    j = np.ones_like(arr)
    for k in range(1, n):
        hj = arr * j
        j = hj / (hj + k)
    return float(j) if np.ndim(h) == 0 else j


def infinite_limit_threshold(d: ComplexityDistribution, tol=1e-10):
    """Root of y = hazard_gap(y), the threshold once inventory is unlimited."""
    g = lambda y: y - d.hazard_gap(y)
    lo, hi = 0.0, 1.0
    try:
        g0 = g(lo)
    except EvaluationError:
        g0 = -math.inf  # density vanishes at 0, so the hazard gap blows up there
    if g0 >= 0:
        if g0 == 0:
            return 0.0
        raise SolverError("no sign change: virtual valuation is positive at 0")
    while g(hi) < 0:
        hi *= 2.0
        if hi > 1e12:
            raise SolverError("no sign change found for y = hazard_gap(y)")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if g(mid) < 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


class _Stats:
    def __init__(self):
        self.iterations = 0
        self.residual = 0.0
        self.converged = True

    def note(self, its, res, ok):
        self.iterations = max(self.iterations, its)
        self.residual = max(self.residual, res)
        self.converged &= ok


def _node_solve(d, gain, carry, start, cfg, stats):
    # y = gain * hazard_gap(y) + carry, elementwise
    y = start
    change = np.inf
    for it in range(1, cfg.max_iterations + 1):
        new = gain * d.hazard_gap(y) + carry
        if cfg.damping != 1.0:
            new = cfg.damping * new + (1.0 - cfg.damping) * y
        change = float(np.max(np.abs(new - y))) if new.size else 0.0
        y = new
        if change <= cfg.tolerance:
            stats.note(it, change, True)
            return y
    if not np.all(np.isfinite(y)):
        raise SolverError("non-finite threshold during node update")
    stats.note(cfg.max_iterations, change, False)
    return y


def _march(d, lam, n_vms, k_max, m, cfg, stats):
    """Backward march for every load K = u_k on a uniform grid at once.

    Returns (u, tau, y0): tau[k] is the calendar time a pool with expected
    load u[k] spans, y0[k] its threshold at the start of that span.
    """
    u = np.linspace(0.0, k_max, m + 1)
    du = k_max / m
    jf = j_factor(u, n_vms)
    y_end = infinite_limit_threshold(d)
    y = np.full(m + 1, y_end)
    hz = np.asarray(d.hazard_gap(y), dtype=float)
    inv_rate = 1.0 / (lam * np.asarray(d.sf(y), dtype=float))
    acc = np.zeros(m + 1)
    tau = np.zeros(m + 1)
    for p in range(m - 1, -1, -1):
        r = slice(p + 1, None)
        carry = acc[r] + 0.5 * du * hz[r] * jf[p + 1]
        new = _node_solve(d, 1.0 + 0.5 * du * jf[p], carry, y[r], cfg, stats)
        hz_new = np.asarray(d.hazard_gap(new), dtype=float)
        inv_new = 1.0 / (lam * np.asarray(d.sf(new), dtype=float))
        acc[r] = carry + 0.5 * du * hz_new * jf[p]
        tau[r] += 0.5 * du * (inv_new + inv_rate[r])
        y[r], hz[r], inv_rate[r] = new, hz_new, inv_new
    if not (np.all(np.isfinite(y)) and np.all(np.isfinite(tau))):
        raise SolverError(f"non-finite values in march (lam={lam}, N={n_vms})")
    return u, tau, y


def _load_bound(d, lam, n_vms, span, cfg):
    """An expected load K whose span covers ``span`` with some room to spare."""
    k_hi = lam * float(d.sf(infinite_limit_threshold(d))) * span
    if not k_hi > 0:
        raise SolverError("qualified rate vanishes at the terminal threshold")
    for _ in range(80):
        u, tau, _ = _march(d, lam, n_vms, k_hi, 128, cfg, _Stats())
        idx = int(np.searchsorted(tau, span))
        if idx >= 64:
            return k_hi
        k_hi = u[min(idx + 1, 128)]
    return k_hi


def _checked_lam(lam):
    lam = float(lam)
    if not (math.isfinite(lam) and lam > 0):
        raise DomainError("arrival rate must be positive")
    return lam


def operational_profile(d, lam, n_vms, span, cfg=None):
    """(tau, y0, stats): start thresholds against time-to-horizon up to ``span``."""
    cfg = cfg or SolverConfig()
    lam = _checked_lam(lam)
    stats = _Stats()
    k_max = _load_bound(d, lam, n_vms, span, cfg)
    for _ in range(40):
        u, tau, y0 = _march(d, lam, n_vms, k_max, cfg.n_operational, cfg, stats)
        if tau[-1] >= span:
            return tau, y0, stats
        k_max *= 1.5
    raise SolverError(f"could not cover the horizon (lam={lam}, N={n_vms})")


def _report(stats, lam, n_vms):
    if not stats.converged:
        warnings.warn(f"threshold solve hit max_iterations (lam={lam}, N={n_vms}); "
                      f"residual {stats.residual:.3g}", ConvergenceWarning, stacklevel=3)


def solve_threshold(d, lam, n_vms, cfg=None):
    """Threshold curve y_N(t) for a pool that holds N units at time t.

    Each grid value is the opening threshold of the optimal plan that starts
    at t with N units, so this is the curve a policy table reads from.
    """
    cfg = cfg or SolverConfig()
    grid = cfg.grid
    n = int(n_vms)
    if n != n_vms or n < 1:
        raise DomainError("n_vms must be a positive integer")
    span = grid.t_end - grid.t_start
    tau, y0, stats = operational_profile(d, lam, n, span, cfg)
    remaining = grid.t_end - grid.nodes
    values = PchipInterpolator(tau, y0)(remaining)
    values[-1] = y0[0]
    _report(stats, lam, n)
    return ThresholdCurve(n, grid, values, stats.converged, stats.iterations,
                          stats.residual, float(lam))


def solve_family(d, lam, n_vms_max, cfg=None):
    """Curves for N = 1..n_vms_max."""
    out = []
    for n in range(1, int(n_vms_max) + 1):
        try:
            out.append(solve_threshold(d, lam, n, cfg))
        except SolverError as exc:
            raise SolverError(f"family solve failed at N={n}: {exc}") from exc
    return out


@dataclass(frozen=True, eq=False)
class Plan:
    """Optimal open-loop threshold path from ``t_from`` for a fixed N.

    ``load`` is the expected number of qualified arrivals over the plan,
    ``u``/``y_op`` the path in operational time and ``curve`` the same path
    on a calendar grid from t_from to the horizon.
    """

    curve: ThresholdCurve
    load: float
    u: np.ndarray
    y_op: np.ndarray
    times: np.ndarray


def _march_path(d, lam, n_vms, load, m, cfg, stats):
    u = np.linspace(0.0, load, m + 1)
    du = load / m
    jf = j_factor(u, n_vms)
    y = np.empty(m + 1)
    rho = np.zeros(m + 1)  # calendar time from u to the end of the plan
    y[m] = infinite_limit_threshold(d)
    hz = float(d.hazard_gap(y[m]))
    inv = 1.0 / (lam * float(d.sf(y[m])))
    acc = 0.0
    for p in range(m - 1, -1, -1):
        carry = acc + 0.5 * du * hz * jf[p + 1]
        new = float(_node_solve(d, 1.0 + 0.5 * du * jf[p], np.array([carry]),
                                np.array([y[p + 1]]), cfg, stats)[0])
        hz_new = float(d.hazard_gap(new))
        inv_new = 1.0 / (lam * float(d.sf(new)))
        acc = carry + 0.5 * du * hz_new * jf[p]
        rho[p] = rho[p + 1] + 0.5 * du * (inv + inv_new)
        y[p], hz, inv = new, hz_new, inv_new
    return u, y, rho


def solve_plan(d, lam, n_vms, cfg=None, t_from=0.0):
    """Open-loop optimal curve from ``t_from`` holding N fixed.

    This is the stationary curve of the expected-revenue functional for a
    pool that commits to one curve for all N units. Its value at t_from
    equals ``solve_threshold`` at t_from.
    """
    cfg = cfg or SolverConfig()
    lam = _checked_lam(lam)
    n = int(n_vms)
    t_end = cfg.grid.t_end
    span = t_end - t_from
    if not span > 0:
        raise DomainError("t_from must lie before the horizon")
    m = cfg.n_operational
    k_hi = _load_bound(d, lam, n, span, cfg)
    probe = lambda k: _march_path(d, lam, n, k, m, cfg, _Stats())[2][0] - span
    while probe(k_hi) < 0:
        k_hi *= 1.5
    load = brentq(probe, 0.0, k_hi, xtol=1e-12, rtol=1e-13)
    stats = _Stats()
    u, y, rho = _march_path(d, lam, n, load, m, cfg, stats)
    times = t_end - rho
    grid = TimeGrid(t_from, t_end, cfg.grid.n_steps)
    values = PchipInterpolator(times, y)(grid.nodes)
    values[0], values[-1] = y[0], y[-1]
    _report(stats, lam, n)
    curve = ThresholdCurve(n, grid, values, stats.converged, stats.iterations,
                           stats.residual, lam)
    return Plan(curve, load, u, y, times)


def picard_map(d, n_vms, u, y):
    """One application of the operational-time map to a sampled path.

    Returns hazard_gap(y(u)) + integral_u^K hazard_gap(y) J_N dw with the
    integral by trapezoid on the nodes of ``u``.
    """
    hz = np.asarray(d.hazard_gap(y), dtype=float)
    f = hz * j_factor(u, n_vms)
    seg = 0.5 * np.diff(u) * (f[1:] + f[:-1])
    tail = np.concatenate([np.cumsum(seg[::-1])[::-1], [0.0]])
    return hz + tail
