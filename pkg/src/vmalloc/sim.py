"""Seeded discrete-event simulation of threshold allocation."""
from __future__ import annotations

import csv
import io
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .dist import ComplexityDistribution
from .errors import CapacityClampWarning, ConfigurationError
from .policy import REJECT_ALL, PolicyTable, PricingParams, lookup, price


@dataclass(frozen=True)
class CapacityEvent:
    time: float
    delta: int


@dataclass(frozen=True)
class Scenario:
    """One simulation setup.

    ``adaptive`` re-reads the table whenever inventory changes; when False the
    curve for ``initial_vms`` is used for the whole run. With
    ``switch_on_allocation`` False the adaptive policy only reacts to
    capacity events, not to its own allocations.
    """

    horizon: float
    initial_vms: int
    lam: float
    distribution: ComplexityDistribution
    pricing: PricingParams = field(default_factory=PricingParams)
    capacity_events: tuple = ()
    seed: int = 0
    adaptive: bool = True
    switch_on_allocation: bool = True

    def __post_init__(self):
        events = tuple(e if isinstance(e, CapacityEvent) else CapacityEvent(*e)
                       for e in self.capacity_events)
        if any(a.time > b.time for a, b in zip(events, events[1:])):
            raise ConfigurationError("capacity events must be sorted by time")
        if any(not 0 <= e.time <= self.horizon for e in events):
            raise ConfigurationError("capacity event outside the horizon")
        if self.initial_vms < 0:
            raise ConfigurationError("initial_vms must be nonnegative")
        if not self.lam > 0:
            raise ConfigurationError("lambda must be positive")
        if not 0 <= self.seed < 2**64:
            raise ConfigurationError("seed must be an unsigned 64-bit integer")
        object.__setattr__(self, "capacity_events", events)


@dataclass(frozen=True)
class TraceRow:
    time: float
    event_type: str
    complexity: float | None
    threshold: float
    qualified: bool | None
    price: float | None
    inventory_after: int
    cumulative_revenue: float


@dataclass
class SimResult:
    rows: list
    threshold_jumps: list  # (time, threshold before, threshold after) per capacity event
    clamp_warnings: list
    n_arrivals: int
    n_allocated: int
    final_revenue: float

    @property
    def arrivals(self):
        return [r for r in self.rows if r.event_type == "arrival"]

    def inventory_trace(self):
        return [(r.time, r.inventory_after) for r in self.rows]

    def revenue_trace(self):
        return [(r.time, r.cumulative_revenue) for r in self.rows]

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["time", "event_type", "complexity", "threshold", "qualified",
                    "price", "inventory_after", "cumulative_revenue"])
        num = lambda v: "" if v is None else repr(float(v))
        for r in self.rows:
            w.writerow([f"{r.time:.6f}", r.event_type, num(r.complexity), num(r.threshold),
                        "" if r.qualified is None else int(r.qualified), num(r.price),
                        r.inventory_after, num(r.cumulative_revenue)])
        return buf.getvalue()


def generate_arrivals(lam, horizon, d: ComplexityDistribution, seed):
    """Poisson arrival times on [0, horizon) with i.i.d. complexities.

    Returns (times, complexities) arrays. Gaps are drawn in batches first,
    then complexities by inverse-cdf sampling, all from one seeded stream.
    """
    if not lam > 0:
        raise ConfigurationError("lambda must be positive")
    rng = np.random.default_rng(seed)
    mean = lam * horizon
    batch = int(mean + 6.0 * math.sqrt(mean) + 16)
    times = np.cumsum(rng.exponential(1.0 / lam, batch))
    while times[-1] < horizon:
        more = times[-1] + np.cumsum(rng.exponential(1.0 / lam, batch))
        times = np.concatenate([times, more])
    times = times[times < horizon]
    return times, np.asarray(d.inv_cdf(rng.random(times.size)), dtype=float).reshape(-1)


def _check(scenario, table):
    if not math.isclose(scenario.horizon, table.horizon, rel_tol=1e-12):
        raise ConfigurationError(
            f"table horizon {table.horizon} does not match scenario horizon {scenario.horizon}")
    if scenario.distribution.to_dict() != table.distribution.to_dict():
        raise ConfigurationError("table was built for a different complexity distribution")


class _Policy:
    """Tracks which curve index the scenario's policy reads."""

    def __init__(self, sc):
        self.sc = sc
        self.nominal = sc.initial_vms

    def level(self, inventory):
        if inventory == 0:
            return 0
        if not self.sc.adaptive:
            return self.sc.initial_vms
        return inventory if self.sc.switch_on_allocation else self.nominal


def run(scenario: Scenario, table: PolicyTable) -> SimResult:
    _check(scenario, table)
    sc = scenario
    times, xs = generate_arrivals(sc.lam, sc.horizon, sc.distribution, sc.seed)
    pol = _Policy(sc)
    inv = sc.initial_vms
    revenue = 0.0
    rows, jumps, clamps = [], [], []
    allocated = 0
    events = list(sc.capacity_events)
    ei = 0
    thr = lambda t: lookup(table, sc.lam, pol.level(inv), t)

    def apply_event(ev):
        nonlocal inv
        before = thr(ev.time)
        new = inv + ev.delta
        if new < 0:
            msg = f"loss of {-ev.delta} at t={ev.time} exceeds inventory {inv}; clamped to 0"
            warnings.warn(msg, CapacityClampWarning, stacklevel=3)
            clamps.append(msg)
            new = 0
        inv = new
        pol.nominal = max(pol.nominal + ev.delta, 0)
        after = thr(ev.time)
        jumps.append((ev.time, before, after))
        rows.append(TraceRow(ev.time, "capacity", None, after, None, None, inv, revenue))

    for t, x in zip(times.tolist(), xs.tolist()):
        while ei < len(events) and events[ei].time <= t:
            apply_event(events[ei])
            ei += 1
        y = thr(t)
        ok = inv > 0 and x >= y
        paid = None
        if ok:
            paid = price(sc.pricing, y, t)
            revenue += paid
            inv -= 1
            allocated += 1
        rows.append(TraceRow(t, "arrival", x, y, ok, paid, inv, revenue))
    while ei < len(events):
        apply_event(events[ei])
        ei += 1
    return SimResult(rows, jumps, clamps, int(times.size), allocated, revenue)


@dataclass
class MonteCarloResult:
    mean: float
    std_error: float
    mean_allocations: float
    revenues: np.ndarray
    allocations: np.ndarray


def _batch_revenue(sc, table, seeds):
    """Vectorized replay of ``run`` over many seeds; returns (revenue, allocations)."""
    arrivals = [generate_arrivals(sc.lam, sc.horizon, sc.distribution, s) for s in seeds]
    n_runs = len(seeds)
    width = max((a[0].size for a in arrivals), default=0)
    t_all = np.full((n_runs, width), np.inf)
    x_all = np.zeros((n_runs, width))
    for r, (tt, xx) in enumerate(arrivals):
        t_all[r, :tt.size] = tt
        x_all[r, :xx.size] = xx

    grid = table.grid
    li = table.lambda_index(sc.lam)
    levels = max(table.n_vms_max, 1)
    curves = np.vstack([np.zeros(grid.n_steps + 1)] +
                       [table.curves[(li, n)].values for n in range(1, levels + 1)])
    step = grid.step

    inv = np.full(n_runs, sc.initial_vms, dtype=np.int64)
    nominal = inv.copy()
    revenue = np.zeros(n_runs)
    allocated = np.zeros(n_runs, dtype=np.int64)
    applied = np.zeros((len(sc.capacity_events), n_runs), dtype=bool)
    for j in range(width):
        t = t_all[:, j]
        live = np.isfinite(t)
        if not live.any():
            break
        for k, ev in enumerate(sc.capacity_events):
            hit = live & ~applied[k] & (ev.time <= t)
            if hit.any():
                inv[hit] = np.maximum(inv[hit] + ev.delta, 0)
                nominal[hit] = np.maximum(nominal[hit] + ev.delta, 0)
                applied[k] |= hit
        if not sc.adaptive:
            level = np.where(inv > 0, sc.initial_vms, 0)
        elif sc.switch_on_allocation:
            level = inv
        else:
            level = np.where(inv > 0, nominal, 0)
        level = np.minimum(level, table.n_vms_max)
        tc = np.where(live, t, 0.0)
        pos = np.clip((tc - grid.t_start) / step, 0, grid.n_steps)
        i0 = np.minimum(pos.astype(np.int64), grid.n_steps - 1)
        w = pos - i0
        y0, y1 = curves[level, i0], curves[level, i0 + 1]
        y = np.where(level > 0, y0 + w * (y1 - y0), REJECT_ALL)
        take = live & (inv > 0) & (x_all[:, j] >= y)
        if take.any():
            s_t = np.array([sc.pricing.s_of_t(v) for v in tc[take]])
            revenue[take] += sc.pricing.q * y[take] + s_t
            inv[take] -= 1
            allocated[take] += 1
    return revenue, allocated


def monte_carlo(scenario: Scenario, table: PolicyTable, n_runs, base_seed=None,
                chunk=2000) -> MonteCarloResult:
    """Replicate ``run`` over seeds base_seed .. base_seed + n_runs - 1."""
    if n_runs < 2:
        raise ConfigurationError("need at least 2 runs")
    _check(scenario, table)
    base = scenario.seed if base_seed is None else int(base_seed)
    seeds = [base + r for r in range(n_runs)]
    revs, allocs = [], []
    for i in range(0, n_runs, chunk):
        r, a = _batch_revenue(scenario, table, seeds[i:i + chunk])
        revs.append(r)
        allocs.append(a)
    rev = np.concatenate(revs)
    alloc = np.concatenate(allocs)
    se = float(rev.std(ddof=1) / math.sqrt(n_runs))
    return MonteCarloResult(float(rev.mean()), se, float(alloc.mean()), rev, alloc)
