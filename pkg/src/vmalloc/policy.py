"""Pricing rule and the precomputed threshold lookup table."""
from __future__ import annotations

import bisect
import json
import math
from dataclasses import dataclass, field
from datetime import datetime, timezone

import numpy as np

from .dist import ComplexityDistribution
from .errors import (ConfigurationError, DomainError, SolverError,
                     TableFormatError, TableValidationError)
from .solver import SolverConfig, ThresholdCurve, TimeGrid, solve_family

ORDER_TOL = 1e-6
REJECT_ALL = math.inf


@dataclass(frozen=True)
class PricingParams:
    """Price = q * threshold + S(t).

    S is piecewise constant: ``surcharge`` holds (start_time, value) pairs
    sorted by time, and S is 0 before the first start.
    """

    q: float = 1.0
    surcharge: tuple = ()
    kappa_T: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.q <= 1.0:
            raise ConfigurationError(f"q must lie in [0, 1], got {self.q}")
        steps = tuple((float(a), float(b)) for a, b in self.surcharge)
        if any(steps[i][0] > steps[i + 1][0] for i in range(len(steps) - 1)):
            raise ConfigurationError("surcharge breakpoints must be sorted by time")
        object.__setattr__(self, "surcharge", steps)
        object.__setattr__(self, "q", float(self.q))
        object.__setattr__(self, "kappa_T", float(self.kappa_T))

    def s_of_t(self, t):
        starts = [a for a, _ in self.surcharge]
        i = bisect.bisect_right(starts, t)
        return self.surcharge[i - 1][1] if i else 0.0

    def to_dict(self):
        return {"q": self.q, "surcharge": [list(p) for p in self.surcharge],
                "kappa_T": self.kappa_T}

    @classmethod
    def from_dict(cls, data):
        return cls(q=data.get("q", 1.0), surcharge=tuple(data.get("surcharge", ())),
                   kappa_T=data.get("kappa_T", 0.0))


def price(pp: PricingParams, threshold, t):
    return pp.q * threshold + pp.s_of_t(t)


@dataclass(frozen=True, eq=False)
class PolicyTable:
    distribution: ComplexityDistribution
    horizon: float
    lambda_grid: tuple
    n_vms_max: int
    curves: dict
    solver: dict = field(default_factory=dict)
    created: str | None = None

    @property
    def grid(self) -> TimeGrid:
        return next(iter(self.curves.values())).grid

    def lambda_index(self, lam):
        """Nearest grid rate; ties go to the lower rate."""
        g = self.lambda_grid
        i = bisect.bisect_left(g, lam)
        if i == 0:
            return 0
        if i == len(g):
            return len(g) - 1
        return i - 1 if lam - g[i - 1] <= g[i] - lam else i

    def curve(self, lam, n_vms):
        n = min(int(n_vms), self.n_vms_max)
        return self.curves[(self.lambda_index(lam), n)]


def check_ordering(table):
    """Raise if some curve for N+1 rises above the curve for N."""
    for li in range(len(table.lambda_grid)):
        for n in range(1, table.n_vms_max):
            lo = table.curves[(li, n + 1)].values
            hi = table.curves[(li, n)].values
            gap = float(np.max(lo - hi))
            if gap > ORDER_TOL:
                raise TableValidationError(
                    f"curve N={n + 1} exceeds N={n} by {gap:.3g} at lambda={table.lambda_grid[li]}")


def build_table(d, lambda_grid, n_vms_max, cfg: SolverConfig | None = None, stamp=True):
    cfg = cfg or SolverConfig()
    grid = tuple(float(v) for v in lambda_grid)
    if not grid or any(b <= a for a, b in zip(grid, grid[1:])) or grid[0] <= 0:
        raise ConfigurationError("lambda_grid must be nonempty, positive and strictly increasing")
    if cfg.grid.t_start != 0.0:
        raise ConfigurationError("table grids must start at t=0")
    if int(n_vms_max) < 1:
        raise ConfigurationError("n_vms_max must be positive")
    curves = {}
    for li, lam in enumerate(grid):
        for c in solve_family(d, lam, n_vms_max, cfg):
            if not c.converged:
                raise SolverError(f"curve did not converge (lambda={lam}, N={c.n_vms})")
            curves[(li, c.n_vms)] = c
    created = datetime.now(timezone.utc).isoformat(timespec="seconds") if stamp else None
    table = PolicyTable(d, cfg.grid.t_end, grid, int(n_vms_max), curves, cfg.to_dict(), created)
    check_ordering(table)
    return table


def lookup(table: PolicyTable, lambda_now, n_available, t):
    """Threshold to apply at time t with ``n_available`` free units."""
    if not 0.0 <= t <= table.horizon:
        raise DomainError(f"t={t} lies outside [0, {table.horizon}]")
    if n_available < 0:
        raise DomainError("n_available must be nonnegative")
    if n_available == 0:
        return REJECT_ALL
    return float(table.curve(lambda_now, n_available)(t))


def _floats(values):
    return "[" + ", ".join(format(float(v), ".17g") for v in values) + "]"


def save_table(table: PolicyTable, path):
    head = {
        "distribution": table.distribution.to_dict(),
        "horizon_hours": table.horizon,
        "lambda_grid": list(table.lambda_grid),
        "n_vms_max": table.n_vms_max,
        "grid": {"n_steps": table.grid.n_steps},
        "solver": table.solver,
    }
    if table.created:
        head["created"] = table.created
    lines = ["{"]
    for key, val in head.items():
        lines.append(f"  {json.dumps(key)}: {json.dumps(val)},")
    lines.append('  "curves": {')
    keys = sorted(table.curves)
    for i, (li, n) in enumerate(keys):
        sep = "," if i < len(keys) - 1 else ""
        lines.append(f'    "{li}:{n}": {_floats(table.curves[(li, n)].values)}{sep}')
    lines.append("  }")
    lines.append("}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def _need(doc, key, kind):
    if key not in doc:
        raise TableFormatError(key, "missing")
    val = doc[key]
    if not isinstance(val, kind) or isinstance(val, bool):
        raise TableFormatError(key, f"expected {kind}")
    return val


def load_table(path) -> PolicyTable:
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise TableFormatError("<document>", f"invalid JSON ({exc})") from exc
    if not isinstance(doc, dict):
        raise TableFormatError("<document>", "top level must be an object")
    try:
        dist = ComplexityDistribution.from_dict(_need(doc, "distribution", dict))
    except DomainError as exc:
        raise TableFormatError("distribution", str(exc)) from exc
    horizon = float(_need(doc, "horizon_hours", (int, float)))
    lam_grid = tuple(float(v) for v in _need(doc, "lambda_grid", list))
    if not lam_grid:
        raise TableFormatError("lambda_grid", "empty")
    n_max = _need(doc, "n_vms_max", int)
    n_steps = _need(_need(doc, "grid", dict), "n_steps", int)
    raw = _need(doc, "curves", dict)
    try:
        grid = TimeGrid(0.0, horizon, n_steps)
    except ConfigurationError as exc:
        raise TableFormatError("grid", str(exc)) from exc
    curves = {}
    for li, lam in enumerate(lam_grid):
        for n in range(1, n_max + 1):
            key = f"{li}:{n}"
            if key not in raw:
                raise TableFormatError(f"curves.{key}", "missing curve")
            vals = np.asarray(raw[key], dtype=float)
            if vals.shape != (n_steps + 1,) or not np.all(np.isfinite(vals)) or np.any(vals < 0):
                raise TableFormatError(f"curves.{key}", "wrong length or invalid values")
            curves[(li, n)] = ThresholdCurve(n, grid, vals, lam=lam)
    table = PolicyTable(dist, horizon, lam_grid, n_max, curves,
                        doc.get("solver", {}), doc.get("created"))
    check_ordering(table)
    return table
