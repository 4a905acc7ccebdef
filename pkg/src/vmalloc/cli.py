"""Command-line entry point: ``vmalloc {solve,table,simulate,revenue,verify}``."""
from __future__ import annotations

import argparse
import json
import os
import sys
import warnings
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone

import numpy as np

from .dist import ComplexityDistribution
from .errors import (ConfigurationError, ConvergenceWarning, DomainError, SolverError,
                     TableFormatError, TableValidationError)
from .oracle import VerifyConfig, run_checks
from .policy import PricingParams, build_table, load_table, save_table
from .revenue import RevenueQuery, expected_revenue
from .sim import CapacityEvent, Scenario, monte_carlo, run
from .solver import SolverConfig, TimeGrid, solve_threshold

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC, EXIT_VERIFY = 0, 1, 2, 3


class UsageError(Exception):
    pass


@dataclass(frozen=True)
class RunConfig:
    distribution: ComplexityDistribution
    horizon: float
    lam: float
    lambda_grid: tuple
    initial_vms: int
    n_vms_list: tuple
    n_vms_max: int
    pricing: PricingParams
    capacity_events: tuple
    seed: int
    runs: int
    adaptive: bool
    switch_on_allocation: bool
    solver: SolverConfig
    table: str | None
    inline_table: bool
    out: str | None
    deterministic: bool
    verify: dict = field(default_factory=dict)

    def scenario(self):
        return Scenario(self.horizon, self.initial_vms, self.lam, self.distribution,
                        self.pricing, self.capacity_events, self.seed, self.adaptive,
                        self.switch_on_allocation)


def _num(doc, key, default, kind=float, lo=None, strict=False):
    val = doc.get(key, default)
    if isinstance(val, bool) or not isinstance(val, (int, float)):
        raise ConfigurationError(f"'{key}' must be a number")
    if kind is int and int(val) != val:
        raise ConfigurationError(f"'{key}' must be an integer")
    val = kind(val)
    if lo is not None and (val <= lo if strict else val < lo):
        raise ConfigurationError(f"'{key}' must be {'>' if strict else '>='} {lo}")
    return val


def parse_config(doc: dict, args) -> RunConfig:
    """Merge flags over the JSON document and validate everything."""
    doc = dict(doc)
    if args.alpha is not None:
        doc["distribution"] = {"family": "exponential", "alpha": args.alpha}
    if args.horizon is not None:
        doc["horizon_hours"] = args.horizon
    if args.lam is not None:
        doc["lambda"] = args.lam
        doc["lambda_grid"] = [args.lam]
    if args.vms is not None:
        doc["initial_vms"] = doc["n_vms_max"] = args.vms
        doc["n_vms_list"] = [args.vms]
    for key in ("seed", "runs", "out", "table"):
        if getattr(args, key, None) is not None:
            doc[key] = getattr(args, key)

    try:
        dist = ComplexityDistribution.from_dict(doc.get("distribution", {"family": "exponential", "alpha": 1.0}))
    except DomainError as exc:
        raise ConfigurationError(f"distribution: {exc}") from exc
    horizon = _num(doc, "horizon_hours", 12.0, lo=0, strict=True)
    lam = _num(doc, "lambda", 100.0, lo=0, strict=True)
    grid = doc.get("lambda_grid", [lam])
    if not isinstance(grid, list) or not grid:
        raise ConfigurationError("'lambda_grid' must be a nonempty list")
    lam_grid = tuple(_num({"lambda_grid": v}, "lambda_grid", None, lo=0, strict=True) for v in grid)
    if any(b <= a for a, b in zip(lam_grid, lam_grid[1:])):
        raise ConfigurationError("'lambda_grid' must be strictly increasing")
    n0 = _num(doc, "initial_vms", 100, int, lo=0)
    n_list = doc.get("n_vms_list", [n0])
    if not isinstance(n_list, list) or not n_list:
        raise UsageError("the list of VM counts to solve is empty")
    n_list = tuple(_num({"n": v}, "n", None, int, lo=1) for v in n_list)
    n_max = _num(doc, "n_vms_max", max(n0, 1), int, lo=1)
    if not isinstance(doc.get("pricing", {}), dict):
        raise ConfigurationError("'pricing' must be an object")
    pricing = PricingParams.from_dict(doc.get("pricing", {}))
    events = []
    for i, ev in enumerate(doc.get("capacity_events", [])):
        if not (isinstance(ev, (list, tuple)) and len(ev) == 2):
            raise ConfigurationError(f"capacity_events[{i}] must be [time, delta]")
        events.append(CapacityEvent(float(ev[0]), _num({"d": ev[1]}, "d", None, int)))
    seed = _num(doc, "seed", 0, int, lo=0)
    if seed >= 2**64:
        raise ConfigurationError("'seed' must fit in 64 bits")
    runs = _num(doc, "runs", 0, int, lo=0)
    sol = doc.get("solver", {})
    if not isinstance(sol, dict):
        raise ConfigurationError("'solver' must be an object")
    solver = SolverConfig(
        grid=TimeGrid(0.0, horizon, _num(sol, "n_steps", 1024, int, lo=2)),
        tolerance=_num(sol, "tolerance", 1e-8, lo=0, strict=True),
        max_iterations=_num(sol, "max_iterations", 500, int, lo=1),
        damping=_num(sol, "damping", 1.0, lo=0, strict=True),
        n_operational=_num(sol, "n_operational", 2048, int, lo=16),
    )
    cfg = RunConfig(dist, horizon, lam, lam_grid, n0, n_list, n_max, pricing, tuple(events),
                    seed, runs, bool(doc.get("adaptive", True)),
                    bool(doc.get("switch_on_allocation", True)), solver, doc.get("table"),
                    bool(doc.get("inline_table", False)), doc.get("out"),
                    bool(args.deterministic), doc.get("verify", {}))
    cfg.scenario()  # validates events against the horizon
    return cfg


def _emit(text, path):
    if path:
        d = os.path.dirname(os.path.abspath(path))
        os.makedirs(d, exist_ok=True)
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _stamp(cfg):
    if cfg.deterministic:
        return ""
    return f"# generated {datetime.now(timezone.utc).isoformat(timespec='seconds')}\n"


def _solve(cfg, lam, n):
    with warnings.catch_warnings():
        warnings.simplefilter("error", ConvergenceWarning)
        try:
            return solve_threshold(cfg.distribution, lam, n, cfg.solver)
        except ConvergenceWarning as exc:
            raise SolverError(f"no convergence for lambda={lam}, N={n}: {exc}") from exc


def cmd_solve(cfg: RunConfig):
    curves = [_solve(cfg, cfg.lam, n) for n in cfg.n_vms_list]
    t = cfg.solver.grid.nodes
    lines = ["t," + ",".join(f"y_N{n}" for n in cfg.n_vms_list)]
    for i, ti in enumerate(t):
        lines.append(f"{ti:.6f}," + ",".join(repr(float(c.values[i])) for c in curves))
    _emit(_stamp(cfg) + "\n".join(lines) + "\n", cfg.out)
    return EXIT_OK


def _table(cfg, path=None):
    with warnings.catch_warnings():
        warnings.simplefilter("error", ConvergenceWarning)
        try:
            return build_table(cfg.distribution, cfg.lambda_grid, cfg.n_vms_max, cfg.solver,
                               stamp=not cfg.deterministic)
        except ConvergenceWarning as exc:
            raise SolverError(str(exc)) from exc


def cmd_table(cfg: RunConfig):
    path = cfg.out or cfg.table
    if not path:
        raise UsageError("table needs --out PATH (or 'table' in the config)")
    save_table(_table(cfg), path)
    print(f"wrote {path}")
    return EXIT_OK


def _need_table(cfg):
    if cfg.table and os.path.exists(cfg.table):
        table = load_table(cfg.table)
        if abs(table.horizon - cfg.horizon) > 1e-12:
            raise ConfigurationError("table horizon does not match the config")
        return table
    if cfg.inline_table:
        return _table(cfg)
    where = cfg.table or "<none given>"
    raise UsageError(f"policy table not found at {where}; build one with "
                     f"`vmalloc table --config ... --out TABLE` or set inline_table")


def cmd_simulate(cfg: RunConfig):
    table = _need_table(cfg)
    res = run(cfg.scenario(), table)
    _emit(_stamp(cfg) + res.to_csv(), cfg.out)
    return EXIT_OK


def cmd_revenue(cfg: RunConfig):
    table = _need_table(cfg)
    curve = table.curve(cfg.lam, cfg.initial_vms)
    n = cfg.initial_vms
    report = {
        "lambda": cfg.lam,
        "table_lambda": table.lambda_grid[table.lambda_index(cfg.lam)],
        "n_vms": n,
        "kappa_T": cfg.pricing.kappa_T,
        "expected_revenue": expected_revenue(RevenueQuery(curve, cfg.distribution, cfg.pricing, cfg.lam, 0.0, n)),
    }
    if cfg.runs >= 2:
        sc = replace(cfg.scenario(), switch_on_allocation=False, capacity_events=())
        mc = monte_carlo(sc, table, cfg.runs)
        report["monte_carlo"] = {"runs": cfg.runs, "mean": mc.mean + cfg.pricing.kappa_T,
                                 "std_error": mc.std_error, "mean_allocations": mc.mean_allocations}
    _emit(json.dumps(report, indent=2) + "\n", cfg.out)
    return EXIT_OK


def cmd_verify(cfg: RunConfig):
    v = cfg.verify
    vc = VerifyConfig(alpha=cfg.distribution.to_dict().get("alpha", 1.0), lam=cfg.lam,
                      horizon=cfg.horizon, n_vms=cfg.n_vms_max, n_steps=cfg.solver.grid.n_steps,
                      dp_steps=int(v.get("dp_steps", 48000)),
                      dp_counts=tuple(v.get("dp_counts", (1, 10, 100))),
                      mc_runs=max(cfg.runs, 2) if cfg.runs else int(v.get("mc_runs", 2000)),
                      seed=cfg.seed)
    results = run_checks(vc)
    text = "\n".join(r.line() for r in results) + "\n"
    _emit(text, cfg.out)
    if cfg.out:
        sys.stdout.write(text)
    return EXIT_OK if all(r.passed for r in results) else EXIT_VERIFY


COMMANDS = {"solve": cmd_solve, "table": cmd_table, "simulate": cmd_simulate,
            "revenue": cmd_revenue, "verify": cmd_verify}


HELP = {
    "solve": "write threshold curves for the requested VM counts as CSV",
    "table": "precompute and save a policy lookup table",
    "simulate": "run one seeded simulation and write its event trace as CSV",
    "revenue": "report expected revenue, optionally with a Monte Carlo estimate",
    "verify": "run the oracle checks; exit 3 if any fails",
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser():
    p = _Parser(prog="vmalloc", description="Dynamic VM qualification thresholds and pricing.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name, fn in COMMANDS.items():
        s = sub.add_parser(name, help=HELP[name])
        s.add_argument("--config", help="JSON config file")
        s.add_argument("--out", help="output path (stdout if omitted)")
        s.add_argument("--seed", type=int)
        s.add_argument("--runs", type=int)
        s.add_argument("--deterministic", action="store_true", help="omit timestamps")
        s.add_argument("--lambda", dest="lam", type=float)
        s.add_argument("--vms", type=int)
        s.add_argument("--alpha", type=float)
        s.add_argument("--horizon", type=float)
        s.add_argument("--table", help="policy table file")
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        doc = {}
        if args.config:
            with open(args.config, encoding="utf-8") as fh:
                doc = json.load(fh)
            if not isinstance(doc, dict):
                raise ConfigurationError("config must be a JSON object")
        cfg = parse_config(doc, args)
        return COMMANDS[args.command](cfg)
    except (UsageError, ConfigurationError, DomainError, TableFormatError,
            TableValidationError, OSError, json.JSONDecodeError) as exc:
        print(f"vmalloc {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (SolverError, FloatingPointError) as exc:
        print(f"vmalloc {args.command}: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
