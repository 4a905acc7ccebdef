"""Acceptance criteria at the reference setting.

T = 12 h, N0 = 100, lambda = 100 per hour, alpha = 1, q = 1. Each test
records a one-line verdict, and the lines are printed in the terminal summary.
"""
import math
import subprocess
import sys
import time

import numpy as np
import pytest

from _oracles import j_direct, single_unit_threshold
from conftest import ACCEPTANCE_LINES, HORIZON, LAM, N0
from vmalloc import (DpConfig, PricingParams, RevenueQuery, Scenario, SolverConfig, TimeGrid,
                     dp_threshold, expected_revenue, j_factor, monte_carlo, perturbation_check,
                     run, save_table, solve_plan, solve_threshold)
from vmalloc.oracle import dp_distance

EVENTS = ((2.0, -15), (4.0, 10), (6.0, -5), (8.0, 5))
Z_99 = 2.3263478740408408  # one-sided 99% normal quantile


def verdict(number, ok, detail):
    line = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


def test_c01_single_unit_closed_form(expo, ref_cfg):
    start = time.perf_counter()
    c = solve_threshold(expo, LAM, 1, ref_cfg)
    took = time.perf_counter() - start
    err = float(np.max(np.abs(c.values - single_unit_threshold(c.t, LAM, HORIZON))))
    ok = c.values.size == 1025 and err <= 1e-3 and took < 5
    assert verdict(1, ok, f"sup error {err:.2e} (<= 1e-3), {took:.2f}s (< 5s)")


def test_c02_boundary_condition(ref_family):
    fam, _ = ref_family
    gap = max(abs(c.values[-1] - 1.0) for c in fam)
    assert verdict(2, len(fam) == 100 and gap <= 1e-6, f"max |y_N(T) - 1| over N=1..100 = {gap:.2e} (<= 1e-6)")


def test_c03_ordering_in_n(ref_family):
    fam, took = ref_family
    vals = np.array([c.values for c in fam])
    rise = float(np.max(vals[1:] - vals[:-1]))
    ok = rise <= 1e-6 and all(c.converged for c in fam) and took < 300
    assert verdict(3, ok, f"max y_(N+1) - y_N = {rise:.2e} (<= 1e-6), family solve {took:.1f}s (< 300s)")


def test_c04_j_factor():
    worst = 0.0
    for n in range(1, 7):
        for h in (0.0, 0.1, 1.0, 2.0, 10.0):
            want, got = j_direct(h, n), j_factor(h, n)
            worst = max(worst, abs(got - want) / abs(want) if want else abs(got))
    hs = np.linspace(0.0, 200.0, 50)
    table = np.array([j_factor(hs, n) for n in range(1, 52)])
    rise = float(np.max(table[1:] - table[:-1]))
    ok = worst <= 1e-10 and rise <= 0.0
    assert verdict(4, ok, f"max rel diff vs direct sum {worst:.1e} (<= 1e-10), max J_(N+1) - J_N = {rise:.1e} (<= 0)")


def test_c05_large_n_limit(expo, ref_family, ref_cfg):
    fam, _ = ref_family
    curves = {25: fam[24], 50: fam[49], 100: fam[99], 200: solve_threshold(expo, LAM, 200, ref_cfg)}
    gaps = [float(np.max(np.abs(curves[n].values - 1.0))) for n in (25, 50, 100, 200)]
    ok = all(b < a for a, b in zip(gaps, gaps[1:]))
    assert verdict(5, ok, "max |y_N - 1| for N=25,50,100,200: " + ", ".join(f"{g:.4f}" for g in gaps))


def test_c06_dp_cross_oracle(expo, ref_family):
    fam, _ = ref_family
    start = time.perf_counter()
    dp = dp_threshold(expo, LAM, HORIZON, 100, DpConfig(48_000))
    dists = {k: dp_distance(fam[k - 1], dp, k, HORIZON) for k in (1, 10, 100)}
    took = time.perf_counter() - start
    # pointwise relative gap, reported only
    t = fam[0].t
    keep = t <= HORIZON - 0.5
    point = {k: float(np.max(np.abs(np.interp(t[keep], dp.grid.nodes, dp.thresholds[:, k])
                                    - fam[k - 1].values[keep]) / fam[k - 1].values[keep]))
             for k in (1, 10, 100)}
    ok = max(dists.values()) <= 0.05 and took < 180
    detail = ", ".join(f"N={k}: {v:.2%}" for k, v in dists.items())
    detail += " (<= 5%); pointwise " + ", ".join(f"{v:.2%}" for v in point.values())
    assert verdict(6, ok, f"sup distance / sup norm on t <= 11.5: {detail}; {took:.1f}s (< 180s)")


def test_c07_perturbation(expo, ref_cfg):
    parts, ok = [], True
    for n in (1, 10, 100):
        plan = solve_plan(expo, LAM, n, ref_cfg)
        rep = perturbation_check(plan.curve, expo, LAM, n, PricingParams(), (0.8, 0.9, 1.1, 1.2))
        ok &= rep.passed
        parts.append(f"N={n}: min margin {min(rep.margins):.4g}")
    assert verdict(7, ok, "base minus scaled revenue, scales 0.8/0.9/1.1/1.2: " + ", ".join(parts))


def test_c08_monte_carlo_vs_quadrature(expo, ref_table):
    start = time.perf_counter()
    sc = Scenario(HORIZON, N0, LAM, expo, seed=20240, adaptive=True, switch_on_allocation=False)
    mc = monte_carlo(sc, ref_table, 10_000)
    took = time.perf_counter() - start
    want = expected_revenue(RevenueQuery(ref_table.curve(LAM, N0), expo, PricingParams(), LAM))
    z = (mc.mean - want) / mc.std_error
    ok = abs(z) <= 3 and took < 120
    assert verdict(8, ok, f"MC {mc.mean:.4f} +/- {mc.std_error:.4f} vs quadrature {want:.4f}, "
                          f"z = {z:+.2f} (|z| <= 3), {took:.1f}s (< 120s)")


def test_c09_threshold_jumps(expo, ref_table):
    want = {2.0: 1, 4.0: -1, 6.0: 1, 8.0: -1}
    bad = 0
    runs = 200
    smallest = math.inf
    for seed in range(runs):
        res = run(Scenario(HORIZON, N0, LAM, expo, capacity_events=EVENTS, seed=seed), ref_table)
        for t, before, after in res.threshold_jumps:
            step = (after - before) * want[t]
            smallest = min(smallest, step)
            bad += not step > 0
    assert verdict(9, bad == 0, f"{runs} runs, {bad} jumps with the wrong sign, "
                                f"smallest signed jump {smallest:.4f}")


def test_c10_adaptive_beats_frozen(expo, ref_table):
    base = dict(horizon=HORIZON, initial_vms=N0, lam=LAM, distribution=expo,
                capacity_events=EVENTS, seed=777)
    ada = monte_carlo(Scenario(**base, adaptive=True), ref_table, 10_000)
    frz = monte_carlo(Scenario(**base, adaptive=False), ref_table, 10_000)
    diff = ada.revenues - frz.revenues
    z = diff.mean() / (diff.std(ddof=1) / math.sqrt(diff.size))
    ok = ada.mean >= frz.mean and z > Z_99
    assert verdict(10, ok, f"adaptive {ada.mean:.3f} vs frozen {frz.mean:.3f}, "
                           f"paired z = {z:.1f} (> {Z_99:.3f})")


def test_c11_cli_determinism(ref_table, tmp_path):
    table = tmp_path / "table.json"
    save_table(ref_table, table)
    outs = []
    for name in ("a.csv", "b.csv"):
        out = tmp_path / name
        cmd = [sys.executable, "-m", "vmalloc", "simulate", "--table", str(table), "--lambda", "100",
               "--vms", "100", "--horizon", "12", "--seed", "4242", "--deterministic", "--out", str(out)]
        subprocess.run(cmd, check=True)
        outs.append(out.read_bytes())
    ok = outs[0] == outs[1] and len(outs[0]) > 1000
    assert verdict(11, ok, f"two invocations, {len(outs[0])} bytes each, identical={outs[0] == outs[1]}")
