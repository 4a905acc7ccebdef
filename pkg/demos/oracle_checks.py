"""Three independent looks at the same thresholds.

1. With a single VM the curve has a closed form, exp(y) = e + lambda (T - t).
2. A backward-induction dynamic program over (units left, time step) should
   land close to the solver's curve away from the final half hour.
3. Scaling the open-loop optimal curve up or down should only lose revenue.

    python3 demos/oracle_checks.py
"""
import numpy as np

from vmalloc import (DpConfig, Exponential, dp_threshold, perturbation_check, solve_plan,
                     solve_threshold)
from vmalloc.oracle import dp_distance

d, lam, horizon = Exponential(1.0), 100.0, 12.0

one = solve_threshold(d, lam, 1)
exact = np.log(np.e + lam * (horizon - one.t))
print(f"single VM: y(0) = {one.values[0]:.6f}, closed form {exact[0]:.6f}, "
      f"max gap {np.max(np.abs(one.values - exact)):.2e}")

dp = dp_threshold(d, lam, horizon, 100, DpConfig(48_000))
for n in (1, 10, 100):
    c = solve_threshold(d, lam, n)
    print(f"N={n:3d}: solver y(0) = {c.values[0]:.4f}, DP {dp.thresholds[0, n]:.4f}, "
          f"relative sup distance {dp_distance(c, dp, n, horizon):.2%}")

for n in (1, 10, 100):
    rep = perturbation_check(solve_plan(d, lam, n).curve, d, lam, n)
    print(f"\nN={n}")
    print("\n".join(rep.lines()))
