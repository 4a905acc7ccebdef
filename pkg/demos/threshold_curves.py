"""Threshold curves for a quiet and a busy service.

Solves y_N(t) for N in {25, 50, 75, 100} at 10 and 100 requests per hour
over a 12 hour horizon and prints them at a few times. With few requests the
curves fall early, because units left unsold at the end earn nothing.

    python3 demos/threshold_curves.py [--out curves.csv]
"""
import argparse

import numpy as np

from vmalloc import Exponential, solve_threshold

parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
parser.add_argument("--out", help="write every curve to this CSV")
args = parser.parse_args()

d = Exponential(1.0)
counts = (25, 50, 75, 100)
times = np.array([0.0, 2.0, 4.0, 6.0, 8.0, 10.0, 11.0, 11.5, 12.0])
columns = {}

for lam in (10.0, 100.0):
    print(f"\nlambda = {lam:g} per hour")
    print("    t  " + "".join(f"  N={n:<5d}" for n in counts))
    curves = [solve_threshold(d, lam, n) for n in counts]
    for t in times:
        print(f"{t:5.1f}  " + "".join(f"  {float(c(t)):7.4f}" for c in curves))
    for n, c in zip(counts, curves):
        columns[f"lam{lam:g}_N{n}"] = c.values

# fewer units means a pickier threshold at every instant
print("\nordering holds:", all(np.all(b.values <= a.values + 1e-9) for a, b in zip(curves, curves[1:])))

if args.out:
    t = curves[0].t
    header = "t," + ",".join(columns)
    np.savetxt(args.out, np.column_stack([t] + list(columns.values())), delimiter=",",
               header=header, comments="", fmt="%.10g")
    print("wrote", args.out)
