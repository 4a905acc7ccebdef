"""One day with capacity shocks.

The pool starts with 100 VMs. It loses 15 at hour 2, gains 10 at hour 4,
loses 5 at hour 6 and gains 5 at hour 8. The adaptive policy re-reads its
lookup table after every change, so the posted price jumps up when capacity
is lost and down when it returns.

    python3 demos/capacity_shocks.py [--seed 7] [--trace trace.csv]
"""
import argparse
import json
import os

from vmalloc import CapacityEvent, Exponential, PricingParams, Scenario, build_table, run
from vmalloc.solver import SolverConfig, TimeGrid

here = os.path.dirname(os.path.abspath(__file__))
parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
parser.add_argument("--seed", type=int, default=7)
parser.add_argument("--trace", help="write the event trace CSV here")
args = parser.parse_args()

with open(os.path.join(here, "reference_scenario.json")) as fh:
    cfg = json.load(fh)

d = Exponential(cfg["distribution"]["alpha"])
horizon = cfg["horizon_hours"]
print("building the lookup table (100 curves)...")
table = build_table(d, [cfg["lambda"]], cfg["n_vms_max"], SolverConfig(grid=TimeGrid(0.0, horizon, 1024)))

events = tuple(CapacityEvent(t, n) for t, n in cfg["capacity_events"])
sc = Scenario(horizon, cfg["initial_vms"], cfg["lambda"], d, PricingParams(), events, args.seed)
res = run(sc, table)

print(f"\n{res.n_arrivals} requests, {res.n_allocated} served, revenue {res.final_revenue:.2f}")
print("\n  time  change  threshold before -> after")
for (t, before, after), ev in zip(res.threshold_jumps, events):
    arrow = "up" if after > before else "down"
    print(f"  {t:4.1f}   {ev.delta:+4d}   {before:7.4f} -> {after:7.4f}  ({arrow})")

# hourly snapshot of the price a qualifying request would pay
print("\n  hour  inventory  last threshold")
hour = 0
for r in res.arrivals:
    if r.time >= hour:
        print(f"  {hour:4d}  {r.inventory_after:9d}  {r.threshold:8.4f}")
        hour += 1

if args.trace:
    with open(args.trace, "w") as fh:
        fh.write(res.to_csv())
    print("wrote", args.trace)
