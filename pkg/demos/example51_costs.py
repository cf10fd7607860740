"""Cost of the order-k regulator on the three-state example, k = 1..10.

    python demos/example51_costs.py [--x0 -2,-1.5,0]
"""
import argparse

import numpy as np

import nlreg
from nlreg.engine import synthesize
from nlreg.runtime import compare_orders

parser = argparse.ArgumentParser()
parser.add_argument("--x0", default="-2,-1.5,0")
parser.add_argument("--order", type=int, default=10)
args = parser.parse_args()
x0 = np.array([float(v) for v in args.x0.split(",")])

spec = nlreg.load_fixture("example51")
sol, cond = synthesize(spec, args.order)
print(f"solved to order {sol.order}, alpha = {sol.alpha:.4f}, transformed = {sol.transformed}")

rows = compare_orders(spec, sol, x0, range(1, sol.order + 1))
print(f"{'k':>3} {'status':<10} {'cost':>12} {'V_k(x0)':>12} {'max|u|':>10}")
for r in rows:
    print(f"{r['order']:3d} {r['status']:<10} {r['total_cost']:12.6g} {r['value_x0']:12.6g} {r['max_abs_u']:10.4g}")
