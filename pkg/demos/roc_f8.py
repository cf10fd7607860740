"""Convergence-radius estimates of the F-8 value function versus order.

    python demos/roc_f8.py [--order 30]
"""
import argparse

import nlreg
from nlreg.engine import synthesize
from nlreg.roc import default_window, roc_surface

parser = argparse.ArgumentParser()
parser.add_argument("--order", type=int, default=30)
args = parser.parse_args()

sol, _ = synthesize(nlreg.load_fixture("f8"), args.order)
print(f"{'order':>5} {'window':>9} {'r*':>8} {'min dir':>8} {'max dir':>8}")
for k in range(10, sol.order + 1, 5):
    est = roc_surface(sol.P[:k], n_dirs=400, window=default_window(k))
    lo, hi = est.window
    print(f"{k:5d} {f'{lo}..{hi}':>9} {est.r_star:8.4f} {est.min_radius:8.4f} {est.radii.max():8.4f}")
