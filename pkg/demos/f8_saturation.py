"""F-8 pitch regulator from a 30 degree angle of attack, with and without a
tanh-saturated input (|u| < 0.2).

    python demos/f8_saturation.py
"""
import numpy as np

import nlreg
from nlreg.engine import synthesize
from nlreg.runtime import compare_orders

x0 = np.array([0.5236, 0.0, 0.0])
for name in ("f8", "f8_constrained"):
    spec = nlreg.load_fixture(name)
    sol, _ = synthesize(spec, 10)
    print(f"\n{name} ({sol.penalty.kind} penalty), x0 = {x0.tolist()}")
    print(f"{'k':>3} {'status':<10} {'cost':>12} {'max|u|':>10}")
    for r in compare_orders(spec, sol, x0, range(1, 11)):
        print(f"{r['order']:3d} {r['status']:<10} {r['total_cost']:12.6g} {r['max_abs_u']:10.4g}")
