"""Growth of ||M_k^-1|| with and without the state transform (2x2 example).

    python demos/conditioning.py
"""
import numpy as np

import nlreg
from nlreg.engine import condition_and_transform
from nlreg.linalg import build_Mk, solve_are
from nlreg.model import expand_model

spec = nlreg.load_fixture("badcond2x2")
system, cost = expand_model(spec, 3)
are = solve_are(system.F1, system.G0, cost.Q1, cost.R1)
print("LQR gain:", np.round(are.gain, 3))
print("closed-loop eigenvalues:", np.round(np.linalg.eigvals(are.Fc), 4))

variants = {"none": are.Fc}
for method in ("principal", "elementwise"):
    cond = condition_and_transform(system, cost, are, sqrt_method=method)
    variants[method] = cond.are.Fc
    print(f"{method:>11} root: alpha = {cond.alpha:.4f}, T =\n{np.round(cond.T, 3)}")

print(f"\n{'k':>4}" + "".join(f"{name:>14}" for name in variants))
for k in (1, 2, 5, 10, 20, 50, 100):
    row = "".join(f"{build_Mk(fc, k).inv_norm:14.4g}" for fc in variants.values())
    print(f"{k:4d}{row}")
