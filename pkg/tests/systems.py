"""Random control-affine polynomial models for property tests."""
import itertools

import numpy as np


def _monomial(exps):
    parts = []
    for i, e in enumerate(exps):
        if e == 1:
            parts.append(f"x{i + 1}")
        elif e > 1:
            parts.append(f"x{i + 1}^{e}")
    return "*".join(parts)


def _poly(rng, n, degrees, scale, density=0.6):
    terms = []
    for d in degrees:
        for exps in itertools.product(range(d + 1), repeat=n):
            if sum(exps) == d and rng.random() < density:
                c = round(float(rng.normal(scale=scale)), 4)
                mono = _monomial(exps)
                terms.append(f"({c!r})" + (f"*{mono}" if mono else ""))
    return " + ".join(terms) if terms else "0"


def random_polynomial_doc(rng, n, m, saturating=False):
    """Cubic drift, affine-in-state input gains, PD quadratic plus quartic state cost."""
    dynamics = []
    for i in range(n):
        drift = _poly(rng, n, [1], 1.0, density=0.8) + " + " + _poly(rng, n, [2, 3], 0.5)
        gains = []
        for j in range(m):
            g = _poly(rng, n, [0], 1.0, density=1.0) + " + " + _poly(rng, n, [1], 0.3, density=0.5)
            gains.append(f"({g})*u{j + 1}")
        dynamics.append(drift + " + " + " + ".join(gains))
    weights = rng.uniform(0.5, 2.0, n)
    Q = " + ".join(f"{w:.4f}*x{i + 1}^2" for i, w in enumerate(weights))
    Q += " + " + _poly(rng, n, [4], 0.1, density=0.5)
    if saturating:
        penalty = {"kind": "tanh", "per_channel": rng.uniform(0.5, 3.0, m).round(3).tolist()}
    else:
        a = rng.normal(size=(m, m))
        penalty = {"kind": "quadratic", "R1": (a @ a.T + m * np.eye(m)).round(4).tolist()}
    return {"n": n, "m": m, "dynamics": dynamics, "Q": Q, "penalty": penalty}
