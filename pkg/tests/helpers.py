import numpy as np

from nlreg.monomial import basis
from nlreg.series import matrix_series_dot


def control_polynomial(sol, system, order):
    """Plain-monomial coefficients of ``-g(x)^T V_x(x)`` (single input, R1 = 1)."""
    v = matrix_series_dot(system.g, sol.gradient_series(order), order=order)
    table = {}
    for k in range(1, order + 1):
        b = basis(system.n, k)
        for exps, w, c in zip(b.exponents, b.coeffs, v[k][0]):
            table[tuple(int(e) for e in exps)] = -float(c * w)
    return table
