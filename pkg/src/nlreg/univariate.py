"""Taylor coefficients of elementary functions about an arbitrary center.

Every table is produced by a recurrence (no hard-coded coefficient lists):
``taylor("tanh", c, K)`` returns ``a_0..a_K`` with
``tanh(c + t) = sum_j a_j t^j + O(t^{K+1})``.
"""
import math

import numpy as np

from .errors import DomainError, InputError

__all__ = ["taylor", "SUPPORTED", "MAX_ORDER"]

MAX_ORDER = 256


def _exp(c, K):
    out = np.empty(K + 1)
    out[0] = math.exp(c)
    for j in range(1, K + 1):
        out[j] = out[j - 1] / j
    return out


def _trig(c, K, hyperbolic, start_with_sin):
    if hyperbolic:
        f0, f1 = (math.sinh(c), math.cosh(c)) if start_with_sin else (math.cosh(c), math.sinh(c))
        cycle = [f0, f1]
    else:
        s, co = math.sin(c), math.cos(c)
        # derivatives of sin: sin, cos, -sin, -cos
        cycle = [s, co, -s, -co] if start_with_sin else [co, -s, -co, s]
    out = np.empty(K + 1)
    fact = 1.0
    for j in range(K + 1):
        if j:
            fact *= j
        out[j] = cycle[j % len(cycle)] / fact
    return out


def _tanh(c, K):
    # y' = 1 - y^2
    y = np.zeros(K + 1)
    y[0] = math.tanh(c)
    for j in range(K):
        conv = float(np.dot(y[: j + 1], y[j::-1]))
        y[j + 1] = ((1.0 if j == 0 else 0.0) - conv) / (j + 1)
    return y


def _ln(c, K):
    if c <= 0.0:
        raise DomainError(f"ln is not analytic at {c!r}")
    out = np.empty(K + 1)
    out[0] = math.log(c)
    for j in range(1, K + 1):
        out[j] = (-1.0) ** (j + 1) / (j * c**j)
    return out


def _lncosh(c, K):
    # d/dt ln cosh = tanh
    t = _tanh(c, K)
    out = np.empty(K + 1)
    out[0] = math.log(math.cosh(c))
    out[1:] = t[:K] / np.arange(1, K + 1)
    return out


def _atanh(c, K):
    if abs(c) >= 1.0:
        raise DomainError(f"atanh is not analytic at {c!r}")
    # d/dt atanh = 1/(1 - y^2) with y = c + t; expand 1/((1-c-t)(1+c+t)) by partial fractions
    j = np.arange(K)
    d = 0.5 * (1.0 / (1.0 - c) ** (j + 1) + (-1.0) ** j / (1.0 + c) ** (j + 1))
    out = np.empty(K + 1)
    out[0] = math.atanh(c)
    out[1:] = d / (j + 1)
    return out


def _atanh_integral(c, K):
    # F(y) = int_0^y atanh(s) ds; F' = atanh
    a = _atanh(c, K)
    out = np.empty(K + 1)
    out[0] = 0.5 * ((1 + c) * math.log1p(c) + (1 - c) * math.log1p(-c))
    out[1:] = a[:K] / np.arange(1, K + 1)
    return out


SUPPORTED = {
    "exp": _exp,
    "sin": lambda c, K: _trig(c, K, False, True),
    "cos": lambda c, K: _trig(c, K, False, False),
    "sinh": lambda c, K: _trig(c, K, True, True),
    "cosh": lambda c, K: _trig(c, K, True, False),
    "tanh": _tanh,
    "ln": _ln,
    "lncosh": _lncosh,
    "atanh": _atanh,
    "atanh_integral": _atanh_integral,
}


def taylor(name, center, order):
    """Taylor coefficients ``a_0..a_order`` of ``name`` about ``center``."""
    if name not in SUPPORTED:
        raise InputError(f"no Taylor recurrence for function {name!r}")
    order = int(order)
    if not 0 <= order <= MAX_ORDER:
        raise InputError(f"Taylor order must lie in [0, {MAX_ORDER}], got {order}")
    center = float(center)
    if not math.isfinite(center):
        raise DomainError("non-finite expansion center")
    return SUPPORTED[name](center, order)
