import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nlreg.errors import DomainError, InputError
from nlreg.univariate import SUPPORTED, taylor

FUNCS = {"exp": math.exp, "sin": math.sin, "cos": math.cos, "sinh": math.sinh, "cosh": math.cosh,
         "tanh": math.tanh, "ln": math.log, "lncosh": lambda t: math.log(math.cosh(t)),
         "atanh": math.atanh,
         "atanh_integral": lambda y: 0.5 * ((1 + y) * math.log1p(y) + (1 - y) * math.log1p(-y))}


@pytest.mark.parametrize("name", sorted(FUNCS))
@pytest.mark.parametrize("center", [0.0, 0.35])
def test_series_reproduces_function(name, center):
    coeffs = taylor(name, center + (1.0 if name == "ln" else 0.0), 30)
    c = center + (1.0 if name == "ln" else 0.0)
    for t in (-0.1, 0.05, 0.12):
        approx = np.polyval(coeffs[::-1], t)
        assert approx == pytest.approx(FUNCS[name](c + t), abs=1e-12)


def test_known_coefficients():
    np.testing.assert_allclose(taylor("sin", 0.0, 5), [0, 1, 0, -1 / 6, 0, 1 / 120])
    np.testing.assert_allclose(taylor("tanh", 0.0, 5), [0, 1, 0, -1 / 3, 0, 2 / 15])
    np.testing.assert_allclose(taylor("lncosh", 0.0, 6), [0, 0, 0.5, 0, -1 / 12, 0, 1 / 45])


def test_domain_errors():
    with pytest.raises(DomainError):
        taylor("ln", 0.0, 3)
    with pytest.raises(DomainError):
        taylor("atanh", 1.0, 3)
    with pytest.raises(DomainError):
        taylor("exp", math.inf, 3)
    with pytest.raises(InputError):
        taylor("erf", 0.0, 3)
    with pytest.raises(InputError):
        taylor("exp", 0.0, -1)


def test_supported_set():
    assert set(FUNCS) == set(SUPPORTED)


@settings(max_examples=30, deadline=None)
@given(c=st.floats(-2, 2), t=st.floats(-0.05, 0.05))
def test_tanh_recurrence_property(c, t):
    coeffs = taylor("tanh", c, 25)
    assert np.polyval(coeffs[::-1], t) == pytest.approx(math.tanh(c + t), abs=1e-12)
