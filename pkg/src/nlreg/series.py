"""Vector-valued multivariate truncated Taylor series.

A :class:`PowerSeries` stores ``s(x) = sum_{k=0}^{order} S_k x^k`` where
``S_k`` is a ``p x m_k`` matrix over the reduced basis of
:mod:`nlreg.monomial`.  Products are formed coefficient-by-coefficient with

    [s^T l]_k = sum_j K_{k-j,j} vec(S_j^T L_{k-j})

and truncated eagerly after every product.
"""
from dataclasses import dataclass

import numpy as np

from .errors import ContractError, DomainError, InputError
from .monomial import basis, build_K, eval_xk, n_monomials
from .univariate import taylor

__all__ = [
    "PowerSeries", "series_add", "series_scale", "series_dot", "dot_coefficient",
    "matrix_series_dot", "product", "power", "compose_univariate",
    "multi_psi_expand", "compose_function",
]


def _freeze(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class PowerSeries:
    """Truncated series ``sum_k S_k x^k`` with ``S_k`` of shape ``(p, m_k)``."""

    n: int
    p: int
    coeffs: tuple

    def __post_init__(self):
        frozen = []
        for k, c in enumerate(self.coeffs):
            c = np.asarray(c, dtype=float)
            if c.ndim == 1 and k == 0:
                c = c.reshape(-1, 1)
            shape = (self.p, n_monomials(self.n, k))
            if c.shape != shape:
                raise InputError(f"coefficient {k} must be {shape}, got {c.shape}")
            if not np.all(np.isfinite(c)):
                raise DomainError(f"coefficient {k} has non-finite entries")
            frozen.append(_freeze(c))
        if not frozen:
            raise InputError("a series needs at least the constant coefficient")
        object.__setattr__(self, "coeffs", tuple(frozen))
        object.__setattr__(self, "_nonzero", tuple(bool(c.any()) for c in frozen))

    # -- constructors -------------------------------------------------

    @classmethod
    def zeros(cls, n, p, order):
        return cls(n, p, tuple(np.zeros((p, n_monomials(n, k))) for k in range(order + 1)))

    @classmethod
    def constant(cls, n, value, order):
        value = np.atleast_1d(np.asarray(value, dtype=float))
        s = cls.zeros(n, value.size, order)
        return s.replace(0, value.reshape(-1, 1))

    @classmethod
    def linear(cls, matrix, order):
        """Series of ``x -> A x`` (``A`` is ``p x n``)."""
        matrix = np.atleast_2d(np.asarray(matrix, dtype=float))
        p, n = matrix.shape
        s = cls.zeros(n, p, max(order, 1))
        return s.replace(1, matrix).truncate(order)

    @classmethod
    def identity(cls, n, order):
        return cls.linear(np.eye(n), order)

    @classmethod
    def stack(cls, parts):
        """Stack scalar (or vector) series row-wise into one vector series."""
        parts = list(parts)
        order = min(s.order for s in parts)
        n = parts[0].n
        if any(s.n != n for s in parts):
            raise InputError("cannot stack series with different state dimensions")
        coeffs = [np.vstack([s.coeffs[k] for s in parts]) for k in range(order + 1)]
        return cls(n, sum(s.p for s in parts), tuple(coeffs))

    # -- accessors ----------------------------------------------------

    @property
    def order(self):
        return len(self.coeffs) - 1

    def __getitem__(self, k):
        if 0 <= k <= self.order:
            return self.coeffs[k]
        return np.zeros((self.p, n_monomials(self.n, k)))

    def is_zero_at(self, k):
        return not (0 <= k <= self.order and self._nonzero[k])

    def replace(self, k, value):
        coeffs = list(self.coeffs)
        coeffs[k] = value
        return PowerSeries(self.n, self.p, tuple(coeffs))

    def component(self, i):
        return PowerSeries(self.n, 1, tuple(c[i : i + 1] for c in self.coeffs))

    def truncate(self, order):
        if order > self.order:
            return self.pad(order)
        return PowerSeries(self.n, self.p, self.coeffs[: order + 1])

    def pad(self, order):
        extra = tuple(np.zeros((self.p, n_monomials(self.n, k))) for k in range(self.order + 1, order + 1))
        return PowerSeries(self.n, self.p, self.coeffs + extra)

    def left_multiply(self, matrix):
        """Series of ``x -> A s(x)``."""
        matrix = np.atleast_2d(np.asarray(matrix, dtype=float))
        if matrix.shape[1] != self.p:
            raise InputError(f"cannot apply a {matrix.shape} matrix to a {self.p}-vector series")
        return PowerSeries(self.n, matrix.shape[0], tuple(matrix @ c for c in self.coeffs))

    def coefficient_norms(self):
        """Largest absolute coefficient per order."""
        return np.array([np.abs(c).max(initial=0.0) for c in self.coeffs])

    def __call__(self, x):
        """Evaluate at one point ``(n,)`` or a batch ``(N, n)``."""
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.n:
            raise InputError(f"expected {self.n}-vectors, got shape {x.shape}")
        out = np.zeros(x.shape[:-1] + (self.p,))
        for k, c in enumerate(self.coeffs):
            if self._nonzero[k]:
                out = out + eval_xk(basis(self.n, k), x) @ c.T
        return out

    # -- arithmetic ---------------------------------------------------

    def __add__(self, other):
        return series_add(self, other)

    def __sub__(self, other):
        return series_add(self, series_scale(other, -1.0))

    def __neg__(self):
        return series_scale(self, -1.0)

    def __mul__(self, scalar):
        return series_scale(self, scalar)

    __rmul__ = __mul__


def _check_same_space(a, b):
    if a.n != b.n or a.p != b.p:
        raise InputError(f"series dimension mismatch: (n={a.n}, p={a.p}) vs (n={b.n}, p={b.p})")


def series_add(a, b, order=None):
    """Coefficient-wise sum, truncated to the lower order unless ``order`` pads."""
    _check_same_space(a, b)
    if order is None:
        order = min(a.order, b.order)
    return PowerSeries(a.n, a.p, tuple(a[k] + b[k] for k in range(order + 1)))


def series_scale(a, scalar):
    scalar = float(scalar)
    return PowerSeries(a.n, a.p, tuple(scalar * c for c in a.coeffs))


def dot_coefficient(s, l, k):
    """Order-``k`` coefficient (shape ``(1, m_k)``) of ``s(x)^T l(x)``."""
    _check_same_space(s, l)
    n = s.n
    out = np.zeros(n_monomials(n, k))
    for j in range(k + 1):
        i = k - j
        if s.is_zero_at(j) or l.is_zero_at(i):
            continue
        block = s.coeffs[j].T @ l.coeffs[i]  # m_j x m_i
        if k == 0:
            out += block.ravel()
            continue
        red = build_K(n, i, j)
        out += np.bincount(red.targets, weights=red.weights * block.ravel(order="F"),
                           minlength=out.size)
    return out.reshape(1, -1)


def series_dot(s, l, order=None):
    """Scalar series ``s^T l``; symmetric and bilinear in its arguments."""
    _check_same_space(s, l)
    if order is None:
        order = min(s.order, l.order)
    return PowerSeries(s.n, 1, tuple(dot_coefficient(s, l, k) for k in range(order + 1)))


def product(a, b, order=None):
    """Product of two scalar series."""
    if a.p != 1 or b.p != 1:
        raise InputError("product expects scalar series; use series_dot for vectors")
    return series_dot(a, b, order)


def matrix_series_dot(g, s, order=None):
    """``g(x)^T s(x)`` where ``g`` is a list of column series ``g_1..g_m``."""
    g = list(g)
    if not g:
        raise InputError("matrix_series_dot needs at least one column")
    return PowerSeries.stack(series_dot(gi, s, order) for gi in g)


def power(a, e, order=None):
    """``a(x)**e`` for a scalar series and integer ``e >= 0``."""
    if order is None:
        order = a.order
    result = PowerSeries.constant(a.n, 1.0, order)
    base = a.truncate(order)
    e = int(e)
    if e < 0:
        raise InputError("negative powers are not supported")
    while e:
        if e & 1:
            result = product(result, base, order)
        e >>= 1
        if e:
            base = product(base, base, order)
    return result


def compose_univariate(outer, inner, order=None):
    """``sum_j a_j inner(x)^j`` for an inner scalar series with zero constant.

    ``outer`` holds ``a_0, a_1, ...``; coefficients beyond ``order`` cannot
    contribute and are ignored.
    """
    if inner.p != 1:
        raise InputError("compose_univariate expects a scalar inner series")
    if inner[0][0, 0] != 0.0:
        raise ContractError("inner series must have a zero constant term")
    if order is None:
        order = inner.order
    outer = np.asarray(outer, dtype=float)
    top = min(len(outer) - 1, order)
    w = inner.truncate(order)
    result = PowerSeries.constant(inner.n, outer[top], order)
    for j in range(top - 1, -1, -1):
        result = product(result, w, order)
        result = result.replace(0, result[0] + outer[j])
    return result


def compose_function(name, inner, order=None):
    """``name(inner(x))`` expanded about ``inner(0)``."""
    if order is None:
        order = inner.order
    c0 = float(inner[0][0, 0])
    w = inner.replace(0, np.zeros((1, 1)))
    return compose_univariate(taylor(name, c0, order), w, order)


def multi_psi_expand(psi, v, order=None):
    """``sum_i psi_i(v_i(x))`` for a separable penalty integral.

    ``psi`` is either one coefficient array shared by all channels or a list
    with one array per channel.
    """
    if order is None:
        order = v.order
    coeff_list = psi if isinstance(psi, (list, tuple)) else [psi] * v.p
    if len(coeff_list) != v.p:
        raise InputError(f"{len(coeff_list)} channel expansions for a {v.p}-channel series")
    total = PowerSeries.zeros(v.n, 1, order)
    for i, a in enumerate(coeff_list):
        vi = v.component(i)
        if vi[0][0, 0] != 0.0:
            raise ContractError("penalty argument must vanish at the origin")
        total = series_add(total, compose_univariate(a, vi, order), order)
    return total

