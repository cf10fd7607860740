"""Lexicographic monomial basis and Kronecker reducer matrices.

The reduced power ``x^k`` lists the ``m_k = C(n+k-1, k)`` distinct degree-k
monomials of ``x`` in descending lexicographic order of their exponent tuples
(``x_1^k`` first, ``x_n^k`` last), each weighted by the square root of its
multinomial coefficient so that ``<x^k, y^k> = (x.y)^k``.

Two reducers connect this listing to Kronecker powers:

* ``L_k`` (``n^k x m_k``) with ``x^{(x)k} = L_k x^k``;
* ``K_{i,j}`` (``m_{i+j} x m_i m_j``) with ``x^i (x) x^j = K_{i,j}^T x^{i+j}``.

``K_{i,j}`` is assembled combinatorially by merging exponent tuples, so no
``n^{i+j}``-sized object is ever formed.  Every column of ``K_{i,j}`` holds a
single entry and its rows are orthonormal (``K K^T = I``).
"""
from dataclasses import dataclass
from functools import lru_cache
import math

import numpy as np
import scipy.sparse as sps

from .errors import DomainError, InputError, ResourceCapError

__all__ = [
    "MonomialBasis", "ReducerL", "ReducerK", "ReducedTensor",
    "basis", "n_monomials", "eval_xk", "build_L", "build_K", "vec", "unvec",
    "L_ENTRY_CAP", "ORDERING_TAG",
]

#: Largest ``n**k`` for which :func:`build_L` materializes ``L_k``.
L_ENTRY_CAP = 10**6

#: Version tag written into serialized coefficient dumps.
ORDERING_TAG = "lex-desc-v1"

_EXACT_WEIGHT_MAX_ORDER = 20


def n_monomials(n, k):
    """Number of degree-``k`` monomials in ``n`` variables, ``C(n+k-1, k)``."""
    if k < 0:
        return 0
    return math.comb(n + k - 1, k)


def _multinomial(exps):
    total = math.factorial(int(sum(exps)))
    for e in exps:
        total //= math.factorial(int(e))
    return total


def _log_multinomial(exps):
    exps = np.asarray(exps, dtype=float)
    return math.lgamma(exps.sum() + 1.0) - float(np.sum([math.lgamma(e + 1.0) for e in exps]))


@lru_cache(maxsize=None)
def _exponents(n, k):
    if n == 1:
        return np.array([[k]], dtype=np.int64)
    blocks = []
    for t in range(k, -1, -1):
        rest = _exponents(n - 1, k - t)
        blocks.append(np.hstack([np.full((rest.shape[0], 1), t, dtype=np.int64), rest]))
    return np.vstack(blocks)


def _readonly(a):
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class MonomialBasis:
    """Degree-``k`` lexicographic monomial listing in ``n`` variables.

    Attributes
    ----------
    n, k : int
        State dimension and degree.
    exponents : ndarray, shape (m_k, n)
        Exponent tuples, descending lexicographic with ``x_1`` most
        significant.
    coeffs : ndarray, shape (m_k,)
        Square roots of the multinomial coefficients.
    """

    n: int
    k: int
    exponents: np.ndarray
    coeffs: np.ndarray

    def __len__(self):
        return self.exponents.shape[0]

    @property
    def size(self):
        return self.exponents.shape[0]

    def index_of(self, exps):
        """Positions of exponent tuples (shape ``(..., n)``) in this basis."""
        exps = np.asarray(exps, dtype=np.int64)
        keys = self._encode(exps.reshape(-1, self.n))
        pos = np.searchsorted(self._sorted_keys, keys)
        pos = np.clip(pos, 0, len(self._sorted_keys) - 1)
        if not np.array_equal(self._sorted_keys[pos], keys):
            raise InputError(f"exponent tuple not of total degree {self.k}")
        return self._order[pos].reshape(exps.shape[:-1])

    def _encode(self, exps):
        radix = self.k + 1
        keys = np.zeros(exps.shape[0], dtype=np.int64)
        for col in range(self.n):
            keys = keys * radix + exps[:, col]
        return keys

    def __post_init__(self):
        if (self.k + 1) ** self.n >= 2**62:
            raise ResourceCapError(f"basis (n={self.n}, k={self.k}) too large to index")
        keys = self._encode(self.exponents)
        order = np.argsort(keys, kind="stable")
        object.__setattr__(self, "_order", _readonly(order))
        object.__setattr__(self, "_sorted_keys", _readonly(keys[order]))

    def labels(self, names=None):
        """Human-readable monomial labels such as ``x1^2*x3``."""
        names = names or [f"x{i + 1}" for i in range(self.n)]
        out = []
        for row in self.exponents:
            parts = []
            for name, e in zip(names, row):
                if e == 1:
                    parts.append(name)
                elif e > 1:
                    parts.append(f"{name}^{e}")
            out.append("*".join(parts) or "1")
        return out


@lru_cache(maxsize=None)
def basis(n, k):
    """Return the canonical degree-``k`` basis in ``n`` variables."""
    n, k = int(n), int(k)
    if n < 1 or k < 0:
        raise InputError(f"basis needs n >= 1 and k >= 0, got n={n}, k={k}")
    exps = _exponents(n, k).copy()
    if k <= _EXACT_WEIGHT_MAX_ORDER:
        coeffs = np.array([math.sqrt(_multinomial(e)) for e in exps])
    else:
        coeffs = np.array([math.exp(0.5 * _log_multinomial(e)) for e in exps])
    return MonomialBasis(n, k, _readonly(exps), _readonly(coeffs))


def _check_finite(x):
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)):
        raise DomainError("state contains non-finite entries")
    return x


def eval_xk(b, x):
    """Evaluate the reduced power ``x^k`` for one point or a batch.

    ``x`` of shape ``(n,)`` gives ``(m_k,)``; shape ``(N, n)`` gives
    ``(N, m_k)``.
    """
    x = _check_finite(x)
    if x.shape[-1] != b.n:
        raise InputError(f"expected {b.n}-vectors, got shape {x.shape}")
    powers = np.ones(x.shape + (b.k + 1,))
    for e in range(1, b.k + 1):
        powers[..., e] = powers[..., e - 1] * x
    # powers[..., i, e] = x_i**e
    mono = np.ones(x.shape[:-1] + (b.size,))
    for i in range(b.n):
        mono = mono * powers[..., i, :][..., b.exponents[:, i]]
    return mono * b.coeffs


@dataclass(frozen=True, eq=False)
class ReducerL:
    """``L_k`` with ``x^{(x)k} = L_k x^k`` (sparse, one nonzero per row)."""

    n: int
    k: int
    matrix: sps.csr_matrix


@dataclass(frozen=True, eq=False)
class ReducerK:
    """``K_{i,j}`` with ``x^i (x) x^j = K_{i,j}^T x^{i+j}``."""

    n: int
    i: int
    j: int
    matrix: sps.csr_matrix
    targets: np.ndarray
    weights: np.ndarray


def build_L(n, k, cap=L_ENTRY_CAP):
    """Materialize ``L_k``; refuses when ``n**k`` exceeds ``cap``."""
    rows = n**k
    if rows > cap:
        raise ResourceCapError(f"L_{k} for n={n} has {rows} rows, above the cap of {cap}")
    b = basis(n, k)
    r = np.arange(rows)
    exps = np.zeros((rows, n), dtype=np.int64)
    for pos in range(k):
        digit = (r // n ** (k - 1 - pos)) % n
        exps[r, digit] += 1
    cols = b.index_of(exps) if k else np.zeros(1, dtype=np.int64)
    vals = 1.0 / b.coeffs[cols]
    mat = sps.csr_matrix((vals, (r, cols)), shape=(rows, b.size))
    return ReducerL(n, k, mat)


@lru_cache(maxsize=None)
def build_K(n, i, j):
    """Assemble ``K_{i,j}`` by merging exponent tuples.

    Column ``a*m_j + b`` (``a`` indexing ``x^i``, ``b`` indexing ``x^j``)
    carries ``c_a c_b / c_{a+b}`` in the row of the merged monomial.
    """
    if i < 0 or j < 0 or i + j < 1:
        raise InputError(f"build_K needs i, j >= 0 and i + j >= 1, got ({i}, {j})")
    bi, bj, bs = basis(n, i), basis(n, j), basis(n, i + j)
    merged = (bi.exponents[:, None, :] + bj.exponents[None, :, :]).reshape(-1, n)
    targets = bs.index_of(merged)
    weights = np.outer(bi.coeffs, bj.coeffs).ravel() / bs.coeffs[targets]
    cols = np.arange(bi.size * bj.size)
    mat = sps.csr_matrix((weights, (targets, cols)), shape=(bs.size, bi.size * bj.size))
    return ReducerK(n, i, j, mat, _readonly(targets), _readonly(weights))


def vec(a):
    """Column-stacking vectorization."""
    a = np.asarray(a)
    if a.ndim != 2:
        raise InputError(f"vec expects a matrix, got shape {a.shape}")
    return a.reshape(-1, order="F")


def unvec(v, rows, cols):
    """Inverse of :func:`vec`."""
    v = np.asarray(v)
    if v.size != rows * cols:
        raise InputError(f"cannot reshape {v.size} entries into {rows}x{cols}")
    return v.reshape((rows, cols), order="F")


@dataclass(frozen=True, eq=False)
class ReducedTensor:
    """Matricized symmetric tensor ``P_k`` (``n x m_k``) acting on ``x^k``."""

    n: int
    k: int
    matrix: np.ndarray

    def __post_init__(self):
        mat = np.array(self.matrix, dtype=float)
        expected = (self.n, n_monomials(self.n, self.k))
        if mat.shape != expected:
            raise InputError(f"order-{self.k} tensor must be {expected}, got {mat.shape}")
        object.__setattr__(self, "matrix", _readonly(mat))

    @property
    def symmetry_defect(self):
        """Relative distance of ``vec(P_k)`` from ``range(K_k^T)``."""
        v = vec(self.matrix)
        scale = np.linalg.norm(v)
        if scale == 0.0:
            return 0.0
        K = build_K(self.n, self.k, 1).matrix
        return float(np.linalg.norm(v - K.T @ (K @ v)) / scale)

    @property
    def symmetric_flag(self):
        return self.symmetry_defect <= 1e-9

    def symmetrized(self):
        """Orthogonal projection onto the symmetric subspace."""
        K = build_K(self.n, self.k, 1).matrix
        v = K.T @ (K @ vec(self.matrix))
        return ReducedTensor(self.n, self.k, unvec(v, self.n, self.matrix.shape[1]))

    def apply(self, x):
        """``P_k x^k`` for a point or a batch of points."""
        return eval_xk(basis(self.n, self.k), x) @ self.matrix.T

    @classmethod
    def from_p(cls, n, k, p):
        """Build ``P_k`` from ``p_k`` via ``vec(P_k) = K_k^T p_k``."""
        K = build_K(n, k, 1).matrix
        return cls(n, k, unvec(K.T @ np.asarray(p, dtype=float), n, n_monomials(n, k)))
