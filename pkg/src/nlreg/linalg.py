"""Dense kernels used by the recursion.

Lyapunov equations are solved through the ``n^2 x n^2`` Kronecker system,
which is cheap at the state dimensions this package targets and needs no
Schur machinery.  The Riccati equation is solved by Newton-Kleinman
iteration on top of that Lyapunov kernel.
"""
from dataclasses import dataclass, field
import logging
import warnings

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sps

from .errors import (ConditioningError, ConvergenceError, DomainError, InputError,
                     NotHurwitzError, StabilizabilityError)
from .monomial import build_K, n_monomials

__all__ = [
    "AreResult", "MkOperator", "is_hurwitz", "is_stabilizable", "solve_lyapunov",
    "solve_are", "sqrt_spd", "build_Mk", "inverse_bound_alpha",
]

log = logging.getLogger(__name__)

EXACT_NORM_MAX_SIZE = 2000


def _square(a, name):
    a = np.atleast_2d(np.asarray(a, dtype=float))
    if a.shape[0] != a.shape[1]:
        raise InputError(f"{name} must be square, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise DomainError(f"{name} has non-finite entries")
    return a


def is_hurwitz(a, margin=0.0):
    """True when every eigenvalue of ``a`` has real part below ``-margin``."""
    return bool(np.max(np.linalg.eigvals(a).real) < -margin)


def is_stabilizable(a, b, tol=1e-9):
    """PBH test: ``rank [lambda I - A, B] = n`` at every eigenvalue with Re >= 0."""
    a = _square(a, "A")
    b = np.atleast_2d(np.asarray(b, dtype=float))
    n = a.shape[0]
    scale = max(1.0, np.linalg.norm(a), np.linalg.norm(b))
    for lam in np.linalg.eigvals(a):
        if lam.real < 0:
            continue
        pencil = np.hstack([lam * np.eye(n) - a, b])
        sv = np.linalg.svd(pencil, compute_uv=False)
        if sv[-1] <= tol * scale:
            return False
    return True


def solve_lyapunov(a, c):
    """Solve ``A^T P + P A + C = 0`` for Hurwitz ``A``.

    Returns the symmetric solution; raises :class:`NotHurwitzError` when
    ``A`` has an eigenvalue with nonnegative real part.
    """
    a = _square(a, "A")
    c = _square(c, "C")
    if a.shape != c.shape:
        raise InputError(f"A {a.shape} and C {c.shape} differ in size")
    if not is_hurwitz(a):
        raise NotHurwitzError("Lyapunov equation needs a Hurwitz matrix")
    n = a.shape[0]
    eye = np.eye(n)
    op = np.kron(eye, a.T) + np.kron(a.T, eye)
    p = np.linalg.solve(op, -c.reshape(-1, order="F")).reshape((n, n), order="F")
    if np.allclose(c, c.T, rtol=0, atol=1e-14 * (1 + np.abs(c).max())):
        p = 0.5 * (p + p.T)
    return p


@dataclass(frozen=True)
class AreResult:
    """Stabilizing Riccati solution and its closed loop."""

    P1: np.ndarray
    gain: np.ndarray
    Fc: np.ndarray
    residual: float
    iterations: int


def _are_residual(a, b, q, rinv, p):
    res = a.T @ p + p @ a + q - p @ b @ rinv @ b.T @ p
    return float(np.linalg.norm(res, "fro"))


def _seed_gain(a, b, rinv):
    """Stabilizing gain by Bass's eigenvalue-shifting construction."""
    n = a.shape[0]
    if is_hurwitz(a):
        return np.zeros((b.shape[1], n))
    shift = np.linalg.norm(a, 2) + 1.0
    m = a + shift * np.eye(n)
    brb = b @ rinv @ b.T
    for reg in (0.0, 1e-10, 1e-6, 1e-3):
        rhs = 2.0 * brb + reg * np.trace(brb) * np.eye(n)
        z = solve_lyapunov(-m.T, rhs)
        try:
            k = rinv @ b.T @ np.linalg.inv(z)
        except np.linalg.LinAlgError:
            continue
        if np.all(np.isfinite(k)) and is_hurwitz(a - b @ k):
            return k
    raise StabilizabilityError("could not construct a stabilizing seed gain")


STAGNATION_RTOL = 1e-6


def solve_are(F1, G0, Q1, R1, tol=1e-12, max_iter=100):
    """Stabilizing solution of ``F^T P + P F + Q - P G R^{-1} G^T P = 0``.

    Newton-Kleinman iteration seeded by a Bass stabilizing gain.
    """
    a = _square(F1, "F1")
    q = _square(Q1, "Q1")
    r = _square(R1, "R1")
    b = np.atleast_2d(np.asarray(G0, dtype=float))
    if b.shape[0] != a.shape[0] or b.shape[1] != r.shape[0]:
        raise InputError(f"G0 has shape {b.shape}, expected ({a.shape[0]}, {r.shape[0]})")
    if not is_stabilizable(a, b):
        raise StabilizabilityError("(F1, G0) is not stabilizable")
    rinv = np.linalg.inv(r)
    k = _seed_gain(a, b, rinv)
    p_prev = None
    last_change = np.inf
    for it in range(1, max_iter + 1):
        ak = a - b @ k
        p = solve_lyapunov(ak, q + k.T @ r @ k)
        k = rinv @ b.T @ p
        if p_prev is not None:
            change = np.linalg.norm(p - p_prev, "fro")
            scale = max(1.0, np.linalg.norm(p, "fro"))
            # quadratic convergence stalls at a roundoff floor that grows with cond(P)
            if change <= tol * scale or (change >= last_change and change <= STAGNATION_RTOL * scale):
                break
            last_change = change
        p_prev = p
    else:
        raise ConvergenceError(f"Newton-Kleinman did not converge in {max_iter} iterations")
    p = 0.5 * (p + p.T)
    fc = a - b @ rinv @ b.T @ p
    if not is_hurwitz(fc):
        raise StabilizabilityError("Riccati iteration ended on a non-stabilizing solution")
    return AreResult(P1=p, gain=rinv @ b.T @ p, Fc=fc,
                     residual=_are_residual(a, b, q, rinv, p), iterations=it)


def sqrt_spd(p, method="principal"):
    """Square root ``T`` of a symmetric positive definite matrix.

    ``method="principal"`` returns the SPD root with ``T @ T = P``.
    ``method="elementwise"`` takes entrywise square roots, which is the
    transform that reproduces published tables computed that way; the result
    must still be SPD and does not satisfy ``T @ T = P``.
    """
    p = _square(p, "P")
    if not np.allclose(p, p.T, rtol=1e-10, atol=1e-12 * (1 + np.abs(p).max())):
        raise DomainError("matrix is not symmetric")
    p = 0.5 * (p + p.T)
    w, v = np.linalg.eigh(p)
    if w.min() <= 0:
        raise DomainError(f"matrix is not positive definite (min eigenvalue {w.min():.3e})")
    if method == "principal":
        t = (v * np.sqrt(w)) @ v.T
        return 0.5 * (t + t.T)
    if method == "elementwise":
        if np.any(p < 0):
            raise DomainError("elementwise square root needs nonnegative entries")
        t = np.sqrt(p)
        if np.linalg.eigvalsh(t).min() <= 0:
            raise DomainError("elementwise square root is not positive definite")
        return t
    raise InputError(f"unknown square-root method {method!r}")


def inverse_bound_alpha(fc):
    """``2 / lambda_min(-Fc - Fc^T)``, or ``inf`` when that matrix is not PD."""
    lam = np.linalg.eigvalsh(-(fc + fc.T)).min()
    return 2.0 / lam if lam > 0 else np.inf


@dataclass(eq=False)
class MkOperator:
    """``M_k = K_k (I (x) Fc^T) K_k^T`` with a cached LU factorization."""

    k: int
    matrix: np.ndarray
    lu: tuple = field(repr=False)
    _inv_norm: float = field(default=None, repr=False)

    @property
    def size(self):
        return self.matrix.shape[0]

    def solve(self, rhs):
        rhs = np.asarray(rhs, dtype=float)
        if rhs.shape[0] != self.size:
            raise InputError(f"rhs has length {rhs.shape[0]}, expected {self.size}")
        return sla.lu_solve(self.lu, rhs)

    @property
    def inv_norm(self):
        """Spectral norm of ``M_k^{-1}``."""
        if self._inv_norm is None:
            if self.size <= EXACT_NORM_MAX_SIZE:
                smin = np.linalg.svd(self.matrix, compute_uv=False)[-1]
                self._inv_norm = np.inf if smin == 0 else 1.0 / smin
            else:
                self._inv_norm = self._power_inv_norm()
        return self._inv_norm

    def _power_inv_norm(self, iters=200, seed=0):
        rng = np.random.default_rng(seed)
        v = rng.standard_normal(self.size)
        v /= np.linalg.norm(v)
        est = 0.0
        for _ in range(iters):
            w = sla.lu_solve(self.lu, sla.lu_solve(self.lu, v), trans=1)
            new = np.sqrt(np.linalg.norm(w))
            v = w / np.linalg.norm(w)
            if abs(new - est) <= 1e-10 * new:
                est = new
                break
            est = new
        return est


def build_Mk(fc, k):
    """Assemble and factorize ``M_k`` (size ``m_{k+1}``)."""
    fc = _square(fc, "Fc")
    if k < 1:
        raise InputError("M_k is defined for k >= 1")
    n = fc.shape[0]
    K = build_K(n, k, 1).matrix
    block = sps.kron(sps.identity(n_monomials(n, k), format="csr"), sps.csr_matrix(fc.T), format="csr")
    mat = (K @ block @ K.T).toarray()
    with warnings.catch_warnings():
        # singularity is reported below as ConditioningError
        warnings.simplefilter("ignore", sla.LinAlgWarning)
        lu = sla.lu_factor(mat, check_finite=False)
    diag = np.abs(np.diag(lu[0]))
    if diag.min() <= np.finfo(float).eps * max(1.0, diag.max()) * mat.shape[0]:
        raise ConditioningError(
            f"M_{k} is numerically singular; apply the conditioning transform first")
    return MkOperator(k=k, matrix=mat, lu=lu)
