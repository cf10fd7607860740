"""Order-by-order solution of the HJB equation.

The value function is ``V(x) = sum_k x^T P_k x^k / (k+1)`` so that
``V_x(x) = sum_k P_k x^k``.  ``P_1`` comes from the Riccati equation and
each higher ``P_k`` from one linear solve

    M_k p_k = [Psi(g^T h_k) - f^T h_k]_{k+1}^T - q_k,
    vec(P_k) = K_k^T p_k,

with ``h_k = sum_{j<k} P_j x^j`` and ``M_k = K_k (I (x) Fc^T) K_k^T``.
When ``Fc + Fc^T`` is not safely negative definite the state is first
rescaled by ``T = sqrt(P_c)`` (``Fc^T P_c + P_c Fc + I = 0``), which bounds
``||M_k^{-1}||`` uniformly in ``k``.
"""
from dataclasses import dataclass, field, replace
import logging
import time
import warnings

import numpy as np
import scipy.sparse as sps

from .errors import ConditioningError, DomainError, InputError, OrderFailure
from .linalg import build_Mk, inverse_bound_alpha, solve_are, solve_lyapunov, sqrt_spd
from .model import QuadraticPenalty, expand_model, model_hash, psi_from_phi
from .monomial import ReducedTensor, build_K, n_monomials, unvec
from .series import PowerSeries, dot_coefficient, matrix_series_dot, multi_psi_expand, series_dot

__all__ = [
    "NlrSolution", "HjbResidualReport", "Conditioning", "solve_order_k", "solve_nlr",
    "condition_and_transform", "transform_solution_back", "power_matrix",
    "verify_hjb", "synthesize", "DEFAULT_ALPHA_MAX",
]

log = logging.getLogger(__name__)

DEFAULT_ALPHA_MAX = 50.0


@dataclass(frozen=True, eq=False)
class NlrSolution:
    """Value-function coefficients ``P_1..P_order`` in original coordinates.

    ``P_hat`` holds the coefficients in the coordinates the recursion ran in
    (``x_hat = T x``); both lists coincide when no transform was applied.
    ``order`` can be lower than the requested order after a per-order
    failure, in which case ``failure`` describes what went wrong.
    """

    n: int
    m: int
    P: tuple
    P_hat: tuple
    T: np.ndarray
    alpha: float
    transformed: bool
    penalty: object
    requested_order: int
    diagnostics: dict = field(default_factory=dict, repr=False)
    model_hash: str = None
    failure: str = None

    @property
    def order(self):
        return len(self.P)

    @property
    def complete(self):
        return self.order == self.requested_order

    @property
    def P1(self):
        return self.P[0].matrix

    def coefficient(self, k):
        """``P_k`` as an ``n x m_k`` array (``k`` is 1-based)."""
        return self.P[k - 1].matrix

    def gradient_series(self, order=None):
        """``V_x`` as an ``n``-vector :class:`PowerSeries`."""
        order = self.order if order is None else min(order, self.order)
        coeffs = [np.zeros((self.n, 1))] + [self.P[k].matrix for k in range(order)]
        return PowerSeries(self.n, self.n, tuple(coeffs))

    def truncated(self, order):
        order = min(order, self.order)
        return replace(self, P=self.P[:order], P_hat=self.P_hat[:order],
                       requested_order=order, failure=None)


@dataclass(frozen=True)
class HjbResidualReport:
    """Per-order HJB residuals of a solution.

    ``absolute[j]`` and ``relative[j]`` refer to the order-``j`` coefficient
    of ``V_x^T f - Psi(g^T V_x) + Q``; the relative value divides by the
    absolute-coefficient evaluation of the same terms.
    """

    orders: tuple
    absolute: dict
    relative: dict
    scale: dict
    tail_estimate: float
    tol: float

    @property
    def max_relative(self):
        return max(self.relative.values(), default=0.0)

    @property
    def passed(self):
        return self.max_relative <= self.tol

    def worst_order(self):
        return max(self.relative, key=self.relative.get) if self.relative else None


@dataclass(frozen=True, eq=False)
class Conditioning:
    """Outcome of the conditioning check on the closed-loop matrix."""

    T: np.ndarray
    alpha: float
    alpha_before: float
    transformed: bool
    sqrt_method: str
    system: object = field(repr=False)
    cost: object = field(repr=False)
    are: object = field(repr=False)


def _rhs(system, cost, h, k):
    """``[Psi(g^T h) - f^T h]_{k+1} - q_k`` as a flat ``m_{k+1}`` vector."""
    fh = dot_coefficient(system.f, h, k + 1).ravel()
    v = matrix_series_dot(system.g, h, order=k)
    psi = cost.psi_coefficient(v, k + 1).ravel()
    return psi - fh - cost.q_vector(k)


def solve_order_k(system, cost, prior, k, mk=None):
    """Solve for ``P_k`` given ``prior = [P_1, .., P_{k-1}]`` (arrays).

    Returns ``(P_k, info)`` where ``info`` records the linear-solve residual
    and ``||M_k^{-1}||`` when the operator was built here.
    """
    if k < 2 or len(prior) != k - 1:
        raise ValueError(f"order {k} needs exactly {k - 1} prior coefficients")
    n = system.n
    coeffs = [np.zeros((n, 1))] + [np.asarray(p) for p in prior]
    h = PowerSeries(n, n, tuple(coeffs))
    fc = system.F1 - system.G0 @ cost.penalty.R1_inv @ system.G0.T @ prior[0]
    if mk is None:
        mk = build_Mk(fc, k)
    rhs = _rhs(system, cost, h, k)
    if not np.all(np.isfinite(rhs)):
        raise OrderFailure(f"non-finite right-hand side at order {k}", k)
    p = mk.solve(rhs)
    if not np.all(np.isfinite(p)):
        raise OrderFailure(f"non-finite solution at order {k}", k)
    rnorm = np.linalg.norm(rhs)
    resid = np.linalg.norm(mk.matrix @ p - rhs) / rnorm if rnorm > 0 else 0.0
    kk = build_K(n, k, 1).matrix
    pk = unvec(kk.T @ p, n, n_monomials(n, k))
    return pk, {"solve_residual": float(resid)}


def solve_nlr(system, cost, order=None, are=None, measure_conditioning=True):
    """Run the recursion in the coordinates of ``system``.

    A failure at order ``k`` keeps ``P_1..P_{k-1}`` and records the error;
    the caller receives a solution whose ``complete`` flag is false.
    """
    order = system.order if order is None else order
    if order > system.order:
        raise ValueError(f"model expanded to order {system.order}, solution needs {order}")
    n = system.n
    t0 = time.perf_counter()
    if are is None:
        are = solve_are(system.F1, system.G0, cost.Q1, cost.penalty.R1)
    P = [are.P1]
    diag = {"are_residual": are.residual, "are_iterations": are.iterations,
            "Mk_inv_norm": {}, "solve_residual": {}, "order_seconds": {1: time.perf_counter() - t0}}
    failure = None
    for k in range(2, order + 1):
        tk = time.perf_counter()
        try:
            mk = build_Mk(are.Fc, k)
            pk, info = solve_order_k(system, cost, P, k, mk=mk)
        except (ConditioningError, OrderFailure, DomainError) as exc:
            failure = f"order {k}: {exc}"
            warnings.warn(f"recursion stopped at order {k}; keeping orders 1..{k - 1} ({exc})",
                          RuntimeWarning, stacklevel=2)
            break
        if measure_conditioning:
            diag["Mk_inv_norm"][k] = float(mk.inv_norm)
        diag["solve_residual"][k] = info["solve_residual"]
        diag["order_seconds"][k] = time.perf_counter() - tk
        P.append(pk)
    diag["wall_seconds"] = time.perf_counter() - t0
    tensors = tuple(ReducedTensor(n, k + 1, p) for k, p in enumerate(P))
    return NlrSolution(n=n, m=system.m, P=tensors, P_hat=tensors, T=np.eye(n), alpha=inverse_bound_alpha(are.Fc),
                       transformed=False, penalty=cost.penalty, requested_order=order,
                       diagnostics=diag, failure=failure)


def condition_and_transform(system, cost, are, alpha_max=DEFAULT_ALPHA_MAX, sqrt_method="principal"):
    """Return the model in coordinates where ``Fc + Fc^T`` is negative definite.

    Nothing changes when ``alpha = 2 / lambda_min(-(Fc + Fc^T))`` is finite
    and at most ``alpha_max``.  Otherwise ``T = sqrt(P_c)`` and the model
    is re-expanded in ``x_hat = T x``.
    """
    alpha0 = inverse_bound_alpha(are.Fc)
    n = system.n
    if alpha0 <= alpha_max:
        return Conditioning(np.eye(n), alpha0, alpha0, False, sqrt_method, system, cost, are)
    pc = solve_lyapunov(are.Fc, np.eye(n))
    method = sqrt_method
    try:
        T = sqrt_spd(pc, method)
        if not inverse_bound_alpha(T @ are.Fc @ np.linalg.inv(T)) < np.inf:
            raise DomainError("transformed closed loop is not negative definite")
    except DomainError as exc:
        if method == "principal":
            raise
        warnings.warn(f"{method} square root rejected ({exc}); using the principal root",
                      RuntimeWarning, stacklevel=2)
        method = "principal"
        T = sqrt_spd(pc, method)
    system_t, cost_t = expand_model(system.spec, system.order, transform=T)
    are_t = solve_are(system_t.F1, system_t.G0, cost_t.Q1, cost_t.penalty.R1)
    alpha = inverse_bound_alpha(are_t.Fc)
    log.info("conditioning transform applied: alpha %.4g -> %.4g", alpha0, alpha)
    return Conditioning(T, alpha, alpha0, True, method, system_t, cost_t, are_t)


def power_matrix(T, k):
    """``T^{[k]}`` with ``(T x)^k = T^{[k]} x^k`` on the reduced basis."""
    T = np.asarray(T, dtype=float)
    out = T
    for j in range(2, k + 1):
        out = _next_power(out, T, j)
    return out


def _next_power(prev, T, k):
    # (Tx)^k = K_{k-1,1} ((Tx)^{k-1} (x) Tx) = K (T^{[k-1]} (x) T) K^T x^k
    K = build_K(T.shape[0], k - 1, 1).matrix
    return (K @ (K @ sps.kron(prev, T, format="csr")).T).T.toarray()


def transform_solution_back(solution, T):
    """Coefficients of ``V(x) = V_hat(T x)`` from those of ``V_hat``.

    ``V_x(x) = T^T V_hat_x(T x)`` gives ``P_k = T^T P_hat_k T^{[k]}``.
    """
    T = np.asarray(T, dtype=float)
    n = solution.n
    if np.allclose(T, np.eye(n), rtol=0, atol=0):
        return replace(solution, T=T)
    P = []
    tk = T
    for k, ph in enumerate(solution.P_hat, start=1):
        if k > 1:
            tk = _next_power(tk, T, k)
        P.append(ReducedTensor(n, k, T.T @ ph.matrix @ tk))
    return replace(solution, P=tuple(P), T=T)


def _abs_series(s):
    return PowerSeries(s.n, s.p, tuple(np.abs(c) for c in s.coeffs))


def _psi_majorant(cost, v_abs, order):
    """``Psi`` evaluated with absolute coefficients (a bound on every partial sum)."""
    if isinstance(cost.penalty, QuadraticPenalty):
        return series_dot(v_abs, v_abs.left_multiply(np.abs(cost.penalty.R1_inv)), order) * 0.5
    return multi_psi_expand([np.abs(c) for c in psi_from_phi(cost.penalty, order)], v_abs, order)


def verify_hjb(solution, system, cost, order=None, tol=1e-8):
    """Re-expand ``V_x^T f - Psi(g^T V_x) + Q`` and report per-order residuals.

    ``system`` and ``cost`` must be in the coordinates of ``solution.P``.
    Orders ``2..order+1`` are checked; ``order`` defaults to the solution
    order.  Each residual is divided by the same expression evaluated with
    absolute coefficients, the natural roundoff scale even when the exact
    terms cancel.  The order ``order+2`` coefficient (formed from the
    truncations at hand) is reported as a tail indicator.
    """
    order = solution.order if order is None else min(order, solution.order)
    vx = solution.gradient_series(order)
    top = order + 1
    f = system.f.truncate(order)
    g = [gi.truncate(order) for gi in system.g]
    drift = series_dot(f, vx, order=top + 1)
    psi = cost.psi_series(matrix_series_dot(g, vx, order=top), top + 1)
    q = cost.q
    vx_abs = _abs_series(vx)
    drift_abs = series_dot(_abs_series(f), vx_abs, order=top)
    psi_abs = _psi_majorant(cost, matrix_series_dot([_abs_series(gi) for gi in g], vx_abs, order=top), top)
    absolute, relative, scale = {}, {}, {}
    for j in range(2, top + 1):
        res = float(np.abs(drift[j] - psi[j] + q[j]).max(initial=0.0))
        sc = float((drift_abs[j] + psi_abs[j] + np.abs(q[j])).max(initial=0.0))
        absolute[j] = res
        scale[j] = sc
        relative[j] = res / sc if res > 0 else 0.0
    tail = drift[top + 1] - psi[top + 1] + q[top + 1]
    return HjbResidualReport(tuple(range(2, top + 1)), absolute, relative, scale,
                             float(np.abs(tail).max(initial=0.0)), tol)


def synthesize(spec, order=None, alpha_max=DEFAULT_ALPHA_MAX, sqrt_method="principal",
               measure_conditioning=True):
    """Expand, condition, solve and map back to original coordinates.

    Returns ``(solution, conditioning)``; ``conditioning.system`` and
    ``conditioning.cost`` are the models the recursion ran on.
    """
    order = order or spec.order
    if order is None:
        raise InputError("no expansion order given")
    t0 = time.perf_counter()
    system, cost = expand_model(spec, order)
    are = solve_are(system.F1, system.G0, cost.Q1, cost.penalty.R1)
    cond = condition_and_transform(system, cost, are, alpha_max, sqrt_method)
    sol = solve_nlr(cond.system, cond.cost, order, cond.are, measure_conditioning)
    sol = replace(sol, alpha=cond.alpha, transformed=cond.transformed,
                  model_hash=model_hash(spec, order=order, alpha_max=alpha_max, sqrt_method=sqrt_method))
    if cond.transformed:
        sol = transform_solution_back(sol, cond.T)
    sol.diagnostics.update({"alpha_before": cond.alpha_before, "alpha": cond.alpha,
                            "transformed": cond.transformed, "sqrt_method": cond.sqrt_method,
                            "total_seconds": time.perf_counter() - t0})
    return sol, cond
