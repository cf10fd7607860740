"""Plant and cost models: parsing, control-affinity, and series expansion.

A model document is a JSON-compatible mapping::

    {
      "n": 3, "m": 2,
      "dynamics": ["3*sin(x2)", "2*x1^3 + x3 + u1", "3*exp(x1) - 3 - u2"],
      "Q": "50*(x1^2 + x2^2 + x3^2) + x1^4 + x2^4 + x3^4",
      "penalty": {"kind": "quadratic", "R1": [[1, 0], [0, 1]]},
      "order": 5
    }

``penalty`` is either ``{"kind": "quadratic", "R1": matrix}`` for
``R(u) = u^T R1 u / 2`` or ``{"kind": "tanh", "gain": c}`` (optionally
``"per_channel": [c_1, ..]``) for the saturating penalty whose inverse
gradient is ``phi(v) = tanh(c v)/c`` and whose integral function is
``Psi(v) = sum_i ln cosh(c_i v_i)/c_i^2``.

The quadratic part of ``Q`` follows the ``x^T Q1 x / 2`` convention, so
``Q = 50*|x|^2`` gives ``Q1 = 100 I``.
"""
from dataclasses import dataclass, field
import hashlib
import json

import numpy as np
from scipy.special import xlogy

from . import expr as ex
from .errors import AssumptionError, InputError, ParseError
from .linalg import is_stabilizable
from .monomial import ReducedTensor, basis, build_K, n_monomials, unvec
from .series import (PowerSeries, compose_function, dot_coefficient, multi_psi_expand, power, product,
                     series_dot)
from .univariate import taylor

__all__ = [
    "QuadraticPenalty", "TanhPenalty", "ModelSpec", "SystemModel", "CostModel",
    "parse_model", "load_model", "check_affine", "expand_expr", "expand_model",
    "psi_from_phi", "model_hash",
]


# -- penalties ------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class QuadraticPenalty:
    """``R(u) = u^T R1 u / 2``; ``phi(v) = R1^{-1} v``."""

    R1: np.ndarray
    kind: str = field(default="quadratic", init=False)

    def __post_init__(self):
        r1 = np.atleast_2d(np.asarray(self.R1, dtype=float))
        if r1.shape[0] != r1.shape[1]:
            raise InputError(f"R1 must be square, got {r1.shape}")
        object.__setattr__(self, "R1", r1)

    @property
    def m(self):
        return self.R1.shape[0]

    @property
    def R1_inv(self):
        return np.linalg.inv(self.R1)

    def phi(self, v):
        return np.asarray(v) @ self.R1_inv.T

    def psi(self, v):
        v = np.asarray(v, dtype=float)
        return 0.5 * np.einsum("...i,ij,...j->...", v, self.R1_inv, v)

    def cost(self, u):
        u = np.asarray(u, dtype=float)
        return 0.5 * np.einsum("...i,ij,...j->...", u, self.R1, u)

    def to_dict(self):
        return {"kind": "quadratic", "R1": self.R1.tolist()}


@dataclass(frozen=True, eq=False)
class TanhPenalty:
    """Saturating penalty with ``phi(v)_i = tanh(c_i v_i)/c_i``, ``|u_i| < 1/c_i``."""

    gains: np.ndarray
    kind: str = field(default="tanh", init=False)

    def __post_init__(self):
        g = np.atleast_1d(np.asarray(self.gains, dtype=float))
        if g.ndim != 1 or np.any(g <= 0) or not np.all(np.isfinite(g)):
            raise InputError(f"tanh gains must be positive, got {g}")
        object.__setattr__(self, "gains", g)

    @property
    def m(self):
        return self.gains.size

    @property
    def limits(self):
        return 1.0 / self.gains

    @property
    def R1(self):
        return np.eye(self.m)

    @property
    def R1_inv(self):
        return np.eye(self.m)

    def phi(self, v):
        return np.tanh(np.asarray(v) * self.gains) / self.gains

    def psi(self, v):
        z = np.abs(np.asarray(v, dtype=float) * self.gains)
        # ln cosh z = z + log1p(exp(-2z)) - ln 2, stable for large z
        lncosh = z + np.log1p(np.exp(-2.0 * z)) - np.log(2.0)
        return np.sum(lncosh / self.gains**2, axis=-1)

    def cost(self, u):
        """``sum_i (1/c_i) int_0^{u_i} atanh(c_i s) ds``; finite up to the limit."""
        t = np.clip(np.asarray(u, dtype=float) * self.gains, -1.0, 1.0)
        val = 0.5 * (xlogy(1 + t, 1 + t) + xlogy(1 - t, 1 - t))
        return np.sum(val / self.gains**2, axis=-1)

    def to_dict(self):
        return {"kind": "tanh", "per_channel": self.gains.tolist()}


def psi_from_phi(penalty, order):
    """Per-channel Taylor coefficients of ``Psi`` for a saturating penalty.

    For ``phi(v) = tanh(c v)/c`` the integral function is
    ``psi(v) = ln cosh(c v) / c^2``.
    """
    if not isinstance(penalty, TanhPenalty):
        raise InputError(f"no separable Psi expansion for penalty kind {penalty.kind!r}")
    base = taylor("lncosh", 0.0, order)
    j = np.arange(order + 1)
    return [base * c**j / c**2 for c in penalty.gains]


def _parse_penalty(doc, m):
    if not isinstance(doc, dict) or "kind" not in doc:
        raise InputError("penalty must be a mapping with a 'kind' field")
    kind = doc["kind"]
    if kind == "quadratic":
        r1 = np.atleast_2d(np.asarray(doc.get("R1", np.eye(m)), dtype=float))
        if r1.shape != (m, m):
            raise InputError(f"R1 must be {m}x{m}, got {r1.shape}")
        return QuadraticPenalty(r1)
    if kind == "tanh":
        if "per_channel" in doc:
            gains = np.asarray(doc["per_channel"], dtype=float)
        elif "gain" in doc:
            gains = np.broadcast_to(np.asarray(doc["gain"], dtype=float), (m,)).copy()
        elif "limit" in doc:
            gains = 1.0 / np.broadcast_to(np.asarray(doc["limit"], dtype=float), (m,))
        else:
            gains = np.ones(m)
        if gains.shape != (m,):
            raise InputError(f"need {m} tanh gains, got {gains.shape}")
        return TanhPenalty(gains)
    raise InputError(f"unknown penalty kind {kind!r}")


# -- model specification ----------------------------------------------------

@dataclass(frozen=True, eq=False)
class ModelSpec:
    """Parsed model document: ASTs for the dynamics and cost."""

    n: int
    m: int
    dynamics: tuple
    f: tuple
    g: tuple  # g[i][j]: coefficient of u_{j+1} in xdot_{i+1}
    Q: object
    penalty: object
    order: int = None
    source: dict = field(default=None, repr=False)

    def eval_f(self, x):
        env = _x_env(x, self.n)
        return np.stack([np.broadcast_to(ex.evaluate(e, env), np.shape(x)[:-1]) for e in self.f], axis=-1)

    def eval_g(self, x):
        env = _x_env(x, self.n)
        rows = []
        for row in self.g:
            rows.append(np.stack([np.broadcast_to(ex.evaluate(e, env), np.shape(x)[:-1])
                                  for e in row], axis=-1))
        return np.stack(rows, axis=-2)

    def eval_Q(self, x):
        return np.broadcast_to(ex.evaluate(self.Q, _x_env(x, self.n)), np.shape(x)[:-1])

    def eval_dynamics(self, x, u):
        env = _x_env(x, self.n)
        u = np.asarray(u, dtype=float)
        env.update({f"u{j + 1}": u[..., j] for j in range(self.m)})
        return np.stack([np.broadcast_to(ex.evaluate(e, env), np.shape(x)[:-1])
                         for e in self.dynamics], axis=-1)


def _x_env(x, n):
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != n:
        raise InputError(f"expected {n}-vectors, got shape {x.shape}")
    return {f"x{i + 1}": x[..., i] for i in range(n)}


def check_affine(dynamics, m):
    """Split each dynamics AST into drift ``f_i`` and input row ``g_i``."""
    f, g = [], []
    for node in dynamics:
        fi, gi = ex.split_affine(node, m)
        f.append(fi)
        g.append(tuple(gi))
    return tuple(f), tuple(g)


def parse_model(doc):
    """Build a :class:`ModelSpec` from a mapping or JSON text."""
    if isinstance(doc, str):
        try:
            doc = json.loads(doc)
        except json.JSONDecodeError as exc:
            raise ParseError(f"model document is not valid JSON: {exc.msg}", exc.lineno, exc.colno) from None
    if not isinstance(doc, dict):
        raise InputError("model document must be a mapping")
    for key in ("n", "m", "dynamics", "Q", "penalty"):
        if key not in doc:
            raise InputError(f"model document is missing {key!r}")
    n, m = int(doc["n"]), int(doc["m"])
    if n < 1 or m < 1:
        raise InputError("n and m must be positive")
    dyn_src = doc["dynamics"]
    if not isinstance(dyn_src, list) or len(dyn_src) != n:
        raise InputError(f"'dynamics' must list {n} expressions")
    dynamics = []
    for i, text in enumerate(dyn_src):
        try:
            dynamics.append(ex.parse_expr(text, n, m))
        except ParseError as exc:
            raise ParseError(f"dynamics[{i}]: {exc.args[0]}") from None
    try:
        q = ex.parse_expr(doc["Q"], n, 0)
    except ParseError as exc:
        raise ParseError(f"Q: {exc.args[0]}") from None
    f, g = check_affine(dynamics, m)
    penalty = _parse_penalty(doc["penalty"], m)
    order = doc.get("order")
    if order is not None:
        order = int(order)
    return ModelSpec(n, m, tuple(dynamics), f, g, q, penalty, order, dict(doc))


def load_model(path):
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    return parse_model(text)


def model_hash(spec, **extra):
    """SHA-256 digest of the canonical model document plus run options."""
    payload = {"model": spec.source, "options": extra}
    text = json.dumps(payload, sort_keys=True, separators=(",", ":"), default=_json_default)
    return hashlib.sha256(text.encode()).hexdigest()


def _json_default(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    raise TypeError(f"cannot serialize {type(obj).__name__}")


# -- expansion --------------------------------------------------------------

def expand_expr(node, order, xvars):
    """Truncated Taylor series of a u-free AST.

    ``xvars`` lists the scalar series standing in for ``x1..xn`` (the
    coordinate functions, possibly after a linear change of variables).
    """
    n = xvars[0].n
    if isinstance(node, ex.Num):
        return PowerSeries.constant(n, node.value, order)
    if isinstance(node, ex.Var):
        if node.kind != "x":
            raise InputError(f"input {node.name} cannot appear here")
        return xvars[node.index - 1].truncate(order)
    if isinstance(node, ex.Neg):
        return -expand_expr(node.operand, order, xvars)
    if isinstance(node, ex.BinOp):
        if node.op == "/":
            return expand_expr(node.left, order, xvars) * (1.0 / ex.constant_value(node.right))
        a = expand_expr(node.left, order, xvars)
        if node.op == "*":
            c = ex.constant_value(node.left)
            if c is not None:
                return expand_expr(node.right, order, xvars) * c
            c = ex.constant_value(node.right)
            if c is not None:
                return a * c
            return product(a, expand_expr(node.right, order, xvars), order)
        b = expand_expr(node.right, order, xvars)
        return a + b if node.op == "+" else a - b
    if isinstance(node, ex.Pow):
        return power(expand_expr(node.base, order, xvars), node.exponent, order)
    if isinstance(node, ex.Call):
        return compose_function(node.func, expand_expr(node.arg, order, xvars), order)
    raise TypeError(f"not an expression node: {node!r}")


def _coordinate_series(n, order, transform):
    inv = np.eye(n) if transform is None else np.linalg.inv(transform)
    return [PowerSeries.linear(inv[i : i + 1], order) for i in range(n)]


def _tensors_from_scalar(series, top):
    """``(Q1, [Q_2..Q_top])`` from a scalar series with the ``x^T Q1 x/2`` convention.

    ``Q_k`` is the symmetric representative ``vec(Q_k) = K_k^T q`` of the
    order ``k+1`` coefficient ``q``; it averages over every attribution of a
    monomial to the ``x^T (.) x^k`` split.
    """
    n = series.n
    k1 = build_K(n, 1, 1).matrix
    q1 = 2.0 * unvec(k1.T @ series[2].ravel(), n, n)
    tensors = [None, 0.5 * (q1 + q1.T)]
    for k in range(2, top + 1):
        kk = build_K(n, k, 1).matrix
        tensors.append(ReducedTensor(n, k, unvec(kk.T @ series[k + 1].ravel(), n, n_monomials(n, k))))
    return tensors


@dataclass(frozen=True, eq=False)
class SystemModel:
    """Series expansion of ``xdot = f(x) + g(x) u`` to a fixed order."""

    n: int
    m: int
    order: int
    f: PowerSeries
    g: tuple
    equilibrium_residual: float
    stabilizable: bool
    transform: np.ndarray
    spec: ModelSpec = field(repr=False)

    @property
    def F(self):
        """``[None, F_1, .., F_order]``."""
        return [None] + [self.f[k] for k in range(1, self.order + 1)]

    @property
    def F1(self):
        return self.f[1]

    @property
    def G0(self):
        return np.hstack([gi[0] for gi in self.g])

    def G(self, i, k):
        """``G_{ik}``: order-``k`` coefficient of input column ``i`` (0-based)."""
        return self.g[i][k]


@dataclass(frozen=True, eq=False)
class CostModel:
    """Series expansion of the state cost and the input penalty integral."""

    order: int
    q: PowerSeries
    Q: list
    penalty: object
    Rtilde: list

    @property
    def Q1(self):
        return self.Q[1]

    @property
    def R1(self):
        return self.penalty.R1

    def q_vector(self, k):
        """``q_k = K_k vec(Q_k)``: the order ``k+1`` coefficient of ``Q``."""
        return self.q[k + 1].ravel()

    def psi_coefficient(self, v, k):
        """Order-``k`` coefficient of ``Psi(v(x))`` (shape ``(1, m_k)``)."""
        if isinstance(self.penalty, QuadraticPenalty):
            return 0.5 * dot_coefficient(v, v.left_multiply(self.penalty.R1_inv), k)
        return self.psi_series(v, k)[k]

    def psi_series(self, v, order):
        """Series of ``Psi(v(x))`` for an ``m``-vector series ``v`` with ``v(0)=0``."""
        if isinstance(self.penalty, QuadraticPenalty):
            return series_dot(v, v.left_multiply(self.penalty.R1_inv), order) * 0.5
        return multi_psi_expand(psi_from_phi(self.penalty, order), v, order)


def _penalty_tensors(penalty, order):
    m = penalty.m
    if isinstance(penalty, QuadraticPenalty):
        out = [None, penalty.R1_inv]
        out += [ReducedTensor(m, k, np.zeros((m, n_monomials(m, k)))) for k in range(2, order + 1)]
        return out
    coeffs = psi_from_phi(penalty, order + 1)
    psi = PowerSeries.zeros(m, 1, order + 1)
    for k in range(2, order + 2):
        row = np.zeros((1, n_monomials(m, k)))
        pure = np.eye(m, dtype=np.int64) * k
        row[0, basis(m, k).index_of(pure)] = [c[k] for c in coeffs]
        psi = psi.replace(k, row)
    return _tensors_from_scalar(psi, order)


def expand_model(spec, order=None, transform=None, tol=1e-12):
    """Expand ``spec`` to order ``order`` and check the standing assumptions.

    ``transform`` is an optional invertible ``T``; the returned models then
    describe ``T f(T^{-1} y)``, ``T g(T^{-1} y)`` and ``Q(T^{-1} y)``.
    """
    order = order or spec.order
    if order is None or order < 1:
        raise InputError("expansion order must be a positive integer")
    n, m = spec.n, spec.m
    T = np.eye(n) if transform is None else np.asarray(transform, dtype=float)
    xvars = _coordinate_series(n, order + 1, None if transform is None else T)

    eq_res = float(np.max(np.abs(spec.eval_f(np.zeros(n)))))
    if eq_res > tol:
        raise AssumptionError(f"f(0) != 0 (max |f_i(0)| = {eq_res:.3e}); expand about an equilibrium")

    f = PowerSeries.stack(expand_expr(fi, order, xvars) for fi in spec.f).left_multiply(T)
    f = f.replace(0, np.zeros((n, 1)))
    g = []
    for j in range(m):
        col = PowerSeries.stack(expand_expr(spec.g[i][j], order, xvars) for i in range(n))
        g.append(col.left_multiply(T))
    g = tuple(g)

    q = expand_expr(spec.Q, order + 1, xvars)
    if abs(q[0][0, 0]) > tol or np.abs(q[1]).max() > tol:
        raise AssumptionError("Q must vanish to second order at the origin")
    q = q.replace(0, np.zeros((1, 1))).replace(1, np.zeros((1, n)))
    Q = _tensors_from_scalar(q, order)
    q1_min = np.linalg.eigvalsh(Q[1]).min()
    if q1_min < -tol * max(1.0, np.abs(Q[1]).max()):
        raise AssumptionError(f"Q1 is not positive semidefinite (min eigenvalue {q1_min:.3e})")

    penalty = spec.penalty
    r1_eigs = np.linalg.eigvalsh(0.5 * (penalty.R1 + penalty.R1.T))
    if not np.allclose(penalty.R1, penalty.R1.T) or r1_eigs.min() <= 0:
        raise AssumptionError("R1 must be symmetric positive definite")

    G0 = np.hstack([gi[0] for gi in g])
    stab = is_stabilizable(f[1], G0)
    if not stab:
        raise AssumptionError("(F1, G0) is not stabilizable")

    system = SystemModel(n, m, order, f, g, eq_res, stab, T, spec)
    cost = CostModel(order, q, Q, penalty, _penalty_tensors(penalty, order))
    return system, cost
