"""Feedback evaluation and closed-loop simulation.

The plant is always integrated from its expression trees; only the
controller ``u(x) = -phi(g(x)^T sum_k P_k x^k)`` is a truncated series.
"""
from dataclasses import dataclass, field
import csv

import numpy as np
from scipy.integrate import RK45, OdeSolution
from scipy.optimize import brentq

from .errors import DomainError, InputError, StiffnessError
from .monomial import basis

__all__ = ["Controller", "Trajectory", "DecayReport", "eval_control", "eval_value",
           "simulate", "check_value_decay", "compare_orders"]

CONVERGED_NORM = 1e-8
DIVERGED_NORM = 1e6


def _finite_state(x, n):
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != n:
        raise InputError(f"expected {n}-vectors, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise DomainError("state has non-finite entries")
    return x


class _MonomialStack:
    """All weighted monomials of degrees ``1..order`` evaluated in one pass."""

    def __init__(self, n, order):
        bases = [basis(n, k) for k in range(1, order + 1)]
        self.exponents = np.vstack([b.exponents for b in bases])
        self.coeffs = np.concatenate([b.coeffs for b in bases])
        self.degrees = np.concatenate([np.full(b.size, b.k) for b in bases])

    def __call__(self, x):
        return self.coeffs * np.prod(x[..., None, :] ** self.exponents, axis=-1)


@dataclass(eq=False)
class Controller:
    """Order-``order`` feedback law built from a solution and its model.

    ``order`` may be lower than the solution order to evaluate a lower-order
    regulator from the same coefficients.
    """

    solution: object
    spec: object
    order: int = None
    _stack: object = field(default=None, init=False, repr=False)
    _grad: np.ndarray = field(default=None, init=False, repr=False)

    def __post_init__(self):
        order = self.solution.order if self.order is None else int(self.order)
        if not 1 <= order <= self.solution.order:
            raise InputError(f"controller order must lie in 1..{self.solution.order}, got {order}")
        self.order = order
        self._stack = _MonomialStack(self.solution.n, order)
        mats = [self.solution.coefficient(k) for k in range(1, order + 1)]
        self._grad = np.hstack(mats)

    @property
    def penalty(self):
        return self.solution.penalty

    @property
    def n(self):
        return self.solution.n

    def gradient(self, x):
        """``V_x(x) = sum_k P_k x^k``."""
        x = _finite_state(x, self.n)
        return self._stack(x) @ self._grad.T

    def value(self, x):
        """``V(x) = sum_k x^T P_k x^k / (k+1)``."""
        x = _finite_state(x, self.n)
        mono = self._stack(x)
        total = np.zeros(x.shape[:-1])
        start = 0
        for k in range(1, self.order + 1):
            size = basis(self.n, k).size
            pk = self._grad[:, start:start + size]
            total = total + np.einsum("...i,...i->...", x, mono[..., start:start + size] @ pk.T) / (k + 1)
            start += size
        return total

    def costate_input(self, x):
        """``v = g(x)^T V_x(x)``."""
        x = _finite_state(x, self.n)
        g = self.spec.eval_g(x)
        return np.einsum("...ij,...i->...j", g, self.gradient(x))

    def __call__(self, x):
        return -self.penalty.phi(self.costate_input(x))


def eval_control(ctrl, x):
    return ctrl(x)


def eval_value(solution, x, order=None):
    """Value-function series at ``x`` (single point or batch)."""
    return Controller(solution, None, order).value(x)


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Closed-loop samples with the accumulated running cost."""

    t: np.ndarray
    x: np.ndarray
    u: np.ndarray
    running_cost: np.ndarray
    status: str  # converged | diverged | horizon
    tail_cost: float = 0.0
    tail_added: bool = False
    interpolant: object = field(default=None, repr=False)

    @property
    def total_cost(self):
        return float(self.running_cost[-1]) + self.tail_cost

    @property
    def converged(self):
        return self.status == "converged"

    def to_csv(self, path, comment=None):
        """Write one row per step; ``comment`` becomes a leading ``#`` line."""
        n, m = self.x.shape[1], self.u.shape[1]
        header = ["t"] + [f"x{i + 1}" for i in range(n)] + [f"u{j + 1}" for j in range(m)] + ["running_cost"]
        with open(path, "w", newline="", encoding="utf-8") as fh:
            if comment:
                fh.write(f"# {comment}\n")
            w = csv.writer(fh)
            w.writerow(header)
            for row in np.column_stack([self.t, self.x, self.u, self.running_cost]):
                w.writerow([repr(float(v)) for v in row])


class _Blowup(Exception):
    pass


def simulate(spec, ctrl, x0, horizon=100.0, rtol=1e-9, atol=1e-12, max_step=np.inf, min_step=1e-8):
    """Integrate ``xdot = f(x) + g(x) u(x)`` with RK45 and accumulate ``Q + R``.

    Stops early once ``|x| < 1e-8`` (converged) or ``|x| > 1e6`` (diverged).
    After convergence or at the horizon the remaining cost is approximated by
    ``x^T P_1 x / 2`` and reported separately as ``tail_cost``.  A step size
    below ``min_step`` raises :class:`StiffnessError`; escaping polynomial
    closed loops typically end this way before reaching the divergence norm.
    """
    n, m = spec.n, spec.m
    x0 = _finite_state(x0, n).reshape(n)
    if horizon <= 0:
        raise InputError("horizon must be positive")
    penalty = ctrl.penalty
    p1 = ctrl.solution.P1

    if np.linalg.norm(x0) < CONVERGED_NORM:
        u0 = np.zeros((1, m)) if not np.any(x0) else ctrl(x0)[None, :]
        return Trajectory(np.zeros(1), x0[None, :], u0, np.zeros(1), "converged")

    def rhs(_t, z):
        x = z[:n]
        # escaping states overflow the polynomial controller; stop before NaNs reach step control
        if not np.all(np.isfinite(x)) or np.linalg.norm(x) > DIVERGED_NORM:
            raise _Blowup
        with np.errstate(over="ignore", invalid="ignore"):
            u = ctrl(x)
            out = np.append(spec.eval_dynamics(x, u), float(spec.eval_Q(x)) + float(penalty.cost(u)))
        if not np.all(np.isfinite(out)):
            raise _Blowup
        return out

    solver = RK45(rhs, 0.0, np.append(x0, 0.0), float(horizon), rtol=rtol, atol=atol, max_step=max_step)
    ts, zs, dense = [0.0], [solver.y.copy()], []
    status = "horizon"
    while solver.status == "running":
        try:
            solver.step()
        except _Blowup:
            status = "diverged"
            break
        if solver.status == "failed" or (solver.status == "running" and solver.step_size < min_step):
            raise StiffnessError(f"step size collapsed (|x| = "
                                 f"{np.linalg.norm(solver.y[:n]):.3g})", float(solver.t))
        seg = solver.dense_output()
        ts.append(solver.t)
        zs.append(solver.y.copy())
        dense.append(seg)
        norm = np.linalg.norm(solver.y[:n])
        if norm < CONVERGED_NORM:
            te = brentq(lambda t: np.linalg.norm(seg(t)[:n]) - CONVERGED_NORM, ts[-2], ts[-1])
            ts[-1], zs[-1] = te, seg(te)
            status = "converged"
            break
        if norm > DIVERGED_NORM:
            status = "diverged"
            break
    t = np.array(ts)
    z = np.array(zs)
    xs = z[:, :n]
    with np.errstate(over="ignore", invalid="ignore"):
        us = np.array([ctrl(x) for x in xs])
    tail, added = 0.0, False
    if status != "diverged":
        xf = xs[-1]
        tail, added = 0.5 * float(xf @ p1 @ xf), True
    interp = OdeSolution(t, dense) if dense else None
    return Trajectory(t, xs, us, z[:, n], status, tail, added, interp)


@dataclass(frozen=True)
class DecayReport:
    """Comparison of ``dV/dt`` with ``-(Q + R)`` along a trajectory."""

    times: np.ndarray
    dVdt: np.ndarray
    running_rate: np.ndarray
    max_mismatch: float
    relative_mismatch: float
    nonincreasing: bool
    value_x0: float
    total_cost: float
    cost_relative_error: float


def check_value_decay(trajectory, ctrl, spec, n_samples=50, step=None):
    """Finite-difference ``dV/dt`` on the trajectory interpolant versus ``-(Q+R)``."""
    t0, t1 = float(trajectory.t[0]), float(trajectory.t[-1])
    v0 = float(ctrl.value(trajectory.x[0]))
    total = trajectory.total_cost
    cost_err = abs(v0 - total) / v0 if v0 > 0 else abs(v0 - total)
    if trajectory.interpolant is None or t1 <= t0:
        empty = np.zeros(0)
        return DecayReport(empty, empty, empty, 0.0, 0.0, True, v0, total, cost_err)
    h = step or 1e-5 * max(1.0, t1 - t0)
    times = np.linspace(t0 + h, t1 - h, n_samples)
    n = spec.n
    xp = trajectory.interpolant(times + h)[:n].T
    xm = trajectory.interpolant(times - h)[:n].T
    xc = trajectory.interpolant(times)[:n].T
    dvdt = (ctrl.value(xp) - ctrl.value(xm)) / (2 * h)
    rate = spec.eval_Q(xc) + ctrl.penalty.cost(ctrl(xc))
    mismatch = np.abs(dvdt + rate)
    scale = max(float(np.abs(rate).max()), np.finfo(float).tiny)
    return DecayReport(times, dvdt, rate, float(mismatch.max()), float(mismatch.max() / scale),
                       bool(np.all(dvdt <= 1e-9 * scale)), v0, total, cost_err)


def compare_orders(spec, solution, x0, orders, **sim_opts):
    """One simulation per controller order; returns a list of result rows.

    A run whose step size collapses is reported with status ``"stiff"`` and
    NaN costs rather than aborting the comparison.
    """
    rows = []
    x0 = np.asarray(x0, dtype=float)
    for k in orders:
        ctrl = Controller(solution, spec, k)
        try:
            traj = simulate(spec, ctrl, x0, **sim_opts)
        except StiffnessError as exc:
            nan = float("nan")
            rows.append({"order": int(k), "status": "stiff", "final_time": exc.t, "running_cost": nan,
                         "tail_cost": nan, "total_cost": nan, "max_abs_u": nan,
                         "value_x0": float(ctrl.value(x0))})
            continue
        rows.append({
            "order": int(k),
            "status": traj.status,
            "final_time": float(traj.t[-1]),
            "running_cost": float(traj.running_cost[-1]),
            "tail_cost": traj.tail_cost,
            "total_cost": traj.total_cost,
            "max_abs_u": float(np.abs(traj.u).max()),
            "value_x0": float(ctrl.value(x0)),
        })
    return rows
