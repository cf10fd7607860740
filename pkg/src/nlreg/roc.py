"""Radius-of-convergence estimates for the value-function series.

Along a unit direction ``v`` the gradient series restricts to
``sum_k (P_k v^k) t^k``; its radius is ``1 / limsup ||P_k v^k||^{1/k}``.
The limsup is estimated by the maximum over a tail window of orders, which
errs toward smaller (conservative) radii.  Replacing ``||P_k v^k||`` by the
spectral norm ``||P_k||`` gives a direction-free lower bound ``r*``.
"""
from dataclasses import dataclass
import csv

import numpy as np
from scipy.stats import norm, qmc

from .errors import InputError
from .monomial import basis, eval_xk

__all__ = ["RocEstimate", "default_window", "directional_radius", "spherical_radius",
           "sample_directions", "roc_surface", "RADIUS_CAP", "VANISHING_NORM"]

RADIUS_CAP = 1e6
VANISHING_NORM = 1e-300


def _coefficients(P):
    """Accept an :class:`NlrSolution`, ReducedTensors or plain arrays."""
    P = getattr(P, "P", P)
    return [np.asarray(getattr(p, "matrix", p), dtype=float) for p in P]


def default_window(order):
    """The last ``max(5, order // 3)`` orders, never below order 2."""
    width = max(5, order // 3)
    return (max(2, order - width + 1), order)


def _resolve_window(order, window):
    lo, hi = default_window(order) if window is None else window
    if not 1 <= lo <= hi <= order:
        raise InputError(f"window {lo}..{hi} is outside the available orders 1..{order}")
    return int(lo), int(hi)


def _radius_from_norms(norms, orders):
    """``1 / max_k norms_k^{1/k}`` over nonzero entries, ``inf`` when all vanish."""
    norms = np.asarray(norms, dtype=float)
    orders = np.asarray(orders, dtype=float)
    live = norms > VANISHING_NORM
    with np.errstate(divide="ignore"):
        roots = np.where(live, np.power(np.where(live, norms, 1.0), 1.0 / orders), 0.0)
    peak = roots.max(axis=-1)
    with np.errstate(divide="ignore"):
        radius = np.where(peak > 0, 1.0 / np.where(peak > 0, peak, 1.0), np.inf)
    return np.where(radius > RADIUS_CAP, np.inf, radius)


def _direction_norms(coeffs, dirs, lo, hi):
    n = dirs.shape[1]
    cols = []
    for k in range(lo, hi + 1):
        pk = coeffs[k - 1]
        vals = eval_xk(basis(n, k), dirs) @ pk.T
        cols.append(np.linalg.norm(vals, axis=-1))
    return np.stack(cols, axis=-1)


def directional_radius(P, direction, window=None):
    """Radius of convergence along the unit vector ``direction``."""
    coeffs = _coefficients(P)
    v = np.asarray(direction, dtype=float)
    if abs(np.linalg.norm(v) - 1.0) > 1e-12:
        raise InputError("direction must be a unit vector")
    lo, hi = _resolve_window(len(coeffs), window)
    norms = _direction_norms(coeffs, v[None, :], lo, hi)[0]
    return float(_radius_from_norms(norms, np.arange(lo, hi + 1)))


def spherical_radius(P, window=None):
    """Direction-free lower bound from spectral norms of the tail ``P_k``."""
    coeffs = _coefficients(P)
    lo, hi = _resolve_window(len(coeffs), window)
    norms = [np.linalg.norm(coeffs[k - 1], 2) for k in range(lo, hi + 1)]
    return float(_radius_from_norms(norms, np.arange(lo, hi + 1)))


def sample_directions(n, n_dirs, seed=0):
    """Quasi-uniform unit vectors.

    Full-circle angle grid for ``n = 2``, Fibonacci lattice for ``n = 3``
    and Gaussian-mapped scrambled Halton points otherwise.
    """
    if n_dirs < 1:
        raise InputError("need at least one direction")
    if n == 1:
        return np.array([[1.0], [-1.0]])[: max(1, min(n_dirs, 2))]
    if n == 2:
        theta = 2 * np.pi * np.arange(n_dirs) / n_dirs
        return np.column_stack([np.cos(theta), np.sin(theta)])
    if n == 3:
        i = np.arange(n_dirs) + 0.5
        z = 1 - 2 * i / n_dirs
        phi = np.pi * (1 + 5**0.5) * i
        r = np.sqrt(1 - z**2)
        return np.column_stack([r * np.cos(phi), r * np.sin(phi), z])
    pts = qmc.Halton(d=n, scramble=True, seed=seed).random(n_dirs)
    g = norm.ppf(np.clip(pts, 1e-12, 1 - 1e-12))
    return g / np.linalg.norm(g, axis=1, keepdims=True)


@dataclass(frozen=True)
class RocEstimate:
    """Sampled directional radii plus the spherical bound."""

    directions: np.ndarray
    radii: np.ndarray
    r_star: float
    window: tuple
    order: int

    @property
    def unbounded(self):
        return ~np.isfinite(self.radii)

    @property
    def min_radius(self):
        return float(self.radii.min())

    def boundary_points(self):
        return self.directions * self.radii[:, None]

    def to_csv(self, path, comment=None):
        """Write direction, radius and boundary-point columns."""
        n = self.directions.shape[1]
        header = [f"d{i + 1}" for i in range(n)] + ["radius"] + [f"b{i + 1}" for i in range(n)]
        with open(path, "w", newline="", encoding="utf-8") as fh:
            if comment:
                fh.write(f"# {comment}\n")
            w = csv.writer(fh)
            w.writerow(header)
            for d, r, b in zip(self.directions, self.radii, self.boundary_points()):
                w.writerow([repr(float(v)) for v in d] + [repr(float(r))] + [repr(float(v)) for v in b])


def roc_surface(P, n_dirs=200, window=None, seed=0):
    """Directional radii over quasi-uniform directions, plus ``r*``."""
    coeffs = _coefficients(P)
    n = coeffs[0].shape[0]
    lo, hi = _resolve_window(len(coeffs), window)
    dirs = sample_directions(n, n_dirs, seed)
    norms = _direction_norms(coeffs, dirs, lo, hi)
    radii = _radius_from_norms(norms, np.arange(lo, hi + 1))
    return RocEstimate(dirs, np.asarray(radii, dtype=float), spherical_radius(coeffs, (lo, hi)),
                       (lo, hi), len(coeffs))
