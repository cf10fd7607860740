import csv

import numpy as np
import pytest

import nlreg
from nlreg.engine import synthesize
from nlreg.errors import InputError
from nlreg.model import parse_model
from nlreg.roc import (default_window, directional_radius, roc_surface, sample_directions,
                       spherical_radius)

SYMMETRIC = {"n": 2, "m": 1, "dynamics": ["x2", "-x1 + x1^3 - 0.5*x2 + (1 + x1^2)*u1"],
             "Q": "x1^2 + x2^2 + x1^4", "penalty": {"kind": "quadratic", "R1": [[1]]}}


@pytest.mark.parametrize("c", [0.5, 2.0, 7.0])
def test_geometric_series_radius(c):
    P = [np.array([[c**k]]) for k in range(1, 21)]
    assert directional_radius(P, [1.0]) == pytest.approx(1 / c, rel=1e-12)
    assert directional_radius(P, [-1.0]) == pytest.approx(1 / c, rel=1e-12)
    assert spherical_radius(P, (10, 20)) == pytest.approx(1 / c, rel=1e-12)


def test_default_window():
    assert default_window(30) == (21, 30)
    assert default_window(10) == (6, 10)
    assert default_window(3) == (2, 3)


def test_window_validation():
    P = [np.eye(1)] * 5
    with pytest.raises(InputError):
        spherical_radius(P, (4, 6))
    with pytest.raises(InputError):
        spherical_radius(P, (3, 2))
    with pytest.raises(InputError):
        directional_radius(P, [0.5])


def test_f8_spherical_radius(solved):
    _, sol, _ = solved("f8", 30)
    assert spherical_radius(sol, (20, 30)) == pytest.approx(0.52, abs=0.05)


def test_lqr_radius_is_unbounded(solved):
    _, sol, _ = solved("lqr_linear", 8)
    assert spherical_radius(sol) == np.inf
    est = roc_surface(sol, 20)
    assert est.unbounded.all()


def test_symmetric_fixture_radii():
    sol, _ = synthesize(parse_model(SYMMETRIC), 16)
    assert all(np.abs(p.matrix).max() < 1e-12 for p in sol.P[1::2])  # even V: P_2, P_4, ... vanish
    for theta in np.linspace(0, np.pi, 7):
        v = np.array([np.cos(theta), np.sin(theta)])
        assert directional_radius(sol, v) == pytest.approx(directional_radius(sol, -v), rel=1e-2)


@pytest.mark.parametrize("name", ["example51", "f8", "f8_constrained", "scalar_quadratic"])
def test_spherical_bound_below_directional(solved, name):
    _, sol, _ = solved(name, 10)
    est = roc_surface(sol, 150)
    assert np.all(est.r_star <= est.radii + 1e-9)


def test_example51_bounded_star_shape(solved):
    _, sol, _ = solved("example51", 10)
    est = roc_surface(sol, 300)
    assert np.all(np.isfinite(est.radii)) and est.min_radius > 0
    pts = est.boundary_points()
    np.testing.assert_allclose(np.linalg.norm(pts, axis=1), est.radii)


@pytest.mark.parametrize("n,count", [(1, 2), (2, 36), (3, 100), (5, 64)])
def test_sample_directions(n, count):
    d = sample_directions(n, count)
    assert d.shape == (count, n)
    np.testing.assert_allclose(np.linalg.norm(d, axis=1), 1.0)
    if n > 1:
        # roughly balanced coverage: mean direction near the origin
        assert np.linalg.norm(d.mean(axis=0)) < 0.2
    with pytest.raises(InputError):
        sample_directions(n, 0)


def test_sample_directions_deterministic():
    np.testing.assert_array_equal(sample_directions(4, 10, seed=3), sample_directions(4, 10, seed=3))


def test_csv(tmp_path, solved):
    _, sol, _ = solved("example51", 10)
    est = roc_surface(sol, 12)
    path = tmp_path / "roc.csv"
    est.to_csv(path, comment="test header")
    lines = path.read_text().splitlines()
    assert lines[0] == "# test header"
    rows = list(csv.reader(lines[1:]))
    assert rows[0] == ["d1", "d2", "d3", "radius", "b1", "b2", "b3"]
    assert len(rows) == 13
    np.testing.assert_allclose([float(r[3]) for r in rows[1:]], est.radii)
