import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nlreg.errors import InputError, ResourceCapError
from nlreg.monomial import (ReducedTensor, basis, build_K, build_L, eval_xk, n_monomials,
                            unvec, vec)

from oracles import brute_exponents, kron_power, multinomial_sqrt

SQ2, SQ3 = math.sqrt(2), math.sqrt(3)


def test_basis_n2_k2_entries():
    x = np.array([1.7, -0.4])
    expected = [x[0] ** 2, SQ2 * x[0] * x[1], x[1] ** 2]
    np.testing.assert_allclose(eval_xk(basis(2, 2), x), expected, rtol=1e-15)


@pytest.mark.parametrize("n,k", [(1, 4), (2, 3), (3, 4), (4, 3), (3, 0)])
def test_basis_matches_brute_force_enumeration(n, k):
    b = basis(n, k)
    assert b.size == n_monomials(n, k) == len(brute_exponents(n, k))
    assert [tuple(e) for e in b.exponents] == brute_exponents(n, k)
    np.testing.assert_allclose(b.coeffs, [multinomial_sqrt(e) for e in brute_exponents(n, k)])


def test_basis_n3_k4_size():
    assert basis(3, 4).size == 15


def test_basis_rejects_bad_arguments():
    with pytest.raises(InputError):
        basis(0, 2)
    with pytest.raises(InputError):
        basis(2, -1)


def test_labels():
    assert basis(2, 2).labels() == ["x1^2", "x1*x2", "x2^2"]
    assert basis(2, 0).labels() == ["1"]


def test_high_order_weights_use_log_path():
    b = basis(2, 30)
    np.testing.assert_allclose(b.coeffs[1], math.sqrt(30), rtol=1e-13)
    np.testing.assert_allclose(b.coeffs[15], math.sqrt(math.comb(30, 15)), rtol=1e-12)


@settings(max_examples=40, deadline=None)
@given(n=st.integers(1, 4), k=st.integers(0, 6), seed=st.integers(0, 2**31 - 1))
def test_inner_product_identity(n, k, seed):
    r = np.random.default_rng(seed)
    x, y = r.normal(size=n), r.normal(size=n)
    b = basis(n, k)
    assert np.dot(eval_xk(b, x), eval_xk(b, y)) == pytest.approx(np.dot(x, y) ** k, rel=1e-10, abs=1e-12)


def test_norm_identity_and_batch(rng):
    x = rng.normal(size=(7, 3))
    xk = eval_xk(basis(3, 5), x)
    assert xk.shape == (7, 21)
    np.testing.assert_allclose(np.linalg.norm(xk, axis=1), np.linalg.norm(x, axis=1) ** 5, rtol=1e-12)
    np.testing.assert_allclose(xk[2], eval_xk(basis(3, 5), x[2]))


def test_eval_rejects_nonfinite_and_bad_shape():
    with pytest.raises(ValueError):
        eval_xk(basis(2, 2), [np.nan, 1.0])
    with pytest.raises(InputError):
        eval_xk(basis(2, 2), [1.0, 2.0, 3.0])


def test_L2_matches_display():
    expected = np.array([[1, 0, 0], [0, 1 / SQ2, 0], [0, 1 / SQ2, 0], [0, 0, 1]])
    np.testing.assert_allclose(build_L(2, 2).matrix.toarray(), expected, atol=1e-15)


@pytest.mark.parametrize("n,k", [(3, 2), (2, 4), (3, 3)])
def test_L_reconstructs_kronecker_power(rng, n, k):
    L = build_L(n, k).matrix
    for x in rng.normal(size=(5, n)):
        np.testing.assert_allclose(L @ eval_xk(basis(n, k), x), kron_power(x, k), atol=1e-12)


def test_L_orthonormal_columns_n3_k2():
    L = build_L(3, 2).matrix.toarray()
    np.testing.assert_allclose(L.T @ L, np.eye(6), atol=1e-15)


def test_L_cap():
    with pytest.raises(ResourceCapError):
        build_L(10, 7)


def test_K2_matches_display():
    r23 = math.sqrt(2 / 3)
    expected = np.array([[1, 0, 0, 0, 0, 0],
                         [0, 1 / SQ3, r23, 0, 0, 0],
                         [0, 0, 0, r23, 1 / SQ3, 0],
                         [0, 0, 0, 0, 0, 1]])
    np.testing.assert_allclose(build_K(2, 2, 1).matrix.toarray(), expected, atol=1e-15)


@pytest.mark.parametrize("n,i,j", [(3, 2, 2), (2, 3, 1), (3, 1, 3), (2, 0, 3), (4, 2, 1)])
def test_K_reduces_products(rng, n, i, j):
    K = build_K(n, i, j).matrix
    for x in rng.normal(size=(100, n)):
        lhs = np.kron(eval_xk(basis(n, i), x), eval_xk(basis(n, j), x))
        np.testing.assert_allclose(lhs, K.T @ eval_xk(basis(n, i + j), x), rtol=1e-11, atol=1e-12)


@pytest.mark.parametrize("n,k", [(2, 5), (3, 6), (4, 3)])
def test_K_k_has_orthonormal_rows(n, k):
    K = build_K(n, k, 1).matrix
    np.testing.assert_allclose((K @ K.T).toarray(), np.eye(n_monomials(n, k + 1)), atol=1e-14)


def test_K_rejects_empty_product():
    with pytest.raises(InputError):
        build_K(2, 0, 0)


def test_vec_abc_identity(rng):
    A, B, C = (rng.normal(size=(3, 3)) for _ in range(3))
    np.testing.assert_allclose(vec(A @ B @ C), np.kron(C.T, A) @ vec(B), atol=1e-12)


def test_vec_unvec_roundtrip(rng):
    a = rng.normal(size=(2, 5))
    np.testing.assert_array_equal(unvec(vec(a), 2, 5), a)
    with pytest.raises(InputError):
        unvec(np.zeros(7), 2, 5)
    with pytest.raises(InputError):
        vec(np.zeros(3))


def test_reduced_tensor_symmetry_example():
    # P_2 = [[a, sqrt2 b, c], [b, sqrt2 c, d]] for p_2 = [a, sqrt3 b, sqrt3 c, d]
    a, b, c, d = 0.3, -1.1, 0.7, 2.0
    p = ReducedTensor.from_p(2, 2, [a, SQ3 * b, SQ3 * c, d])
    np.testing.assert_allclose(p.matrix, [[a, SQ2 * b, c], [b, SQ2 * c, d]], atol=1e-15)
    assert p.symmetric_flag


def test_symmetry_defect_and_projection(rng):
    raw = ReducedTensor(3, 2, rng.normal(size=(3, 6)))
    assert raw.symmetry_defect > 1e-3
    sym = raw.symmetrized()
    assert sym.symmetry_defect < 1e-14
    # the symmetric part defines an exact gradient: x^T P x^2 / 3 has gradient P x^2
    x, h = rng.normal(size=3), 1e-6
    V = lambda z: z @ sym.apply(z) / 3
    grad = np.array([(V(x + h * e) - V(x - h * e)) / (2 * h) for e in np.eye(3)])
    np.testing.assert_allclose(grad, sym.apply(x), rtol=1e-6)


def test_reduced_tensor_shape_check():
    with pytest.raises(InputError):
        ReducedTensor(2, 2, np.zeros((2, 4)))
