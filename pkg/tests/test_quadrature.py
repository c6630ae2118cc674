import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.interpolate import lagrange

from wavecell.quadrature import (ShapeSet, gauss_legendre_rule, gll_rule, lagrange_eval,
                                 lagrange_matrices, tensor_rule, tensor_shape_eval)


def monomial_integral(k):
    return 0.0 if k % 2 else 2.0 / (k + 1)


@pytest.mark.parametrize("p", range(1, 11))
def test_gll_exact_to_degree_2p_minus_1(p):
    r = gll_rule(p)
    for k in range(2 * p):
        assert r.weights @ r.points**k == pytest.approx(monomial_integral(k), abs=1e-13)


@pytest.mark.parametrize("n", range(1, 11))
def test_gauss_exact_to_degree_2n_minus_1(n):
    r = gauss_legendre_rule(n)
    for k in range(2 * n):
        assert r.weights @ r.points**k == pytest.approx(monomial_integral(k), abs=1e-13)


def test_gll_known_values():
    # p = 2: Simpson
    r = gll_rule(2)
    np.testing.assert_allclose(r.points, [-1, 0, 1], atol=1e-15)
    np.testing.assert_allclose(r.weights, [1 / 3, 4 / 3, 1 / 3], rtol=1e-14)
    # p = 4 interior nodes are +-sqrt(3/7)
    r = gll_rule(4)
    np.testing.assert_allclose(r.points[1], -np.sqrt(3 / 7), rtol=1e-14)
    np.testing.assert_allclose(r.weights[[0, 2]], [0.1, 32 / 45], rtol=1e-13)


@pytest.mark.parametrize("p", [0, -1])
def test_gll_rejects_low_order(p):
    with pytest.raises(ValueError):
        gll_rule(p)


@pytest.mark.parametrize("p", [1, 3, 6])
def test_gll_nodes_symmetric_sorted(p):
    x = gll_rule(p).points
    assert np.all(np.diff(x) > 0)
    np.testing.assert_allclose(x, -x[::-1], atol=1e-15)
    assert x[0] == -1.0 and x[-1] == 1.0


@given(st.integers(1, 7), st.floats(-1, 1))
def test_lagrange_partition_of_unity(p, xi):
    V, D = lagrange_matrices(gll_rule(p).points, np.array([xi]))
    assert V.sum() == pytest.approx(1.0, abs=1e-12)
    assert D.sum() == pytest.approx(0.0, abs=1e-9)


@pytest.mark.parametrize("p", [1, 2, 4])
def test_lagrange_matches_scipy_lagrange(p):
    nodes = gll_rule(p).points
    x = np.linspace(-1, 1, 17)
    V, D = lagrange_matrices(nodes, x)
    for i in range(p + 1):
        poly = lagrange(nodes, np.eye(p + 1)[i])
        np.testing.assert_allclose(V[:, i], poly(x), atol=1e-10)
        np.testing.assert_allclose(D[:, i], poly.deriv()(x), atol=1e-8)


def test_lagrange_eval_kronecker():
    shape = ShapeSet(3, 1)
    for i, xi in enumerate(shape.nodes):
        for j in range(4):
            assert lagrange_eval(shape, j, xi)[0] == pytest.approx(float(i == j), abs=1e-14)


def test_lagrange_eval_range_check():
    with pytest.raises(IndexError):
        lagrange_eval(ShapeSet(2, 1), 3, 0.0)


def test_tensor_shape_x_fastest():
    shape = ShapeSet(1, 2)
    vals, grads = tensor_shape_eval(shape, np.array([1.0, -1.0]))
    # node (x=+1, y=-1) is index 1 under x-fastest ordering
    np.testing.assert_allclose(vals, [0, 1, 0, 0], atol=1e-15)
    assert grads.shape == (4, 2)


@pytest.mark.parametrize("dim", [1, 2, 3])
def test_tensor_rule_integrates_product_monomials(dim):
    pts, w = tensor_rule(gauss_legendre_rule(3), dim)
    assert len(w) == 3**dim
    f = np.prod(pts**4, axis=1)
    assert w @ f == pytest.approx((2 / 5) ** dim, rel=1e-13)
