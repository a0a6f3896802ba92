import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from chamber_solver.efd_catalog import ConstraintSpec, Direction, build_catalog
from chamber_solver.hq_core import (
    DimensionMismatch,
    FeatureMatrix,
    GainPredicate,
    HQForm,
    catalog_predicates,
    evaluate,
    evaluate_features,
    gain_coefficients,
    gain_direct,
    gradient,
    lift,
)

from .conftest import all_points

P2L_Q = [[0.0, 1.0], [1.0, 0.0]]


def test_evaluate_features_sums_selected_columns():
    P = FeatureMatrix([[1, 2, 3], [4, 5, 6]])
    np.testing.assert_array_equal(evaluate_features(P, [1, 0, 1]), [4, 10])
    np.testing.assert_array_equal(evaluate_features(P, [0, 0, 0]), [0, 0])


def test_evaluate_features_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        evaluate_features(FeatureMatrix([[1, 2, 3]]), [1, 0])


@pytest.mark.parametrize("x, expected", [([1, 1], 1.0), ([1, 0], 0.0), ([0, 1], 0.0), ([0, 0], 0.0)])
def test_evaluate_p2l_product(x, expected):
    hq = HQForm(P2L_Q, [0, 0])
    assert evaluate(hq, FeatureMatrix([[1, 0], [0, 1]]), x) == expected


def test_hqform_symmetrizes():
    hq = HQForm([[1.0, 2.0], [0.0, 1.0]], [0, 0])
    np.testing.assert_array_equal(hq.Q, [[1.0, 1.0], [1.0, 1.0]])


def test_hqform_rejects_bad_shapes():
    with pytest.raises(DimensionMismatch):
        HQForm([[1.0, 0.0]], [0.0])
    with pytest.raises(DimensionMismatch):
        HQForm(np.eye(2), [0.0, 0.0, 0.0])


def test_lift_matches_evaluate(rng):
    r, n = 3, 6
    Q = rng.normal(size=(r, r))
    hq = HQForm(Q, rng.normal(size=r), 1.25)
    P = FeatureMatrix(rng.normal(size=(r, n)))
    Qt = lift(hq)
    for x in all_points(n):
        psi = P.evaluate(x)
        assert Qt.value(psi) == pytest.approx(evaluate(hq, P, x), abs=1e-12)


def test_lift_block_layout():
    hq = HQForm(P2L_Q, [0.5, -1.0], 3.0)
    np.testing.assert_array_equal(lift(hq).Qtilde, [[0, 1, 0.5], [1, 0, -1], [0.5, -1, 6]])


def test_gradient_matches_central_differences(rng):
    r, n = 2, 5
    hq = HQForm(rng.normal(size=(r, r)), rng.normal(size=r), 0.3)
    P = FeatureMatrix(rng.normal(size=(r, n)))
    x = rng.uniform(size=n)
    h = 1e-6
    fd = np.array([(hq.value(P.P @ (x + h * e)) - hq.value(P.P @ (x - h * e))) / (2 * h)
                   for e in np.eye(n)])
    np.testing.assert_allclose(gradient(hq, P, x), fd, atol=1e-7)


def test_gradient_of_p2l_at_ones():
    # d/dx (a.x)(b.x) = a (b.x) + b (a.x)
    a, b = np.array([1.0, 2.0, 0.0]), np.array([0.0, 1.0, 3.0])
    g = gradient(HQForm(P2L_Q, [0, 0]), FeatureMatrix([a, b]), np.ones(3))
    np.testing.assert_allclose(g, a * b.sum() + b * a.sum())


def test_gain_coefficients_p2l_example():
    # a=(1,0), b=(0,1): flipping x_1 on gives w = Q e_1 = (0, 1), c = 0
    hq = HQForm(P2L_Q, [0, 0])
    P = FeatureMatrix([[1, 0], [0, 1]])
    g = gain_coefficients(hq, P, Direction.flip(0, +1))
    np.testing.assert_array_equal(g.w, [0, 1])
    assert g.c == 0.0


def test_gain_coefficients_keep_second_order_term():
    # f = (s)^2 with s = x_0: flipping on at x=0 gains 1 = c
    hq = HQForm([[2.0]], [0.0])
    P = FeatureMatrix([[1, 0]])
    g = gain_coefficients(hq, P, Direction.flip(0, +1))
    assert g.c == pytest.approx(1.0)
    assert gain_direct(hq, P, np.array([0, 0]), Direction.flip(0, +1)) == pytest.approx(1.0)


@given(st.integers(0, 2**31 - 1), st.integers(2, 6), st.integers(1, 3))
def test_affine_gain_identity_everywhere(seed, n, r):
    # exact on all of {0,1}^n, feasible or not, for every move that stays in the cube
    rng = np.random.default_rng(seed)
    hq = HQForm(rng.normal(size=(r, r)), rng.normal(size=r), rng.normal())
    P = FeatureMatrix(rng.normal(size=(r, n)))
    for cons in (ConstraintSpec.unconstrained(), ConstraintSpec.cardinality(1)):
        cat = build_catalog(cons, n)
        preds = catalog_predicates(hq, P, cat)
        for x in all_points(n):
            for d, pr in zip(cat, preds):
                y = x + d.vector(n)
                if np.all((y == 0) | (y == 1)):
                    assert abs(gain_direct(hq, P, x, d) - pr.value(P.evaluate(x))) <= 1e-10


def test_gain_direct_rejects_leaving_cube():
    hq = HQForm(P2L_Q, [0, 0])
    P = FeatureMatrix([[1, 0], [0, 1]])
    with pytest.raises(ValueError, match="hypercube"):
        gain_direct(hq, P, np.array([1, 0]), Direction.flip(0, +1))


def test_predicates_vectorized_match_single():
    rng = np.random.default_rng(3)
    hq = HQForm(rng.normal(size=(2, 2)), rng.normal(size=2))
    P = FeatureMatrix(rng.normal(size=(2, 4)))
    cat = build_catalog(ConstraintSpec.cardinality(2), 4)
    W, c = P.predicates(hq, cat.matrix)
    for k, d in enumerate(cat):
        g = gain_coefficients(hq, P, d)
        np.testing.assert_allclose(W[k], g.w)
        assert c[k] == pytest.approx(g.c)


def test_gain_predicate_homogeneous():
    g = GainPredicate([1.0, -2.0], 0.5, 3)
    np.testing.assert_array_equal(g.homogeneous, [1.0, -2.0, 0.5])
    assert g.value([2.0, 1.0]) == 0.5


@pytest.mark.parametrize("K", [None, 1, 2, 3])
def test_feature_ranges_exact(K):
    rng = np.random.default_rng(11)
    P = FeatureMatrix(rng.integers(-4, 5, size=(3, 5)))
    cons = ConstraintSpec.unconstrained() if K is None else ConstraintSpec.cardinality(K)
    psi = P.evaluate(all_points(5, K))
    lo, hi = P.feature_ranges(cons)
    np.testing.assert_allclose(lo, psi.min(axis=0))
    np.testing.assert_allclose(hi, psi.max(axis=0))
    assert P.feature_bound() >= np.abs(P.evaluate(all_points(5))).max()


def test_p2l_form_on_feature_vector():
    assert HQForm(P2L_Q, [0, 0]).value([2.0, 3.0]) == 6.0


def test_lift_corner_is_twice_constant():
    np.testing.assert_array_equal(lift(HQForm([[0.0]], [0.0], 5.0)).Qtilde, [[0, 0], [0, 10]])


def test_linear_objective_has_constant_gradient():
    hq = HQForm(np.zeros((2, 2)), [1.0, 0.0])
    P = FeatureMatrix(np.eye(2))
    for x in ([0, 0], [0.3, -2.0]):
        np.testing.assert_array_equal(gradient(hq, P, x), [1.0, 0.0])


def test_null_move_and_constant_objective():
    rng = np.random.default_rng(0)
    hq = HQForm(rng.normal(size=(2, 2)), rng.normal(size=2))
    P = FeatureMatrix(rng.normal(size=(2, 3)))
    g = gain_coefficients(hq, P, np.zeros(3, dtype=int))
    assert g.c == 0.0 and not np.any(g.w)
    flat = HQForm(np.zeros((2, 2)), [0, 0], 4.0)
    assert gain_direct(flat, P, np.array([0, 1, 0]), Direction.flip(0, +1)) == 0.0


def test_p2l_direct_gain_example():
    hq = HQForm(P2L_Q, [0, 0])
    P = FeatureMatrix([[1, 0], [0, 1]])
    assert gain_direct(hq, P, np.array([0, 1]), Direction.flip(0, +1)) == 1.0
