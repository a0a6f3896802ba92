import numpy as np
import pytest

from chamber_solver.efd_catalog import (
    ConstraintSpec,
    Direction,
    build_catalog,
    circuit_size,
    feasible_at,
)

from .conftest import all_points


def test_unconstrained_order():
    cat = build_catalog(ConstraintSpec.unconstrained(), 3)
    assert [str(d) for d in cat] == ["+e0", "-e0", "+e1", "-e1", "+e2", "-e2"]


def test_cardinality_order_and_size():
    cat = build_catalog(ConstraintSpec.cardinality(2), 4)
    assert len(cat) == 12
    assert str(cat[0]) == "+e0-e1"
    assert str(cat[3]) == "+e1-e0"
    assert str(cat[-1]) == "+e3-e2"


@pytest.mark.parametrize("n, K", [(2, 0), (3, 3), (3, -1)])
def test_cardinality_rejects_bad_k(n, K):
    with pytest.raises(ValueError):
        build_catalog(ConstraintSpec.cardinality(K), n)


def test_catalog_needs_two_variables():
    with pytest.raises(ValueError):
        build_catalog(ConstraintSpec.unconstrained(), 1)


def test_direction_vector_and_support():
    d = Direction.swap(2, 0)
    np.testing.assert_array_equal(d.vector(3), [-1, 0, 1])
    assert d.support == {0, 2}
    assert circuit_size(d) == 2
    assert circuit_size(Direction.flip(1, -1)) == 1
    with pytest.raises(ValueError):
        Direction(plus={1}, minus={1})


@pytest.mark.parametrize("K", [None, 1, 2])
def test_feasible_mask_matches_pointwise_check(K):
    n = 4
    cons = ConstraintSpec.unconstrained() if K is None else ConstraintSpec.cardinality(K)
    cat = build_catalog(cons, n)
    X = all_points(n, K)
    mask = cat.feasible_mask(X)
    for a, x in enumerate(X):
        assert list(mask[a]) == [feasible_at(d, x, cons) for d in cat]


def test_every_point_has_expected_move_count():
    # n flips from any point; K (n-K) swaps from any K-subset
    n, K = 5, 2
    assert np.all(build_catalog(ConstraintSpec.unconstrained(), n).feasible_mask(all_points(n)).sum(1) == n)
    cat = build_catalog(ConstraintSpec.cardinality(K), n)
    assert np.all(cat.feasible_mask(all_points(n, K)).sum(1) == K * (n - K))


def test_constraint_spec_roundtrip_and_feasibility():
    c = ConstraintSpec.cardinality(2)
    assert c.to_dict() == {"type": "cardinality", "k": 2}
    assert c.rank == 1 and ConstraintSpec.unconstrained().rank == 0
    assert c.is_feasible([1, 0, 1]) and not c.is_feasible([1, 1, 1])
    assert not ConstraintSpec.unconstrained().is_feasible([0, 2])
    with pytest.raises(ValueError):
        ConstraintSpec("none", 3)


def test_feasibility_examples():
    none, one = ConstraintSpec.unconstrained(), ConstraintSpec.cardinality(1)
    assert feasible_at(Direction.flip(0, +1), [0, 1], none)
    assert not feasible_at(Direction.flip(0, +1), [1, 1], none)
    assert feasible_at(Direction.swap(0, 1), [0, 1, 0], one)
    assert not feasible_at(Direction.swap(1, 0), [0, 1, 0], one)
    assert circuit_size(Direction()) == 0
    assert len(build_catalog(ConstraintSpec.cardinality(1), 3)) == 6
