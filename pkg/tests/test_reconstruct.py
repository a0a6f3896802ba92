import itertools

import numpy as np
import pytest

from chamber_solver.arrangement import Chamber, build_arrangement, enumerate_chambers, orientation_map
from chamber_solver.efd_catalog import ConstraintSpec, build_catalog
from chamber_solver.hq_core import FeatureMatrix, HQForm, catalog_predicates
from chamber_solver.reconstruct import (
    AmbiguityExceeded,
    bits_from_signs,
    blocking_check,
    readout,
    readout_topk,
    supports_from_tournament,
    swap_index,
    tournament,
    unconstrained_readout,
)


def score_signs(kappa):
    """Swap-gain signs for a pure score model: gain(i in, j out) = kappa_i - kappa_j."""
    n = len(kappa)
    return np.array([np.sign(kappa[i] - kappa[j]) for i in range(n) for j in range(n) if j != i], dtype=np.int8)


def brute_closed_sets(T, K):
    n = T.shape[0]
    out = []
    for S in itertools.combinations(range(n), K):
        if all(T[i, j] <= 0 for i in range(n) if i not in S for j in S):
            out.append(frozenset(S))
    return out


def test_swap_index_matches_catalog():
    n = 5
    cat = build_catalog(ConstraintSpec.cardinality(2), n)
    for k, d in enumerate(cat):
        (i,), (j,) = d.plus, d.minus
        assert swap_index(i, j, n) == k


def test_topk_of_scores():
    dsigns = score_signs([5.0, 1.0, 3.0])
    assert supports_from_tournament(tournament(dsigns, 3), 2) == [frozenset({0, 2})]


def test_three_cycle_has_no_closed_pair_but_full_set():
    # 0 beats 1, 1 beats 2, 2 beats 0
    T = np.array([[0, 1, -1], [-1, 0, 1], [1, -1, 0]], dtype=np.int8)
    assert supports_from_tournament(T, 1) == []
    assert supports_from_tournament(T, 2) == []
    assert supports_from_tournament(T, 3) == [frozenset({0, 1, 2})]


def test_ties_give_every_choice():
    T = np.zeros((4, 4), dtype=np.int8)
    got = sorted(sorted(S) for S in supports_from_tournament(T, 2))
    assert got == [list(S) for S in itertools.combinations(range(4), 2)]


@pytest.mark.parametrize("seed", range(30))
def test_closed_sets_match_brute_force(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(3, 8))
    K = int(rng.integers(1, n))
    A = rng.choice([-1, 0, 1], size=(n, n))
    T = np.triu(A, 1)
    T = (T - T.T).astype(np.int8)
    assert set(supports_from_tournament(T, K)) == set(brute_closed_sets(T, K))


def test_tournament_cap():
    with pytest.raises(AmbiguityExceeded, match="ambiguity explosion"):
        supports_from_tournament(np.zeros((10, 10), dtype=np.int8), 5, ambiguity_cap=3)


def test_bits_readout():
    # bit 0: adding gains, so x0 = 1; bit 1: dropping gains, so x1 = 0; bit 2: free
    s = np.array([1, -1, -1, 1, -1, -1], dtype=np.int8)
    ro = unconstrained_readout(s, 3)
    assert ro.forced_one == {0} and ro.forced_zero == {1} and ro.ambiguous == {2}
    got = [x.tolist() for x in bits_from_signs(s, 3)]
    assert got == [[1, 0, 0], [1, 0, 1]]
    assert bits_from_signs(np.array([1, 1, -1, -1]), 2) == []
    with pytest.raises(AmbiguityExceeded):
        bits_from_signs(np.zeros(8, dtype=np.int8), 4, ambiguity_cap=3)


def test_readouts_block_every_move():
    rng = np.random.default_rng(4)
    n, K = 5, 2
    hq = HQForm(rng.normal(size=(2, 2)), rng.normal(size=2))
    P = FeatureMatrix(rng.normal(size=(2, n)))
    cat = build_catalog(ConstraintSpec.cardinality(K), n)
    hs, fixed = build_arrangement(catalog_predicates(hq, P, cat))
    om = orientation_map(hs, fixed, len(cat))
    for ch in enumerate_chambers(hs, box=20.0):
        for x in readout_topk(ch, cat, om):
            assert x.sum() == K
            assert blocking_check(x, ch, cat, om)
            assert blocking_check(set(np.flatnonzero(x).tolist()), ch, cat, om)


def test_blocking_check_detects_improving_move():
    cat = build_catalog(ConstraintSpec.unconstrained(), 2)
    hs, fixed = build_arrangement([])
    om = orientation_map(hs, {0: 1, 1: -1, 2: -1, 3: -1}, 4)
    ch = Chamber((), np.zeros(0), 1.0)
    assert not blocking_check([0, 0], ch, cat, om)  # +e0 gains
    assert blocking_check([1, 0], ch, cat, om)
    assert [x.tolist() for x in readout(om.direction_signs(()), cat)] == [[1, 0], [1, 1]]
