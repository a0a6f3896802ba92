import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from chamber_solver.efd_catalog import ConstraintSpec
from chamber_solver.hq_core import FeatureMatrix, HQForm
from chamber_solver.instances import (
    build_covariance,
    build_linear_fractional,
    build_p2l,
    build_pearson,
    build_pubo_cp,
    build_qubo_factors,
)
from chamber_solver.oracle import brute_force, brute_force_ratio, enumerate_stable
from chamber_solver.reconstruct import improving_mask
from chamber_solver.solver import (
    BEST_FOUND,
    ORACLE,
    PROVED,
    FuboInstance,
    Instance,
    SolveOptions,
    local_search_polish,
    solve,
    solve_fubo,
    stability_check,
)

from .conftest import all_points


def test_p2l_three_variables_tie_break():
    sol = solve(build_p2l([1, 0, 0], [0, 1, 0]))
    assert sol.value == 1.0
    assert sol.x.tolist() == [1, 1, 0]
    assert sol.flag == PROVED and sol.stats["ambiguous_skips"] == 0


def test_covariance_small():
    sol = solve(build_covariance([1, 2, 3], [1, 2, 3], 2))
    assert sol.value == pytest.approx(1.0)
    assert sol.x.tolist() == [1, 0, 1]


@pytest.mark.parametrize("cons", [ConstraintSpec.unconstrained(), ConstraintSpec.cardinality(2)])
def test_constant_objective(cons):
    inst = Instance(HQForm(np.zeros((1, 1)), [0.0], 2.5), FeatureMatrix(np.zeros((1, 4))), cons)
    sol = solve(inst)
    assert sol.value == 2.5
    assert sol.x.tolist() == ([0, 0, 0, 0] if cons.K is None else [0, 0, 1, 1])
    assert stability_check(sol.x, inst)


@pytest.mark.parametrize("seed", range(12))
def test_matches_oracle_random(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(4, 9))
    if seed % 3 == 0:
        inst = build_p2l(rng.integers(-4, 5, n), rng.integers(-4, 5, n))
    elif seed % 3 == 1:
        inst = build_qubo_factors(rng.normal(size=(n, 2)), [1.0, -1.5], ConstraintSpec.cardinality(n // 2))
    else:
        inst = build_pubo_cp([{"degree": 3, "weight": -1.0, "u": rng.integers(-2, 3, n)},
                              {"degree": 1, "weight": 1.0, "u": rng.normal(size=n)}])
    sol = solve(inst)
    ref = brute_force(inst, with_stable=True)
    assert abs(sol.value - ref.best_value) <= 1e-9 * (1 + abs(ref.best_value))
    assert sol.x.tolist() == ref.best_x.tolist()
    got = {tuple(x) for x in sol.candidates}
    assert got == {tuple(x) for x in ref.all_stable}


def test_chamber_accounting_and_stats():
    inst = build_covariance(np.arange(6.0), np.arange(6.0) ** 2, 3)
    sol = solve(inst)
    st_ = sol.stats
    assert st_["m"] == 30
    assert st_["chambers"] <= st_["zaslavsky_bound"]
    assert st_["arrangement_dim"] <= inst.r


def test_threads_do_not_change_result(monkeypatch):
    rng = np.random.default_rng(3)
    inst = build_p2l(rng.normal(size=8), rng.normal(size=8))
    base = solve(inst)
    multi = solve(inst, SolveOptions(threads=3))
    monkeypatch.setenv("CHAMBER_SOLVER_THREADS", "2")
    env = solve(inst)
    assert SolveOptions().workers() == 2
    for s in (multi, env):
        assert s.x.tolist() == base.x.tolist()
        np.testing.assert_array_equal(s.candidates, base.candidates)


def test_oracle_mode_above_dimension_cap():
    rng = np.random.default_rng(0)
    inst = build_qubo_factors(rng.normal(size=(6, 3)), [1.0, -1.0, 2.0])
    sol = solve(inst, SolveOptions(dimension_cap=2))
    assert sol.flag == ORACLE
    assert sol.value == pytest.approx(brute_force(inst).best_value)


def test_ambiguity_cap_downgrades_flag():
    # f = sum x_i has every chamber pinning each bit, but a zero objective leaves all bits free
    inst = Instance(HQForm(np.zeros((1, 1)), [0.0]), FeatureMatrix(np.zeros((1, 5))),
                    ConstraintSpec.unconstrained())
    sol = solve(inst, SolveOptions(ambiguity_cap=2))
    assert sol.flag == BEST_FOUND
    assert sol.stats["ambiguous_skips"] > 0
    assert stability_check(sol.x, inst)


def test_stability_check_examples():
    inst = build_p2l([1, 0], [0, 1])
    assert stability_check(np.array([1, 1]), inst)
    # (0, 1) is stable too; (1, 0) has no improving flip either, (0, 0) neither
    ones = Instance(HQForm(np.zeros((1, 1)), [1.0]), FeatureMatrix(np.ones((1, 4))),
                    ConstraintSpec.unconstrained())
    assert not stability_check(np.zeros(4, dtype=np.int8), ones)


def test_local_search_examples():
    ones = Instance(HQForm(np.zeros((1, 1)), [1.0]), FeatureMatrix(np.ones((1, 5))),
                    ConstraintSpec.unconstrained())
    assert local_search_polish(np.zeros(5, dtype=np.int8), ones).tolist() == [1] * 5
    inst = build_covariance([1, 2, 3], [1, 2, 3], 2)
    assert local_search_polish(np.array([1, 0, 1]), inst).tolist() == [1, 0, 1]


@given(st.integers(0, 10**6))
def test_local_search_returns_stable_points(seed):
    rng = np.random.default_rng(seed)
    n = 7
    inst = build_qubo_factors(rng.normal(size=(n, 2)), [1.0, -1.0], ConstraintSpec.cardinality(3))
    x0 = np.zeros(n, dtype=np.int8)
    x0[rng.choice(n, 3, replace=False)] = 1
    x = local_search_polish(x0, inst)
    assert x.sum() == 3 and stability_check(x, inst)


def test_random_point_with_improving_move_is_unstable():
    rng = np.random.default_rng(9)
    inst = build_p2l(rng.normal(size=6), rng.normal(size=6))
    X = all_points(6)
    mask = improving_mask(X, inst).any(axis=1)
    for x, improvable in zip(X, mask):
        assert stability_check(x, inst) == (not improvable)


def test_fubo_linear_example():
    lf = build_linear_fractional([1, 0], 1.0, [0, 1], 1.0)
    sol = solve_fubo(lf)
    assert sol.value == 2.0 and sol.x.tolist() == [1, 0]
    assert all(b > a for a, b in zip(sol.trace, sol.trace[1:]))


def test_fubo_identical_parts():
    lf = build_linear_fractional([1, 2, 0], 1.0, [1, 2, 0], 1.0)
    sol = solve_fubo(lf)
    assert sol.value == 1.0 and sol.stats["iterations"] == 1


def test_fubo_pearson_collinear():
    sol = solve_fubo(build_pearson([1, 2, 3, 4], [1, 2, 3, 5], 3))
    assert sol.value == pytest.approx(1.0)
    assert sol.x.tolist() == [1, 1, 1, 0]


@pytest.mark.parametrize("seed", range(6))
def test_fubo_matches_ratio_oracle(seed):
    rng = np.random.default_rng(seed)
    n = 8
    cons = ConstraintSpec.cardinality(3) if seed % 2 else ConstraintSpec.unconstrained()
    lf = build_linear_fractional(rng.normal(size=n), 1.0, rng.uniform(0, 2, n), 1.0, cons)
    sol = solve_fubo(lf)
    ref = brute_force_ratio(lf)
    assert sol.value == pytest.approx(ref.best_value, rel=1e-9)
    assert sol.flag == PROVED


def test_fubo_parametric_is_n_minus_lambda_d():
    rng = np.random.default_rng(2)
    pr = build_pearson(rng.normal(size=6), rng.normal(size=6), 3)
    X = all_points(6, 3)
    G = pr.parametric(0.3)
    np.testing.assert_allclose(G.value(X), pr.numerator.value(X) - 0.3 * pr.denominator.value(X),
                               atol=1e-9)


def test_fubo_constraint_mismatch_rejected():
    lf = build_linear_fractional([1, 0, 1], 1.0, [0, 1, 1], 1.0)
    other = build_linear_fractional([1, 0, 1], 1.0, [0, 1, 1], 1.0, ConstraintSpec.cardinality(1))
    with pytest.raises(ValueError):
        FuboInstance(lf.numerator, other.denominator)


def test_stable_candidates_subset_of_oracle_stable():
    inst = build_covariance([3, 1, 4, 1, 5, 9, 2], [2, 7, 1, 8, 2, 8, 1], 3)
    sol = solve(inst)
    stable = {tuple(x) for x in enumerate_stable(inst)}
    assert {tuple(x) for x in sol.candidates} == stable
