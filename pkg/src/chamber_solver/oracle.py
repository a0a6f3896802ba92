"""Exhaustive ground truth: full enumeration of the feasible set.

Deliberately free of cleverness. Values are computed for every feasible point
and neighbours are found by bit arithmetic on integer keys.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .efd_catalog import ConstraintKind
from .points import bits_of, check_guard, count_feasible, feasible_chunks, tie_window

DEFAULT_EPSILON = 1e-9


@dataclass
class OracleReport:
    best_x: np.ndarray
    best_value: float
    num_feasible: int
    all_stable: list = field(default_factory=list)


def _table(instance, value_fn, max_n: int):
    n = instance.n
    check_guard(instance.constraint, n, max_n)
    keys, vals = [], []
    for k, X in feasible_chunks(instance.constraint, n):
        keys.append(k)
        vals.append(np.asarray(value_fn(X), dtype=float).reshape(-1))
    return np.concatenate(keys), np.concatenate(vals)


def _best(keys, vals, n: int):
    best = float(np.max(vals))
    close = vals >= best - tie_window(best)
    # a smaller key is a lexicographically smaller bitstring
    k = int(np.min(keys[close]))
    j = int(np.flatnonzero(keys == k)[0])
    return bits_of([k], n)[0], float(vals[j])


def _stable_keys(instance, keys, vals, epsilon: float):
    n = instance.n
    order = np.argsort(keys)
    keys, vals = keys[order], vals[order]
    stable = np.ones(keys.shape[0], dtype=bool)
    bit = [np.int64(1) << np.int64(n - 1 - i) for i in range(n)]
    if instance.constraint.kind is ConstraintKind.UNCONSTRAINED:
        # keys are exactly 0 .. 2^n - 1
        for i in range(n):
            nb = keys ^ bit[i]
            stable &= vals[nb] - vals <= epsilon
    else:
        for i in range(n):
            for j in range(n):
                if i == j:
                    continue
                can = ((keys & bit[i]) == 0) & ((keys & bit[j]) != 0)
                nb = keys[can] + bit[i] - bit[j]
                idx = np.searchsorted(keys, nb)
                gain = vals[idx] - vals[can]
                sel = np.flatnonzero(can)
                stable[sel[gain > epsilon]] = False
    return keys[stable]


def brute_force(instance, max_n: int = 24, epsilon: float | None = None,
                with_stable: bool = False) -> OracleReport:
    """Exact maximum over the feasible set, lexicographically smallest on ties."""
    keys, vals = _table(instance, instance.value, max_n)
    x, v = _best(keys, vals, instance.n)
    stable = []
    if with_stable:
        eps = DEFAULT_EPSILON if epsilon is None else epsilon
        stable = list(bits_of(_stable_keys(instance, keys, vals, eps), instance.n))
    return OracleReport(x, v, count_feasible(instance.constraint, instance.n), stable)


def brute_force_ratio(fubo, max_n: int = 24) -> OracleReport:
    """Exact maximum of ``N/D``; a non-positive denominator is a hard error."""
    n = fubo.n
    check_guard(fubo.constraint, n, max_n)
    keys, vals = [], []
    for k, X in feasible_chunks(fubo.constraint, n):
        N = np.asarray(fubo.numerator.value(X), dtype=float).reshape(-1)
        D = np.asarray(fubo.denominator.value(X), dtype=float).reshape(-1)
        bad = np.flatnonzero(D <= 0)
        if bad.size:
            raise ValueError(f"denominator not positive on F: D={D[bad[0]]:.6g} at x={X[bad[0]].tolist()}")
        keys.append(k)
        vals.append(N / D)
    keys, vals = np.concatenate(keys), np.concatenate(vals)
    x, v = _best(keys, vals, n)
    return OracleReport(x, v, count_feasible(fubo.constraint, n))


def enumerate_stable(instance, epsilon: float = DEFAULT_EPSILON, max_n: int = 24) -> list:
    """Every feasible point with no elementary move gaining more than epsilon, lexicographic."""
    keys, vals = _table(instance, instance.value, max_n)
    return list(bits_of(_stable_keys(instance, keys, vals, epsilon), instance.n))
