"""Feasible-point enumeration and the lexicographic tie-break shared by solver and oracle."""

from __future__ import annotations

import itertools
from math import comb

import numpy as np

from .efd_catalog import ConstraintKind, ConstraintSpec

TIE_RTOL = 1e-12


class SizeGuardExceeded(RuntimeError):
    pass


def count_feasible(constraint: ConstraintSpec, n: int) -> int:
    if constraint.kind is ConstraintKind.CARDINALITY:
        return comb(n, constraint.K)
    return 1 << n


def check_guard(constraint: ConstraintSpec, n: int, max_n: int = 24) -> None:
    if constraint.kind is ConstraintKind.CARDINALITY:
        if comb(n, constraint.K) > 1 << max_n:
            raise SizeGuardExceeded(
                f"C({n},{constraint.K}) feasible points exceed the enumeration guard 2^{max_n}")
    elif n > max_n:
        raise SizeGuardExceeded(f"n={n} exceeds the enumeration guard n <= {max_n}")


def bits_of(keys, n: int) -> np.ndarray:
    """Row ``a`` holds the bits of ``keys[a]`` with ``x_0`` as the most significant bit."""
    keys = np.asarray(keys, dtype=np.int64)
    shifts = np.arange(n - 1, -1, -1, dtype=np.int64)
    return ((keys[:, None] >> shifts) & 1).astype(np.int8)


def keys_of(X) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, dtype=np.int64))
    n = X.shape[1]
    return X @ (np.int64(1) << np.arange(n - 1, -1, -1, dtype=np.int64))


def feasible_chunks(constraint: ConstraintSpec, n: int, chunk: int = 1 << 15):
    """Yield ``(keys, X)`` blocks covering every feasible point exactly once."""
    if constraint.kind is ConstraintKind.CARDINALITY:
        it = itertools.combinations(range(n), constraint.K)
        weights = [1 << (n - 1 - i) for i in range(n)]
        while True:
            block = list(itertools.islice(it, chunk))
            if not block:
                return
            keys = np.array([sum(weights[i] for i in S) for S in block], dtype=np.int64)
            yield keys, bits_of(keys, n)
    else:
        total = 1 << n
        for start in range(0, total, chunk):
            keys = np.arange(start, min(total, start + chunk), dtype=np.int64)
            yield keys, bits_of(keys, n)


def lex_order(X) -> np.ndarray:
    """Row indices sorting 0/1 rows lexicographically, ``x_0`` compared first."""
    X = np.atleast_2d(X)
    return np.lexsort(X.T[::-1])


def tie_window(best: float) -> float:
    return TIE_RTOL * max(1.0, abs(best))


def pick_best(values, X) -> int:
    """Index of the lexicographically smallest row among the near-maximal values."""
    values = np.asarray(values, dtype=float)
    best = float(np.max(values))
    close = np.flatnonzero(values >= best - tie_window(best))
    sub = np.atleast_2d(X)[close]
    return int(close[lex_order(sub)[0]])


def first_feasible(constraint: ConstraintSpec, n: int) -> np.ndarray:
    """The lexicographically smallest feasible point."""
    x = np.zeros(n, dtype=np.int8)
    if constraint.kind is ConstraintKind.CARDINALITY:
        x[n - constraint.K:] = 1
    return x
