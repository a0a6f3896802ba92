"""Turn a chamber's sign pattern into candidate 0/1 points and filter them.

A chamber fixes the sign of every direction's gain. A point ``x`` is a
candidate for the chamber when every direction feasible at ``x`` has a
non-positive sign there; candidates are then checked against the objective
itself by :func:`self_consistency`.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .arrangement import Chamber, OrientationMap
from .efd_catalog import Catalog, ConstraintKind


class AmbiguityExceeded(RuntimeError):
    """A chamber admits more candidate points than the configured cap."""


@dataclass(frozen=True)
class ChamberReadout:
    forced_one: frozenset = frozenset()
    forced_zero: frozenset = frozenset()
    ambiguous: frozenset = frozenset()
    tournament: np.ndarray | None = None  # n x n signs of swap gains, cardinality only


def direction_signs(chamber, omap: OrientationMap) -> np.ndarray:
    """Per-direction gain signs; accepts a :class:`Chamber` or a raw sign vector."""
    signs = chamber.signs if isinstance(chamber, Chamber) else chamber
    return omap.direction_signs(signs)


def swap_index(i: int, j: int, n: int) -> int:
    """Catalog index of ``e_i - e_j`` in the lexicographic swap order."""
    return i * (n - 1) + (j if j < i else j - 1)


def unconstrained_readout(dsigns, n: int) -> ChamberReadout | None:
    """Bit classification, or ``None`` when some bit admits neither value."""
    s = np.asarray(dsigns).reshape(n, 2)
    zero_ok = s[:, 0] <= 0  # adding i does not improve
    one_ok = s[:, 1] <= 0  # dropping i does not improve
    if np.any(~zero_ok & ~one_ok):
        return None
    both = zero_ok & one_ok
    return ChamberReadout(
        forced_one=frozenset(np.flatnonzero(one_ok & ~both).tolist()),
        forced_zero=frozenset(np.flatnonzero(zero_ok & ~both).tolist()),
        ambiguous=frozenset(np.flatnonzero(both).tolist()),
    )


def bits_from_signs(dsigns, n: int, ambiguity_cap: int = 16) -> list[np.ndarray]:
    ro = unconstrained_readout(dsigns, n)
    if ro is None:
        return []
    amb = sorted(ro.ambiguous)
    if len(amb) > ambiguity_cap:
        raise AmbiguityExceeded(f"ambiguity explosion: {len(amb)} free bits exceed cap {ambiguity_cap}")
    base = np.zeros(n, dtype=np.int8)
    base[list(ro.forced_one)] = 1
    out = []
    for combo in itertools.product((0, 1), repeat=len(amb)):
        x = base.copy()
        x[amb] = combo
        out.append(x)
    return out


def tournament(dsigns, n: int) -> np.ndarray:
    """``T[i, j]`` is the sign of the swap gain bringing ``i`` in and ``j`` out."""
    s = np.asarray(dsigns, dtype=np.int8)
    T = np.zeros((n, n), dtype=np.int8)
    off = ~np.eye(n, dtype=bool)
    T[off] = s  # row-major order over i, then j != i, matches the catalog
    return T


def _closure(T: np.ndarray) -> tuple[list[int], list[int]]:
    """Bitmask ancestors (transitive beaters) and descendants per index."""
    n = T.shape[0]
    beats = T > 0
    anc = [sum(1 << int(i) for i in np.flatnonzero(beats[:, j])) for j in range(n)]
    for k in range(n):
        bit = 1 << k
        ak = anc[k]
        for j in range(n):
            if anc[j] & bit:
                anc[j] |= ak
    desc = [0] * n
    for j in range(n):
        a = anc[j]
        while a:
            low = a & -a
            desc[low.bit_length() - 1] |= 1 << j
            a ^= low
    return anc, desc


def supports_from_tournament(T: np.ndarray, K: int, ambiguity_cap: int = 16) -> list[frozenset]:
    """Every K-set closed under "is beaten by", i.e. blocking all improving swaps.

    Indices are branched in descending Copeland order, so an acyclic
    tournament yields its unique top-K with no backtracking.
    """
    n = T.shape[0]
    anc, desc = _closure(T)
    wins = (T > 0).sum(axis=1)
    order = sorted(range(n), key=lambda i: (-int(wins[i]), i))
    limit = 1 << ambiguity_cap
    found: list[int] = []
    stack = [(0, 0, 0)]  # (position in order, included mask, excluded mask)
    while stack:
        pos, inc, exc = stack.pop()
        if inc.bit_count() == K:
            found.append(inc)
            if len(found) > limit:
                raise AmbiguityExceeded(
                    f"ambiguity explosion: more than {limit} closed supports")
            continue
        while pos < n and ((inc >> order[pos]) & 1 or (exc >> order[pos]) & 1):
            pos += 1
        if pos == n:
            continue
        j = order[pos]
        # exclude branch first on the stack so the include branch is explored first
        e2 = exc | desc[j] | (1 << j)
        if not e2 & inc and n - e2.bit_count() >= K:
            stack.append((pos + 1, inc, e2))
        i2 = inc | anc[j] | (1 << j)
        if not i2 & exc and i2.bit_count() <= K:
            stack.append((pos + 1, i2, exc))
    return [frozenset(i for i in range(n) if (mask >> i) & 1) for mask in found]


def supports_from_signs(dsigns, n: int, K: int, ambiguity_cap: int = 16) -> list[np.ndarray]:
    out = []
    for S in supports_from_tournament(tournament(dsigns, n), K, ambiguity_cap):
        x = np.zeros(n, dtype=np.int8)
        x[list(S)] = 1
        out.append(x)
    return out


def readout_unconstrained(chamber, catalog: Catalog, omap: OrientationMap,
                          ambiguity_cap: int = 16) -> list[np.ndarray]:
    if catalog.constraint.kind is not ConstraintKind.UNCONSTRAINED:
        raise ValueError("bit readout needs an unconstrained catalog")
    return bits_from_signs(direction_signs(chamber, omap), catalog.n, ambiguity_cap)


def readout_topk(chamber, catalog: Catalog, omap: OrientationMap, K: int | None = None,
                 ambiguity_cap: int = 16) -> list[np.ndarray]:
    if catalog.constraint.kind is not ConstraintKind.CARDINALITY:
        raise ValueError("top-K readout needs a cardinality catalog")
    K = catalog.constraint.K if K is None else K
    return supports_from_signs(direction_signs(chamber, omap), catalog.n, K, ambiguity_cap)


def readout(dsigns, catalog: Catalog, ambiguity_cap: int = 16) -> list[np.ndarray]:
    if catalog.constraint.kind is ConstraintKind.UNCONSTRAINED:
        return bits_from_signs(dsigns, catalog.n, ambiguity_cap)
    return supports_from_signs(dsigns, catalog.n, catalog.constraint.K, ambiguity_cap)


def _as_bits(S, n: int) -> np.ndarray:
    if isinstance(S, (set, frozenset)):
        x = np.zeros(n, dtype=np.int8)
        x[list(S)] = 1
        return x
    return np.asarray(S, dtype=np.int8).reshape(n)


def blocking_check(S, chamber, catalog: Catalog, omap: OrientationMap) -> bool:
    """No direction feasible at ``x_S`` has a positive sign in the chamber.

    ``S`` is an index set (``set``/``frozenset``) or a 0/1 vector of length n.
    """
    n = catalog.n
    x = _as_bits(S, n)
    feasible = catalog.feasible_mask(x[None, :])[0]
    return not np.any(direction_signs(chamber, omap)[feasible] > 0)


def improving_mask(X, instance, epsilon: float = 1e-9) -> np.ndarray:
    """``mask[a, k]``: direction ``k`` is feasible at ``X[a]`` and gains more than epsilon."""
    X = np.atleast_2d(np.asarray(X, dtype=np.int8))
    cat = instance.catalog
    D = cat.matrix
    feasible = cat.feasible_mask(X)
    base = np.asarray(instance.value(X), dtype=float).reshape(-1)
    out = np.zeros(feasible.shape, dtype=bool)
    for k in range(D.shape[0]):
        rows = np.flatnonzero(feasible[:, k])
        if rows.size:
            moved = X[rows] + D[k]
            gain = np.asarray(instance.value(moved), dtype=float).reshape(-1) - base[rows]
            out[rows, k] = gain > epsilon
    return out


def stable_mask(X, instance, epsilon: float = 1e-9) -> np.ndarray:
    return ~improving_mask(X, instance, epsilon).any(axis=1)


def self_consistency(x, instance, epsilon: float = 1e-9) -> bool:
    """Literal stability: no feasible elementary move gains more than epsilon."""
    if not instance.constraint.is_feasible(x):
        raise ValueError("self_consistency needs a feasible point")
    return bool(stable_mask(np.asarray(x)[None, :], instance, epsilon)[0])
