"""Elementary feasible directions for the supported constraint families.

Two families are implemented: the unconstrained hypercube (moves are single
bit flips ``+e_i`` / ``-e_i``) and the cardinality slice ``sum(x) == K``
(moves are ordered swaps ``e_i - e_j``).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable

import numpy as np


class ConstraintKind(str, Enum):
    UNCONSTRAINED = "none"
    CARDINALITY = "cardinality"


class UnsupportedConstraint(ValueError):
    pass


@dataclass(frozen=True)
class ConstraintSpec:
    kind: ConstraintKind = ConstraintKind.UNCONSTRAINED
    K: int | None = None

    def __post_init__(self):
        kind = ConstraintKind(self.kind)
        object.__setattr__(self, "kind", kind)
        if kind is ConstraintKind.CARDINALITY:
            if self.K is None or int(self.K) != self.K:
                raise ValueError("cardinality constraint needs an integer K")
            object.__setattr__(self, "K", int(self.K))
        elif self.K is not None:
            raise ValueError("K is only meaningful for a cardinality constraint")

    @classmethod
    def unconstrained(cls) -> "ConstraintSpec":
        return cls(ConstraintKind.UNCONSTRAINED)

    @classmethod
    def cardinality(cls, K: int) -> "ConstraintSpec":
        return cls(ConstraintKind.CARDINALITY, K)

    @property
    def rank(self) -> int:
        """Constraint rank p (0 for the hypercube, 1 for a cardinality slice)."""
        return 0 if self.kind is ConstraintKind.UNCONSTRAINED else 1

    def validate(self, n: int) -> None:
        if self.kind is ConstraintKind.CARDINALITY and not 1 <= self.K <= n - 1:
            raise ValueError(f"cardinality K={self.K} must satisfy 1 <= K <= n-1 (n={n})")

    def is_feasible(self, x) -> bool:
        x = np.asarray(x)
        if not np.all((x == 0) | (x == 1)):
            return False
        if self.kind is ConstraintKind.CARDINALITY:
            return int(x.sum()) == self.K
        return True

    def to_dict(self) -> dict:
        if self.kind is ConstraintKind.CARDINALITY:
            return {"type": "cardinality", "k": self.K}
        return {"type": "none"}


@dataclass(frozen=True)
class Direction:
    """A signed move: +1 on ``plus`` indices, -1 on ``minus`` indices."""

    plus: frozenset = field(default_factory=frozenset)
    minus: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        object.__setattr__(self, "plus", frozenset(int(i) for i in self.plus))
        object.__setattr__(self, "minus", frozenset(int(i) for i in self.minus))
        if self.plus & self.minus:
            raise ValueError("plus and minus supports must be disjoint")

    @classmethod
    def flip(cls, i: int, sign: int) -> "Direction":
        return cls(plus={i}) if sign > 0 else cls(minus={i})

    @classmethod
    def swap(cls, i: int, j: int) -> "Direction":
        """``e_i - e_j``: bring ``i`` into the support, drop ``j``."""
        return cls(plus={i}, minus={j})

    @property
    def support(self) -> frozenset:
        return self.plus | self.minus

    def vector(self, n: int) -> np.ndarray:
        d = np.zeros(n, dtype=np.int8)
        if self.plus:
            d[list(self.plus)] = 1
        if self.minus:
            d[list(self.minus)] = -1
        return d

    def __str__(self):
        parts = [f"+e{i}" for i in sorted(self.plus)] + [f"-e{j}" for j in sorted(self.minus)]
        return "".join(parts) or "0"


@dataclass(frozen=True)
class Catalog:
    directions: tuple
    constraint: ConstraintSpec
    n: int

    def __len__(self):
        return len(self.directions)

    def __iter__(self):
        return iter(self.directions)

    def __getitem__(self, k):
        return self.directions[k]

    @property
    def matrix(self) -> np.ndarray:
        """Dense ``m x n`` int8 matrix with one direction per row."""
        cached = self.__dict__.get("_matrix")
        if cached is None:
            cached = np.zeros((len(self.directions), self.n), dtype=np.int8)
            for k, d in enumerate(self.directions):
                cached[k] = d.vector(self.n)
            cached.setflags(write=False)
            object.__setattr__(self, "_matrix", cached)
        return cached

    def feasible_mask(self, X) -> np.ndarray:
        """``mask[a, k]`` is True iff direction ``k`` is feasible at row ``X[a]``.

        Rows of ``X`` are assumed feasible; every catalog move preserves the
        constraint, so only the hypercube bounds need checking.
        """
        X = np.atleast_2d(np.asarray(X, dtype=np.int64))
        D = self.matrix
        plus = (D == 1).astype(np.int64)
        minus = (D == -1).astype(np.int64)
        ok_plus = (X @ plus.T) == 0
        ok_minus = (X @ minus.T) == minus.sum(axis=1)[None, :]
        return ok_plus & ok_minus


def build_catalog(constraint: ConstraintSpec, n: int) -> Catalog:
    """Return the global, point-independent direction catalog.

    Unconstrained directions are ordered ``+e_0, -e_0, +e_1, -e_1, ...``;
    swaps ``e_i - e_j`` are ordered lexicographically in ``(i, j)``.
    """
    if n < 2:
        raise ValueError("need at least two variables")
    constraint.validate(n)
    if constraint.kind is ConstraintKind.UNCONSTRAINED:
        dirs: Iterable[Direction] = (
            Direction.flip(i, s) for i in range(n) for s in (+1, -1)
        )
    elif constraint.kind is ConstraintKind.CARDINALITY:
        dirs = (Direction.swap(i, j) for i in range(n) for j in range(n) if i != j)
    else:  # pragma: no cover - enum is closed today
        raise UnsupportedConstraint(f"unsupported constraint {constraint.kind}")
    return Catalog(tuple(dirs), constraint, n)


def feasible_at(d: Direction, x, constraint: ConstraintSpec) -> bool:
    x = np.asarray(x)
    y = x.astype(np.int64) + d.vector(x.shape[0])
    return constraint.is_feasible(y)


def circuit_size(d: Direction) -> int:
    return len(d.support)
