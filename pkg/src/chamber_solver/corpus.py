"""Seeded random instance documents for tests, verification and benchmarks.

Every document is plain JSON data; numbers are small integers or reals
rounded to a few decimals so files and reports stay byte-stable.
"""

from __future__ import annotations

import numpy as np

from .instances import FAMILIES

# desk-scale size ranges per family: (n_min, n_max)
DEFAULT_SIZES = {
    "p2l": (4, 14),
    "qubo_factors": (3, 12),
    "qubo_dense": (3, 12),
    "covariance": (4, 8),
    "pubo_cp": (3, 12),
    "linear_fractional": (4, 14),
    "pearson": (5, 10),
}


def _rng(seed: int, family: str, index: int) -> np.random.Generator:
    return np.random.default_rng([int(seed), FAMILIES.index(family), int(index)])


def _ints(rng, n, lo=-5, hi=5):
    return rng.integers(lo, hi + 1, n).astype(int).tolist()


def _reals(rng, n, scale=2.0):
    return np.round(rng.normal(0.0, scale, n), 3).tolist()


def _vector(rng, n, integer: bool):
    return _ints(rng, n) if integer else _reals(rng, n)


def _nonzero(rng, n, integer: bool):
    while True:
        v = _vector(rng, n, integer)
        if any(v):
            return v


def _cardinality(rng, n):
    return {"type": "cardinality", "k": int(rng.integers(2, n - 1))}


def make_document(family: str, n: int, seed: int = 42, index: int = 0, constrained: bool | None = None) -> dict:
    """One random instance document of the given family and size."""
    rng = _rng(seed, family, index * 1000 + n)
    integer = bool(rng.integers(0, 2))
    name = f"{family}-n{n}-{seed}-{index}"
    cons = {"type": "none"}
    if family == "p2l":
        params = {"a": _nonzero(rng, n, integer), "b": _nonzero(rng, n, integer)}
    elif family == "qubo_factors":
        r = int(rng.integers(1, 4))
        V = np.array([_nonzero(rng, n, integer) for _ in range(r)]).T
        lam = rng.choice([-2.0, -1.0, -0.5, 0.5, 1.0, 2.0], r).tolist()
        params = {"V": V.tolist(), "lambda": lam}
    elif family == "qubo_dense":
        r = int(rng.integers(1, 4))
        V = np.array([_nonzero(rng, n, True) for _ in range(r)], dtype=float)
        lam = rng.choice([-2.0, -1.0, 1.0, 2.0], r)
        W = (V.T * lam) @ V
        u = _vector(rng, n, integer) if rng.integers(0, 2) else (0.5 * V[0]).tolist()
        params = {"W": W.tolist(), "u": u, "a0": float(rng.integers(-3, 4))}
    elif family == "covariance":
        params = {"a": _vector(rng, n, integer), "b": _vector(rng, n, integer)}
        cons = _cardinality(rng, n)
    elif family == "pubo_cp":
        terms = [{"degree": int(rng.integers(2, 4)), "weight": float(rng.choice([-1.0, 1.0, 0.5])),
                  "u": _nonzero(rng, n, True)}]
        if rng.integers(0, 2):
            terms.append({"degree": 2, "weight": float(rng.choice([-1.0, 1.0])),
                          "u": _nonzero(rng, n, True)})
        terms.append({"degree": 1, "weight": 1.0, "u": _nonzero(rng, n, integer)})
        if terms[0]["degree"] < 3:
            terms[0]["degree"] = 3
        params = {"terms": terms}
    elif family == "linear_fractional":
        constrained = bool(rng.integers(0, 2)) if constrained is None else constrained
        b = rng.integers(0, 6, n).astype(int).tolist() if integer else np.round(rng.uniform(0, 3, n), 3).tolist()
        params = {"a": _vector(rng, n, integer), "alpha": float(rng.integers(-2, 3)),
                  "b": b, "beta": float(rng.integers(1, 4))}
        if constrained:
            cons = _cardinality(rng, n)
    elif family == "pearson":
        while True:
            a, b = _reals(rng, n), _reals(rng, n)
            if len(set(a)) == n and len(set(b)) == n:
                break
        params = {"a": a, "b": b}
        cons = {"type": "cardinality", "k": int(rng.integers(3, n - 1))}
    else:
        raise ValueError(f"unknown family {family!r}")
    return {"family": family, "name": name, "params": params, "constraint": cons}


def generate(family: str, count: int, seed: int = 42, sizes: tuple[int, int] | None = None) -> list[dict]:
    """``count`` documents with n drawn uniformly from the family's size range."""
    lo, hi = sizes or DEFAULT_SIZES[family]
    pick = np.random.default_rng([int(seed), FAMILIES.index(family)])
    ns = pick.integers(lo, hi + 1, count)
    return [make_document(family, int(n), seed, i) for i, n in enumerate(ns)]
