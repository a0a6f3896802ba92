"""Builders for the supported objective families, plus the JSON document loader."""

from __future__ import annotations

import itertools
import warnings
from dataclasses import dataclass

import numpy as np

from .arrangement import DEFAULT_DIMENSION_CAP
from .efd_catalog import ConstraintKind, ConstraintSpec
from .hq_core import DimensionMismatch, FeatureMatrix, HQForm
from .polynomial import (
    DegreeOverflow,
    hq_from_polynomial,
    merge_forms,
    poly_add,
    poly_const,
    poly_mul,
    poly_pow,
    poly_var,
    remap,
)
from .solver import FuboInstance, Instance

FAMILIES = ("p2l", "qubo_factors", "qubo_dense", "covariance", "pubo_cp",
            "linear_fractional", "pearson")
RATIO_FAMILIES = ("linear_fractional", "pearson")


class RankTooLarge(ValueError):
    pass


@dataclass(frozen=True)
class DenseQuadratic:
    W: np.ndarray
    u: np.ndarray | None = None
    a0: float = 0.0

    def __post_init__(self):
        W = np.atleast_2d(np.asarray(self.W, dtype=float))
        if W.shape[0] != W.shape[1]:
            raise DimensionMismatch(f"W must be square, got {W.shape}")
        if not np.allclose(W, W.T, rtol=0, atol=1e-12 * (1 + np.max(np.abs(W)))):
            raise ValueError("W must be symmetric")
        u = np.zeros(W.shape[0]) if self.u is None else np.asarray(self.u, dtype=float).reshape(-1)
        if u.shape[0] != W.shape[0]:
            raise DimensionMismatch(f"u has length {u.shape[0]}, W is {W.shape}")
        object.__setattr__(self, "W", (W + W.T) / 2)
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "a0", float(self.a0))

    def value(self, X):
        X = np.asarray(X, dtype=float)
        return np.einsum("...i,ij,...j->...", X, self.W, X) + X @ self.u + self.a0


@dataclass(frozen=True)
class CPTerm:
    degree: int
    weight: float
    u: np.ndarray

    def __post_init__(self):
        if int(self.degree) != self.degree or self.degree < 1:
            raise ValueError("CP term degree must be an integer >= 1")
        u = np.asarray(self.u, dtype=float).reshape(-1)
        if not np.any(u):
            raise ValueError("CP term vector must be nonzero")
        object.__setattr__(self, "degree", int(self.degree))
        object.__setattr__(self, "weight", float(self.weight))
        object.__setattr__(self, "u", u)


def _vec(v, name: str, n: int | None = None) -> np.ndarray:
    v = np.asarray(v, dtype=float).reshape(-1)
    if not np.all(np.isfinite(v)):
        raise ValueError(f"{name} must be finite")
    if n is not None and v.shape[0] != n:
        raise DimensionMismatch(f"{name} has length {v.shape[0]}, expected {n}")
    return v


def build_p2l(a, b, constraint: ConstraintSpec | None = None, name: str = "") -> Instance:
    """``f(x) = (a.x)(b.x)``."""
    a = _vec(a, "a")
    b = _vec(b, "b", a.shape[0])
    hq = HQForm([[0.0, 1.0], [1.0, 0.0]], [0.0, 0.0])
    return Instance(hq, FeatureMatrix(np.vstack([a, b])),
                    constraint or ConstraintSpec.unconstrained(), name, "p2l")


def build_qubo_factors(V, lam, constraint: ConstraintSpec | None = None, name: str = "") -> Instance:
    """``f(x) = x^T V diag(lam) V^T x``; zero weights are dropped with a warning."""
    V = np.asarray(V, dtype=float)
    if V.ndim == 1:
        V = V[:, None]
    lam = _vec(lam, "lambda", V.shape[1])
    keep = lam != 0
    if not keep.all():
        warnings.warn(f"dropping {int((~keep).sum())} zero-weight factor(s)", stacklevel=2)
        V, lam = V[:, keep], lam[keep]
    if lam.size == 0:
        hq = HQForm(np.zeros((1, 1)), [0.0])
        return Instance(hq, FeatureMatrix(np.zeros((1, V.shape[0]))),
                        constraint or ConstraintSpec.unconstrained(), name, "qubo_factors")
    hq = HQForm(np.diag(2.0 * lam), np.zeros(lam.size))
    return Instance(hq, FeatureMatrix(V.T), constraint or ConstraintSpec.unconstrained(),
                    name, "qubo_factors")


def build_qubo_dense(W, u=None, a0: float = 0.0, rank_tol: float = 1e-10,
                     constraint: ConstraintSpec | None = None, max_rank: int | None = DEFAULT_DIMENSION_CAP,
                     name: str = "") -> Instance:
    """``f(x) = x^T W x + u.x + a0`` through a truncated eigendecomposition.

    ``u`` is folded into the linear coefficient when it lies in the span of the
    retained eigenvectors, otherwise it becomes one extra feature row.
    """
    dq = W if isinstance(W, DenseQuadratic) else DenseQuadratic(W, u, a0)
    n = dq.W.shape[0]
    evals, evecs = np.linalg.eigh(dq.W)
    scale = np.max(np.abs(evals)) if evals.size else 0.0
    keep = np.abs(evals) > rank_tol * scale if scale > 0 else np.zeros(n, dtype=bool)
    lam, V = evals[keep], evecs[:, keep]
    P = V.T
    Q = np.diag(2.0 * lam)
    bvec = np.zeros(lam.size)
    u = dq.u
    if np.any(u):
        if P.shape[0]:
            beta, *_ = np.linalg.lstsq(P.T, u, rcond=None)
            resid = np.max(np.abs(P.T @ beta - u))
        else:
            resid = np.inf
        if resid <= 1e-9 * (1.0 + np.max(np.abs(u))):
            bvec = beta
        else:
            norm = float(np.linalg.norm(u))
            P = np.vstack([P, u / norm])
            Q = np.pad(Q, ((0, 1), (0, 1)))
            bvec = np.append(bvec, norm)
    if P.shape[0] == 0:
        P, Q, bvec = np.zeros((1, n)), np.zeros((1, 1)), np.zeros(1)
    if max_rank is not None and P.shape[0] > max_rank:
        raise RankTooLarge(f"effective rank {P.shape[0]} exceeds cap {max_rank}")
    return Instance(HQForm(Q, bvec, dq.a0), FeatureMatrix(P),
                    constraint or ConstraintSpec.unconstrained(), name, "qubo_dense")


def build_covariance(a, b, K: int, name: str = "") -> Instance:
    """Subset covariance ``C/K - A B / K^2`` over ``|S| = K``."""
    a = _vec(a, "a")
    b = _vec(b, "b", a.shape[0])
    n = a.shape[0]
    if not 1 <= K <= n - 1:
        raise ValueError(f"K={K} must satisfy 1 <= K <= n-1 (n={n})")
    Q = np.zeros((3, 3))
    Q[0, 1] = Q[1, 0] = -1.0 / K**2
    hq = HQForm(Q, [0.0, 0.0, 1.0 / K])
    return Instance(hq, FeatureMatrix(np.vstack([a, b, a * b])),
                    ConstraintSpec.cardinality(K), name, "covariance")


def _stack_forms(vectors):
    """Merge equal vectors so each base form appears once."""
    U = np.atleast_2d(vectors[0])
    index = [0]
    for v in vectors[1:]:
        U, _, mp = merge_forms(U, np.atleast_2d(v))
        index.append(mp[0])
    return U, index


def build_pubo_cp(terms, constraint: ConstraintSpec | None = None, max_features: int = 64,
                  name: str = "", a0: float = 0.0) -> Instance:
    """``f(x) = a0 + sum_t weight_t (u_t . x)^degree_t`` lifted to monomial features."""
    terms = [t if isinstance(t, CPTerm) else CPTerm(**t) for t in terms]
    if not terms:
        raise ValueError("need at least one CP term")
    n = terms[0].u.shape[0]
    for t in terms:
        if t.u.shape[0] != n:
            raise DimensionMismatch("CP term vectors differ in length")
    d = max(t.degree for t in terms)
    if d > 4:
        raise DegreeOverflow(f"degree {d} is outside the supported range (<= 4)")
    U, index = _stack_forms([t.u for t in terms])
    k = U.shape[0]
    poly = poly_const(a0, k)
    for t, v in zip(terms, index):
        poly = poly_add((1.0, poly), (t.weight, poly_pow(poly_var(v, k), t.degree)))
    hq, feats = hq_from_polynomial(U, poly)
    if feats.r > max_features:
        raise DegreeOverflow(f"{feats.r} monomial features exceed cap {max_features}")
    return Instance(hq, feats, constraint or ConstraintSpec.unconstrained(), name, "pubo_cp")


def _linear(vec, const: float, constraint, name: str, family: str) -> Instance:
    hq = HQForm(np.zeros((1, 1)), [1.0], const)
    return Instance(hq, FeatureMatrix(vec[None, :]), constraint, name, family)


def build_linear_fractional(a, alpha: float, b, beta: float,
                            constraint: ConstraintSpec | None = None, name: str = "") -> FuboInstance:
    """``(a.x + alpha) / (b.x + beta)``; the denominator must stay positive."""
    a = _vec(a, "a")
    b = _vec(b, "b", a.shape[0])
    cs = constraint or ConstraintSpec.unconstrained()
    N = _linear(a, float(alpha), cs, name, "linear_fractional")
    D = _linear(b, float(beta), cs, name, "linear_fractional")
    return FuboInstance(N, D, name, "linear_fractional")


def min_subset_variance(a, K: int) -> tuple[float, tuple]:
    """Smallest ``K Σa² - (Σa)²`` over K-subsets and a subset attaining it."""
    a = np.asarray(a, dtype=float)
    best, arg = np.inf, ()
    for S in itertools.combinations(range(a.shape[0]), K):
        s = a[list(S)]
        v = K * float(s @ s) - float(s.sum()) ** 2
        if v < best:
            best, arg = v, S
    return best, arg


def build_pearson(a, b, K: int, name: str = "", max_n: int = 24) -> FuboInstance:
    """Squared subset correlation ``(KC - AB)^2 / ((KU - A^2)(KV - B^2))``."""
    a = _vec(a, "a")
    b = _vec(b, "b", a.shape[0])
    n = a.shape[0]
    if not 2 <= K <= n - 1:
        raise ValueError(f"K={K} must satisfy 2 <= K <= n-1 (n={n})")
    if n > max_n:
        raise ValueError(f"pearson instances are limited to n <= {max_n}")
    for vec, label in ((a, "a"), (b, "b")):
        v, S = min_subset_variance(vec, K)
        if v <= 1e-12 * (1.0 + K * float(vec @ vec)):
            raise ValueError(f"degenerate denominator: {label} has zero variance on subset {list(S)}")
    U = np.vstack([a, b, a * b, a * a, b * b])
    A, B, C, Ua, Vb = (poly_var(v, 5) for v in range(5))
    KC_AB = poly_add((K, C), (-1.0, poly_mul(A, B)))
    num = poly_mul(KC_AB, KC_AB)
    den = poly_mul(poly_add((K, Ua), (-1.0, poly_mul(A, A))),
                   poly_add((K, Vb), (-1.0, poly_mul(B, B))))
    cs = ConstraintSpec.cardinality(K)
    hN, fN = hq_from_polynomial(U, num)
    hD, fD = hq_from_polynomial(U, den)
    return FuboInstance(Instance(hN, fN, cs, name, "pearson"), Instance(hD, fD, cs, name, "pearson"),
                        name, "pearson")


# ---------------------------------------------------------------------------
# documents


def constraint_from_dict(doc: dict | None, n: int | None = None) -> ConstraintSpec:
    if not doc or doc.get("type", "none") == "none":
        return ConstraintSpec.unconstrained()
    if doc["type"] == "cardinality":
        return ConstraintSpec.cardinality(int(doc["k"]))
    raise ValueError(f"unsupported constraint type {doc['type']!r}")


def from_document(doc: dict):
    """Build an :class:`Instance` or :class:`FuboInstance` from a parsed instance file."""
    family = doc["family"]
    p = doc["params"]
    cs = constraint_from_dict(doc.get("constraint"))
    name = doc.get("name", "")
    if family == "p2l":
        return build_p2l(p["a"], p["b"], cs, name)
    if family == "qubo_factors":
        return build_qubo_factors(p["V"], p["lambda"], cs, name)
    if family == "qubo_dense":
        opts = doc.get("options", {})
        return build_qubo_dense(p["W"], p.get("u"), p.get("a0", 0.0), p.get("rank_tol", 1e-10), cs,
                                max_rank=opts.get("dimension_cap", DEFAULT_DIMENSION_CAP), name=name)
    if family == "covariance":
        if cs.kind is not ConstraintKind.CARDINALITY:
            raise ValueError("covariance needs a cardinality constraint")
        return build_covariance(p["a"], p["b"], cs.K, name)
    if family == "pubo_cp":
        return build_pubo_cp(p["terms"], cs, name=name, a0=p.get("a0", 0.0))
    if family == "linear_fractional":
        return build_linear_fractional(p["a"], p["alpha"], p["b"], p["beta"], cs, name)
    if family == "pearson":
        if cs.kind is not ConstraintKind.CARDINALITY:
            raise ValueError("pearson needs a cardinality constraint")
        return build_pearson(p["a"], p["b"], cs.K, name)
    raise ValueError(f"unknown family {family!r}")
