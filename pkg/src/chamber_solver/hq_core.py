"""Quadratic-over-features objectives ``f(x) = 1/2 psi^T Q psi + b^T psi + a``.

Only linear feature maps ``psi(x) = P x`` live here. Nonlinear lifts (monomials
of linear aggregates) are handled by :mod:`chamber_solver.polynomial`, which
exposes the same ``evaluate`` / ``predicates`` surface.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .efd_catalog import Catalog, Direction


class DimensionMismatch(ValueError):
    pass


def _frozen(a, dtype=float) -> np.ndarray:
    a = np.array(a, dtype=dtype)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class HQForm:
    Q: np.ndarray
    b: np.ndarray
    a: float = 0.0

    def __post_init__(self):
        Q = np.atleast_2d(np.asarray(self.Q, dtype=float))
        if Q.ndim != 2 or Q.shape[0] != Q.shape[1] or Q.shape[0] < 1:
            raise DimensionMismatch(f"Q must be a non-empty square matrix, got {Q.shape}")
        b = np.asarray(self.b, dtype=float).reshape(-1)
        if b.shape[0] != Q.shape[0]:
            raise DimensionMismatch(f"b has length {b.shape[0]}, Q is {Q.shape}")
        # exact symmetry by construction
        object.__setattr__(self, "Q", _frozen((Q + Q.T) / 2.0))
        object.__setattr__(self, "b", _frozen(b))
        object.__setattr__(self, "a", float(self.a))

    @property
    def r(self) -> int:
        return self.Q.shape[0]

    def value(self, psi) -> np.ndarray | float:
        """Evaluate the quadratic on a feature vector or a batch of rows."""
        psi = np.asarray(psi, dtype=float)
        if psi.shape[-1] != self.r:
            raise DimensionMismatch(f"feature vector has length {psi.shape[-1]}, expected {self.r}")
        quad = 0.5 * np.einsum("...i,ij,...j->...", psi, self.Q, psi)
        out = quad + psi @ self.b + self.a
        return float(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True)
class HomogeneousForm:
    Qtilde: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "Qtilde", _frozen(self.Qtilde))

    def value(self, psi) -> np.ndarray | float:
        psi = np.asarray(psi, dtype=float)
        ones = np.ones(psi.shape[:-1] + (1,))
        lifted = np.concatenate([psi, ones], axis=-1)
        out = 0.5 * np.einsum("...i,ij,...j->...", lifted, self.Qtilde, lifted)
        return float(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True)
class GainPredicate:
    """``gain_d(x) = w . psi(x) + c`` for the direction with id ``direction_id``."""

    w: np.ndarray
    c: float
    direction_id: int = -1

    def __post_init__(self):
        object.__setattr__(self, "w", _frozen(self.w))
        object.__setattr__(self, "c", float(self.c))

    @property
    def homogeneous(self) -> np.ndarray:
        return np.append(self.w, self.c)

    def value(self, psi) -> np.ndarray | float:
        out = np.asarray(psi, dtype=float) @ self.w + self.c
        return float(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True)
class FeatureMatrix:
    """Linear feature map ``psi(x) = P x`` with ``P`` of shape ``r x n``."""

    P: np.ndarray

    def __post_init__(self):
        P = np.atleast_2d(np.asarray(self.P, dtype=float))
        if P.ndim != 2:
            raise DimensionMismatch("P must be two-dimensional")
        object.__setattr__(self, "P", _frozen(P))

    @property
    def r(self) -> int:
        return self.P.shape[0]

    @property
    def n(self) -> int:
        return self.P.shape[1]

    def evaluate(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.shape[-1] != self.n:
            raise DimensionMismatch(f"x has length {X.shape[-1]}, expected n={self.n}")
        return X @ self.P.T

    def predicates(self, hq: HQForm, D) -> tuple[np.ndarray, np.ndarray]:
        """Gain coefficients for every row of the direction matrix ``D``.

        Returns ``(W, c)`` with ``W`` of shape ``m x r``; the exact discrete
        expansion keeps the second-order term ``1/2 (Pd)^T Q (Pd)``.
        """
        _check_dims(hq, self)
        PD = np.atleast_2d(np.asarray(D, dtype=float)) @ self.P.T
        W = PD @ hq.Q
        c = 0.5 * np.einsum("ij,ij->i", PD, W) + PD @ hq.b
        return W, c

    def feature_bound(self) -> float:
        """An upper bound on ``max |psi_k(x)|`` over the hypercube."""
        if self.P.size == 0:
            return 0.0
        return float(np.max(np.abs(self.P).sum(axis=1)))

    def feature_ranges(self, constraint=None) -> tuple[np.ndarray, np.ndarray]:
        """Exact per-coordinate range of ``psi`` over the feasible set."""
        P = self.P
        if constraint is not None and constraint.K is not None:
            K = constraint.K
            srt = np.sort(P, axis=1)
            return srt[:, :K].sum(axis=1), srt[:, -K:].sum(axis=1)
        return np.minimum(P, 0).sum(axis=1), np.maximum(P, 0).sum(axis=1)


def _check_dims(hq: HQForm, features) -> None:
    if hq.r != features.r:
        raise DimensionMismatch(f"HQ form has r={hq.r}, features have r={features.r}")


def _bits(x, n: int | None = None) -> np.ndarray:
    x = np.asarray(x)
    if n is not None and x.shape[-1] != n:
        raise DimensionMismatch(f"x has length {x.shape[-1]}, expected n={n}")
    return x


def evaluate_features(P: FeatureMatrix, x) -> np.ndarray:
    return P.evaluate(_bits(x, P.n))


def evaluate(hq: HQForm, P: FeatureMatrix, x):
    _check_dims(hq, P)
    return hq.value(P.evaluate(_bits(x, P.n)))


def lift(hq: HQForm) -> HomogeneousForm:
    r = hq.r
    Qt = np.zeros((r + 1, r + 1))
    Qt[:r, :r] = hq.Q
    Qt[:r, r] = hq.b
    Qt[r, :r] = hq.b
    Qt[r, r] = 2.0 * hq.a
    return HomogeneousForm(Qt)


def gradient(hq: HQForm, P: FeatureMatrix, x) -> np.ndarray:
    """``P^T (Q P x + b)``, defined on all of R^n."""
    _check_dims(hq, P)
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != P.n:
        raise DimensionMismatch(f"x has length {x.shape[-1]}, expected n={P.n}")
    return (hq.Q @ (P.P @ x) + hq.b) @ P.P


def _dense_direction(d, n: int) -> np.ndarray:
    if isinstance(d, Direction):
        return d.vector(n)
    d = np.asarray(d)
    if d.shape != (n,):
        raise DimensionMismatch(f"direction has shape {d.shape}, expected ({n},)")
    return d


def gain_coefficients(hq: HQForm, P: FeatureMatrix, d, direction_id: int = -1) -> GainPredicate:
    W, c = P.predicates(hq, _dense_direction(d, P.n)[None, :])
    return GainPredicate(W[0], c[0], direction_id)


def catalog_predicates(hq: HQForm, features, catalog: Catalog) -> list[GainPredicate]:
    W, c = features.predicates(hq, catalog.matrix)
    return [GainPredicate(W[k], c[k], k) for k in range(len(catalog))]


def gain_direct(hq: HQForm, P, x, d) -> float:
    """``f(x + d) - f(x)``; both endpoints must be 0/1 vectors."""
    x = np.asarray(x)
    dv = _dense_direction(d, x.shape[-1])
    y = x.astype(np.int64) + dv
    if np.any((y != 0) & (y != 1)) or np.any((x != 0) & (x != 1)):
        raise ValueError("move leaves the hypercube")
    return float(hq.value(P.evaluate(y)) - hq.value(P.evaluate(x)))
