"""Polynomials in linear aggregates and their monomial feature lift.

A polynomial is a ``dict`` mapping exponent tuples over ``k`` base forms
``s_v(x) = U[v] . x`` to coefficients. Moving ``x`` along ``d`` shifts each
base form by the constant ``U[v] . d``, so the gain of any move is a polynomial
of strictly lower degree. Taking every proper divisor of the objective's
monomials as a feature coordinate makes all gains affine in those features.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from math import comb

import numpy as np

from .hq_core import DimensionMismatch, FeatureMatrix, HQForm, _frozen

Poly = dict


class DegreeOverflow(ValueError):
    pass


def _key(e) -> tuple:
    return tuple(int(v) for v in e)


def poly_clean(p: Poly) -> Poly:
    return {e: c for e, c in p.items() if c != 0.0}


def poly_add(*terms: tuple[float, Poly]) -> Poly:
    out: Poly = {}
    for scale, p in terms:
        for e, c in p.items():
            out[e] = out.get(e, 0.0) + scale * c
    return poly_clean(out)


def poly_mul(p: Poly, q: Poly) -> Poly:
    out: Poly = {}
    for e1, c1 in p.items():
        for e2, c2 in q.items():
            e = tuple(a + b for a, b in zip(e1, e2))
            out[e] = out.get(e, 0.0) + c1 * c2
    return poly_clean(out)


def poly_var(v: int, k: int, coef: float = 1.0) -> Poly:
    e = [0] * k
    e[v] = 1
    return {tuple(e): float(coef)}


def poly_const(c: float, k: int) -> Poly:
    return poly_clean({(0,) * k: float(c)})


def poly_pow(p: Poly, t: int) -> Poly:
    k = len(next(iter(p))) if p else 0
    out = poly_const(1.0, k)
    for _ in range(t):
        out = poly_mul(out, p)
    return out


def degree(e) -> int:
    return int(sum(e))


def poly_degree(p: Poly) -> int:
    return max((degree(e) for e in p), default=0)


def _proper_divisors(e):
    for sub in itertools.product(*(range(v + 1) for v in e)):
        if sub != tuple(e) and any(sub):
            yield sub


def feature_monomials(p: Poly) -> list[tuple]:
    """Proper non-constant divisors of every monomial, plus the linear ones."""
    feats = set()
    for e in p:
        if degree(e) == 1:
            feats.add(e)
        feats.update(_proper_divisors(e))
    return sorted(feats, key=lambda e: (degree(e), tuple(-v for v in e)))


def _interval_pow(lo, hi, t):
    if t == 0:
        return 1.0, 1.0
    a, b = lo**t, hi**t
    if t % 2 == 0 and lo < 0 < hi:
        return 0.0, max(a, b)
    return min(a, b), max(a, b)


def _interval_mul(x, y):
    prods = [x[0] * y[0], x[0] * y[1], x[1] * y[0], x[1] * y[1]]
    return min(prods), max(prods)


@dataclass(frozen=True)
class MonomialFeatures:
    """``psi_j(x) = prod_v (U[v] . x) ** E[j, v]``."""

    U: np.ndarray
    E: np.ndarray

    def __post_init__(self):
        U = np.atleast_2d(np.asarray(self.U, dtype=float))
        E = np.atleast_2d(np.asarray(self.E, dtype=np.int64))
        if E.shape[1] != U.shape[0]:
            raise DimensionMismatch(f"exponents cover {E.shape[1]} forms, U has {U.shape[0]}")
        if np.any(E < 0) or np.any(E.sum(axis=1) < 1):
            raise ValueError("feature monomials need non-negative exponents and degree >= 1")
        object.__setattr__(self, "U", _frozen(U))
        object.__setattr__(self, "E", _frozen(E, np.int64))

    @property
    def r(self) -> int:
        return self.E.shape[0]

    @property
    def n(self) -> int:
        return self.U.shape[1]

    @property
    def monomials(self) -> list[tuple]:
        return [_key(e) for e in self.E]

    def evaluate(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.shape[-1] != self.n:
            raise DimensionMismatch(f"x has length {X.shape[-1]}, expected n={self.n}")
        S = X @ self.U.T
        return np.prod(S[..., None, :] ** self.E, axis=-1)

    def polynomial(self, hq: HQForm) -> Poly:
        """Expand ``1/2 psi^T Q psi + b^T psi + a`` back into base-form monomials."""
        if hq.r != self.r:
            raise DimensionMismatch(f"HQ form has r={hq.r}, features have r={self.r}")
        E = self.E
        k = E.shape[1]
        terms: Poly = {}

        def add(e, c):
            if c != 0.0:
                e = _key(e)
                terms[e] = terms.get(e, 0.0) + c

        add((0,) * k, hq.a)
        for i in range(self.r):
            add(E[i], hq.b[i])
            add(2 * E[i], 0.5 * hq.Q[i, i])
            for j in range(i + 1, self.r):
                add(E[i] + E[j], hq.Q[i, j])
        return poly_clean(terms)

    def predicates(self, hq: HQForm, D) -> tuple[np.ndarray, np.ndarray]:
        """Affine gain coefficients by expanding ``f(s + delta) - f(s)``."""
        poly = self.polynomial(hq)
        index = {e: j for j, e in enumerate(self.monomials)}
        delta = np.atleast_2d(np.asarray(D, dtype=float)) @ self.U.T
        m = delta.shape[0]
        W = np.zeros((m, self.r))
        c = np.zeros(m)
        for e, gamma in poly.items():
            for sub in itertools.product(*(range(v + 1) for v in e)):
                if sub == e:
                    continue
                coef = np.full(m, gamma)
                for v, (ev, sv) in enumerate(zip(e, sub)):
                    if ev > sv:
                        coef = coef * (comb(ev, sv) * delta[:, v] ** (ev - sv))
                if not any(sub):
                    c += coef
                    continue
                j = index.get(sub)
                if j is None:
                    raise DegreeOverflow(f"gain monomial {sub} is not a feature coordinate")
                W[:, j] += coef
        return W, c

    def _form_ranges(self, constraint=None):
        return FeatureMatrix(self.U).feature_ranges(constraint)

    def feature_ranges(self, constraint=None) -> tuple[np.ndarray, np.ndarray]:
        """Interval enclosure of each monomial over the feasible set."""
        lo_s, hi_s = self._form_ranges(constraint)
        lo = np.empty(self.r)
        hi = np.empty(self.r)
        for j, e in enumerate(self.E):
            acc = (1.0, 1.0)
            for v, t in enumerate(e):
                if t:
                    acc = _interval_mul(acc, _interval_pow(lo_s[v], hi_s[v], int(t)))
            lo[j], hi[j] = acc
        return lo, hi

    def feature_bound(self) -> float:
        lo, hi = self.feature_ranges()
        return float(max(np.max(np.abs(lo)), np.max(np.abs(hi))))


def hq_from_polynomial(U, poly: Poly):
    """Materialize a polynomial in base forms as ``(HQForm, features)``.

    Returns a linear :class:`FeatureMatrix` when every feature is a single base
    form, otherwise :class:`MonomialFeatures`.
    """
    U = np.atleast_2d(np.asarray(U, dtype=float))
    k = U.shape[0]
    poly = poly_clean({_key(e): float(c) for e, c in poly.items()})
    for e in poly:
        if len(e) != k:
            raise DimensionMismatch(f"monomial {e} does not match {k} base forms")
    feats = feature_monomials(poly)
    if not feats:
        # constant objective: one zero feature keeps r >= 1
        zero = np.zeros((1, U.shape[1]))
        return HQForm(np.zeros((1, 1)), np.zeros(1), poly.get((0,) * k, 0.0)), FeatureMatrix(zero)
    index = {e: j for j, e in enumerate(feats)}
    r = len(feats)
    Q = np.zeros((r, r))
    b = np.zeros(r)
    a = 0.0
    for e, gamma in poly.items():
        if not any(e):
            a += gamma
        elif e in index:
            b[index[e]] += gamma
        else:
            v = next(i for i, t in enumerate(e) if t)
            head = tuple(int(i == v) for i in range(k))
            tail = tuple(t - h for t, h in zip(e, head))
            i, j = index[head], index[tail]
            if i == j:
                Q[i, i] += 2.0 * gamma
            else:
                Q[i, j] += gamma
                Q[j, i] += gamma
    hq = HQForm(Q, b, a)
    if all(degree(e) == 1 for e in feats):
        rows = [next(i for i, t in enumerate(e) if t) for e in feats]
        return hq, FeatureMatrix(U[rows])
    return hq, MonomialFeatures(U, np.array(feats, dtype=np.int64))


def as_polynomial(hq: HQForm, features) -> tuple[np.ndarray, Poly]:
    """Base forms and polynomial for either feature representation."""
    if isinstance(features, MonomialFeatures):
        return np.array(features.U), features.polynomial(hq)
    mono = MonomialFeatures(features.P, np.eye(features.r, dtype=np.int64))
    return np.array(features.P), mono.polynomial(hq)


def merge_forms(U1, U2, tol: float = 1e-12):
    """Stack two sets of base forms, merging rows that coincide.

    Returns ``(U, map1, map2)`` where ``mapX[v]`` is the merged index of row ``v``.
    """
    rows: list[np.ndarray] = []
    maps = []
    for U in (U1, U2):
        mp = []
        for row in np.atleast_2d(U):
            for idx, kept in enumerate(rows):
                if np.max(np.abs(kept - row)) <= tol * (1.0 + np.max(np.abs(row))):
                    mp.append(idx)
                    break
            else:
                rows.append(np.array(row, dtype=float))
                mp.append(len(rows) - 1)
        maps.append(mp)
    return np.vstack(rows), maps[0], maps[1]


def remap(poly: Poly, mapping, k: int) -> Poly:
    out: Poly = {}
    for e, c in poly.items():
        ne = [0] * k
        for v, t in enumerate(e):
            ne[mapping[v]] += t
        ne = tuple(ne)
        out[ne] = out.get(ne, 0.0) + c
    return poly_clean(out)
