"""Affine hyperplane arrangements built from gain predicates.

Chambers are enumerated by depth-first sign assignment over the hyperplanes.
A partial assignment survives only if some point of the box ``|xi|_inf <= B``
satisfies every assigned strict inequality with slack above ``epsilon``; the
slack is maximized by a small linear program solved incrementally with HiGHS.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass
from math import comb

import highspy
import numpy as np

DEFAULT_EPSILON = 1e-9
DEFAULT_DIMENSION_CAP = 6
DEFAULT_MAX_CHAMBERS = 500_000


class ArrangementTooLarge(RuntimeError):
    pass


class DimensionCapExceeded(RuntimeError):
    pass


@dataclass(frozen=True)
class Hyperplane:
    """``{xi : w . xi + c = 0}`` with ``|w|_2 = 1`` and a positive leading entry.

    ``sources`` lists ``(direction_id, orientation)``: the direction's gain has
    the sign ``orientation * sign(w . xi + c)``.
    """

    w: np.ndarray
    c: float
    sources: tuple = ()

    def value(self, xi):
        return np.asarray(xi, dtype=float) @ self.w + self.c


@dataclass(frozen=True)
class Chamber:
    signs: tuple
    witness: np.ndarray
    margin: float


@dataclass(frozen=True)
class OrientationMap:
    """Per-direction lookup from chamber signs to gain signs."""

    hyperplane: np.ndarray  # index into the arrangement, -1 for constant gains
    orientation: np.ndarray
    fixed: np.ndarray  # sign of constant gains, 0 elsewhere

    @property
    def m(self) -> int:
        return self.hyperplane.shape[0]

    def direction_signs(self, chamber_signs) -> np.ndarray:
        s = np.asarray(chamber_signs, dtype=np.int8)
        out = self.fixed.copy()
        live = self.hyperplane >= 0
        if live.any():
            out[live] = self.orientation[live] * s[self.hyperplane[live]]
        return out


def _canonical(w, c, lead_tol):
    norm = float(np.linalg.norm(w))
    v = np.append(w, c) / norm
    lead = np.flatnonzero(np.abs(v[:-1]) > lead_tol)[0]
    orient = 1 if v[lead] > 0 else -1
    return orient * v, orient, norm


def build_arrangement(predicates, epsilon: float = DEFAULT_EPSILON, slack: float = 0.0,
                      dedup_tol: float = 1e-9):
    """Deduplicated hyperplanes and the fixed signs of constant predicates.

    With ``slack > 0`` each predicate's hyperplane is moved from ``gain = 0`` to
    ``gain = slack*|w| + 2*epsilon``, so any point whose gain is at most
    ``epsilon`` lies strictly on the negative side.
    """
    hyperplanes: list[list] = []  # [canonical vector, sources]
    stacked = []
    fixed: dict[int, int] = {}
    for p in predicates:
        w = np.asarray(p.w, dtype=float)
        c = float(p.c)
        if w.size == 0 or np.max(np.abs(w)) <= epsilon:
            fixed[p.direction_id] = 0 if abs(c) <= epsilon else (1 if c > 0 else -1)
            continue
        norm = float(np.linalg.norm(w))
        shift = slack * norm + 2.0 * epsilon if slack > 0 else 0.0
        v, orient, _ = _canonical(w, c - shift, 1e-12)
        if stacked:
            diff = np.max(np.abs(np.asarray(stacked) - v), axis=1)
            k = int(np.argmin(diff))
            if diff[k] <= dedup_tol * (1.0 + abs(v[-1])):
                hyperplanes[k][1].append((p.direction_id, orient))
                continue
        stacked.append(v)
        hyperplanes.append([v, [(p.direction_id, orient)]])
    out = [Hyperplane(v[:-1].copy(), float(v[-1]), tuple(src)) for v, src in hyperplanes]
    return out, fixed


def orientation_map(hyperplanes, fixed, m: int) -> OrientationMap:
    hidx = np.full(m, -1, dtype=np.int64)
    orient = np.zeros(m, dtype=np.int8)
    fx = np.zeros(m, dtype=np.int8)
    for h, plane in enumerate(hyperplanes):
        for d, o in plane.sources:
            hidx[d] = h
            orient[d] = o
    for d, s in fixed.items():
        fx[d] = s
    return OrientationMap(hidx, orient, fx)


def chamber_count_bound(m: int, r: int) -> int:
    """Zaslavsky's bound ``sum_{j<=r} C(m, j)``, saturating at ``sys.maxsize``."""
    if m < 0 or r < 0:
        raise ValueError("m and r must be non-negative")
    total = sum(comb(m, j) for j in range(min(m, r) + 1))
    return min(total, sys.maxsize)


def locate(hyperplanes, xi, epsilon: float = DEFAULT_EPSILON) -> tuple:
    if not hyperplanes:
        return ()
    W = np.array([h.w for h in hyperplanes])
    c = np.array([h.c for h in hyperplanes])
    vals = W @ np.asarray(xi, dtype=float) + c
    s = np.where(vals > epsilon, 1, np.where(vals < -epsilon, -1, 0))
    return tuple(int(v) for v in s)


def zonotope_vertex(signs, hyperplanes) -> np.ndarray:
    signs = np.asarray(signs)
    if np.any(signs == 0):
        raise ValueError("zonotope vertices need a sign vector without zeros")
    if len(hyperplanes) == 0:
        raise ValueError("empty arrangement has no generators")
    G = np.array([np.append(h.w, h.c) for h in hyperplanes])
    return signs @ G


def default_box(features, n: int | None = None) -> float:
    """``2 (n max|P| + 1)``-style box containing every reachable feature vector."""
    return 2.0 * (features.feature_bound() + 1.0)


# the public ``Highs.run`` hops through a worker thread for Ctrl-C handling,
# which costs far more than these tiny LPs themselves
_core_run = highspy._core._Highs.run


class _MarginProbe:
    """Incremental LP: maximize ``t`` s.t. ``s_k (w_k . xi + c_k) >= t``, ``|xi| <= B``.

    Rows mirror the current sign prefix; moving to another prefix deletes the
    rows past the common part and appends the new ones.
    """

    def __init__(self, W, c, box):
        self.W = W
        self.c = c
        m, self.r = W.shape
        lo, hi = _box_bounds(box, self.r)
        self.rows: list[int] = []
        h = highspy.Highs()
        h.setOptionValue("output_flag", False)
        h.setOptionValue("presolve", "off")
        inf = highspy.kHighsInf
        self._inf = inf
        for v in range(self.r):
            h.addVar(lo[v], hi[v])
        self.cap = float(np.max(hi - lo))
        h.addVar(-inf, self.cap)
        h.changeColCost(self.r, -1.0)
        self._idx = np.arange(self.r + 1, dtype=np.int32)
        # row coefficients for sign +1 and -1: s*w . xi - t >= -s*c
        self._coef = {
            1: [np.append(W[k], -1.0) for k in range(m)],
            -1: [np.append(-W[k], -1.0) for k in range(m)],
        }
        self.h = h
        self.calls = 0

    def sync(self, signs) -> None:
        rows = self.rows
        common = 0
        limit = min(len(rows), len(signs))
        while common < limit and rows[common] == signs[common]:
            common += 1
        if common < len(rows):
            self.h.deleteRows(len(rows) - common, np.arange(common, len(rows), dtype=np.int32))
            del rows[common:]
        h, inf, idx, r1 = self.h, self._inf, self._idx, self.r + 1
        for k in range(common, len(signs)):
            s = signs[k]
            h.addRow(-s * self.c[k], inf, r1, idx, self._coef[s][k])
            rows.append(s)

    def solve(self, signs):
        self.sync(signs)
        self.calls += 1
        _core_run(self.h)
        xi = np.array(self.h.getSolution().col_value[: self.r])
        k = len(signs)
        s = np.asarray(signs, dtype=float)
        margin = float(np.min(s * (self.W[:k] @ xi + self.c[:k]))) if k else self.cap
        return xi, margin


def _box_bounds(box, r):
    """Scalar ``B`` gives ``[-B, B]^r``; a pair of arrays gives per-coordinate bounds."""
    if np.isscalar(box):
        return np.full(r, -float(box)), np.full(r, float(box))
    lo, hi = box
    return np.asarray(lo, dtype=float).reshape(r), np.asarray(hi, dtype=float).reshape(r)


def enumerate_chambers(hyperplanes, epsilon: float = DEFAULT_EPSILON,
                       max_chambers: int = DEFAULT_MAX_CHAMBERS, box: float = 1e3,
                       dimension_cap: int = DEFAULT_DIMENSION_CAP, dim: int | None = None,
                       stats: dict | None = None) -> list[Chamber]:
    """Every chamber meeting the box, once, sorted by sign vector.

    ``dim`` is only needed for an empty arrangement.
    """
    m = len(hyperplanes)
    r = hyperplanes[0].w.shape[0] if m else (dim or 0)
    if r > dimension_cap:
        raise DimensionCapExceeded(f"feature dimension {r} exceeds enumeration cap {dimension_cap}")
    if m == 0:
        return [Chamber((), np.zeros(r), float("inf"))]
    W = np.array([h.w for h in hyperplanes], dtype=float)
    c = np.array([h.c for h in hyperplanes], dtype=float)
    probe = _MarginProbe(W, c, box)
    chambers: list[Chamber] = []
    stack = [((), np.zeros(r), float("inf"))]
    while stack:
        signs, xi, margin = stack.pop()
        k = len(signs)
        if k == m:
            chambers.append(Chamber(signs, xi, margin))
            if len(chambers) > max_chambers:
                raise ArrangementTooLarge(
                    f"arrangement too large: more than {max_chambers} chambers")
            continue
        v = float(W[k] @ xi + c[k])
        near = 1 if v > 0 else -1
        children = []
        if abs(v) > epsilon:
            children.append((signs + (near,), xi, min(margin, abs(v))))
        else:
            xi2, t = probe.solve(signs + (near,))
            if t > epsilon:
                children.append((signs + (near,), xi2, t))
        # the probed side is pushed last so the LP rows are already in place
        xi2, t = probe.solve(signs + (-near,))
        if t > epsilon:
            children.append((signs + (-near,), xi2, t))
        stack.extend(children)
    if stats is not None:
        stats["lp_calls"] = stats.get("lp_calls", 0) + probe.calls
    chambers.sort(key=lambda ch: ch.signs)
    return chambers
