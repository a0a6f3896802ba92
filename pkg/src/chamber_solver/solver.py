"""End-to-end exact solver and the Dinkelbach loop for ratio objectives.

Pipeline: catalog -> gain predicates -> hyperplane arrangement -> chambers ->
per-chamber readout -> stability filter -> argmax with lexicographic tie-break.
"""

from __future__ import annotations

import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import oracle
from .arrangement import (
    DEFAULT_DIMENSION_CAP,
    DEFAULT_EPSILON,
    DEFAULT_MAX_CHAMBERS,
    DimensionCapExceeded,
    build_arrangement,
    chamber_count_bound,
    default_box,
    enumerate_chambers,
    orientation_map,
)
from .efd_catalog import Catalog, ConstraintSpec, build_catalog
from .hq_core import DimensionMismatch, GainPredicate, HQForm
from .points import SizeGuardExceeded, check_guard, feasible_chunks, first_feasible, lex_order, pick_best
from .polynomial import (
    _interval_mul,
    as_polynomial,
    hq_from_polynomial,
    merge_forms,
    poly_add,
    remap,
)
from .reconstruct import AmbiguityExceeded, improving_mask, readout, self_consistency, stable_mask

PROVED = "proved"
BEST_FOUND = "best-found"
ORACLE = "oracle"


class NonPositiveDenominator(ValueError):
    pass


@dataclass(frozen=True)
class Instance:
    hq: HQForm
    features: object  # FeatureMatrix or MonomialFeatures
    constraint: ConstraintSpec = field(default_factory=ConstraintSpec.unconstrained)
    name: str = ""
    family: str = ""

    def __post_init__(self):
        if self.hq.r != self.features.r:
            raise DimensionMismatch(f"HQ form has r={self.hq.r}, features have r={self.features.r}")
        self.constraint.validate(self.n)

    @property
    def n(self) -> int:
        return self.features.n

    @property
    def r(self) -> int:
        return self.features.r

    @property
    def catalog(self) -> Catalog:
        cat = self.__dict__.get("_catalog")
        if cat is None:
            cat = build_catalog(self.constraint, self.n)
            object.__setattr__(self, "_catalog", cat)
        return cat

    def value(self, X):
        return self.hq.value(self.features.evaluate(X))

    def predicates(self) -> list[GainPredicate]:
        W, c = self.features.predicates(self.hq, self.catalog.matrix)
        return [GainPredicate(W[k], c[k], k) for k in range(W.shape[0])]


@dataclass(frozen=True)
class SolveOptions:
    epsilon: float = DEFAULT_EPSILON
    ambiguity_cap: int = 16
    max_chambers: int = DEFAULT_MAX_CHAMBERS
    dimension_cap: int = DEFAULT_DIMENSION_CAP
    # "features": per-coordinate range of psi over the feasible set, padded;
    # "wide": the symmetric box 2 (max row |P| sum + 1); or an explicit half-width
    box: object = "features"
    tie_slack: float = 1e-6
    threads: int | None = None
    oracle_max_n: int = 24
    max_iterations: int = 100
    dinkelbach_tol: float = 1e-10

    def workers(self) -> int:
        if self.threads is not None:
            return max(1, int(self.threads))
        env = os.environ.get("CHAMBER_SOLVER_THREADS")
        return max(1, int(env)) if env else 1


@dataclass
class Solution:
    x: np.ndarray
    value: float
    flag: str
    stats: dict
    candidates: np.ndarray | None = None  # stable readout survivors, lexicographic order
    trace: list | None = None  # Dinkelbach ratios, ratio objectives only

    @property
    def proved(self) -> bool:
        return self.flag == PROVED


def _feature_box(instance: Instance, opts: SolveOptions):
    if opts.box == "features":
        lo, hi = instance.features.feature_ranges(instance.constraint)
        pad = 1e-3 * (1.0 + np.maximum(np.abs(lo), np.abs(hi)))
        return lo - pad, hi + pad
    if opts.box == "wide":
        B = default_box(instance.features)
        return np.full(instance.r, -B), np.full(instance.r, B)
    B = float(opts.box)
    return np.full(instance.r, -B), np.full(instance.r, B)


def _gain_span(W, tol: float = 1e-10):
    """Orthonormal basis of the row space of the gain normals."""
    if W.size == 0 or not np.any(W):
        return np.zeros((W.shape[1], 0))
    _, s, Vt = np.linalg.svd(W, full_matrices=False)
    rank = int(np.sum(s > tol * s[0]))
    return Vt[:rank].T


def _project_box(V, lo, hi):
    """Exact range of each ``V[:, j] . xi`` over the box ``lo <= xi <= hi``."""
    P, N = np.maximum(V, 0), np.minimum(V, 0)
    return lo @ P + hi @ N, hi @ P + lo @ N


def _oracle_solution(instance: Instance, opts: SolveOptions, stats: dict, t0: float) -> Solution:
    rep = oracle.brute_force(instance)
    stats.update(mode="oracle", wall_time=time.perf_counter() - t0)
    return Solution(rep.best_x, rep.best_value, ORACLE, stats)


def solve(instance: Instance, opts: SolveOptions | None = None) -> Solution:
    """A global maximizer, proved optimal unless a chamber was skipped for ambiguity."""
    opts = opts or SolveOptions()
    t0 = time.perf_counter()
    cat = instance.catalog
    eps = opts.epsilon
    W, c = instance.features.predicates(instance.hq, cat.matrix)
    V = _gain_span(W)
    dim = V.shape[1]
    stats = {"m": len(cat), "r": instance.r, "arrangement_dim": dim, "hyperplanes": 0,
             "chambers": 0, "candidates": 0, "ambiguous_skips": 0, "lp_calls": 0}
    if dim > opts.dimension_cap:
        try:
            check_guard(instance.constraint, instance.n, opts.oracle_max_n)
        except SizeGuardExceeded as exc:
            raise DimensionCapExceeded(
                f"feature dimension {dim} exceeds enumeration cap {opts.dimension_cap}"
                f" and the instance is too large for oracle mode ({exc})") from exc
        return _oracle_solution(instance, opts, stats, t0)

    WV = W @ V
    preds = [GainPredicate(WV[k], c[k], k) for k in range(len(cat))]
    hyperplanes, fixed = build_arrangement(preds, eps, slack=opts.tie_slack)
    lo, hi = _feature_box(instance, opts)
    plo, phi = _project_box(V, lo, hi)
    enum_stats: dict = {}
    chambers = enumerate_chambers(hyperplanes, eps, opts.max_chambers, box=(plo, phi),
                                  dimension_cap=opts.dimension_cap, dim=dim, stats=enum_stats)
    omap = orientation_map(hyperplanes, fixed, len(cat))
    stats.update(hyperplanes=len(hyperplanes), chambers=len(chambers),
                 lp_calls=enum_stats.get("lp_calls", 0),
                 zaslavsky_bound=chamber_count_bound(len(hyperplanes), dim))

    patterns = {}
    for ch in chambers:
        ds = omap.direction_signs(ch.signs)
        patterns.setdefault(ds.tobytes(), ds)

    def read(block):
        out, skipped = [], 0
        for ds in block:
            try:
                out.extend(readout(ds, cat, opts.ambiguity_cap))
            except AmbiguityExceeded:
                skipped += 1
        return out, skipped

    blocks = list(patterns.values())
    workers = opts.workers()
    if workers > 1 and len(blocks) > 1:
        parts = [blocks[i::workers] for i in range(workers)]
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(read, parts))
    else:
        results = [read(blocks)]
    found: dict[bytes, np.ndarray] = {}
    skips = 0
    for xs, skipped in results:
        skips += skipped
        for x in xs:
            found.setdefault(x.tobytes(), x)
    stats["sign_patterns"] = len(blocks)
    stats["ambiguous_skips"] = skips
    stats["readouts"] = len(found)

    if found:
        X = np.array(list(found.values()), dtype=np.int8)
        X = X[lex_order(X)]
        X = X[stable_mask(X, instance, eps)]
    else:
        X = np.zeros((0, instance.n), dtype=np.int8)
    stats["candidates"] = int(X.shape[0])
    flag = PROVED if skips == 0 else BEST_FOUND
    if X.shape[0] == 0:
        # only reachable when chambers were skipped: fall back to a local optimum
        x = local_search_polish(first_feasible(instance.constraint, instance.n), instance, eps)
        X = x[None, :]
        flag = BEST_FOUND
    values = np.asarray(instance.value(X), dtype=float).reshape(-1)
    k = pick_best(values, X)
    stats["wall_time"] = time.perf_counter() - t0
    return Solution(X[k].copy(), float(values[k]), flag, stats, candidates=X)


def stability_check(x, instance: Instance, epsilon: float = DEFAULT_EPSILON) -> bool:
    return self_consistency(x, instance, epsilon)


def _polish(x0, value_fn, catalog: Catalog, epsilon: float) -> np.ndarray:
    x = np.asarray(x0, dtype=np.int8).copy()
    D = catalog.matrix
    while True:
        moves = np.flatnonzero(catalog.feasible_mask(x[None, :])[0])
        if moves.size == 0:
            return x
        gains = np.asarray(value_fn(x[None, :] + D[moves]), dtype=float).reshape(-1)
        gains -= float(np.asarray(value_fn(x[None, :])).reshape(-1)[0])
        k = int(np.argmax(gains))  # first maximal move in catalog order
        if gains[k] <= epsilon:
            return x
        x = (x + D[moves[k]]).astype(np.int8)


def local_search_polish(x0, instance: Instance, epsilon: float = DEFAULT_EPSILON) -> np.ndarray:
    """Steepest-ascent over elementary moves until no move gains more than epsilon."""
    if not instance.constraint.is_feasible(x0):
        raise ValueError("local search needs a feasible start")
    return _polish(x0, instance.value, instance.catalog, epsilon)


# ---------------------------------------------------------------------------
# ratio objectives


def _interval_quadratic(hq: HQForm, lo, hi) -> tuple[float, float]:
    """Interval enclosure of ``1/2 psi^T Q psi + b^T psi + a`` over a box."""
    acc_lo = acc_hi = hq.a
    r = hq.r
    for i in range(r):
        for j in range(i, r):
            q = hq.Q[i, j] * (0.5 if i == j else 1.0)
            if q == 0.0:
                continue
            if i == j:
                a, b = lo[i] ** 2, hi[i] ** 2
                plo, phi = (0.0 if lo[i] < 0 < hi[i] else min(a, b)), max(a, b)
            else:
                plo, phi = _interval_mul((lo[i], hi[i]), (lo[j], hi[j]))
            acc_lo += min(q * plo, q * phi)
            acc_hi += max(q * plo, q * phi)
        bi = hq.b[i]
        acc_lo += min(bi * lo[i], bi * hi[i])
        acc_hi += max(bi * lo[i], bi * hi[i])
    return acc_lo, acc_hi


@dataclass(frozen=True)
class FuboInstance:
    """Maximize ``N(x) / D(x)`` with ``D > 0`` on the feasible set."""

    numerator: Instance
    denominator: Instance
    name: str = ""
    family: str = ""
    validate_limit: int = 20

    def __post_init__(self):
        if self.numerator.n != self.denominator.n:
            raise DimensionMismatch("numerator and denominator act on different n")
        if self.numerator.constraint != self.denominator.constraint:
            raise ValueError("numerator and denominator must share the constraint")
        self.check_denominator()

    @property
    def n(self) -> int:
        return self.numerator.n

    @property
    def constraint(self) -> ConstraintSpec:
        return self.numerator.constraint

    @property
    def catalog(self) -> Catalog:
        return self.numerator.catalog

    def check_denominator(self, samples: int = 4096, seed: int = 0) -> None:
        den = self.denominator
        if self.n <= self.validate_limit:
            for _, X in feasible_chunks(self.constraint, self.n):
                d = np.asarray(den.value(X), dtype=float).reshape(-1)
                bad = np.flatnonzero(d <= 0)
                if bad.size:
                    raise NonPositiveDenominator(
                        f"denominator not positive on F: D={d[bad[0]]:.6g} at x={X[bad[0]].tolist()}")
            return
        lo, hi = den.features.feature_ranges(self.constraint)
        if _interval_quadratic(den.hq, lo, hi)[0] > 0:
            return
        rng = np.random.default_rng(seed)
        X = np.zeros((samples, self.n), dtype=np.int8)
        for a in range(samples):
            if self.constraint.K is None:
                X[a] = rng.integers(0, 2, self.n)
            else:
                X[a, rng.choice(self.n, self.constraint.K, replace=False)] = 1
        d = np.asarray(den.value(X), dtype=float).reshape(-1)
        bad = np.flatnonzero(d <= 0)
        if bad.size:
            raise NonPositiveDenominator(
                f"denominator not positive on F: D={d[bad[0]]:.6g} at x={X[bad[0]].tolist()}")

    def ratio(self, X):
        X = np.atleast_2d(X)
        N = np.asarray(self.numerator.value(X), dtype=float).reshape(-1)
        D = np.asarray(self.denominator.value(X), dtype=float).reshape(-1)
        bad = np.flatnonzero(D <= 0)
        if bad.size:
            raise NonPositiveDenominator(
                f"denominator not positive on F: D={D[bad[0]]:.6g} at x={X[bad[0]].tolist()}")
        return N / D

    def parametric(self, lam: float) -> Instance:
        """``G(x) = N(x) - lam * D(x)`` as a single instance over merged base forms."""
        U1, p1 = as_polynomial(self.numerator.hq, self.numerator.features)
        U2, p2 = as_polynomial(self.denominator.hq, self.denominator.features)
        U, m1, m2 = merge_forms(U1, U2)
        k = U.shape[0]
        poly = poly_add((1.0, remap(p1, m1, k)), (-float(lam), remap(p2, m2, k)))
        hq, feats = hq_from_polynomial(U, poly)
        return Instance(hq, feats, self.constraint, name=f"{self.name}[lambda={lam:.17g}]",
                        family=self.family)


def solve_fubo(fubo: FuboInstance, opts: SolveOptions | None = None) -> Solution:
    """Dinkelbach iteration with exact inner solves; ``trace`` holds the ratios."""
    opts = opts or SolveOptions()
    t0 = time.perf_counter()
    eps = opts.epsilon
    x = _polish(first_feasible(fubo.constraint, fubo.n), fubo.ratio, fubo.catalog, 0.0)
    lam = float(fubo.ratio(x)[0])
    trace = [lam]
    seen = {x.tobytes()}
    flags = set()
    inner = []
    stop = "max_iterations"
    for _ in range(opts.max_iterations):
        G = fubo.parametric(lam)
        sol = solve(G, opts)
        flags.add(sol.flag)
        inner.append({k: sol.stats.get(k) for k in ("hyperplanes", "chambers", "candidates",
                                                      "ambiguous_skips", "arrangement_dim")})
        N_x = float(fubo.numerator.value(x[None, :])[0])
        if sol.value <= opts.dinkelbach_tol * max(1.0, abs(N_x)):
            stop = "converged"
            break
        lam_new = float(fubo.ratio(sol.x)[0])
        if sol.x.tobytes() in seen or lam_new <= lam:
            stop = "repeat"
            break
        x, lam = sol.x.copy(), lam_new
        seen.add(x.tobytes())
        trace.append(lam)
    if ORACLE in flags:
        flag = ORACLE
    elif BEST_FOUND in flags:
        flag = BEST_FOUND
    else:
        flag = PROVED
    stats = {
        "m": len(fubo.catalog),
        "iterations": len(inner),
        "stop": stop,
        "inner": inner,
        "hyperplanes": sum(s["hyperplanes"] or 0 for s in inner),
        "chambers": sum(s["chambers"] or 0 for s in inner),
        "candidates": sum(s["candidates"] or 0 for s in inner),
        "ambiguous_skips": sum(s["ambiguous_skips"] or 0 for s in inner),
        "wall_time": time.perf_counter() - t0,
    }
    return Solution(x, lam, flag, stats, trace=trace)


__all__ = [
    "BEST_FOUND", "ORACLE", "PROVED", "FuboInstance", "Instance", "NonPositiveDenominator",
    "Solution", "SolveOptions", "improving_mask", "local_search_polish", "solve", "solve_fubo",
    "stability_check",
]
