"""Command-line front end: ``chamber-solver {solve,oracle,verify,chambers,bench}``.

Exit codes: 0 success, 1 malformed input, 2 capacity limit hit, 3 verify
disagreement. Reports are JSON on standard output; diagnostics go to stderr.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from pathlib import Path

import jsonschema

from . import oracle, solver
from .arrangement import (
    ArrangementTooLarge,
    DimensionCapExceeded,
    build_arrangement,
    chamber_count_bound,
    enumerate_chambers,
)
from .corpus import make_document
from .instances import FAMILIES, RankTooLarge, from_document
from .points import SizeGuardExceeded
from .polynomial import DegreeOverflow
from .solver import FuboInstance, SolveOptions

EXIT_OK, EXIT_INPUT, EXIT_CAPACITY, EXIT_DISAGREE = 0, 1, 2, 3
CAPACITY_ERRORS = (ArrangementTooLarge, DimensionCapExceeded, SizeGuardExceeded, RankTooLarge,
                   DegreeOverflow)
VERIFY_RTOL = 1e-9

_num = {"type": "number"}
_vec = {"type": "array", "items": _num, "minItems": 2}
_mat = {"type": "array", "items": {"type": "array", "items": _num, "minItems": 1}, "minItems": 1}


def _params(props: dict, required: list) -> dict:
    return {"type": "object", "properties": props, "required": required, "additionalProperties": False}


PARAM_SCHEMAS = {
    "p2l": _params({"a": _vec, "b": _vec}, ["a", "b"]),
    "qubo_factors": _params({"V": _mat, "lambda": {"type": "array", "items": _num, "minItems": 1}},
                            ["V", "lambda"]),
    "qubo_dense": _params({"W": _mat, "u": _vec, "a0": _num, "rank_tol": _num}, ["W"]),
    "covariance": _params({"a": _vec, "b": _vec}, ["a", "b"]),
    "pubo_cp": _params({"a0": _num, "terms": {"type": "array", "minItems": 1, "items": {
        "type": "object", "additionalProperties": False, "required": ["degree", "weight", "u"],
        "properties": {"degree": {"type": "integer", "minimum": 1}, "weight": _num, "u": _vec}}}},
        ["terms"]),
    "linear_fractional": _params({"a": _vec, "alpha": _num, "b": _vec, "beta": _num},
                                 ["a", "alpha", "b", "beta"]),
    "pearson": _params({"a": _vec, "b": _vec}, ["a", "b"]),
}

INSTANCE_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["family", "params"],
    "properties": {
        "family": {"enum": list(FAMILIES)},
        "name": {"type": "string"},
        "params": {"type": "object"},
        "constraint": {"oneOf": [
            {"type": "object", "additionalProperties": False, "required": ["type"],
             "properties": {"type": {"const": "none"}}},
            {"type": "object", "additionalProperties": False, "required": ["type", "k"],
             "properties": {"type": {"const": "cardinality"}, "k": {"type": "integer", "minimum": 1}}},
        ]},
        "options": {"type": "object", "additionalProperties": False, "properties": {
            "epsilon": {"type": "number", "exclusiveMinimum": 0},
            "ambiguity_cap": {"type": "integer", "minimum": 0},
            "max_chambers": {"type": "integer", "minimum": 1},
            "dimension_cap": {"type": "integer", "minimum": 1},
            "seed": {"type": "integer"},
        }},
    },
    "allOf": [{"if": {"properties": {"family": {"const": f}}},
               "then": {"properties": {"params": PARAM_SCHEMAS[f]}}} for f in FAMILIES],
}

_bits = {"type": "array", "items": {"enum": [0, 1]}}
REPORT_SCHEMA = {
    "type": "object",
    "required": ["command", "instance", "best_x", "best_value", "optimal_flag", "stats", "config"],
    "properties": {
        "command": {"enum": ["solve", "oracle"]},
        "best_x": _bits,
        "best_value": _num,
        "optimal_flag": {"enum": ["proved", "best-found", "oracle"]},
        "stats": {"type": "object", "properties": {
            "m": {"type": "integer"}, "hyperplanes": {"type": ["integer", "null"]},
            "chambers": {"type": ["integer", "null"]}, "candidates": {"type": ["integer", "null"]},
            "ambiguous_skips": {"type": ["integer", "null"]},
            "dinkelbach_trace": {"type": "array", "items": _num},
            "wall_time_ms": _num}},
        "config": {"type": "object"},
    },
    # a proved optimum never comes from a skipped chamber
    "if": {"properties": {"optimal_flag": {"const": "proved"}}},
    "then": {"properties": {"stats": {"properties": {"ambiguous_skips": {"const": 0}}}}},
}


class InputError(ValueError):
    pass


def _reject_constant(token):
    raise InputError(f"non-finite number {token!r} is not allowed")


def load_document(path) -> dict:
    text = Path(path).read_text()
    try:
        doc = json.loads(text, parse_constant=_reject_constant)
    except json.JSONDecodeError as exc:
        raise InputError(f"malformed JSON at line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    validate_document(doc)
    return doc


def validate_document(doc) -> None:
    try:
        jsonschema.validate(doc, INSTANCE_SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise InputError(f"schema violation at {where}: {exc.message}") from exc


def options_from(doc: dict, args) -> tuple[SolveOptions, dict]:
    cfg = {"epsilon": 1e-9, "ambiguity_cap": 16, "max_chambers": 500_000, "dimension_cap": 6,
           "seed": 42}
    cfg.update(doc.get("options", {}))
    for key in ("epsilon", "ambiguity_cap", "max_chambers", "dimension_cap", "seed"):
        val = getattr(args, key, None)
        if val is not None:
            cfg[key] = val
    threads = args.threads
    if threads is None and os.environ.get("CHAMBER_SOLVER_THREADS"):
        threads = int(os.environ["CHAMBER_SOLVER_THREADS"])
    cfg["threads"] = threads or 1
    opts = SolveOptions(epsilon=cfg["epsilon"], ambiguity_cap=cfg["ambiguity_cap"],
                        max_chambers=cfg["max_chambers"], dimension_cap=cfg["dimension_cap"],
                        threads=cfg["threads"])
    return opts, cfg


def _describe(doc: dict, inst) -> dict:
    return {"name": doc.get("name", ""), "family": doc["family"], "n": inst.n,
            "constraint": inst.constraint.to_dict()}


def _ms(seconds: float) -> float:
    return round(seconds * 1000.0, 3)


def solve_report(doc: dict, inst, opts: SolveOptions, cfg: dict, timing: bool = True) -> dict:
    t0 = time.perf_counter()
    if isinstance(inst, FuboInstance):
        sol = solver.solve_fubo(inst, opts)
    else:
        sol = solver.solve(inst, opts)
    elapsed = time.perf_counter() - t0
    st = sol.stats
    stats = {k: st.get(k) for k in ("m", "hyperplanes", "chambers", "candidates", "ambiguous_skips")}
    if sol.trace is not None:
        stats["dinkelbach_trace"] = list(sol.trace)
        stats["iterations"] = st.get("iterations")
    else:
        stats["arrangement_dim"] = st.get("arrangement_dim")
    if timing:
        stats["wall_time_ms"] = _ms(elapsed)
    return {"command": "solve", "instance": _describe(doc, inst), "best_x": sol.x.astype(int).tolist(),
            "best_value": float(sol.value), "optimal_flag": sol.flag, "stats": stats, "config": cfg}


def oracle_report(doc: dict, inst, cfg: dict, timing: bool = True) -> dict:
    t0 = time.perf_counter()
    rep = oracle.brute_force_ratio(inst) if isinstance(inst, FuboInstance) else oracle.brute_force(inst)
    stats = {"num_feasible": rep.num_feasible}
    if timing:
        stats["wall_time_ms"] = _ms(time.perf_counter() - t0)
    return {"command": "oracle", "instance": _describe(doc, inst), "best_x": rep.best_x.astype(int).tolist(),
            "best_value": float(rep.best_value), "optimal_flag": "oracle", "stats": stats, "config": cfg}


def values_agree(a: float, b: float, rtol: float = VERIFY_RTOL) -> bool:
    return abs(a - b) <= rtol * max(1.0, abs(a), abs(b))


def verify_report(doc: dict, inst, opts, cfg, timing: bool = True) -> dict:
    s = solve_report(doc, inst, opts, cfg, timing)
    o = oracle_report(doc, inst, cfg, timing)
    agree = values_agree(s["best_value"], o["best_value"])
    return {"command": "verify", "agree": agree, "abs_diff": abs(s["best_value"] - o["best_value"]),
            "tolerance": VERIFY_RTOL, "solve": s, "oracle": o}


def chambers_report(doc: dict, inst, opts: SolveOptions, count_only: bool) -> dict:
    if isinstance(inst, FuboInstance):
        raise InputError("chamber statistics need a single objective, not a ratio family")
    cat = inst.catalog
    W, c = inst.features.predicates(inst.hq, cat.matrix)
    V = solver._gain_span(W)
    dim = V.shape[1]
    preds = [solver.GainPredicate(row, cv, k) for k, (row, cv) in enumerate(zip(W @ V, c))]
    hyperplanes, fixed = build_arrangement(preds, opts.epsilon, slack=opts.tie_slack)
    if dim > opts.dimension_cap:
        raise DimensionCapExceeded(f"feature dimension {dim} exceeds enumeration cap {opts.dimension_cap}")
    lo, hi = solver._feature_box(inst, opts)
    plo, phi = solver._project_box(V, lo, hi)
    chambers = enumerate_chambers(hyperplanes, opts.epsilon, opts.max_chambers, box=(plo, phi),
                                  dimension_cap=opts.dimension_cap, dim=dim)
    out = {"command": "chambers", "instance": _describe(doc, inst), "m": len(cat),
           "hyperplanes": len(hyperplanes), "fixed_signs": len(fixed), "dimension": dim,
           "chambers": len(chambers), "zaslavsky_bound": chamber_count_bound(len(hyperplanes), dim)}
    if not count_only:
        out["sign_vectors"] = ["".join("+" if s > 0 else "-" for s in ch.signs) for ch in chambers]
    return out


def bench_rows(families, sizes, seed: int, count: int, corpus_dir=None, timing: bool = True) -> list:
    rows = []
    if corpus_dir is not None:
        Path(corpus_dir).mkdir(parents=True, exist_ok=True)
    for fam in families:
        for n in sizes:
            for i in range(count):
                doc = make_document(fam, n, seed, i)
                if corpus_dir is not None:
                    Path(corpus_dir, f"{doc['name']}.json").write_text(json.dumps(doc, indent=2) + "\n")
                inst = from_document(doc)
                t0 = time.perf_counter()
                if isinstance(inst, FuboInstance):
                    sol = solver.solve_fubo(inst)
                else:
                    sol = solver.solve(inst)
                row = {"family": fam, "n": n, "K": inst.constraint.K, "m": sol.stats.get("m"),
                       "hyperplanes": sol.stats.get("hyperplanes"), "chambers": sol.stats.get("chambers"),
                       "best_value": float(sol.value)}
                if timing:
                    row["time_s"] = round(time.perf_counter() - t0, 4)
                rows.append(row)
    return rows


def _emit(obj) -> None:
    sys.stdout.write(json.dumps(obj, indent=2) + "\n")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="chamber-solver", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--epsilon", type=float)
        sp.add_argument("--ambiguity-cap", dest="ambiguity_cap", type=int)
        sp.add_argument("--max-chambers", dest="max_chambers", type=int)
        sp.add_argument("--dimension-cap", dest="dimension_cap", type=int)
        sp.add_argument("--threads", type=int, help="worker cap (env CHAMBER_SOLVER_THREADS)")
        sp.add_argument("--seed", type=int)
        sp.add_argument("--no-timing", dest="timing", action="store_false",
                        help="omit wall-clock fields so reports are byte-reproducible")

    for name in ("solve", "oracle", "verify", "chambers"):
        sp = sub.add_parser(name)
        sp.add_argument("path")
        common(sp)
        if name == "chambers":
            sp.add_argument("--count-only", action="store_true")
    sp = sub.add_parser("bench")
    sp.add_argument("corpus_dir", nargs="?", help="write the generated instance files here")
    sp.add_argument("--families", default="p2l")
    sp.add_argument("--sizes", default="8,16,32,64")
    sp.add_argument("--count", type=int, default=1)
    common(sp)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "bench":
            fams = [f.strip() for f in args.families.split(",") if f.strip()]
            unknown = [f for f in fams if f not in FAMILIES]
            if unknown:
                raise InputError(f"unknown families {unknown}")
            sizes = [int(s) for s in args.sizes.split(",") if s.strip()]
            seed = 42 if args.seed is None else args.seed
            rows = bench_rows(fams, sizes, seed, args.count, args.corpus_dir, args.timing)
            _emit({"command": "bench", "seed": seed, "rows": rows})
            return EXIT_OK
        doc = load_document(args.path)
        inst = from_document(doc)
        opts, cfg = options_from(doc, args)
        if args.command == "solve":
            _emit(solve_report(doc, inst, opts, cfg, args.timing))
        elif args.command == "oracle":
            _emit(oracle_report(doc, inst, cfg, args.timing))
        elif args.command == "verify":
            rep = verify_report(doc, inst, opts, cfg, args.timing)
            _emit(rep)
            if not rep["agree"]:
                print(f"disagreement: solve {rep['solve']['best_value']!r} vs oracle "
                      f"{rep['oracle']['best_value']!r}", file=sys.stderr)
                return EXIT_DISAGREE
        else:
            _emit(chambers_report(doc, inst, opts, args.count_only))
        return EXIT_OK
    except CAPACITY_ERRORS as exc:
        print(f"capacity: {exc}", file=sys.stderr)
        return EXIT_CAPACITY
    except (InputError, ValueError, KeyError, TypeError, OSError) as exc:
        print(f"input: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
