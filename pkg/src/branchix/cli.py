"""Command-line driver: compute, verify, cp, interpolate, reference-export,
oracle-cp.

The driver is a thin single-threaded layer over the library; parallelism
lives in the engine.  Results of ``compute_branching`` can be cached as
checksummed JSON files keyed by (family, n, q, engine version); a
corrupted cache entry is ignored with a warning and the result is
recomputed.

Environment:
    BRANCHIX_CACHE_DIR   default cache directory (no caching when unset)
    BRANCHIX_GUARD       element-count guard override (integer)

Exit codes:
    0  success
    1  verification mismatch (report still written)
    2  invalid arguments
    3  resource guard exceeded
    4  internal invariant failure
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from fractions import Fraction
from typing import Dict, List, Optional, Tuple

from . import branching, engine, reference, trigroup, verify
from .errors import (
    BranchixError,
    EvenCharacteristic,
    InsufficientPoints,
    NonIntegralCoefficients,
    NonPrimeModulus,
    ResourceGuardExceeded,
    SizeGuardExceeded,
    TooSmall,
    UnsupportedGroup,
    UnsupportedK,
)

SCHEMA_VERSION = 1

EXIT_OK = 0
EXIT_MISMATCH = 1
EXIT_USAGE = 2
EXIT_GUARD = 3
EXIT_INVARIANT = 4

# Grid driven by ``verify --all``: every tabulated group at the primes its
# verification is expected to complete at in reasonable time.
VERIFY_GRID: Tuple[Tuple[str, int, Tuple[int, ...]], ...] = (
    ("gt", 2, (3, 5, 7, 11, 13)),
    ("gt", 3, (3, 5, 7)),
    ("gt", 4, (3, 5)),
    ("ut", 3, (3, 5, 7, 11, 13)),
    ("ut", 4, (3, 5, 7, 11, 13)),
    ("ut", 5, (3,)),
)


class UsageError(Exception):
    """Invalid command-line arguments (exit 2)."""


# ---------------------------------------------------------------------------
# Cache
# ---------------------------------------------------------------------------


def _cache_dir(explicit: Optional[str]) -> Optional[str]:
    return explicit or os.environ.get("BRANCHIX_CACHE_DIR") or None


def _cache_path(cache_dir: str, family: str, n: int, q: int) -> str:
    name = f"{family}_{n}_q{q}_v{branching.ENGINE_VERSION}.json"
    return os.path.join(cache_dir, name)


def _serialize_state(registry, matrix) -> Dict[str, object]:
    return {
        "family": matrix.family,
        "n": matrix.n,
        "q": matrix.q,
        "engine_version": branching.ENGINE_VERSION,
        "types": [
            {
                "type_id": rec.type_id,
                "tuple": list(rec.tuple_codes),
                "class_count": rec.class_count,
                "alternates": [list(alt) for alt in rec.alternates],
            }
            for rec in registry.types
        ],
        "registry_meta": registry.meta,
        "matrix": {
            "entries": [list(row) for row in matrix.entries],
            "type_order": [dict(rec) for rec in matrix.type_order],
            "meta": matrix.meta,
        },
    }


def _checksum(payload: Dict[str, object]) -> str:
    canonical = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode()).hexdigest()


def _restore_state(payload: Dict[str, object]):
    spec = trigroup.make_group(payload["family"], payload["n"], payload["q"])
    registry = branching.TypeRegistry(spec)
    for rec in payload["types"]:
        sub = engine.subgroup_from_tuple(spec, rec["tuple"])
        record = branching.TypeRecord(
            type_id=rec["type_id"],
            subgroup=sub,
            tuple_codes=tuple(rec["tuple"]),
            class_count=rec["class_count"],
        )
        record.alternates = [tuple(alt) for alt in rec["alternates"]]
        registry.types.append(record)
        registry._by_key[sub.key()] = record.type_id
        registry._by_order.setdefault(sub.order, []).append(record.type_id)
    registry.meta = payload["registry_meta"]
    mat = payload["matrix"]
    matrix = branching.BranchingMatrix(
        family=payload["family"],
        n=payload["n"],
        q=payload["q"],
        dim=len(mat["entries"]),
        entries=tuple(tuple(row) for row in mat["entries"]),
        type_order=tuple(mat["type_order"]),
        meta=mat["meta"],
    )
    return registry, matrix


def _load_cache(cache_dir: str, family: str, n: int, q: int):
    path = _cache_path(cache_dir, family, n, q)
    if not os.path.exists(path):
        return None
    try:
        with open(path) as fh:
            entry = json.load(fh)
        if entry.get("schema") != SCHEMA_VERSION:
            raise ValueError(f"schema {entry.get('schema')}")
        key = entry["key"]
        if (key["family"], key["n"], key["q"]) != (family, n, q) or \
                key["engine_version"] != branching.ENGINE_VERSION:
            raise ValueError("key mismatch")
        if _checksum(entry["payload"]) != entry["checksum"]:
            raise ValueError("checksum mismatch")
        return _restore_state(entry["payload"])
    except (OSError, ValueError, KeyError, TypeError) as exc:
        print(f"warning: ignoring corrupted cache entry {path}: {exc}",
              file=sys.stderr)
        return None


def _save_cache(cache_dir: str, registry, matrix) -> None:
    os.makedirs(cache_dir, exist_ok=True)
    payload = _serialize_state(registry, matrix)
    entry = {
        "schema": SCHEMA_VERSION,
        "key": {
            "family": matrix.family,
            "n": matrix.n,
            "q": matrix.q,
            "engine_version": branching.ENGINE_VERSION,
        },
        "checksum": _checksum(payload),
        "payload": payload,
    }
    path = _cache_path(cache_dir, matrix.family, matrix.n, matrix.q)
    tmp = path + ".tmp"
    with open(tmp, "w") as fh:
        json.dump(entry, fh)
    os.replace(tmp, path)


def _compute(family: str, n: int, q: int, threads: Optional[int],
             cache_dir: Optional[str]):
    """Cache-aware compute_branching."""
    if cache_dir:
        state = _load_cache(cache_dir, family, n, q)
        if state is not None:
            return state
    spec = trigroup.make_group(family, n, q)
    registry, matrix = branching.compute_branching(spec, threads=threads or 1)
    if cache_dir:
        _save_cache(cache_dir, registry, matrix)
    return registry, matrix


# ---------------------------------------------------------------------------
# Shared argument handling
# ---------------------------------------------------------------------------


def _check_group_args(family: str, n: int, q: int) -> None:
    if family not in ("gt", "ut"):
        raise UsageError(f"family must be 'gt' or 'ut', got {family!r}")
    if q < 3 or q % 2 == 0:
        raise UsageError(f"q must be an odd prime, got {q}")
    k = 2
    while k * k <= q:
        if q % k == 0:
            raise UsageError(f"q must be an odd prime, got {q} = {k}*{q // k}")
        k += 1


def _threads(args) -> int:
    if args.threads is not None:
        if args.threads < 1:
            raise UsageError("--threads must be >= 1")
        return args.threads
    return os.cpu_count() or 1


# ---------------------------------------------------------------------------
# compute
# ---------------------------------------------------------------------------


def _fingerprint_digest(record) -> str:
    fp = record.fingerprint(tier=1)
    return hashlib.sha256(repr(fp).encode()).hexdigest()[:16]


def _structural_checks(registry, matrix) -> Dict[str, bool]:
    """The three cheap structural laws (well-definedness is verify's job)."""
    dim = matrix.dim
    orders = [rec["order"] for rec in matrix.type_order]
    ids = [rec["type_id"] for rec in matrix.type_order]

    column_sums = True
    for j in range(dim):
        rec = registry.types[ids[j]]
        colsum = sum(matrix.entries[i][j] for i in range(dim))
        expected = (rec.subgroup.order if engine.is_abelian(rec.subgroup)
                    else len(engine.conjugacy_classes(rec.subgroup)))
        if colsum != expected:
            column_sums = False
            break

    class_equation = True
    for j in range(dim):
        zj = orders[j]
        acc = 0
        for i in range(dim):
            cnt = matrix.entries[i][j]
            if cnt and zj % orders[i]:
                class_equation = False
                break
            acc += cnt * (zj // orders[i]) if cnt else 0
        if not class_equation or acc != zj:
            class_equation = False
            break

    abelian_diagonal = True
    for j in range(dim):
        rec = registry.types[ids[j]]
        if not engine.is_abelian(rec.subgroup):
            continue
        for i in range(dim):
            expected = rec.subgroup.order if i == j else 0
            if matrix.entries[i][j] != expected:
                abelian_diagonal = False
                break
        if not abelian_diagonal:
            break

    return {
        "column_sums": column_sums,
        "class_equation": class_equation,
        "abelian_diagonal": abelian_diagonal,
    }


def cmd_compute(args) -> int:
    _check_group_args(args.family, args.n, args.q)
    registry, matrix = _compute(args.family, args.n, args.q,
                                _threads(args), _cache_dir(args.cache_dir))
    checks = _structural_checks(registry, matrix)
    doc = {
        "schema": SCHEMA_VERSION,
        "family": matrix.family,
        "n": matrix.n,
        "q": matrix.q,
        "engine_version": branching.ENGINE_VERSION,
        "types": [
            {
                "id": pos,
                "order": rec["order"],
                "class_count": rec["class_count"],
                "fingerprint_digest": _fingerprint_digest(
                    registry.types[rec["type_id"]]),
            }
            for pos, rec in enumerate(matrix.type_order)
        ],
        "matrix": [list(row) for row in matrix.entries],
        "invariant_checks": checks,
    }
    text = json.dumps(doc, indent=2)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)
    if not all(checks.values()):
        failing = [name for name, ok in checks.items() if not ok]
        print(f"invariant failure: {', '.join(failing)}", file=sys.stderr)
        return EXIT_INVARIANT
    return EXIT_OK


# ---------------------------------------------------------------------------
# verify
# ---------------------------------------------------------------------------


def _verify_one(family: str, n: int, q: int, threads: int,
                cache_dir: Optional[str]) -> Dict[str, object]:
    registry, matrix = _compute(family, n, q, threads, cache_dir)
    report = verify.build_report(family, n, q, registry=registry,
                                 matrix=matrix, threads=threads)
    report["schema"] = SCHEMA_VERSION
    report["engine_version"] = branching.ENGINE_VERSION
    return report


def _report_passes(report: Dict[str, object]) -> bool:
    if report["status"] != "MATCHED":
        return False
    return all(item["status"] for item in report["invariant_results"])


def cmd_verify(args) -> int:
    cache_dir = _cache_dir(args.cache_dir)
    threads = _threads(args)
    if args.all:
        reports = []
        for family, n, qs in VERIFY_GRID:
            for q in qs:
                report = _verify_one(family, n, q, threads, cache_dir)
                reports.append(report)
                print(verify.render_report(report))
        doc = {"schema": SCHEMA_VERSION, "reports": reports}
        if args.report:
            with open(args.report, "w") as fh:
                json.dump(doc, fh, indent=2)
        return EXIT_OK if all(_report_passes(r) for r in reports) \
            else EXIT_MISMATCH
    if args.family is None or args.n is None or args.q is None:
        raise UsageError("verify needs --family, --n and --q (or --all)")
    _check_group_args(args.family, args.n, args.q)
    report = _verify_one(args.family, args.n, args.q, threads, cache_dir)
    print(verify.render_report(report))
    if args.report:
        with open(args.report, "w") as fh:
            json.dump(report, fh, indent=2)
    return EXIT_OK if _report_passes(report) else EXIT_MISMATCH


# ---------------------------------------------------------------------------
# cp
# ---------------------------------------------------------------------------


def _format_fraction(value: Fraction) -> str:
    return f"{value.numerator}/{value.denominator}"


def cmd_cp(args) -> int:
    if args.symbolic and args.q is not None:
        raise UsageError("--symbolic and --q are mutually exclusive")
    if args.symbolic and args.oracle:
        raise UsageError("--oracle needs a numeric --q")
    if not args.symbolic and args.q is None:
        raise UsageError("cp needs --q or --symbolic")
    if not reference.CP_MIN_K <= args.k <= reference.CP_MAX_K:
        raise UsageError(
            f"k must be in {reference.CP_MIN_K}..{reference.CP_MAX_K}, "
            f"got {args.k}")

    ref = reference.reference_cp(args.family, args.n, args.k)
    if args.symbolic:
        print(ref.display)
        num, den = reference.cp_symbolic(args.family, args.n, args.k)
        agree = num * ref.denominator == den * ref.numerator
        print(f"matrix power identity: {'agree' if agree else 'DIFFER'}")
        if not agree:
            print(f"  matrix power gives ({num}) / ({den})")
        return EXIT_OK

    _check_group_args(args.family, args.n, args.q)
    sources: List[Tuple[str, Fraction]] = []
    tabulated = ref.value(args.q)
    sources.append(("tabulated formula", tabulated))

    registry, matrix = _compute(args.family, args.n, args.q,
                                _threads(args), _cache_dir(args.cache_dir))
    classes = branching.tuple_class_count(matrix, args.k - 1)
    order = trigroup.make_group(args.family, args.n, args.q).order
    sources.append(("empirical matrix", Fraction(classes,
                                                 order ** (args.k - 1))))

    if args.oracle:
        oracle = verify.oracle_commuting_probability(
            args.family, args.n, args.q, args.k)
        sources.append(("oracle", oracle))

    value = sources[0][1]
    print(_format_fraction(value))
    all_agree = all(v == value for _, v in sources)
    for name, v in sources[1:]:
        flag = "agree" if v == value else f"DIFFER ({_format_fraction(v)})"
        print(f"{name}: {flag}")
    if all_agree and len(sources) > 1:
        print("all sources agree")
    return EXIT_OK


def cmd_oracle_cp(args) -> int:
    _check_group_args(args.family, args.n, args.q)
    value = verify.oracle_commuting_probability(
        args.family, args.n, args.q, args.k)
    print(_format_fraction(value))
    return EXIT_OK


# ---------------------------------------------------------------------------
# interpolate
# ---------------------------------------------------------------------------


def cmd_interpolate(args) -> int:
    try:
        qs = tuple(int(tok) for tok in args.qs.split(","))
    except ValueError:
        raise UsageError(f"--qs must be a comma-separated integer list, "
                         f"got {args.qs!r}")
    for q in qs:
        _check_group_args(args.family, args.n, q)
    if len(set(qs)) != len(qs):
        raise UsageError("--qs contains repeated primes")

    ref = reference.reference_matrix(args.family, args.n)
    cache_dir = _cache_dir(args.cache_dir)
    threads = _threads(args)
    samples = {}
    for q in qs:
        registry, matrix = _compute(args.family, args.n, q, threads,
                                    cache_dir)
        match = verify.match_matrices(matrix, ref, q)
        samples[q] = verify.aligned_entries(matrix, match, ref)

    grid = verify.interpolate_matrix(samples, args.degree)
    dim = ref.dim
    total = dim * dim
    matches = 0
    mismatched: List[str] = []
    for i in range(dim):
        for j in range(dim):
            if grid[i][j] == ref.entries[i][j]:
                matches += 1
            else:
                mismatched.append(
                    f"({ref.labels[i]}, {ref.labels[j]}): interpolated "
                    f"{grid[i][j]}, reference {ref.entries[i][j]}")
    print(f"{matches}/{total} entries match")
    for line in mismatched[:20]:
        print("  " + line)
    if len(mismatched) > 20:
        print(f"  ... {len(mismatched) - 20} more")
    return EXIT_OK if matches == total else EXIT_MISMATCH


# ---------------------------------------------------------------------------
# reference-export
# ---------------------------------------------------------------------------


def cmd_reference_export(args) -> int:
    ref = reference.reference_matrix(args.family, args.n)
    doc = {
        "schema": SCHEMA_VERSION,
        "family": ref.family,
        "n": ref.n,
        "labels": list(ref.labels),
        "entries": [[str(cell) for cell in row] for row in ref.entries],
        "class_count": {label: str(ref.class_count_poly[label])
                        for label in ref.labels},
        "centralizer_order": {label: str(ref.centralizer_order_poly[label])
                              for label in ref.labels},
        "cp": {
            k: {"numerator": str(reference.reference_cp(args.family, args.n,
                                                        k).numerator),
                "denominator": str(reference.reference_cp(args.family, args.n,
                                                          k).denominator)}
            for k in range(reference.CP_MIN_K, reference.CP_MAX_K + 1)
        },
        "repairs": [
            {"kind": rec.kind, "row": rec.row, "col": rec.col,
             "original": rec.original, "stored": rec.stored,
             "reason": rec.reason}
            for rec in ref.repairs
        ],
        "suspect_cells": [list(cell) for cell in ref.suspect_cells],
        "notes": list(ref.notes),
    }
    text = json.dumps(doc, indent=2)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)
    return EXIT_OK


# ---------------------------------------------------------------------------
# Entry point
# ---------------------------------------------------------------------------


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="branchix",
        description="Branching matrices of commuting-tuple classes in "
                    "triangular matrix groups over odd prime fields.")
    sub = parser.add_subparsers(dest="command", required=True)

    def group_args(p, need_q=True):
        p.add_argument("--family", choices=("gt", "ut"), required=True)
        p.add_argument("--n", type=int, required=True)
        if need_q:
            p.add_argument("--q", type=int, required=True)
        p.add_argument("--threads", type=int, default=None)
        p.add_argument("--cache-dir", default=None)

    p = sub.add_parser("compute", help="compute one branching matrix")
    group_args(p)
    p.add_argument("--out", default=None, help="write JSON here")
    p.set_defaults(func=cmd_compute)

    p = sub.add_parser("verify", help="match a computed matrix against the "
                                      "built-in polynomial tables")
    p.add_argument("--family", choices=("gt", "ut"))
    p.add_argument("--n", type=int)
    p.add_argument("--q", type=int)
    p.add_argument("--all", action="store_true",
                   help="run the whole verification grid")
    p.add_argument("--threads", type=int, default=None)
    p.add_argument("--cache-dir", default=None)
    p.add_argument("--report", default=None, help="write JSON report here")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("cp", help="commuting probability of k-tuples")
    p.add_argument("--family", choices=("gt", "ut"), required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--q", type=int, default=None)
    p.add_argument("--symbolic", action="store_true")
    p.add_argument("--oracle", action="store_true")
    p.add_argument("--threads", type=int, default=None)
    p.add_argument("--cache-dir", default=None)
    p.set_defaults(func=cmd_cp)

    p = sub.add_parser("oracle-cp", help="brute-force commuting probability")
    p.add_argument("--family", choices=("gt", "ut"), required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--q", type=int, required=True)
    p.add_argument("--k", type=int, required=True)
    p.set_defaults(func=cmd_oracle_cp)

    p = sub.add_parser("interpolate", help="fit per-entry polynomials from "
                                           "runs at several primes")
    p.add_argument("--family", choices=("gt", "ut"), required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--qs", required=True,
                   help="comma-separated sample primes, e.g. 3,5,7")
    p.add_argument("--degree", type=int, default=4,
                   help="interpolation degree bound (default 4)")
    p.add_argument("--threads", type=int, default=None)
    p.add_argument("--cache-dir", default=None)
    p.set_defaults(func=cmd_interpolate)

    p = sub.add_parser("reference-export",
                       help="dump one polynomial table as JSON")
    p.add_argument("--family", choices=("gt", "ut"), required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_reference_export)

    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on bad usage already; normalize other codes
        return EXIT_USAGE if exc.code not in (0,) else 0
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (NonPrimeModulus, EvenCharacteristic, TooSmall) as exc:
        print(f"error: q must be an odd prime ({exc})", file=sys.stderr)
        return EXIT_USAGE
    except (UnsupportedGroup, UnsupportedK, InsufficientPoints) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ResourceGuardExceeded, SizeGuardExceeded) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_GUARD
    except BranchixError as exc:
        print(f"internal invariant failure: {exc}", file=sys.stderr)
        return EXIT_INVARIANT


if __name__ == "__main__":
    sys.exit(main())
