"""Verification of computed branching matrices against the reference.

The central operation is ``match_matrices``: align an empirically
computed branching matrix (types discovered by the engine, in canonical
engine order) with a reference polynomial matrix evaluated at the same
``q``, by searching for a label assignment that is consistent with
centralizer orders, class counts and every matrix cell.  Everything is
exact integer arithmetic.

Also here: exact Lagrange interpolation of matrices computed at several
primes back into polynomial form, a small brute-force commuting
probability oracle, isomorphism spot checks for centralizer families in
UT_4, and JSON/human reporting.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from . import branching, engine, trigroup
from .errors import (
    DimensionIncompatible,
    InsufficientPoints,
    NonIntegralCoefficients,
    SizeGuardExceeded,
)
from .reference import (
    IntPolynomial,
    PolyBranchingMatrix,
    group_order_poly,
    poly_eval,
    reference_matrix,
)

__all__ = [
    "MatchResult",
    "aligned_entries",
    "build_report",
    "check_iso_claims",
    "interpolate_matrix",
    "match_matrices",
    "oracle_commuting_probability",
    "render_report",
    "run_invariant_suite",
]

MATCH_NODE_GUARD = 2_000_000

ORACLE_LIMIT_K3 = 1000
ORACLE_LIMIT_K4 = 100


@dataclass(frozen=True)
class MatchResult:
    """Outcome of aligning an empirical matrix with the reference.

    ``permutation`` maps reference labels to empirical type indices for
    every label that took part in the match.  ``absent_types`` lists
    labels whose class-count polynomial vanishes at this ``q`` (they may
    still be matched when the engine reached them through longer
    tuples).  ``diffs`` is empty exactly when ``status == "MATCHED"``.
    """

    status: str                      # MATCHED | MISMATCH | PARTIAL
    q: int
    permutation: Tuple[Tuple[str, int], ...]
    absent_types: Tuple[str, ...]
    diffs: Tuple[Dict[str, object], ...]
    detail: str = ""

    def label_of(self, type_index: int) -> Optional[str]:
        for label, idx in self.permutation:
            if idx == type_index:
                return label
        return None


def _empirical_profile(empirical) -> Tuple[List[int], List[int]]:
    orders = [rec["order"] for rec in empirical.type_order]
    counts = [rec["class_count"] for rec in empirical.type_order]
    return orders, counts


def match_matrices(empirical, reference: PolyBranchingMatrix,
                   q: Optional[int] = None) -> MatchResult:
    """Align an engine matrix with the reference at ``q``.

    Labels with identically-zero class-count polynomial (types that only
    occur for longer tuples) always participate.  Labels whose count
    polynomial vanishes at this particular ``q`` participate only when
    an empirical zero-count type of the right centralizer order exists;
    otherwise they are dropped and reported in ``absent_types``.

    Raises :class:`DimensionIncompatible` when no participation choice
    can make the dimensions agree.
    """
    if q is None:
        q = empirical.q
    elif empirical.q != q:
        raise ValueError(f"empirical matrix is at q={empirical.q}, not {q}")
    if (empirical.family, empirical.n) != (reference.family, reference.n):
        raise ValueError(
            f"group mismatch: empirical {empirical.family}_{empirical.n}, "
            f"reference {reference.family}_{reference.n}"
        )

    labels = reference.labels
    ref_cells = reference.evaluate(q)
    ref_order = {
        label: poly_eval(reference.centralizer_order_poly[label], q)
        for label in labels
    }
    ref_count = {
        label: poly_eval(reference.class_count_poly[label], q)
        for label in labels
    }
    vanished = tuple(
        label for label in labels
        if ref_count[label] == 0 and not reference.class_count_poly[label].is_zero()
    )
    required = [label for label in labels if label not in vanished]

    emp_orders, emp_counts = _empirical_profile(empirical)
    dim_e = empirical.dim

    candidates: Dict[str, List[int]] = {}
    for label in labels:
        cands = [
            i for i in range(dim_e)
            if emp_orders[i] == ref_order[label]
            and emp_counts[i] == ref_count[label]
        ]
        candidates[label] = cands

    matchable_vanished = [label for label in vanished if candidates[label]]
    lo = len(required)
    hi = len(required) + len(matchable_vanished)
    if not (lo <= dim_e <= hi) or any(not candidates[l] for l in required):
        missing = [l for l in required if not candidates[l]]
        raise DimensionIncompatible(
            f"{reference.family}_{reference.n} at q={q}: empirical matrix "
            f"has {dim_e} types, reference requires {lo} "
            f"(plus up to {len(matchable_vanished)} optional vanished "
            f"labels); labels without any candidate: {missing}"
        )

    lidx = {label: i for i, label in enumerate(labels)}

    def cells_ok(assign: Dict[str, int], label: str, idx: int) -> bool:
        li = lidx[label]
        for other, oidx in assign.items():
            oi = lidx[other]
            if ref_cells[li][oi] != empirical.entries[idx][oidx]:
                return False
            if ref_cells[oi][li] != empirical.entries[oidx][idx]:
                return False
        return ref_cells[li][li] == empirical.entries[idx][idx]

    # search order: scarcest candidate sets first, required before optional
    search_labels = sorted(required, key=lambda l: len(candidates[l]))
    optional_pool = sorted(matchable_vanished, key=lambda l: len(candidates[l]))
    need_optional = dim_e - len(required)

    nodes = 0

    def solve(strict: bool):
        nonlocal nodes
        assign: Dict[str, int] = {}
        used = [False] * dim_e

        def backtrack(pos: int, opt_chosen: int, opt_pos: int) -> bool:
            nonlocal nodes
            nodes += 1
            if nodes > MATCH_NODE_GUARD:
                return False
            if pos == len(search_labels):
                if opt_chosen == need_optional:
                    return True
                if opt_pos == len(optional_pool):
                    return False
                label = optional_pool[opt_pos]
                # try skipping this optional label entirely
                remaining = len(optional_pool) - opt_pos - 1
                for idx in candidates[label]:
                    if used[idx]:
                        continue
                    if strict and not cells_ok(assign, label, idx):
                        continue
                    assign[label] = idx
                    used[idx] = True
                    if backtrack(pos, opt_chosen + 1, opt_pos + 1):
                        return True
                    used[idx] = False
                    del assign[label]
                if remaining >= need_optional - opt_chosen:
                    return backtrack(pos, opt_chosen, opt_pos + 1)
                return False
            label = search_labels[pos]
            for idx in candidates[label]:
                if used[idx]:
                    continue
                if strict and not cells_ok(assign, label, idx):
                    continue
                assign[label] = idx
                used[idx] = True
                if backtrack(pos + 1, opt_chosen, opt_pos):
                    return True
                used[idx] = False
                del assign[label]
            return False

        if backtrack(0, 0, 0):
            return dict(assign)
        return None

    exact = solve(strict=True)
    if exact is not None:
        permutation = tuple(
            (label, exact[label]) for label in labels if label in exact
        )
        return MatchResult(
            status="MATCHED", q=q, permutation=permutation,
            absent_types=vanished, diffs=(),
        )

    relaxed = solve(strict=False)
    if relaxed is None:
        return MatchResult(
            status="PARTIAL", q=q, permutation=(),
            absent_types=vanished, diffs=(),
            detail="no injective assignment exists even on centralizer "
                   "orders and class counts alone",
        )

    diffs: List[Dict[str, object]] = []
    matched_labels = [label for label in labels if label in relaxed]
    for row in matched_labels:
        for col in matched_labels:
            expected = ref_cells[lidx[row]][lidx[col]]
            actual = empirical.entries[relaxed[row]][relaxed[col]]
            if expected != actual:
                diffs.append({
                    "row": row, "col": col,
                    "reference": expected, "empirical": actual,
                })
    dropped = [
        label for label in labels
        if label not in relaxed and label in vanished
    ]
    for label in dropped:
        li = lidx[label]
        for other in matched_labels:
            oi = lidx[other]
            if ref_cells[li][oi]:
                diffs.append({
                    "row": label, "col": other,
                    "reference": ref_cells[li][oi], "empirical": None,
                })
            if ref_cells[oi][li]:
                diffs.append({
                    "row": other, "col": label,
                    "reference": ref_cells[oi][li], "empirical": None,
                })
    permutation = tuple(
        (label, relaxed[label]) for label in labels if label in relaxed
    )
    return MatchResult(
        status="MISMATCH", q=q, permutation=permutation,
        absent_types=vanished, diffs=tuple(diffs),
    )


def aligned_entries(empirical, match: MatchResult,
                    reference: PolyBranchingMatrix
                    ) -> Tuple[Tuple[Optional[int], ...], ...]:
    """Empirical entries reordered to reference label order.

    Labels that did not take part in the match produce ``None`` in
    their row and column.
    """
    pos = dict(match.permutation)
    grid: List[List[Optional[int]]] = []
    for row in reference.labels:
        out_row: List[Optional[int]] = []
        for col in reference.labels:
            if row in pos and col in pos:
                out_row.append(empirical.entries[pos[row]][pos[col]])
            else:
                out_row.append(None)
        grid.append(out_row)
    return tuple(tuple(r) for r in grid)


# ---------------------------------------------------------------------------
# Exact interpolation
# ---------------------------------------------------------------------------


def _lagrange(points: Sequence[Tuple[int, int]]) -> IntPolynomial:
    """Exact Lagrange interpolation through integer points."""
    coeffs: List[Fraction] = [Fraction(0)]

    def add(poly: List[Fraction], other: List[Fraction]):
        if len(poly) < len(other):
            poly.extend([Fraction(0)] * (len(other) - len(poly)))
        for i, c in enumerate(other):
            poly[i] += c
        return poly

    for i, (xi, yi) in enumerate(points):
        if yi == 0:
            continue
        basis = [Fraction(yi)]
        for j, (xj, _) in enumerate(points):
            if j == i:
                continue
            denom = xi - xj
            # multiply by (x - xj) / (xi - xj)
            nxt = [Fraction(0)] * (len(basis) + 1)
            for d, c in enumerate(basis):
                nxt[d] += c * Fraction(-xj, denom)
                nxt[d + 1] += c * Fraction(1, denom)
            basis = nxt
        coeffs = add(coeffs, basis)

    ints: List[int] = []
    for c in coeffs:
        if c.denominator != 1:
            raise NonIntegralCoefficients(
                f"interpolated coefficient {c} is not an integer"
            )
        ints.append(int(c))
    return IntPolynomial(ints)


def interpolate_matrix(samples: Mapping[int, Sequence[Sequence[int]]],
                       degree_bound: int
                       ) -> Tuple[Tuple[IntPolynomial, ...], ...]:
    """Interpolate per-cell polynomials from matrices at several primes.

    ``samples`` maps each prime ``q`` to a matrix aligned to one common
    label order (use :func:`aligned_entries`).  At least
    ``degree_bound + 1`` primes are required; coefficients must come out
    integral or :class:`NonIntegralCoefficients` is raised.
    """
    if degree_bound < 0:
        raise ValueError("degree bound must be nonnegative")
    qs = sorted(samples)
    if len(qs) < degree_bound + 1:
        raise InsufficientPoints(
            f"need at least {degree_bound + 1} sample primes for degree "
            f"bound {degree_bound}, got {len(qs)}"
        )
    dims = {(len(samples[q]), len(samples[q][0]) if samples[q] else 0)
            for q in qs}
    if len(dims) != 1:
        raise DimensionIncompatible(
            f"sample matrices disagree in shape: {sorted(dims)}"
        )
    (rows, cols), = dims
    grid: List[List[IntPolynomial]] = []
    for i in range(rows):
        row: List[IntPolynomial] = []
        for j in range(cols):
            points = []
            for q in qs:
                value = samples[q][i][j]
                if value is None:
                    raise DimensionIncompatible(
                        f"cell ({i}, {j}) is missing at q={q}"
                    )
                points.append((q, value))
            poly = _lagrange(points)
            if poly.degree > degree_bound:
                raise NonIntegralCoefficients(
                    f"cell ({i}, {j}) interpolates to degree "
                    f"{poly.degree} > bound {degree_bound}"
                )
            row.append(poly)
        grid.append(row)
    return tuple(tuple(r) for r in grid)


# ---------------------------------------------------------------------------
# Brute-force commuting probability oracle
# ---------------------------------------------------------------------------


def oracle_commuting_probability(family: str, n: int, q: int, k: int
                                 ) -> Fraction:
    """Commuting probability by direct enumeration, fully independent of
    the branching engine: count pairwise-commuting k-tuples.

    Guarded: |G| <= 1000 for k <= 3 and |G| <= 100 for k = 4.
    """
    if k < 2 or k > 4:
        raise SizeGuardExceeded(f"oracle supports 2 <= k <= 4, got {k}")
    spec = trigroup.make_group(family, n, q)
    size = spec.order
    limit = ORACLE_LIMIT_K4 if k == 4 else ORACLE_LIMIT_K3
    if size > limit:
        raise SizeGuardExceeded(
            f"|{family}_{n}(F_{q})| = {size} exceeds the oracle limit "
            f"{limit} for k={k}"
        )

    mats = np.stack([spec.decode(c).to_dense() for c in range(size)])
    m = mats.shape[0]
    comm = np.zeros((m, m), dtype=bool)
    for i in range(m):
        gh = (mats[i] @ mats) % q
        hg = (mats @ mats[i]) % q
        comm[i] = np.all(gh == hg, axis=(1, 2))

    if k == 2:
        total = int(comm.sum())
    elif k == 3:
        total = 0
        comm_i = comm.astype(np.int64)
        for i in range(m):
            rows = comm_i[comm[i]]
            total += int((rows & comm_i[i]).sum())
    else:
        total = 0
        for i in range(m):
            ci = comm[i]
            for j in np.nonzero(ci)[0]:
                cij = ci & comm[j]
                xs = np.nonzero(cij)[0]
                total += int(comm[np.ix_(xs, xs)].sum())
    return Fraction(total, size ** k)


# ---------------------------------------------------------------------------
# Isomorphism spot checks in UT_4
# ---------------------------------------------------------------------------


def _ut4_code(spec, positions: Sequence[Tuple[int, int, int]]) -> int:
    dense = np.eye(4, dtype=np.int64)
    for r, c, a in positions:
        dense[r, c] = a % spec.q
    return spec.encode(trigroup.tri_from_dense(dense, spec.q,
                                               unitriangular=True))


def check_iso_claims(q: int) -> List[Dict[str, object]]:
    """Isomorphism spot checks among centralizers in UT_4(F_q).

    Six single-generator forms all centralize to one type (order q^4);
    two corner forms centralize to one abelian type of order q^5; and
    the nonabelian q^4 centralizer is distinguished from the abelian
    regular one of the same order.
    """
    spec = trigroup.make_group("ut", 4, q)
    full = engine.full_subgroup(spec)

    def cent(positions):
        return engine.centralizer(full, _ut4_code(spec, positions))

    a3_forms = {
        "E12": [(0, 1, 1)],
        "E34": [(2, 3, 1)],
        "E12+E34": [(0, 1, 1), (2, 3, 1)],
        "E12+E24": [(0, 1, 1), (1, 3, 1)],
        "E13+E34": [(0, 2, 1), (2, 3, 1)],
        "E12+E13+E34": [(0, 1, 1), (0, 2, 2), (2, 3, 1)],
    }
    claims: List[Dict[str, object]] = []
    subs = {name: cent(pos) for name, pos in a3_forms.items()}
    base_name = "E12"
    base = subs[base_name]
    for name, sub in subs.items():
        if name == base_name:
            continue
        ok = engine.are_isomorphic(base, sub)
        claims.append({
            "claim": f"UT4 q={q}: centralizer({base_name}) ~ centralizer({name})",
            "expected": True, "actual": bool(ok), "ok": bool(ok),
        })

    corner_a = cent([(0, 2, 1)])
    corner_b = cent([(1, 3, 1)])
    ok = engine.are_isomorphic(corner_a, corner_b)
    claims.append({
        "claim": f"UT4 q={q}: centralizer(E13) ~ centralizer(E24)",
        "expected": True, "actual": bool(ok), "ok": bool(ok),
    })

    regular = cent([(0, 1, 1), (1, 2, 1), (2, 3, 1)])
    nonabelian = subs["E12+E24"]
    same_order = regular.order == nonabelian.order
    iso = engine.are_isomorphic(regular, nonabelian)
    ok = same_order and not iso
    claims.append({
        "claim": f"UT4 q={q}: abelian regular centralizer is not "
                 f"isomorphic to the nonabelian one of equal order",
        "expected": True, "actual": bool(ok), "ok": bool(ok),
    })
    return claims


# ---------------------------------------------------------------------------
# Invariant suite and reporting
# ---------------------------------------------------------------------------


def run_invariant_suite(registry, matrix) -> List[Dict[str, object]]:
    """Structural invariants of a computed branching matrix.

    * column-sum law: column j sums to the class count of centralizer j,
    * class equation: sum_i entry(i, j) |Z_j| / |Z_i| == |Z_j|,
    * abelian-diagonal law: abelian centralizers branch only to
      themselves, |Z| times,
    * well-definedness: branch vectors recomputed from alternate tuple
      representatives agree.
    """
    results: List[Dict[str, object]] = []
    dim = matrix.dim
    orders = [rec["order"] for rec in matrix.type_order]
    ids = [rec["type_id"] for rec in matrix.type_order]

    ok = True
    detail = ""
    for j in range(dim):
        rec = registry.types[ids[j]]
        colsum = sum(matrix.entries[i][j] for i in range(dim))
        expected = (rec.subgroup.order if engine.is_abelian(rec.subgroup)
                    else len(engine.conjugacy_classes(rec.subgroup)))
        if colsum != expected:
            ok = False
            detail = f"column {j}: sum {colsum} != class count {expected}"
            break
    results.append({"name": "column-sum-law", "status": ok, "detail": detail})

    ok = True
    detail = ""
    for j in range(dim):
        zj = orders[j]
        acc = 0
        for i in range(dim):
            cnt = matrix.entries[i][j]
            if not cnt:
                continue
            if zj % orders[i]:
                ok, detail = False, f"order divisibility fails at ({i},{j})"
                break
            acc += cnt * (zj // orders[i])
        if not ok:
            break
        if acc != zj:
            ok = False
            detail = f"column {j}: class equation {acc} != {zj}"
            break
    results.append({"name": "class-equation", "status": ok, "detail": detail})

    ok = True
    detail = ""
    for j in range(dim):
        rec = registry.types[ids[j]]
        if not engine.is_abelian(rec.subgroup):
            continue
        for i in range(dim):
            expected = rec.subgroup.order if i == j else 0
            if matrix.entries[i][j] != expected:
                ok = False
                detail = f"abelian column {j} has off-diagonal branches"
                break
        if not ok:
            break
    results.append({"name": "abelian-diagonal", "status": ok,
                    "detail": detail})

    ok = True
    detail = ""
    checked = 0
    for tid in ids:
        verdict = branching.check_well_defined(registry, tid, samples=2)
        if verdict["status"] == "SKIPPED":
            continue
        checked += 1
        if verdict["status"] != "OK":
            ok = False
            detail = f"type {tid}: alternate representative disagrees"
            break
    results.append({"name": "well-definedness", "status": ok,
                    "detail": detail or f"{checked} types cross-checked"})
    return results


def build_report(family: str, n: int, q: int, *, registry=None,
                 matrix=None, threads: Optional[int] = None
                 ) -> Dict[str, object]:
    """Compute, match and check one group; returns the JSON-ready report."""
    timings: Dict[str, float] = {}
    if matrix is None or registry is None:
        spec = trigroup.make_group(family, n, q)
        t0 = time.perf_counter()
        registry, matrix = branching.compute_branching(spec, threads=threads)
        timings["compute_s"] = round(time.perf_counter() - t0, 3)

    reference = reference_matrix(family, n)
    t0 = time.perf_counter()
    try:
        match = match_matrices(matrix, reference, q)
        status = match.status
        permutation = [[label, idx] for label, idx in match.permutation]
        absent = list(match.absent_types)
        diffs = [dict(d) for d in match.diffs]
        detail = match.detail
    except DimensionIncompatible as exc:
        status = "DIMENSION_INCOMPATIBLE"
        permutation = []
        absent = []
        diffs = []
        detail = str(exc)
    timings["match_s"] = round(time.perf_counter() - t0, 3)

    t0 = time.perf_counter()
    invariants = run_invariant_suite(registry, matrix)
    timings["invariants_s"] = round(time.perf_counter() - t0, 3)

    return {
        "group": f"{family.lower()}_{n}",
        "q": q,
        "status": status,
        "detail": detail,
        "types": [
            {"order": rec["order"], "class_count": rec["class_count"]}
            for rec in matrix.type_order
        ],
        "permutation": permutation,
        "absent_types": absent,
        "diffs": diffs,
        "invariant_results": invariants,
        "timings": timings,
    }


def render_report(report: Mapping[str, object]) -> str:
    """Human-readable rendering of a verification report."""
    lines = []
    head = f"{report['group']} at q={report['q']}: {report['status']}"
    lines.append(head)
    if report.get("detail"):
        lines.append(f"  {report['detail']}")
    absent = report.get("absent_types") or []
    if absent:
        lines.append(f"  absent at this q: {', '.join(absent)}")
    perm = report.get("permutation") or []
    if perm:
        pairs = ", ".join(f"{label}->{idx}" for label, idx in perm)
        lines.append(f"  alignment: {pairs}")
    diffs = report.get("diffs") or []
    for d in diffs[:20]:
        emp = d.get("empirical")
        emp_text = "absent" if emp is None else str(emp)
        lines.append(
            f"  cell ({d['row']}, {d['col']}): reference "
            f"{d['reference']}, computed {emp_text}"
        )
    if len(diffs) > 20:
        lines.append(f"  ... {len(diffs) - 20} more differing cells")
    for inv in report.get("invariant_results", []):
        flag = "ok" if inv["status"] else "FAIL"
        extra = f" ({inv['detail']})" if inv.get("detail") else ""
        lines.append(f"  invariant {inv['name']}: {flag}{extra}")
    timings = report.get("timings") or {}
    if timings:
        parts = ", ".join(f"{k}={v}" for k, v in timings.items())
        lines.append(f"  timings: {parts}")
    return "\n".join(lines)
