"""Branching closure: types of commuting tuples and the branching matrix.

A type is an isomorphism class of centralizers C_G(T) over commuting tuples
T.  Starting from the empty tuple (whose centralizer is G itself), the
closure repeatedly takes a known type's centralizer Z, splits Z into its own
conjugacy classes, and classifies each extension's centralizer C_G(T + (b,))
= C_Z(b) into a new or existing type.  The matrix entry (i, j) counts the
branches of type i from a tuple of type j; it is independent of the chosen
representative tuple (checked separately, see check_well_defined).

Type identity escalates through a ladder of isomorphism invariants, from
identical algebra basis (same subgroup) through order, center, lower central
series and the order/class-size histograms.  Histograms are skipped above an
enumeration cap; a match decided on the truncated prefix is recorded in
registry.meta so verification can surface it instead of silently accepting
an undercount.  The exact isomorphism referee backs the ladder in strict
mode and in the dedicated audit checks.
"""

from __future__ import annotations

from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

from . import engine
from .engine import (Subgroup, conjugacy_classes, centralizer, fingerprint,
                     full_subgroup, is_abelian, subgroup_from_tuple)
from .errors import ResourceGuardExceeded
from .trigroup import GroupSpec

ENGINE_VERSION = "1"
MAX_DEPTH = 10
MAX_ALTERNATES = 3


@dataclass
class TypeRecord:
    type_id: int
    subgroup: Subgroup
    tuple_codes: tuple
    class_count: int = 0              # ambient conjugacy classes of this type
    alternates: list = field(default_factory=list)
    _fp: dict = field(default_factory=dict, repr=False)

    def fingerprint(self, tier=1):
        if tier not in self._fp:
            self._fp[tier] = fingerprint(self.subgroup, tier=tier)
        fp = self._fp[tier]
        if self._fp.get("split"):
            fp = engine.TypeFingerprint(
                order=fp.order, is_abelian=fp.is_abelian,
                center_order=fp.center_order, derived_order=fp.derived_order,
                exponent=fp.exponent, tier2=fp.tier2,
                split_index=self._fp["split"])
        return fp


class TypeRegistry:
    """Discovered types, keyed three ways: exact algebra basis, order bucket,
    and (on demand) fingerprint tiers."""

    def __init__(self, spec: GroupSpec):
        self.spec = spec
        self.types: list[TypeRecord] = []
        self._by_key: dict[bytes, int] = {}
        self._by_order: dict[int, list[int]] = {}
        self._coarse_seen = set()
        self.meta = {"coarse_matches": []}

    def _register(self, sub: Subgroup) -> int:
        tid = len(self.types)
        rec = TypeRecord(type_id=tid, subgroup=sub,
                         tuple_codes=sub.tuple_codes)
        rec.alternates.append(sub.tuple_codes)
        self.types.append(rec)
        self._by_key[sub.key()] = tid
        self._by_order.setdefault(sub.order, []).append(tid)
        return tid

    def lookup_or_register(self, sub: Subgroup):
        """Classify a centralizer; returns (type_id, created)."""
        tid = self._by_key.get(sub.key())
        if tid is not None:
            return tid, False
        tid = self._match(sub, record_merges=True)
        if tid is not None:
            self._by_key[sub.key()] = tid
            if len(self.types[tid].alternates) < MAX_ALTERNATES:
                self.types[tid].alternates.append(sub.tuple_codes)
            return tid, False
        # new type; keep its digest distinct from same-bucket twins
        twins = [t for t in self._by_order.get(sub.order, [])
                 if self.types[t].fingerprint(1).tier1()
                 == fingerprint(sub, tier=1).tier1()]
        tid = self._register(sub)
        if twins:
            self.types[tid]._fp["split"] = 1 + max(
                self.types[t].fingerprint(1).split_index for t in twins)
        return tid, True

    def lookup(self, sub: Subgroup):
        """Read-only classification; None when the type is unknown."""
        tid = self._by_key.get(sub.key())
        if tid is not None:
            return tid
        return self._match(sub, record_merges=False)

    def _match(self, sub: Subgroup, record_merges: bool):
        """Match against registered types; returns a type_id or None.

        Candidates sharing the order are compared invariant by invariant
        along the ladder; the first differing field rules a candidate out,
        so the expensive histograms are only computed on deep ties.  For
        subgroups too large to enumerate, the ladder truncates to its cheap
        prefix and the truncated match is recorded per type.  In strict
        mode full-ladder ties additionally face the isomorphism referee.
        """
        survivors = self._by_order.get(sub.order, [])
        for name in engine.INVARIANT_LADDER[1:]:
            if not survivors:
                return None
            if not engine.invariant_applicable(sub, name):
                t = survivors[0]
                if record_merges:
                    key = (t, name)
                    if key not in self._coarse_seen:
                        self._coarse_seen.add(key)
                        self.meta["coarse_matches"].append(
                            {"type_id": t, "order": sub.order,
                             "ladder_stopped_at": name})
                return t
            value = engine.invariant(sub, name)
            survivors = [
                t for t in survivors
                if engine.invariant(self.types[t].subgroup, name) == value]
        if not survivors:
            return None
        if engine.STRICT_REFEREE and sub.order <= engine.ISO_GUARD:
            for t in survivors:
                if engine.are_isomorphic(self.types[t].subgroup, sub):
                    return t
            return None
        return survivors[0]


@dataclass(frozen=True)
class BranchingMatrix:
    family: str
    n: int
    q: int
    dim: int
    entries: tuple                 # entries[i][j] = branches of type i from j
    type_order: tuple              # per type: dict(order, class_count, ...)
    meta: dict

    def column(self, j):
        return tuple(self.entries[i][j] for i in range(self.dim))

    def column_sums(self):
        return tuple(sum(self.column(j)) for j in range(self.dim))


def branch_vector(registry: TypeRegistry, sub: Subgroup, register=True):
    """Branches of the tuple whose centralizer is sub: one per conjugacy
    class of sub, classified by the type of the extended centralizer.
    Returns (Counter type_id -> count, list of created type_ids)."""
    created = []
    col = Counter()
    if is_abelian(sub):
        tid = registry.lookup_or_register(sub)[0] if register else registry.lookup(sub)
        col[tid] = sub.order
        return col, created
    for cls in conjugacy_classes(sub):
        ext = centralizer(sub, cls.rep)
        if register:
            tid, new = registry.lookup_or_register(ext)
            if new:
                created.append(tid)
        else:
            tid = registry.lookup(ext)
        col[tid] += 1
    return col, created


def _pure_branch_data(sub: Subgroup):
    """Registry-independent part of a type's branching: its classes and the
    extension centralizers.  Safe to run concurrently."""
    if is_abelian(sub):
        return None
    classes = conjugacy_classes(sub)
    return [(cls, centralizer(sub, cls.rep)) for cls in classes]


def compute_branching(spec: GroupSpec, threads: int = 1, max_depth=MAX_DEPTH):
    """Run the closure to a fixed point; returns (registry, matrix).

    Types are explored breadth-first from the full group.  With threads > 1
    the registry-independent work of a wave runs on a pool; classification
    replays serially in wave order, so results are identical for any thread
    count.
    """
    if spec.order > spec.guard:
        raise ResourceGuardExceeded(
            f"group order {spec.order} exceeds guard {spec.guard}",
            order=spec.order, guard=spec.guard)
    registry = TypeRegistry(spec)
    root = full_subgroup(spec)
    registry._register(root)
    columns = {}
    queue = [0]
    depth = 0
    while queue:
        if depth > max_depth:
            raise AssertionError(f"branching closure still open at depth {max_depth}")
        wave = list(queue)
        queue = []
        if threads > 1:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                datas = list(pool.map(
                    lambda t: _pure_branch_data(registry.types[t].subgroup), wave))
        else:
            datas = [_pure_branch_data(registry.types[t].subgroup) for t in wave]
        for t, data in zip(wave, datas):
            sub = registry.types[t].subgroup
            col = Counter()
            if data is None:
                col[t] = sub.order      # abelian: every branch returns the type
            else:
                for cls, ext in data:
                    tid, new = registry.lookup_or_register(ext)
                    if new:
                        queue.append(tid)
                    col[tid] += 1
            columns[t] = col
            if t == 0:
                for tid, cnt in col.items():
                    registry.types[tid].class_count = cnt
        depth += 1
    return registry, _assemble(spec, registry, columns)


def _assemble(spec, registry, columns):
    ids = list(range(len(registry.types)))
    row_counts = {
        t: tuple(sorted((columns[j].get(t, 0) for j in ids), reverse=True))
        for t in ids}

    def key(t):
        rec = registry.types[t]
        col_sorted = tuple(sorted(columns[t].values(), reverse=True))
        return (-rec.subgroup.order, -rec.class_count, col_sorted,
                row_counts[t], t)

    perm = sorted(ids, key=key)
    dim = len(perm)
    entries = tuple(
        tuple(columns[perm[j]].get(perm[i], 0) for j in range(dim))
        for i in range(dim))
    type_order = tuple(
        {"type_id": t,
         "order": registry.types[t].subgroup.order,
         "class_count": registry.types[t].class_count,
         "tuple": list(registry.types[t].tuple_codes)}
        for t in perm)
    meta = {"family": spec.family, "n": spec.n, "q": spec.q,
            "engine_version": ENGINE_VERSION,
            "coarse_matches": registry.meta["coarse_matches"]}
    return BranchingMatrix(family=spec.family, n=spec.n, q=spec.q,
                           dim=len(perm), entries=entries,
                           type_order=type_order, meta=meta)


def check_well_defined(registry: TypeRegistry, type_id: int, samples: int = 2):
    """Recompute the branch vector from alternate tuple representatives of a
    type and compare.  Types reached through a single representative are
    reported SKIPPED."""
    rec = registry.types[type_id]
    alts = rec.alternates[:samples]
    if len(alts) < 2:
        return {"type_id": type_id, "status": "SKIPPED",
                "reason": "single representative reached"}
    vectors = []
    for tup in alts:
        sub = subgroup_from_tuple(registry.spec, tup)
        col, _ = branch_vector(registry, sub, register=False)
        vectors.append(dict(col))
    ok = all(v == vectors[0] for v in vectors[1:])
    return {"type_id": type_id, "status": "OK" if ok else "MISMATCH",
            "samples": len(alts), "vectors": vectors}


def tuple_class_count(matrix: BranchingMatrix, k: int) -> int:
    """Number of simultaneous conjugacy classes of commuting k-tuples:
    1^T B^k e_0 with exact integers (k = 0 gives the single empty tuple)."""
    if k < 0:
        raise ValueError("k must be >= 0")
    dim = matrix.dim
    vec = [0] * dim
    vec[0] = 1                       # canonical order puts the full group first
    for _ in range(k):
        vec = [sum(matrix.entries[i][j] * vec[j] for j in range(dim))
               for i in range(dim)]
    return sum(vec)
