"""Triangular matrix groups over odd prime fields.

Two families:

  gt  invertible upper-triangular n x n matrices (nonzero diagonal)
  ut  unitriangular matrices (diagonal all 1)

Elements are addressed by an ElementCode, a mixed-radix integer over the
stored entries in row-major order: each diagonal position contributes a digit
in base q-1 (the index of the entry in the field's unit_list), each strict
upper position a digit in base q (the entry itself).  The first stored entry
is the most significant digit, so the identity encodes to 0 and codes run
0 .. order-1 with no gaps.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field

import numpy as np

from .errors import (DimensionMismatch, NotInGroup, ResourceGuardExceeded)
from .ffield import PrimeField, make_field

DEFAULT_GUARD = 20_000_000
GENERATION_CHECK_LIMIT = 300_000
MAX_N = 6

ElementCode = int


def current_guard(explicit=None):
    """Enumeration guard: explicit argument, else BRANCHIX_GUARD, else default."""
    if explicit is not None:
        return int(explicit)
    env = os.environ.get("BRANCHIX_GUARD")
    return int(env) if env else DEFAULT_GUARD


# ── scalar matrices ──────────────────────────────────────────────────────────

@dataclass(frozen=True)
class TriMatrix:
    """Upper-triangular matrix; entries stored row-major over positions
    (i,j), i <= j, diagonal included (all 1 for unitriangular)."""

    n: int
    q: int
    unitriangular: bool
    entries: tuple

    def entry(self, i: int, j: int) -> int:
        if j < i:
            return 0
        return self.entries[_stored_index(self.n, i, j)]

    def to_dense(self):
        m = np.zeros((self.n, self.n), dtype=np.int64)
        for (i, j), v in zip(_stored_positions(self.n), self.entries):
            m[i, j] = v
        return m

    def __str__(self):
        rows = []
        for i in range(self.n):
            rows.append(" ".join(str(self.entry(i, j)) if j >= i else "0"
                                 for j in range(self.n)))
        return "\n".join(rows)


def _stored_positions(n):
    return [(i, j) for i in range(n) for j in range(i, n)]


def _stored_index(n, i, j):
    # entries before row i: sum_{r<i} (n-r); offset inside row i: j-i
    return i * n - i * (i - 1) // 2 + (j - i)


def tri_from_dense(dense, q, unitriangular):
    n = len(dense)
    entries = tuple(int(dense[i][j]) % q for (i, j) in _stored_positions(n))
    mat = TriMatrix(n=n, q=q, unitriangular=unitriangular, entries=entries)
    _check_membership(mat)
    return mat


def _check_membership(a: TriMatrix):
    for i in range(a.n):
        d = a.entry(i, i)
        if a.unitriangular and d != 1:
            raise NotInGroup(f"diagonal entry {d} != 1 in unitriangular matrix")
        if d == 0:
            raise NotInGroup("zero diagonal entry; matrix not invertible")


def mat_mul(a: TriMatrix, b: TriMatrix) -> TriMatrix:
    if a.n != b.n or a.q != b.q:
        raise DimensionMismatch(f"cannot multiply {a.n}x{a.n} mod {a.q} "
                                f"by {b.n}x{b.n} mod {b.q}")
    n, q = a.n, a.q
    entries = []
    for (i, j) in _stored_positions(n):
        entries.append(sum(a.entry(i, k) * b.entry(k, j)
                           for k in range(i, j + 1)) % q)
    return TriMatrix(n=n, q=q, unitriangular=a.unitriangular and b.unitriangular,
                     entries=tuple(entries))


def mat_inv(a: TriMatrix, f: PrimeField) -> TriMatrix:
    """Inverse by back-substitution along superdiagonals."""
    n, q = a.n, a.q
    x = [[0] * n for _ in range(n)]
    for i in range(n):
        x[i][i] = f.inv(a.entry(i, i))
    for off in range(1, n):
        for i in range(n - off):
            j = i + off
            s = sum(a.entry(i, k) * x[k][j] for k in range(i + 1, j + 1)) % q
            x[i][j] = f.mul(f.neg(f.inv(a.entry(i, i))), s)
    return TriMatrix(n=n, q=q, unitriangular=a.unitriangular,
                     entries=tuple(x[i][j] for (i, j) in _stored_positions(n)))


# ── group spec and codec ─────────────────────────────────────────────────────

@dataclass(frozen=True)
class GroupSpec:
    """One group GT_n(F_q) or UT_n(F_q) plus its element codec."""

    family: str
    n: int
    field: PrimeField
    order: int
    guard: int
    # codec arrays (row-major over stored digit positions):
    digit_positions: tuple       # (i,j) per digit; diag positions only for gt
    digit_bases: tuple           # q-1 for diagonal digits, q for upper digits
    digit_weights: tuple         # mixed-radix weights, first digit most significant
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def q(self):
        return self.field.q

    # -- scalar encode/decode ------------------------------------------------

    def encode(self, a: TriMatrix) -> ElementCode:
        _check_membership(a)
        if a.n != self.n:
            raise DimensionMismatch(f"matrix size {a.n} != group size {self.n}")
        code = 0
        for (i, j), base, w in zip(self.digit_positions, self.digit_bases,
                                   self.digit_weights):
            v = a.entry(i, j)
            digit = self.field.unit_index[v] if i == j else v
            code += digit * w
        return code

    def decode(self, code: ElementCode) -> TriMatrix:
        if not 0 <= code < self.order:
            raise NotInGroup(f"code {code} outside [0, {self.order})")
        vals = {}
        for (i, j), base, w in zip(self.digit_positions, self.digit_bases,
                                   self.digit_weights):
            digit = (code // w) % base
            vals[(i, j)] = self.field.unit_list[digit] if i == j else digit
        entries = tuple(vals.get((i, j), 1 if i == j else 0)
                        for (i, j) in _stored_positions(self.n))
        return TriMatrix(n=self.n, q=self.q,
                         unitriangular=self.family == "ut", entries=entries)

    def identity(self) -> TriMatrix:
        entries = tuple(1 if i == j else 0 for (i, j) in _stored_positions(self.n))
        return TriMatrix(n=self.n, q=self.q,
                         unitriangular=self.family == "ut", entries=entries)


def make_group(family: str, n: int, q: int, guard=None,
               verify_generation=True) -> GroupSpec:
    """Construct the group spec.  Generation of the standard generators is
    verified by closure BFS for small orders (a full-group BFS at every
    construction would dominate the large runs)."""
    if family not in ("gt", "ut"):
        raise ValueError(f"family must be 'gt' or 'ut', got {family!r}")
    if not 1 <= n <= MAX_N:
        raise ValueError(f"n must be in 1..{MAX_N}, got {n}")
    f = make_field(q)
    uppers = n * (n - 1) // 2
    if family == "gt":
        order = (q - 1) ** n * q ** uppers
        positions = _stored_positions(n)
        bases = tuple(q - 1 if i == j else q for (i, j) in positions)
    else:
        order = q ** uppers
        positions = [(i, j) for (i, j) in _stored_positions(n) if i != j]
        bases = tuple(q for _ in positions)
    weights = []
    w = 1
    for base in reversed(bases):
        weights.append(w)
        w *= base
    weights.reverse()
    spec = GroupSpec(family=family, n=n, field=f, order=order,
                     guard=current_guard(guard),
                     digit_positions=tuple(positions), digit_bases=bases,
                     digit_weights=tuple(weights))
    if verify_generation and order <= min(spec.guard, GENERATION_CHECK_LIMIT):
        from . import _batch
        _batch.verify_generation(spec)
    return spec


def generators(spec: GroupSpec):
    """Standard generators: I + E_{i,i+1} for each superdiagonal slot; for gt
    additionally the n diagonal matrices with the primitive root in one slot."""
    gens = []
    n, q = spec.n, spec.q
    eye = [[1 if i == j else 0 for j in range(n)] for i in range(n)]
    for i in range(n - 1):
        m = [row[:] for row in eye]
        m[i][i + 1] = 1
        gens.append(tri_from_dense(m, q, spec.family == "ut"))
    if spec.family == "gt":
        root = spec.field.primitive_root
        for i in range(n):
            m = [row[:] for row in eye]
            m[i][i] = root
            gens.append(tri_from_dense(m, q, False))
    return gens


def enumerate_codes(spec: GroupSpec):
    """All element codes, ascending.  Raises ResourceGuardExceeded when the
    order is over the guard."""
    if spec.order > spec.guard:
        raise ResourceGuardExceeded(
            f"group order {spec.order} exceeds guard {spec.guard}",
            order=spec.order, guard=spec.guard)
    return np.arange(spec.order, dtype=np.int64)
