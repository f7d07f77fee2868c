"""Conjugacy, centralizers and isomorphism fingerprints.

The engine leans on one structural fact: for upper-triangular b, the
commutation condition x b = b x is linear in the entries of x.  Every
centralizer this package touches is therefore the unit group of a triangular
subalgebra S, obtained by solving a small linear system mod q.  Subgroup
objects carry the defining tuple and the reduced-row-echelon basis of S; the
element list is materialized lazily from the basis.

Orders come for free from the basis: the diagonal projection of a unital
triangular subalgebra is a partition subalgebra of F_q^n (functions constant
on blocks), so |units(S)| = (q-1)^#blocks * q^dim(ker diag).  Generators are
one block-scaling unit per block plus I + n_i over a basis of ker(diag).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _batch
from .errors import (ElementNotInSubgroup, OrderMismatch, SizeGuardExceeded)
from .trigroup import GroupSpec, generators as group_generators, mat_inv

ISO_GUARD = 5000          # largest order are_isomorphic will attempt
_CHUNK = _batch.CHUNK

# When set (BRANCHIX_STRICT_REFEREE=1), type classification additionally
# runs the exact isomorphism referee on every full-ladder tie within
# ISO_GUARD.  The default trusts the invariant ladder; tests cross-validate
# the two modes on the small groups.
import os as _os
STRICT_REFEREE = bool(_os.environ.get("BRANCHIX_STRICT_REFEREE"))


# ── linear algebra mod q ─────────────────────────────────────────────────────

def _rref(rows, q):
    """Reduced row echelon form mod q.  rows: (r, k) int64.  Returns
    (rref rows without zero rows, pivot column list)."""
    m = np.array(rows, dtype=np.int64) % q
    nrows, ncols = m.shape
    pivots = []
    r = 0
    for c in range(ncols):
        if r == nrows:
            break
        hits = np.flatnonzero(m[r:, c])
        if hits.size == 0:
            continue
        lead = r + hits[0]
        if lead != r:
            m[[r, lead]] = m[[lead, r]]
        m[r] = m[r] * pow(int(m[r, c]), q - 2, q) % q
        other = np.flatnonzero(m[:, c])
        for i in other:
            if i != r:
                m[i] = (m[i] - m[i, c] * m[r]) % q
        pivots.append(c)
        r += 1
    return m[:r], pivots


def _nullspace(rows, q, dim):
    """Basis (RREF) of the solution space of rows @ x = 0 in F_q^dim."""
    if len(rows) == 0:
        return np.eye(dim, dtype=np.int64)
    rref, pivots = _rref(rows, q)
    free = [c for c in range(dim) if c not in pivots]
    basis = np.zeros((len(free), dim), dtype=np.int64)
    for bi, fc in enumerate(free):
        basis[bi, fc] = 1
        for ri, pc in enumerate(pivots):
            basis[bi, pc] = (-rref[ri, fc]) % q
    rb, _ = _rref(basis, q)
    return rb


def _constraint_rows(spec: GroupSpec, b):
    """Linear constraints on triangular x (coords = spec digit positions)
    expressing x b = b x.  b is a dense n x n array.  One row per strict
    upper output position; diagonal outputs vanish identically."""
    n, q = spec.n, spec.q
    pos_index = {p: i for i, p in enumerate(spec.digit_positions)}
    K = len(spec.digit_positions)
    rows = []
    for i in range(n):
        for j in range(i + 1, n):
            row = np.zeros(K, dtype=np.int64)
            for k in range(i, j + 1):
                if (i, k) in pos_index:
                    row[pos_index[(i, k)]] += b[k, j]
                if (k, j) in pos_index:
                    row[pos_index[(k, j)]] -= b[i, k]
            rows.append(row % q)
    return np.array(rows, dtype=np.int64)


# ── subgroups ────────────────────────────────────────────────────────────────

@dataclass
class ConjClass:
    rep: int
    size: int


@dataclass(frozen=True)
class TypeFingerprint:
    """Isomorphism invariants of a centralizer, in two tiers."""

    order: int
    is_abelian: bool
    center_order: int
    derived_order: int
    exponent: int
    tier2: tuple | None = None     # (order hist, class-size hist, centralizer hist)
    split_index: int = 0           # referee tie-break among tier-2 twins

    def tier1(self):
        return (self.order, self.is_abelian, self.center_order,
                self.derived_order, self.exponent)

    def digest(self) -> str:
        import hashlib
        return hashlib.sha1(repr((self.tier1(), self.tier2,
                                  self.split_index)).encode()).hexdigest()[:16]


@dataclass
class Subgroup:
    """Centralizer subgroup C_G(tuple), stored as its algebra basis."""

    spec: GroupSpec
    tuple_codes: tuple
    basis: np.ndarray            # (d, K) RREF over coordinate space
    order: int
    _cache: dict = field(default_factory=dict, repr=False)

    @property
    def q(self):
        return self.spec.q

    def key(self) -> bytes:
        return self.basis.shape[0].to_bytes(2, "big") + self.basis.tobytes()

    @property
    def elements(self):
        """Sorted element codes (lazy).  The full group is a plain range."""
        if "elements" not in self._cache:
            if self.order == self.spec.order:
                self._cache["elements"] = np.arange(self.spec.order,
                                                    dtype=np.int64)
            else:
                self._cache["elements"] = _enumerate_units(self.spec, self.basis)
        return self._cache["elements"]

    def contains_code(self, code: int) -> bool:
        if not 0 <= code < self.spec.order:
            return False
        if self.order == self.spec.order:
            return True
        coords = _coords_of_codes(self.spec, np.array([code]))[0]
        return _in_span(self.basis, coords, self.q)


def _diag_coord_indices(spec):
    return [i for i, (a, b) in enumerate(spec.digit_positions) if a == b]


def _identity_coords(spec):
    K = len(spec.digit_positions)
    v = np.zeros(K, dtype=np.int64)
    for i in _diag_coord_indices(spec):
        v[i] = 1
    return v


def _coords_of_codes(spec, codes):
    c = _batch.codec_arrays(spec)
    mats = _batch.decode_codes(spec, codes)
    return mats[:, c["rows"], c["cols"]]


def _coords_to_mats(spec, coords):
    c = _batch.codec_arrays(spec)
    n = spec.n
    mats = np.zeros((len(coords), n, n), dtype=np.int64)
    mats[:, c["rows"], c["cols"]] = coords
    if spec.family == "ut":
        idx = np.arange(n)
        mats[:, idx, idx] = 1
    return mats


def _in_span(basis, vec, q):
    v = vec.copy() % q
    for row in basis:
        piv = np.flatnonzero(row)
        if piv.size == 0:
            continue
        c = piv[0]
        if v[c]:
            v = (v - v[c] * row) % q
    return not v.any()


def _order_from_basis(spec, basis):
    d = basis.shape[0]
    q = spec.q
    if spec.family == "ut":
        return q ** d
    diag_idx = _diag_coord_indices(spec)
    r = len(_rref(basis[:, diag_idx], q)[0]) if d else 0
    return (q - 1) ** r * q ** (d - r)


def _enumerate_units(spec, basis):
    """All element codes of units(S) for basis of S, sorted ascending."""
    q = spec.q
    d = basis.shape[0]
    total = q ** d
    c = _batch.codec_arrays(spec)
    diag_mask = np.asarray(c["is_diag"])
    weights = c["weights"]
    out = []
    powers = q ** np.arange(d - 1, -1, -1, dtype=np.int64) if d else None
    for start in range(0, total, _CHUNK):
        stop = min(start + _CHUNK, total)
        idx = np.arange(start, stop, dtype=np.int64)
        digits = (idx[:, None] // powers) % q if d else np.zeros((1, 0), np.int64)
        coords = digits @ basis % q
        if spec.family == "ut":
            vals = coords
        else:
            keep = (coords[:, diag_mask] != 0).all(axis=1)
            coords = coords[keep]
            vals = np.where(diag_mask, coords - 1, coords)
        if spec.family == "ut":
            codes = coords @ weights
        else:
            codes = vals @ weights
        out.append(codes)
    codes = np.concatenate(out) if out else np.zeros(0, np.int64)
    codes.sort()
    return codes


def full_subgroup(spec: GroupSpec) -> Subgroup:
    K = len(spec.digit_positions)
    basis = np.eye(K, dtype=np.int64)
    return Subgroup(spec=spec, tuple_codes=(), basis=basis, order=spec.order)


def centralizer(ambient: Subgroup, b_code: int) -> Subgroup:
    """C_ambient(b), materialized as a Subgroup.  ambient must contain b."""
    spec = ambient.spec
    if not ambient.contains_code(b_code):
        raise ElementNotInSubgroup(f"code {b_code} not in subgroup")
    b = _batch.decode_codes(spec, np.array([b_code]))[0]
    rows = _constraint_rows(spec, b)
    # restrict constraints to the ambient algebra: x = y @ basis
    m = rows @ ambient.basis.T % spec.q          # (eqs, d)
    y_basis = _nullspace(m, spec.q, ambient.basis.shape[0])
    basis = _rref(y_basis @ ambient.basis % spec.q, spec.q)[0]
    order = _order_from_basis(spec, basis)
    return Subgroup(spec=spec, tuple_codes=ambient.tuple_codes + (int(b_code),),
                    basis=basis, order=order)


def subgroup_from_tuple(spec: GroupSpec, codes) -> Subgroup:
    sub = full_subgroup(spec)
    for c in codes:
        sub = centralizer(sub, int(c))
    return Subgroup(spec=spec, tuple_codes=tuple(int(c) for c in codes),
                    basis=sub.basis, order=sub.order)


# ── generators of a subgroup ────────────────────────────────────────────────

def subgroup_generator_mats(sub: Subgroup):
    """Generating matrices: for the full group the standard generators; for a
    proper centralizer, block-scaling units plus I + n over a nilpotent basis."""
    if "gen_mats" in sub._cache:
        return sub._cache["gen_mats"]
    spec = sub.spec
    q = spec.q
    if sub.order == spec.order:
        mats = [g.to_dense() for g in group_generators(spec)]
        sub._cache["gen_mats"] = mats
        return mats
    basis = sub.basis
    d = basis.shape[0]
    mats = []
    if spec.family == "gt":
        diag_idx = _diag_coord_indices(spec)
        D = basis[:, diag_idx] % q                       # (d, n) diagonal parts
        Drref, _ = _rref(D, q)
        r = Drref.shape[0]
        # blocks: diagonal positions with identical columns in Drref
        col_keys = [tuple(int(x) for x in Drref[:, i]) for i in range(spec.n)]
        blocks = {}
        for i, k in enumerate(col_keys):
            blocks.setdefault(k, []).append(i)
        assert len(blocks) == r, "diagonal projection is not a partition algebra"
        g_root = spec.field.primitive_root
        ident = _identity_coords(spec)
        for k in sorted(blocks):
            e_b = np.zeros(spec.n, dtype=np.int64)
            e_b[blocks[k]] = 1
            y = _solve_particular(D.T, e_b, q)           # y @ basis has diag e_b
            lift = y @ basis % q
            t = (ident + (g_root - 1) * lift) % q
            mats.append(_coords_to_mats(spec, t[None, :])[0])
        # nilpotent part: y with zero diagonal projection
        Y = _nullspace(D.T, q, d)
    else:
        ident = _identity_coords(spec)
        Y = np.eye(d, dtype=np.int64)
    for y in Y:
        ncoords = y @ basis % q
        mats.append(_coords_to_mats(spec, (ident + ncoords) % q)[0])
    sub._cache["gen_mats"] = mats
    return mats


def _solve_particular(A, rhs, q):
    """One solution y of A y = rhs mod q (A: (m, d)); assumes consistency."""
    m, d = A.shape
    aug = np.concatenate([A % q, (rhs % q)[:, None]], axis=1)
    rref, pivots = _rref(aug, q)
    y = np.zeros(d, dtype=np.int64)
    for ri, pc in enumerate(pivots):
        if pc == d:
            raise AssertionError("inconsistent linear system")
        y[pc] = rref[ri, d]
    return y


def is_abelian(sub: Subgroup) -> bool:
    if "abelian" not in sub._cache:
        mats = subgroup_generator_mats(sub)
        q = sub.q
        ab = all(
            np.array_equal(np.matmul(a, b) % q, np.matmul(b, a) % q)
            for i, a in enumerate(mats) for b in mats[i + 1:])
        sub._cache["abelian"] = ab
    return sub._cache["abelian"]


# ── conjugacy classes ───────────────────────────────────────────────────────

def conjugacy_classes(sub: Subgroup):
    """Conjugacy classes of the subgroup acting on itself, sorted by
    (size, rep).  Orbit BFS from ascending unvisited seeds; the seed of each
    orbit is its minimal code."""
    if "classes" in sub._cache:
        return sub._cache["classes"]
    spec = sub.spec
    q = spec.q
    if is_abelian(sub):
        classes = [ConjClass(rep=int(c), size=1) for c in sub.elements]
    else:
        gen_mats = subgroup_generator_mats(sub)
        pairs = []
        for g in gen_mats:
            from .trigroup import tri_from_dense
            tri = tri_from_dense(g.tolist(), q, spec.family == "ut")
            pairs.append((g, mat_inv(tri, spec.field).to_dense()))
        visited = np.zeros(spec.order, dtype=bool)
        classes = []
        if sub.order == spec.order:
            seed_iter = _range_seed_iter(visited)
        else:
            seed_iter = _array_seed_iter(sub.elements, visited)
        for seed in seed_iter:
            size = _orbit_bfs(spec, seed, pairs, visited)
            classes.append(ConjClass(rep=int(seed), size=size))
        classes.sort(key=lambda c: (c.size, c.rep))
    sub._cache["classes"] = classes
    return classes


def _range_seed_iter(visited):
    ptr = 0
    n = visited.size
    while ptr < n:
        block = visited[ptr:ptr + 4096]
        i = int(np.argmin(block))
        if block[i]:
            ptr += block.size
            continue
        yield ptr + i
        ptr += i + 1


def _array_seed_iter(elements, visited):
    ptr = 0
    n = elements.size
    while ptr < n:
        block = elements[ptr:ptr + 4096]
        mask = visited[block]
        i = int(np.argmin(mask))
        if mask[i]:
            ptr += block.size
            continue
        yield int(block[i])
        ptr += i + 1


def _orbit_bfs(spec, seed, gen_pairs, visited):
    q = spec.q
    frontier = np.array([seed], dtype=np.int64)
    visited[frontier] = True
    size = 1
    while frontier.size:
        produced = []
        for start in range(0, frontier.size, _CHUNK):
            mats = _batch.decode_codes(spec, frontier[start:start + _CHUNK])
            for g, g_inv in gen_pairs:
                out = np.matmul(np.matmul(g, mats), g_inv) % q
                produced.append(_batch.encode_mats(spec, out))
        nxt = np.unique(np.concatenate(produced))
        nxt = nxt[~visited[nxt]]
        visited[nxt] = True
        size += int(nxt.size)
        frontier = nxt
    return size


# ── fingerprint ingredients ─────────────────────────────────────────────────

def _order_hist_of_codes(spec, codes):
    """Element-order histogram over an array of codes.  ord(x) factors as
    ord_s * q^t: the semisimple part's order is the lcm of the diagonal
    entries' orders, and t is minimal with x^((q-1) q^t) = I (Jordan
    decomposition; the two parts are coprime)."""
    q = spec.q
    unit_order = np.array(spec.field.unit_order, dtype=np.int64)
    eye = np.eye(spec.n, dtype=np.int64)
    hist = {}
    for start in range(0, codes.size, _CHUNK):
        mats = _batch.decode_codes(spec, codes[start:start + _CHUNK])
        diag = mats[:, np.arange(spec.n), np.arange(spec.n)]
        ord_s = np.ones(len(mats), dtype=np.int64)
        for col in range(spec.n):
            ord_s = np.lcm(ord_s, unit_order[diag[:, col]])
        y = _batch.batch_pow(mats, q - 1, q)
        t = np.zeros(len(mats), dtype=np.int64)
        pending = ~(y == eye).all(axis=(1, 2))
        hops = 0
        while pending.any():
            hops += 1
            assert hops <= 3, "unipotent order exceeded q^3"
            y[pending] = _batch.batch_pow(y[pending], q, q)
            t[pending] = hops
            pending = ~(y == eye).all(axis=(1, 2))
        orders = ord_s * q ** t
        uniq, counts = np.unique(orders, return_counts=True)
        for u, cnt in zip(uniq.tolist(), counts.tolist()):
            hist[u] = hist.get(u, 0) + cnt
    return hist


def _unipotent_hist(q, order):
    """Order histogram of a group of unipotent elements when q >= n:
    (I+u)^q = I term by term (u^n = 0 and the inner binomials vanish
    mod q), so every nonidentity element has order exactly q."""
    hist = {1: 1}
    if order > 1:
        hist[q] = order - 1
    return hist


def order_statistics(sub: Subgroup):
    """(exponent, element-order histogram)."""
    if "order_stats" in sub._cache:
        return sub._cache["order_stats"]
    spec = sub.spec
    if spec.family == "ut" and spec.q >= spec.n:
        hist = _unipotent_hist(spec.q, sub.order)
    else:
        hist = _order_hist_of_codes(spec, sub.elements)
    exponent = math.lcm(*hist.keys())
    stats = (exponent, tuple(sorted(hist.items())))
    sub._cache["order_stats"] = stats
    return stats


def center_order(sub: Subgroup) -> int:
    if "center_order" not in sub._cache:
        spec = sub.spec
        rows = [_constraint_rows(spec, g) for g in subgroup_generator_mats(sub)]
        m = np.concatenate(rows) @ sub.basis.T % spec.q
        y_basis = _nullspace(m, spec.q, sub.basis.shape[0])
        basis_c = _rref(y_basis @ sub.basis % spec.q, spec.q)[0]
        sub._cache["center_basis"] = basis_c
        sub._cache["center_order"] = _order_from_basis(spec, basis_c)
    return sub._cache["center_order"]


def center_order_hist(sub: Subgroup):
    """Element-order histogram of the center."""
    if "center_hist" not in sub._cache:
        spec = sub.spec
        co = center_order(sub)
        if spec.family == "ut" and spec.q >= spec.n:
            hist = _unipotent_hist(spec.q, co)
        else:
            codes = _enumerate_units(spec, sub._cache["center_basis"])
            hist = _order_hist_of_codes(spec, codes)
        sub._cache["center_hist"] = tuple(sorted(hist.items()))
    return sub._cache["center_hist"]


def derived_order_hist(sub: Subgroup):
    """Element-order histogram of the derived subgroup.  Commutators of
    triangular matrices are unipotent, so for q >= n the closed form
    applies in both families."""
    if "derived_hist" not in sub._cache:
        spec = sub.spec
        if spec.q >= spec.n:
            hist = _unipotent_hist(spec.q, derived_order(sub))
        else:
            hist = _order_hist_of_codes(spec, derived_member_codes(sub))
        sub._cache["derived_hist"] = tuple(sorted(hist.items()))
    return sub._cache["derived_hist"]


def class_size_hist(sub: Subgroup):
    if is_abelian(sub):
        return ((1, sub.order),)
    sizes = {}
    for c in conjugacy_classes(sub):
        sizes[c.size] = sizes.get(c.size, 0) + 1
    return tuple(sorted(sizes.items()))


def _gen_mats_with_inverses(sub):
    if "gen_invs" not in sub._cache:
        spec = sub.spec
        from .trigroup import tri_from_dense
        gens = subgroup_generator_mats(sub)
        tris = [tri_from_dense(g.tolist(), spec.q, spec.family == "ut")
                for g in gens]
        invs = [mat_inv(t, spec.field).to_dense() for t in tris]
        sub._cache["gen_invs"] = (gens, invs)
    return sub._cache["gen_invs"]


def _normal_closure(sub: Subgroup, seed_mats):
    """Normal closure in sub of the subgroup generated by seed_mats.
    Returns (order, member_codes).  Closure under products first, then
    saturation under conjugation by sub's generators, repeated to fixpoint."""
    spec = sub.spec
    q = spec.q
    gens, invs = _gen_mats_with_inverses(sub)
    gen_set = {}
    for c in seed_mats:
        code = int(_batch.encode_mats(spec, c[None])[0])
        gen_set[code] = c
    identity_code = int(_batch.encode_mats(
        spec, np.eye(spec.n, dtype=np.int64)[None, :, :])[0])
    while True:
        count, visited = _batch.closure_bfs(
            spec, [identity_code], list(gen_set.values()), "right")
        member_codes = np.flatnonzero(visited)
        new = {}
        for start in range(0, member_codes.size, _CHUNK):
            mats = _batch.decode_codes(spec, member_codes[start:start + _CHUNK])
            for g, g_inv in zip(gens, invs):
                out = np.matmul(np.matmul(g, mats), g_inv) % q
                codes = _batch.encode_mats(spec, out)
                outside = codes[~visited[codes]]
                for c in np.unique(outside)[:8]:
                    new[int(c)] = None
        if not new:
            return count, member_codes
        for c in new:
            gen_set[c] = _batch.decode_codes(spec, np.array([c]))[0]


def _commutator_seed_mats(sub, member_codes=None):
    """Nonidentity commutators [x, g] = x^-1 g^-1 x g, x over member_codes
    (default: sub's generators), g over sub's generators."""
    spec = sub.spec
    q = spec.q
    gens, invs = _gen_mats_with_inverses(sub)
    if member_codes is None:
        xs = np.array(gens, dtype=np.int64)
        xs_inv = np.array(invs, dtype=np.int64)
    else:
        xs = _batch.decode_codes(spec, member_codes)
        xs_inv = _batch.batch_inv(xs, spec)
    seeds = {}
    eye = np.eye(spec.n, dtype=np.int64)
    for g, g_inv in zip(gens, invs):
        comm = np.matmul(xs_inv, np.matmul(g_inv, np.matmul(xs, g))) % q
        codes = _batch.encode_mats(spec, comm)
        nontriv = ~(comm == eye).all(axis=(1, 2))
        for code, c in zip(codes[nontriv].tolist(), comm[nontriv]):
            seeds.setdefault(code, c)
    return list(seeds.values())


def derived_order(sub: Subgroup) -> int:
    """Order of the derived subgroup (normal closure of generator-pair
    commutators)."""
    return lcs_orders(sub)[0]


def lcs_orders(sub: Subgroup) -> tuple:
    """Orders along the lower central series (|γ₂|, |γ₃|, ...), recorded
    until the series hits 1 or stabilizes.  Distinguishes groups of equal
    order and derived order but different nilpotency class."""
    if "lcs_orders" in sub._cache:
        return sub._cache["lcs_orders"]
    orders = []
    if is_abelian(sub):
        orders = [1]
    else:
        seeds = _commutator_seed_mats(sub)
        for _ in range(8):
            if not seeds:
                orders.append(1)
                break
            count, members = _normal_closure(sub, seeds)
            orders.append(count)
            if len(orders) == 1:
                sub._cache["derived_codes"] = members
            if count == 1 or (len(orders) > 1 and orders[-2] == count):
                break
            seeds = _commutator_seed_mats(sub, member_codes=members)
    result = tuple(orders)
    sub._cache["lcs_orders"] = result
    return result


def derived_member_codes(sub: Subgroup):
    """Element codes of the derived subgroup."""
    if "derived_codes" not in sub._cache:
        seeds = _commutator_seed_mats(sub)
        if not seeds:
            eye = np.eye(sub.spec.n, dtype=np.int64)
            codes = _batch.encode_mats(sub.spec, eye[None])
        else:
            _, codes = _normal_closure(sub, seeds)
        sub._cache["derived_codes"] = codes
    return sub._cache["derived_codes"]


# Isomorphism invariants in increasing cost order.  Matching compares them
# lazily field by field; the first difference settles non-isomorphism and
# the expensive tail is only reached on deep ties.
INVARIANT_LADDER = (
    "order", "is_abelian", "center_order", "lcs_orders", "exponent",
    "order_hist", "center_order_hist", "derived_order_hist",
    "class_size_hist")

# Enumeration bound for the histogram invariants.  Everything on the
# verified grid stays below it; larger subgroups are compared on the cheap
# prefix only and the truncation is recorded by the registry.
HIST_LIMIT = 50_000

_INVARIANT_FN = {
    "order": lambda s: s.order,
    "is_abelian": is_abelian,
    "center_order": center_order,
    "lcs_orders": lcs_orders,
    "exponent": lambda s: order_statistics(s)[0],
    "order_hist": lambda s: order_statistics(s)[1],
    "center_order_hist": center_order_hist,
    "derived_order_hist": derived_order_hist,
    "class_size_hist": class_size_hist,
}


def invariant(sub: Subgroup, name: str):
    """One isomorphism invariant by ladder name, computed lazily."""
    key = "inv:" + name
    if key not in sub._cache:
        sub._cache[key] = _INVARIANT_FN[name](sub)
    return sub._cache[key]


def invariant_applicable(sub: Subgroup, name: str) -> bool:
    """Whether an invariant is affordable for this subgroup.  The closed
    unipotent-order forms keep the order histograms free whenever they
    apply; otherwise the histograms require enumerating the relevant
    subgroup, which is capped at HIST_LIMIT elements."""
    spec = sub.spec
    ut_fast = spec.family == "ut" and spec.q >= spec.n
    if name in ("exponent", "order_hist"):
        return ut_fast or sub.order <= HIST_LIMIT
    if name == "center_order_hist":
        return ut_fast or center_order(sub) <= HIST_LIMIT
    if name == "derived_order_hist":
        return spec.q >= spec.n or derived_order(sub) <= HIST_LIMIT
    if name == "class_size_hist":
        return is_abelian(sub) or sub.order <= HIST_LIMIT
    return True


def fingerprint(sub: Subgroup, tier: int = 1) -> TypeFingerprint:
    """Isomorphism fingerprint.  Tier 1 is cheap; tier 2 adds the element
    order, class size and centralizer-order histograms."""
    fp1 = dict(order=sub.order, is_abelian=is_abelian(sub),
               center_order=center_order(sub),
               derived_order=derived_order(sub),
               exponent=invariant(sub, "exponent"))
    tier2 = None
    if tier >= 2:
        class_hist = invariant(sub, "class_size_hist")
        cents = {}
        for size, count in class_hist:
            cents[sub.order // size] = size * count
        tier2 = (invariant(sub, "order_hist"), class_hist,
                 tuple(sorted(cents.items())))
    return TypeFingerprint(tier2=tier2, **fp1)


# ── isomorphism referee ─────────────────────────────────────────────────────

class _AbstractGroup:
    """Multiplication-table wrapper for the backtracking referee."""

    def __init__(self, sub: Subgroup):
        spec = sub.spec
        q = spec.q
        codes = sub.elements
        mats = _batch.decode_codes(spec, codes)
        self.m = m = len(codes)
        # full multiplication table over indices 0..m-1
        lookup = np.full(spec.order, -1, dtype=np.int64)
        lookup[codes] = np.arange(m)
        table = np.empty((m, m), dtype=np.int32)
        for i in range(m):
            prods = np.matmul(mats[i], mats) % q
            table[i] = lookup[_batch.encode_mats(spec, prods)]
        self.table = table
        eye = np.eye(spec.n, dtype=np.int64)
        self.e = int(lookup[int(_batch.encode_mats(spec, eye[None])[0])])
        self.orders = self._orders()
        # centralizer sizes: row i commutes with column j iff table symmetric
        self.cent_sizes = (table == table.T).sum(axis=1)
        # profile: invariants a generator image must share
        self.profile = list(zip(self.orders.tolist(),
                                self.cent_sizes.tolist()))

    def _orders(self):
        m = self.m
        ords = np.zeros(m, dtype=np.int64)
        ords[self.e] = 1
        idx = np.arange(m)
        acc = idx.copy()
        k = 1
        alive = ords == 0
        while alive.any():
            k += 1
            acc[alive] = self.table[acc[alive], idx[alive]]
            done = alive & (acc == self.e)
            ords[done] = k
            alive &= ~done
        return ords

    def generating_sequence(self):
        """Greedy generators, highest order first (keeps the sequence short)."""
        by_order = sorted(range(self.m), key=lambda i: -int(self.orders[i]))
        gens = []
        closure = {self.e}
        for i in by_order:
            if i in closure:
                continue
            gens.append(i)
            frontier = list(closure)
            closure.add(i)
            frontier.append(i)
            while frontier:
                nxt = []
                for a in frontier:
                    for g in gens:
                        b = int(self.table[a, g])
                        if b not in closure:
                            closure.add(b)
                            nxt.append(b)
                        b = int(self.table[g, a])
                        if b not in closure:
                            closure.add(b)
                            nxt.append(b)
                frontier = nxt
            if len(closure) == self.m:
                break
        return gens


def _close_partial(A, B, phi, used, new_pairs):
    """Extend the partial isomorphism phi (dict A-index -> B-index) by the
    listed new pairs, closing under products.  Mutates phi/used; returns the
    closure's new pairs on success, None on contradiction."""
    added = []
    frontier = []
    for a, b in new_pairs:
        if a in phi:
            if phi[a] != b:
                return None
            continue
        if b in used:
            return None
        phi[a] = b
        used.add(b)
        added.append(a)
        frontier.append(a)
    while frontier:
        nxt = []
        for x in frontier:
            bx = phi[x]
            for a, ba in list(phi.items()):
                for xa, bxa in ((int(A.table[x, a]), int(B.table[bx, ba])),
                                (int(A.table[a, x]), int(B.table[ba, bx]))):
                    known = phi.get(xa)
                    if known is not None:
                        if known != bxa:
                            return None
                    else:
                        if bxa in used:
                            return None
                        phi[xa] = bxa
                        used.add(bxa)
                        added.append(xa)
                        nxt.append(xa)
        frontier = nxt
    return added


def are_isomorphic(a: Subgroup, b: Subgroup) -> bool:
    """Exact isomorphism test.  Abelian operands are decided by their element
    order histograms (a complete invariant for finite abelian groups); the
    nonabelian case backtracks over generator images, extending a partial
    isomorphism one generator at a time.  Refuses orders above ISO_GUARD."""
    if a.order != b.order:
        return False
    ab_a, ab_b = is_abelian(a), is_abelian(b)
    if ab_a != ab_b:
        return False
    if ab_a:
        return order_statistics(a) == order_statistics(b)
    if a.order > ISO_GUARD:
        raise SizeGuardExceeded(
            f"isomorphism referee limited to order {ISO_GUARD}, got {a.order}")
    A, B = _AbstractGroup(a), _AbstractGroup(b)
    if sorted(A.profile) != sorted(B.profile):
        return False
    gens = A.generating_sequence()
    cands = [[j for j in range(B.m) if B.profile[j] == A.profile[g]]
             for g in gens]

    def backtrack(pos, phi, used):
        if pos == len(gens):
            return len(phi) == A.m
        g = gens[pos]
        for cand in cands[pos]:
            if cand in used:
                continue
            trial_phi = dict(phi)
            trial_used = set(used)
            if _close_partial(A, B, trial_phi, trial_used,
                              [(g, cand)]) is not None:
                if backtrack(pos + 1, trial_phi, trial_used):
                    return True
        return False

    return backtrack(0, {A.e: B.e}, {B.e})
