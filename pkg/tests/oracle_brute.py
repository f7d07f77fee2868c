"""Independent brute-force oracle for small triangular matrix groups.

Everything here is deliberately naive: dense matrices as nested tuples,
itertools enumeration, orbit computation by conjugating with every group
element, isomorphism testing by generator-image backtracking.  No imports
from the package under test.  The point is to have a second, dumb route to
the same numbers, written first, so the fast engine can be checked against
it on groups small enough for brute force (a few hundred elements; UT_4(F_3)
at 729 is the practical ceiling).

Run as a script to print the frozen expectation block used by the tests:

    python tests/oracle_brute.py
"""

from __future__ import annotations

import itertools
from fractions import Fraction


# ── dense matrix arithmetic mod q ──────────────────────────────────────────

def mat_mul(a, b, q):
    n = len(a)
    return tuple(
        tuple(sum(a[i][k] * b[k][j] for k in range(n)) % q for j in range(n))
        for i in range(n)
    )


def identity(n):
    return tuple(tuple(1 if i == j else 0 for j in range(n)) for i in range(n))


def mat_inv(a, q):
    """Inverse by Gauss-Jordan on the augmented matrix, entries mod q."""
    n = len(a)
    aug = [list(row) + [1 if i == j else 0 for j in range(n)]
           for i, row in enumerate(a)]
    for col in range(n):
        piv = next(r for r in range(col, n) if aug[r][col] % q != 0)
        aug[col], aug[piv] = aug[piv], aug[col]
        inv = pow(aug[col][col], q - 2, q)
        aug[col] = [(x * inv) % q for x in aug[col]]
        for r in range(n):
            if r != col and aug[r][col] % q:
                f = aug[r][col]
                aug[r] = [(x - f * y) % q for x, y in zip(aug[r], aug[col])]
    return tuple(tuple(row[n:]) for row in aug)


# ── group enumeration ───────────────────────────────────────────────────────

def enumerate_group(family, n, q):
    """All elements of GT_n(F_q) or UT_n(F_q) as dense tuples."""
    uppers = [(i, j) for i in range(n) for j in range(i + 1, n)]
    if family == "gt":
        diag_choices = itertools.product(range(1, q), repeat=n)
    else:
        diag_choices = [tuple(1 for _ in range(n))]
    out = []
    for diag in diag_choices:
        for vals in itertools.product(range(q), repeat=len(uppers)):
            m = [[0] * n for _ in range(n)]
            for i in range(n):
                m[i][i] = diag[i]
            for (i, j), v in zip(uppers, vals):
                m[i][j] = v
            out.append(tuple(tuple(row) for row in m))
    return out


# ── conjugacy, centralizers, commuting tuples ───────────────────────────────

def conjugacy_classes(elements, q):
    """Orbits under conjugation by every element of the ambient list."""
    pool = set(elements)
    classes = []
    for x in elements:
        if x not in pool:
            continue
        orbit = {mat_mul(mat_mul(g, x, q), mat_inv(g, q), q) for g in elements}
        pool -= orbit
        classes.append(sorted(orbit))
    return classes


def centralizer(elements, x, q):
    return [g for g in elements if mat_mul(g, x, q) == mat_mul(x, g, q)]


def commuting_tuple_count(elements, q, k, _memo=None):
    """Number of pairwise-commuting k-tuples drawn from the element list."""
    if k == 0:
        return 1
    if k == 1:
        return len(elements)
    if _memo is None:
        _memo = {}
    key = (frozenset(elements), k)
    if key in _memo:
        return _memo[key]
    total = 0
    for x in elements:
        total += commuting_tuple_count(centralizer(elements, x, q), q, k - 1, _memo)
    _memo[key] = total
    return total


def commuting_probability(family, n, q, k):
    els = enumerate_group(family, n, q)
    return Fraction(commuting_tuple_count(els, q, k), len(els) ** k)


# ── abstract-group utilities for isomorphism testing ────────────────────────

class AbstractGroup:
    """A finite group as an element list plus multiplication, reindexed 0..m-1."""

    def __init__(self, elements, q):
        self.q = q
        self.elements = list(elements)
        self.index = {e: i for i, e in enumerate(self.elements)}
        self.m = len(self.elements)
        n = len(self.elements[0])
        self.e = self.index[identity(n)]
        self._mul = {}
        self._order = None
        self._cent_size = None

    def mul(self, i, j):
        key = (i, j)
        if key not in self._mul:
            self._mul[key] = self.index[
                mat_mul(self.elements[i], self.elements[j], self.q)]
        return self._mul[key]

    def element_orders(self):
        if self._order is None:
            orders = []
            for i in range(self.m):
                o, acc = 1, i
                while acc != self.e:
                    acc = self.mul(acc, i)
                    o += 1
                orders.append(o)
            self._order = orders
        return self._order

    def centralizer_sizes(self):
        if self._cent_size is None:
            self._cent_size = [
                sum(1 for j in range(self.m) if self.mul(i, j) == self.mul(j, i))
                for i in range(self.m)
            ]
        return self._cent_size

    def invariant(self):
        """Cheap isomorphism invariant used as a prefilter."""
        orders = self.element_orders()
        cents = self.centralizer_sizes()
        return (self.m, tuple(sorted(zip(orders, cents))))

    def generating_sequence(self):
        gens, closure = [], {self.e}
        for i in range(self.m):
            if i in closure:
                continue
            gens.append(i)
            frontier = list(closure | {i})
            closure.add(i)
            while frontier:
                nxt = []
                for a in frontier:
                    for g in gens:
                        b = self.mul(a, g)
                        if b not in closure:
                            closure.add(b)
                            nxt.append(b)
                frontier = nxt
            if len(closure) == self.m:
                break
        return gens


def _extend_hom(A, B, gen_images):
    """Try to extend generator images to a full isomorphism; None if inconsistent."""
    phi = {A.e: B.e}
    frontier = [A.e]
    gens = list(gen_images)
    while frontier:
        nxt = []
        for a in frontier:
            for g, bg in gens:
                ag = A.mul(a, g)
                img = B.mul(phi[a], bg)
                if ag in phi:
                    if phi[ag] != img:
                        return None
                else:
                    phi[ag] = img
                    nxt.append(ag)
        frontier = nxt
    if len(phi) != A.m or len(set(phi.values())) != A.m:
        return None
    return phi


def are_isomorphic(A, B):
    if A.invariant() != B.invariant():
        return False
    gens = A.generating_sequence()
    ordA = A.element_orders()
    ordB = B.element_orders()
    centA = A.centralizer_sizes()
    centB = B.centralizer_sizes()

    def backtrack(pos, images):
        if pos == len(gens):
            return _extend_hom(A, B, list(zip(gens, images))) is not None
        g = gens[pos]
        for cand in range(B.m):
            if ordB[cand] != ordA[g] or centB[cand] != centA[g]:
                continue
            if backtrack(pos + 1, images + [cand]):
                return True
        return False

    return backtrack(0, [])


# ── branching closure ───────────────────────────────────────────────────────

def brute_branching(family, n, q, verbose=False):
    """Full branching closure by brute force.

    Returns (types, matrix) where types is a list of dicts
    {order, class_count} in discovery order and matrix[i][j] is the number
    of branches of type i from a tuple of type j.  Type identity is decided
    by honest isomorphism testing of centralizers (with an invariant
    prefilter), which caps this at groups of a few hundred elements.
    """
    G = enumerate_group(family, n, q)
    type_reps = []          # AbstractGroup per type
    type_info = []          # {order, class_count}
    type_tuples = []        # defining tuple of matrices per type
    columns = {}

    def classify(sub_elements):
        Z = AbstractGroup(sub_elements, q)
        for tid, rep in enumerate(type_reps):
            if rep.m == Z.m and are_isomorphic(rep, Z):
                return tid, False
        type_reps.append(Z)
        type_info.append({"order": Z.m, "class_count": 0})
        return len(type_reps) - 1, True

    queue = [classify(G)[0]]
    type_tuples.append(())
    seen = {0}
    while queue:
        tid = queue.pop(0)
        tup = type_tuples[tid]
        Z = [g for g in G
             if all(mat_mul(g, t, q) == mat_mul(t, g, q) for t in tup)]
        col = {}
        for cls in conjugacy_classes(Z, q):
            b = cls[0]
            sub = [g for g in Z if mat_mul(g, b, q) == mat_mul(b, g, q)]
            new_tid, created = classify(sub)
            col[new_tid] = col.get(new_tid, 0) + 1
            if created:
                type_tuples.append(tup + (b,))
                queue.append(new_tid)
                seen.add(new_tid)
            if tid == 0:
                type_info[new_tid]["class_count"] += 1
        columns[tid] = col
        if verbose:
            print(f"type {tid}: |Z|={len(Z)} column={col}")
    dim = len(type_reps)
    matrix = [[columns[j].get(i, 0) for j in range(dim)] for i in range(dim)]
    return type_info, matrix


# ── frozen expectation block ────────────────────────────────────────────────

def main():
    for family, n, q in [("gt", 2, 3), ("gt", 2, 5), ("ut", 3, 3),
                         ("ut", 3, 5), ("gt", 3, 3)]:
        els = enumerate_group(family, n, q)
        classes = conjugacy_classes(els, q)
        print(f"{family}_{n}(F_{q}): order={len(els)} classes={len(classes)}")
        info, matrix = brute_branching(family, n, q)
        print("  types:", [(t["order"], t["class_count"]) for t in info])
        print("  matrix:", matrix)
        for k in (2, 3):
            print(f"  cp_{k} =", commuting_probability(family, n, q, k))


if __name__ == "__main__":
    main()
