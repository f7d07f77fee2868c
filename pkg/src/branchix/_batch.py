"""Vectorized kernels over element-code arrays.

Everything hot runs here: decoding code arrays to stacked dense matrices,
batched modular matrix products, and the closure BFS used both to verify
generation and to walk conjugation orbits.  Matrices travel as (N, n, n)
int64 arrays; codes as int64.  Work on large arrays is chunked to bound
memory.
"""

from __future__ import annotations

import numpy as np

CHUNK = 1 << 18  # elements per decoded chunk


def codec_arrays(spec):
    """Cache the numpy form of the spec's codec: digit weights, bases, the
    (row, col) index arrays, and a value table for diagonal digits."""
    cache = spec._cache
    if "codec" not in cache:
        pos = np.array(spec.digit_positions, dtype=np.int64)
        cache["codec"] = {
            "rows": pos[:, 0],
            "cols": pos[:, 1],
            "bases": np.array(spec.digit_bases, dtype=np.int64),
            "weights": np.array(spec.digit_weights, dtype=np.int64),
            "is_diag": pos[:, 0] == pos[:, 1],
        }
    return cache["codec"]


def decode_codes(spec, codes):
    """codes (N,) int64 -> dense matrices (N, n, n) int64."""
    c = codec_arrays(spec)
    codes = np.asarray(codes, dtype=np.int64)
    digits = (codes[:, None] // c["weights"]) % c["bases"]
    # diagonal digits index unit_list = [1..q-1], so value = digit + 1
    vals = np.where(c["is_diag"], digits + 1, digits)
    mats = np.zeros((len(codes), spec.n, spec.n), dtype=np.int64)
    mats[:, c["rows"], c["cols"]] = vals
    if spec.family == "ut":
        idx = np.arange(spec.n)
        mats[:, idx, idx] = 1
    return mats


def encode_mats(spec, mats):
    """dense matrices (N, n, n) -> codes (N,) int64."""
    c = codec_arrays(spec)
    vals = mats[:, c["rows"], c["cols"]]
    digits = np.where(c["is_diag"], vals - 1, vals)
    return digits @ c["weights"]


def mat_to_array(tri):
    return tri.to_dense()


def bmm(a, b, q):
    """Batched matrix product mod q; either operand may be a single matrix."""
    return np.matmul(a, b) % q


def conjugate(g, g_inv, mats, q):
    """g x g^-1 for every x in mats (g fixed)."""
    return np.matmul(np.matmul(g, mats), g_inv) % q


def batch_pow(mats, e, q):
    """Elementwise matrix power x^e, binary powering."""
    n = mats.shape[-1]
    out = np.broadcast_to(np.eye(n, dtype=np.int64), mats.shape).copy()
    base = mats % q
    while e:
        if e & 1:
            out = np.matmul(out, base) % q
        e >>= 1
        if e:
            base = np.matmul(base, base) % q
    return out


def batch_inv(mats, spec):
    """Inverse of a batch of triangular matrices by back-substitution
    along superdiagonals (same recurrence as trigroup.mat_inv)."""
    q = spec.q
    n = mats.shape[-1]
    inv_table = np.array([0] + [pow(a, q - 2, q) for a in range(1, q)],
                         dtype=np.int64)
    x = np.zeros_like(mats)
    diag_inv = inv_table[mats[:, np.arange(n), np.arange(n)]]
    x[:, np.arange(n), np.arange(n)] = diag_inv
    for off in range(1, n):
        for i in range(n - off):
            j = i + off
            s = np.einsum("bk,bk->b", mats[:, i, i + 1:j + 1],
                          x[:, i + 1:j + 1, j]) % q
            x[:, i, j] = (-diag_inv[:, i] * s) % q
    return x


def closure_bfs(spec, seed_codes, gen_mats, mode, visited=None):
    """Generic BFS over codes.

    mode 'right': x -> x*g   (subgroup generated by gens through the seeds)
    mode 'conj':  x -> g*x*g^-1, g^-1*x*g (conjugation orbit)

    Returns (visited_codes_count, visited) where visited is a bool array over
    the full code space.  Frontier work is chunked.
    """
    from .trigroup import mat_inv, tri_from_dense

    q = spec.q
    if visited is None:
        visited = np.zeros(spec.order, dtype=bool)
    pairs = []
    for g in gen_mats:
        g_arr = np.asarray(g, dtype=np.int64)
        aug = [g_arr]
        if mode == "conj":
            tri = tri_from_dense(g_arr.tolist(), q, spec.family == "ut")
            inv = mat_to_array(mat_inv(tri, spec.field))
            aug.append(inv)
        pairs.append(aug)

    frontier = np.unique(np.asarray(seed_codes, dtype=np.int64))
    frontier = frontier[~visited[frontier]]
    visited[frontier] = True
    count = int(frontier.size)
    while frontier.size:
        produced = []
        for start in range(0, frontier.size, CHUNK):
            chunk = frontier[start:start + CHUNK]
            mats = decode_codes(spec, chunk)
            for aug in pairs:
                if mode == "right":
                    out = np.matmul(mats, aug[0]) % q
                    produced.append(encode_mats(spec, out))
                else:
                    g, g_inv = aug
                    out = np.matmul(np.matmul(g, mats), g_inv) % q
                    produced.append(encode_mats(spec, out))
                    out = np.matmul(np.matmul(g_inv, mats), g) % q
                    produced.append(encode_mats(spec, out))
        nxt = np.unique(np.concatenate(produced))
        nxt = nxt[~visited[nxt]]
        visited[nxt] = True
        count += int(nxt.size)
        frontier = nxt
    return count, visited


def verify_generation(spec):
    """Check that the standard generators generate the whole group (closure
    BFS from the identity under right multiplication).  Cached per spec."""
    if spec._cache.get("generation_verified"):
        return True
    from .trigroup import generators
    gen_mats = [g.to_dense() for g in generators(spec)]
    identity_code = 0
    count, _ = closure_bfs(spec, [identity_code], gen_mats, "right")
    if count != spec.order:
        raise AssertionError(
            f"generators span {count} of {spec.order} elements in "
            f"{spec.family}_{spec.n}(F_{spec.q})")
    spec._cache["generation_verified"] = True
    return True
