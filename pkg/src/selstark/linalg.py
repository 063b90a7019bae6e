"""Exact linear algebra over Z/q for q a prime power.

Everything in the package ultimately reduces to row spans over Z/p^m, which
is a chain ring but not a field, so plain row reduction is unsound.  The
canonical object here is the Howell normal form: a unique echelon-style basis
of a row span that additionally satisfies the Howell property (every span
element whose leading coordinate is >= j lies in the span of the rows with
leading coordinate >= j).  Kernels and preimages are obtained from Howell
forms of augmented matrices.

Matrices are numpy int64 arrays with entries reduced into [0, q).
"""

from __future__ import annotations

import numpy as np


def as_matrix(rows, ncols: int) -> np.ndarray:
    a = np.array(rows, dtype=np.int64)
    if a.size == 0:
        return np.zeros((0, ncols), dtype=np.int64)
    a = a.reshape(-1, ncols)
    return a


def _val(x: int, p: int, s: int) -> int:
    """p-adic valuation of x mod p^s (s if x == 0)."""
    if x == 0:
        return s
    v = 0
    while x % p == 0:
        x //= p
        v += 1
    return v


def inv_mod(u: int, q: int) -> int:
    return pow(int(u), -1, q)


def howell(mat, q: int, p: int | None = None) -> np.ndarray:
    """Unique Howell normal form of the row span of ``mat`` over Z/q, q = p^s.

    Rows are sorted by pivot column; each pivot entry is p^v for some v;
    entries above a pivot are reduced modulo that pivot.  Zero rows are
    dropped, so two submodules of (Z/q)^n are equal iff their Howell forms
    are identical arrays.
    """
    mat = np.asarray(mat, dtype=np.int64) % q
    if mat.ndim != 2:
        raise ValueError("howell expects a 2-d matrix")
    n = mat.shape[1]
    if p is None:
        p = _smallest_prime_factor(q)
    s = 0
    qq = q
    while qq > 1:
        qq //= p
        s += 1
    active = [row.copy() for row in mat if row.any()]
    result: list[np.ndarray] = []
    for j in range(n):
        # candidate rows have zeros before column j
        cand = [r for r in active if r[j] % q != 0]
        rest = [r for r in active if r[j] % q == 0]
        if not cand:
            active = rest
            continue
        # pick the row whose j-entry has minimal valuation
        vals = [_val(int(r[j]), p, s) for r in cand]
        k = int(np.argmin(vals))
        piv = cand.pop(k)
        v = vals[k]
        unit = int(piv[j]) // p**v
        piv = (piv * inv_mod(unit, q)) % q
        # eliminate the j-entry of every other candidate row
        for r in cand:
            w = _val(int(r[j]), p, s)
            factor = (int(r[j]) // p**v) % q
            r -= factor * piv
            r %= q
        # annihilator row keeps the Howell property
        ann = (piv * (q // p**v)) % q
        if ann.any():
            rest.append(ann)
        active = rest + [r for r in cand if r.any()]
        result.append((piv, j, v))
    # reduce entries above each pivot
    for i, (row, j, v) in enumerate(result):
        for r, (above, _, _) in enumerate(result[:i]):
            c = int(above[j]) // p**v
            if c:
                above -= c * row
                above %= q
    if not result:
        return np.zeros((0, n), dtype=np.int64)
    return np.array([row for row, _, _ in result], dtype=np.int64)


def _smallest_prime_factor(q: int) -> int:
    d = 2
    while d * d <= q:
        if q % d == 0:
            return d
        d += 1
    return q


def pivots(h: np.ndarray, q: int, p: int) -> list[tuple[int, int]]:
    """(column, valuation) of each pivot of a Howell-form matrix."""
    out = []
    s = 0
    qq = q
    while qq > 1:
        qq //= p
        s += 1
    for row in h:
        nz = np.nonzero(row % q)[0]
        j = int(nz[0])
        out.append((j, _val(int(row[j]), p, s)))
    return out


def span_log_size(h: np.ndarray, q: int, p: int) -> int:
    """log_p of the cardinality of the row span (h in Howell form)."""
    s = round(np.log(q) / np.log(p))
    return sum(s - v for _, v in pivots(h, q, p))


def reduce_vec(vec, h: np.ndarray, q: int, p: int) -> np.ndarray:
    """Canonical coset representative of ``vec`` modulo the span of ``h``."""
    v = np.asarray(vec, dtype=np.int64) % q
    out = v.copy()
    for row, (j, val) in zip(h, pivots(h, q, p)):
        c = int(out[j]) // p**val
        if c:
            out = (out - c * row) % q
    return out


def in_span(vec, h: np.ndarray, q: int, p: int) -> bool:
    return not reduce_vec(vec, h, q, p).any()


def kernel_left(a: np.ndarray, q: int, p: int) -> np.ndarray:
    """Howell basis of {x : x @ a == 0 mod q}; a is k x n, x has length k."""
    a = np.asarray(a, dtype=np.int64) % q
    k, n = a.shape
    aug = np.hstack([a, np.eye(k, dtype=np.int64)])
    h = howell(aug, q, p)
    rows = [row[n:] for row in h if not row[:n].any()]
    if not rows:
        return np.zeros((0, k), dtype=np.int64)
    return howell(np.array(rows, dtype=np.int64), q, p)


def preimage_span(a: np.ndarray, l: np.ndarray, q: int, p: int) -> np.ndarray:
    """Howell basis of {x : x @ a in rowspan(l)}."""
    a = np.asarray(a, dtype=np.int64) % q
    l = np.asarray(l, dtype=np.int64) % q
    k, n = a.shape
    top = np.hstack([a, np.eye(k, dtype=np.int64)])
    bot = np.hstack([l, np.zeros((l.shape[0], k), dtype=np.int64)])
    h = howell(np.vstack([top, bot]), q, p)
    rows = [row[n:] for row in h if not row[:n].any()]
    if not rows:
        return np.zeros((0, k), dtype=np.int64)
    return howell(np.array(rows, dtype=np.int64), q, p)


def solve_left(a: np.ndarray, b, q: int, p: int) -> np.ndarray | None:
    """One solution x of x @ a == b mod q, or None if there is none."""
    a = np.asarray(a, dtype=np.int64) % q
    b = np.asarray(b, dtype=np.int64) % q
    k, n = a.shape
    aug = np.hstack([a, np.eye(k, dtype=np.int64)])
    h = howell(aug, q, p)
    res = np.concatenate([b, np.zeros(k, dtype=np.int64)])
    for row, (j, val) in zip(h, pivots(h, q, p)):
        if j >= n:
            break
        c = int(res[j]) // p**val
        if c:
            res = (res - c * row) % q
    if res[:n].any():
        return None
    return (-res[n:]) % q


def span_union(*mats, q: int, p: int, ncols: int) -> np.ndarray:
    """Howell form of the span of the union of the given row sets."""
    rows = [as_matrix(m, ncols) for m in mats]
    return howell(np.vstack(rows) if rows else np.zeros((0, ncols)), q, p)


def span_intersection(a: np.ndarray, b: np.ndarray, q: int, p: int) -> np.ndarray:
    """Howell basis of rowspan(a) & rowspan(b).

    Pairs (x, y) with x @ a == y @ b are found as a kernel; the intersection
    is the set of values x @ a.
    """
    a = np.asarray(a, dtype=np.int64) % q
    b = np.asarray(b, dtype=np.int64) % q
    n = a.shape[1]
    if a.shape[0] == 0 or b.shape[0] == 0:
        return np.zeros((0, n), dtype=np.int64)
    stacked = np.vstack([a, (-b) % q])
    pairs = kernel_left(stacked, q, p)
    vals = pairs[:, : a.shape[0]] @ a % q
    return howell(vals, q, p)


def enumerate_coset_reps(h: np.ndarray, q: int, p: int, n: int, limit: int = 200000):
    """All canonical representatives of (Z/q)^n modulo the span of ``h``.

    Free coordinates run over Z/q; pivot coordinates run over [0, p^v).
    """
    pv = dict(pivots(h, q, p))
    ranges = []
    for j in range(n):
        if j in pv:
            ranges.append(p ** pv[j])
        else:
            ranges.append(q)
    total = 1
    for r in ranges:
        total *= r
        if total > limit:
            raise ValueError(f"coset enumeration too large (> {limit})")
    vec = np.zeros(n, dtype=np.int64)
    idx = [0] * n
    while True:
        yield vec.copy()
        for j in range(n - 1, -1, -1):
            idx[j] += 1
            if idx[j] < ranges[j]:
                vec[j] = idx[j]
                break
            idx[j] = 0
            vec[j] = 0
        else:
            return
