"""Brute-force reference implementations for acceptance testing.

Everything here works by exhaustive enumeration over small rings and
modules and deliberately avoids the normal-form algorithms used by the
main code paths: ideals are grown as explicit element sets, functionals
are found by filtering all candidate value tuples, determinants are
expanded as signed permutation sums, and Stark families are enumerated
coordinate by coordinate.  All functions raise OracleBoundsError when the
search space exceeds the stated desk-scale bounds.
"""

from __future__ import annotations

import itertools

import numpy as np

from . import linalg
from .modules import FPModule
from .rings import IdealCanon, RingHandle

RING_BOUND = 3 ** 6


class OracleBoundsError(ValueError):
    pass


def ring_elements(ring: RingHandle, bound: int = RING_BOUND) -> list[np.ndarray]:
    size = ring.q ** ring.n
    if size > bound:
        raise OracleBoundsError(f"ring of size {size} exceeds the oracle bound")
    out = []
    for tup in itertools.product(range(ring.q), repeat=ring.n):
        out.append(np.array(tup, dtype=np.int64))
    return out


def _closure(vectors, q: int) -> set[tuple]:
    """Additive closure of a set of integer vectors mod q."""
    if not len(vectors):
        return {()}
    dim = len(vectors[0])
    elems = {tuple([0] * dim)}
    for v in vectors:
        v = np.asarray(v, dtype=np.int64) % q
        if tuple(int(x) for x in v) in elems:
            continue
        # order of v in the ambient group divides q
        multiples = []
        cur = np.zeros(dim, dtype=np.int64)
        while True:
            cur = (cur + v) % q
            if not cur.any():
                break
            multiples.append(cur.copy())
        elems = {tuple((np.array(e) + k) % q)
                 for e in elems
                 for k in [np.zeros(dim, dtype=np.int64)] + multiples}
    return elems


def ideal_elements(ring: RingHandle, gens,
                   bound: int = RING_BOUND) -> set[tuple]:
    """All elements of the ideal generated by ``gens``, as tuples."""
    elems = np.array(ring_elements(ring, bound), dtype=np.int64)
    products: set[tuple] = set()
    for g in gens:
        g = np.asarray(g, dtype=np.int64) % ring.q
        vals = elems @ ring.reg_matrix(g) % ring.q
        products |= {tuple(int(x) for x in v) for v in vals}
    if not products:
        return {tuple([0] * ring.n)}
    return _closure(sorted(products), ring.q)


def ideal_membership(ring: RingHandle, gens, x,
                     bound: int = RING_BOUND) -> bool:
    return tuple(np.asarray(x, dtype=np.int64) % ring.q) in \
        ideal_elements(ring, gens, bound)


def ideal_agrees(ideal: IdealCanon, elems: set[tuple]) -> bool:
    """Whether a canonical ideal has exactly the enumerated elements."""
    ring = ideal.ring
    size = 1
    for _, v in linalg.pivots(ideal.matrix, ring.q, ring.p):
        size *= ring.q // ring.p ** v
    if size != len(elems):
        return False
    return all(ideal.contains(np.array(e, dtype=np.int64)) for e in elems)


# -- functionals and image ideals ----------------------------------------------


def dual_functionals(mod: FPModule, bound: int = RING_BOUND) -> list[np.ndarray]:
    """All R-linear functionals on the module, as value tuples on the
    presentation generators (concatenated, length b * n)."""
    ring = mod.ring
    b = mod.b
    size = (ring.q ** ring.n) ** b
    if size > bound ** 2:
        raise OracleBoundsError("functional search space too large")
    elems = ring_elements(ring, bound)
    cand = np.array([np.concatenate(v) for v in
                     itertools.product(elems, repeat=b)], dtype=np.int64)
    keep = np.ones(len(cand), dtype=bool)
    for row in mod.span:
        # the value of the functional v on an additive relation row is
        # sum_t row_t * v_t, a linear condition on v
        cond = np.vstack([ring.reg_matrix(row[t * ring.n:(t + 1) * ring.n])
                          for t in range(b)])
        vals = cand @ cond % ring.q
        keep &= ~vals.any(axis=1)
    return [c for c in cand[keep]]


def _apply_functional(ring: RingHandle, func: np.ndarray,
                      vec: np.ndarray) -> np.ndarray:
    total = ring.zero()
    b = len(func) // ring.n
    for t in range(b):
        total = (total + ring.mul(vec[t * ring.n:(t + 1) * ring.n],
                                  func[t * ring.n:(t + 1) * ring.n])) % ring.q
    return total


def perm_det(ring: RingHandle, mat: list[list[np.ndarray]]) -> np.ndarray:
    """Determinant as a signed sum over permutations."""
    r = len(mat)
    out = ring.zero()
    for perm in itertools.permutations(range(r)):
        term = ring.one()
        for i, j in enumerate(perm):
            term = ring.mul(term, mat[i][j])
        if _perm_sign(perm) < 0:
            out = (out - term) % ring.q
        else:
            out = (out + term) % ring.q
    return out


def _perm_sign(perm) -> int:
    sign = 1
    for i in range(len(perm)):
        for j in range(i + 1, len(perm)):
            if perm[i] > perm[j]:
                sign = -sign
    return sign


def image_ideal_elements(mod: FPModule, r: int, x,
                         bound: int = RING_BOUND) -> set[tuple]:
    """All values of degree-r wedge functionals on the element ``x`` (given
    as r concatenated module vectors), closed under addition."""
    ring = mod.ring
    x = np.asarray(x, dtype=np.int64) % ring.q
    comps = [x[i * mod.amb:(i + 1) * mod.amb] for i in range(r)]
    funcs = dual_functionals(mod, bound)
    if r == 1:
        cond = np.vstack([ring.reg_matrix(comps[0][t * ring.n:(t + 1) * ring.n])
                          for t in range(mod.b)])
        vals = np.array(funcs, dtype=np.int64) @ cond % ring.q
        values = sorted({tuple(int(x) for x in v) for v in vals})
        return _closure(values, ring.q)
    if len(funcs) ** r > 20000:
        raise OracleBoundsError("wedge enumeration too large")
    values = []
    for combo in itertools.product(funcs, repeat=r):
        mat = [[_apply_functional(ring, f, c) for c in comps] for f in combo]
        values.append(perm_det(ring, mat))
    return _closure(values, ring.q)


# -- fitting minors --------------------------------------------------------------


def fitting_elements(mod: FPModule, j: int = 0,
                     bound: int = RING_BOUND) -> set[tuple]:
    """Elements of the j-th Fitting ideal with permutation-sum minors."""
    ring = mod.ring
    b = mod.b
    if j >= b:
        return ideal_elements(ring, [ring.one()], bound)
    size = b - j
    cols = mod._columns if mod._columns is not None else mod.minimal_columns()
    if len(cols) < size:
        return {tuple(np.zeros(ring.n, dtype=np.int64))}
    minors = []
    for rowsel in itertools.combinations(range(b), size):
        for colsel in itertools.combinations(range(len(cols)), size):
            sub = [[cols[c][r] for c in colsel] for r in rowsel]
            minors.append(perm_det(ring, sub))
    return ideal_elements(ring, minors, bound)


# -- stabilizers -------------------------------------------------------------------


def stabilizer_elements(ring: RingHandle, span: np.ndarray,
                        denominator: int = 0,
                        bound: int = RING_BOUND) -> set[tuple]:
    """All y with y . L contained in p^denominator . L, by membership tests
    on every enumerated ring element."""
    q, p = ring.q, ring.p
    target = linalg.howell(np.asarray(span) * p ** denominator % q, q, p)
    out = set()
    for y in ring_elements(ring, bound):
        if all(linalg.in_span(ring.mul(y, row), target, q, p)
               for row in span):
            out.add(tuple(y))
    return out


# -- stark families ----------------------------------------------------------------


def stark_enumerate(system, bound: int = 81 ** 2) -> dict:
    """All compatible families of a depth <= 1 system by exhaustion.

    Top-vertex coordinates are enumerated over coset representatives of
    each bidual; the bottom value is forced through every transition and
    all forcings must agree.  Returns the family count and the set of
    canonical coordinate vectors.
    """
    ring = system.ring
    q, p = ring.q, ring.p
    if system.depth > 1:
        raise OracleBoundsError("exhaustive solver only covers depth <= 1")
    tops = [k for k in system.keys if len(k) == 1]
    bottom = ()
    bot = system.nodes[bottom].bidual
    spaces = []
    total = 1
    for key in tops:
        reps = list(system.nodes[key].bidual.elements(bound))
        total *= len(reps)
        if total > bound:
            raise OracleBoundsError("family enumeration too large")
        spaces.append(reps)
    families = set()
    for combo in itertools.product(*spaces):
        images = []
        for key, vec in zip(tops, combo):
            t = system.transitions[(key, bottom)]
            images.append(vec @ t % q)
        base = bot.reduce(images[0]) if images else bot.zero_elem()
        if any(not np.array_equal(bot.reduce(img), base) for img in images[1:]):
            continue
        flat = []
        off = system._offsets()
        full = np.zeros(off["total"], dtype=np.int64)
        s, e = off[bottom]
        full[s:e] = base
        for key, vec in zip(tops, combo):
            s, e = off[key]
            full[s:e] = system.nodes[key].bidual.reduce(vec)
        families.add(tuple(int(v) for v in full))
    return {"count": len(families), "families": families}


def int_perm_det(mat: np.ndarray, q: int) -> int:
    """Integer determinant mod q as a signed permutation sum."""
    n = len(mat)
    total = 0
    for perm in itertools.permutations(range(n)):
        term = 1
        for i, j in enumerate(perm):
            term = term * int(mat[i][j]) % q
        total = (total + _perm_sign(perm) * term) % q
    return total % q


def principal_oracle(ring: RingHandle, span: np.ndarray,
                     bound: int = RING_BOUND) -> dict:
    """Search the whole lattice for a single generator, and certify it as a
    non-zero-divisor with a permutation-sum determinant."""
    q = ring.q
    elems = _closure(list(span), q)
    if len(elems) > bound:
        raise OracleBoundsError("lattice too large to enumerate")
    for y in sorted(elems):
        y = np.array(y, dtype=np.int64)
        if not y.any():
            continue
        if _closure(list(ring.reg_matrix(y)), q) == elems:
            nzd = int_perm_det(ring.reg_matrix(y), q) != 0
            return {"principal": True, "generator": y, "free": nzd}
    return {"principal": False, "generator": None, "free": False}
