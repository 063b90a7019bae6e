"""Seeded construction of synthetic Selmer instances.

Instances are built backwards from a global subspace W of the sum of the
local modules: the global module attached to an auxiliary label set is the
intersection of W with the finite condition at the labels left out, and the
dual-side global is the orthogonal complement of W intersected the same
way.  Because every global is cut out of a perfectly paired ambient sum,
the duality checks in the validator hold by construction, and the desired
structural features (a core vertex at a chosen depth, failure of the
cartesian property) are arranged through explicit coordinates and verified
before the instance is returned.

All randomness comes from ``random.Random(seed)``, so a (recipe, seed,
parameters) triple always produces byte-identical instances.
"""

from __future__ import annotations

import itertools
import random

import numpy as np

from . import linalg
from .modules import minimal_generators, present_abstract
from .rings import RingHandle, build_ring
from .selmer import (
    GlobalLevel,
    LocalPlace,
    SelmerInstance,
    Tier,
    _pi_ambient,
    cartesian_check,
    core_rank,
    core_vertex_search,
    validate_instance,
)


class GenerationError(RuntimeError):
    pass


class _Layout:
    """Flat indexing of the coefficient-ring lines of the local sum."""

    def __init__(self, core_ranks, aux_count):
        self.core = [f"v{i + 1}" for i in range(len(core_ranks))]
        self.aux = [f"q{i + 1}" for i in range(aux_count)]
        self.core_ranks = list(core_ranks)
        self.pos = {}
        k = 0
        for label, h in zip(self.core, self.core_ranks):
            for j in range(h):
                self.pos[(label, j)] = k
                k += 1
        for label in self.aux:
            for j in range(2):
                self.pos[(label, j)] = k
                k += 1
        self.total = k


def _psi_matrix(ring: RingHandle) -> np.ndarray:
    """Matrix of the perfect form (x, y) -> e-coefficient of x * iota(y)."""
    n = ring.n
    out = np.zeros((n, n), dtype=np.int64)
    for i in range(n):
        bi = np.zeros(n, dtype=np.int64)
        bi[i] = 1
        for j in range(n):
            bj = np.zeros(n, dtype=np.int64)
            bj[j] = 1
            out[i, j] = ring.mul(bi, ring.involution(bj))[0]
    return out


def _core_pairing(ring: RingHandle, rank: int) -> np.ndarray:
    psi = _psi_matrix(ring)
    n = ring.n
    out = np.zeros((rank * n, rank * n), dtype=np.int64)
    for j in range(rank):
        out[j * n : (j + 1) * n, j * n : (j + 1) * n] = psi
    return out


def _aux_pairing(ring: RingHandle) -> np.ndarray:
    psi = _psi_matrix(ring)
    n = ring.n
    out = np.zeros((2 * n, 2 * n), dtype=np.int64)
    out[:n, n:] = psi
    out[n:, :n] = (-psi) % ring.q
    return out


def _line_span(ring: RingHandle, rank: int, position: int,
               scalar=None) -> np.ndarray:
    """Additive span of R * (scalar . e_position) inside R^rank."""
    n = ring.n
    if scalar is None:
        scalar = ring.one()
    rows = []
    for i in range(n):
        bi = np.zeros(n, dtype=np.int64)
        bi[i] = 1
        row = np.zeros(rank * n, dtype=np.int64)
        row[position * n : (position + 1) * n] = ring.mul(bi, scalar)
        rows.append(row)
    return linalg.howell(np.array(rows, dtype=np.int64), ring.q, ring.p)


def _int_vec_rows(ring: RingHandle, vec: np.ndarray, total: int) -> np.ndarray:
    """Additive span rows of R * w for an integer coefficient vector w."""
    n = ring.n
    rows = np.zeros((n, total * n), dtype=np.int64)
    for k, c in enumerate(vec):
        c = int(c) % ring.q
        if c:
            for i in range(n):
                rows[i, k * n + i] = c
    return rows


class _Blueprint:
    """Integer-level description shared by all three coefficient tiers."""

    def __init__(self, layout: _Layout, cond_ranks, w_gens, aux_units,
                 twisted=None):
        self.layout = layout
        self.cond_ranks = list(cond_ranks)
        self.w_gens = [np.asarray(g, dtype=np.int64) for g in w_gens]
        self.aux_units = dict(aux_units)
        # twisted: core label -> (position j, kind); the level-m and level-one
        # condition at that place is (g-1) times the line, the residue-level
        # condition is empty
        self.twisted = twisted or {}


def _build_tier(ring: RingHandle, bp: _Blueprint, depth: int) -> Tier:
    lay = bp.layout
    q, p, n = ring.q, ring.p, ring.n
    residue_level = not ring.group
    local = {}
    for label, h, a in zip(lay.core, lay.core_ranks, bp.cond_ranks):
        amb = h * n
        cond_rows = []
        for j in range(a):
            if label in bp.twisted and bp.twisted[label][0] == j:
                if residue_level:
                    continue
                g = ring.group_elem(tuple(
                    1 if i == 0 else 0 for i in range(len(ring.full_factors))
                ))
                scalar = (g - ring.one()) % q
            else:
                scalar = None
            cond_rows.append(_line_span(ring, h, j, scalar))
        cond = (np.vstack(cond_rows) if cond_rows
                else np.zeros((0, amb), dtype=np.int64))
        local[label] = LocalPlace(ring, label, "core", h, cond,
                                  _core_pairing(ring, h))
    for label in lay.aux:
        f_span = _line_span(ring, 2, 0)
        tr_proj = np.zeros((2 * n, n), dtype=np.int64)
        tr_proj[n:, :] = np.eye(n, dtype=np.int64)
        phi_fs = ring.from_int(bp.aux_units[label])
        local[label] = LocalPlace(ring, label, "aux", 2, f_span,
                                  _aux_pairing(ring), dual_cond=f_span,
                                  f_span=f_span, tr_proj=tr_proj,
                                  phi_fs=phi_fs)
    tier = Tier(ring, lay.core, lay.aux, local, {})
    # W and its orthogonal complement inside the local sum
    w_rows = linalg.howell(
        np.vstack([_int_vec_rows(ring, g, lay.total) for g in bp.w_gens]),
        q, p,
    )
    pairing = tier.pairing_matrix()
    wd_rows = linalg.kernel_left((w_rows @ pairing % q).T, q, p)
    amb = _pi_ambient(tier)
    for size in range(depth + 1):
        for key in itertools.combinations(lay.aux, size):
            # everything at the core places and the key, the finite line at
            # the remaining auxiliary labels
            pieces = []
            for v in lay.core:
                sl = tier.offsets[v]
                block = np.zeros((sl[1] - sl[0], tier.pi_dim), dtype=np.int64)
                block[:, sl[0]:sl[1]] = np.eye(sl[1] - sl[0], dtype=np.int64)
                pieces.append(block)
            for ql in lay.aux:
                sl = tier.offsets[ql]
                if ql in key:
                    block = np.zeros((sl[1] - sl[0], tier.pi_dim), dtype=np.int64)
                    block[:, sl[0]:sl[1]] = np.eye(sl[1] - sl[0], dtype=np.int64)
                else:
                    fs = local[ql].f_span
                    block = np.zeros((fs.shape[0], tier.pi_dim), dtype=np.int64)
                    block[:, sl[0]:sl[1]] = fs
                pieces.append(block)
            cf = linalg.howell(np.vstack(pieces), q, p)
            for side, base in (("primal", w_rows), ("dual", wd_rows)):
                span = linalg.span_intersection(base, cf, q, p)
                gens = minimal_generators(ring, tier.pi_dim, list(span),
                                          action_mats=amb.action_mats)
                module, phi = present_abstract(amb, gens)
                tier.glob[(side, key)] = GlobalLevel(module, phi)
    return tier


def _norm_maps(ring_res: RingHandle, ring_one: RingHandle,
               lay: _Layout) -> dict:
    nu = ring_one.norm_element()
    out = {}
    for label, h in zip(lay.core, lay.core_ranks):
        mat = np.zeros((h * ring_res.n, h * ring_one.n), dtype=np.int64)
        for j in range(h):
            for i in range(ring_res.n):
                bi = np.zeros(ring_one.n, dtype=np.int64)
                bi[ring_one.basis_index(i, tuple(0 for _ in ring_one.full_factors))] = 1
                mat[j * ring_res.n + i,
                    j * ring_one.n : (j + 1) * ring_one.n] = ring_one.mul(bi, nu)
        out[label] = mat
    return out


def _blueprint(recipe: str, rng: random.Random, p: int, core_ranks,
               cond_ranks, chi0: int, delta: int, aux_count: int) -> _Blueprint:
    lay = _Layout(core_ranks, aux_count)
    f_positions = [lay.pos[(v, j)] for v, a in zip(lay.core, cond_ranks)
                   for j in range(a)]
    d_positions = [lay.pos[(v, j)]
                   for v, h, a in zip(lay.core, core_ranks, cond_ranks)
                   for j in range(a, h)]
    if chi0 > len(f_positions):
        raise GenerationError("not enough condition lines for the base rank")
    if delta > len(d_positions):
        raise GenerationError("not enough complement lines for the defect")
    if delta > aux_count:
        raise GenerationError("defect larger than the auxiliary set")
    gens = []
    for k in range(chi0):
        g = np.zeros(lay.total, dtype=np.int64)
        g[f_positions[k]] = 1
        gens.append(g)
    missing = d_positions[:delta]
    for pos in d_positions[delta:]:
        g = np.zeros(lay.total, dtype=np.int64)
        g[pos] = 1
        gens.append(g)
    for i, label in enumerate(lay.aux):
        g = np.zeros(lay.total, dtype=np.int64)
        g[lay.pos[(label, 1)]] = 1
        if i < delta:
            g[missing[i]] = 1
        elif chi0:
            g[f_positions[rng.randrange(chi0)]] = rng.randrange(p)
        for other in lay.aux:
            if other != label:
                g[lay.pos[(other, 0)]] = rng.randrange(p)
        gens.append(g)
    units = {label: rng.randrange(1, p) for label in lay.aux}
    twisted = {}
    if recipe == "non-cartesian":
        twisted[lay.core[0]] = (0, "augmentation-twist")
    return _Blueprint(lay, cond_ranks, gens, units, twisted)


def generate_instance(recipe: str, seed: int, p: int = 3, m: int = 2,
                      f: int = 1, group=(3,), core_ranks=(1, 1),
                      cond_ranks=None, chi0: int = 1, delta: int = 0,
                      aux_count: int = 2, depth: int | None = None,
                      verify: bool = True) -> SelmerInstance:
    """Build a Selmer instance from one of the named recipes.

    ``cartesian``: every auxiliary subset up to the depth is a core vertex.
    ``core-vertex-depth``: the minimal core vertex uses the first ``delta``
    auxiliary labels.  ``non-cartesian``: a twisted condition at the first
    core place breaks the cartesian property and no core vertex exists
    within the depth.
    """
    if recipe not in ("cartesian", "core-vertex-depth", "non-cartesian"):
        raise GenerationError(f"unknown recipe {recipe!r}")
    if recipe == "cartesian":
        delta = 0
    if recipe == "core-vertex-depth" and delta < 1:
        delta = 1
    if cond_ranks is None:
        cond_ranks = tuple(core_ranks)
    if depth is None:
        depth = max(delta, min(2, aux_count))
    if depth < delta:
        raise GenerationError("depth smaller than the defect")
    rng = random.Random((seed, recipe, p, m, f, tuple(group), tuple(core_ranks),
                         tuple(cond_ranks), chi0, delta, aux_count).__repr__())
    bp = _blueprint(recipe, rng, p, core_ranks, cond_ranks, chi0, delta,
                    aux_count)
    ring_m = build_ring(p, m, f, tuple(group))
    ring_1 = ring_m.at_precision(1)
    ring_res = build_ring(p, 1, f, ())
    tier_m = _build_tier(ring_m, bp, depth)
    tier_1 = _build_tier(ring_1, bp, depth)
    tier_res = _build_tier(ring_res, bp, depth)
    norm_local = _norm_maps(ring_res, ring_1, bp.layout)
    meta = {
        "recipe": recipe,
        "seed": seed,
        "depth": depth,
        "params": {
            "p": p, "m": m, "f": f, "group": list(group),
            "core_ranks": list(core_ranks), "cond_ranks": list(cond_ranks),
            "chi0": chi0, "delta": delta, "aux_count": aux_count,
        },
        # the twisted recipe drops one residue-level condition line
        "declared_core_rank": chi0 - delta - (1 if recipe == "non-cartesian" else 0),
        "cartesian": recipe != "non-cartesian",
        "hypotheses": {
            "finite-local-modules": True,
            "perfect-balanced-pairings": True,
            "self-dual-shape": True,
            "auxiliary-split-structure": True,
            "residual-multiplicity-free": recipe != "non-cartesian",
        },
        "local_h0_orders": {label: 0 for label in bp.layout.core + bp.layout.aux},
    }
    inst = SelmerInstance(
        {"m": tier_m, "one": tier_1, "res": tier_res}, norm_local, meta
    )
    if verify:
        _verify_generated(inst, recipe, delta)
    return inst


def _verify_generated(inst: SelmerInstance, recipe: str, delta: int) -> None:
    checks = validate_instance(inst)
    if not checks["ok"]:
        bad = [k for k, v in checks.items() if not v]
        raise GenerationError(f"generated instance fails validation: {bad}")
    cart = cartesian_check(inst)["cartesian"]
    if cart != (recipe != "non-cartesian"):
        raise GenerationError("cartesian property does not match the recipe")
    chi = core_rank(inst)
    if chi["matches_declared"] is False:
        raise GenerationError("core rank does not match the declared value")
    search = core_vertex_search(inst)
    if recipe == "non-cartesian":
        if search["found"]:
            raise GenerationError("unexpected core vertex in a twisted instance")
    else:
        if not search["found"]:
            raise GenerationError("no core vertex found within the depth")
        depth_found = search["core_vertices"][0]["nu"]
        if depth_found != delta:
            raise GenerationError(
                f"minimal core vertex at depth {depth_found}, expected {delta}"
            )


# -- determinant-lattice instances --------------------------------------------


def _random_elem(ring: RingHandle, rng: random.Random) -> np.ndarray:
    return np.array([rng.randrange(ring.q) for _ in range(ring.n)],
                    dtype=np.int64)


def _random_unit(ring: RingHandle, rng: random.Random) -> np.ndarray:
    while True:
        x = _random_elem(ring, rng)
        if ring.is_unit(x):
            return x


def generate_etnc(seed: int, p: int = 3, m: int = 2, f: int = 1,
                  group=(3,), r: int = 1, h: int | None = None,
                  h2_vals=None, verify: bool = True):
    """Seeded determinant-lattice instance whose product identity holds.

    The integral lattice and the finite-part presentation are upper
    triangular with p-power-times-unit diagonals, which keeps every
    determinant invertible in the fraction field while allowing nontrivial
    finite parts and off-diagonal mixing.
    """
    from .lattice import EtncInstance, ScaledElem, bk_image_check

    rng = random.Random(repr(("etnc-basic", seed, p, m, f, tuple(group), r)))
    if h is None:
        h = 3 * r + 3
    ring_m = build_ring(p, m, f, tuple(group))
    rw = ring_m.at_precision(m + h)
    if h2_vals is None:
        total = rng.randrange(0, m)
        h2_vals = [0] * r
        for _ in range(total):
            h2_vals[rng.randrange(r)] += 1
    lattice_mat = [[rw.zero() for _ in range(r)] for _ in range(r)]
    h2_mat = [[rw.zero() for _ in range(r)] for _ in range(r)]
    lam = [[ScaledElem(rw, rw.zero()) for _ in range(r)] for _ in range(r)]
    for i in range(r):
        va = rng.randrange(0, 2)
        lattice_mat[i][i] = rw.mul(_random_unit(rw, rng),
                                   rw.from_int(p ** va))
        h2_mat[i][i] = rw.mul(_random_unit(rw, rng),
                              rw.from_int(p ** h2_vals[i]))
        lam[i][i] = ScaledElem(rw, _random_unit(rw, rng),
                               rng.randrange(0, 2))
        for j in range(i + 1, r):
            lattice_mat[i][j] = _random_elem(rw, rng)
            h2_mat[i][j] = _random_elem(rw, rng)
            lam[i][j] = ScaledElem(rw, _random_elem(rw, rng),
                                   rng.randrange(0, 2))
    lstar = ScaledElem(rw, _random_unit(rw, rng), rng.randrange(0, 2))
    inst = EtncInstance(ring_m, h, r, lattice_mat, h2_mat, lam, lstar)
    if verify:
        report = bk_image_check(inst)
        if not report["verdict"]:
            raise GenerationError("generated instance fails the product identity")
    return inst


def generate_tower(seed: int, p: int = 3, m: int = 2, f: int = 1,
                   group=(9,), quotient=(3,)) -> dict:
    """Seeded group-ring tower: a module over the big group ring, the
    quotient ring, and an element for image-ideal codescent."""
    rng = random.Random(repr(("tower", seed, p, m, f, tuple(group),
                              tuple(quotient))))
    big = build_ring(p, m, f, tuple(group))
    small = build_ring(p, m, f, tuple(quotient))
    from .modules import present_module

    ngens = rng.randrange(1, 3)
    ncols = rng.randrange(1, 3)
    columns = []
    for _ in range(ncols):
        col = []
        for _ in range(ngens):
            kind = rng.randrange(3)
            if kind == 0:
                col.append(rw_mul_radical(big, rng))
            elif kind == 1:
                col.append(big.from_int(p * rng.randrange(1, p)))
            else:
                col.append(big.zero())
        columns.append(col)
    mod = present_module(big, ngens, columns)
    elem = np.concatenate([_random_elem(big, rng) for _ in range(ngens)])
    return {"module": mod, "quotient_ring": small, "element": elem,
            "big_ring": big}


def rw_mul_radical(ring: RingHandle, rng: random.Random) -> np.ndarray:
    """Random element of the radical (p, g - 1) of the group ring."""
    expo = [rng.randrange(d) for d in ring.full_factors]
    gm1 = (ring.group_elem(expo) - ring.one()) % ring.q
    out = ring.mul(gm1, _random_elem(ring, rng))
    out = (out + ring.from_int(ring.p) * rng.randrange(ring.p)) % ring.q
    return out
