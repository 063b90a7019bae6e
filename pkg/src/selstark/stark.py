"""Compatible systems of exterior-power bidual classes.

For each auxiliary label set the instance provides a Selmer module; the
system lives in the exterior-power biduals of those modules, with the
degree growing by one for every auxiliary label.  Moving one label down
contracts against the transverse functional at that label.  Solving for
all compatible families is one finite linear problem, and the resulting
module is compared against the Fitting ideals of the dual Selmer module.
"""

from __future__ import annotations

import itertools

import numpy as np

from . import linalg
from .modules import (
    AmbientModule,
    DualData,
    FPModule,
    _det,
    dualize,
    exterior_power,
    fitting_ideal,
    minimal_generators,
    present_abstract,
    pullback,
)
from .rings import IdealCanon, RingHandle
from .selmer import SelmerComputation, SelmerInstance, selmer_module


class StarkError(ArithmeticError):
    pass


class _Node:
    """Everything attached to one auxiliary label set."""

    def __init__(self, key: tuple, sel: SelmerComputation, degree: int):
        self.key = key
        self.sel = sel
        self.degree = degree
        self.dual = dualize(sel.module, "linear")
        self.ext = exterior_power(self.dual.module, degree)
        self.outer = dualize(self.ext, "linear")

    @property
    def bidual(self) -> FPModule:
        return self.outer.module


def _functional_to_dual_coords(dual: DualData, vec: np.ndarray) -> np.ndarray:
    """Presentation coordinates in the dual module of an explicit functional
    vector on the parent."""
    pre = pullback(dual.phi, dual.amb, vec % dual.parent.ring.q)
    if pre is None:
        raise StarkError("functional is not in the presented dual")
    return pre


def _wedge_coords(ring: RingHandle, dual_mod: FPModule,
                  factors: list[np.ndarray]) -> np.ndarray:
    """Coordinates in the exterior power of the wedge of dual-module
    elements given in presentation coordinates."""
    r = len(factors)
    b = dual_mod.b
    n = ring.n
    coords = [[np.asarray(f[t * n : (t + 1) * n]) for t in range(b)]
              for f in factors]
    subsets = list(itertools.combinations(range(b), r))
    out = np.zeros(len(subsets) * n, dtype=np.int64)
    for si, s in enumerate(subsets):
        sub = [[coords[i][t] for t in s] for i in range(r)]
        out[si * n : (si + 1) * n] = _det(ring, sub)
    return out


def _eval_ext_functional(ring: RingHandle, func_amb: np.ndarray,
                         wedge: np.ndarray) -> np.ndarray:
    """Value of a functional on the exterior power (ambient vector of
    R-chunks) at an element in exterior-power coordinates."""
    n = ring.n
    out = ring.zero()
    for t in range(len(func_amb) // n):
        out = ring.add(out, ring.mul(func_amb[t * n : (t + 1) * n],
                                     wedge[t * n : (t + 1) * n]))
    return out


class StarkSystem:
    def __init__(self, inst: SelmerInstance, rank: int, depth: int | None = None):
        self.inst = inst
        self.rank = int(rank)
        tier = inst.tiers["m"]
        self.ring = tier.ring
        self.depth = inst.depth if depth is None else int(depth)
        self.keys = []
        self.nodes = {}
        for size in range(self.depth + 1):
            for key in itertools.combinations(tier.aux, size):
                sel = selmer_module(inst, "m", "primal", relax=key)
                node = _Node(tuple(sorted(key)), sel, self.rank + size)
                self.keys.append(node.key)
                self.nodes[node.key] = node
        self.transitions = {}
        for key in self.keys:
            for q in tier.aux:
                if q in key:
                    continue
                big = tuple(sorted(key + (q,)))
                if big not in self.nodes:
                    continue
                self.transitions[(big, key)] = self._transition(big, key, q)

    # -- structural maps --------------------------------------------------

    def _inclusion(self, small: tuple, big: tuple) -> np.ndarray:
        """Selmer presentation coordinates of the smaller module inside the
        larger one (matrix on presentation coordinates)."""
        src = self.nodes[small].sel
        dst = self.nodes[big].sel
        q, p = self.ring.q, self.ring.p
        rows = []
        for i in range(src.module.amb):
            basis = np.zeros(src.module.amb, dtype=np.int64)
            basis[i] = 1
            w = src.to_pi(basis)
            v = linalg.solve_left(dst.glob.phi, w, q, p)
            if v is None:
                raise StarkError("global modules are not nested")
            sol = linalg.solve_left(
                np.vstack([dst.psi, dst.glob.module.span]), v, q, p
            )
            if sol is None:
                raise StarkError("inclusion leaves the larger Selmer module")
            rows.append(sol[: dst.module.amb] % q)
        if not rows:
            return np.zeros((0, dst.module.amb), dtype=np.int64)
        return np.array(rows, dtype=np.int64)

    def _transverse_functional(self, key: tuple, q_label: str) -> np.ndarray:
        """Ambient functional vector on the Selmer module at ``key`` given by
        the transverse coordinate at ``q_label``, normalized by the
        comparison unit."""
        node = self.nodes[key]
        tier = self.inst.tiers["m"]
        place = tier.local[q_label]
        u_inv = self.ring.inverse(place.phi_fs)
        sel = node.sel
        out = np.zeros(sel.module.amb, dtype=np.int64)
        n = self.ring.n
        for t in range(sel.module.b):
            basis = np.zeros(sel.module.amb, dtype=np.int64)
            basis[t * n] = 1
            locq = sel.to_pi(basis)[tier.block(q_label)]
            coord = locq @ place.tr_proj % self.ring.q
            out[t * n : (t + 1) * n] = self.ring.mul(u_inv, coord)
        return out

    def _restriction_matrix(self, incl: np.ndarray, small: tuple,
                            big: tuple) -> np.ndarray:
        """Matrix carrying functional vectors on the larger Selmer module to
        their restrictions along the inclusion."""
        src = self.nodes[small].sel.module
        dst = self.nodes[big].sel.module
        ring = self.ring
        n = ring.n
        out = np.zeros((dst.amb, src.amb), dtype=np.int64)
        for t in range(dst.b):
            for i in range(n):
                bi = np.zeros(n, dtype=np.int64)
                bi[i] = 1
                col = np.zeros(src.amb, dtype=np.int64)
                for s in range(src.b):
                    basis = np.zeros(src.amb, dtype=np.int64)
                    basis[s * n] = 1
                    c = (basis @ incl % ring.q)[t * n : (t + 1) * n]
                    col[s * n : (s + 1) * n] = ring.mul(bi, c)
                out[t * n + i] = col
        return out

    def _transition(self, big: tuple, small: tuple, q_label: str) -> np.ndarray:
        """Contraction matrix from the bidual at ``big`` to the bidual at
        ``small``; the transverse functional is wedged in first."""
        ring = self.ring
        q, p = ring.q, ring.p
        node_b = self.nodes[big]
        node_s = self.nodes[small]
        incl = self._inclusion(small, big)
        rmat = self._restriction_matrix(incl, small, big)
        theta = _functional_to_dual_coords(
            node_b.dual, self._transverse_functional(big, q_label)
        )
        # extend every dual generator of the small node to a functional on
        # the big node, solving inside the presented dual so the extension
        # is an actual functional
        extended = []
        restricted_duals = node_b.dual.phi @ rmat % q
        for g in node_s.dual.gens:
            sol = linalg.solve_left(restricted_duals, np.asarray(g) % q, q, p)
            if sol is None:
                raise StarkError("functional does not extend; the coefficient "
                                 "ring is not self-injective here")
            extended.append(sol % q)
        a = node_s.degree
        subsets_small = list(itertools.combinations(range(node_s.dual.module.b), a))
        n = ring.n
        # the transverse functional is wedged in first; the position sign
        # makes the two contraction paths around a square agree
        sign = (-1) ** big.index(q_label)
        rows = []
        for i in range(node_b.bidual.amb):
            basis = np.zeros(node_b.bidual.amb, dtype=np.int64)
            basis[i] = 1
            func = basis @ node_b.outer.phi % q
            target = np.zeros(node_s.ext.b * n, dtype=np.int64)
            for ti, tset in enumerate(subsets_small):
                factors = [theta] + [extended[t] for t in tset]
                wedge = _wedge_coords(ring, node_b.dual.module, factors)
                target[ti * n : (ti + 1) * n] = (
                    sign * _eval_ext_functional(ring, func, wedge) % q
                )
            pre = pullback(node_s.outer.phi, node_s.outer.amb, target)
            if pre is None:
                raise StarkError("contracted functional leaves the bidual")
            rows.append(node_s.bidual.reduce(pre))
        if not rows:
            return np.zeros((0, node_s.bidual.amb), dtype=np.int64)
        return np.array(rows, dtype=np.int64)

    # -- solving ----------------------------------------------------------

    def _offsets(self) -> dict:
        out = {}
        start = 0
        for key in self.keys:
            amb = self.nodes[key].bidual.amb
            out[key] = (start, start + amb)
            start += amb
        out["total"] = start
        return out

    def solve(self) -> dict:
        """All compatible families, as a presented module plus a minimal
        generating set of coordinate vectors."""
        ring = self.ring
        q, p = ring.q, ring.p
        off = self._offsets()
        total = off["total"]
        pairs = sorted(self.transitions)
        ncols = sum(self.nodes[small].bidual.amb for (_, small) in pairs)
        a = np.zeros((total, ncols), dtype=np.int64)
        rhs_rows = []
        col = 0
        for (big, small) in pairs:
            amb_s = self.nodes[small].bidual.amb
            sb, eb = off[big]
            ss, es = off[small]
            a[sb:eb, col : col + amb_s] = self.transitions[(big, small)]
            a[ss:es, col : col + amb_s] -= np.eye(amb_s, dtype=np.int64)
            span = self.nodes[small].bidual.span
            if span.shape[0]:
                block = np.zeros((span.shape[0], ncols), dtype=np.int64)
                block[:, col : col + amb_s] = span
                rhs_rows.append(block)
            col += amb_s
        a %= q
        rhs = (np.vstack(rhs_rows) if rhs_rows
               else np.zeros((0, ncols), dtype=np.int64))
        sol_span = linalg.preimage_span(a, rhs, q, p)
        # present the solution module modulo the componentwise relations
        rel_rows = []
        for key in self.keys:
            span = self.nodes[key].bidual.span
            if span.shape[0]:
                block = np.zeros((span.shape[0], total), dtype=np.int64)
                s, e = off[key]
                block[:, s:e] = span
                rel_rows.append(block)
        rel = (np.vstack(rel_rows) if rel_rows
               else np.zeros((0, total), dtype=np.int64))
        mats = []
        for i in range(ring.n):
            basis = np.zeros(ring.n, dtype=np.int64)
            basis[i] = 1
            block = np.zeros((total, total), dtype=np.int64)
            for key in self.keys:
                s, e = off[key]
                block[s:e, s:e] = self.nodes[key].bidual.act_matrix(basis)
            mats.append(block)
        amb = AmbientModule(ring, total, mats, rel_span=rel)
        gens = minimal_generators(ring, total, list(sol_span),
                                  action_mats=mats, rel=rel)
        module, phi = present_abstract(amb, gens)
        return {
            "module": module,
            "generators": gens,
            "offsets": off,
            "free_rank_one": module.is_free() and module.free_rank() == 1,
            "log_size": module.log_size(),
        }

    def split_family(self, family_vec: np.ndarray) -> dict:
        off = self._offsets()
        return {key: np.asarray(family_vec)[slice(*off[key])]
                for key in self.keys}

    def ij_invariant(self, family_vec: np.ndarray, j: int) -> IdealCanon:
        """Ideal of all values of the degree-(rank + j) components of the
        family on the wedge generators."""
        ring = self.ring
        parts = self.split_family(family_vec)
        gens = []
        n = ring.n
        for key in self.keys:
            if len(key) != j:
                continue
            node = self.nodes[key]
            func = parts[key] @ node.outer.phi % ring.q
            for t in range(len(func) // n):
                gens.append(func[t * n : (t + 1) * n])
        return IdealCanon(ring, gens)


def stark_solve(inst: SelmerInstance, rank: int | None = None,
                depth: int | None = None) -> tuple[StarkSystem, dict]:
    if rank is None:
        from .selmer import core_rank

        rank = core_rank(inst)["core_rank"]
    if rank < 0:
        raise StarkError("negative rank")
    system = StarkSystem(inst, rank, depth)
    return system, system.solve()


def stark_fitting_report(inst: SelmerInstance, rank: int | None = None,
                         depth: int | None = None) -> dict:
    """Solve the system and compare the value ideals of a generating family
    with the Fitting ideals of the dual of the dual Selmer module."""
    system, sol = stark_solve(inst, rank, depth)
    report = {
        "rank": system.rank,
        "depth": system.depth,
        "free_rank_one": sol["free_rank_one"],
        "log_size": sol["log_size"],
    }
    dual_sel = selmer_module(inst, "m", "dual")
    codual = dualize(dual_sel.module, "pontryagin").module
    comparisons = []
    if sol["generators"]:
        eps = sol["generators"][0]
        for j in range(system.depth + 1):
            ij = system.ij_invariant(eps, j)
            fitt = fitting_ideal(codual, j)
            comparisons.append({
                "j": j,
                "contained": ij <= fitt,
                "equal": ij == fitt,
                "value_log": ij.log_size(),
                "fitting_log": fitt.log_size(),
            })
    report["comparisons"] = comparisons
    report["all_equal"] = all(c["equal"] for c in comparisons) if comparisons else None
    return report
