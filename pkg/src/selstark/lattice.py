"""Determinant-lattice arithmetic at tracked fixed-point precision.

Fractional quantities are represented as ring elements at an internal
precision m + h together with a valuation offset e, standing for p^(-e)
times the element.  Lattices carry a Howell-canonical span and an offset;
all comparisons clear denominators to a common offset first and are exact
at the declared working precision.  No floating point is involved anywhere.

The instance model keeps a free rank-r lattice inside an ambient free
module, a finite second-cohomology module with a square presentation, a
trivialization matrix and a unit leading term; the image of the normalized
element and the determinant lattice are computed from those and the
product identity im(eta) . Xi = Fitt^0(H2) is checked exactly.
"""

from __future__ import annotations

import itertools

import numpy as np

from . import linalg
from .modules import (
    FPModule,
    _det,
    base_change,
    bidual_and_image,
    elem_base_change,
    fitting_ideal,
    minimal_generators,
    present_module,
)
from .rings import IdealCanon, RingHandle


class PrecisionError(ArithmeticError):
    """Raised when a verdict would need more headroom than was declared."""


class ScaledElem:
    """p^(-offset) times a ring element held at internal precision."""

    def __init__(self, ring: RingHandle, vec, offset: int = 0):
        self.ring = ring
        vec = np.asarray(vec, dtype=np.int64) % ring.q
        offset = int(offset)
        while offset < 0:
            vec = vec * ring.p % ring.q
            offset += 1
        self.vec = vec
        self.offset = offset

    def __mul__(self, other: "ScaledElem") -> "ScaledElem":
        return ScaledElem(self.ring, self.ring.mul(self.vec, other.vec),
                          self.offset + other.offset)

    def scale_ring(self, x) -> "ScaledElem":
        return ScaledElem(self.ring, self.ring.mul(self.vec, x), self.offset)

    def p_shift(self, k: int) -> "ScaledElem":
        """Multiply by p^k (k may be negative)."""
        return ScaledElem(self.ring, self.vec, self.offset - k)

    def unit_part(self) -> tuple[int, np.ndarray]:
        """Decompose the ring part as p^v times a unit.

        Raises PrecisionError when the ring part is not of that shape (such
        elements are zero divisors that no headroom can invert).
        """
        ring = self.ring
        vec = self.vec.copy()
        if not vec.any():
            raise PrecisionError("zero element has no unit part")
        v = 0
        while (vec % ring.p == 0).all():
            vec //= ring.p
            v += 1
        if not ring.is_unit(vec):
            raise PrecisionError("element is not a p-power times a unit")
        return v, vec

    def invert(self) -> "ScaledElem":
        v, u = self.unit_part()
        return ScaledElem(self.ring, self.ring.inverse(u), v - self.offset)

    def __truediv__(self, other: "ScaledElem") -> "ScaledElem":
        return self * other.invert()

    def eq_at_precision(self, other: "ScaledElem", m: int) -> bool:
        ring = self.ring
        e = max(self.offset, other.offset)
        qq = ring.p ** (m + e)
        if qq > ring.q:
            raise PrecisionError("offsets exceed the declared headroom")
        a = self.vec * ring.p ** (e - self.offset) % qq
        b = other.vec * ring.p ** (e - other.offset) % qq
        return np.array_equal(a, b)

    def __repr__(self):
        return f"ScaledElem({list(self.vec)}, p^-{self.offset})"


def scaled_det(ring: RingHandle, mat: list[list[ScaledElem]]) -> ScaledElem:
    """Determinant of a matrix of scaled elements, offsets cleared first."""
    r = len(mat)
    if r == 0:
        return ScaledElem(ring, ring.one(), 0)
    e = max(x.offset for row in mat for x in row)
    cleared = [[x.vec * ring.p ** (e - x.offset) % ring.q for x in row]
               for row in mat]
    return ScaledElem(ring, _det(ring, cleared), r * e)


def scaled_matrix(ring: RingHandle, entries, offset: int = 0):
    """Wrap a square matrix of plain ring elements as scaled elements."""
    return [[ScaledElem(ring, x, offset) for x in row] for row in entries]


class FractionalLattice:
    """p^(-offset) times an integral lattice given by a Howell span.

    The epsilon tag names the idempotent component the lattice lives on;
    the arithmetic itself happens after projection, so operations require
    matching tags.
    """

    def __init__(self, ring: RingHandle, span, offset: int = 0,
                 epsilon: str = "full"):
        self.ring = ring
        self.span = linalg.howell(linalg.as_matrix(span, ring.n),
                                  ring.q, ring.p)
        self.offset = int(offset)
        self.epsilon = epsilon

    @classmethod
    def from_scaled(cls, ring: RingHandle, gens: list[ScaledElem],
                    epsilon: str = "full") -> "FractionalLattice":
        if not gens:
            return cls(ring, np.zeros((0, ring.n), dtype=np.int64), 0, epsilon)
        e = max(g.offset for g in gens)
        rows = [ring.reg_matrix(g.vec * ring.p ** (e - g.offset) % ring.q)
                for g in gens]
        return cls(ring, np.vstack(rows), e, epsilon)

    def mul_lattice(self, other: "FractionalLattice") -> "FractionalLattice":
        self._check(other)
        ring = self.ring
        rows = [ring.mul(a, b) for a in self.span for b in other.span]
        mat = np.array(rows, dtype=np.int64) if rows else \
            np.zeros((0, ring.n), dtype=np.int64)
        return FractionalLattice(ring, mat, self.offset + other.offset,
                                 self.epsilon)

    def scale(self, x: ScaledElem) -> "FractionalLattice":
        rows = [self.ring.mul(x.vec, row) for row in self.span]
        mat = np.array(rows, dtype=np.int64) if rows else \
            np.zeros((0, self.ring.n), dtype=np.int64)
        return FractionalLattice(self.ring, mat, self.offset + x.offset,
                                 self.epsilon)

    def eq_at_precision(self, other: "FractionalLattice", m: int) -> bool:
        self._check(other)
        ring = self.ring
        e = max(self.offset, other.offset)
        qq = ring.p ** (m + e)
        if qq > ring.q:
            raise PrecisionError("offsets exceed the declared headroom")
        a = linalg.howell(self.span * ring.p ** (e - self.offset) % qq,
                          qq, ring.p)
        b = linalg.howell(other.span * ring.p ** (e - other.offset) % qq,
                          qq, ring.p)
        return np.array_equal(a, b)

    def _check(self, other: "FractionalLattice"):
        if other.ring != self.ring or other.epsilon != self.epsilon:
            raise ValueError("lattice operation across different components")

    def __repr__(self):
        return (f"FractionalLattice(p^-{self.offset}, "
                f"{self.span.shape[0]} rows, eps={self.epsilon})")


def integral_lattice(ring: RingHandle, epsilon: str = "full") -> FractionalLattice:
    return FractionalLattice(ring, np.eye(ring.n, dtype=np.int64), 0, epsilon)


def ideal_lattice(ideal: IdealCanon, ring_w: RingHandle,
                  epsilon: str = "full") -> FractionalLattice:
    """Lift an ideal to the working-precision ring.

    The lift of the canonical span is ambiguous modulo p^m times the ring,
    which is invisible at any comparison precision up to m.
    """
    rows = [ring_w.reg_matrix(np.asarray(row, dtype=np.int64))
            for row in ideal.matrix]
    mat = np.vstack(rows) if rows else np.zeros((0, ring_w.n), dtype=np.int64)
    return FractionalLattice(ring_w, mat, 0, epsilon)


# -- instances ----------------------------------------------------------------


class EtncInstance:
    """Shadow model of a determinant-lattice problem.

    ``lattice_mat`` (rows = basis of the integral rank-r lattice inside the
    ambient free module) and ``h2_mat`` (square relation matrix of the
    finite second-cohomology module) are nested lists of ring elements over
    the working-precision ring; ``lambda_mat`` is the trivialization and
    ``lstar`` the unit leading term.
    """

    def __init__(self, ring_m: RingHandle, h: int, r: int, lattice_mat,
                 h2_mat, lambda_mat, lstar: ScaledElem,
                 epsilon: str = "full", tower=None):
        self.ring_m = ring_m
        self.h = int(h)
        self.ring_w = ring_m.at_precision(ring_m.m + self.h)
        self.r = int(r)
        self.lattice_mat = [[np.asarray(x, dtype=np.int64) % self.ring_w.q
                             for x in row] for row in lattice_mat]
        self.h2_mat = [[np.asarray(x, dtype=np.int64) % self.ring_w.q
                        for x in row] for row in h2_mat]
        self.lambda_mat = [[ScaledElem(self.ring_w, x.vec, x.offset)
                            for x in row] for row in lambda_mat]
        self.lstar = ScaledElem(self.ring_w, lstar.vec, lstar.offset)
        self.epsilon = epsilon
        self.tower = tower
        if len(self.lattice_mat) != r or any(len(row) != r
                                             for row in self.lattice_mat):
            raise ValueError("lattice basis must be a square matrix of rank r")

    def h2_module(self) -> FPModule:
        ring = self.ring_m
        b = len(self.h2_mat)
        columns = [[self.ring_w.reduce_elem(self.h2_mat[i][j], ring)
                    for i in range(b)] for j in range(b)]
        return present_module(ring, b, columns)


def validate_etnc(inst: EtncInstance) -> dict:
    ring_w = inst.ring_w
    checks = {}
    det_a = scaled_det(ring_w, scaled_matrix(ring_w, inst.lattice_mat))
    det_l = scaled_det(ring_w, inst.lambda_mat)
    det_f = scaled_det(ring_w, scaled_matrix(ring_w, inst.h2_mat))
    for name, d in (("lattice", det_a), ("trivialization", det_l),
                    ("h2-presentation", det_f)):
        try:
            d.unit_part()
            checks[f"{name}-det-invertible"] = True
        except PrecisionError:
            checks[f"{name}-det-invertible"] = False
    checks["lstar-unit"] = inst.ring_m.is_unit(
        inst.ring_w.reduce_elem(inst.lstar.vec, inst.ring_m)
    )
    checks["headroom-nonnegative"] = inst.h >= 0
    checks["ok"] = all(v for k, v in checks.items() if k != "ok")
    return checks


def bk_image_check(inst: EtncInstance) -> dict:
    """Normalized element, its image lattice, the determinant lattice, and
    the exactness verdict of their product against Fitt^0(H2).

    The determinant lattice is the top wedge of the integral lattice
    corrected by the finite part; trivializing it and dividing by the
    leading term yields Xi, and the product of Xi with the image of the
    normalized element recovers the zeroth Fitting ideal of the finite part
    exactly at the working precision.
    """
    checks = validate_etnc(inst)
    if not checks["ok"]:
        raise ValueError(f"instance invalid: {checks}")
    ring_w = inst.ring_w
    m = inst.ring_m.m
    det_a = scaled_det(ring_w, scaled_matrix(ring_w, inst.lattice_mat))
    det_l = scaled_det(ring_w, inst.lambda_mat)
    det_f = scaled_det(ring_w, scaled_matrix(ring_w, inst.h2_mat))
    # eta is the preimage of the leading term under the trivialization,
    # written on the ambient top wedge
    eta = inst.lstar / det_l
    # image ideal of eta against the integral lattice: its coordinate on
    # the lattice's own top wedge
    im_eta = FractionalLattice.from_scaled(ring_w, [eta / det_a],
                                           inst.epsilon)
    xi_gen = det_l * det_a * det_f / inst.lstar
    xi = FractionalLattice.from_scaled(ring_w, [xi_gen], inst.epsilon)
    fitt = fitting_ideal(inst.h2_module(), 0)
    target = ideal_lattice(fitt, ring_w, inst.epsilon)
    product = im_eta.mul_lattice(xi)
    verdict = product.eq_at_precision(target, m)
    return {
        "eta": eta,
        "im_eta": im_eta,
        "xi": xi,
        "fitting": fitt,
        "verdict": verdict,
    }


def eta_image_oracle(inst: EtncInstance) -> IdealCanon | None:
    """Recompute im(eta) through the bidual machinery when it is integral.

    The integral lattice is presented as a free module on its basis rows
    and the normalized element, which is a multiple of the basis top wedge,
    is fed through the image-ideal computation.  Returns None when eta is
    not integral on the lattice (nothing to cross-check then).
    """
    ring_w = inst.ring_w
    det_a = scaled_det(ring_w, scaled_matrix(ring_w, inst.lattice_mat))
    det_l = scaled_det(ring_w, inst.lambda_mat)
    coeff = inst.lstar / (det_l * det_a)
    if coeff.offset > 0:
        return None
    mod = present_module(ring_w, 1, [])
    _, ideal = bidual_and_image(mod, 1, coeff.vec)
    return ideal


def tnc_check(xi: FractionalLattice, order: FractionalLattice | None = None,
              m: int = 1) -> bool:
    """Whether the order times the lattice equals the order itself."""
    if order is None:
        order = integral_lattice(xi.ring, xi.epsilon)
    return order.mul_lattice(xi).eq_at_precision(order, m)


# -- associated orders --------------------------------------------------------


def associated_order(lat: FractionalLattice,
                     denominator_bound: int | None = None) -> dict:
    """Stabilizer {x : x . L <= L} as a fractional lattice, plus whether L
    is free of rank one over the base ring (a principal lattice with a
    non-zero-divisor generator)."""
    ring = lat.ring
    q, p = ring.q, ring.p
    if lat.span.shape[0] == 0:
        raise ValueError("the zero lattice has no associated order")
    if denominator_bound is None:
        group_order = 1
        for d in ring.group:
            group_order *= d
        denominator_bound = 0
        while group_order % p == 0:
            group_order //= p
            denominator_bound += 1
        # denominators of p^d are invisible at precision m unless d < m
        denominator_bound = min(denominator_bound, ring.m - 1)
    d = denominator_bound
    # x = p^-d y with y . span contained in p^d . span
    target = linalg.howell(lat.span * (p ** d) % q, q, p)
    span = linalg.howell(np.eye(ring.n, dtype=np.int64), q, p)
    gens = minimal_generators(ring, ring.n, list(lat.span))
    for row in gens:
        reg = ring.reg_matrix(row)
        pre = linalg.preimage_span(reg, target, q, p)
        span = linalg.span_intersection(span, pre, q, p)
    order = FractionalLattice(ring, span, d, lat.epsilon)
    # free of rank one over the base ring: principal, and the generator's
    # regular representation has nonvanishing determinant at the working
    # modulus, which certifies that every lift is a non-zero-divisor
    principal = len(gens) == 1
    nzd = principal and reg_det(ring, gens[0]) % q != 0
    m_chk = max(1, ring.m - 2 * d - 2 * lat.offset)
    return {
        "order": order,
        "denominator_bound": d,
        "min_order": bool(principal and nzd),
        "contains_base_ring": _order_contains_one(order),
        "stabilizes": order.mul_lattice(lat).eq_at_precision(lat, m_chk),
    }


def reg_det(ring: RingHandle, g) -> int:
    """Exact integer determinant of the regular representation of ``g``,
    reduced modulo the working modulus."""
    from sympy import Matrix

    mat = Matrix([[int(x) for x in row] for row in ring.reg_matrix(g)])
    return int(mat.det()) % ring.q


def _order_contains_one(order: FractionalLattice) -> bool:
    ring = order.ring
    one = ring.one() * ring.p ** order.offset % ring.q
    return linalg.in_span(one, order.span, ring.q, ring.p)


# -- Euler polynomials --------------------------------------------------------


def euler_poly_frobenius(ring: RingHandle, frob: list[list]) -> list[np.ndarray]:
    """Coefficients (low degree first) of det(1 - Fr^{-1} x)."""
    k = len(frob)
    if any(len(row) != k for row in frob):
        raise ValueError("frobenius matrix must be square")
    frob = [[np.asarray(x, dtype=np.int64) % ring.q for x in row]
            for row in frob]
    det = _det(ring, frob)
    if not ring.is_unit(det):
        raise ValueError("frobenius matrix must be invertible")
    inv_det = ring.inverse(det)
    inv = [[None] * k for _ in range(k)]
    for i in range(k):
        for j in range(k):
            minor = [[frob[a][b] for b in range(k) if b != j]
                     for a in range(k) if a != i]
            c = _det(ring, minor)
            if (i + j) % 2:
                c = (-c) % ring.q
            inv[j][i] = ring.mul(c, inv_det)
    # det(1 - A x) = sum_j (-1)^j e_j(A) x^j with e_j the sum of principal
    # j x j minors of A
    coeffs = [ring.one()]
    for j in range(1, k + 1):
        total = ring.zero()
        for rows in itertools.combinations(range(k), j):
            sub = [[inv[a][b] for b in rows] for a in rows]
            total = ring.add(total, _det(ring, sub))
        if j % 2:
            total = (-total) % ring.q
        coeffs.append(total)
    return coeffs


def euler_poly_elliptic(ring: RingHandle, a_ell: int, ell: int) -> dict:
    """1 - a ell^{-1} x + ell^{-1} x^2 with the Weil-bound witness."""
    if ell % ring.p == 0:
        raise ValueError("the auxiliary prime must differ from p")
    inv = pow(ell, -1, int(ring.q))
    coeffs = [
        ring.one(),
        ring.from_int(-a_ell * inv),
        ring.from_int(inv),
    ]
    return {"coeffs": coeffs, "weil_ok": a_ell * a_ell <= 4 * ell}


def euler_poly_eval(ring: RingHandle, coeffs: list, frob_elem) -> np.ndarray:
    """Evaluate a polynomial at a group-ring element."""
    out = ring.zero()
    power = ring.one()
    for c in coeffs:
        out = ring.add(out, ring.mul(np.asarray(c) % ring.q, power))
        power = ring.mul(power, np.asarray(frob_elem) % ring.q)
    return out


def euler_product(ring: RingHandle, factors: list[tuple[list, np.ndarray]]):
    """Product over primes of polynomial values at Frobenius elements."""
    out = ring.one()
    for coeffs, frob in factors:
        out = ring.mul(out, euler_poly_eval(ring, coeffs, frob))
    return out


# -- codescent ----------------------------------------------------------------


def codescent_check(src: FPModule, dst_ring: RingHandle, elem=None) -> dict:
    """Surjectivity of Fitting ideals and image ideals under the quotient
    projection of group rings."""
    dst = base_change(src, dst_ring)
    fitt_src = fitting_ideal(src, 0)
    fitt_dst = fitting_ideal(dst, 0)
    projected = IdealCanon(dst_ring, [
        elem_base_change(src.ring, dst_ring, g) for g in fitt_src.matrix
    ])
    out = {"fitting_projects": projected == fitt_dst}
    if elem is not None:
        elem = np.asarray(elem, dtype=np.int64) % src.ring.q
        _, ideal_src = bidual_and_image(src, 1, elem)
        n = src.ring.n
        chunks = [elem[i * n:(i + 1) * n] for i in range(src.b)]
        dst_elem = np.concatenate([
            elem_base_change(src.ring, dst_ring, c) for c in chunks
        ])
        _, ideal_dst = bidual_and_image(dst, 1, dst_elem)
        proj_elem = IdealCanon(dst_ring, [
            elem_base_change(src.ring, dst_ring, g) for g in ideal_src.matrix
        ])
        out["element_image_projects"] = proj_elem <= ideal_dst
    out["ok"] = all(v for k, v in out.items()
                    if isinstance(v, bool) and k != "ok")
    return out


# -- Artin induction ----------------------------------------------------------


def _group_elements(factors: tuple) -> list[tuple]:
    return list(itertools.product(*[range(d) for d in factors]))


def _cyclic_subgroup(factors: tuple, gen: tuple) -> frozenset:
    elems = set()
    cur = tuple(0 for _ in factors)
    while True:
        elems.add(cur)
        cur = tuple((a + b) % d for a, b, d in zip(cur, gen, factors))
        if cur in elems:
            return frozenset(elems)


def subgroups(factors: tuple) -> list[frozenset]:
    """All subgroups of the abelian group with the given invariant factors
    (intended for groups of order at most 27)."""
    elems = _group_elements(factors)
    frontier = {_cyclic_subgroup(factors, g) for g in elems}
    found = set(frontier)
    while frontier:
        new = set()
        for h in frontier:
            for g in elems:
                if g in h:
                    continue
                joined = _span_join(factors, h, g)
                if joined not in found:
                    new.add(joined)
        found |= new
        frontier = new
    return sorted(found, key=lambda s: (len(s), sorted(s)))


def _span_join(factors: tuple, h: frozenset, g: tuple) -> frozenset:
    elems = set(h)
    elems.add(g)
    changed = True
    while changed:
        changed = False
        cur = list(elems)
        for a in cur:
            for b in cur:
                z = tuple((x + y) % d for x, y, d in zip(a, b, factors))
                if z not in elems:
                    elems.add(z)
                    changed = True
    return frozenset(elems)


def _is_cyclic(factors: tuple, s: frozenset) -> bool:
    return any(_cyclic_subgroup(factors, g) == s for g in s)


def _generators_of(factors: tuple, s: frozenset) -> list[tuple]:
    return [g for g in s if _cyclic_subgroup(factors, g) == s]


def _exponent_lcm(factors: tuple) -> int:
    lcm = 1
    for d in factors:
        g = _gcd(lcm, d)
        lcm = lcm * d // g
    return lcm


def _gcd(a: int, b: int) -> int:
    while b:
        a, b = b, a % b
    return a


def _pairing_trivial(factors: tuple, chi: tuple, g: tuple) -> bool:
    lcm = _exponent_lcm(factors)
    return sum(c * x * (lcm // d)
               for c, x, d in zip(chi, g, factors)) % lcm == 0


def _perp(factors: tuple, s: frozenset) -> frozenset:
    """Annihilator in G of a subgroup of the character group."""
    return frozenset(g for g in _group_elements(factors)
                     if all(_pairing_trivial(factors, chi, g) for chi in s))


def artin_decompose(factors: tuple, char_multiset: list[tuple]) -> dict:
    """Integral decomposition of a rational character as a combination of
    inductions of trivial characters.

    Characters of the abelian group are given as exponent tuples in the
    character group (isomorphic to the group itself).  The multiset must
    be Galois-stable; the result satisfies m . phi = sum n_H Ind_H 1
    exactly with minimal positive m, and the inversion over the lattice of
    cyclic subgroups of the character group always lands on m = 1 here.
    """
    factors = tuple(int(d) for d in factors)
    counts: dict[tuple, int] = {}
    for chi in char_multiset:
        chi = tuple(int(c) % d for c, d in zip(chi, factors))
        counts[chi] = counts.get(chi, 0) + 1
    # group characters into Galois orbits (= generator sets of cyclic
    # subgroups of the character group), checking stability
    orbit_mult: dict[frozenset, int] = {}
    seen: set[tuple] = set()
    for chi, c in counts.items():
        if chi in seen:
            continue
        sub = _cyclic_subgroup(factors, chi)
        orbit = _generators_of(factors, sub)
        vals = {counts.get(x, 0) for x in orbit}
        if len(vals) != 1:
            raise ValueError("character multiset is not Galois-stable")
        orbit_mult[sub] = vals.pop()
        seen |= set(orbit)
    cyc = [s for s in subgroups(factors) if _is_cyclic(factors, s)]
    phi = {s: orbit_mult.get(s, 0) for s in cyc}
    # induction over H = K-perp contributes 1 to every orbit whose cyclic
    # subgroup sits inside K; invert top-down over the inclusion order
    n: dict[frozenset, int] = {}
    for s in sorted(cyc, key=len, reverse=True):
        above = sum(v for t, v in n.items() if s < t)
        n[s] = phi[s] - above
    coefficients = {_perp(factors, s): v for s, v in n.items() if v}
    return {"m": 1, "coefficients": coefficients}


def artin_assemble(factors: tuple, coefficients: dict) -> dict:
    """Character multiset (as a multiplicity dict) of sum n_H Ind_H 1."""
    factors = tuple(int(d) for d in factors)
    out: dict[tuple, int] = {}
    for h, nh in coefficients.items():
        for chi in _group_elements(factors):
            if all(_pairing_trivial(factors, chi, g) for g in h):
                out[chi] = out.get(chi, 0) + nh
    return {chi: v for chi, v in out.items() if v}
