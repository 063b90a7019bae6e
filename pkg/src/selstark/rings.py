"""Finite chain rings GR(p^m, f) and group rings over them.

A ring handle fixes an odd prime p, a precision exponent m, a residue degree
f and a finite abelian p-group G given by its invariant factors.  Elements
are coefficient vectors of length f*|G| over Z/p^m in a fixed basis order:
Galois-ring monomial index major, group element (lexicographic exponent
tuple) minor.  The fixed order makes every serialized output bit-exact.

An optional prime-to-p auxiliary group Delta can be adjoined; it is only
used to form character idempotents, and the locality facts (units, Howell
ideal forms as the canonical shape for Fitting-ideal comparisons) are stated
for the p-group part.
"""

from __future__ import annotations

import itertools

import numpy as np

from . import linalg


def _is_prime(n: int) -> bool:
    if n < 2:
        return False
    d = 2
    while d * d <= n:
        if n % d == 0:
            return False
        d += 1
    return True


def _is_p_power(n: int, p: int) -> bool:
    if n < 1:
        return False
    while n % p == 0:
        n //= p
    return n == 1


def _find_irreducible(p: int, f: int) -> list[int]:
    """Coefficients c_0..c_{f-1} of the first monic irreducible
    x^f + c_{f-1} x^{f-1} + ... + c_0 over F_p (lexicographic search)."""
    if f == 1:
        return [0]
    for tail in itertools.product(range(p), repeat=f):
        coeffs = list(reversed(tail))  # c_0 first
        if _poly_irreducible(coeffs, p, f):
            return coeffs
    raise RuntimeError("no irreducible polynomial found")  # unreachable


def _poly_irreducible(coeffs: list[int], p: int, f: int) -> bool:
    # no roots and, for f <= 3 that suffices; general case: check gcd with
    # x^(p^d) - x for proper divisors d (Rabin test), done by exhaustion on
    # low-degree factors since f is tiny here.
    if coeffs[0] % p == 0:
        return False
    full = coeffs + [1]

    def polymod(a, b):
        a = list(a)
        while len(a) >= len(b) and any(a):
            while a and a[-1] % p == 0:
                a.pop()
            if len(a) < len(b):
                break
            c = a[-1] * pow(b[-1], -1, p) % p
            off = len(a) - len(b)
            for i, bc in enumerate(b):
                a[off + i] = (a[off + i] - c * bc) % p
            while a and a[-1] % p == 0:
                a.pop()
        return a

    # trial division by all monic polynomials of degree <= f//2
    for d in range(1, f // 2 + 1):
        for tail in itertools.product(range(p), repeat=d):
            div = list(tail) + [1]
            if not polymod(full, div):
                return False
    return True


class RingHandle:
    """GR(p^m, f)[G x Delta] with G a p-group, Delta prime to p."""

    def __init__(self, p: int, m: int, f: int, group, delta=()):
        if not _is_prime(p) or p == 2:
            raise ValueError(f"p must be an odd prime, got {p}")
        if m < 1 or f < 1:
            raise ValueError("need m >= 1 and f >= 1")
        group = tuple(int(d) for d in group)
        delta = tuple(int(d) for d in delta)
        for i, d in enumerate(group):
            if d < 2 or not _is_p_power(d, p):
                raise ValueError(f"invariant factor {d} is not a power of {p}")
            if i + 1 < len(group) and group[i + 1] % d != 0:
                raise ValueError("invariant factors must divide in sequence")
        for d in delta:
            if d < 2 or d % p == 0:
                raise ValueError(f"auxiliary factor {d} must be prime to {p}")
        self.p = p
        self.m = m
        self.f = f
        self.group = group
        self.delta = delta
        self.q = p**m
        self.gsize = int(np.prod(group)) if group else 1
        self.dsize = int(np.prod(delta)) if delta else 1
        full = group + delta
        self.full_factors = full
        self.elements = list(itertools.product(*[range(d) for d in full])) or [()]
        self.eindex = {e: i for i, e in enumerate(self.elements)}
        self.n = f * len(self.elements)
        self._modpoly = _find_irreducible(p, f)
        self._ext_mul = self._build_ext_mul()
        self._mul_tensor = None
        self._teich = None

    # -- basic structure -------------------------------------------------

    @property
    def cardinality(self) -> int:
        return self.q**self.n

    def describe(self) -> dict:
        d = {"p": self.p, "m": self.m, "f": self.f, "group": list(self.group)}
        if self.delta:
            d["delta"] = list(self.delta)
        return d

    def __eq__(self, other):
        return isinstance(other, RingHandle) and self.describe() == other.describe()

    def __hash__(self):
        return hash((self.p, self.m, self.f, self.group, self.delta))

    def __repr__(self):
        g = "x".join(f"C{d}" for d in self.full_factors) or "1"
        return f"GR({self.p}^{self.m},{self.f})[{g}]"

    def _build_ext_mul(self) -> np.ndarray:
        """t[i, j] = coefficient vector of x^i * x^j in the monomial basis."""
        f, q = self.f, self.q
        t = np.zeros((f, f, f), dtype=np.int64)
        for i in range(f):
            for j in range(f):
                # multiply x^(i+j) down using x^f = -c
                poly = [0] * (i + j) + [1]
                while len(poly) > f:
                    top = poly.pop()
                    for k, c in enumerate(self._modpoly):
                        poly[len(poly) - f + k] = (poly[len(poly) - f + k] - top * c) % q
                poly += [0] * (f - len(poly))
                t[i, j] = poly
        return t

    def basis_index(self, ext: int, elem) -> int:
        return ext * len(self.elements) + self.eindex[tuple(elem)]

    # -- element constructors --------------------------------------------

    def zero(self) -> np.ndarray:
        return np.zeros(self.n, dtype=np.int64)

    def one(self) -> np.ndarray:
        v = self.zero()
        v[self.basis_index(0, self.elements[0])] = 1
        return v

    def from_int(self, c: int) -> np.ndarray:
        return (self.one() * c) % self.q

    def group_elem(self, exponents) -> np.ndarray:
        v = self.zero()
        v[self.basis_index(0, tuple(exponents))] = 1
        return v

    def monomial(self, ext: int, exponents=None) -> np.ndarray:
        if exponents is None:
            exponents = self.elements[0]
        v = self.zero()
        v[self.basis_index(ext, tuple(exponents))] = 1
        return v

    def element(self, coeffs) -> np.ndarray:
        v = np.asarray(coeffs, dtype=np.int64) % self.q
        if v.shape != (self.n,):
            raise ValueError(f"expected {self.n} coefficients")
        return v

    # -- arithmetic ------------------------------------------------------

    def mul_tensor(self) -> np.ndarray:
        if self._mul_tensor is None:
            ne = len(self.elements)
            t = np.zeros((self.n, self.n, self.n), dtype=np.int64)
            for i1 in range(self.f):
                for i2 in range(self.f):
                    ext = self._ext_mul[i1, i2]
                    for e1, t1 in enumerate(self.elements):
                        for e2, t2 in enumerate(self.elements):
                            prod = tuple(
                                (a + b) % d
                                for a, b, d in zip(t1, t2, self.full_factors)
                            )
                            e3 = self.eindex[prod]
                            for k in range(self.f):
                                if ext[k]:
                                    t[i1 * ne + e1, i2 * ne + e2, k * ne + e3] = ext[k]
            self._mul_tensor = t
        return self._mul_tensor

    def mul(self, a, b) -> np.ndarray:
        # reduce the coefficient products before contracting with the
        # multiplication tensor: its entries are themselves mod-q integers,
        # so a triple product can overflow int64 at high precision
        t = self.mul_tensor()
        c = np.outer(a % self.q, b % self.q) % self.q
        return np.einsum("ij,ijk->k", c, t) % self.q

    def add(self, a, b) -> np.ndarray:
        return (a + b) % self.q

    def neg(self, a) -> np.ndarray:
        return (-a) % self.q

    def power(self, a, k: int) -> np.ndarray:
        out = self.one()
        base = a % self.q
        while k:
            if k & 1:
                out = self.mul(out, base)
            base = self.mul(base, base)
            k >>= 1
        return out

    def reg_matrix(self, a) -> np.ndarray:
        """Matrix of multiplication by ``a`` acting on row vectors: x*a = x @ M."""
        t = self.mul_tensor()
        return np.einsum("j,ijk->ik", a % self.q, t) % self.q

    def involution(self, a) -> np.ndarray:
        """Group inversion g -> g^-1 extended linearly (identity on GR part)."""
        out = self.zero()
        ne = len(self.elements)
        for i in range(self.f):
            for e, tup in enumerate(self.elements):
                inv = tuple((-x) % d for x, d in zip(tup, self.full_factors))
                out[i * ne + self.eindex[inv]] = a[i * ne + e]
        return out % self.q

    def augmentation(self, a) -> np.ndarray:
        """Image under G x Delta -> 1, a vector of length f over Z/p^m."""
        ne = len(self.elements)
        return np.array(
            [int(a[i * ne : (i + 1) * ne].sum()) % self.q for i in range(self.f)],
            dtype=np.int64,
        )

    def is_unit(self, a) -> bool:
        """Units of the local ring GR(p^m,f)[G]: nonzero augmentation residue."""
        if self.delta:
            raise ValueError("is_unit requires a p-group ring (no Delta part)")
        return bool((self.augmentation(a) % self.p).any())

    def inverse(self, a) -> np.ndarray:
        if not self.is_unit(a):
            raise ValueError("element is not a unit")
        sol = linalg.solve_left(self.reg_matrix(a), self.one(), self.q, self.p)
        if sol is None:
            raise ArithmeticError("unit has no inverse (internal error)")
        return sol

    def norm_element(self) -> np.ndarray:
        """Sum of all group elements (G and Delta parts together)."""
        v = self.zero()
        for e in self.elements:
            v[self.basis_index(0, e)] = 1
        return v

    # -- precision / subring maps ---------------------------------------

    def at_precision(self, m: int) -> "RingHandle":
        return RingHandle(self.p, m, self.f, self.group, self.delta)

    def residue_ring(self) -> "RingHandle":
        return self.at_precision(1)

    def reduce_elem(self, a, target: "RingHandle") -> np.ndarray:
        if (target.p, target.f, target.group, target.delta) != (
            self.p,
            self.f,
            self.group,
            self.delta,
        ):
            raise ValueError("reduction requires the same underlying basis")
        return np.asarray(a, dtype=np.int64) % target.q

    # -- Teichmueller lift and character idempotents ---------------------

    def teichmuller(self) -> np.ndarray:
        """Multiplicative generator of order p^f - 1 in GR(p^m, f)."""
        if self._teich is not None:
            return self._teich
        order = self.p**self.f - 1
        base = self.residue_base()
        # find a primitive element of the residue field
        for cand in base._iterate_gr_elements():
            if not (cand % base.p).any():
                continue
            if base._mult_order(cand, order) == order:
                lift = self.embed_gr(cand)
                # Hensel: iterate Frobenius-power map until stable mod p^m
                for _ in range(self.m + 2):
                    lift = self.power(lift, self.p**self.f)
                self._teich = lift
                return lift
        raise RuntimeError("no primitive element found")

    def residue_base(self) -> "RingHandle":
        return RingHandle(self.p, 1, self.f, (), ())

    def embed_gr(self, a) -> np.ndarray:
        """Embed a GR(p,f)-coefficient vector (trivial group) into this ring."""
        out = self.zero()
        for i in range(self.f):
            out[self.basis_index(i, self.elements[0])] = int(a[i])
        return out % self.q

    def _iterate_gr_elements(self):
        for tup in itertools.product(range(self.q), repeat=self.f):
            yield np.array(tup, dtype=np.int64)

    def _mult_order(self, a, bound: int) -> int:
        acc = a.copy()
        one = self.one()
        for k in range(1, bound + 1):
            if np.array_equal(acc % self.q, one):
                return k
            acc = self.mul(acc, a)
        return 0

    def chi_idempotent(self, chi_exponents) -> np.ndarray:
        """Idempotent e_chi = |Delta|^-1 sum_d chi(d) d^-1 for a character of
        the Delta part, given by exponents against the invariant-factor
        generators; chi(delta_i) = w^(a_i (p^f-1)/d_i) for the Teichmueller
        generator w."""
        if not self.delta:
            raise ValueError("ring has no auxiliary prime-to-p part")
        order = self.p**self.f - 1
        chi_exponents = tuple(int(a) for a in chi_exponents)
        if len(chi_exponents) != len(self.delta):
            raise ValueError("one exponent per Delta invariant factor")
        for a, d in zip(chi_exponents, self.delta):
            if order % d != 0:
                raise ValueError(
                    f"character order {d} does not divide p^f - 1 = {order}; "
                    f"increase f"
                )
        w = self.teichmuller()
        ngroup = len(self.group)
        out = self.zero()
        for tup in self.elements:
            gpart, dpart = tup[:ngroup], tup[ngroup:]
            if any(gpart):
                continue
            # chi(delta^dpart)
            expo = sum(
                a * x * (order // d)
                for a, x, d in zip(chi_exponents, dpart, self.delta)
            )
            val = self.power(w, expo % order)
            inv = tuple(0 for _ in gpart) + tuple(
                (-x) % d for x, d in zip(dpart, self.delta)
            )
            term = self.mul(val, self.group_elem(inv))
            out = self.add(out, term)
        scale = pow(self.dsize, -1, self.q)
        return (out * scale) % self.q


def build_ring(p: int, m: int, f: int, group, delta=()) -> RingHandle:
    return RingHandle(p, m, f, group, delta)


class IdealCanon:
    """Ideal of a ring handle in canonical (Howell) normal form.

    The stored matrix is the Howell form over Z/p^m of the additive span of
    {g * b_i} for the given generators g and all ring basis elements b_i,
    hence closed under ring multiplication by construction.  Two ideals are
    equal exactly when their matrices are identical.
    """

    def __init__(self, ring: RingHandle, gens):
        self.ring = ring
        rows = []
        for g in gens:
            rows.append(ring.reg_matrix(np.asarray(g, dtype=np.int64)))
        if rows:
            mat = np.vstack(rows)
        else:
            mat = np.zeros((0, ring.n), dtype=np.int64)
        self.matrix = linalg.howell(mat, ring.q, ring.p)

    @classmethod
    def from_matrix(cls, ring: RingHandle, matrix: np.ndarray) -> "IdealCanon":
        ideal = cls.__new__(cls)
        ideal.ring = ring
        ideal.matrix = linalg.howell(np.asarray(matrix, dtype=np.int64), ring.q, ring.p)
        return ideal

    def contains(self, x) -> bool:
        return linalg.in_span(np.asarray(x, dtype=np.int64), self.matrix, self.ring.q, self.ring.p)

    def __eq__(self, other):
        if not isinstance(other, IdealCanon) or other.ring != self.ring:
            return False
        return np.array_equal(self.matrix, other.matrix)

    def __hash__(self):
        return hash((self.ring, self.matrix.tobytes()))

    def __le__(self, other: "IdealCanon") -> bool:
        return all(other.contains(row) for row in self.matrix)

    def __add__(self, other: "IdealCanon") -> "IdealCanon":
        self._check(other)
        return IdealCanon.from_matrix(self.ring, np.vstack([self.matrix, other.matrix]))

    def __mul__(self, other: "IdealCanon") -> "IdealCanon":
        self._check(other)
        rows = []
        for a in self.matrix:
            for b in other.matrix:
                rows.append(self.ring.mul(a, b))
        if not rows:
            return IdealCanon(self.ring, [])
        return IdealCanon.from_matrix(self.ring, np.array(rows, dtype=np.int64))

    def scale(self, x) -> "IdealCanon":
        rows = [self.ring.mul(np.asarray(x, dtype=np.int64), r) for r in self.matrix]
        if not rows:
            return IdealCanon(self.ring, [])
        return IdealCanon.from_matrix(self.ring, np.array(rows, dtype=np.int64))

    def _check(self, other: "IdealCanon"):
        if other.ring != self.ring:
            raise ValueError("ideal operation across different rings")

    def is_zero(self) -> bool:
        return self.matrix.shape[0] == 0

    def is_unit_ideal(self) -> bool:
        return self.contains(self.ring.one())

    def log_size(self) -> int:
        return linalg.span_log_size(self.matrix, self.ring.q, self.ring.p)

    def __repr__(self):
        return f"IdealCanon({self.ring!r}, rank {self.matrix.shape[0]})"


def ideal_normalize(ring: RingHandle, gens) -> IdealCanon:
    return IdealCanon(ring, gens)


def ideal_contains(ring: RingHandle, gens, x) -> bool:
    return IdealCanon(ring, gens).contains(x)


def ideal_equal(ring: RingHandle, gens_a, gens_b) -> bool:
    return IdealCanon(ring, gens_a) == IdealCanon(ring, gens_b)


def zero_ideal(ring: RingHandle) -> IdealCanon:
    return IdealCanon(ring, [])


def unit_ideal(ring: RingHandle) -> IdealCanon:
    return IdealCanon(ring, [ring.one()])
