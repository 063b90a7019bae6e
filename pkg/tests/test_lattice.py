"""Scaled elements, fractional lattices, Euler factors, orders, induction."""

import numpy as np
import pytest

from selstark import lattice as lat
from selstark import oracle
from selstark.generate import generate_etnc, generate_tower
from selstark.lattice import (FractionalLattice, PrecisionError, ScaledElem,
                              artin_assemble, artin_decompose,
                              associated_order, bk_image_check,
                              codescent_check, euler_poly_elliptic,
                              euler_poly_eval, euler_poly_frobenius,
                              euler_product, integral_lattice, subgroups,
                              tnc_check, validate_etnc)
from selstark.rings import build_ring
from tests.conftest import rng_for, random_elem, random_unit


@pytest.fixture(scope="module")
def ring():
    return build_ring(3, 2, 1, (3,))


@pytest.fixture(scope="module")
def ring_w(ring):
    return ring.at_precision(6)


def test_scaled_elem_arithmetic(ring_w):
    rng = rng_for("scaled")
    for _ in range(10):
        u = random_unit(ring_w, rng)
        x = ScaledElem(ring_w, u, offset=1)
        y = ScaledElem(ring_w, ring_w.from_int(3), offset=0)
        v, rest = (x * y).unit_part()
        assert v == 0 or v >= -1
        # division undoes multiplication at the working precision
        z = (x * y) / y
        assert z.eq_at_precision(x, ring_w.m - 2)


def test_unit_part_rejects_zero_divisor_shapes(ring_w):
    g = ring_w.group_elem([1])
    x = ScaledElem(ring_w, (g - ring_w.one()) % ring_w.q)
    with pytest.raises(PrecisionError):
        x.unit_part()


def test_negative_offsets_fold_into_the_vector(ring_w):
    x = ScaledElem(ring_w, ring_w.one(), offset=-2)
    assert x.offset == 0
    assert np.array_equal(x.vec, ring_w.from_int(9))


def test_lattice_equality_clears_denominators(ring_w):
    a = integral_lattice(ring_w)
    b = a.scale(ScaledElem(ring_w, ring_w.from_int(3), offset=1))
    assert a.eq_at_precision(b, 2)
    c = a.scale(ScaledElem(ring_w, ring_w.from_int(3), offset=0))
    assert not a.eq_at_precision(c, 2)


def test_lattice_comparison_beyond_headroom_raises(ring):
    small = ring.at_precision(2)
    a = integral_lattice(small)
    b = FractionalLattice(small, a.span, offset=2)
    with pytest.raises(PrecisionError):
        a.eq_at_precision(b, 2)


def test_generated_instances_validate_and_pass(ring):
    for seed in range(3):
        inst = generate_etnc(seed)
        assert validate_etnc(inst)["ok"]
        out = bk_image_check(inst)
        assert out["verdict"]


def test_eta_image_cross_check():
    for seed in range(6):
        inst = generate_etnc(seed)
        out = bk_image_check(inst)
        ideal = lat.eta_image_oracle(inst)
        if ideal is None:
            continue
        target = lat.ideal_lattice(ideal, inst.ring_w, inst.epsilon)
        assert out["im_eta"].eq_at_precision(target, inst.ring_m.m)


def test_tnc_truth_table(ring_w):
    one = integral_lattice(ring_w)
    assert tnc_check(one, m=2)
    assert not tnc_check(one.scale(ScaledElem(ring_w, ring_w.from_int(3))),
                         m=2)
    assert not tnc_check(one.scale(ScaledElem(ring_w, ring_w.one(), 1)), m=2)


def test_associated_order_of_the_base_ring(ring_w):
    out = associated_order(integral_lattice(ring_w))
    assert out["min_order"]
    assert out["contains_base_ring"]
    assert out["stabilizes"]


def test_associated_order_of_the_radical_is_larger(ring):
    g = ring.group_elem([1])
    rad = FractionalLattice(ring, np.vstack([
        ring.reg_matrix(ring.from_int(3)),
        ring.reg_matrix((g - ring.one()) % ring.q),
    ]))
    out = associated_order(rad)
    assert not out["min_order"]
    assert out["contains_base_ring"]
    assert out["stabilizes"]
    # brute force agreement on the stabilizer
    elems = oracle.stabilizer_elements(ring, rad.span,
                                       out["denominator_bound"])
    from selstark import linalg
    brute = linalg.howell(np.array(sorted(elems), dtype=np.int64),
                          ring.q, ring.p)
    assert np.array_equal(brute, out["order"].span)


def test_euler_poly_frobenius_matches_the_characteristic_polynomial(ring):
    g = ring.group_elem([1])
    coeffs = euler_poly_frobenius(ring, [[g]])
    # det(1 - g^-1 x) = 1 - g^-1 x
    assert np.array_equal(coeffs[0], ring.one())
    assert np.array_equal(coeffs[1], (-ring.involution(g)) % ring.q)
    # evaluating at x = g recovers 1 - g^-1 g = 0
    assert not euler_poly_eval(ring, coeffs, g).any()


def test_euler_poly_elliptic_shape(ring):
    out = euler_poly_elliptic(ring, a_ell=2, ell=7)
    c0, c1, c2 = out["coeffs"]
    assert np.array_equal(c0, ring.one())
    assert np.array_equal((c1 * 7) % ring.q, ring.from_int(-2))
    assert np.array_equal((c2 * 7) % ring.q, ring.one())
    assert out["weil_ok"]
    assert not euler_poly_elliptic(ring, a_ell=6, ell=7)["weil_ok"]
    with pytest.raises(ValueError):
        euler_poly_elliptic(ring, a_ell=1, ell=3)


def test_euler_product_is_multiplicative(ring):
    g = ring.group_elem([1])
    f1 = euler_poly_elliptic(ring, 1, 7)["coeffs"]
    f2 = euler_poly_elliptic(ring, -2, 13)["coeffs"]
    lhs = euler_product(ring, [(f1, g), (f2, ring.mul(g, g))])
    rhs = ring.mul(euler_poly_eval(ring, f1, g),
                   euler_poly_eval(ring, f2, ring.mul(g, g)))
    assert np.array_equal(lhs, rhs)


def test_codescent_on_a_generated_tower():
    tower = generate_tower(seed=1)
    out = codescent_check(tower["module"], tower["quotient_ring"],
                          tower["element"])
    assert out["ok"], out


def test_subgroup_lattice_sizes():
    assert len(subgroups((3,))) == 2
    assert len(subgroups((9,))) == 3
    assert len(subgroups((3, 3))) == 6
    assert len(subgroups((3, 3, 3))) == 28


def test_artin_roundtrip_on_a_faithful_orbit():
    factors = (9,)
    # the Galois orbit of a faithful character of C_9
    chars = [(k,) for k in range(9) if k % 3]
    dec = artin_decompose(factors, chars)
    assert dec["m"] == 1
    back = artin_assemble(factors, dec["coefficients"])
    assert back == {(k % 9,): 1 for k, in [(c[0],) for c in chars]}


def test_artin_rejects_unstable_multisets():
    with pytest.raises(ValueError):
        artin_decompose((9,), [(1,)])
