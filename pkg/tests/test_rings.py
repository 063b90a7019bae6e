"""Chain-ring group-ring arithmetic and canonical ideals."""

import numpy as np
import pytest

from selstark.rings import (IdealCanon, build_ring, ideal_equal, unit_ideal,
                            zero_ideal)
from tests.conftest import SMALL_RINGS, rng_for, random_elem, random_unit

EXTRA_RINGS = SMALL_RINGS + [(3, 2, 2, (3,)), (3, 1, 1, (3, 3)), (3, 2, 1, (9,))]


@pytest.mark.parametrize("params", EXTRA_RINGS)
def test_ring_axioms_randomized(params):
    ring = build_ring(*params)
    rng = rng_for("axioms", params)
    for _ in range(15):
        a, b, c = (random_elem(ring, rng) for _ in range(3))
        assert np.array_equal(ring.mul(a, b), ring.mul(b, a))
        assert np.array_equal(ring.mul(ring.mul(a, b), c),
                              ring.mul(a, ring.mul(b, c)))
        assert np.array_equal(ring.mul(a, ring.add(b, c)),
                              ring.add(ring.mul(a, b), ring.mul(a, c)))
        assert np.array_equal(ring.mul(a, ring.one()), a % ring.q)


@pytest.mark.parametrize("params", EXTRA_RINGS)
def test_units_invert_and_augmentation_is_multiplicative(params):
    ring = build_ring(*params)
    rng = rng_for("units", params)
    for _ in range(10):
        u = random_unit(ring, rng)
        assert np.array_equal(ring.mul(u, ring.inverse(u)), ring.one())
        a = random_elem(ring, rng)
        # the augmentation lands in the coefficient ring GR(p^m, f)
        gr = build_ring(ring.p, ring.m, ring.f, ())
        lhs = ring.augmentation(ring.mul(u, a))
        rhs = gr.mul(ring.augmentation(u), ring.augmentation(a))
        assert np.array_equal(lhs % ring.q, rhs % ring.q)


@pytest.mark.parametrize("params", EXTRA_RINGS)
def test_reg_matrix_represents_multiplication(params):
    ring = build_ring(*params)
    rng = rng_for("reg", params)
    for _ in range(10):
        a, b = random_elem(ring, rng), random_elem(ring, rng)
        assert np.array_equal(b @ ring.reg_matrix(a) % ring.q,
                              ring.mul(a, b))


def test_group_elements_have_the_right_order():
    ring = build_ring(3, 2, 1, (9,))
    g = ring.group_elem([1])
    acc = ring.one()
    for k in range(1, 9):
        acc = ring.mul(acc, g)
        assert not np.array_equal(acc, ring.one())
    assert np.array_equal(ring.mul(acc, g), ring.one())


def test_norm_element_is_trace_of_the_group():
    ring = build_ring(3, 2, 1, (3,))
    nu = ring.norm_element()
    g = ring.group_elem([1])
    total = ring.add(ring.add(ring.one(), g), ring.mul(g, g))
    assert np.array_equal(nu, total)
    # the norm is fixed by the group action
    assert np.array_equal(ring.mul(g, nu), nu)


def test_involution_is_an_anti_automorphism_of_order_two():
    ring = build_ring(3, 2, 1, (3, 3))
    rng = rng_for("involution")
    for _ in range(10):
        a, b = random_elem(ring, rng), random_elem(ring, rng)
        assert np.array_equal(ring.involution(ring.involution(a)), a % ring.q)
        assert np.array_equal(ring.involution(ring.mul(a, b)),
                              ring.mul(ring.involution(a), ring.involution(b)))


def test_teichmuller_has_multiplicative_order_dividing_pf_minus_one():
    ring = build_ring(3, 2, 2, ())
    t = ring.teichmuller()
    acc = ring.one()
    for _ in range(8):
        acc = ring.mul(acc, t)
    assert np.array_equal(acc, ring.one())


def test_chi_idempotent_is_idempotent_and_orthogonal():
    # order-4 characters of the prime-to-p part need f = 2 (4 | 3^2 - 1)
    ring = build_ring(3, 1, 2, (), (4,))
    idems = [ring.chi_idempotent((a,)) for a in range(4)]
    total = ring.zero()
    for i, e in enumerate(idems):
        assert np.array_equal(ring.mul(e, e), e)
        for other in idems[i + 1:]:
            assert not ring.mul(e, other).any()
        total = ring.add(total, e)
    assert np.array_equal(total, ring.one())


def test_ideal_canonical_ops():
    ring = build_ring(3, 2, 1, (3,))
    g = ring.group_elem([1])
    aug = (g - ring.one()) % ring.q
    i3 = IdealCanon(ring, [ring.from_int(3)])
    iaug = IdealCanon(ring, [aug])
    # generator order does not change the canonical form
    assert IdealCanon(ring, [aug, ring.from_int(3)]) == \
        IdealCanon(ring, [ring.from_int(3), aug])
    assert i3 * unit_ideal(ring) == i3
    assert i3 * zero_ideal(ring) == zero_ideal(ring)
    assert i3 <= i3 + iaug
    assert iaug <= i3 + iaug
    assert (i3 * iaug) <= i3
    assert ideal_equal(ring, [ring.from_int(6)], [ring.from_int(3)])
    assert i3.contains(ring.from_int(6))
    assert not i3.contains(ring.one())
    assert unit_ideal(ring).is_unit_ideal()
    assert zero_ideal(ring).is_zero()


def test_precision_reduction_is_a_ring_map():
    ring = build_ring(3, 2, 1, (3,))
    low = ring.at_precision(1)
    rng = rng_for("reduce")
    for _ in range(10):
        a, b = random_elem(ring, rng), random_elem(ring, rng)
        assert np.array_equal(
            ring.reduce_elem(ring.mul(a, b), low),
            low.mul(ring.reduce_elem(a, low), ring.reduce_elem(b, low)))
