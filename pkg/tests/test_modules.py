"""Finitely presented modules: Fitting ideals, duals, wedges, cohomology."""

import numpy as np
import pytest

from selstark.modules import (FPModule, annihilator_contains, base_change,
                              bidual_and_image, canonical_bidual_hom,
                              direct_sum, dualize, elem_base_change,
                              exterior_power, fitting_ideal, free_module,
                              permutation_module, present_module,
                              tate_cohomology_cyclic, yakovlev_decompose)
from selstark.rings import IdealCanon, build_ring, unit_ideal, zero_ideal
from tests.conftest import rng_for, random_elem, random_module


def test_cyclic_module_fitting_is_the_relation_ideal():
    ring = build_ring(3, 2, 1, (3,))
    g = ring.group_elem([1])
    rel = (g - ring.one()) % ring.q
    mod = present_module(ring, 1, [[rel], [ring.from_int(3)]])
    assert fitting_ideal(mod, 0) == IdealCanon(ring, [rel, ring.from_int(3)])
    assert fitting_ideal(mod, 1) == unit_ideal(ring)


def test_free_module_invariants():
    ring = build_ring(3, 2, 1, (3,))
    mod = free_module(ring, 2)
    assert mod.is_free() and mod.free_rank() == 2
    assert fitting_ideal(mod, 0) == zero_ideal(ring)
    assert fitting_ideal(mod, 1) == zero_ideal(ring)
    assert fitting_ideal(mod, 2) == unit_ideal(ring)
    assert mod.log_size() == 2 * ring.n * ring.m


def test_direct_sum_sizes_and_annihilator():
    ring = build_ring(3, 1, 1, (3,))
    rng = rng_for("sum")
    for _ in range(10):
        a = random_module(ring, rng)
        b = random_module(ring, rng)
        s = direct_sum(a, b)
        assert s.log_size() == a.log_size() + b.log_size()
        for row in fitting_ideal(s, 0).matrix:
            assert annihilator_contains(s, row)


def test_dual_of_free_module_is_free():
    ring = build_ring(3, 2, 1, (3,))
    mod = free_module(ring, 2)
    dual = dualize(mod, "linear")
    assert dual.module.log_size() == mod.log_size()
    pont = dualize(mod, "pontryagin")
    assert pont.module.log_size() == mod.log_size()


def test_pontryagin_dual_preserves_cardinality():
    ring = build_ring(3, 2, 1, (3,))
    rng = rng_for("pont")
    for _ in range(6):
        mod = random_module(ring, rng, ngens=1)
        pont = dualize(mod, "pontryagin")
        assert pont.module.log_size() == mod.log_size()


def test_exterior_square_of_free_rank_two():
    ring = build_ring(3, 1, 1, (3,))
    mod = free_module(ring, 2)
    ext = exterior_power(mod, 2)
    assert ext.is_free() and ext.free_rank() == 1


def test_bidual_image_of_basis_wedge_is_the_unit_ideal():
    ring = build_ring(3, 1, 1, (3,))
    mod = free_module(ring, 2)
    x = np.zeros(2 * mod.amb, dtype=np.int64)
    x[0] = 1                      # e_1
    x[mod.amb + ring.n] = 1       # e_2
    _, ideal = bidual_and_image(mod, 2, x)
    assert ideal.is_unit_ideal()


def test_canonical_bidual_hom_is_bijective_on_free_modules():
    ring = build_ring(3, 1, 1, (3,))
    for rank, r in [(1, 1), (2, 1), (2, 2)]:
        hom = canonical_bidual_hom(free_module(ring, rank), r)
        assert hom.is_bijective()


def test_tate_cohomology_of_induced_modules_vanishes():
    ring = build_ring(3, 1, 1, (9,))
    free = free_module(ring, 1)
    for order in (3, 9):
        assert tate_cohomology_cyclic(free, order) == (1, 1)
    # the trivial module Z/p over C_9 has full cohomology
    g = ring.group_elem([1])
    triv = present_module(ring, 1, [[(g - ring.one()) % ring.q]])
    h0, hm1 = tate_cohomology_cyclic(triv, 9)
    assert h0 == 3 and hm1 == 3


def test_yakovlev_roundtrip_simple():
    ring = build_ring(3, 1, 1, (9,))
    mult = {1: 2, 3: 1, 9: 1}
    mod = permutation_module(ring, mult)
    out = yakovlev_decompose(mod)
    assert out["multiplicities"] == mult
    assert out["epsilon_levels"] == []


def test_base_change_is_a_ring_map_on_elements():
    big = build_ring(3, 1, 1, (9,))
    small = build_ring(3, 1, 1, (3,))
    rng = rng_for("bc")
    for _ in range(10):
        a, b = random_elem(big, rng), random_elem(big, rng)
        assert np.array_equal(
            elem_base_change(big, small, big.mul(a, b)),
            small.mul(elem_base_change(big, small, a),
                      elem_base_change(big, small, b)))


def test_base_change_of_free_module_stays_free():
    big = build_ring(3, 2, 1, (9,))
    small = build_ring(3, 1, 1, (3,))
    mod = free_module(big, 2)
    down = base_change(mod, small)
    assert down.is_free() and down.free_rank() == 2
