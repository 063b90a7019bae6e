"""Synthetic Selmer instances: validation, core rank, core vertices."""

import pytest

from selstark.generate import GenerationError, generate_instance
from selstark.selmer import (cartesian_check, core_rank,
                             core_vertex_certificate, core_vertex_search,
                             theorem_free_report, validate_instance)


def test_cartesian_recipe_basics():
    inst = generate_instance("cartesian", seed=1, verify=False)
    checks = validate_instance(inst)
    assert checks["ok"], checks
    assert cartesian_check(inst)["cartesian"]
    chi = core_rank(inst)
    assert chi["matches_declared"]
    search = core_vertex_search(inst)
    assert search["found"]
    assert search["core_vertices"][0]["nu"] == 0


def test_core_vertex_depth_recipe_needs_auxiliary_labels():
    inst = generate_instance("core-vertex-depth", seed=2, delta=1,
                             core_ranks=(2, 1), cond_ranks=(1, 1),
                             verify=False)
    assert not core_vertex_certificate(inst, ())["is_core_vertex"]
    search = core_vertex_search(inst)
    assert search["found"]
    assert search["core_vertices"][0]["nu"] == 1


def test_non_cartesian_recipe_has_no_core_vertex_within_depth():
    inst = generate_instance("non-cartesian", seed=3, verify=False)
    assert not cartesian_check(inst)["cartesian"]
    assert not core_vertex_search(inst)["found"]
    assert core_rank(inst)["matches_declared"]


def test_core_vertex_rank_formula():
    inst = generate_instance("core-vertex-depth", seed=4, delta=2,
                             core_ranks=(2, 2), cond_ranks=(1, 1),
                             aux_count=2, depth=2, verify=False)
    search = core_vertex_search(inst)
    assert search["found"]
    cert = search["core_vertices"][0]
    chi = core_rank(inst)["core_rank"]
    assert cert["selmer_rank"] == chi + cert["nu"]
    assert cert["rank_formula_ok"]


def test_theorem_free_report_is_consistent():
    inst = generate_instance("cartesian", seed=5, verify=False)
    out = theorem_free_report(inst)
    assert out["validation_ok"]
    assert out["core_vertex_found"]
    assert out["equivalences-consistent"]


def test_generation_rejects_inconsistent_parameters():
    with pytest.raises(GenerationError):
        generate_instance("core-vertex-depth", seed=6, delta=3,
                          core_ranks=(4, 1), cond_ranks=(1, 1), aux_count=2)
    with pytest.raises(GenerationError):
        generate_instance("unknown-recipe", seed=7)


def test_generation_is_deterministic():
    a = generate_instance("cartesian", seed=8, verify=False)
    b = generate_instance("cartesian", seed=8, verify=False)
    for name in a.tiers:
        ta, tb = a.tiers[name], b.tiers[name]
        for key in ta.glob:
            assert (ta.glob[key].module.span == tb.glob[key].module.span).all()
