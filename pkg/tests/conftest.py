"""Shared helpers for the test suite: seeded random rings, modules, and
elements at desk scale."""

import random

import numpy as np
import pytest

from selstark.modules import FPModule, present_module
from selstark.rings import RingHandle, build_ring


def rng_for(*tag) -> random.Random:
    return random.Random(repr(tag))


def random_elem(ring: RingHandle, rng: random.Random) -> np.ndarray:
    return np.array([rng.randrange(ring.q) for _ in range(ring.n)],
                    dtype=np.int64)


def random_unit(ring: RingHandle, rng: random.Random) -> np.ndarray:
    while True:
        x = random_elem(ring, rng)
        if ring.is_unit(x):
            return x


def random_module(ring: RingHandle, rng: random.Random, ngens: int | None = None,
                  ncols: int | None = None) -> FPModule:
    """Finitely presented module with a random relation matrix."""
    if ngens is None:
        ngens = rng.randrange(1, 3)
    if ncols is None:
        ncols = rng.randrange(1, ngens + 2)
    cols = [[random_elem(ring, rng) for _ in range(ngens)]
            for _ in range(ncols)]
    return present_module(ring, ngens, cols)


SMALL_RINGS = [
    (3, 1, 1, (3,)),
    (3, 2, 1, (3,)),
    (3, 1, 1, ()),
    (5, 1, 1, (5,)),
]


@pytest.fixture(scope="session")
def rings():
    return {params: build_ring(*params) for params in SMALL_RINGS}
