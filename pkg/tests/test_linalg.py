"""Canonical-span algebra over Z/p^m: normal forms, kernels, preimages."""

import numpy as np
import pytest

from selstark import linalg
from tests.conftest import rng_for

CASES = [(3, 3), (9, 3), (25, 5), (27, 3)]


def random_matrix(rng, rows, cols, q):
    return np.array([[rng.randrange(q) for _ in range(cols)]
                     for _ in range(rows)], dtype=np.int64)


@pytest.mark.parametrize("q,p", CASES)
def test_howell_is_idempotent_and_canonical(q, p):
    rng = rng_for("howell", q)
    for _ in range(20):
        a = random_matrix(rng, rng.randrange(1, 5), 4, q)
        h = linalg.howell(a, q, p)
        assert np.array_equal(linalg.howell(h, q, p), h)
        # row-scrambled and row-augmented inputs give the same normal form
        rows = list(a)
        rng.shuffle(rows)
        extra = (a[0] + a[-1]) % q
        b = np.vstack(rows + [extra])
        assert np.array_equal(linalg.howell(b, q, p), h)


@pytest.mark.parametrize("q,p", CASES)
def test_span_membership_matches_enumeration(q, p):
    rng = rng_for("span", q)
    a = random_matrix(rng, 2, 2, q)
    h = linalg.howell(a, q, p)
    brute = {tuple((c0 * a[0] + c1 * a[1]) % q)
             for c0 in range(q) for c1 in range(q)}
    for v in brute:
        assert linalg.in_span(np.array(v), h, q, p)
    assert linalg.span_log_size(h, q, p) == round(np.log(len(brute))
                                                  / np.log(p))


@pytest.mark.parametrize("q,p", CASES)
def test_kernel_left_is_exact(q, p):
    rng = rng_for("kernel", q)
    for _ in range(10):
        a = random_matrix(rng, 3, 3, q)
        k = linalg.kernel_left(a, q, p)
        assert not (k @ a % q).any()
        # the kernel has the complementary cardinality
        im = linalg.howell(a, q, p)
        total = 3 * round(np.log(q) / np.log(p))
        assert linalg.span_log_size(k, q, p) + \
            linalg.span_log_size(im, q, p) == total


@pytest.mark.parametrize("q,p", CASES)
def test_solve_left_and_preimage(q, p):
    rng = rng_for("solve", q)
    for _ in range(10):
        a = random_matrix(rng, 2, 3, q)
        x = np.array([rng.randrange(q), rng.randrange(q)], dtype=np.int64)
        b = x @ a % q
        sol = linalg.solve_left(a, b, q, p)
        assert sol is not None
        assert np.array_equal(sol @ a % q, b)
        # preimage of the span of b contains x
        l = linalg.howell(b.reshape(1, -1), q, p)
        pre = linalg.preimage_span(a, l, q, p)
        assert linalg.in_span(x, pre, q, p)


@pytest.mark.parametrize("q,p", CASES)
def test_span_intersection(q, p):
    rng = rng_for("meet", q)
    a = linalg.howell(random_matrix(rng, 2, 3, q), q, p)
    b = linalg.howell(random_matrix(rng, 2, 3, q), q, p)
    meet = linalg.span_intersection(a, b, q, p)
    for row in meet:
        assert linalg.in_span(row, a, q, p)
        assert linalg.in_span(row, b, q, p)
    # anything in both spans lies in the intersection
    for row in a:
        if linalg.in_span(row, b, q, p):
            assert linalg.in_span(row, meet, q, p)


def test_enumerate_coset_reps_counts():
    q, p = 9, 3
    h = linalg.howell(np.array([[3, 0], [0, 1]], dtype=np.int64), q, p)
    reps = list(linalg.enumerate_coset_reps(h, q, p, 2))
    # ambient (Z/9)^2 has 81 elements, the span has 27
    assert len(reps) == 3
    seen = {tuple(linalg.reduce_vec(r, h, q, p)) for r in reps}
    assert len(seen) == 3
