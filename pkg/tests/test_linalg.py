import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from treepile import linalg


def gauss_solve(a, b):
    """Plain Fraction Gauss-Jordan, used as an oracle."""
    n = len(a)
    m = [[Fraction(v) for v in row] + [Fraction(bv)] for row, bv in zip(a, b)]
    for k in range(n):
        piv = next((i for i in range(k, n) if m[i][k]), None)
        if piv is None:
            return None
        m[k], m[piv] = m[piv], m[k]
        for i in range(n):
            if i != k and m[i][k]:
                f = m[i][k] / m[k][k]
                m[i] = [x - f * y for x, y in zip(m[i], m[k])]
    return [m[i][n] / m[i][i] for i in range(n)]


def leibniz_det(a):
    from itertools import permutations

    n = len(a)
    total = 0
    for perm in permutations(range(n)):
        inv = sum(1 for i in range(n) for j in range(i + 1, n) if perm[i] > perm[j])
        total += (-1) ** inv * math.prod(a[i][perm[i]] for i in range(n))
    return total


square = st.integers(1, 5).flatmap(
    lambda n: st.lists(st.lists(st.integers(-6, 6), min_size=n, max_size=n), min_size=n, max_size=n)
)


@given(square)
@settings(max_examples=60, deadline=None)
def test_bareiss_det_matches_leibniz(a):
    assert linalg.bareiss_det(a) == leibniz_det(a)


@given(square, st.data())
@settings(max_examples=60, deadline=None)
def test_bareiss_solve_matches_gauss(a, data):
    n = len(a)
    b = data.draw(st.lists(st.integers(-5, 5), min_size=n, max_size=n))
    assert linalg.bareiss_solve(a, b) == gauss_solve(a, b)


def test_bareiss_solve_rationals():
    a = [[Fraction(1, 2), Fraction(1, 3)], [Fraction(1, 4), 1]]
    x = linalg.bareiss_solve(a, [1, 2])
    assert [sum(r * v for r, v in zip(row, x)) for row in a] == [1, 2]


def test_primes():
    ps = linalg.primes_below(21, 3)
    assert len(set(ps)) == 3
    assert all(linalg.is_prime(p) and p < 2**21 for p in ps)
    assert [n for n in range(30) if linalg.is_prime(n)] == [2, 3, 5, 7, 11, 13, 17, 19, 23, 29]


def test_rational_reconstruction():
    m = 10007 * 10009
    q = Fraction(-37, 91)
    u = q.numerator * pow(q.denominator, -1, m) % m
    assert linalg.rational_reconstruction(u, m) == q


def test_dixon_solve_random():
    rng = np.random.default_rng(5)
    for n in (1, 4, 20, 70):
        a = rng.integers(-9, 10, size=(n, n))
        b = rng.integers(-9, 10, size=n)
        a_list = a.tolist()

        def verify(nums, d):
            return all(sum(x * y for x, y in zip(row, nums)) == d * bv for row, bv in zip(a_list, b.tolist()))

        nums, d = linalg.dixon_solve(a, b, verify)
        if n <= 20:
            assert [Fraction(v, d) for v in nums] == gauss_solve(a_list, b.tolist())
        assert verify(nums, d)


def test_dixon_singular():
    a = np.array([[1, 2], [2, 4]])
    assert linalg.dixon_solve(a, np.array([1, 1]), lambda *_: True) is None


@pytest.mark.parametrize("n", [1, 2, 5, 9])
def test_charpoly_integer_matches_numpy_roots(n):
    rng = np.random.default_rng(n)
    c = rng.integers(-4, 5, size=(n, n))
    coeffs = linalg.charpoly_integer(c, bound_bits=4 * n + 16)
    assert coeffs[-1] == 1
    if n <= 5:
        assert coeffs[0] == (-1) ** n * leibniz_det(c.tolist())
    assert np.allclose(coeffs, np.poly(c)[::-1], atol=1e-6 * max(1, np.abs(np.poly(c)).max()))


def test_crt_pair():
    r, m = linalg.crt_pair(2, 3, 3, 5)
    assert (m, r % 3, r % 5) == (15, 2, 3)
