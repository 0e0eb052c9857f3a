import random
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from gramlab.polynomial import MultiPoly, random_fraction, random_poly


def polys(nvars=3, count=3):
    return st.integers(0, 2 ** 32).map(
        lambda seed: [random_poly(random.Random(seed + i), nvars, 3, 0.4) for i in range(count)])


def points(nvars=3):
    return st.lists(st.fractions(-3, 3, max_denominator=5), min_size=nvars, max_size=nvars)


@given(polys())
def test_ring_axioms(ps):
    p, q, r = ps
    assert p + q == q + p
    assert p * q == q * p
    assert (p * q) * r == p * (q * r)
    assert p * (q + r) == p * q + p * r
    assert (p - p).is_zero()


@given(polys(), points())
def test_evaluation_is_a_homomorphism(ps, pt):
    p, q, _ = ps
    assert (p * q).evaluate(pt) == p.evaluate(pt) * q.evaluate(pt)
    assert (p + q).evaluate(pt) == p.evaluate(pt) + q.evaluate(pt)


@given(polys())
def test_product_rule(ps):
    p, q, _ = ps
    for i in range(3):
        assert (p * q).diff(i) == p.diff(i) * q + p * q.diff(i)


@given(polys())
def test_mixed_partials_commute(ps):
    p = ps[0]
    assert p.diff(0).diff(2) == p.diff(2).diff(0)


def test_examples():
    x, y = MultiPoly.variable(2, 0), MultiPoly.variable(2, 1)
    p = x * x * y * 3 + Fraction(1, 2)
    assert p.diff(0) == x * y * 6
    assert p.degree() == 3
    assert p.evaluate([Fraction(1, 3), 2]) == Fraction(2, 3) + Fraction(1, 2)
    assert MultiPoly.linear([1, 2]) == x + y * 2
    with pytest.raises(ValueError):
        x + MultiPoly.variable(3, 0)


def test_random_fraction_range():
    rng = random.Random(1)
    vals = [random_fraction(rng, 5, 4) for _ in range(200)]
    assert all(abs(v) <= 5 and v.denominator <= 4 for v in vals)
