import math
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from circlediffeo.errors import DepthExhaustedError, IndeterminatePrecisionError
from circlediffeo.number_theory import (
    IntervalBound,
    alpha_from_config,
    continued_fraction_expand,
    convergents_from_cf,
    exact_rational,
    find_lower_convergent,
    format_rational,
    is_lower_approximation,
    liouville_series,
    lower_approximant,
    parse_rational,
    reflect,
    theta_enclosure,
)


def partial_sum(base, m):
    # independent oracle: add the terms as Fractions one at a time
    s = Fraction(0)
    for k in range(1, m + 1):
        s += Fraction(1, base ** math.factorial(k))
    return s


def test_liouville_first_convergent():
    a = liouville_series(10)
    assert a.convergent(1) == Fraction(1, 10)
    assert a.convergent(1).denominator == 10


def test_liouville_third_convergent():
    a = liouville_series(10)
    c = a.convergent(3)
    assert c.denominator == 10 ** 6
    deep = partial_sum(10, 6)
    assert 0 < deep - c < Fraction(2, 10 ** 24)


def test_liouville_base_two():
    assert liouville_series(2).convergent(2) == Fraction(3, 4)


@pytest.mark.parametrize("base", [2, 3, 10])
def test_liouville_matches_partial_sums_and_tail_bound(base):
    a = liouville_series(base, terms=5)
    for m in range(1, 5):
        assert a.convergent(m) == partial_sum(base, m)
        gap = partial_sum(base, m + 2) - partial_sum(base, m)
        assert 0 < gap < a.error_bound(m)
        assert a.error_bound(m + 1) < a.error_bound(m)


def test_liouville_rejects_small_base():
    with pytest.raises(ValueError):
        liouville_series(1)


def test_lower_liouville_property_finite():
    a = liouville_series(10, terms=6)
    for N in range(1, 4):
        for m in range(N, 5):
            assert is_lower_approximation(a, a.convergent(m), N, 1)


def test_is_lower_approximation_examples():
    a = liouville_series(10)
    assert is_lower_approximation(a, Fraction(1, 10), 1, 1)
    assert not is_lower_approximation(a, a.convergent(1) + 1, 1, 1)
    with pytest.raises(IndeterminatePrecisionError):
        is_lower_approximation(a, a.convergent(6), 10, 1)


def test_find_lower_convergent_examples():
    a = liouville_series(10)
    assert find_lower_convergent(a, 1, 1, q_min=1) == Fraction(1, 10)
    assert find_lower_convergent(a, 2, 1, q_min=10).denominator == 100
    with pytest.raises(DepthExhaustedError) as exc:
        find_lower_convergent(a, 10 ** 9, 1, max_index=3)
    assert exc.value.index_reached == 3


def test_huge_order_decided_without_forming_q_power():
    a = liouville_series(10)
    assert not is_lower_approximation(a, a.convergent(2), 10 ** 12, 1)


def test_find_lower_convergent_monotone():
    a = liouville_series(10)
    prev = 0
    for N in (1, 2, 3, 4):
        q = find_lower_convergent(a, N, 1).denominator
        assert q >= prev
        prev = q


@pytest.mark.parametrize("x,cf", [("2/5", [0, 2, 2]), ("1/3", [0, 3]), ("7/1", [7])])
def test_continued_fraction_examples(x, cf):
    assert continued_fraction_expand(x) == cf


@settings(max_examples=200, deadline=None)
@given(st.integers(-10 ** 6, 10 ** 6), st.integers(1, 10 ** 6))
def test_continued_fraction_round_trip(p, q):
    x = Fraction(p, q)
    assert convergents_from_cf(continued_fraction_expand(x))[-1] == x


def test_theta_enclosure_exact_rational():
    a = exact_rational(Fraction(2, 5) + Fraction(1, 1000))
    enc = theta_enclosure(a, Fraction(2, 5))
    assert enc.width == 0 and enc.lo == Fraction(1, 200)


def test_theta_enclosure_zero_pq_is_alpha():
    a = liouville_series(10)
    enc = theta_enclosure(a, Fraction(0, 1))
    assert enc.lo < partial_sum(10, 7) < enc.hi


def test_theta_enclosure_liouville_second_convergent():
    a = liouville_series(10)
    enc = theta_enclosure(a, a.convergent(2))
    assert 0 < enc.lo and enc.hi <= Fraction(2, 10 ** 4)


def test_theta_accepts_unreduced_pair():
    a = liouville_series(2)
    p, q = lower_approximant(a, 256)
    assert (p, q) == (196, 256)
    enc = theta_enclosure(a, (p, q))
    assert 0 < enc.lo < enc.hi < Fraction(1, 10 ** 4)


def test_lower_approximant_is_below_alpha():
    a = liouville_series(10)
    for q in (3, 7, 113, 4096):
        p, _ = lower_approximant(a, q)
        assert Fraction(p, q) < partial_sum(10, 6) < Fraction(p + 1, q)


def test_reflect_and_config():
    a = liouville_series(10)
    b = reflect(a)
    assert b.side == "upper"
    assert b.convergent(3) == 1 - a.convergent(3)
    c = alpha_from_config({"kind": "reflected", "inner": a.to_json()})
    assert c.convergent(2) == b.convergent(2)
    assert alpha_from_config({"kind": "exact_rational", "value": "3/7"}).approx() == Fraction(3, 7)
    with pytest.raises(ValueError):
        alpha_from_config({"kind": "nope"})


def test_rational_text_round_trip():
    assert parse_rational(format_rational(Fraction(-6, 4))) == Fraction(-3, 2)
    b = IntervalBound(Fraction(1, 3), Fraction(1, 2))
    assert IntervalBound.from_json(b.to_json()) == b
    with pytest.raises(ValueError):
        IntervalBound(Fraction(1), Fraction(0))
