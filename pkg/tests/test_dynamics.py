import csv
import math
from fractions import Fraction

import numpy as np
import pytest

from circlediffeo.circle_maps import Compose, Inverse, MoebiusHat, Rotation
from circlediffeo.dynamics import (
    brute_force_counts,
    closed_form_counts,
    exit_count,
    orbit,
    orbit_points,
    return_count,
    rotation_number,
)
from circlediffeo.errors import EnclosureTooWideError
from circlediffeo.number_theory import IntervalBound
from exprgen import conjugators


def naive_stay(theta, length):
    # oracle: walk j = 1, 2, ... until j * theta reaches the length
    k = 0
    while (k + 1) * theta < length:
        k += 1
    return k


def naive_leave(theta, gap):
    k = 1
    while k * theta <= gap:
        k += 1
    return k


def test_rotation_number_of_rigid_rotation():
    assert rotation_number(Rotation(Fraction(2, 5)))[0] == Fraction(2, 5)
    assert rotation_number(Rotation(Fraction(2, 5)), fast_forward=False)[0] == Fraction(2, 5)


def test_rotation_number_irrational_estimate():
    alpha = (math.sqrt(5) - 1) / 2
    est, err = rotation_number(Rotation(alpha), max_iter=5000, fast_forward=False)
    assert abs(est - alpha) <= err


def test_rotation_number_zero_for_moebius():
    assert rotation_number(MoebiusHat(a=0.9), fast_forward=False, max_iter=200)[0] == 0


def test_rotation_number_rejects_tiny_budget():
    with pytest.raises(ValueError):
        rotation_number(Rotation(0.1), max_iter=5)


def test_rotation_number_of_conjugates_by_period_detection():
    rng = np.random.default_rng(0)
    for H in conjugators(7, 100):
        q = int(rng.integers(2, 30))
        pq = Fraction(int(rng.integers(0, q)), q)
        f = Compose((H, Rotation(pq), Inverse(H)))
        got, err = rotation_number(f, fast_forward=False, max_iter=500, tol=1e-9)
        assert got == pq and err == 0
        assert rotation_number(f)[0] == pq


def test_fast_forward_irrational_conjugate():
    H = conjugators(3, 1)[0]
    alpha = Fraction(10 ** 12 + 1, 3 * 10 ** 12)
    est, err = rotation_number(Compose((H, Rotation(alpha), Inverse(H))))
    assert abs(est - float(alpha)) <= err


def test_orbit_fast_forward_agrees_with_direct():
    H = MoebiusHat(a=0.6)
    f = Compose((H, Rotation(Fraction(3, 11)), Inverse(H)))
    a = orbit(f, 0.2, 50)
    b = orbit(f, 0.2, 50, fast_forward=True)
    assert np.max(np.abs(a.lifts - b.lifts)) < 1e-9
    assert np.allclose(orbit_points(f, 0.2, 50), b.points, atol=1e-9)


def test_orbit_csv(tmp_path):
    s = orbit(Rotation(Fraction(1, 4)), 0.1, 8)
    s.to_csv(tmp_path / "orbit.csv")
    rows = list(csv.reader(open(tmp_path / "orbit.csv")))
    assert rows[0] == ["step", "x", "lift_track"]
    assert len(rows) == 10
    assert float(rows[-1][2]) == pytest.approx(2.0)


def test_counts_examples():
    assert return_count(Fraction(1, 100), Fraction(1, 10)) == 9
    assert exit_count(Fraction(1, 100), Fraction(1, 10)) == 11
    assert return_count(Fraction(3, 1000), Fraction(1, 100)) == 3
    with pytest.raises(ValueError):
        return_count(0, Fraction(1, 2))


def test_counts_enclosure_too_wide():
    theta = IntervalBound(Fraction(99, 10000), Fraction(101, 10000))
    with pytest.raises(EnclosureTooWideError):
        return_count(theta, Fraction(1, 10))
    assert return_count(theta, Fraction(1, 30)) == 3


def test_brute_force_agrees_with_closed_form_on_rotations():
    rng = np.random.default_rng(2024)
    checked = 0
    while checked < 1000:
        theta = float(rng.uniform(0.01, 0.1))
        c = float(rng.uniform(0, 1))
        length = float(rng.uniform(0.02, 0.4))
        gap = float(rng.uniform(0.02, 0.4))
        # skip boundary hits, where float rounding decides the event
        ks = np.arange(1, 60)
        if np.min(np.abs(ks * theta - length)) < 1e-9 or np.min(np.abs(ks * theta - gap)) < 1e-9:
            continue
        d = (c + length) % 1.0
        c_next = (d + gap) % 1.0
        bf = brute_force_counts(Rotation(theta), 1, c, d, c_next)
        cf = closed_form_counts(theta, length=d - c if d > c else d - c + 1,
                                gap=c_next - d if c_next > d else c_next - d + 1)
        assert (bf.m, bf.l) == (cf.m, cf.l)
        assert bf.m == naive_stay(theta, length) and bf.l == naive_leave(theta, gap)
        checked += 1
