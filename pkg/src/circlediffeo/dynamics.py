"""Orbits, rotation numbers, and the return/exit counts of a rotation on an arc."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Union

import numpy as np

from . import circle_maps as cm
from .circle_maps import CircleMapExpr
from .errors import BudgetExceededError, EnclosureTooWideError
from .number_theory import IntervalBound

PERIOD_WINDOW = 64


@dataclass
class OrbitSample:
    start: float
    step_map: CircleMapExpr
    points: np.ndarray
    lifts: np.ndarray

    @property
    def lift_track(self) -> float:
        return float(self.lifts[-1] - self.start) if len(self.lifts) else 0.0

    def to_csv(self, path):
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["step", "x", "lift_track"])
            w.writerow([0, repr(float(self.start) % 1.0), "0.0"])
            for k, (x, y) in enumerate(zip(self.points, self.lifts), start=1):
                w.writerow([k, repr(float(x)), repr(float(y - self.start))])


def _ff_lift(H: CircleMapExpr, angle, y0: np.ndarray, k) -> np.ndarray:
    """Lift of ``H(y0 + k * angle)`` with the integer part of ``k * angle`` split off exactly."""
    k = np.asarray(k)
    if isinstance(angle, Fraction):
        num, den = angle.numerator, angle.denominator
        # k * angle = whole + frac, whole integral; exact for any Python int k
        kk = [int(v) for v in np.atleast_1d(k).ravel()]
        whole = np.array([(v * num) // den for v in kk], dtype=float).reshape(np.shape(k))
        frac = np.array([float(Fraction((v * num) % den, den)) for v in kk]).reshape(np.shape(k))
    else:
        t = k * float(angle)
        whole = np.floor(t)
        frac = t - whole
    return cm.lift_eval(H, y0 + frac) + whole


def orbit(expr: CircleMapExpr, x0: float, steps: int, fast_forward: bool = False) -> OrbitSample:
    """``steps`` iterates of ``expr`` from ``x0`` with lift tracking."""
    if steps < 1:
        raise ValueError("steps must be >= 1")
    x0 = float(x0)
    conj = cm.as_conjugate(expr) if fast_forward else None
    if conj is not None:
        H, angle = conj
        y0 = cm.lift_eval(cm.inverse(H), np.array([x0]))
        lifts = _ff_lift(H, angle, np.full(steps, y0[0]), np.arange(1, steps + 1))
    else:
        lifts = np.empty(steps)
        x = np.array([x0])
        for k in range(steps):
            x = cm.lift_eval(expr, x)
            lifts[k] = x[0]
    return OrbitSample(x0, expr, cm.mod1(lifts), lifts)


def orbit_points(expr: CircleMapExpr, x0: float, steps: int) -> np.ndarray:
    """Orbit points mod 1, using the conjugacy structure when available."""
    return orbit(expr, x0, steps, fast_forward=True).points


def _detect_period(lifts: np.ndarray, x0: float, tol: float) -> Optional[Fraction]:
    """Smallest-window recurrence ``x_k - x_i = j`` that persists over the rest of the orbit."""
    seq = np.concatenate([[x0], lifts])
    for k in range(1, len(seq)):
        lo = max(0, k - PERIOD_WINDOW)
        d = seq[k] - seq[lo:k]
        j = np.rint(d)
        for h in np.nonzero(np.abs(d - j) < tol)[0][::-1]:
            i = lo + int(h)
            P, shift = k - i, j[h]
            # a true period repeats; a near-return of a strongly contracted orbit does not
            rest = seq[i + P:] - seq[i:len(seq) - P]
            if len(rest) > P and np.all(np.abs(rest - shift) < tol):
                return Fraction(int(shift), P)
    return None


def rotation_number(expr: CircleMapExpr, max_iter: int = 10_000, tol: float = 1e-12,
                    x0: float = 0.0, fast_forward: bool = True,
                    ff_steps: int = 10 ** 12) -> tuple[Union[float, Fraction], float]:
    """Rotation number of the lift of ``expr`` and an error bound.

    A periodic orbit found within ``max_iter`` steps yields the exact rational
    with error 0.  Otherwise the estimate is ``(F^k(x0) - x0)/k`` with error
    ``1/k``.  For structural conjugates ``H R H^-1`` (with ``fast_forward``)
    the orbit is followed in the rotation coordinate, where periodicity is
    exact and the orbit can be fast-forwarded to ``k = ff_steps``; float
    orbits of strongly contracting conjugators are unreliable for this.
    """
    if max_iter < 10:
        raise ValueError("max_iter must be >= 10")
    conj = cm.as_conjugate(expr) if fast_forward else None
    if conj is not None:
        H, angle = conj
        y0 = cm.lift_eval(cm.inverse(H), np.array([float(x0)]))
        per = angle if isinstance(angle, Fraction) and angle.denominator <= max_iter else None
        if per is not None:
            # the orbit of y0 closes up after per.denominator steps
            q = per.denominator
            end = _ff_lift(H, angle, y0, np.array([q]))[0]
            if abs(end - x0 - per.numerator) < max(tol, 1e-9):
                return per, 0.0
        end = _ff_lift(H, angle, y0, np.array([ff_steps]))[0]
        k = ff_steps
        # float rounding of end is at most a few ulps of |end|
        err = 1.0 / k + 8 * np.finfo(float).eps * (abs(end) + 1) / k
        return float((end - x0) / k), float(err)
    sample = orbit(expr, x0, max_iter)
    per = _detect_period(sample.lifts, float(x0), tol)
    if per is not None:
        return per, 0.0
    return float(sample.lift_track / max_iter), 1.0 / max_iter


# ---------------------------------------------------------------------------
# return / exit counts

def _theta_bounds(theta) -> tuple[Fraction, Fraction]:
    if isinstance(theta, IntervalBound):
        return Fraction(theta.lo), Fraction(theta.hi)
    t = _to_fraction(theta)
    return t, t


def _to_fraction(x) -> Fraction:
    if isinstance(x, (Fraction, int, float)):
        return Fraction(x)
    if hasattr(x, "man_exp"):  # mpmath.mpf, converted exactly
        man, exp = x.man_exp
        return Fraction(int(man)) * Fraction(2) ** int(exp)
    return Fraction(float(x))


def _stay(length: Fraction, t: Fraction) -> int:
    # largest k >= 0 with k t < length
    return max(0, -((-length) // t) - 1)


def _leave(gap: Fraction, t: Fraction) -> int:
    # smallest k >= 1 with k t > gap
    return max(1, gap // t + 1)


def return_count(theta, interval_length) -> int:
    """Largest k with ``j * theta < interval_length`` for all ``1 <= j <= k``."""
    lo, hi = _theta_bounds(theta)
    if lo <= 0:
        raise ValueError("theta must be certified positive")
    length = _to_fraction(interval_length)
    if length <= 0:
        raise ValueError("interval_length must be positive")
    a, b = _stay(length, lo), _stay(length, hi)
    if a != b:
        raise EnclosureTooWideError(f"return count ambiguous: {b}..{a}")
    return int(a)


def exit_count(theta, gap_length) -> int:
    """Smallest k >= 1 with ``k * theta > gap_length``."""
    lo, hi = _theta_bounds(theta)
    if lo <= 0:
        raise ValueError("theta must be certified positive")
    gap = _to_fraction(gap_length)
    if gap < 0:
        raise ValueError("gap_length must be nonnegative")
    a, b = _leave(gap, lo), _leave(gap, hi)
    if a != b:
        raise EnclosureTooWideError(f"exit count ambiguous: {b}..{a}")
    return int(a)


@dataclass(frozen=True)
class ReturnExitCounts:
    m: int
    l: int  # noqa: E741
    method: str


def power_step(expr: CircleMapExpr, q: int, x, backend: str = "float"):
    """Lift of ``expr^q`` at ``x`` by q successive applications."""
    for _ in range(q):
        x = cm.lift_eval(expr, x, backend=backend)
    return x


def brute_force_counts(expr: CircleMapExpr, q: int, c: float, d: float, c_next: float,
                       k_max: int = 100_000) -> ReturnExitCounts:
    """Iterate ``g = expr^q``: stay count of c in (c, d), exit time of d from [d, c_next]."""
    if k_max < 1:
        raise ValueError("k_max must be >= 1")
    if (c_next - c) % 1 and not cm.in_open_arc(d, c, c_next):
        raise ValueError("points must be in cyclic order c < d < c_next")
    m = None
    x = np.array([float(c)])
    for k in range(1, k_max + 1):
        x = power_step(expr, q, x)
        if not cm.in_open_arc(float(x[0]) % 1.0, c, d):
            m = k - 1
            break
    l = None  # noqa: E741
    y = np.array([float(d)])
    for k in range(1, k_max + 1):
        y = power_step(expr, q, y)
        if not cm.in_closed_arc(float(y[0]) % 1.0, d, c_next):
            l = k  # noqa: E741
            break
    if m is None or l is None:
        raise BudgetExceededError(f"orbit events not observed within k_max={k_max}")
    return ReturnExitCounts(m, l, "brute_force")


def closed_form_counts(theta, length, gap) -> ReturnExitCounts:
    return ReturnExitCounts(return_count(theta, length), exit_count(theta, gap), "closed_form")


__all__ = [
    "OrbitSample", "ReturnExitCounts", "orbit", "orbit_points", "rotation_number",
    "return_count", "exit_count", "brute_force_counts", "closed_form_counts", "power_step",
]
