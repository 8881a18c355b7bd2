"""Invariant measures on the circle as histograms, masses of arc families,
and a lower box dimension estimator built on exact epsilon-dense counts."""
from __future__ import annotations

import bisect
import csv
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import mpmath
import numpy as np

from . import circle_maps as cm
from .circle_maps import CircleInterval, CircleMapExpr
from .errors import EpsilonBelowResolutionError, MalformedCertificateError


@dataclass
class MeasureHistogram:
    """Probability masses on the bins ``[i/B, (i+1)/B)``.

    ``conjugacy`` is set when the measure is ``H_* Leb``; it lets arc masses
    be computed exactly instead of by proration.
    """

    bins: int
    mass: np.ndarray
    conjugacy: Optional[CircleMapExpr] = None

    def __post_init__(self):
        self.mass = np.asarray(self.mass, dtype=float)
        if self.bins < 2 or self.mass.shape != (self.bins,):
            raise ValueError("mass must have one entry per bin, bins >= 2")
        if np.any(self.mass < 0):
            raise ValueError("negative mass")

    @property
    def edges(self) -> np.ndarray:
        return np.arange(self.bins + 1) / self.bins

    def cdf(self, x) -> np.ndarray:
        """Piecewise-linear distribution function on [0, 1]."""
        cum = np.concatenate([[0.0], np.cumsum(self.mass)])
        return np.interp(x, self.edges, cum)

    def arc_mass(self, left, right) -> np.ndarray:
        left = np.mod(np.asarray(left, dtype=float), 1.0)
        length = np.mod(np.asarray(right, dtype=float) - left, 1.0)
        right = left + length
        wrap = right > 1.0
        m = self.cdf(np.minimum(right, 1.0)) - self.cdf(left)
        return np.where(wrap, m + self.cdf(right - 1.0), m)

    def to_csv(self, path):
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["bin_index", "left_endpoint", "mass"])
            for i, m in enumerate(self.mass):
                w.writerow([i, repr(i / self.bins), repr(float(m))])


def uniform(bins: int) -> MeasureHistogram:
    return MeasureHistogram(bins, np.full(bins, 1.0 / bins))


def tv_distance(mu: MeasureHistogram, nu: MeasureHistogram) -> float:
    if mu.bins != nu.bins:
        raise ValueError("histograms have different resolutions")
    return 0.5 * float(np.sum(np.abs(mu.mass - nu.mass)))


def downbin(mu: MeasureHistogram, factor: int) -> MeasureHistogram:
    if mu.bins % factor:
        raise ValueError("factor must divide the bin count")
    return MeasureHistogram(mu.bins // factor, mu.mass.reshape(-1, factor).sum(axis=1))


# ---------------------------------------------------------------------------
# constructions

def pushforward_lebesgue(H: CircleMapExpr, bins: int) -> MeasureHistogram:
    """``H_* Leb``: bin masses are lengths of ``H^-1`` images of the bins."""
    if bins < 2:
        raise ValueError("bins must be >= 2")
    y = cm.lift_eval(cm.inverse(H), np.arange(bins + 1) / bins)
    mass = np.diff(y)
    mass = np.maximum(mass, 0.0)
    return MeasureHistogram(bins, mass / mass.sum(), conjugacy=H)


def birkhoff_histogram(f: CircleMapExpr, x0: float, iterations: int, bins: int,
                       discard: int = 0) -> MeasureHistogram:
    """Normalized visit counts of an orbit (after ``discard`` transient steps)."""
    from .dynamics import orbit_points

    if iterations < bins:
        raise ValueError("iterations must be >= bins")
    pts = orbit_points(f, x0, iterations + discard)[discard:]
    idx = np.minimum((pts * bins).astype(np.int64), bins - 1)
    counts = np.bincount(idx, minlength=bins)
    return MeasureHistogram(bins, counts / counts.sum())


def push_histogram(mu: MeasureHistogram, f: CircleMapExpr) -> MeasureHistogram:
    """``f_* mu`` at the same resolution: ``mu(f^-1 B_i)`` with prorated bins."""
    y = cm.lift_eval(cm.inverse(f), mu.edges)
    y0 = np.floor(y[0])
    y = y - y0
    whole = np.floor(y)
    cum = whole + mu.cdf(y - whole)
    mass = np.maximum(np.diff(cum), 0.0)
    return MeasureHistogram(mu.bins, mass / mass.sum())


def calibration_measure(kind: str, bins: int) -> MeasureHistogram:
    """Reference measures with known dimension: uniform, atomic, cantor."""
    if kind == "uniform":
        return uniform(bins)
    if kind == "atomic":
        mass = np.zeros(bins)
        mass[bins // 3] = 1.0
        return MeasureHistogram(bins, mass)
    if kind == "cantor":
        depth = round(math.log(bins, 3))
        if 3 ** depth != bins:
            raise ValueError("cantor calibration needs bins = 3**depth")
        mass = np.ones(1)
        for _ in range(depth):
            nxt = np.zeros(3 * mass.size)
            nxt[0::3] = mass / 2
            nxt[2::3] = mass / 2
            mass = nxt
        return MeasureHistogram(bins, mass)
    raise ValueError(f"unknown calibration measure {kind!r}")


# ---------------------------------------------------------------------------
# interval families

@dataclass
class IntervalFamily:
    """Disjoint arcs ``[left_i, right_i]`` in cyclic order."""

    intervals: list

    def __post_init__(self):
        if not self.intervals:
            raise MalformedCertificateError("empty interval family")
        ok, why = cyclic_order_check([iv.left for iv in self.intervals],
                                     [iv.right for iv in self.intervals])
        if not ok:
            raise MalformedCertificateError(why)

    @property
    def lefts(self):
        return [iv.left for iv in self.intervals]

    @property
    def rights(self):
        return [iv.right for iv in self.intervals]

    def total_length(self) -> float:
        return float(sum((iv.right - iv.left) % 1 for iv in self.intervals))

    def max_length(self):
        return max((iv.right - iv.left) % 1 for iv in self.intervals)


def cyclic_order_check(lefts: Sequence, rights: Sequence, rel_tol: float = 1e-9):
    """``c_1 < d_1 < c_2 < ... < d_k < c_1`` in cyclic order."""
    k = len(lefts)
    if k != len(rights) or k == 0:
        return False, "mismatched endpoint lists"
    total = 0
    for i in range(k):
        c, d, c_next = lefts[i], rights[i], lefts[(i + 1) % k]
        length = (d - c) % 1
        gap = (c_next - d) % 1
        if not length > 0:
            return False, f"interval {i} is empty or reversed"
        if not gap > 0 and k > 1:
            return False, f"interval {i} touches or overlaps its successor"
        total += length + gap
    if abs(float(total) - 1.0) > rel_tol:
        return False, f"points wind {float(total):.6g} times around the circle"
    return True, ""


def certificate_family(cert) -> IntervalFamily:
    return IntervalFamily([CircleInterval(c, d) for c, d in zip(cert.c, cert.d)])


def family_mass(mu: MeasureHistogram, fam: IntervalFamily) -> float:
    """``mu(union of arcs)``; exact through ``H^-1`` when ``mu = H_* Leb``, else prorated."""
    lefts, rights = fam.lefts, fam.rights
    high = any(isinstance(v, mpmath.mpf) for v in lefts + rights)
    if mu.conjugacy is not None:
        Hinv = cm.inverse(mu.conjugacy)
        if high:
            shortest = min(abs((r - l) % 1) for l, r in zip(lefts, rights))
            dps = max(30, int(-mpmath.log10(shortest)) + 25) if shortest > 0 else 60
            with mpmath.workdps(dps):
                L = cm._MP.asarray(np.array(lefts, dtype=object))
                R = L + cm._MP.asarray(np.array([(r - l) % 1 for l, r in zip(lefts, rights)],
                                                dtype=object))
                m = cm.lift_eval(Hinv, R, backend="mp") - cm.lift_eval(Hinv, L, backend="mp")
                total = float(mpmath.fsum(m))
        else:
            L = np.array(lefts, dtype=float)
            R = L + np.mod(np.array(rights, dtype=float) - L, 1.0)
            total = float(np.sum(cm.lift_eval(Hinv, R) - cm.lift_eval(Hinv, L)))
    else:
        total = float(np.sum(mu.arc_mass(np.array(lefts, dtype=float),
                                         np.array(rights, dtype=float))))
    return min(1.0, max(0.0, total))


# ---------------------------------------------------------------------------
# dimension

@dataclass
class DimensionEstimate:
    epsilons: list
    counts: list
    slope: float
    intercept: float
    mass_threshold: float
    selected_mass: float
    bins: int

    def to_json(self) -> dict:
        return {
            "bins": self.bins,
            "mass_threshold": self.mass_threshold,
            "selected_mass": self.selected_mass,
            "table": [{"epsilon": e, "N": n} for e, n in zip(self.epsilons, self.counts)],
            "slope": self.slope,
            "intercept": self.intercept,
        }


def default_epsilons(bins: int) -> list:
    out = []
    k = 2
    while 2.0 ** -k >= 2.0 / bins:
        out.append(2.0 ** -k)
        k += 1
    return out


def heaviest_bins(mu: MeasureHistogram, mass_threshold: float) -> np.ndarray:
    """Smallest heaviest-first prefix of bins with total mass > threshold (sorted indices)."""
    order = np.argsort(-mu.mass, kind="stable")
    cum = np.cumsum(mu.mass[order])
    k = int(np.searchsorted(cum, mass_threshold, side="right")) + 1
    return np.sort(order[:min(k, mu.bins)])


def bin_runs(indices: np.ndarray, bins: int) -> list:
    """Merge selected bins into maximal arcs ``(a, b)`` (circle, cyclic order)."""
    if len(indices) == 0:
        return []
    if len(indices) == bins:
        return [(0.0, 1.0)]
    idx = np.asarray(indices)
    breaks = np.nonzero(np.diff(idx) > 1)[0]
    starts = np.concatenate([[idx[0]], idx[breaks + 1]])
    ends = np.concatenate([idx[breaks], [idx[-1]]]) + 1
    runs = [(s / bins, e / bins) for s, e in zip(starts, ends)]
    if len(runs) > 1 and idx[0] == 0 and idx[-1] == bins - 1:
        a, _ = runs.pop()
        _, b = runs.pop(0)
        runs.append((a, b + 1.0))
    return runs


def covering_number(runs: list, eps: float) -> int:
    """Minimal size of an ``eps``-dense subset of a finite union of arcs.

    The circle is cut at the widest gap; the line problem is solved by the
    greedy rule (cover the leftmost uncovered point by the rightmost admissible
    center).
    """
    if not runs:
        return 0
    if len(runs) == 1 and runs[0][1] - runs[0][0] >= 1.0:
        return math.ceil(1.0 / (2 * eps) - 1e-12)
    runs = sorted(((a % 1.0, (a % 1.0) + (b - a)) for a, b in runs))
    gaps = [(runs[(i + 1) % len(runs)][0] - runs[i][1]) % 1.0 for i in range(len(runs))]
    cut = int(np.argmax(gaps))
    ordered = runs[cut + 1:] + [(a + 1.0, b + 1.0) for a, b in runs[:cut + 1]]
    A = [a for a, _ in ordered]
    Bs = [b for _, b in ordered]
    count = 0
    cov = -math.inf
    k = 0
    n = len(ordered)
    while True:
        while k < n and Bs[k] <= cov:
            k += 1
        if k == n:
            return count
        z = max(A[k], cov)
        # steps that stay inside this arc advance by exactly 2 eps
        full = math.floor((Bs[k] - z + eps) / (2 * eps) + 1e-12)
        if full >= 1:
            count += full
            cov = z + 2 * eps * full
            continue
        target = z + eps
        j = bisect.bisect_right(A, target) - 1
        s = min(Bs[j], target)
        cov = s + eps
        count += 1


def lower_box_dimension(mu: MeasureHistogram, mass_threshold: float = 0.9,
                        epsilons: Optional[Sequence[float]] = None) -> DimensionEstimate:
    """Slope of ``log N(eps)`` against ``log(1/eps)`` for the heaviest-bin support."""
    if not 0 < mass_threshold < 1:
        raise ValueError("mass_threshold must lie in (0, 1)")
    eps = list(default_epsilons(mu.bins) if epsilons is None else epsilons)
    if len(eps) < 2:
        raise ValueError("need at least two scales")
    eps = sorted((float(e) for e in eps), reverse=True)
    if len(set(eps)) != len(eps):
        raise ValueError("epsilons must be distinct")
    for e in eps:
        if not 0 < e <= 0.5:
            raise ValueError(f"epsilon {e} outside (0, 1/2]")
        if e < 2.0 / mu.bins - 1e-15:
            raise EpsilonBelowResolutionError(f"epsilon {e} below resolution 2/{mu.bins}")
    sel = heaviest_bins(mu, mass_threshold)
    runs = bin_runs(sel, mu.bins)
    counts = [covering_number(runs, e) for e in eps]
    x = np.log(1.0 / np.array(eps))
    y = np.log(np.array(counts, dtype=float))
    slope, intercept = np.polyfit(x, y, 1)
    return DimensionEstimate(eps, counts, float(slope), float(intercept), float(mass_threshold),
                             float(mu.mass[sel].sum()), mu.bins)
