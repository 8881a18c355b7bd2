"""Exact rational machinery: convergent generators for irrationals, lower
rational approximations decided from certified tail bounds, and continued
fractions.

Rationals are :class:`fractions.Fraction`.  Every comparison involving the
irrational ``alpha`` is decided from a convergent and a rigorous error bound;
nothing here touches floating point.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Optional

from .errors import DepthExhaustedError, IndeterminatePrecisionError

Rational = Fraction

LOWER, UPPER, MIXED = "lower", "upper", "mixed"


def parse_rational(text) -> Fraction:
    if isinstance(text, Fraction):
        return text
    if isinstance(text, int):
        return Fraction(text)
    return Fraction(str(text).strip())


def format_rational(x: Fraction) -> str:
    x = Fraction(x)
    return f"{x.numerator}/{x.denominator}"


@dataclass(frozen=True)
class IntervalBound:
    lo: Fraction
    hi: Fraction

    def __post_init__(self):
        if self.lo > self.hi:
            raise ValueError(f"empty interval [{self.lo}, {self.hi}]")

    @property
    def width(self) -> Fraction:
        return self.hi - self.lo

    def __contains__(self, x) -> bool:
        return self.lo <= x <= self.hi

    def to_json(self) -> dict:
        return {"lo": format_rational(self.lo), "hi": format_rational(self.hi)}

    @classmethod
    def from_json(cls, d) -> "IntervalBound":
        return cls(parse_rational(d["lo"]), parse_rational(d["hi"]))


@dataclass(frozen=True, eq=False)
class AlphaRepr:
    """An irrational number known through convergents with certified errors.

    ``convergent(m)`` and ``error_bound(m)`` are defined for ``m >= 1``.
    ``depth`` is the index used to decide comparisons; ``max_index`` bounds
    the search for approximants.
    """

    convergent: Callable[[int], Fraction]
    error_bound: Callable[[int], Fraction]
    side: str
    depth: int
    max_index: int
    spec: dict = field(default_factory=dict)

    def bounds(self, depth: Optional[int] = None):
        """Return ``(lo, hi, lo_open, hi_open)`` with alpha in that interval."""
        m = self.depth if depth is None else depth
        c = self.convergent(m)
        e = self.error_bound(m)
        if self.side == LOWER:
            return c, c + e, True, False
        if self.side == UPPER:
            return c - e, c, False, True
        return c - e, c + e, False, False

    def approx(self, depth: Optional[int] = None) -> Fraction:
        return self.convergent(self.depth if depth is None else depth)

    def __float__(self) -> float:
        return float(self.approx())

    def to_json(self) -> dict:
        return dict(self.spec)


def liouville_series(base: int, terms: int = 6) -> AlphaRepr:
    """``alpha = sum_k base**(-k!)`` with partial sums as convergents.

    ``terms`` is both the decision depth and the search budget; index ``m``
    has denominator ``base**(m!)``.
    """
    if int(base) != base or base < 2:
        raise ValueError(f"base must be an integer >= 2, got {base!r}")
    if terms < 2:
        raise ValueError("terms must be >= 2")
    base = int(base)

    @lru_cache(maxsize=None)
    def convergent(m: int) -> Fraction:
        if m < 1:
            raise ValueError("convergent index starts at 1")
        den = base ** math.factorial(m)
        num = sum(base ** (math.factorial(m) - math.factorial(k)) for k in range(1, m + 1))
        return Fraction(num, den)

    @lru_cache(maxsize=None)
    def error_bound(m: int) -> Fraction:
        return Fraction(2, base ** math.factorial(m + 1))

    return AlphaRepr(convergent, error_bound, LOWER, depth=terms, max_index=terms,
                     spec={"kind": "factorial_series", "base": base, "terms": terms})


def exact_rational(value) -> AlphaRepr:
    """A rational stand-in for alpha (toy runs); all bounds have zero width."""
    v = parse_rational(value)
    return AlphaRepr(lambda m: v, lambda m: Fraction(0), MIXED, depth=1, max_index=1,
                     spec={"kind": "exact_rational", "value": format_rational(v)})


def reflect(alpha: AlphaRepr) -> AlphaRepr:
    """The image of alpha under x -> -x on R/Z, i.e. ``1 - alpha``.

    Turns an upper Liouville number into a lower one and vice versa.
    """
    side = {LOWER: UPPER, UPPER: LOWER}.get(alpha.side, alpha.side)
    spec = {"kind": "reflected", "inner": alpha.to_json()}
    return AlphaRepr(lambda m: 1 - alpha.convergent(m), alpha.error_bound, side,
                     depth=alpha.depth, max_index=alpha.max_index, spec=spec)


def alpha_from_config(cfg: dict) -> AlphaRepr:
    kind = cfg.get("kind")
    if kind == "factorial_series":
        return liouville_series(int(cfg["base"]), int(cfg.get("terms", 6)))
    if kind == "exact_rational":
        return exact_rational(cfg["value"])
    if kind == "reflected":
        return reflect(alpha_from_config(cfg["inner"]))
    raise ValueError(f"unknown alpha kind {kind!r}")


def _less(a: Fraction, b: Fraction) -> bool:
    # Fraction.__lt__ cross-multiplies without gcd work; keep it that way.
    return a.numerator * b.denominator < b.numerator * a.denominator


def _gap_less(a: Fraction, b: Fraction, tn: int, td: int) -> bool:
    """Decide ``a - b < tn/td`` by integer cross-multiplication."""
    lhs = (a.numerator * b.denominator - b.numerator * a.denominator) * td
    return lhs < tn * a.denominator * b.denominator


MAX_EXACT_BITS = 10 ** 7


def _log2(x: Fraction) -> float:
    return math.log2(x.numerator) - math.log2(x.denominator)


def _decide_below(alpha: AlphaRepr, pq: Fraction, depth: Optional[int]) -> bool:
    lo, hi, lo_open, _ = alpha.bounds(depth)
    if _less(pq, lo) or (lo_open and pq == lo):
        return True
    if not _less(pq, hi):
        return False
    raise IndeterminatePrecisionError(
        f"cannot decide {pq} < alpha from bounds at depth {depth or alpha.depth}")


def is_lower_approximation(alpha: AlphaRepr, pq, N: int, delta, depth: Optional[int] = None) -> bool:
    """True iff ``p/q < alpha`` and ``alpha - p/q < delta / q**N``.

    Raises :class:`IndeterminatePrecisionError` when the certified bounds at
    ``depth`` straddle either inequality.
    """
    if N < 1:
        raise ValueError("N must be >= 1")
    pq = parse_rational(pq)
    delta = parse_rational(delta)
    if delta <= 0:
        raise ValueError("delta must be positive")
    if not _decide_below(alpha, pq, depth):
        return False
    lo, hi, _, hi_open = alpha.bounds(depth)
    # decide on a log scale first: q**N may be far too large to form
    log_target = _log2(delta) - N * math.log2(pq.denominator)
    if lo > pq and _log2(lo - pq) > log_target + 1:
        return False
    if _log2(hi - pq) < log_target - 1:
        return True
    if N * math.log2(pq.denominator) > MAX_EXACT_BITS:
        raise IndeterminatePrecisionError(
            f"alpha - {pq} vs delta/q^{N} needs more than {MAX_EXACT_BITS} bits")
    tn, td = delta.numerator, delta.denominator * pq.denominator ** N
    if _gap_less(hi, pq, tn, td):
        return True
    if hi_open and (hi.numerator * pq.denominator - pq.numerator * hi.denominator) * td \
            == tn * hi.denominator * pq.denominator:
        return True
    if not _gap_less(lo, pq, tn, td):
        return False
    raise IndeterminatePrecisionError(
        f"cannot decide alpha - {pq} < delta/q^{N} at depth {depth or alpha.depth}")


def find_lower_convergent(alpha: AlphaRepr, N: int, delta, q_min: int = 1,
                          max_index: Optional[int] = None) -> Fraction:
    """First convergent ``p/q`` with ``q > q_min`` that is a lower
    approximation of order ``(N, delta)``.

    Candidates are indices ``1 .. min(max_index, depth - 1)``; the decision
    depth is ``alpha.depth``.
    """
    if alpha.side not in (LOWER, MIXED):
        raise ValueError("find_lower_convergent needs a lower (or exact) representation")
    if N < 1 or q_min < 1:
        raise ValueError("N and q_min must be >= 1")
    delta = parse_rational(delta)
    if delta <= 0:
        raise ValueError("delta must be positive")
    limit = alpha.max_index if max_index is None else max_index
    top = min(limit, alpha.depth - 1) if alpha.side == LOWER else min(limit, alpha.depth)
    m = 0
    for m in range(1, top + 1):
        cand = alpha.convergent(m)
        if cand.denominator <= q_min:
            continue
        if is_lower_approximation(alpha, cand, N, delta):
            return cand
    raise DepthExhaustedError(
        f"no convergent up to index {m} satisfies N={N}, q>{q_min}", index_reached=m)


def convergent_index(alpha: AlphaRepr, pq: Fraction) -> Optional[int]:
    for m in range(1, alpha.depth + 1):
        if alpha.convergent(m) == pq:
            return m
    return None


def floor_q_alpha(alpha: AlphaRepr, q: int, depth: Optional[int] = None) -> int:
    """``floor(q * alpha)`` decided from certified bounds."""
    lo, hi, _, hi_open = alpha.bounds(depth)
    a = math.floor(q * lo)
    top = q * hi
    if top < a + 1 or (hi_open and top == a + 1):
        return a
    raise IndeterminatePrecisionError(f"floor({q}*alpha) undecidable at this depth")


def lower_approximant(alpha: AlphaRepr, q: int) -> tuple[int, int]:
    """Largest ``p`` with ``p/q < alpha``; returns ``(p, q)`` unreduced."""
    p = floor_q_alpha(alpha, q)
    lo, hi, _, _ = alpha.bounds()
    if hi == lo and Fraction(p, q) == lo:
        p -= 1
    return p, q


def theta_enclosure(alpha: AlphaRepr, pq, depth: Optional[int] = None,
                    max_width=None) -> IntervalBound:
    """Certified enclosure of ``q*alpha - p``.

    ``pq`` may be a Fraction or an unreduced ``(p, q)`` pair.
    """
    if isinstance(pq, tuple):
        p, q = pq
    else:
        pq = parse_rational(pq)
        p, q = pq.numerator, pq.denominator
    if q < 1:
        raise ValueError("denominator must be >= 1")
    lo, hi, _, _ = alpha.bounds(depth)
    enc = IntervalBound(q * lo - p, q * hi - p)
    if max_width is not None and enc.width > parse_rational(max_width):
        raise IndeterminatePrecisionError(f"enclosure width {float(enc.width):.3g} exceeds {max_width}")
    return enc


def continued_fraction_expand(x, depth: int = 64) -> list[int]:
    if depth < 1:
        raise ValueError("depth must be >= 1")
    x = parse_rational(x)
    out = []
    num, den = x.numerator, x.denominator
    while len(out) < depth:
        a, r = divmod(num, den)
        out.append(a)
        if r == 0:
            break
        num, den = den, r
    return out


def convergents_from_cf(coeffs: list[int]) -> list[Fraction]:
    h0, h1 = 0, 1
    k0, k1 = 1, 0
    out = []
    for a in coeffs:
        h0, h1 = h1, a * h1 + h0
        k0, k1 = k1, a * k1 + k0
        out.append(Fraction(h1, k1))
    return out
