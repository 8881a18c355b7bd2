"""Circle maps as immutable expression trees.

Every expression denotes an orientation-preserving diffeomorphism of
S^1 = R/Z and is evaluated through a degree-one *lift* F: R -> R with
F(x + 1) = F(x) + 1.  Working with lifts keeps displacements, inverses and
pushforward masses consistent; reduction mod 1 happens only at the edges.

The Moebius family uses the coordinate z = exp(2 pi i x).  In the half-angle
coordinate tan(pi x) the map k_a acts linearly,
``tan(pi k(x)) = lam * tan(pi x)`` with ``lam = (1 - a)/(1 + a) = tan(pi rho)^2``,
which is what the evaluators use: it stays accurate when 1 - a underflows
double precision.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Optional, Union

import mpmath
import numpy as np

from .errors import NormalizationUnavailableError, OutOfRangeError, ToleranceNotMetError
from .number_theory import format_rational, parse_rational
from .taylor import Taylor, atan2 as t_atan2, compose_series, revert, sincos_pi

Number = Union[float, Fraction]

DEFAULT_GRID = 2 ** 14
DEFAULT_TOL = 1e-14
SEED_CAP = 2 ** 17


# ---------------------------------------------------------------------------
# circle points and arcs

def mod1(x):
    return x - np.floor(x)


def circle_distance(x, y):
    d = np.mod(np.asarray(x, dtype=float) - np.asarray(y, dtype=float), 1.0)
    return np.minimum(d, 1.0 - d)


def arc_length(left, right):
    """Counterclockwise length from ``left`` to ``right``, in [0, 1)."""
    return (right - left) % 1


def in_open_arc(x, left, right) -> bool:
    return 0 < (x - left) % 1 < (right - left) % 1


def in_closed_arc(x, left, right) -> bool:
    return (x - left) % 1 <= (right - left) % 1


@dataclass(frozen=True)
class CircleInterval:
    left: float
    right: float

    @property
    def length(self):
        return arc_length(self.left, self.right)

    @property
    def center(self):
        return (self.left + self.length / 2) % 1

    def contains(self, x) -> bool:
        return in_closed_arc(x, self.left, self.right)

    def to_json(self):
        return {"left": repr(float(self.left)), "right": repr(float(self.right))}


@dataclass(frozen=True)
class Jet:
    """Value (mod 1) and derivatives 1..order at a point."""

    order: int
    coefficients: tuple

    @property
    def value(self):
        return self.coefficients[0]

    def derivative(self, i: int):
        return self.coefficients[i]


# ---------------------------------------------------------------------------
# expression nodes

class CircleMapExpr:
    """Base class; use the node types below."""

    def __call__(self, x):
        return evaluate(self, x)

    def __matmul__(self, other):
        return compose(self, other)


@dataclass(frozen=True)
class Identity(CircleMapExpr):
    pass


@dataclass(frozen=True)
class Rotation(CircleMapExpr):
    angle: Number

    def __post_init__(self):
        if isinstance(self.angle, int):
            object.__setattr__(self, "angle", Fraction(self.angle))


@dataclass(frozen=True)
class MoebiusHat(CircleMapExpr):
    """The circle map of ``k_a(z) = (z + a)/(a z + 1)``, 1/2 <= a < 1.

    Give either ``a`` or ``rho`` (the radius of the expanding interval).
    Stage maps are built from ``rho`` because ``1 - a`` is far below double
    resolution for them.
    """

    a: Optional[float] = None
    rho: Optional[float] = None

    def __post_init__(self):
        if (self.a is None) == (self.rho is None):
            raise ValueError("give exactly one of a, rho")
        if self.a is not None:
            a = float(self.a)
            if not (0.5 <= a < 1.0):
                raise OutOfRangeError(f"a={self.a} outside [1/2, 1)")
            object.__setattr__(self, "a", a)
        else:
            r = float(self.rho)
            if not (0.0 < r <= 1.0 / 6.0 + 1e-15):
                raise OutOfRangeError(f"rho={self.rho} outside (0, 1/6]")
            object.__setattr__(self, "rho", r)

    @property
    def lam(self) -> float:
        """Derivative at the attracting fixed point 0."""
        return _lam_float(self.a, self.rho)

    def lam_mp(self):
        if self.a is not None:
            a = mpmath.mpf(self.a)
            return (1 - a) / (1 + a)
        return mpmath.tan(mpmath.pi * mpmath.mpf(self.rho)) ** 2

    @property
    def a_value(self) -> float:
        if self.a is not None:
            return self.a
        return math.cos(2 * math.pi * self.rho)

    @property
    def rho_value(self) -> float:
        if self.rho is not None:
            return self.rho
        return math.acos(self.a) / (2 * math.pi)


@lru_cache(maxsize=4096)
def _lam_float(a, rho):
    if a is not None:
        return (1.0 - a) / (1.0 + a)
    return math.tan(math.pi * rho) ** 2


@dataclass(frozen=True)
class Lift(CircleMapExpr):
    """Lift of ``inner`` by the q-fold covering, normalized to have fixed points.

    ``h(x) = (K(q x) + shift) / q`` where K is the lift of ``inner``;
    ``shift`` is chosen so that h has a fixed point.
    """

    inner: CircleMapExpr
    q: int
    shift: Optional[int] = field(default=None, compare=True)

    def __post_init__(self):
        if int(self.q) != self.q or self.q < 1:
            raise ValueError("q must be a positive integer")
        object.__setattr__(self, "q", int(self.q))
        if self.shift is None:
            object.__setattr__(self, "shift", _fixed_point_shift(self.inner))


@dataclass(frozen=True)
class Compose(CircleMapExpr):
    """``parts[0] o parts[1] o ... o parts[-1]`` (rightmost applied first)."""

    parts: tuple

    def __post_init__(self):
        object.__setattr__(self, "parts", tuple(self.parts))


@dataclass(frozen=True)
class Inverse(CircleMapExpr):
    inner: CircleMapExpr


def compose(*maps: CircleMapExpr) -> CircleMapExpr:
    parts = []
    for m in maps:
        if isinstance(m, Compose):
            parts.extend(m.parts)
        elif not isinstance(m, Identity):
            parts.append(m)
    if not parts:
        return Identity()
    if len(parts) == 1:
        return parts[0]
    return Compose(tuple(parts))


def conjugate(H: CircleMapExpr, angle: Number) -> Compose:
    """``H o R_angle o H^-1`` kept structural."""
    return Compose((H, Rotation(angle), Inverse(H)))


def as_conjugate(expr: CircleMapExpr):
    """Return ``(H, angle)`` when ``expr`` is structurally ``H R H^-1``."""
    if isinstance(expr, Compose):
        p = expr.parts
        if (len(p) == 3 and isinstance(p[1], Rotation) and isinstance(p[2], Inverse)
                and p[2].inner == p[0]):
            return p[0], p[1].angle
        if len(p) >= 3 and isinstance(p[-1], Inverse) and isinstance(p[-1].inner, Compose):
            H = p[-1].inner
            k = len(H.parts)
            if len(p) == 2 * k + 1 and tuple(p[:k]) == H.parts and isinstance(p[k], Rotation):
                return H, p[k].angle
    if isinstance(expr, Rotation):
        return Identity(), expr.angle
    return None


def lift(k: CircleMapExpr, q: int) -> CircleMapExpr:
    if q == 1:
        return k
    if isinstance(k, Identity):
        return Identity()
    return Lift(k, q)


@lru_cache(maxsize=1024)
def inverse(expr: CircleMapExpr) -> CircleMapExpr:
    """Closed-form inverse; ``Inverse`` survives only around Moebius nodes."""
    if isinstance(expr, Identity):
        return expr
    if isinstance(expr, Rotation):
        return Rotation(-expr.angle)
    if isinstance(expr, MoebiusHat):
        return Inverse(expr)
    if isinstance(expr, Lift):
        return Lift(inverse(expr.inner), expr.q, -expr.shift)
    if isinstance(expr, Compose):
        return Compose(tuple(inverse(p) for p in reversed(expr.parts)))
    if isinstance(expr, Inverse):
        return _normal(expr.inner)
    raise TypeError(f"not a circle map expression: {expr!r}")


@lru_cache(maxsize=1024)
def _normal(expr: CircleMapExpr) -> CircleMapExpr:
    """Rewrite so that ``Inverse`` wraps only Moebius nodes."""
    if isinstance(expr, Inverse):
        return inverse(expr.inner)
    if isinstance(expr, Lift):
        return Lift(_normal(expr.inner), expr.q, expr.shift)
    if isinstance(expr, Compose):
        return Compose(tuple(_normal(p) for p in expr.parts))
    return expr


# ---------------------------------------------------------------------------
# evaluation backends

def _two_prod(q: int, x: np.ndarray):
    """Error-free product ``q * x = hi + lo`` (Dekker)."""
    hi = q * x
    split = 134217729.0
    cx = split * x
    xh = cx - (cx - x)
    xl = x - xh
    qf = float(q)
    cq = split * qf
    qh = cq - (cq - qf)
    ql = qf - qh
    lo = ((qh * xh - hi) + qh * xl + ql * xh) + ql * xl
    return hi, lo


class _FloatBackend:
    name = "float"

    @staticmethod
    def asarray(x):
        return np.asarray(x, dtype=float)

    @staticmethod
    def const(v):
        return float(v)

    rint = staticmethod(np.rint)

    @staticmethod
    def sincos_pi(u):
        from .taylor import sincos_pi_value
        return sincos_pi_value(u)

    atan2 = staticmethod(np.arctan2)
    pi = math.pi

    @staticmethod
    def two_prod(q, x):
        return _two_prod(q, x)

    @staticmethod
    def lam(m: MoebiusHat):
        return m.lam

    @staticmethod
    def intmod(n, q):
        return np.mod(n, q)


def _mp_vec(fn, nin=1):
    return np.frompyfunc(fn, nin, 1)


class _MpBackend:
    name = "mp"
    _sinpi = _mp_vec(mpmath.sinpi)
    _cospi = _mp_vec(mpmath.cospi)
    _atan2 = _mp_vec(mpmath.atan2, 2)
    _nint = _mp_vec(mpmath.nint)
    _floor = _mp_vec(mpmath.floor)

    @staticmethod
    def asarray(x):
        arr = np.asarray(x, dtype=object)
        flat = [v if isinstance(v, mpmath.mpf) else _to_mpf(v) for v in arr.ravel()]
        out = np.empty(len(flat), dtype=object)
        out[:] = flat
        return out.reshape(arr.shape)

    @staticmethod
    def const(v):
        return _to_mpf(v)

    @classmethod
    def rint(cls, x):
        return cls._nint(x)

    @classmethod
    def sincos_pi(cls, u):
        return cls._sinpi(u), cls._cospi(u)

    @classmethod
    def atan2(cls, y, x):
        return cls._atan2(y, x)

    @property
    def pi(self):
        return mpmath.pi

    @staticmethod
    def two_prod(q, x):
        return q * x, 0

    @staticmethod
    def lam(m: MoebiusHat):
        return m.lam_mp()

    @classmethod
    def intmod(cls, n, q):
        return n - q * cls._floor(n / q)


def _to_mpf(v):
    if isinstance(v, Fraction):
        return mpmath.mpf(v.numerator) / v.denominator
    if isinstance(v, str):
        return mpmath.mpf(parse_rational(v).numerator) / parse_rational(v).denominator \
            if "/" in v else mpmath.mpf(v)
    return mpmath.mpf(v)


_FLOAT = _FloatBackend()
_MP = _MpBackend()


def _backend(name):
    if name in ("float", None):
        return _FLOAT
    if name == "mp":
        return _MP
    raise ValueError(f"unknown backend {name!r}")


def _ev(expr: CircleMapExpr, x, B):
    """Lift value of a normalized expression."""
    if isinstance(expr, Identity):
        return x
    if isinstance(expr, Rotation):
        return x + B.const(expr.angle)
    if isinstance(expr, MoebiusHat):
        n = B.rint(x)
        s, c = B.sincos_pi(x - n)
        return n + B.atan2(B.lam(expr) * s, c) / B.pi
    if isinstance(expr, Inverse):
        m = expr.inner
        if not isinstance(m, MoebiusHat):
            return _ev(inverse(m), x, B)
        n = B.rint(x)
        s, c = B.sincos_pi(x - n)
        return n + B.atan2(s, B.lam(m) * c) / B.pi
    if isinstance(expr, Lift):
        q = expr.q
        hi, lo = B.two_prod(q, x)
        n = B.rint(hi)
        u = (hi - n) + lo
        ku = _ev(expr.inner, u, B)
        rem = B.intmod(n, q)
        return (n - rem) / q + (rem + ku + expr.shift) / q
    if isinstance(expr, Compose):
        for p in reversed(expr.parts):
            x = _ev(p, x, B)
        return x
    raise TypeError(f"not a circle map expression: {expr!r}")


def lift_eval(expr: CircleMapExpr, x, backend: str = "float", inverse_method: str = "closed",
              tol: float = DEFAULT_TOL):
    """Evaluate the lift of ``expr`` (no reduction mod 1)."""
    B = _backend(backend)
    scalar = np.ndim(x) == 0
    xs = B.asarray(np.atleast_1d(x) if backend != "mp" else np.atleast_1d(np.asarray(x, dtype=object)))
    if inverse_method == "bisection":
        out = _ev_bisect(expr, xs, tol)
    else:
        out = _ev(_normal(expr), xs, B)
    return out[0] if scalar else out


def evaluate(expr: CircleMapExpr, x, backend: str = "float", inverse_method: str = "closed",
             tol: float = DEFAULT_TOL):
    """Evaluate ``expr`` at circle point(s) ``x``; result reduced to [0, 1)."""
    y = lift_eval(expr, x, backend=backend, inverse_method=inverse_method, tol=tol)
    if backend == "mp":
        if np.ndim(y) == 0:
            return y - mpmath.floor(y)
        return _MP.asarray(y) - _MpBackend._floor(y)
    return mod1(y)


def _ev_bisect(expr, x, tol):
    """Like ``_ev`` but every ``Inverse`` node is solved by bisection."""
    if isinstance(expr, Inverse):
        return invert_by_bisection(expr.inner, x, tol=tol)
    if isinstance(expr, Compose):
        for p in reversed(expr.parts):
            x = _ev_bisect(p, x, tol)
        return x
    if isinstance(expr, Lift):
        q = expr.q
        hi, lo = _two_prod(q, x)
        n = np.rint(hi)
        u = (hi - n) + lo
        ku = _ev_bisect(expr.inner, u, tol)
        rem = np.mod(n, q)
        return (n - rem) / q + (rem + ku + expr.shift) / q
    return _ev(expr, x, _FLOAT)


def invert_by_bisection(expr: CircleMapExpr, y, tol: float = DEFAULT_TOL, max_iter: int = 200):
    """Solve ``F(x) = y`` for the lift F of ``expr`` by monotone bisection."""
    y = np.asarray(y, dtype=float)
    d0 = _ev_bisect(expr, y, tol) - y
    lo = y - d0 - 1.0
    hi = y - d0 + 1.0
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        above = _ev_bisect(expr, mid, tol) > y
        hi = np.where(above, mid, hi)
        lo = np.where(above, lo, mid)
        if np.all(hi - lo <= tol):
            break
    if not np.all(hi - lo <= max(tol, 4 * np.finfo(float).eps * (1 + np.max(np.abs(y))))):
        raise ToleranceNotMetError(f"bisection did not reach tolerance {tol}")
    return 0.5 * (lo + hi)


# ---------------------------------------------------------------------------
# jets

def _jet(expr: CircleMapExpr, T: Taylor) -> Taylor:
    if isinstance(expr, Identity):
        return T
    if isinstance(expr, Rotation):
        return T + float(expr.angle)
    if isinstance(expr, (MoebiusHat, Inverse)):
        m = expr if isinstance(expr, MoebiusHat) else expr.inner
        if not isinstance(m, MoebiusHat):
            return _jet(inverse(m), T)
        n = np.rint(T.value)
        S, C = sincos_pi(T.with_value(T.value - n))
        if isinstance(expr, MoebiusHat):
            W = t_atan2(S * m.lam, C)
        else:
            W = t_atan2(S, C * m.lam)
        return W / math.pi + n
    if isinstance(expr, Lift):
        q = expr.q
        hi, lo = _two_prod(q, T.value)
        n = np.rint(hi)
        u = (hi - n) + lo
        Y = Taylor(T.c * q)
        Y.c[0] = u
        W = _jet(expr.inner, Y)
        rem = np.mod(n, q)
        out = Taylor(W.c / q)
        out.c[0] = (n - rem) / q + (rem + W.c[0] + expr.shift) / q
        return out
    if isinstance(expr, Compose):
        for p in reversed(expr.parts):
            T = _jet(p, T)
        return T
    raise TypeError(f"not a circle map expression: {expr!r}")


def _jet_lagrange(expr: CircleMapExpr, T: Taylor) -> Taylor:
    """Jet of ``Inverse(expr)`` by reverting the forward jet at the preimage."""
    y0 = lift_eval(Inverse(expr), T.value)
    G = _jet(_normal(expr), Taylor.variable(y0, T.order))
    G.c[0] = 0.0
    S = revert(G)
    dT = T.with_value(np.zeros_like(T.value))
    out = compose_series(S.c, dT)
    out.c[0] = y0
    return out


def lift_jets(expr: CircleMapExpr, x, r: int, inverse_method: str = "closed") -> np.ndarray:
    """Derivatives ``F^(i)(x)`` for i = 0..r, shape ``(r + 1, len(x))`` (row 0 is the lift value)."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    T = Taylor.variable(x, r)
    if inverse_method == "lagrange" and isinstance(expr, Inverse):
        out = _jet_lagrange(expr.inner, T)
    else:
        out = _jet(_normal(expr), T)
    return out.derivatives()


def evaluate_jet(expr: CircleMapExpr, x: float, r: int, inverse_method: str = "closed") -> Jet:
    if r < 0:
        raise ValueError("order must be >= 0")
    d = lift_jets(expr, [x], r, inverse_method=inverse_method)[:, 0]
    coeffs = (float(d[0] % 1.0),) + tuple(float(v) for v in d[1:])
    return Jet(r, coeffs)


# ---------------------------------------------------------------------------
# Moebius family

def _check_a(a):
    if not (0.5 <= a < 1.0):
        raise OutOfRangeError(f"a={a} outside [1/2, 1)")


def moebius_apply(a: float, x):
    _check_a(a)
    return evaluate(MoebiusHat(a=a), x)


def moebius_jet(a: float, x: float, r: int) -> Jet:
    _check_a(a)
    return evaluate_jet(MoebiusHat(a=a), x, r)


def moebius_derivative_closed_form(a, x):
    """``(1 - a^2) / (1 + 2 a cos(2 pi x) + a^2)``."""
    return (1 - a * a) / (1 + 2 * a * np.cos(2 * np.pi * np.asarray(x)) + a * a)


def rho(a: float) -> float:
    """Radius of the expanding interval of the Moebius map with parameter ``a``."""
    _check_a(a)
    return math.acos(a) / (2 * math.pi)


def expanding_interval(a: float) -> CircleInterval:
    r = rho(a)
    return CircleInterval(0.5 - r, 0.5 + r)


def contracting_interval(a: float) -> CircleInterval:
    """Expanding interval of the inverse map, centered at 0."""
    r = rho(a)
    return CircleInterval((-r) % 1, r)


def solve_a_for_rho(target) -> float:
    t = float(target)
    if not (0.0 < t <= 1.0 / 6.0):
        raise OutOfRangeError(f"target radius {target} outside (0, 1/6]")
    return math.cos(2 * math.pi * t)


def rho_by_root_finding(expr: CircleMapExpr, center: float = 0.5) -> float:
    """Half-width of {F' >= 1} around ``center``, by bracketing on the jet."""
    from scipy.optimize import brentq

    def g(t):
        return lift_jets(expr, [center + t], 1)[1, 0] - 1.0

    return brentq(g, 1e-15, 0.5 - 1e-12, xtol=1e-15, rtol=4 * np.finfo(float).eps)


# ---------------------------------------------------------------------------
# C^r norms and distances

def _seeds(expr: CircleMapExpr) -> np.ndarray:
    """Points where derivatives of ``expr`` peak, pulled back to its input."""
    expr = _normal(expr)
    return _seeds_normal(expr)


_SEED_OFFSETS = np.array([0.0, 0.25, 0.5, 1.0, 2.0, 4.0])


def _moebius_offsets(lam):
    w = lam / math.pi
    o = w * _SEED_OFFSETS
    return np.concatenate([o, -o[1:]])


@lru_cache(maxsize=256)
def _seeds_normal(expr: CircleMapExpr) -> np.ndarray:
    if isinstance(expr, (Identity, Rotation)):
        return np.zeros(0)
    if isinstance(expr, MoebiusHat):
        return np.concatenate([[0.0], 0.5 + _moebius_offsets(expr.lam)])
    if isinstance(expr, Inverse):
        return np.concatenate([[0.5], _moebius_offsets(expr.inner.lam)])
    if isinstance(expr, Lift):
        s = _seeds_normal(expr.inner)
        if s.size == 0:
            return s
        q = expr.q
        ks = np.arange(q)
        if q * s.size > SEED_CAP:
            ks = np.unique(np.linspace(0, q - 1, max(1, SEED_CAP // s.size)).astype(int))
        return ((s[None, :] + ks[:, None]) / q).ravel()
    if isinstance(expr, Compose):
        out = []
        parts = expr.parts
        for j, p in enumerate(parts):
            s = _seeds_normal(p)
            if s.size == 0:
                continue
            tail = parts[j + 1:]
            if tail:
                t_inv = inverse(Compose(tuple(tail)) if len(tail) > 1 else tail[0])
                s = _ev(t_inv, s, _FLOAT)
            out.append(s)
        return np.concatenate(out) if out else np.zeros(0)
    raise TypeError(f"unexpected node {expr!r}")


def sample_points(exprs, grid: int = DEFAULT_GRID, seeds: bool = True) -> np.ndarray:
    pts = [np.arange(grid) / grid]
    if seeds:
        for e in exprs:
            s = _seeds(e)
            if s.size:
                pts.append(mod1(s))
    return np.unique(np.concatenate(pts))


def _shifted_sup(d: np.ndarray) -> float:
    """``min_k sup |d - k|`` over integers k."""
    if not np.all(np.isfinite(d)):
        return math.inf
    lo, hi = float(np.min(d)), float(np.max(d))
    k = round((lo + hi) / 2)
    return max(abs(hi - k), abs(lo - k))


def _norm_terms(J: np.ndarray, x: np.ndarray) -> np.ndarray:
    """``[sup|F - id|, sup|F' - 1|, sup|F''|, ...]`` from lift jets."""
    r = J.shape[0] - 1
    out = np.empty(r + 1)
    out[0] = _shifted_sup(J[0] - x)
    with np.errstate(invalid="ignore"):
        for i in range(1, r + 1):
            row = J[i] - 1.0 if i == 1 else J[i]
            out[i] = np.max(np.abs(row)) if np.all(np.isfinite(row)) else math.inf
    return out


def norm_profile(expr: CircleMapExpr, r: int, grid: int = DEFAULT_GRID, seeds: bool = True):
    """Per-order terms of ``|expr|_r``: rows for f and f^-1, columns i = 0..r."""
    inv = inverse(expr)
    xf = sample_points([expr], grid, seeds)
    xi = sample_points([inv], grid, seeds)
    with np.errstate(over="ignore", invalid="ignore"):
        tf = _norm_terms(lift_jets(expr, xf, r), xf)
        ti = _norm_terms(lift_jets(inv, xi, r), xi)
    return np.vstack([tf, ti])


def cr_norm(expr: CircleMapExpr, r: int, grid: int = DEFAULT_GRID, seeds: bool = True) -> float:
    """Grid estimate (a lower bound) of ``max{||f - id||_r, ||f^-1 - id||_r, 1}``."""
    if grid < 16:
        raise ValueError("grid must be >= 16")
    if r < 0:
        raise ValueError("r must be >= 0")
    prof = norm_profile(expr, r, grid, seeds)
    return float(max(1.0, np.max(prof)))


def cr_norms_all(expr: CircleMapExpr, r_max: int, grid: int = DEFAULT_GRID, seeds: bool = True):
    """``[|f|_0, ..., |f|_r_max]`` from one jet sweep."""
    prof = norm_profile(expr, r_max, grid, seeds)
    cum = np.maximum.accumulate(np.max(prof, axis=0))
    return np.maximum(cum, 1.0)


def _distance_terms(f, g, r, grid, seeds):
    x = sample_points([f, g], grid, seeds)
    with np.errstate(over="ignore", invalid="ignore"):
        Jf = lift_jets(f, x, r)
        Jg = lift_jets(g, x, r)
        out = np.empty(r + 1)
        out[0] = _shifted_sup(Jf[0] - Jg[0])
        for i in range(1, r + 1):
            row = Jf[i] - Jg[i]
            out[i] = np.max(np.abs(row)) if np.all(np.isfinite(row)) else math.inf
    return out


def dr_profile(f: CircleMapExpr, g: CircleMapExpr, r: int, grid: int = DEFAULT_GRID,
               seeds: bool = True) -> np.ndarray:
    a = _distance_terms(f, g, r, grid, seeds)
    b = _distance_terms(inverse(f), inverse(g), r, grid, seeds)
    return np.vstack([a, b])


def dr_distance(f: CircleMapExpr, g: CircleMapExpr, r: int, grid: int = DEFAULT_GRID,
                seeds: bool = True) -> float:
    """Grid estimate (a lower bound) of ``max{||f - g||_r, ||f^-1 - g^-1||_r}``."""
    if grid < 16:
        raise ValueError("grid must be >= 16")
    return float(np.max(dr_profile(f, g, r, grid, seeds)))


def derivative_sup(expr: CircleMapExpr, grid: int = DEFAULT_GRID, seeds: bool = True) -> float:
    """Grid estimate of ``max{||F'||_0, ||(F^-1)'||_0}``."""
    vals = []
    for e in (expr, inverse(expr)):
        x = sample_points([e], grid, seeds)
        with np.errstate(over="ignore"):
            vals.append(float(np.max(np.abs(lift_jets(e, x, 1)[1]))))
    return max(vals)


def displacement_sup(expr: CircleMapExpr, grid: int = DEFAULT_GRID, seeds: bool = True) -> float:
    """Grid estimate of ``||f - id||_0`` using the expression's own lift."""
    x = sample_points([expr], grid, seeds)
    return float(np.max(np.abs(lift_eval(expr, x) - x)))


# ---------------------------------------------------------------------------
# normalization of lifts

def _fixed_point_shift(inner: CircleMapExpr) -> int:
    if isinstance(inner, (Identity, MoebiusHat)):
        return 0
    if isinstance(inner, Inverse) and isinstance(inner.inner, MoebiusHat):
        return 0
    if isinstance(inner, Lift):
        return 0
    x = sample_points([inner], 4096)
    d = lift_eval(inner, x) - x
    lo, hi = float(np.min(d)), float(np.max(d))
    cands = [m for m in range(math.ceil(lo - 1e-12), math.floor(hi + 1e-12) + 1)]
    if not cands:
        raise NormalizationUnavailableError(
            f"map has no fixed point (displacement in [{lo:.6g}, {hi:.6g}])")
    return -min(cands, key=abs)


# ---------------------------------------------------------------------------
# JSON

def to_json(expr: CircleMapExpr):
    if isinstance(expr, Identity):
        return {"id": True}
    if isinstance(expr, Rotation):
        a = expr.angle
        return {"rot": format_rational(a) if isinstance(a, Fraction) else float(a)}
    if isinstance(expr, MoebiusHat):
        if expr.a is not None:
            return {"moebius": expr.a}
        return {"moebius": {"rho": expr.rho}}
    if isinstance(expr, Lift):
        return {"lift": {"q": expr.q, "inner": to_json(expr.inner)}}
    if isinstance(expr, Compose):
        return {"comp": [to_json(p) for p in expr.parts]}
    if isinstance(expr, Inverse):
        return {"inv": to_json(expr.inner)}
    raise TypeError(f"not a circle map expression: {expr!r}")


def from_json(d) -> CircleMapExpr:
    if not isinstance(d, dict) or len(d) != 1:
        raise ValueError(f"malformed expression node: {d!r}")
    (key, val), = d.items()
    if key == "id":
        return Identity()
    if key == "rot":
        return Rotation(val if isinstance(val, float) else parse_rational(val))
    if key == "moebius":
        if isinstance(val, dict):
            return MoebiusHat(rho=float(val["rho"]))
        return MoebiusHat(a=float(val))
    if key == "lift":
        return Lift(from_json(val["inner"]), int(val["q"]))
    if key == "comp":
        return Compose(tuple(from_json(v) for v in val))
    if key == "inv":
        return Inverse(from_json(val))
    raise ValueError(f"unknown expression node {key!r}")
