"""Truncated Taylor series, vectorized over evaluation points.

A :class:`Taylor` holds normalized coefficients ``c[k] = f^(k)(x0) / k!`` in
an array of shape ``(order + 1, *points)``.  Propagating a series through a
map is Taylor-mode differentiation; composing series is Faa di Bruno.
"""
from __future__ import annotations

import math

import numpy as np


class Taylor:
    __slots__ = ("c",)

    def __init__(self, coeffs):
        self.c = np.asarray(coeffs, dtype=float)

    @classmethod
    def variable(cls, x, order: int) -> "Taylor":
        x = np.asarray(x, dtype=float)
        c = np.zeros((order + 1,) + x.shape)
        c[0] = x
        if order >= 1:
            c[1] = 1.0
        return cls(c)

    @classmethod
    def constant(cls, value, order: int, shape=()) -> "Taylor":
        c = np.zeros((order + 1,) + tuple(shape))
        c[0] = value
        return cls(c)

    @property
    def order(self) -> int:
        return self.c.shape[0] - 1

    @property
    def value(self) -> np.ndarray:
        return self.c[0]

    def derivatives(self) -> np.ndarray:
        """Plain derivatives ``f^(k)``, same shape as ``c``."""
        fact = np.array([math.factorial(k) for k in range(self.order + 1)], dtype=float)
        return self.c * fact.reshape((-1,) + (1,) * (self.c.ndim - 1))

    def copy(self) -> "Taylor":
        return Taylor(self.c.copy())

    def with_value(self, v) -> "Taylor":
        c = self.c.copy()
        c[0] = v
        return Taylor(c)

    def __add__(self, other):
        if isinstance(other, Taylor):
            return Taylor(self.c + other.c)
        c = self.c.copy()
        c[0] = c[0] + other
        return Taylor(c)

    __radd__ = __add__

    def __neg__(self):
        return Taylor(-self.c)

    def __sub__(self, other):
        if isinstance(other, Taylor):
            return Taylor(self.c - other.c)
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, Taylor):
            return Taylor(_cauchy(self.c, other.c))
        return Taylor(self.c * other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Taylor):
            return Taylor(_divide(self.c, other.c))
        return Taylor(self.c / other)

    def deriv(self) -> "Taylor":
        """Series of the derivative, padded with a zero top coefficient."""
        out = np.zeros_like(self.c)
        k = np.arange(1, self.order + 1, dtype=float).reshape((-1,) + (1,) * (self.c.ndim - 1))
        out[:-1] = self.c[1:] * k
        return Taylor(out)


def _cauchy(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    r = a.shape[0]
    out = np.zeros(np.broadcast_shapes(a.shape, b.shape))
    for k in range(r):
        acc = a[0] * b[k]
        for j in range(1, k + 1):
            acc = acc + a[j] * b[k - j]
        out[k] = acc
    return out


def _divide(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    r = a.shape[0]
    out = np.zeros(np.broadcast_shapes(a.shape, b.shape))
    for k in range(r):
        acc = a[k]
        for j in range(1, k + 1):
            acc = acc - b[j] * out[k - j]
        out[k] = acc / b[0]
    return out


def _integrate(g: np.ndarray, c0) -> np.ndarray:
    """Coefficients of ``w`` with ``w' = g`` and ``w(0) = c0``."""
    out = np.zeros_like(g)
    out[0] = c0
    for k in range(1, g.shape[0]):
        out[k] = g[k - 1] / k
    return out


def sincos_pi_value(u):
    """``(sin(pi u), cos(pi u))`` for ``u`` in [-1/2, 1/2], accurate near the ends."""
    u = np.asarray(u, dtype=float)
    au = np.abs(u)
    near = au > 0.25
    t = 0.5 - au  # exact for au in [0.25, 0.5]
    s = np.where(near, np.sign(u) * np.cos(np.pi * t), np.sin(np.pi * u))
    c = np.where(near, np.sin(np.pi * t), np.cos(np.pi * u))
    return s, c


def sincos_pi(u: Taylor):
    """Series of ``sin(pi u)`` and ``cos(pi u)``; ``u.value`` in [-1/2, 1/2]."""
    s0, c0 = sincos_pi_value(u.value)
    a = u.c * np.pi
    r = u.order
    s = np.zeros_like(u.c)
    c = np.zeros_like(u.c)
    s[0], c[0] = s0, c0
    for k in range(1, r + 1):
        acc_s = 0.0
        acc_c = 0.0
        for j in range(1, k + 1):
            acc_s = acc_s + j * a[j] * c[k - j]
            acc_c = acc_c + j * a[j] * s[k - j]
        s[k] = acc_s / k
        c[k] = -acc_c / k
    return Taylor(s), Taylor(c)


def atan2(y: Taylor, x: Taylor) -> Taylor:
    """Series of ``atan2(y, x)``; requires ``x^2 + y^2 > 0`` at the base point."""
    num = x * y.deriv() - y * x.deriv()
    den = x * x + y * y
    g = _divide(num.c, den.c)
    return Taylor(_integrate(g, np.arctan2(y.value, x.value)))


def compose_series(outer: np.ndarray, inner: Taylor) -> Taylor:
    """``sum_k outer[k] * inner**k`` where ``inner`` has zero constant term."""
    r = inner.order
    acc = Taylor.constant(0.0, r, inner.c.shape[1:])
    acc.c[0] = outer[r]
    for k in range(r - 1, -1, -1):
        acc = acc * inner
        acc.c[0] = acc.c[0] + outer[k]
    return acc


def revert(g: Taylor) -> Taylor:
    """Series ``s(w)`` with ``g(s(w)) = w``, for ``g`` with ``g[0] = 0``, ``g[1] != 0``.

    Lagrange inversion realized by fixed-point iteration; each pass fixes one
    more coefficient.
    """
    r = g.order
    shape = g.c.shape[1:]
    w = Taylor.variable(np.zeros(shape), r)
    s = Taylor(np.zeros_like(g.c))
    if r >= 1:
        s.c[1] = 1.0 / g.c[1]
    for _ in range(r):
        gs = compose_series(g.c, s)
        s = s - (gs - w) / g.c[1]
        s.c[0] = 0.0
    return s
