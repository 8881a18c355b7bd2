"""Seeded random circle-map expressions for property tests."""
from fractions import Fraction

import numpy as np

from circlediffeo.circle_maps import Compose, Inverse, Lift, MoebiusHat, Rotation
from circlediffeo.errors import NormalizationUnavailableError


def primitive(rng, a_max=0.9):
    kind = int(rng.integers(5))
    a = float(rng.uniform(0.5, a_max))
    if kind == 0:
        return MoebiusHat(a=a)
    if kind == 1:
        return Inverse(MoebiusHat(a=a))
    if kind == 2:
        return Rotation(Fraction(int(rng.integers(0, 97)), 97))
    if kind == 3:
        return Lift(MoebiusHat(a=a), int(rng.integers(2, 5)))
    return Rotation(float(rng.uniform(0, 1)))


def random_expr(rng, max_depth=5, a_max=0.9):
    """A composition tree of depth <= max_depth; inner nodes are Compose/Inverse/Lift."""
    if max_depth <= 1 or rng.random() < 0.3:
        return primitive(rng, a_max)
    kind = int(rng.integers(3))
    if kind == 0:
        return Compose((random_expr(rng, max_depth - 1, a_max),
                        random_expr(rng, max_depth - 1, a_max)))
    if kind == 1:
        return Inverse(random_expr(rng, max_depth - 1, a_max))
    inner = random_expr(rng, max_depth - 1, a_max)
    try:
        return Lift(inner, int(rng.integers(2, 4)))
    except NormalizationUnavailableError:
        # fixed-point-free maps have no normalized lift
        return Inverse(inner)


def depth(expr):
    if isinstance(expr, (Inverse, Lift)) and isinstance(expr.inner, MoebiusHat):
        return 1  # primitives
    if isinstance(expr, Compose):
        return 1 + max(depth(p) for p in expr.parts)
    if isinstance(expr, (Inverse, Lift)):
        return 1 + depth(expr.inner)
    return 1


def conjugators(seed, count):
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < count:
        parts = [primitive(rng, 0.8) for _ in range(int(rng.integers(1, 4)))]
        out.append(Compose(tuple(parts)) if len(parts) > 1 else parts[0])
    return out
