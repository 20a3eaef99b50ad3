"""Reference subspaces used by the verification suites and the shipped configs."""
from __future__ import annotations

import math

import numpy as np

from .geometry import AffineConstraintSet, DirectionVector, GeometricTail, orthonormalize
from .measures import TestFunction

TAIL_RATIO = 0.9


def e1() -> AffineConstraintSet:
    """k=1, w = (3/5) e_1 + (4/5) e_2, p = 5: closest point (3, 4, 0, ...)."""
    return AffineConstraintSet([DirectionVector((0.6, 0.8))], [5.0], 1)


def e1_small() -> AffineConstraintSet:
    """E1's direction with offset 1, so the slice is nonempty from N = 2 on."""
    return AffineConstraintSet([DirectionVector((0.6, 0.8))], [1.0], 1)


def hyperplane() -> AffineConstraintSet:
    """w = e_2, p = 0, k = 1: the marginal tends to the standard normal."""
    return AffineConstraintSet([DirectionVector.basis(2)], [0.0], 1)


def axis() -> AffineConstraintSet:
    """w = e_1, k = 1: ker Q is orthogonal to e_1, never transversal."""
    return AffineConstraintSet([DirectionVector.basis(1)], [2.0], 1)


def geometric_single() -> AffineConstraintSet:
    """One direction with a geometric tail, k = 1."""
    v = DirectionVector((0.6, 0.5), GeometricTail(0.3, TAIL_RATIO))
    return AffineConstraintSet(orthonormalize([v]), [2.0], 1)


def geometric_pair() -> AffineConstraintSet:
    """Two orthonormalized geometric-tail directions, k = 2."""
    v1 = DirectionVector((1.0, 0.3, 0.2), GeometricTail(0.4, TAIL_RATIO))
    v2 = DirectionVector((0.2, -0.5, 0.7, 0.1), GeometricTail(-0.3, TAIL_RATIO))
    return AffineConstraintSet(orthonormalize([v1, v2]), [1.5, -0.5], 2)


FIXTURES = {
    "e1": e1,
    "e1_small": e1_small,
    "hyperplane": hyperplane,
    "axis": axis,
    "geometric_single": geometric_single,
    "geometric_pair": geometric_pair,
}

E1_COS_TARGET = math.exp(-0.32) * math.cos(3.0)  # -0.718882...
HYPERPLANE_COS_TARGET = math.exp(-0.5)  # 0.606531...


def cos_x1(k: int = 1) -> TestFunction:
    t = np.zeros(k)
    t[0] = 1.0
    return TestFunction.cosine(t)


def random_constraints(rng: np.random.Generator, k: int, m: int, *, tail: bool = False,
                       prefix_len: int = 8, offset_scale: float = 1.0) -> AffineConstraintSet:
    """Random orthonormal constraint system; tails share ``TAIL_RATIO``."""
    vs = [
        DirectionVector(tuple(rng.normal(size=prefix_len)),
                        GeometricTail(float(rng.normal()), TAIL_RATIO) if tail else None)
        for _ in range(m)
    ]
    return AffineConstraintSet(orthonormalize(vs), list(offset_scale * rng.normal(size=m)), k)
