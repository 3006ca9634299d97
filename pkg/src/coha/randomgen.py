"""Seeded random payloads for property checks.

All draws come from ``numpy.random.Generator(PCG64(seed))``.  A payload of
degree <= d is built by drawing, for each monomial of degree <= d in the
grading's lambda variables and t1, t2 (in grlex order), an integer
coefficient in [-2, 2], then symmetrizing over S_v x S_w.
"""
from __future__ import annotations

from itertools import combinations_with_replacement

import numpy as np

from .quiver import DimPair, Quiver
from .shuffle import ADDITIVE, Kernel, ShuffleElement, element
from .symbolic import T1, T2, RationalExpr, VarSpace, symmetrize

__all__ = ["make_rng", "random_polynomial", "random_element", "random_dims"]


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


def random_polynomial(space: VarSpace, degree: int, rng: np.random.Generator, lo: int = -2, hi: int = 2,
                      density: float = 0.5) -> RationalExpr:
    names = [n for n in space.names if n.startswith("l[")] + [T1, T2]
    gens = {n: RationalExpr.var(n, space) for n in names}
    out = RationalExpr.const(0, space)
    for d in range(degree + 1):
        for combo in combinations_with_replacement(names, d):
            keep = rng.random() < density
            c = int(rng.integers(lo, hi + 1))
            if keep and c:
                term = RationalExpr.const(c, space)
                for n in combo:
                    term = term * gens[n]
                out = out + term
    if out.is_zero:
        out = RationalExpr.const(1, space)
    return out


def random_element(q: Quiver, d: DimPair, degree: int, rng: np.random.Generator,
                   kernel: Kernel = ADDITIVE) -> ShuffleElement:
    """A symmetric polynomial payload of degree <= ``degree`` at grading ``d``."""
    space = VarSpace.for_dims(q, d)
    payload = symmetrize(random_polynomial(space, degree, rng))
    if payload.is_zero:
        payload = RationalExpr.const(1, space)
    return element(q, payload, v=d.v, w=d.w, kernel=kernel)


def random_dims(q: Quiver, rng: np.random.Generator, max_entry: int = 3, framed: bool = False) -> DimPair:
    n = len(q.vertices)
    v = tuple(int(x) for x in rng.integers(0, max_entry + 1, n))
    w = tuple(int(x) for x in rng.integers(0, max_entry + 1, n)) if framed else (0,) * n
    return DimPair(v, w)
