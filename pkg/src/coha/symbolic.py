"""Exact rational functions over QQ in the variables l[i,s], zf[j,t], t1, t2.

Polynomials are sympy sparse ``PolyElement`` objects over ``QQ`` with the
graded-lex order; a ``RationalExpr`` keeps a gcd-reduced numerator and a
denominator with leading coefficient 1.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property, lru_cache
from itertools import permutations, product
from numbers import Rational
from typing import Iterable, Mapping

import numpy as np
from sympy import Symbol
from sympy.polys.domains import QQ
from sympy.polys.orderings import grlex
from sympy.polys.rings import PolyElement, PolyRing

from .errors import DenominatorVanishes, ShapeMismatch, UnboundVariable
from .quiver import ColoredPermutation, DimPair, Quiver

__all__ = [
    "T1",
    "T2",
    "HBAR",
    "lam",
    "zf",
    "var_key",
    "VarSpace",
    "RationalExpr",
    "arith",
    "apply_permutation",
    "permutation_name_map",
    "symmetrize",
    "specialize",
    "equals_exact",
    "rational_sum",
]

T1 = "t1"
T2 = "t2"
HBAR = "hbar"

_INDEXED = re.compile(r"^(l|zf)\[([^,\[\]\s]+),(\d+)\]$")


def lam(vertex, s: int) -> str:
    return f"l[{vertex},{s}]"


def zf(vertex, t: int) -> str:
    return f"zf[{vertex},{t}]"


def parse_indexed(name: str):
    m = _INDEXED.match(name)
    if m is None:
        return None
    return m.group(1), m.group(2), int(m.group(3))


def _vertex_key(v: str):
    return (0, int(v), "") if v.lstrip("-").isdigit() else (1, 0, v)


def var_key(name: str):
    """Canonical variable order: lambdas, then z's, then t1, t2, then others."""
    parsed = parse_indexed(name)
    if parsed is not None:
        kind, vertex, idx = parsed
        return (0 if kind == "l" else 1, _vertex_key(vertex), idx, "")
    if name == T1:
        return (2, (0, 0, ""), 0, "")
    if name == T2:
        return (3, (0, 0, ""), 0, "")
    return (4, (0, 0, ""), 0, name)


@lru_cache(maxsize=None)
def _ring(names: tuple[str, ...]) -> PolyRing:
    return PolyRing([Symbol(n) for n in names], QQ, grlex)


def _qq(x):
    if isinstance(x, float):
        x = Fraction(x)
    if isinstance(x, (int, Fraction, Rational)):
        return QQ(int(x.numerator), int(x.denominator))
    return QQ.convert(x)


@dataclass(frozen=True)
class VarSpace:
    """Variables implied by per-vertex counts of lambdas and z's, plus t1, t2."""

    vertices: tuple[str, ...]
    v: tuple[int, ...]
    w: tuple[int, ...]
    extra: tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "vertices", tuple(str(x) for x in self.vertices))
        object.__setattr__(self, "v", tuple(int(x) for x in self.v))
        object.__setattr__(self, "w", tuple(int(x) for x in self.w))
        object.__setattr__(self, "extra", tuple(sorted(set(self.extra))))
        if not (len(self.vertices) == len(self.v) == len(self.w)):
            raise ShapeMismatch("VarSpace counts must be indexed by its vertices")

    @classmethod
    def for_dims(cls, q: Quiver, d: DimPair) -> VarSpace:
        return cls(q.vertices, d.v, d.w)

    @classmethod
    def from_names(cls, names: Iterable[str]) -> VarSpace:
        v, w, extra = {}, {}, set()
        for n in names:
            parsed = parse_indexed(n)
            if parsed is None:
                if n not in (T1, T2):
                    extra.add(n)
                continue
            kind, vertex, idx = parsed
            target = v if kind == "l" else w
            target[vertex] = max(target.get(vertex, 0), idx)
            (w if kind == "l" else v).setdefault(vertex, 0)
        verts = tuple(sorted(v, key=_vertex_key))
        return cls(verts, tuple(v[x] for x in verts), tuple(w[x] for x in verts), tuple(extra))

    @cached_property
    def names(self) -> tuple[str, ...]:
        out = [lam(x, s) for x, n in zip(self.vertices, self.v) for s in range(1, n + 1)]
        out += [zf(x, t) for x, n in zip(self.vertices, self.w) for t in range(1, n + 1)]
        out += [T1, T2]
        out += list(self.extra)
        return tuple(out)

    @cached_property
    def index(self) -> dict[str, int]:
        return {n: k for k, n in enumerate(self.names)}

    @property
    def ring(self) -> PolyRing:
        return _ring(self.names)

    @property
    def dims(self) -> DimPair:
        return DimPair(self.v, self.w)

    def __contains__(self, name: str) -> bool:
        return name in self.index

    def join(self, other: VarSpace) -> VarSpace:
        if self == other:
            return self
        verts = list(self.vertices) + [x for x in other.vertices if x not in self.vertices]
        a_v = dict(zip(self.vertices, self.v))
        a_w = dict(zip(self.vertices, self.w))
        b_v = dict(zip(other.vertices, other.v))
        b_w = dict(zip(other.vertices, other.w))
        return VarSpace(
            tuple(verts),
            tuple(max(a_v.get(x, 0), b_v.get(x, 0)) for x in verts),
            tuple(max(a_w.get(x, 0), b_w.get(x, 0)) for x in verts),
            self.extra + other.extra,
        )

    def with_names(self, names: Iterable[str]) -> VarSpace:
        missing = [n for n in names if n not in self.index]
        if not missing:
            return self
        return self.join(VarSpace.from_names(missing))


EMPTY_SPACE = VarSpace((), (), ())


def _remap(p: PolyElement, ring: PolyRing, index: list[int]) -> PolyElement:
    """Move ``p`` into ``ring`` sending generator k to generator ``index[k]``.

    ``index`` must be injective on the generators that occur in ``p``.
    """
    n = ring.ngens
    terms = {}
    for monom, c in p.items():
        e = [0] * n
        for k, ek in enumerate(monom):
            if ek:
                e[index[k]] += ek
        terms[tuple(e)] = c
    return ring.from_dict(terms) if terms else ring.zero


def _move(p: PolyElement, src: VarSpace, dst: VarSpace, mapping: Mapping[str, str] | None = None) -> PolyElement:
    if src == dst and not mapping:
        return p
    idx = dst.index
    index = []
    for name in src.names:
        target = mapping.get(name, name) if mapping else name
        index.append(idx.get(target, -1))
    used = set()
    for monom in p.itermonoms():
        used.update(k for k, e in enumerate(monom) if e)
    missing = [src.names[k] for k in used if index[k] < 0]
    if missing:
        raise ShapeMismatch(f"variables {missing} do not exist in the target space")
    return _remap(p, dst.ring, index)


class RationalExpr:
    """Exact multivariate rational function with rational coefficients."""

    __slots__ = ("space", "num", "den")

    def __init__(self, space: VarSpace, num: PolyElement, den: PolyElement | None = None, normalize: bool = True):
        ring = space.ring
        if den is None:
            den = ring.one
        if not den:
            raise DenominatorVanishes("zero denominator")
        if normalize == "unit":
            num, den = _unit(num, den)
        elif normalize:
            num, den = _reduce(num, den)
        self.space = space
        self.num = num
        self.den = den

    # construction -------------------------------------------------------
    @classmethod
    def const(cls, value, space: VarSpace = EMPTY_SPACE) -> RationalExpr:
        return cls(space, space.ring.ground_new(_qq(value)), normalize=False)

    @classmethod
    def var(cls, name: str, space: VarSpace | None = None) -> RationalExpr:
        if name == HBAR:
            return cls.var(T1, space) + cls.var(T2, space)
        space = (space or EMPTY_SPACE).with_names([name])
        ring = space.ring
        return cls(space, ring.gens[space.index[name]], normalize=False)

    @classmethod
    def linear(cls, coeffs: Mapping[str, object], const=0, space: VarSpace | None = None) -> RationalExpr:
        space = (space or EMPTY_SPACE).with_names(coeffs)
        ring = space.ring
        p = ring.ground_new(_qq(const))
        for name, c in coeffs.items():
            if c:
                p += ring.gens[space.index[name]] * _qq(c)
        return cls(space, p, normalize=False)

    @classmethod
    def coerce(cls, x, space: VarSpace = EMPTY_SPACE) -> RationalExpr:
        if isinstance(x, RationalExpr):
            return x
        if isinstance(x, (int, Fraction, Rational)):
            return cls.const(x, space)
        raise TypeError(f"cannot interpret {x!r} as a rational expression")

    # structure ----------------------------------------------------------
    def embed(self, space: VarSpace) -> RationalExpr:
        if space == self.space:
            return self
        return RationalExpr(space, _move(self.num, self.space, space), _move(self.den, self.space, space), normalize=False)

    def rename(self, mapping: Mapping[str, str], space: VarSpace | None = None) -> RationalExpr:
        """Rename variables; ``mapping`` must be injective on the variables used."""
        space = space or self.space
        num = _move(self.num, self.space, space, mapping)
        den = _move(self.den, self.space, space, mapping)
        # gcd is rename-invariant but the leading term is not
        return RationalExpr(space, num, den, normalize="unit")

    def _align(self, other: RationalExpr):
        if self.space == other.space:
            return self.space, self, other
        space = self.space.join(other.space)
        return space, self.embed(space), other.embed(space)

    @property
    def is_zero(self) -> bool:
        return not self.num

    @property
    def is_polynomial(self) -> bool:
        return self.den == self.space.ring.one

    @property
    def is_constant(self) -> bool:
        return self.num.is_ground and self.den.is_ground

    def constant_value(self) -> Fraction:
        if not self.is_constant:
            raise ValueError(f"{self} is not constant")
        c = self.num.coeff(1) / self.den.coeff(1) if self.num else QQ(0)
        return Fraction(int(QQ.numer(c)), int(QQ.denom(c)))

    def free_variables(self) -> set[str]:
        used = set()
        for p in (self.num, self.den):
            for monom in p.itermonoms():
                used.update(self.space.names[k] for k, e in enumerate(monom) if e)
        return used

    def total_degree(self) -> int:
        return max((sum(m) for m in self.num.itermonoms()), default=0)

    def linear_coefficients(self) -> tuple[dict[str, Fraction], Fraction]:
        """(coefficients, constant) of a polynomial of degree <= 1."""
        if not self.is_polynomial or self.total_degree() > 1:
            raise ValueError(f"{self} is not affine-linear")
        coeffs, const = {}, Fraction(0)
        for monom, c in self.num.items():
            val = Fraction(int(QQ.numer(c)), int(QQ.denom(c)))
            if not any(monom):
                const = val
            else:
                coeffs[self.space.names[monom.index(1)]] = val
        return coeffs, const

    # arithmetic ---------------------------------------------------------
    def __add__(self, other):
        if not isinstance(other, RationalExpr):
            try:
                other = RationalExpr.coerce(other, self.space)
            except TypeError:
                return NotImplemented
        space, a, b = self._align(other)
        if a.den == b.den:
            return RationalExpr(space, a.num + b.num, a.den, normalize=not a.den.is_ground)
        return RationalExpr(space, a.num * b.den + b.num * a.den, a.den * b.den)

    __radd__ = __add__

    def __neg__(self):
        return RationalExpr(self.space, -self.num, self.den, normalize=False)

    def __sub__(self, other):
        if not isinstance(other, RationalExpr):
            try:
                other = RationalExpr.coerce(other, self.space)
            except TypeError:
                return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if not isinstance(other, RationalExpr):
            try:
                other = RationalExpr.coerce(other, self.space)
            except TypeError:
                return NotImplemented
        space, a, b = self._align(other)
        if a.den.is_ground and b.den.is_ground:
            return RationalExpr(space, a.num * b.num, a.den * b.den, normalize=False)
        return RationalExpr(space, a.num * b.num, a.den * b.den)

    __rmul__ = __mul__

    def inverse(self) -> RationalExpr:
        if self.is_zero:
            raise DenominatorVanishes("division by zero")
        return RationalExpr(self.space, self.den, self.num)

    def __truediv__(self, other):
        if not isinstance(other, RationalExpr):
            try:
                other = RationalExpr.coerce(other, self.space)
            except TypeError:
                return NotImplemented
        return self * other.inverse()

    def __rtruediv__(self, other):
        return RationalExpr.coerce(other, self.space) * self.inverse()

    def __pow__(self, n: int):
        if not isinstance(n, int):
            return NotImplemented
        if n < 0:
            return self.inverse() ** (-n)
        return RationalExpr(self.space, self.num**n, self.den**n, normalize=False)

    def __eq__(self, other):
        if not isinstance(other, RationalExpr):
            try:
                other = RationalExpr.coerce(other, self.space)
            except TypeError:
                return NotImplemented
        return equals_exact(self, other)

    def __hash__(self):
        return hash(str(self))

    # evaluation ---------------------------------------------------------
    def evaluate(self, assignment: Mapping[str, complex | np.ndarray]):
        """Numeric value; array-valued assignments are evaluated elementwise."""
        missing = self.free_variables() - set(assignment)
        if missing:
            raise UnboundVariable(missing)
        names = self.space.names

        def ev(p):
            total = 0
            for monom, c in p.items():
                term = float(c)
                for k, e in enumerate(monom):
                    if e:
                        term = term * assignment[names[k]] ** e
                total = total + term
            return total

        return ev(self.num) / ev(self.den)

    def specialize(self, bindings: Mapping[str, object]) -> RationalExpr:
        return specialize(self, bindings)

    # printing -----------------------------------------------------------
    def __str__(self):
        num = _poly_str(self.num, self.space.names)
        if self.is_polynomial:
            return num
        return f"({num})/({_poly_str(self.den, self.space.names)})"

    def __repr__(self):
        return f"RationalExpr({self})"


def _reduce(num: PolyElement, den: PolyElement) -> tuple[PolyElement, PolyElement]:
    if not num:
        return num, den.ring.one
    if not den.is_ground:
        _, num, den = num.cofactors(den)
    return _unit(num, den)


def _unit(num: PolyElement, den: PolyElement) -> tuple[PolyElement, PolyElement]:
    if not num:
        return num, den.ring.one
    lc = den.LC
    if lc != 1:
        num = num.quo_ground(lc)
        den = den.quo_ground(lc)
    return num, den


def _coeff_str(c) -> str:
    n, d = int(QQ.numer(c)), int(QQ.denom(c))
    return str(n) if d == 1 else f"{n}/{d}"


def _poly_str(p: PolyElement, names: tuple[str, ...]) -> str:
    if not p:
        return "0"
    parts = []
    for monom, c in p.terms():
        factors = [names[k] if e == 1 else f"{names[k]}^{e}" for k, e in enumerate(monom) if e]
        neg = c < 0
        mag = -c if neg else c
        cs = _coeff_str(mag)
        if not factors:
            body = cs
        elif cs == "1":
            body = "*".join(factors)
        else:
            body = cs + "*" + "*".join(factors)
        if not parts:
            parts.append(("-" if neg else "") + body)
        else:
            parts.append((" - " if neg else " + ") + body)
    return "".join(parts)


def arith(a: RationalExpr, b: RationalExpr, op: str) -> RationalExpr:
    if op == "add":
        return a + b
    if op == "sub":
        return a - b
    if op == "mul":
        return a * b
    if op == "div":
        return a / b
    raise ValueError(f"unknown operation {op!r}")


def equals_exact(a: RationalExpr, b: RationalExpr) -> bool:
    space, a, b = a._align(b)
    return a.num * b.den == b.num * a.den


def permutation_name_map(space_or_vertices, sigma: ColoredPermutation) -> dict[str, str]:
    vertices = space_or_vertices.vertices if isinstance(space_or_vertices, VarSpace) else tuple(space_or_vertices)
    if len(sigma.lam) != len(vertices):
        raise ShapeMismatch("permutation and variable space have different vertex sets")
    mapping = {}
    for x, block in zip(vertices, sigma.lam):
        for s, t in enumerate(block, 1):
            if s != t:
                mapping[lam(x, s)] = lam(x, t)
    for x, block in zip(vertices, sigma.z):
        for s, t in enumerate(block, 1):
            if s != t:
                mapping[zf(x, s)] = zf(x, t)
    return mapping


def apply_permutation(e: RationalExpr, sigma: ColoredPermutation) -> RationalExpr:
    """Rename l[i,s] -> l[i,sigma_i(s)] and zf[j,t] -> zf[j,sigma_j(t)]."""
    if sigma.shape != e.space.dims:
        raise ShapeMismatch(f"permutation of shape {sigma.shape} on space {e.space.dims}")
    mapping = permutation_name_map(e.space, sigma)
    return e.rename(mapping) if mapping else e


def group_elements(d: DimPair) -> Iterable[ColoredPermutation]:
    """All of S_v x S_w, identity first."""
    blocks = [list(permutations(range(1, n + 1))) for n in d.v + d.w]
    nv = len(d.v)
    for choice in product(*blocks):
        yield ColoredPermutation(tuple(choice[:nv]), tuple(choice[nv:]))


def symmetrize(e: RationalExpr) -> RationalExpr:
    return rational_sum(apply_permutation(e, s) for s in group_elements(e.space.dims))


def rational_sum(exprs: Iterable[RationalExpr]) -> RationalExpr:
    """Sum with one lcm pass over denominators instead of pairwise fractions."""
    exprs = list(exprs)
    if not exprs:
        return RationalExpr.const(0)
    space = exprs[0].space
    for e in exprs[1:]:
        space = space.join(e.space)
    exprs = [e.embed(space) for e in exprs]
    ring = space.ring
    dens = []
    lcm = ring.one
    for e in exprs:
        if e.den.is_ground or e.den == lcm:
            continue
        if any(e.den == d for d in dens):
            continue
        dens.append(e.den)
        g = lcm.gcd(e.den)
        lcm = lcm * e.den.exquo(g)
    num = ring.zero
    for e in exprs:
        if e.den == lcm:
            num += e.num
        elif e.den == ring.one:
            num += e.num * lcm
        else:
            num += e.num * lcm.exquo(e.den)
    return RationalExpr(space, num, lcm)


def specialize(e: RationalExpr, bindings: Mapping[str, object]) -> RationalExpr:
    """Substitute variables simultaneously; raises if the denominator dies."""
    vals = {}
    space = e.space
    for name, value in bindings.items():
        if name == HBAR:
            raise ValueError("hbar is an alias for t1+t2 and cannot be bound")
        value = RationalExpr.coerce(value)
        vals[name] = value
        space = space.join(value.space)
    vals = {k: x.embed(space) for k, x in vals.items() if k in e.space}
    e = e.embed(space)
    if not vals:
        return e
    ring = space.ring
    if all(x.is_polynomial for x in vals.values()):
        pairs = [(ring.gens[space.index[k]], x.num) for k, x in vals.items()]
        num = e.num.compose(pairs)
        den = e.den.compose(pairs)
        if not den:
            raise DenominatorVanishes(f"denominator of {e} vanishes under {dict(bindings)}")
        return RationalExpr(space, num, den)
    names = space.names

    def subst(p):
        total = RationalExpr.const(0, space)
        for monom, c in p.items():
            term = RationalExpr.const(Fraction(int(QQ.numer(c)), int(QQ.denom(c))), space)
            for k, ek in enumerate(monom):
                if ek:
                    base = vals.get(names[k]) or RationalExpr.var(names[k], space)
                    term = term * base**ek
            total = total + term
        return total

    den = subst(e.den)
    if den.is_zero:
        raise DenominatorVanishes(f"denominator of {e} vanishes under {dict(bindings)}")
    return subst(e.num) / den
