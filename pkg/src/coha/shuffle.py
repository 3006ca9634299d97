"""Shuffle product of the (framed) shuffle algebra SH over a quiver.

For f in SH_{d1} and g in SH_{d2} the product lives in SH_{d1+d2}: the
second factor's variables are shifted past the first factor's (l[i,s] ->
l[i,s+v1_i], zf[j,t] -> zf[j,t+w1_j]) and

    f * g = sum over colored shuffles sigma of sigma(f . g . fac1 . fac2).

Every linear form in fac1/fac2 is passed through the kernel K: the identity
(additive), the multiplicative formal group law x + y - beta x y
(multiplicative), or theta (elliptic).
"""
from __future__ import annotations

import time
from collections import Counter
from functools import lru_cache
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Union

import flint

from .errors import GradingError, KernelMismatch, ShapeMismatch
from .quiver import ColoredPermutation, DimPair, Quiver, colored_shuffles
from .symbolic import T1, T2, RationalExpr, VarSpace, equals_exact, lam, permutation_name_map, zf
from .symbolic import apply_permutation
from .theta import AffineForm, SamplePlan, ThetaExpr, ThetaParams, compare_values, sample_assignments

__all__ = [
    "Kernel",
    "ADDITIVE",
    "MULTIPLICATIVE",
    "ELLIPTIC",
    "ShuffleElement",
    "element",
    "unit",
    "fac1_factors",
    "fac2_factors",
    "build_fac1",
    "build_fac2",
    "build_fac",
    "shuffle_terms",
    "shuffle_product",
    "classical_limit",
    "classical_sign",
    "classical_weight_condition",
    "classical_commutator",
    "verify_associativity",
    "AssociativityReport",
]

Payload = Union[RationalExpr, ThetaExpr]


@dataclass(frozen=True)
class Kernel:
    tag: str = "additive"
    beta: Fraction = Fraction(1)

    def __post_init__(self):
        if self.tag not in ("additive", "multiplicative", "elliptic"):
            raise ValueError(f"unknown kernel {self.tag!r}")
        object.__setattr__(self, "beta", Fraction(self.beta))
        if self.tag == "multiplicative" and self.beta == 0:
            raise ValueError("multiplicative kernel needs beta != 0")

    @property
    def is_rational(self) -> bool:
        return self.tag != "elliptic"

    def __str__(self):
        return self.tag if self.tag != "multiplicative" else f"multiplicative(beta={self.beta})"

    # K applied to one linear form, as (numerator poly, [denominator polys]) in ``space``
    def _rational_factor(self, form: AffineForm, space: VarSpace):
        ring = space.ring
        if self.tag == "additive":
            return form.to_rational(space).num, []
        if not form.is_constant and form.const != 0:
            raise ValueError("the multiplicative kernel acts on forms without constant term")
        b = RationalExpr.const(self.beta, space).num.LC
        pos, neg = ring.one, ring.one
        dens = []
        for name, c in form.coeffs:
            base = ring.one - ring.gens[space.index[name]] * b
            if c > 0:
                pos *= base**c
            else:
                neg *= base ** (-c)
                dens.extend([base] * (-c))
        # [l]_F = (1 - prod (1 - beta x_k)^{c_k}) / beta
        return (neg - pos).quo_ground(b), dens

    def rational_payload(self, factors, space: VarSpace) -> RationalExpr:
        out = RationalExpr.const(1, space)
        for form, e in factors:
            num, dens = self._rational_factor(form, space)
            den = space.ring.one
            for d in dens:
                den *= d
            val = RationalExpr(space, num, den)
            out = out * (val if e > 0 else val.inverse()) ** abs(e)
        return out

    def payload(self, factors, space: VarSpace) -> Payload:
        if self.tag == "elliptic":
            return ThetaExpr.monomial(factors, 1, space)
        return self.rational_payload(factors, space)


ADDITIVE = Kernel("additive")
MULTIPLICATIVE = Kernel("multiplicative")
ELLIPTIC = Kernel("elliptic")


def _space(q: Quiver, d: DimPair) -> VarSpace:
    return VarSpace.for_dims(q, d)


def _second_map(q: Quiver, d1: DimPair, d2: DimPair) -> dict[str, str]:
    """Names of the second factor's variables inside the joint namespace."""
    mapping = {}
    for x, a, b in zip(q.vertices, d1.v, d2.v):
        for s in range(1, b + 1):
            mapping[lam(x, s)] = lam(x, s + a)
    for x, a, b in zip(q.vertices, d1.w, d2.w):
        for t in range(1, b + 1):
            mapping[zf(x, t)] = zf(x, t + a)
    return mapping


def fac1_factors(q: Quiver, d1: DimPair, d2: DimPair) -> list[tuple[AffineForm, int]]:
    out = []
    for x, a, b in zip(q.vertices, d1.v, d2.v):
        for s in range(1, a + 1):
            for t in range(1, b + 1):
                first, second = lam(x, s), lam(x, a + t)
                out.append((AffineForm.of({first: 1, second: -1, T1: 1, T2: 1}), 1))
                out.append((AffineForm.of({second: 1, first: -1}), -1))
    return out


def fac2_factors(q: Quiver, d1: DimPair, d2: DimPair) -> list[tuple[AffineForm, int]]:
    out = []
    v1 = dict(zip(q.vertices, d1.v))
    v2 = dict(zip(q.vertices, d2.v))
    for h in q.arrows:
        m_h, m_hs = h.weights
        src, tgt = h.src, h.tgt
        for s in range(1, v1[src] + 1):
            for t in range(1, v2[tgt] + 1):
                out.append((AffineForm(((lam(tgt, v1[tgt] + t), 1), (lam(src, s), -1), (T1, m_h))), 1))
        for s in range(1, v1[tgt] + 1):
            for t in range(1, v2[src] + 1):
                out.append((AffineForm(((lam(src, v1[src] + t), 1), (lam(tgt, s), -1), (T2, m_hs))), 1))
    for x, a1, b1, a2, b2 in zip(q.vertices, d1.v, d1.w, d2.v, d2.w):
        for s in range(1, a1 + 1):
            for t in range(1, b2 + 1):
                out.append((AffineForm.of({zf(x, b1 + t): 1, lam(x, s): -1, T1: 1}), 1))
        for s in range(1, b1 + 1):
            for t in range(1, a2 + 1):
                out.append((AffineForm.of({lam(x, a1 + t): 1, zf(x, s): -1, T2: 1}), 1))
    return out


def build_fac1(q: Quiver, d1: DimPair, d2: DimPair, kernel: Kernel = ADDITIVE) -> Payload:
    return kernel.payload(fac1_factors(q, d1, d2), _space(q, d1 + d2))


def build_fac2(q: Quiver, d1: DimPair, d2: DimPair, kernel: Kernel = ADDITIVE) -> Payload:
    return kernel.payload(fac2_factors(q, d1, d2), _space(q, d1 + d2))


def build_fac(q: Quiver, d1: DimPair, d2: DimPair, kernel: Kernel = ADDITIVE) -> Payload:
    return kernel.payload(fac1_factors(q, d1, d2) + fac2_factors(q, d1, d2), _space(q, d1 + d2))


@dataclass(frozen=True)
class ShuffleElement:
    quiver: Quiver
    kernel: Kernel
    grading: DimPair
    payload: Payload

    @property
    def space(self) -> VarSpace:
        return _space(self.quiver, self.grading)

    def _check(self, other: ShuffleElement):
        if self.kernel != other.kernel:
            raise KernelMismatch(f"kernels differ: {self.kernel} vs {other.kernel}")
        if self.quiver != other.quiver:
            raise GradingError("elements live over different quivers")

    def __add__(self, other: ShuffleElement) -> ShuffleElement:
        self._check(other)
        if self.grading != other.grading:
            raise GradingError(f"cannot add elements of gradings {self.grading} and {other.grading}")
        return replace(self, payload=self.payload + other.payload)

    def __neg__(self) -> ShuffleElement:
        return replace(self, payload=-self.payload)

    def __sub__(self, other: ShuffleElement) -> ShuffleElement:
        return self + (-other)

    def scale(self, c) -> ShuffleElement:
        return replace(self, payload=self.payload * c)

    def specialize(self, bindings) -> ShuffleElement:
        return replace(self, payload=self.payload.specialize(bindings))

    def is_symmetric(self, plan: SamplePlan | None = None, params: ThetaParams | None = None, tol: float = 1e-9) -> bool:
        """Exact for rational payloads; sampled (adjacent transpositions) for theta payloads."""
        space = self.space
        gens = _adjacent_transpositions(self.grading)
        if isinstance(self.payload, RationalExpr):
            return all(equals_exact(apply_permutation(self.payload, s), self.payload) for s in gens)
        plan = plan or SamplePlan()
        params = params or ThetaParams()
        images = [self.payload.rename(permutation_name_map(space, s), space) for s in gens]
        if not images:
            return True
        point = sample_assignments([self.payload, *images], plan, params)
        base = self.payload.evaluate(point, params, pole_radius=None)
        return all(compare_values(base, im.evaluate(point, params, pole_radius=None), tol, plan.samples).passed for im in images)

    def __str__(self):
        return str(self.payload)


def _adjacent_transpositions(d: DimPair):
    ident = [tuple(range(1, n + 1)) for n in d.v + d.w]
    nv = len(d.v)
    for k, n in enumerate(d.v + d.w):
        for s in range(1, n):
            blocks = list(ident)
            b = list(blocks[k])
            b[s - 1], b[s] = b[s], b[s - 1]
            blocks[k] = tuple(b)
            yield ColoredPermutation(tuple(blocks[:nv]), tuple(blocks[nv:]))


def element(q: Quiver, payload, v=None, w=None, kernel: Kernel = ADDITIVE) -> ShuffleElement:
    """Wrap a payload (number, text, RationalExpr or ThetaExpr) at grading (v, w)."""
    d = q.dims(v, w)
    space = _space(q, d)
    if isinstance(payload, str):
        from .textio import parse_expression

        payload = parse_expression(payload, space)
    if kernel.tag == "elliptic":
        payload = ThetaExpr.coerce(payload, space)
    elif isinstance(payload, ThetaExpr):
        raise KernelMismatch("theta payloads need the elliptic kernel")
    else:
        payload = RationalExpr.coerce(payload, space)
    try:
        payload = payload.embed(space)
    except ShapeMismatch as exc:
        raise GradingError(f"payload uses variables outside grading {d}: {exc}") from exc
    return ShuffleElement(q, kernel, d, payload)


def unit(q: Quiver, kernel: Kernel = ADDITIVE) -> ShuffleElement:
    return element(q, 1, kernel=kernel)


def _embedded(f: ShuffleElement, g: ShuffleElement):
    q = f.quiver
    d = f.grading + g.grading
    space = _space(q, d)
    first = f.payload.embed(space)
    second = g.payload.rename(_second_map(q, f.grading, g.grading), space)
    return d, space, first, second


def shuffle_terms(f: ShuffleElement, g: ShuffleElement) -> list[Payload]:
    """The individual sigma-terms of f * g, in lexicographic shuffle order."""
    f._check(g)
    q, k = f.quiver, f.kernel
    d, space, first, second = _embedded(f, g)
    base = first * second * build_fac(q, f.grading, g.grading, k)
    out = []
    for sigma in colored_shuffles(f.grading, g.grading):
        mapping = permutation_name_map(space, sigma)
        out.append(base.rename(mapping, space) if mapping else base)
    return out


def shuffle_product(f: ShuffleElement, g: ShuffleElement) -> ShuffleElement:
    f._check(g)
    d = f.grading + g.grading
    if f.kernel.is_rational:
        payload = _rational_product(f, g)
    else:
        payload = ThetaExpr({}, _space(f.quiver, d))
        for term in shuffle_terms(f, g):
            payload = payload + term
    return ShuffleElement(f.quiver, f.kernel, d, payload)


def _monic(p):
    lc = p.LC
    return p.quo_ground(lc), lc


def _rational_product(f: ShuffleElement, g: ShuffleElement) -> RationalExpr:
    # Denominators are tracked as multisets of monic factors so the sum over
    # shuffles needs no polynomial gcd; the bulky numerator work runs in flint.
    q, k = f.quiver, f.kernel
    d, space, first, second = _embedded(f, g)
    ring = space.ring
    ctx = _flint_ctx(space.names)
    num_f = _to_flint(first.num, ctx) * _to_flint(second.num, ctx)
    dens = [p for p in (first.den, second.den) if not p.is_ground]
    for form, e in fac1_factors(q, f.grading, g.grading) + fac2_factors(q, f.grading, g.grading):
        fnum, fdens = k._rational_factor(form, space)
        if e > 0:
            num_f *= _to_flint(fnum, ctx)
            dens.extend(fdens)
        else:
            for fd in fdens:
                num_f *= _to_flint(fd, ctx)
            dens.append(fnum)
    coeff = 1
    base_dens = []
    for p in dens:
        m, lc = _monic(p)
        coeff *= lc
        base_dens.append(m)
    if coeff != 1:
        num_f = num_f / _to_fmpq(coeff)

    gens = ctx.gens()
    terms = []
    lcm: Counter = Counter()
    for sigma in colored_shuffles(f.grading, g.grading):
        mapping = permutation_name_map(space, sigma)
        if mapping:
            idx = _index_map(space, mapping)
            n_s = num_f.compose(*[gens[i] for i in idx])
            c = 1
            ds = Counter()
            for p in base_dens:
                m, lc = _monic(_permute(p, ring, idx))
                c *= lc
                ds[m] += 1
            if c != 1:
                n_s = n_s / _to_fmpq(c)
        else:
            n_s, ds = num_f, Counter(base_dens)
        terms.append((n_s, ds))
        for key, mult in ds.items():
            if mult > lcm[key]:
                lcm[key] = mult
    keys = {key: _to_flint(key, ctx) for key in lcm}
    total = ctx.from_dict({})
    for n_s, ds in terms:
        t = n_s
        for key, mult in lcm.items():
            missing = mult - ds.get(key, 0)
            if missing:
                t = t * keys[key] ** missing
        total += t
    den = ring.one
    opaque = False
    for key, mult in lcm.items():
        opaque |= max(sum(m) for m in key.itermonoms()) != 1
        while mult and not total.is_zero():
            quo, rem = divmod(total, keys[key])
            if not rem.is_zero():
                break
            total, mult = quo, mult - 1
        if mult:
            den *= key**mult
    return RationalExpr(space, _from_flint(total, ring), den, normalize=True if opaque else "unit")


@lru_cache(maxsize=256)
def _flint_ctx(names: tuple[str, ...]):
    return flint.fmpq_mpoly_ctx.get(tuple(f"x{i}" for i in range(len(names))), "deglex")


def _to_fmpq(c):
    c = Fraction(int(c.numerator), int(c.denominator))
    return flint.fmpq(c.numerator, c.denominator)


def _to_flint(p, ctx):
    return ctx.from_dict({m: _to_fmpq(c) for m, c in p.items()})


def _from_flint(fp, ring):
    dom = ring.domain
    terms = {tuple(map(int, m)): dom(int(c.p), int(c.q)) for m, c in fp.to_dict().items()}
    return ring.from_dict(terms) if terms else ring.zero


def _index_map(space: VarSpace, mapping: dict[str, str]) -> list[int]:
    idx = space.index
    return [idx[mapping.get(n, n)] for n in space.names]


def _permute(p, ring, index):
    n = ring.ngens
    terms = {}
    for monom, c in p.items():
        e = [0] * n
        for k, ek in enumerate(monom):
            if ek:
                e[index[k]] = ek
        terms[tuple(e)] = c
    return ring.from_dict(terms) if terms else ring.zero


def _classical_bindings(kernel: Kernel) -> dict:
    t1 = RationalExpr.var(T1)
    if kernel.tag == "multiplicative":
        # formal inverse of t1 under x + y - beta x y
        return {T2: -t1 / (1 - t1 * kernel.beta)}
    return {T2: -t1}


def classical_limit(x: ShuffleElement) -> ShuffleElement:
    """Specialize at hbar = 0, i.e. t2 := -t1 (the formal inverse for the multiplicative kernel)."""
    return x.specialize(_classical_bindings(x.kernel))


def classical_weight_condition(q: Quiver) -> bool:
    """m_h t1 + m_h* t2 vanishes at t2 = -t1 for every arrow."""
    return all(a.m_h == a.m_hstar for a in q.arrows)


def classical_sign(q: Quiver, d1: DimPair, d2: DimPair) -> int:
    """Sign s with f*g = s g*f at hbar = 0 for odd kernels under the weight condition.

    Each arrow i->j contributes v1_i v2_j + v1_j v2_i sign flips and each
    framed vertex v1_i w2_i + w1_i v2_i; same-vertex fac1 factors cancel.
    """
    v1 = dict(zip(q.vertices, d1.v))
    v2 = dict(zip(q.vertices, d2.v))
    chi = sum(v1[a.src] * v2[a.tgt] + v1[a.tgt] * v2[a.src] for a in q.arrows)
    chi += sum(a * d + b * c for a, b, c, d in zip(d1.v, d1.w, d2.v, d2.w))
    return -1 if chi % 2 else 1


def classical_commutator(f: ShuffleElement, g: ShuffleElement, twisted: bool = False) -> ShuffleElement:
    """(f*g - s g*f) at hbar = 0, with s = 1 or the classical sign when ``twisted``."""
    fg = shuffle_product(f, g)
    gf = shuffle_product(g, f)
    s = classical_sign(f.quiver, f.grading, g.grading) if twisted else 1
    return classical_limit(fg - gf.scale(s))


@dataclass
class AssociativityReport:
    passed: bool
    mode: str
    max_deviation: float = 0.0
    term_counts: tuple[int, int] = (0, 0)
    seconds: float = 0.0
    detail: str = field(default="")

    def __bool__(self):
        return self.passed


def verify_associativity(f: ShuffleElement, g: ShuffleElement, h: ShuffleElement, mode: str = "exact",
                         plan: SamplePlan | None = None, params: ThetaParams | None = None,
                         tol: float = 1e-8) -> AssociativityReport:
    if mode not in ("exact", "sampled"):
        raise ValueError(f"unknown mode {mode!r}")
    f._check(g)
    f._check(h)
    start = time.perf_counter()
    left = shuffle_product(shuffle_product(f, g), h)
    right = shuffle_product(f, shuffle_product(g, h))
    counts = (_term_count(left.payload), _term_count(right.payload))
    if mode == "exact":
        if not isinstance(left.payload, RationalExpr):
            raise ValueError("exact associativity needs a rational kernel; use mode='sampled'")
        ok = equals_exact(left.payload, right.payload)
        dev = 0.0 if ok else float("inf")
        return AssociativityReport(ok, mode, dev, counts, time.perf_counter() - start)
    plan = plan or SamplePlan()
    params = params or ThetaParams()
    a = ThetaExpr.coerce(left.payload)
    b = ThetaExpr.coerce(right.payload)
    point = sample_assignments([a, b], plan, params)
    rep = compare_values(a.evaluate(point, params, None), b.evaluate(point, params, None), tol, plan.samples)
    return AssociativityReport(rep.passed, mode, rep.max_scaled, counts, time.perf_counter() - start)


def _term_count(p: Payload) -> int:
    return len(p) if isinstance(p, ThetaExpr) else len(p.num)
