"""Elliptic specializations of fac in type A and iterated-shuffle weight functions.

Type-A conventions: the quiver is 1 -> 2 -> ... -> N-1 with weights (1, 1),
and only vertex N-1 is framed.  The framing variables zf[N-1, t] stand in
for a fictitious level-N block lambda^(N), so a configuration has level
dimensions v^(1..N-1) followed by v^(N) = n.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

from .quiver import DimPair, Quiver, shuffle_count, sl2, type_a
from .shuffle import ELLIPTIC, ShuffleElement, build_fac, element, shuffle_product
from .symbolic import T1, T2, VarSpace, lam, zf
from .theta import AffineForm, SamplePlan, ThetaExpr, ThetaParams, compare_values, sample_assignments

__all__ = [
    "TypeAConfig",
    "frv_fac",
    "engine_frv_fac",
    "konno_H",
    "h_cross",
    "h_cross_expanded",
    "konno_rhs",
    "konno_sign",
    "KonnoReport",
    "konno_division_check",
    "weight_function_sl2",
    "weight_function_terms",
]


@dataclass(frozen=True)
class TypeAConfig:
    N: int
    v1: tuple[int, ...]
    v2: tuple[int, ...]
    n: int = 0
    m: int = 0

    def __post_init__(self):
        if self.N < 2:
            raise ValueError("type A configurations need N >= 2")
        object.__setattr__(self, "v1", tuple(int(x) for x in self.v1))
        object.__setattr__(self, "v2", tuple(int(x) for x in self.v2))
        for v in (self.v1, self.v2):
            if len(v) != self.N - 1:
                raise ValueError(f"expected {self.N - 1} level dimensions, got {len(v)}")
        if min(self.v1 + self.v2 + (self.n, self.m)) < 0:
            raise ValueError("dimensions must be natural numbers")

    @property
    def quiver(self) -> Quiver:
        return type_a(self.N)

    def framing(self, k: int) -> tuple[int, ...]:
        return (0,) * (self.N - 2) + (k,)

    @property
    def d1(self) -> DimPair:
        return DimPair(self.v1, self.framing(self.n))

    @property
    def d2(self) -> DimPair:
        return DimPair(self.v2, self.framing(self.m))

    @property
    def space(self) -> VarSpace:
        return VarSpace.for_dims(self.quiver, self.d1 + self.d2)

    def levels(self, which: int) -> tuple[int, ...]:
        """v^(1..N) of the first (1) or second (2) factor."""
        return self.v1 + (self.n,) if which == 1 else self.v2 + (self.m,)


def _level_var(cfg: TypeAConfig, level: int, index: int, which: int) -> str:
    """Joint-namespace name of lambda'^(level)_index (which=1) or lambda''^(level)_index (which=2)."""
    top = cfg.N - 1
    if level == cfg.N:
        offset = cfg.n if which == 2 else 0
        return zf(str(top), index + offset)
    offset = cfg.v1[level - 1] if which == 2 else 0
    return lam(str(level), index + offset)


def _form(plus: str, minus: str, t1: int = 0, t2: int = 0) -> AffineForm:
    coeffs = {plus: 1, minus: -1}
    if t1:
        coeffs[T1] = t1
    if t2:
        coeffs[T2] = t2
    return AffineForm.of(coeffs)


# sl2 at t1 = hbar, t2 = 0 ----------------------------------------------------

def frv_fac(k1: int, k2: int, n1: int, n2: int) -> ThetaExpr:
    """The sl2 factor at t1 = hbar, t2 = 0, written out directly (hbar carried by t1)."""
    q = sl2()
    space = VarSpace.for_dims(q, DimPair((k1 + k2,), (n1 + n2,)))
    factors = []
    for s in range(1, k1 + 1):
        for t in range(k1 + 1, k1 + k2 + 1):
            factors.append((_form(lam("1", s), lam("1", t), t1=1), 1))
            factors.append((_form(lam("1", t), lam("1", s)), -1))
    for s in range(1, k1 + 1):
        for t in range(n1 + 1, n1 + n2 + 1):
            factors.append((_form(zf("1", t), lam("1", s), t1=1), 1))
    for s in range(1, n1 + 1):
        for t in range(k1 + 1, k1 + k2 + 1):
            factors.append((_form(lam("1", t), zf("1", s)), 1))
    return ThetaExpr.monomial(factors, 1, space)


def engine_frv_fac(k1: int, k2: int, n1: int, n2: int) -> ThetaExpr:
    """The shuffle engine's elliptic fac for sl2 specialized at t2 = 0."""
    fac = build_fac(sl2(), DimPair((k1,), (n1,)), DimPair((k2,), (n2,)), ELLIPTIC)
    return fac.specialize({T2: 0})


# type A division identity ------------------------------------------------------

def _h_factors(cfg: TypeAConfig, levels: Sequence[int], name) -> list[tuple[AffineForm, int]]:
    out = []
    for l in range(1, cfg.N):
        for s in range(1, levels[l - 1] + 1):
            for t in range(1, levels[l] + 1):
                out.append((_form(name(l + 1, t), name(l, s), t1=1), 1))
    return out


def konno_H(cfg: TypeAConfig, which: int = 0) -> ThetaExpr:
    """H over the joint variables (which=0), the first factor (1) or the second factor (2)."""
    if which == 0:
        levels = tuple(a + b for a, b in zip(cfg.levels(1), cfg.levels(2)))

        def name(level, idx):
            if level == cfg.N:
                return zf(str(cfg.N - 1), idx)
            return lam(str(level), idx)
    else:
        levels = cfg.levels(which)

        def name(level, idx):
            return _level_var(cfg, level, idx, which)
    return ThetaExpr.monomial(_h_factors(cfg, levels, name), 1, cfg.space)


def h_cross(cfg: TypeAConfig) -> ThetaExpr:
    """Quotient form H(joint) / (H(first) H(second))."""
    return konno_H(cfg, 0) / (konno_H(cfg, 1) * konno_H(cfg, 2))


def h_cross_expanded(cfg: TypeAConfig) -> ThetaExpr:
    """Product of the cross factors between the two variable blocks."""
    a, b = cfg.levels(1), cfg.levels(2)
    factors = []
    for l in range(1, cfg.N):
        for s in range(1, a[l - 1] + 1):
            for t in range(1, b[l] + 1):
                factors.append((_form(_level_var(cfg, l + 1, t, 2), _level_var(cfg, l, s, 1), t1=1), 1))
        for t in range(1, a[l] + 1):
            for s in range(1, b[l - 1] + 1):
                factors.append((_form(_level_var(cfg, l + 1, t, 1), _level_var(cfg, l, s, 2), t1=1), 1))
    return ThetaExpr.monomial(factors, 1, cfg.space)


def konno_sign(cfg: TypeAConfig, reading: str = "bilinear") -> int:
    """Sign in front of fac / H_cross.

    ``bilinear`` is (-1)^(sum_l v1^(l+1) v2^(l)), one flip per reversed
    theta(lambda''^(l) - lambda'^(l+1) + t2) factor.  ``additive`` is
    prod_l (-1)^(v1^(l+1) + v2^(l)), kept for comparison.
    """
    a, b = cfg.levels(1), cfg.levels(2)
    if reading == "bilinear":
        e = sum(a[l] * b[l - 1] for l in range(1, cfg.N))
    elif reading == "additive":
        e = sum(a[l] + b[l - 1] for l in range(1, cfg.N))
    else:
        raise ValueError(f"unknown sign reading {reading!r}")
    return -1 if e % 2 else 1


def konno_rhs(cfg: TypeAConfig, reading: str = "bilinear") -> ThetaExpr:
    a, b = cfg.levels(1), cfg.levels(2)
    factors = []
    for l in range(1, cfg.N):
        for s in range(1, a[l - 1] + 1):
            for t in range(1, b[l - 1] + 1):
                p, pp = _level_var(cfg, l, s, 1), _level_var(cfg, l, t, 2)
                factors.append((_form(p, pp, t1=1, t2=1), 1))
                factors.append((_form(pp, p), -1))
        for t in range(1, a[l] + 1):
            for s in range(1, b[l - 1] + 1):
                up, low = _level_var(cfg, l + 1, t, 1), _level_var(cfg, l, s, 2)
                factors.append((_form(up, low, t2=-1), 1))
                factors.append((_form(up, low, t1=1), -1))
    return ThetaExpr.monomial(factors, konno_sign(cfg, reading), cfg.space)


@dataclass
class KonnoReport:
    config: TypeAConfig
    reading: str
    passed: bool
    max_deviation: float
    max_deviation_specialized: float
    samples: int
    tol: float
    detail: str = field(default="")

    def __bool__(self):
        return self.passed


def konno_division_check(cfg: TypeAConfig, plan: SamplePlan | None = None, params: ThetaParams | None = None,
                         tol: float = 1e-8, reading: str = "bilinear") -> KonnoReport:
    """Sample fac / H_cross against the closed right-hand side, generically and at t1=-1, t2=0.

    The left side is evaluated numerically as fac(point) / H_cross(point)
    without symbolic cancellation between the two.
    """
    plan = plan or SamplePlan()
    params = params or ThetaParams()
    fac = build_fac(cfg.quiver, cfg.d1, cfg.d2, ELLIPTIC)
    cross = h_cross(cfg)
    rhs = konno_rhs(cfg, reading)
    devs = []
    ok = True
    for bindings in ({}, {T1: -1, T2: 0}):
        f, c, r = (e.specialize(bindings) if bindings else e for e in (fac, cross, rhs))
        point = sample_assignments([f, c, r], plan, params)
        lhs = f.evaluate(point, params, None) / c.evaluate(point, params, None)
        rep = compare_values(lhs, r.evaluate(point, params, None), tol, plan.samples)
        devs.append(rep.max_scaled)
        ok &= rep.passed
    return KonnoReport(cfg, reading, bool(ok), devs[0], devs[1], plan.samples, tol)


# weight functions -------------------------------------------------------------

def _weight_factors(k: int, n: int) -> list[ShuffleElement]:
    if k < 0 or n < 0:
        raise ValueError("k and n must be natural numbers")
    if k > n:
        raise ValueError(f"weight functions need k <= n (got k={k}, n={n})")
    q = sl2()
    x = element(q, 1, v=1, w=0, kernel=ELLIPTIC)
    return [x] * k + [element(q, 1, v=0, w=n, kernel=ELLIPTIC)]


def weight_function_sl2(k: int, n: int) -> ShuffleElement:
    """((x * x) * ... * x) * 1_(0, n) with k copies of x = 1 in grading (1, 0), at t2 = 0."""
    factors = _weight_factors(k, n)
    acc = factors[0]
    for f in factors[1:]:
        acc = shuffle_product(acc, f)
    return acc.specialize({T2: 0})


def weight_function_terms(k: int, n: int) -> int:
    """Number of shuffle terms generated by the left-to-right recursion."""
    factors = _weight_factors(k, n)
    total, grading = 1, factors[0].grading
    for f in factors[1:]:
        total *= shuffle_count(grading, f.grading)
        grading = grading + f.grading
    return total
