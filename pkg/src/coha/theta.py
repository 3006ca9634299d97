"""Odd Jacobi theta function and formal sums of theta monomials.

``theta`` is normalized so that theta'(0) = 1::

    theta(z) = sin(pi z)/pi * prod_{n>=1} (1 - q^n y)(1 - q^n / y) / (1 - q^n)^2

with q = exp(2 pi i tau) and y = exp(2 pi i z).  ``theta_sum_form`` evaluates
the same function from the classical theta_1 Fourier series and is kept as an
independent cross-check.

Sample points for probabilistic equality are drawn from
``numpy.random.Generator(PCG64(seed))``: per batch, for each free variable in
canonical order, a block of uniform real parts followed by a block of uniform
imaginary parts.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping

import numpy as np

from .errors import DenominatorVanishes, PoleError, PrecisionError, SamplingError, UnboundVariable
from .symbolic import EMPTY_SPACE, RationalExpr, VarSpace, var_key

__all__ = [
    "ThetaParams",
    "theta",
    "theta_eval",
    "theta_sum_form",
    "AffineForm",
    "ThetaExpr",
    "SamplePlan",
    "EqualityReport",
    "sample_assignments",
    "theta_expr_eval",
    "theta_equal_probabilistic",
    "scaled_deviation",
]

MAX_TERMS = 10_000


@dataclass(frozen=True)
class ThetaParams:
    tau: complex = 0.31 + 0.79j
    precision: float = 1e-15

    def __post_init__(self):
        object.__setattr__(self, "tau", complex(self.tau))
        if self.tau.imag <= 0:
            raise ValueError(f"modulus tau={self.tau} must have positive imaginary part")
        if not self.precision > 0:
            raise ValueError("precision must be positive")

    @property
    def q(self) -> complex:
        return cmath.exp(2j * math.pi * self.tau)


def _params(p) -> ThetaParams:
    if isinstance(p, ThetaParams):
        return p
    return ThetaParams(complex(p))


def theta(z, p: ThetaParams | complex = ThetaParams()):
    """Product-form theta; accepts scalars or numpy arrays."""
    p = _params(p)
    z_arr = np.asarray(z, dtype=complex)
    q = p.q
    aq = abs(q)
    y = np.exp(2j * np.pi * z_arr)
    # worst-case growth of q^n y^{+-1} over the batch
    spread = float(np.exp(2 * np.pi * np.max(np.abs(z_arr.imag)))) if z_arr.size else 1.0
    target = p.precision / 10
    result = np.sin(np.pi * z_arr) / np.pi
    qn = 1.0 + 0j
    n = 0
    while True:
        n += 1
        if n > MAX_TERMS:
            raise PrecisionError(f"theta product did not reach precision {p.precision} within {MAX_TERMS} factors")
        qn = qn * q
        result = result * (1 - qn * y) * (1 - qn / y) / (1 - qn) ** 2
        if aq**n * spread < target and aq**n < target:
            break
    if np.ndim(z) == 0 and not isinstance(z, np.ndarray):
        return complex(result)
    return result


theta_eval = theta


def theta_sum_form(z, p: ThetaParams | complex = ThetaParams()):
    """theta_1(pi z | tau) / (pi theta_1'(0 | tau)) from the Fourier series."""
    p = _params(p)
    z_arr = np.asarray(z, dtype=complex)
    x = np.pi * z_arr
    grow = float(np.max(np.abs(z_arr.imag))) if z_arr.size else 0.0
    num = np.zeros_like(z_arr)
    den = 0j
    target = p.precision / 10
    for n in range(MAX_TERMS):
        nome_pow = cmath.exp(1j * math.pi * p.tau * (n + 0.5) ** 2)
        sign = -1 if n % 2 else 1
        num = num + sign * nome_pow * np.sin((2 * n + 1) * x)
        den += sign * (2 * n + 1) * nome_pow
        bound = abs(nome_pow) * math.exp((2 * n + 1) * math.pi * grow) * (2 * n + 1)
        if n > 0 and bound < target:
            break
    else:
        raise PrecisionError("theta series did not converge")
    out = num / (np.pi * den)
    if np.ndim(z) == 0 and not isinstance(z, np.ndarray):
        return complex(out)
    return out


@dataclass(frozen=True)
class AffineForm:
    """sum_k c_k x_k + const with integer c_k and a rational constant."""

    coeffs: tuple[tuple[str, int], ...]
    const: Fraction = Fraction(0)

    def __post_init__(self):
        merged: dict[str, int] = {}
        for name, c in self.coeffs:
            if int(c) != c:
                raise ValueError(f"theta arguments need integer coefficients, got {c} for {name}")
            merged[name] = merged.get(name, 0) + int(c)
        coeffs = tuple(sorted(((n, c) for n, c in merged.items() if c), key=lambda t: var_key(t[0])))
        object.__setattr__(self, "coeffs", coeffs)
        object.__setattr__(self, "const", Fraction(self.const))

    @classmethod
    def of(cls, coeffs: Mapping[str, int] | None = None, const=0) -> AffineForm:
        return cls(tuple((coeffs or {}).items()), Fraction(const))

    @classmethod
    def from_rational(cls, e: RationalExpr) -> AffineForm:
        coeffs, const = e.linear_coefficients()
        return cls(tuple(coeffs.items()), const)

    @property
    def sort_key(self):
        return tuple((var_key(n), c) for n, c in self.coeffs), self.const

    def variables(self) -> set[str]:
        return {n for n, _ in self.coeffs}

    @property
    def is_constant(self) -> bool:
        return not self.coeffs

    def __neg__(self):
        return AffineForm(tuple((n, -c) for n, c in self.coeffs), -self.const)

    def __add__(self, other: AffineForm):
        return AffineForm(self.coeffs + other.coeffs, self.const + other.const)

    def __sub__(self, other: AffineForm):
        return self + (-other)

    def scale(self, k: int) -> AffineForm:
        return AffineForm(tuple((n, c * k) for n, c in self.coeffs), self.const * k)

    def rename(self, mapping: Mapping[str, str]) -> AffineForm:
        return AffineForm(tuple((mapping.get(n, n), c) for n, c in self.coeffs), self.const)

    def substitute(self, bindings: Mapping[str, AffineForm]) -> AffineForm:
        out = AffineForm((), self.const)
        for n, c in self.coeffs:
            if n in bindings:
                out = out + bindings[n].scale(c)
            else:
                out = out + AffineForm(((n, c),))
        return out

    def to_rational(self, space: VarSpace = EMPTY_SPACE) -> RationalExpr:
        return RationalExpr.linear(dict(self.coeffs), self.const, space)

    def evaluate(self, assignment: Mapping[str, object]):
        total = float(self.const)
        for n, c in self.coeffs:
            try:
                total = total + c * assignment[n]
            except KeyError:
                raise UnboundVariable([n]) from None
        return total

    def __str__(self):
        parts = []
        for n, c in self.coeffs:
            mag = abs(c)
            body = n if mag == 1 else f"{mag}*{n}"
            if not parts:
                parts.append(("-" if c < 0 else "") + body)
            else:
                parts.append((" - " if c < 0 else " + ") + body)
        if self.const or not parts:
            mag = abs(self.const)
            if not parts:
                parts.append(("-" if self.const < 0 else "") + str(mag))
            else:
                parts.append((" - " if self.const < 0 else " + ") + str(mag))
        return "".join(parts)


Monomial = tuple[tuple[AffineForm, int], ...]


def _monomial(factors: Iterable[tuple[AffineForm, int]]) -> Monomial | None:
    """Merge equal forms; ``None`` marks a monomial that is identically zero."""
    exps: dict[AffineForm, int] = {}
    for f, e in factors:
        exps[f] = exps.get(f, 0) + e
    out = []
    for f, e in exps.items():
        if e == 0:
            continue
        if f.is_constant and f.const == 0:
            if e < 0:
                raise DenominatorVanishes("theta(0) in a denominator")
            return None
        out.append((f, e))
    out.sort(key=lambda t: (t[0].sort_key, t[1]))
    return tuple(out)


def _monomial_key(m: Monomial):
    return tuple((f.sort_key, e) for f, e in m)


class ThetaExpr:
    """Finite sum of rational cofactors times products of theta(affine form)^e."""

    __slots__ = ("space", "terms")

    def __init__(self, terms: Mapping[Monomial, RationalExpr] | None = None, space: VarSpace = EMPTY_SPACE):
        clean: dict[Monomial, RationalExpr] = {}
        for mono, cof in (terms or {}).items():
            space = space.join(cof.space)
        for mono, cof in (terms or {}).items():
            if not cof.is_zero:
                clean[mono] = cof.embed(space)
        self.space = space
        self.terms = dict(sorted(clean.items(), key=lambda t: _monomial_key(t[0])))

    # construction -------------------------------------------------------
    @classmethod
    def const(cls, value, space: VarSpace = EMPTY_SPACE) -> ThetaExpr:
        return cls({(): RationalExpr.const(value, space)}, space)

    @classmethod
    def from_rational(cls, r: RationalExpr) -> ThetaExpr:
        return cls({(): r}, r.space)

    @classmethod
    def theta(cls, form: AffineForm | RationalExpr, exponent: int = 1, space: VarSpace = EMPTY_SPACE) -> ThetaExpr:
        if isinstance(form, RationalExpr):
            form = AffineForm.from_rational(form)
        mono = _monomial([(form, exponent)])
        if mono is None:
            return cls({}, space)
        return cls({mono: RationalExpr.const(1, space)}, space)

    @classmethod
    def monomial(cls, factors: Iterable[tuple[AffineForm, int]], cofactor=1, space: VarSpace = EMPTY_SPACE) -> ThetaExpr:
        mono = _monomial(factors)
        if mono is None:
            return cls({}, space)
        return cls({mono: RationalExpr.coerce(cofactor, space)}, space)

    @classmethod
    def coerce(cls, x, space: VarSpace = EMPTY_SPACE) -> ThetaExpr:
        if isinstance(x, ThetaExpr):
            return x
        if isinstance(x, RationalExpr):
            return cls.from_rational(x)
        return cls.const(x, space)

    # structure ----------------------------------------------------------
    def __len__(self):
        return len(self.terms)

    @property
    def is_zero(self) -> bool:
        return not self.terms

    def free_variables(self) -> set[str]:
        out: set[str] = set()
        for mono, cof in self.terms.items():
            for f, _ in mono:
                out |= f.variables()
            out |= cof.free_variables()
        return out

    def theta_factors(self) -> set[tuple[AffineForm, int]]:
        return {fe for mono in self.terms for fe in mono}

    def embed(self, space: VarSpace) -> ThetaExpr:
        return ThetaExpr({m: c.embed(space) for m, c in self.terms.items()}, space)

    def rename(self, mapping: Mapping[str, str], space: VarSpace | None = None) -> ThetaExpr:
        space = space or self.space
        out: dict[Monomial, RationalExpr] = {}
        for mono, cof in self.terms.items():
            new = _monomial((f.rename(mapping), e) for f, e in mono)
            cof = cof.rename(mapping, space)
            out[new] = out[new] + cof if new in out else cof
        return ThetaExpr(out, space)

    def specialize(self, bindings: Mapping[str, object]) -> ThetaExpr:
        """Substitute affine-linear values (forms, rationals or numbers)."""
        forms: dict[str, AffineForm] = {}
        rats: dict[str, RationalExpr] = {}
        for name, value in bindings.items():
            if isinstance(value, AffineForm):
                form = value
            else:
                form = AffineForm.from_rational(RationalExpr.coerce(value))
            forms[name] = form
            rats[name] = form.to_rational()
        out: dict[Monomial, RationalExpr] = {}
        space = self.space
        for mono, cof in self.terms.items():
            new = _monomial((f.substitute(forms), e) for f, e in mono)
            if new is None:
                continue
            cof = cof.specialize(rats)
            space = space.join(cof.space)
            out[new] = out[new] + cof if new in out else cof
        return ThetaExpr(out, space)

    # arithmetic ---------------------------------------------------------
    def __add__(self, other):
        other = ThetaExpr.coerce(other, self.space)
        out = dict(self.terms)
        for mono, cof in other.terms.items():
            out[mono] = out[mono] + cof if mono in out else cof
        return ThetaExpr(out, self.space.join(other.space))

    __radd__ = __add__

    def __neg__(self):
        return ThetaExpr({m: -c for m, c in self.terms.items()}, self.space)

    def __sub__(self, other):
        return self + (-ThetaExpr.coerce(other, self.space))

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        other = ThetaExpr.coerce(other, self.space)
        out: dict[Monomial, RationalExpr] = {}
        for m1, c1 in self.terms.items():
            for m2, c2 in other.terms.items():
                mono = _monomial(m1 + m2)
                if mono is None:
                    continue
                cof = c1 * c2
                out[mono] = out[mono] + cof if mono in out else cof
        return ThetaExpr(out, self.space.join(other.space))

    __rmul__ = __mul__

    def inverse(self) -> ThetaExpr:
        if len(self.terms) != 1:
            raise ValueError("only single-term theta expressions can be inverted")
        ((mono, cof),) = self.terms.items()
        return ThetaExpr({tuple((f, -e) for f, e in mono): cof.inverse()}, self.space)

    def __truediv__(self, other):
        return self * ThetaExpr.coerce(other, self.space).inverse()

    def __rtruediv__(self, other):
        return ThetaExpr.coerce(other, self.space) * self.inverse()

    def __pow__(self, n: int):
        if n < 0:
            return self.inverse() ** (-n)
        out = ThetaExpr.const(1, self.space)
        for _ in range(n):
            out = out * self
        return out

    # evaluation ---------------------------------------------------------
    def _theta_values(self, assignment, p: ThetaParams) -> dict[AffineForm, object]:
        return {f: theta(f.evaluate(assignment), p) for f, _ in self.theta_factors()}

    def pole_margin(self, assignment, p: ThetaParams):
        """Smallest |denominator| factor value (theta or cofactor) per point."""
        margin = np.inf
        values = self._theta_values(assignment, p)
        for f, e in self.theta_factors():
            if e < 0:
                margin = np.minimum(margin, np.abs(values[f]))
        for cof in self.terms.values():
            if not cof.den.is_ground:
                den_val = RationalExpr(cof.space, cof.den, normalize=False).evaluate(assignment)
                margin = np.minimum(margin, np.abs(den_val))
        return margin

    def evaluate(self, assignment: Mapping[str, object], p: ThetaParams = ThetaParams(), pole_radius: float | None = 1e-3):
        missing = self.free_variables() - set(assignment)
        if missing:
            raise UnboundVariable(missing)
        values = self._theta_values(assignment, p)
        if pole_radius is not None:
            margin = self.pole_margin(assignment, p)
            if np.any(np.asarray(margin) < pole_radius):
                raise PoleError(f"evaluation point within {pole_radius} of a pole")
        total = 0j
        for mono, cof in self.terms.items():
            term = cof.evaluate(assignment)
            for f, e in mono:
                term = term * values[f] ** e
            total = total + term
        return total

    # printing -----------------------------------------------------------
    def __str__(self):
        if not self.terms:
            return "0"
        parts = []
        for mono, cof in self.terms.items():
            factors = [f"th({f})" if e == 1 else f"th({f})^{e}" for f, e in mono]
            cs = str(cof)
            if not factors:
                body = cs if cof.is_polynomial and len(cof.num) <= 1 else f"({cs})"
            elif cs == "1":
                body = "*".join(factors)
            elif cs == "-1":
                body = "-" + "*".join(factors)
            else:
                body = f"({cs})*" + "*".join(factors)
            parts.append(body)
        out = parts[0]
        for part in parts[1:]:
            out += " - " + part[1:] if part.startswith("-") else " + " + part
        return out

    def __repr__(self):
        return f"ThetaExpr({self})"


def theta_expr_eval(e: ThetaExpr, assignment: Mapping[str, complex], p: ThetaParams = ThetaParams(), pole_radius: float = 1e-3) -> complex:
    return complex(e.evaluate(assignment, p, pole_radius))


@dataclass(frozen=True)
class SamplePlan:
    seed: int = 0
    samples: int = 50
    box: tuple[float, float, float, float] = (-0.5, 0.5, -0.25, 0.25)
    exclusion: float = 1e-3
    oversample: int = 100

    def __post_init__(self):
        if self.samples < 1:
            raise ValueError("sample count must be at least 1")
        if not self.exclusion > 0:
            raise ValueError("exclusion radius must be positive")


def sample_assignments(exprs: Iterable[ThetaExpr], plan: SamplePlan, p: ThetaParams, names: Iterable[str] | None = None) -> dict[str, np.ndarray]:
    """Draw ``plan.samples`` points at which every expression is pole-free."""
    exprs = list(exprs)
    if names is None:
        names = set()
        for e in exprs:
            names |= e.free_variables()
    names = sorted(names, key=var_key)
    rng = np.random.Generator(np.random.PCG64(plan.seed))
    lo_re, hi_re, lo_im, hi_im = plan.box
    need = plan.samples
    accepted = {n: [] for n in names}
    drawn, kept = 0, 0
    while kept < need:
        if drawn >= plan.oversample * need:
            raise SamplingError(f"only {kept} of {need} samples avoided the poles after {drawn} draws")
        batch = need - kept
        point = {}
        for n in names:
            re = rng.uniform(lo_re, hi_re, batch)
            im = rng.uniform(lo_im, hi_im, batch)
            point[n] = re + 1j * im
        drawn += batch
        ok = np.ones(batch, dtype=bool)
        for e in exprs:
            ok &= np.broadcast_to(np.asarray(e.pole_margin(point, p)) >= plan.exclusion, (batch,))
        for n in names:
            accepted[n].extend(point[n][ok])
        kept += int(ok.sum())
    return {n: np.asarray(v[:need]) for n, v in accepted.items()}


def scaled_deviation(a, b):
    """|a - b| / max(1, |a|, |b|): absolute near zero, relative for large values."""
    a = np.asarray(a)
    b = np.asarray(b)
    return np.abs(a - b) / np.maximum(1.0, np.maximum(np.abs(a), np.abs(b)))


@dataclass
class EqualityReport:
    passed: bool
    max_abs: float
    max_rel: float
    max_scaled: float
    samples: int
    tol: float
    detail: str = field(default="")

    def __bool__(self):
        return self.passed


def compare_values(va, vb, tol: float, samples: int) -> EqualityReport:
    va = np.broadcast_to(np.asarray(va, dtype=complex), (samples,))
    vb = np.broadcast_to(np.asarray(vb, dtype=complex), (samples,))
    diff = np.abs(va - vb)
    scale = np.maximum(np.abs(va), np.abs(vb))
    rel = np.where(scale > 0, diff / np.where(scale > 0, scale, 1), 0.0)
    scaled = scaled_deviation(va, vb)
    ok = bool(np.all(np.isfinite(scaled))) and float(np.max(scaled)) <= tol
    return EqualityReport(ok, float(np.max(diff)), float(np.max(rel)), float(np.max(scaled)), samples, tol)


def theta_equal_probabilistic(a, b, plan: SamplePlan = SamplePlan(), p: ThetaParams = ThetaParams(), tol: float = 1e-9) -> EqualityReport:
    a = ThetaExpr.coerce(a)
    b = ThetaExpr.coerce(b)
    point = sample_assignments([a, b], plan, p)
    va = a.evaluate(point, p, pole_radius=None)
    vb = b.evaluate(point, p, pole_radius=None)
    return compare_values(va, vb, tol, plan.samples)
