"""Named verification suites driven by ``coha verify``.

A suite is an ordered list of checks.  Each check receives a ``Context``
and returns an ``Outcome``; the runner stamps the name and keeps
declaration order no matter how many workers run the checks.  Every check
seeds its own generator from the run seed, so results do not depend on
scheduling.
"""
from __future__ import annotations

import itertools
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .currents import DEFAULT_TAYLOR_POINT, commutator, generator, taylor_identity_check
from .errors import CohaError, NumericError
from .quiver import DimPair, Quiver, builtin_quiver, colored_shuffles, resolve_quiver, shuffle_count
from .randomgen import make_rng, random_dims, random_element
from .shuffle import (
    ADDITIVE,
    ELLIPTIC,
    MULTIPLICATIVE,
    Kernel,
    classical_commutator,
    classical_sign,
    classical_weight_condition,
    element,
    shuffle_product,
    shuffle_terms,
    unit,
    verify_associativity,
)
from .symbolic import RationalExpr, equals_exact
from .theta import SamplePlan, ThetaExpr, ThetaParams, compare_values, sample_assignments, theta, theta_sum_form
from .weights import (
    TypeAConfig,
    engine_frv_fac,
    frv_fac,
    h_cross,
    h_cross_expanded,
    konno_division_check,
    weight_function_sl2,
    weight_function_terms,
)

__all__ = ["RunConfig", "Context", "Outcome", "CheckRecord", "Report", "SUITES", "run_suite", "thread_count"]


@dataclass(frozen=True)
class RunConfig:
    quiver: str | None = None
    kernel: str = "additive"
    tau: complex = 0.31 + 0.79j
    precision: float = 1e-15
    tol: float | None = None
    samples: int = 50
    seed: int = 0
    format: str = "text"
    timing: bool = False

    def __post_init__(self):
        if not complex(self.tau).imag > 0:
            raise ValueError("tau must have positive imaginary part")
        if not self.precision > 0:
            raise ValueError("precision must be positive")
        if self.tol is not None and not self.tol > 0:
            raise ValueError("tolerance must be positive")
        if self.samples < 1:
            raise ValueError("sample count must be positive")
        if self.seed < 0:
            raise ValueError("seed must be non-negative")
        if self.format not in ("text", "json"):
            raise ValueError("format must be text or json")
        Kernel(self.kernel)

    @property
    def params(self) -> ThetaParams:
        return ThetaParams(complex(self.tau), self.precision)

    def plan(self, offset: int = 0) -> SamplePlan:
        return SamplePlan(seed=self.seed + offset, samples=self.samples)

    def tolerance(self, default: float) -> float:
        return default if self.tol is None else self.tol


@dataclass
class Context:
    cfg: RunConfig
    quiver: Quiver | None
    quiver_error: str | None

    @classmethod
    def build(cls, cfg: RunConfig) -> Context:
        try:
            return cls(cfg, resolve_quiver(cfg.quiver), None)
        except (CohaError, OSError, ValueError) as exc:
            return cls(cfg, None, f"{type(exc).__name__}: {exc}")


@dataclass
class Outcome:
    status: str
    max_deviation: float = 0.0
    terms: tuple[int, ...] = ()
    detail: str = ""

    @classmethod
    def of(cls, ok: bool, dev: float = 0.0, terms=(), detail: str = "") -> Outcome:
        return cls("pass" if ok else "fail", float(dev), tuple(terms), detail)


@dataclass
class CheckRecord:
    name: str
    status: str
    max_deviation: float
    terms: tuple[int, ...]
    detail: str
    seconds: float | None = None
    numeric_error: bool = False

    def to_json(self, timing: bool) -> dict:
        out = {
            "name": self.name,
            "status": self.status,
            "max_deviation": self.max_deviation,
            "terms": list(self.terms),
            "detail": self.detail,
        }
        if timing:
            out["seconds"] = self.seconds
        return out


@dataclass
class Report:
    suite: str
    seed: int
    records: list[CheckRecord] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(r.status == "pass" for r in self.records)

    @property
    def numeric_failure(self) -> bool:
        return any(r.numeric_error for r in self.records)

    def counts(self) -> dict[str, int]:
        out = {"pass": 0, "fail": 0, "skip": 0}
        for r in self.records:
            out[r.status] += 1
        return out


Check = Callable[[Context], Outcome]


# theta ---------------------------------------------------------------------

def _theta_points(ctx: Context, offset: int, n: int = 200) -> np.ndarray:
    rng = make_rng(ctx.cfg.seed + offset)
    return rng.uniform(-0.5, 0.5, n) + 1j * rng.uniform(-0.25, 0.25, n)


def check_theta_zero(ctx):
    v = abs(complex(theta(0.0, ctx.cfg.params)))
    return Outcome.of(v <= 1e-14, v)


def check_theta_derivative(ctx):
    p = ctx.cfg.params
    h = 1e-4

    def d(step):
        return (complex(theta(step, p)) - complex(theta(-step, p))) / (2 * step)

    est = (4 * d(h / 2) - d(h)) / 3
    dev = abs(est - 1)
    return Outcome.of(dev <= ctx.cfg.tolerance(1e-10), dev)


def _theta_identity(ctx, offset, lhs, rhs, default_tol):
    z = _theta_points(ctx, offset)
    rep = compare_values(lhs(z), rhs(z), ctx.cfg.tolerance(default_tol), len(z))
    return Outcome.of(rep.passed, rep.max_scaled)


def check_theta_odd(ctx):
    p = ctx.cfg.params
    return _theta_identity(ctx, 11, lambda z: theta(-z, p), lambda z: -theta(z, p), 1e-9)


def check_theta_period_one(ctx):
    p = ctx.cfg.params
    return _theta_identity(ctx, 12, lambda z: theta(z + 1, p), lambda z: -theta(z, p), 1e-9)


def check_theta_period_tau(ctx):
    p = ctx.cfg.params
    tau = p.tau
    return _theta_identity(
        ctx, 13, lambda z: theta(z + tau, p),
        lambda z: -np.exp(-1j * np.pi * tau - 2j * np.pi * z) * theta(z, p), 1e-9)


def check_theta_sum_form(ctx):
    p = ctx.cfg.params
    return _theta_identity(ctx, 14, lambda z: theta(z, p), lambda z: theta_sum_form(z, p), 1e-10)


def check_theta_expr_linear(ctx):
    p = ctx.cfg.params
    a = ThetaExpr.theta(_parse_form("x + t1"), 1) * ThetaExpr.theta(_parse_form("y"), -1)
    b = ThetaExpr.theta(_parse_form("x - y"), 2)
    point = sample_assignments([a, b], ctx.cfg.plan(15), p)
    lhs = (a + b).evaluate(point, p, None)
    rhs = a.evaluate(point, p, None) + b.evaluate(point, p, None)
    rep = compare_values(lhs, rhs, ctx.cfg.tolerance(1e-12), ctx.cfg.samples)
    return Outcome.of(rep.passed, rep.max_scaled)


def _parse_form(text):
    from .textio import parse_rational
    from .theta import AffineForm

    return AffineForm.from_rational(parse_rational(text))


# shuffle -------------------------------------------------------------------

def check_sl2_oracles(ctx):
    from .quiver import sl2

    q = sl2()
    one = element(q, 1, v=1)
    lam1 = element(q, "l[1,1]", v=1)
    expected = {
        "1*1": (shuffle_product(one, one), "-2"),
        "l*1": (shuffle_product(lam1, one), "-l[1,1] - l[1,2] - hbar"),
        "1*l": (shuffle_product(one, lam1), "-l[1,1] - l[1,2] + hbar"),
        "[l,1]": (shuffle_product(lam1, one) - shuffle_product(one, lam1), "-2*hbar"),
    }
    bad = []
    for key, (got, want) in expected.items():
        if not equals_exact(got.payload, element(q, want, v=2).payload):
            bad.append(key)
    return Outcome.of(not bad, 0.0 if not bad else math.inf, detail=",".join(bad))


def _grading_triples(q: Quiver, cap: int):
    n = len(q.vertices)
    vecs = [v for v in itertools.product(range(cap + 1), repeat=n) if any(v)]
    for a, b, c in itertools.product(vecs, repeat=3):
        if all(x + y + z <= cap for x, y, z in zip(a, b, c)):
            yield a, b, c


def associativity_sweep(q: Quiver, cap: int, seed: int, degree: int = 2, kernel: Kernel = ADDITIVE):
    """Exact associativity over every triple of nonzero gradings with per-vertex totals <= cap."""
    rng = make_rng(seed)
    failures, count = [], 0
    for dims in _grading_triples(q, cap):
        els = [random_element(q, q.dims(d), degree, rng, kernel) for d in dims]
        count += 1
        if not verify_associativity(*els, mode="exact"):
            failures.append(dims)
    return count, failures


def _assoc_check(name: str, cap: int, kernel: Kernel = ADDITIVE) -> Check:
    def run(ctx):
        q = builtin_quiver(name)
        count, failures = associativity_sweep(q, cap, ctx.cfg.seed, kernel=kernel)
        return Outcome.of(not failures, 0.0 if not failures else math.inf, (count,),
                          "" if not failures else f"failed at {failures[0]}")
    return run


def check_assoc_configured(ctx):
    q = ctx.quiver
    if q is None:
        return Outcome("skip", detail=f"quiver unavailable ({ctx.quiver_error})")
    count, failures = associativity_sweep(q, 2 if len(q.vertices) > 1 else 3, ctx.cfg.seed, kernel=ADDITIVE)
    return Outcome.of(not failures, 0.0 if not failures else math.inf, (count,))


def closure_sweep(q: Quiver, seed: int, cases: int = 20, max_entry: int = 2):
    """Random additive products of symmetric polynomials; returns the number with a nontrivial denominator."""
    rng = make_rng(seed)
    bad = 0
    for _ in range(cases):
        d1 = random_dims(q, rng, max_entry)
        d2 = random_dims(q, rng, max_entry)
        f = random_element(q, d1, 2, rng)
        g = random_element(q, d2, 2, rng)
        if not shuffle_product(f, g).payload.is_polynomial:
            bad += 1
    return bad


def _closure_check(name: str) -> Check:
    def run(ctx):
        bad = closure_sweep(builtin_quiver(name), ctx.cfg.seed)
        return Outcome.of(bad == 0, float(bad), (20,))
    return run


def check_symmetry(ctx):
    rng = make_rng(ctx.cfg.seed + 21)
    bad = []
    for name in ("sl2", "a2", "jordan"):
        q = builtin_quiver(name)
        top = 1 if len(q.vertices) > 1 else 2
        for _ in range(3):
            d1, d2 = random_dims(q, rng, top, framed=True), random_dims(q, rng, top, framed=True)
            fg = shuffle_product(random_element(q, d1, 1, rng), random_element(q, d2, 1, rng))
            if not fg.is_symmetric():
                bad.append(name)
    q = builtin_quiver("sl2")
    x = element(q, 1, v=1, kernel=ELLIPTIC)
    y = element(q, 1, v=1, w=1, kernel=ELLIPTIC)
    e = shuffle_product(shuffle_product(x, y), x)
    if not e.is_symmetric(ctx.cfg.plan(22), ctx.cfg.params, ctx.cfg.tolerance(1e-9)):
        bad.append("sl2-elliptic")
    return Outcome.of(not bad, 0.0 if not bad else math.inf, detail=",".join(bad))


def check_term_counts(ctx):
    rng = make_rng(ctx.cfg.seed + 23)
    q = builtin_quiver("a2")
    bad = 0
    counts = []
    for _ in range(50):
        d1, d2 = random_dims(q, rng, 3, framed=True), random_dims(q, rng, 3, framed=True)
        expected = math.prod(math.comb(a + b, a) for a, b in zip(d1.v + d1.w, d2.v + d2.w))
        if len(list(colored_shuffles(d1, d2))) != expected or shuffle_count(d1, d2) != expected:
            bad += 1
    for dims in (((1,), (1,)), ((2,), (1,)), ((1,), (2,))):
        qs = builtin_quiver("sl2")
        f = element(qs, 1, v=dims[0], kernel=ELLIPTIC)
        g = element(qs, 1, v=dims[1], kernel=ELLIPTIC)
        n = len(shuffle_terms(f, g))
        counts.append(n)
        bad += n != shuffle_count(f.grading, g.grading)
    return Outcome.of(bad == 0, float(bad), tuple(counts))


def check_unit(ctx):
    rng = make_rng(ctx.cfg.seed + 24)
    bad = 0
    for name in ("sl2", "a2", "jordan"):
        q = builtin_quiver(name)
        f = random_element(q, random_dims(q, rng, 2, framed=True), 2, rng)
        e = unit(q)
        for prod in (shuffle_product(e, f), shuffle_product(f, e)):
            bad += not equals_exact(prod.payload, f.payload) or prod.grading != f.grading
    return Outcome.of(bad == 0, float(bad))


def check_elliptic_assoc(ctx):
    q = builtin_quiver("sl2")
    x = element(q, 1, v=1, kernel=ELLIPTIC)
    rep = verify_associativity(x, x, x, mode="sampled", plan=ctx.cfg.plan(25), params=ctx.cfg.params,
                               tol=ctx.cfg.tolerance(1e-8))
    return Outcome.of(rep.passed, rep.max_deviation, rep.term_counts)


def check_multiplicative_assoc(ctx):
    rng = make_rng(ctx.cfg.seed + 26)
    q = builtin_quiver("sl2")
    els = [random_element(q, q.dims(1), 1, rng, MULTIPLICATIVE) for _ in range(3)]
    rep = verify_associativity(*els, mode="exact")
    return Outcome.of(rep.passed, rep.max_deviation)


# classical limit --------------------------------------------------------------

def _classical_additive(name: str, twisted: bool = False) -> Check:
    def run(ctx):
        q = builtin_quiver(name) if name != "@config" else ctx.quiver
        if q is None:
            return Outcome("skip", detail=f"quiver unavailable ({ctx.quiver_error})")
        if not classical_weight_condition(q):
            return Outcome("skip", detail="weight condition m_h = m_h* fails")
        rng = make_rng(ctx.cfg.seed + 31)
        bad = []
        for _ in range(4):
            d1, d2 = random_dims(q, rng, 2), random_dims(q, rng, 2)
            if not any(d1.v) or not any(d2.v):
                continue
            f, g = random_element(q, d1, 2, rng), random_element(q, d2, 2, rng)
            if not twisted and classical_sign(q, d1, d2) != 1:
                continue
            if not classical_commutator(f, g, twisted=twisted).payload.is_zero:
                bad.append((d1.v, d2.v))
        return Outcome.of(not bad, 0.0 if not bad else math.inf, detail="" if not bad else f"nonzero at {bad[0]}")
    return run


def check_classical_sl2_elliptic(ctx):
    q = builtin_quiver("sl2")
    worst, ok = 0.0, True
    for a, b in ((1, 1), (1, 2), (2, 1)):
        f = element(q, 1, v=a, kernel=ELLIPTIC)
        g = element(q, 1, v=b, kernel=ELLIPTIC)
        c = classical_commutator(f, g).payload
        plan = ctx.cfg.plan(32)
        point = sample_assignments([c], plan, ctx.cfg.params)
        rep = compare_values(c.evaluate(point, ctx.cfg.params, None), 0, ctx.cfg.tolerance(1e-8), plan.samples)
        worst = max(worst, rep.max_scaled)
        ok &= rep.passed
    return Outcome.of(ok, worst)


def check_classical_a2_sign(ctx):
    """A2, e1 against e2: the untwisted commutator survives, the sign-twisted one vanishes."""
    q = builtin_quiver("a2")
    f = element(q, 1, v=(1, 0))
    g = element(q, 1, v=(0, 1))
    plain = classical_commutator(f, g).payload
    twisted = classical_commutator(f, g, twisted=True).payload
    return Outcome.of(twisted.is_zero and not plain.is_zero, detail=f"untwisted = {plain}")


# currents ------------------------------------------------------------------

def check_generators(ctx):
    q = builtin_quiver("sl2")
    g0 = generator(q, "1", 0).element
    g2 = generator(q, "1", 2).element
    g1 = generator(q, "1", 1).element
    ok = equals_exact(g0.payload, RationalExpr.const(1)) and g0.grading == q.dims(1)
    ok &= equals_exact(g2.payload, element(q, "l[1,1]^2", v=1).payload)
    ok &= equals_exact(shuffle_product(g1, g0).payload, element(q, "-l[1,1]-l[1,2]-hbar", v=2).payload)
    return Outcome.of(ok)


def check_commutators(ctx):
    q = builtin_quiver("sl2")
    ok = commutator(q, 1, 0, 1, 0).payload.is_zero
    ok &= equals_exact(commutator(q, 1, 1, 1, 0).payload, element(q, "-2*hbar", v=2).payload)
    for k in range(5):
        ok &= commutator(q, 1, k, 1, 0).payload.is_polynomial
    a2 = builtin_quiver("a2")
    want = element(a2, "(l[2,1]-l[1,1]+t1) - (l[1,1]-l[2,1]+t2)", v=(1, 1)).payload
    ok &= equals_exact(commutator(a2, 1, 0, 2, 0).payload, want)
    for (i, k, j, l) in ((1, 1, 2, 0), (1, 2, 2, 1), (2, 1, 1, 1)):
        ok &= equals_exact(commutator(a2, i, k, j, l).payload, -commutator(a2, j, l, i, k).payload)
    return Outcome.of(bool(ok))


def check_taylor(ctx):
    rep = taylor_identity_check("1", DEFAULT_TAYLOR_POINT, 4)
    detail = f"slope={rep.slope:.4f} bound={rep.bound:.3e}"
    return Outcome.of(bool(rep), rep.deviation, detail=detail)


def check_taylor_order_zero(ctx):
    rep = taylor_identity_check("1", DEFAULT_TAYLOR_POINT.with_u(0), 0)
    return Outcome.of(rep.deviation <= 1e-9, rep.deviation)


# type A, sl2 factor, weight functions -------------------------------------------

def check_frv(ctx):
    worst, ok = 0.0, True
    params = ctx.cfg.params
    for i, k in enumerate(itertools.product(range(3), repeat=4)):
        a, b = frv_fac(*k), engine_frv_fac(*k)
        plan = ctx.cfg.plan(100 + i)
        point = sample_assignments([a, b], plan, params)
        rep = compare_values(a.evaluate(point, params, None), b.evaluate(point, params, None),
                             ctx.cfg.tolerance(1e-9), plan.samples)
        worst = max(worst, rep.max_scaled)
        ok &= rep.passed
    return Outcome.of(ok, worst, (81,))


def type_a_configs(max_rank: int = 4, max_dim: int = 1):
    for N in range(2, max_rank + 1):
        for dims in itertools.product(range(max_dim + 1), repeat=2 * (N - 1) + 2):
            yield TypeAConfig(N, dims[: N - 1], dims[N - 1: 2 * N - 2], dims[-2], dims[-1])


def check_h_cross(ctx):
    worst, ok, n = 0.0, True, 0
    params = ctx.cfg.params
    for i, cfg in enumerate(type_a_configs()):
        a, b = h_cross(cfg), h_cross_expanded(cfg)
        plan = ctx.cfg.plan(1000 + i)
        point = sample_assignments([a, b], plan, params)
        rep = compare_values(a.evaluate(point, params, None), b.evaluate(point, params, None),
                             ctx.cfg.tolerance(1e-9), plan.samples)
        worst, ok, n = max(worst, rep.max_scaled), ok and rep.passed, n + 1
    return Outcome.of(ok, worst, (n,))


def check_konno(ctx):
    worst, bad, n = 0.0, [], 0
    for i, cfg in enumerate(type_a_configs()):
        rep = konno_division_check(cfg, ctx.cfg.plan(2000 + i), ctx.cfg.params, ctx.cfg.tolerance(1e-8))
        worst = max(worst, rep.max_deviation, rep.max_deviation_specialized)
        n += 1
        if not rep.passed:
            bad.append(cfg)
    return Outcome.of(not bad, worst, (n,), "" if not bad else f"failed at {bad[0]}")


def check_weight_functions(ctx):
    ok, counts = True, []
    for n in range(0, 4):
        for k in range(0, n + 1):
            w = weight_function_sl2(k, n)
            ok &= w.grading == DimPair((k,), (n,))
            ok &= w.is_symmetric(ctx.cfg.plan(3000 + 10 * n + k), ctx.cfg.params, ctx.cfg.tolerance(1e-9))
            terms = weight_function_terms(k, n)
            ok &= terms == math.factorial(k)
            counts.append(terms)
    return Outcome.of(bool(ok), terms=tuple(counts))


SUITES: dict[str, list[tuple[str, Check]]] = {
    "theta": [
        ("theta.zero", check_theta_zero),
        ("theta.derivative", check_theta_derivative),
        ("theta.odd", check_theta_odd),
        ("theta.period_one", check_theta_period_one),
        ("theta.period_tau", check_theta_period_tau),
        ("theta.sum_form", check_theta_sum_form),
        ("theta.expr_linear", check_theta_expr_linear),
    ],
    "shuffle": [
        ("shuffle.sl2_oracles", check_sl2_oracles),
        ("shuffle.unit", check_unit),
        ("shuffle.term_counts", check_term_counts),
        ("shuffle.symmetry", check_symmetry),
        ("shuffle.assoc.sl2", _assoc_check("sl2", 3)),
        ("shuffle.assoc.a2", _assoc_check("a2", 2)),
        ("shuffle.assoc.jordan", _assoc_check("jordan", 3)),
        ("shuffle.assoc.configured", check_assoc_configured),
        ("shuffle.assoc.multiplicative", check_multiplicative_assoc),
        ("shuffle.assoc.elliptic", check_elliptic_assoc),
        ("shuffle.closure.sl2", _closure_check("sl2")),
        ("shuffle.closure.a2", _closure_check("a2")),
        ("shuffle.closure.jordan", _closure_check("jordan")),
    ],
    "classical": [
        ("classical.sl2.additive", _classical_additive("sl2")),
        ("classical.jordan.additive", _classical_additive("jordan")),
        ("classical.configured.twisted", _classical_additive("@config", twisted=True)),
        ("classical.sl2.elliptic", check_classical_sl2_elliptic),
        ("classical.a2.sign", check_classical_a2_sign),
    ],
    "currents": [
        ("currents.generators", check_generators),
        ("currents.commutators", check_commutators),
        ("currents.taylor", check_taylor),
        ("currents.taylor_order_zero", check_taylor_order_zero),
    ],
    "konno": [
        ("konno.frv", check_frv),
        ("konno.h_cross", check_h_cross),
        ("konno.division", check_konno),
        ("konno.weight_functions", check_weight_functions),
    ],
}
SUITES["all"] = [c for name in ("theta", "shuffle", "classical", "currents", "konno") for c in SUITES[name]]


def thread_count() -> int:
    """Worker count: COHA_THREADS when set, else the CPU count (at most 8)."""
    raw = os.environ.get("COHA_THREADS")
    default = min(8, os.cpu_count() or 1)
    if raw is None or raw.strip() == "":
        return default
    try:
        n = int(raw)
    except ValueError:
        raise ValueError(f"COHA_THREADS must be a positive integer, got {raw!r}") from None
    if n < 1:
        raise ValueError(f"COHA_THREADS must be a positive integer, got {raw!r}")
    return n


def _run_one(ctx: Context, name: str, check: Check) -> CheckRecord:
    start = time.perf_counter()
    numeric = False
    try:
        out = check(ctx)
    except NumericError as exc:
        out, numeric = Outcome("fail", math.inf, detail=f"{type(exc).__name__}: {exc}"), True
    except CohaError as exc:
        out = Outcome("fail", math.inf, detail=f"{type(exc).__name__}: {exc}")
    return CheckRecord(name, out.status, out.max_deviation, out.terms, out.detail,
                       time.perf_counter() - start, numeric)


def run_suite(suite: str, cfg: RunConfig, workers: int | None = None) -> Report:
    if suite not in SUITES:
        raise ValueError(f"unknown suite {suite!r}; choose from {sorted(SUITES)}")
    ctx = Context.build(cfg)
    checks = SUITES[suite]
    workers = workers or thread_count()
    if workers == 1:
        records = [_run_one(ctx, n, c) for n, c in checks]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(lambda nc: _run_one(ctx, *nc), checks))
    return Report(suite, cfg.seed, records)
