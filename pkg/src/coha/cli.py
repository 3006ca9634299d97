"""``coha`` command-line entry point.

Exit codes: 0 pass, 1 check failure (or skipped check), 2 usage or parse
error, 3 numeric instability.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from typing import Sequence

import numpy as np

from .currents import DEFAULT_TAYLOR_POINT, DynamicalPoint, dynamical_current_eval, taylor_identity_check
from .errors import CohaError, NumericError, UnboundVariable
from .quiver import resolve_quiver, shuffle_count
from .shuffle import (
    Kernel,
    classical_commutator,
    classical_weight_condition,
    element,
    shuffle_product,
    verify_associativity,
)
from .suites import SUITES, RunConfig, run_suite
from .symbolic import VarSpace
from .textio import parse_expression
from .theta import ThetaExpr, compare_values, sample_assignments
from .weights import (
    TypeAConfig,
    engine_frv_fac,
    frv_fac,
    konno_division_check,
    weight_function_sl2,
    weight_function_terms,
)

EXIT_PASS, EXIT_FAIL, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def parse_complex(text: str) -> complex:
    """Accept ``RE,IM`` or a Python complex literal such as ``0.3+0.1j``."""
    text = text.strip()
    try:
        if "," in text:
            re_, im = text.split(",")
            return complex(float(re_), float(im))
        return complex(text.replace(" ", ""))
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a complex number: {text!r}") from None


def _int_list(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(x) for x in text.split(",") if x.strip() != "")
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _common(p: argparse.ArgumentParser):
    p.add_argument("--quiver", default=None, help="builtin name (sl2, jordan, a2, a3) or JSON file")
    p.add_argument("--kernel", default="additive", choices=("additive", "multiplicative", "elliptic"))
    p.add_argument("--tau", type=parse_complex, default=complex(0.31, 0.79), help="modulus as RE,IM")
    p.add_argument("--precision", type=float, default=1e-15)
    p.add_argument("--tol", type=float, default=None)
    p.add_argument("--samples", type=int, default=50)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--format", default="text", choices=("text", "json"))
    p.add_argument("--timing", action="store_true", help="include wall-clock times in reports")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="coha", description="Shuffle algebras of quivers: products and verification.")
    sub = parser.add_subparsers(dest="verb", required=True, parser_class=_Parser)

    def grading_opts(p, names):
        for n in names:
            p.add_argument(f"--{n}v", type=_int_list, default=None, help=f"v-grading of {n} (comma list)")
            p.add_argument(f"--{n}w", type=_int_list, default=None, help=f"w-grading of {n} (comma list)")

    p = sub.add_parser("product", help="shuffle product f * g")
    _common(p)
    p.add_argument("f")
    p.add_argument("g")
    grading_opts(p, "fg")
    p.add_argument("--evals", type=int, default=3, help="sample evaluations printed for elliptic results")

    p = sub.add_parser("assoc", help="compare (f*g)*h with f*(g*h)")
    _common(p)
    for n in "fgh":
        p.add_argument(n)
    grading_opts(p, "fgh")

    p = sub.add_parser("classical", help="f*g - g*f at hbar = 0")
    _common(p)
    p.add_argument("f")
    p.add_argument("g")
    grading_opts(p, "fg")
    p.add_argument("--twisted", action="store_true", help="use the sign-twisted commutator")

    def current_opts(p):
        p.add_argument("--vertex", default="1")
        p.add_argument("--lambda", dest="lam", type=parse_complex, default=None)
        p.add_argument("--z", type=parse_complex, default=None)
        p.add_argument("--u", type=parse_complex, default=None)

    p = sub.add_parser("current-eval", help="evaluate the dynamical current closed form")
    _common(p)
    current_opts(p)

    p = sub.add_parser("taylor-check", help="truncated current series against its closed form")
    _common(p)
    current_opts(p)
    p.add_argument("--order", type=int, default=4)
    p.add_argument("--method", default="cauchy", choices=("cauchy", "fd"))

    p = sub.add_parser("frv", help="sl2 factor at t1 = hbar, t2 = 0 against the engine")
    _common(p)
    for n in ("k1", "k2", "n1", "n2"):
        p.add_argument(n, type=int)

    p = sub.add_parser("konno-check", help="type-A division identity")
    _common(p)
    p.add_argument("--rank", type=int, required=True)
    p.add_argument("--dims", required=True, help="v1;v2 as comma lists, e.g. 1,1;1,0")
    p.add_argument("--framing", type=_int_list, default=(0, 0), help="n,m")
    p.add_argument("--reading", default="bilinear", choices=("bilinear", "additive"))

    p = sub.add_parser("weight", help="iterated-shuffle sl2 weight function")
    _common(p)
    p.add_argument("k", type=int)
    p.add_argument("n", type=int)

    p = sub.add_parser("verify", help="run a verification suite")
    _common(p)
    p.add_argument("--suite", default="all", choices=sorted(SUITES))

    p = sub.add_parser("eval", help="evaluate an expression at a point")
    _common(p)
    p.add_argument("expr")
    p.add_argument("--at", action="append", default=[], metavar="NAME=VALUE")
    return parser


def _config(args) -> RunConfig:
    return RunConfig(args.quiver, args.kernel, args.tau, args.precision, args.tol, args.samples, args.seed,
                     args.format, args.timing)


def _num(x):
    if isinstance(x, complex):
        return [_num(x.real), _num(x.imag)]
    x = float(x)
    return None if not math.isfinite(x) else x


def _cstr(z: complex) -> str:
    return f"{z.real:.15g}{z.imag:+.15g}j"


class Output:
    def __init__(self, fmt: str):
        self.fmt = fmt
        self.data: dict = {}
        self.lines: list[str] = []

    def add(self, key: str, value, text: str | None = None):
        self.data[key] = value
        self.lines.append(f"{key}: {text if text is not None else value}")

    def emit(self, out):
        if self.fmt == "json":
            out.write(json.dumps(self.data, sort_keys=True, indent=2) + "\n")
        else:
            out.write("\n".join(self.lines) + "\n")


def _element(q, kernel, text, v, w):
    return element(q, text, v=v, w=w, kernel=kernel)


def _elements(args, q, kernel, names):
    out = []
    for n in names:
        v = getattr(args, f"{n}v")
        w = getattr(args, f"{n}w")
        if v is None:
            v = (1,) * len(q.vertices) if len(q.vertices) == 1 else None
            if v is None:
                raise UsageError(f"--{n}v is required for a quiver with several vertices")
        out.append(_element(q, kernel, getattr(args, n), v, w))
    return out


def _grading_str(d) -> str:
    return f"v={','.join(map(str, d.v))} w={','.join(map(str, d.w))}"


def cmd_product(args, out: Output) -> int:
    cfg = _config(args)
    q = resolve_quiver(cfg.quiver)
    kernel = Kernel(cfg.kernel)
    f, g = _elements(args, q, kernel, "fg")
    fg = shuffle_product(f, g)
    out.add("kernel", str(kernel))
    out.add("grading", {"v": list(fg.grading.v), "w": list(fg.grading.w)}, _grading_str(fg.grading))
    out.add("shuffles", shuffle_count(f.grading, g.grading))
    if isinstance(fg.payload, ThetaExpr):
        out.add("terms", len(fg.payload))
        for i, (mono, cof) in enumerate(sorted(fg.payload.terms.items(), key=lambda kv: str(ThetaExpr({kv[0]: kv[1]})))):
            out.lines.append(f"  [{i}] {ThetaExpr({mono: cof})}")
        out.data["term_list"] = [str(ThetaExpr({m: c})) for m, c in fg.payload.terms.items()]
        out.data["term_list"].sort()
        if args.evals > 0:
            from .theta import SamplePlan

            plan = SamplePlan(seed=cfg.seed, samples=args.evals)
            point = sample_assignments([fg.payload], plan, cfg.params)
            vals = np.atleast_1d(fg.payload.evaluate(point, cfg.params, None))
            names = sorted(point)
            evals = []
            for i in range(args.evals):
                at = {n: complex(point[n][i]) for n in names}
                val = complex(np.broadcast_to(vals, (args.evals,))[i])
                evals.append({"at": {n: _num(z) for n, z in at.items()}, "value": _num(val)})
                where = ", ".join(f"{n}={_cstr(z)}" for n, z in at.items())
                out.lines.append(f"  eval[{i}] {where} -> {_cstr(val)}")
            out.data["evaluations"] = evals
    out.add("result", str(fg.payload))
    return EXIT_PASS


def cmd_assoc(args, out: Output) -> int:
    cfg = _config(args)
    q = resolve_quiver(cfg.quiver)
    kernel = Kernel(cfg.kernel)
    f, g, h = _elements(args, q, kernel, "fgh")
    mode = "exact" if kernel.is_rational else "sampled"
    rep = verify_associativity(f, g, h, mode=mode, plan=cfg.plan(), params=cfg.params, tol=cfg.tolerance(1e-8))
    out.add("mode", mode)
    out.add("status", "pass" if rep.passed else "fail")
    out.add("max_deviation", _num(rep.max_deviation), f"{rep.max_deviation:.3e}")
    out.add("terms", list(rep.term_counts), " ".join(map(str, rep.term_counts)))
    if cfg.timing:
        out.add("seconds", rep.seconds)
    return EXIT_PASS if rep.passed else EXIT_FAIL


def cmd_classical(args, out: Output) -> int:
    cfg = _config(args)
    q = resolve_quiver(cfg.quiver)
    kernel = Kernel(cfg.kernel)
    f, g = _elements(args, q, kernel, "fg")
    if not classical_weight_condition(q):
        out.add("status", "skip")
        out.add("detail", "weight condition m_h = m_h* fails for some arrow")
        return EXIT_FAIL
    c = classical_commutator(f, g, twisted=args.twisted).payload
    if isinstance(c, ThetaExpr):
        point = sample_assignments([c], cfg.plan(), cfg.params)
        rep = compare_values(c.evaluate(point, cfg.params, None), 0, cfg.tolerance(1e-8), cfg.samples)
        ok, dev = rep.passed, rep.max_scaled
    else:
        ok, dev = c.is_zero, 0.0
    out.add("status", "pass" if ok else "fail")
    out.add("max_deviation", _num(dev), f"{dev:.3e}")
    if not ok and not isinstance(c, ThetaExpr):
        out.add("commutator", str(c))
    return EXIT_PASS if ok else EXIT_FAIL


def _point(args) -> DynamicalPoint:
    d = DEFAULT_TAYLOR_POINT
    v = str(args.vertex)
    lam = args.lam if args.lam is not None else d.lam.get("1")
    z = args.z if args.z is not None else d.z.get("1")
    tau = args.tau if args._tau_set else d.tau
    u = args.u if args.u is not None else d.u
    return DynamicalPoint(tau, {v: lam}, {v: z}, u)


def cmd_current_eval(args, out: Output) -> int:
    cfg = _config(args)
    pt = _point(args)
    val = dynamical_current_eval("plus", args.vertex, pt, cfg.params)
    out.add("value", _num(val), _cstr(val))
    out.add("tau", _num(pt.tau), _cstr(pt.tau))
    out.add("precision", cfg.precision)
    return EXIT_PASS


def cmd_taylor_check(args, out: Output) -> int:
    cfg = _config(args)
    pt = _point(args)
    rep = taylor_identity_check(args.vertex, pt, args.order, cfg.params, method=args.method)
    out.add("status", "pass" if rep else "fail")
    out.add("method", rep.method)
    out.add("deviation", rep.deviation, f"{rep.deviation:.3e}")
    out.add("bound", rep.bound, f"{rep.bound:.3e}")
    out.add("slope", rep.slope, "n/a" if rep.slope is None else f"{rep.slope:.4f}")
    out.add("unstable", rep.unstable)
    if rep.detail:
        out.add("detail", rep.detail)
    if rep.unstable:
        return EXIT_NUMERIC
    return EXIT_PASS if rep else EXIT_FAIL


def cmd_frv(args, out: Output) -> int:
    cfg = _config(args)
    a = frv_fac(args.k1, args.k2, args.n1, args.n2)
    b = engine_frv_fac(args.k1, args.k2, args.n1, args.n2)
    point = sample_assignments([a, b], cfg.plan(), cfg.params)
    rep = compare_values(a.evaluate(point, cfg.params, None), b.evaluate(point, cfg.params, None),
                         cfg.tolerance(1e-9), cfg.samples)
    out.add("frv", str(a))
    out.add("engine", str(b))
    out.add("status", "pass" if rep.passed else "fail")
    out.add("max_deviation", rep.max_scaled, f"{rep.max_scaled:.3e}")
    return EXIT_PASS if rep.passed else EXIT_FAIL


def cmd_konno(args, out: Output) -> int:
    cfg = _config(args)
    try:
        left, right = args.dims.split(";")
    except ValueError:
        raise UsageError("--dims must look like v1;v2, for example 1,1;1,0") from None
    if len(args.framing) != 2:
        raise UsageError("--framing must be n,m")
    tcfg = TypeAConfig(args.rank, _int_list(left), _int_list(right), *args.framing)
    rep = konno_division_check(tcfg, cfg.plan(), cfg.params, cfg.tolerance(1e-8), args.reading)
    out.add("reading", rep.reading)
    out.add("status", "pass" if rep.passed else "fail")
    out.add("max_deviation", rep.max_deviation, f"{rep.max_deviation:.3e}")
    out.add("max_deviation_specialized", rep.max_deviation_specialized, f"{rep.max_deviation_specialized:.3e}")
    return EXIT_PASS if rep.passed else EXIT_FAIL


def cmd_weight(args, out: Output) -> int:
    cfg = _config(args)
    w = weight_function_sl2(args.k, args.n)
    sym = w.is_symmetric(cfg.plan(), cfg.params, cfg.tolerance(1e-9))
    out.add("grading", {"v": list(w.grading.v), "w": list(w.grading.w)}, _grading_str(w.grading))
    out.add("shuffle_terms", weight_function_terms(args.k, args.n))
    out.add("symmetric", sym)
    out.add("result", str(w.payload))
    return EXIT_PASS if sym else EXIT_FAIL


def cmd_verify(args, out: Output) -> int:
    cfg = _config(args)
    report = run_suite(args.suite, cfg)
    counts = report.counts()
    if cfg.format == "json":
        out.data = {
            "suite": report.suite,
            "seed": report.seed,
            "status": "pass" if report.passed else "fail",
            "counts": counts,
            "checks": [r.to_json(cfg.timing) for r in report.records],
        }
    else:
        out.lines.append(f"suite: {report.suite} seed: {report.seed}")
        for r in report.records:
            line = f"{r.status.upper():4} {r.name} dev={r.max_deviation:.3e}"
            if r.terms:
                line += " terms=" + ",".join(map(str, r.terms))
            if cfg.timing:
                line += f" time={r.seconds:.3f}s"
            if r.detail:
                line += f" [{r.detail}]"
            out.lines.append(line)
        out.lines.append(f"summary: {counts['pass']} pass, {counts['fail']} fail, {counts['skip']} skip")
    if report.passed:
        return EXIT_PASS
    return EXIT_NUMERIC if report.numeric_failure else EXIT_FAIL


def _assignment(items: Sequence[str]) -> dict[str, complex]:
    out = {}
    for item in items:
        if "=" not in item:
            raise UsageError(f"--at expects NAME=VALUE, got {item!r}")
        name, value = item.split("=", 1)
        try:
            out[name.strip()] = parse_complex(value)
        except argparse.ArgumentTypeError as exc:
            raise UsageError(str(exc)) from None
    return out


def cmd_eval(args, out: Output) -> int:
    cfg = _config(args)
    at = _assignment(args.at)
    space = VarSpace.from_names([])
    e = ThetaExpr.coerce(parse_expression(args.expr, space))
    missing = e.free_variables() - set(at)
    if missing:
        raise UnboundVariable(missing)
    val = complex(e.evaluate({k: v for k, v in at.items()}, cfg.params))
    out.add("value", _num(val), _cstr(val))
    out.add("tau", _num(complex(cfg.tau)), _cstr(complex(cfg.tau)))
    out.add("precision", cfg.precision)
    return EXIT_PASS


COMMANDS = {
    "product": cmd_product,
    "assoc": cmd_assoc,
    "classical": cmd_classical,
    "current-eval": cmd_current_eval,
    "taylor-check": cmd_taylor_check,
    "frv": cmd_frv,
    "konno-check": cmd_konno,
    "weight": cmd_weight,
    "verify": cmd_verify,
    "eval": cmd_eval,
}


def main(argv: Sequence[str] | None = None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = build_parser().parse_args(argv)
        args._tau_set = any(a == "--tau" or a.startswith("--tau=") for a in argv)
        out = Output(args.format)
        code = COMMANDS[args.verb](args, out)
    except UsageError as exc:
        stderr.write(f"coha: error: {exc}\n")
        return EXIT_USAGE
    except NumericError as exc:
        stderr.write(f"coha: numeric error: {exc}\n")
        return EXIT_NUMERIC
    except (CohaError, ValueError, KeyError, OSError, NotImplementedError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        stderr.write(f"coha: error: {msg}\n")
        return EXIT_USAGE
    out.emit(stdout)
    return code


if __name__ == "__main__":
    sys.exit(main())
