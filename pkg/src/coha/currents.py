"""Drinfeld current coefficients and the dynamical elliptic current.

Additive side: the coefficient of u^{-k-1} in X+_i(u) is the monomial
lambda^k sitting in grading (e_i, 0).

Elliptic side: for a vertex k with dynamical parameter lam and spectral
input z,

    X+_k(u, lam) = theta(z + lam + u) / (theta(z + u) theta(lam))
                 = sum_i g^(i)(z) u^i / i!,

where g^(i) is the i-th z-derivative of the section theta(z+lam)/(theta(z)theta(lam)).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .errors import PoleError
from .quiver import Quiver
from .shuffle import ADDITIVE, Kernel, ShuffleElement, element, shuffle_product
from .symbolic import RationalExpr, lam
from .theta import ThetaParams, theta

__all__ = [
    "CurrentCoefficient",
    "generator",
    "drinfeld_current",
    "commutator",
    "DynamicalPoint",
    "poincare_section",
    "dynamical_current_eval",
    "taylor_coefficients",
    "TaylorReport",
    "taylor_identity_check",
    "DEFAULT_TAYLOR_POINT",
]


@dataclass(frozen=True)
class CurrentCoefficient:
    vertex: str
    degree: int
    element: ShuffleElement

    @property
    def u_exponent(self) -> int:
        return -self.degree - 1


def generator(q: Quiver, i, k: int, kernel: Kernel = ADDITIVE) -> CurrentCoefficient:
    """lambda^k in grading e_i."""
    if k < 0:
        raise ValueError("degree must be non-negative")
    i = str(i)
    e = q.unit_vector(i).v
    space_var = lam(i, 1)
    payload = RationalExpr.var(space_var) ** k if k else RationalExpr.const(1)
    return CurrentCoefficient(i, k, element(q, payload, v=e, kernel=kernel))


def drinfeld_current(q: Quiver, i, max_degree: int, kernel: Kernel = ADDITIVE) -> list[tuple[int, CurrentCoefficient]]:
    """Truncated X+_i(u) as (exponent of u, coefficient) pairs, exponents -1, -2, ..."""
    return [(-k - 1, generator(q, i, k, kernel)) for k in range(max_degree + 1)]


def commutator(q: Quiver, i, k: int, j, l: int, kernel: Kernel = ADDITIVE) -> ShuffleElement:
    a = generator(q, i, k, kernel).element
    b = generator(q, j, l, kernel).element
    return shuffle_product(a, b) - shuffle_product(b, a)


@dataclass(frozen=True)
class DynamicalPoint:
    tau: complex
    lam: Mapping[str, complex]
    z: Mapping[str, complex]
    u: complex = 0.0

    def __post_init__(self):
        if not complex(self.tau).imag > 0:
            raise ValueError("tau must have positive imaginary part")
        object.__setattr__(self, "lam", {str(k): complex(v) for k, v in self.lam.items()})
        object.__setattr__(self, "z", {str(k): complex(v) for k, v in self.z.items()})
        object.__setattr__(self, "u", complex(self.u))

    def at(self, vertex) -> tuple[complex, complex]:
        vertex = str(vertex)
        try:
            return self.lam[vertex], self.z[vertex]
        except KeyError:
            raise KeyError(f"no dynamical data for vertex {vertex!r}") from None

    def with_u(self, u: complex) -> DynamicalPoint:
        return DynamicalPoint(self.tau, self.lam, self.z, u)


# Mid-cell for tau = 0.11 + 1.37i: the nearest poles are far enough that the
# Taylor coefficients stay of order one and the u^5 term dominates the
# remainder at |u| <= 0.05.
DEFAULT_TAYLOR_POINT = DynamicalPoint(0.11 + 1.37j, {"1": 0.5}, {"1": 0.55 + 0.7j}, 0.05)


def _params(point: DynamicalPoint, p: ThetaParams | None) -> ThetaParams:
    precision = p.precision if p is not None else ThetaParams().precision
    return ThetaParams(point.tau, precision)


def poincare_section(z, lam_k, p: ThetaParams, pole_radius: float | None = 1e-3):
    """theta(z + lam) / (theta(z) theta(lam)); vectorized in z."""
    tz = theta(z, p)
    tl = theta(lam_k, p)
    if pole_radius is not None:
        if abs(tl) < pole_radius:
            raise PoleError(f"|theta(lambda)| = {abs(tl):.3g} is within the pole radius")
        if np.min(np.abs(tz)) < pole_radius:
            raise PoleError(f"|theta(z)| = {np.min(np.abs(tz)):.3g} is within the pole radius")
    return theta(np.asarray(z) + lam_k, p) / (tz * tl)


def dynamical_current_eval(kind: str, vertex, point: DynamicalPoint, p: ThetaParams | None = None,
                           pole_radius: float | None = 1e-3) -> complex:
    if kind == "minus":
        raise NotImplementedError("only the plus current has a closed form")
    if kind != "plus":
        raise ValueError(f"unknown current kind {kind!r}")
    lam_k, z_k = point.at(vertex)
    return complex(poincare_section(z_k + point.u, lam_k, _params(point, p), pole_radius))


def _lattice_distance(z: complex, tau: complex) -> float:
    # distance from z to the nearest point of Z + tau Z
    n0 = round(z.imag / tau.imag)
    best = math.inf
    for n in range(n0 - 2, n0 + 3):
        w = z - n * tau
        for m in (math.floor(w.real), math.ceil(w.real)):
            best = min(best, abs(w - m))
    return best


def taylor_coefficients(vertex, point: DynamicalPoint, order: int, p: ThetaParams | None = None,
                        method: str = "cauchy", step: float = 1e-4, nodes: int = 128):
    """Coefficients c_i = g^(i)(z)/i!, i <= order, and an instability flag.

    ``cauchy`` uses the trapezoidal rule on a circle of half the distance to
    the nearest pole; ``fd`` uses central differences with step ``step`` and
    one Richardson refinement, and flags orders where the two step sizes
    disagree beyond 1e-6 relative.
    """
    params = _params(point, p)
    lam_k, z_k = point.at(vertex)
    f = lambda z: poincare_section(z, lam_k, params, pole_radius=None)  # noqa: E731
    if method == "cauchy":
        r = min(0.5 * _lattice_distance(z_k, params.tau), 0.25)
        w = np.exp(2j * np.pi * np.arange(nodes) / nodes)
        vals = f(z_k + r * w)
        coeffs = [complex(np.sum(vals * w ** (-i)) / nodes / r**i) for i in range(order + 1)]
        return coeffs, False
    if method != "fd":
        raise ValueError(f"unknown derivative method {method!r}")
    coeffs, unstable = [], False
    for i in range(order + 1):
        d_h = _central(f, z_k, i, step)
        d_h2 = _central(f, z_k, i, step / 2)
        refined = (4 * d_h2 - d_h) / 3
        if i >= 1 and abs(d_h2 - d_h) > 1e-6 * max(1.0, abs(refined)):
            unstable = True
        coeffs.append(complex(refined / math.factorial(i)))
    return coeffs, unstable


def _central(f, z, i: int, h: float) -> complex:
    offsets = np.array([(i / 2 - j) * h for j in range(i + 1)])
    weights = np.array([(-1) ** j * math.comb(i, j) for j in range(i + 1)], dtype=float)
    return complex(np.sum(weights * f(z + offsets)) / h**i)


@dataclass
class TaylorReport:
    vertex: str
    order: int
    u: complex
    method: str
    deviation: float
    bound: float
    passed: bool
    slope: float | None
    slope_ok: bool | None
    unstable: bool
    coefficients: list[complex] = field(default_factory=list)
    detail: str = ""

    def __bool__(self):
        return self.passed and self.slope_ok is not False and not self.unstable


def taylor_identity_check(vertex, point: DynamicalPoint = DEFAULT_TAYLOR_POINT, order: int = 4,
                          p: ThetaParams | None = None, method: str = "cauchy",
                          scales=(1.0, 0.5, 0.25, 0.125), floor: float = 1e-9) -> TaylorReport:
    """Truncated series at ``point.u`` against the closed form.

    Passes when the deviation is below max(10 |u|^(N+1), floor).  The
    remainder order is the least-squares slope of log deviation against
    log |u| over ``u * scales``; it should be N+1 within 0.3.
    """
    vertex = str(vertex)
    coeffs, unstable = taylor_coefficients(vertex, point, order, p, method)

    def deviation(u):
        series = sum(c * u**i for i, c in enumerate(coeffs))
        closed = dynamical_current_eval("plus", vertex, point.with_u(u), p)
        return abs(series - closed)

    u = point.u
    dev = deviation(u)
    bound = 10 * abs(u) ** (order + 1)
    passed = bool(dev <= max(bound, floor))
    slope = slope_ok = None
    detail = ""
    if abs(u) > 0:
        xs, ys = [], []
        for s in scales:
            d = deviation(u * s)
            if d > 0:
                xs.append(math.log(abs(u) * s))
                ys.append(math.log(d))
        if len(xs) >= 2:
            slope = float(np.polyfit(xs, ys, 1)[0])
            slope_ok = abs(slope - (order + 1)) <= 0.3
        else:
            detail = "remainder vanished at every scale; slope undefined"
    if unstable:
        detail = (detail + "; " if detail else "") + "finite-difference derivatives disagree across step sizes"
    return TaylorReport(vertex, order, u, method, float(dev), float(bound), passed, slope, slope_ok,
                        unstable, coeffs, detail)
