import math

import mpmath
import pytest

from coha.currents import (
    DEFAULT_TAYLOR_POINT,
    DynamicalPoint,
    commutator,
    drinfeld_current,
    dynamical_current_eval,
    generator,
    taylor_coefficients,
    taylor_identity_check,
)
from coha.errors import PoleError
from coha.quiver import builtin_quiver
from coha.shuffle import shuffle_product
from coha.textio import parse_rational
from coha.theta import ThetaParams, theta

SL2 = builtin_quiver("sl2")
A2 = builtin_quiver("a2")


def mp_section(tau):
    nome = mpmath.exp(1j * mpmath.pi * tau)
    norm = mpmath.pi * mpmath.jtheta(1, 0, nome, 1)

    def th(z):
        return mpmath.jtheta(1, mpmath.pi * z, nome) / norm

    return lambda lam, z: th(z + lam) / (th(z) * th(lam))


def test_generators():
    g0 = generator(SL2, "1", 0)
    assert g0.element.grading.v == (1,) and g0.element.payload == 1
    g2 = generator(SL2, 1, 2)
    assert g2.element.payload == parse_rational("l[1,1]^2")
    assert g2.u_exponent == -3
    assert [e for e, _ in drinfeld_current(SL2, 1, 3)] == [-1, -2, -3, -4]
    with pytest.raises(ValueError):
        generator(SL2, 1, -1)


def test_generator_product_hand_value():
    out = shuffle_product(generator(SL2, 1, 1).element, generator(SL2, 1, 0).element)
    assert out.payload == parse_rational("-(l[1,1] + l[1,2]) - hbar")


def test_commutators():
    assert commutator(SL2, 1, 0, 1, 0).payload.is_zero
    assert commutator(SL2, 1, 1, 1, 0).payload == parse_rational("-2*hbar")
    expected = parse_rational("(l[2,1] - l[1,1] + t1) - (l[1,1] - l[2,1] + t2)")
    assert commutator(A2, "1", 0, "2", 0).payload == expected


def test_closed_form_and_section():
    p = ThetaParams(0.31 + 0.79j)
    point = DynamicalPoint(p.tau, {"1": 0.3}, {"1": 0.2 + 0.1j}, 0.0)
    val = dynamical_current_eval("plus", "1", point, p)
    assert val == pytest.approx(theta(0.5 + 0.1j, p) / (theta(0.2 + 0.1j, p) * theta(0.3, p)), rel=1e-13)
    ref = complex(mp_section(p.tau)(0.3, 0.2 + 0.1j))
    assert abs(val - ref) < 1e-11 * abs(ref)


def test_section_reflection():
    # the section is odd under (z, lam) -> (-z, -lam)
    p = ThetaParams(0.31 + 0.79j)
    z, lam = 0.17 - 0.06j, 0.41
    a = dynamical_current_eval("plus", 1, DynamicalPoint(p.tau, {"1": -lam}, {"1": -z}), p)
    b = dynamical_current_eval("plus", 1, DynamicalPoint(p.tau, {"1": lam}, {"1": z}), p)
    assert abs(a + b) < 1e-12 * abs(b)


def test_poles_and_unsupported_kind():
    near = DynamicalPoint(0.31 + 0.79j, {"1": 1e-6}, {"1": 0.2})
    with pytest.raises(PoleError):
        dynamical_current_eval("plus", 1, near)
    with pytest.raises(NotImplementedError):
        dynamical_current_eval("minus", 1, DEFAULT_TAYLOR_POINT)
    with pytest.raises(ValueError):
        DynamicalPoint(1 - 1j, {}, {})


def test_taylor_coefficients_against_mpmath():
    pt = DEFAULT_TAYLOR_POINT
    coeffs, unstable = taylor_coefficients("1", pt, 4)
    assert not unstable
    f = mp_section(pt.tau)
    with mpmath.workdps(30):
        ref = mpmath.taylor(lambda z: f(pt.lam["1"], z), pt.z["1"], 4)
    for c, r in zip(coeffs, ref):
        assert abs(c - complex(r)) < 1e-10 * max(1, abs(complex(r)))


def test_taylor_check_default():
    rep = taylor_identity_check("1")
    assert rep.passed and rep.slope_ok and bool(rep)
    assert rep.deviation < 10 * 0.05**5
    assert abs(rep.slope - 5) <= 0.3


@pytest.mark.parametrize("order", [0, 1, 2, 3])
def test_taylor_check_other_orders(order):
    rep = taylor_identity_check("1", order=order)
    assert rep.passed
    assert abs(rep.slope - (order + 1)) <= 0.3


def test_fd_is_flagged():
    rep = taylor_identity_check("1", method="fd")
    assert rep.unstable and not bool(rep)


def test_factorial_scaling_matters():
    # dropping 1/i! visibly breaks the identity
    pt = DEFAULT_TAYLOR_POINT
    coeffs, _ = taylor_coefficients("1", pt, 4)
    u = pt.u
    wrong = sum(c * math.factorial(i) * u**i for i, c in enumerate(coeffs))
    assert abs(wrong - dynamical_current_eval("plus", 1, pt)) > 1e-4
