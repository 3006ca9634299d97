import itertools

import pytest

from coha.textio import parse_theta
from coha.theta import SamplePlan, ThetaParams, theta_equal_probabilistic
from coha.weights import (
    TypeAConfig,
    engine_frv_fac,
    frv_fac,
    h_cross,
    h_cross_expanded,
    konno_division_check,
    konno_sign,
    weight_function_sl2,
    weight_function_terms,
)

PARAMS = ThetaParams(0.31 + 0.79j)


@pytest.mark.parametrize("k1,k2,n1,n2", [(1, 1, 0, 0), (2, 1, 1, 2), (0, 2, 2, 0), (2, 2, 2, 2)])
def test_frv_factor_matches_engine(k1, k2, n1, n2):
    rep = theta_equal_probabilistic(engine_frv_fac(k1, k2, n1, n2), frv_fac(k1, k2, n1, n2), SamplePlan(seed=1),
                                    PARAMS, tol=1e-9)
    assert rep.passed


def test_frv_detects_a_wrong_factor():
    wrong = frv_fac(1, 1, 1, 1) * parse_theta("th(l[1,1] - zf[1,2] + t1)")
    assert not theta_equal_probabilistic(engine_frv_fac(1, 1, 1, 1), wrong, SamplePlan(seed=1), PARAMS).passed


def small_configs(N):
    for v1 in itertools.product((0, 1), repeat=N - 1):
        for v2 in itertools.product((0, 1), repeat=N - 1):
            yield TypeAConfig(N, v1, v2, 1, 0)
            yield TypeAConfig(N, v1, v2, 0, 1)


def test_h_cross_forms_agree():
    for cfg in small_configs(3):
        rep = theta_equal_probabilistic(h_cross(cfg), h_cross_expanded(cfg), SamplePlan(seed=2, samples=10), PARAMS,
                                        tol=1e-10)
        assert rep.passed, cfg


@pytest.mark.parametrize("N", [2, 3])
def test_division_identity(N):
    for cfg in small_configs(N):
        rep = konno_division_check(cfg, SamplePlan(seed=3, samples=20), PARAMS)
        assert rep.passed, cfg


def test_sign_readings():
    cfg = TypeAConfig(2, (1,), (1,), 1, 0)
    assert konno_sign(cfg, "bilinear") == -1
    assert konno_sign(cfg, "additive") == 1
    with pytest.raises(ValueError):
        konno_sign(cfg, "other")


def test_config_validation():
    with pytest.raises(ValueError):
        TypeAConfig(1, (), ())
    with pytest.raises(ValueError):
        TypeAConfig(3, (1,), (1, 0))


def test_weight_function_small_case():
    w = weight_function_sl2(1, 1)
    rep = theta_equal_probabilistic(w.payload, parse_theta("th(zf[1,1] - l[1,1] + t1)"), SamplePlan(seed=5),
                                    PARAMS, tol=1e-10)
    assert rep.passed


def test_weight_function_terms_and_bounds():
    assert [weight_function_terms(k, 3) for k in range(4)] == [1, 1, 2, 6]
    assert weight_function_sl2(2, 2).is_symmetric(SamplePlan(seed=6), PARAMS)
    with pytest.raises(ValueError):
        weight_function_sl2(3, 2)
