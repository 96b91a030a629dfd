from dataclasses import replace
import math

from hypothesis import given, settings, strategies as st
import numpy as np
import pytest
from scipy import integrate

from nomasec.closed_form import (LOG2E, EsrBreakdown, InternalConsistencyError, _finish, esr_strong,
                                 esr_weak, essr, essr_asymptotic, j1, j2, j1_unit, j2_unit)
from nomasec.model import coefficient_set, derive_stats, phi_expansion
from nomasec.oracles import quad_esr_strong, quad_esr_weak
from nomasec.special_fn import e1, e1_scaled, ei_neg

from helpers import db, default_config, random_configs


def j1_quad(omega, p_max, s2):
    f = lambda x: math.log1p(p_max * x) * math.exp(-x / omega)
    val, _ = integrate.quad(f, s2, s2 + 60 * omega, epsabs=0, epsrel=1e-12, limit=400,
                            points=[s2 + omega, s2 + 1 / p_max])
    return val / omega


def j2_quad(omega, b, theta, i_peak, s2):
    inner = lambda y: integrate.quad(
        lambda x: math.log1p(i_peak * x / y) * math.exp(-x / omega), s2, s2 + 60 * omega,
        epsabs=0, epsrel=1e-12, limit=400)[0]
    val, _ = integrate.quad(lambda y: b * math.exp(-b * y) * inner(y), theta, theta + 60 / b,
                            epsabs=0, epsrel=1e-11, limit=400)
    return val / omega


def test_j1_known_value():
    ref = j1_quad(1.0, 10.0, 0.0)
    assert j1(1.0, 10.0, 0.0) == pytest.approx(ref, rel=1e-10)
    assert j1(1.0, 10.0, 0.0) == pytest.approx(math.exp(0.1) * e1(0.1), rel=1e-13)


def test_j1_zero_error_reduces_to_scaled_e1():
    for om in (1e-5, 1e-3, 1.0):
        assert j1(om, 1e5, 0.0) == pytest.approx(e1_scaled(1 / (om * 1e5)), rel=1e-15)


def test_j1_realistic_no_overflow():
    val = j1(1e-4, 1e5, 2e-5)
    assert math.isfinite(val)
    assert val == pytest.approx(j1_quad(1e-4, 1e5, 2e-5), rel=1e-9)


def test_j1_literal_form():
    # printed form with separate exp and E1 factors, valid where nothing overflows
    om, p, s2 = 1e-2, 30.0, 1e-3
    lit = math.exp(-s2 / om) * math.log1p(s2 * p) + math.exp(1 / (om * p)) * e1((1 / p + s2) / om)
    assert j1(om, p, s2) == pytest.approx(lit, rel=1e-13)


def j2_literal(om, b, th, ip, s2):
    """The printed J2 with raw Ei/E1 calls."""
    pre = (1 / b) / (1 / b - ip * om)
    t1 = math.exp(-s2 / om) * ei_neg(b * th)
    brace = (math.exp(ip * s2 * b - s2 / om) * ei_neg(b * (th + ip * s2))
             - math.exp(th / (ip * om) - b * th) * ei_neg((th + ip * s2) / (ip * om)))
    t3 = math.exp(-b * th - s2 / om) * (math.log1p(ip * s2 / th)
                                        + math.exp((th + ip * s2) / (ip * om)) * e1((th + ip * s2) / (ip * om)))
    return t1 - pre * brace + t3


@pytest.mark.parametrize("args", [
    (1.0, 1.0, 1.0, 10.0, 0.0),
    (1.0, 0.5, 0.3, 4.0, 0.05),
    (2e-4, 3e4, 1e-4, 10.0, 2e-5),
])
def test_j2_matches_nested_quadrature(args):
    assert j2(*args) == pytest.approx(j2_quad(*args), rel=1e-8)


@pytest.mark.parametrize("args", [(1.0, 1.0, 1.0, 10.0, 0.0), (1.0, 0.5, 0.3, 4.0, 0.05)])
def test_j2_literal_form(args):
    assert j2(*args) == pytest.approx(j2_literal(*args), rel=1e-10)


def test_j2_zero_error_reduction():
    om, b, th, ip = 1.0, 0.7, 0.4, 3.0
    third = math.exp(-b * th) * e1_scaled(th / (ip * om))
    pre = (1 / b) / (1 / b - ip * om)
    brace = ei_neg(b * th) - math.exp(th / (ip * om) - b * th) * ei_neg(th / (ip * om))
    assert j2(om, b, th, ip, 0.0) == pytest.approx(ei_neg(b * th) - pre * brace + third, rel=1e-12)


@pytest.mark.parametrize("s2", [0.0, 0.05])
def test_j2_singular_point(s2):
    om, th, ip = 1.0, 0.5, 2.0
    b = 1.0 / (ip * om)
    val = j2(om, b, th, ip, s2)
    assert val == pytest.approx(j2_quad(om, b, th, ip, s2), rel=1e-6)
    # continuous across the removable singularity
    for eps in (1e-4, 1e-7, -1e-7, -1e-4):
        assert j2(om, b * (1 + eps), th, ip, s2) == pytest.approx(val, rel=5 * abs(eps) + 1e-9)


def test_j2_vectorised_matches_scalar():
    bs = np.array([0.3, 1.0, 2.5])
    vec = j2_unit(1.0, bs, 0.5, 2.0, 0.01)
    for b, v in zip(bs, vec):
        assert v == pytest.approx(float(j2_unit(1.0, np.array([b]), 0.5, 2.0, 0.01)[0]), rel=1e-15)


def test_defaults_match_quadrature():
    cfg = default_config()
    assert esr_strong(cfg).total == pytest.approx(quad_esr_strong(cfg), rel=1e-6)
    assert esr_weak(cfg).total == pytest.approx(quad_esr_weak(cfg), rel=1e-6)


def test_frozen_default_values():
    # frozen from the quadrature oracle at P_max = 50 dB, I_p = 10 dB, a_s = 0.2
    cfg = default_config()
    assert esr_strong(cfg).total == pytest.approx(2.37404, abs=1e-5)
    assert esr_weak(cfg).total == pytest.approx(0.538612, abs=1e-6)
    assert essr_asymptotic(cfg) == pytest.approx(2.91266, abs=1e-5)


def test_random_configs_match_quadrature():
    for cfg in random_configs(12, seed=99):
        for cf, q in ((esr_strong, quad_esr_strong), (esr_weak, quad_esr_weak)):
            ref = q(cfg)
            assert abs(cf(cfg).total - ref) / max(ref, 1e-6) <= 1e-5


def test_literal_coefficient_form_strong():
    """Strong-user rate evaluated with the unscaled coefficients and kernels."""
    cfg = default_config(ip_db=0.0, pmax_db=20.0, a_s=0.3, sigma_eps2=1e-6)
    st_ = derive_stats(cfg)
    co = coefficient_set(st_, cfg.a_s, cfg.sigma_eps2)
    phi = phi_expansion(st_.omega_tilde_pr)
    a_s, s2 = cfg.a_s, cfg.sigma_eps2
    th, ip, pm = st_.theta, cfg.i_peak, cfg.p_max
    bracket = float(np.sum(phi.kappa * (1 - np.exp(-phi.b * th))))
    J1 = lambda om: j1(om, pm, s2)
    J2 = lambda om: sum(k * j2(om, b, th, ip, s2) for k, b in zip(phi.kappa, phi.b))
    rows = list(zip(co.a_hat, co.a_hat_cal, st_.xi, st_.xi_e))
    i1 = sum(ah * (xi * J1(a_s * xi) - co.c_hat_scr_e * xie * J1(a_s * xie))
             for ah, _, xi, xie in rows) * bracket
    i2 = sum(ah * (xi * J2(a_s * xi) - co.c_hat_scr_e * xie * J2(a_s * xie))
             for ah, _, xi, xie in rows)
    i3 = co.c_hat_e * sum(ac * xie * J1(a_s * xie) for _, ac, _, xie in rows) * bracket
    i4 = co.c_hat_e * sum(ac * xie * J2(a_s * xie) for _, ac, _, xie in rows)
    total = -LOG2E * a_s * (i1 + i2 - i3 - i4)
    assert esr_strong(cfg).total == pytest.approx(total, rel=1e-9)


def test_essr_is_sum():
    cfg = default_config()
    assert essr(cfg) == esr_strong(cfg).total + esr_weak(cfg).total


def test_vanishing_interference_budget():
    cfg = default_config(ip_db=-120.0)
    assert esr_strong(cfg).total < 1e-6
    assert esr_weak(cfg).total < 1e-6


def test_saturation_at_40db():
    lo, hi = essr(default_config(0.0, 40.0)), essr(default_config(20.0, 40.0))
    assert abs(hi - lo) / lo < 0.02


def test_monotone_in_interference_budget():
    vals = [essr(default_config(ip, 50.0)) for ip in np.linspace(-10, 30, 20)]
    assert all(b >= a - 1e-12 for a, b in zip(vals[:-1], vals[1:]))


def test_asymptote_independent_of_prs():
    a = essr_asymptotic(default_config(d_pr=(200.0, 200.0)))
    b = essr_asymptotic(default_config(d_pr=(200.0,) * 10))
    assert a == b


def test_asymptote_is_large_budget_limit():
    cfg = default_config(ip_db=60.0)
    assert abs(essr(cfg) - essr_asymptotic(cfg)) / essr_asymptotic(cfg) < 0.01
    cfg = default_config(ip_db=120.0)
    assert essr(cfg) == pytest.approx(essr_asymptotic(cfg), rel=1e-9)


def test_slope_vanishes():
    for pm in (50.0, 60.0):
        up, dn = essr(default_config(61.0, pm)), essr(default_config(59.0, pm))
        assert abs(up - dn) / 2.0 < 1e-4


def test_weak_rate_continuous_near_half():
    vals = [esr_weak(default_config(a_s=a)).total for a in (0.49, 0.499, 0.4999)]
    assert abs(vals[1] - vals[0]) < 0.01 and abs(vals[2] - vals[1]) < 0.002
    assert quad_esr_weak(default_config(a_s=0.4999)) == pytest.approx(vals[2], rel=1e-6)


def test_finish_policy():
    assert _finish((1.0, 0.0, 1.0 + 1e-10, 0.0)) == EsrBreakdown(0.0, (1.0, 0.0, 1.0 + 1e-10, 0.0), True)
    with pytest.raises(InternalConsistencyError):
        _finish((1.0, 0.0, 1.1, 0.0))
    with pytest.raises(InternalConsistencyError):
        _finish((math.nan, 0.0, 0.0, 0.0))


def test_finite_on_test_grid():
    for pm in (40.0, 50.0, 60.0):
        for ip in np.arange(-10, 21, 5.0):
            for a in (0.05, 0.2, 0.45):
                cfg = default_config(ip, pm, a)
                for br in (esr_strong(cfg), esr_weak(cfg)):
                    assert all(math.isfinite(v) for v in br.components)
                    assert br.total >= 0


config_strategy = st.builds(
    lambda ip, pm, a, s2, m: default_config(ip, pm, a, s2, (200.0,) * m),
    st.floats(-20, 70), st.floats(0, 70), st.floats(0.01, 0.49), st.floats(0, 2e-5),
    st.integers(1, 6))


@settings(max_examples=60, deadline=None)
@given(config_strategy)
def test_asymptotic_dominance(cfg):
    assert essr(cfg) <= essr_asymptotic(cfg) + 1e-9


@settings(max_examples=60, deadline=None)
@given(config_strategy)
def test_components_finite(cfg):
    for br in (esr_strong(cfg), esr_weak(cfg)):
        assert np.all(np.isfinite(br.components)) and br.total >= 0
