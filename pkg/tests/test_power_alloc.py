from dataclasses import replace

import numpy as np
import pytest

from nomasec.closed_form import esr_strong, esr_weak, essr
from nomasec.oracles import quad_oma_esr
from nomasec.power_alloc import BRACKET, AllocationResult, BracketStatus, match_strong_user

from helpers import default_config


def test_strong_rate_nondecreasing_in_a_s():
    cfg = default_config()
    vals = [esr_strong(replace(cfg, a_s=a)).total for a in np.linspace(0.01, 0.49, 9)]
    assert all(b >= a for a, b in zip(vals[:-1], vals[1:]))


@pytest.mark.parametrize("ip_db, a_s_ref", [(0.0, 0.122), (10.0, 0.1205)])
def test_converged_allocation(ip_db, a_s_ref):
    cfg = default_config(ip_db=ip_db)
    res = match_strong_user(cfg)
    assert res.bracket_status is BracketStatus.CONVERGED
    assert 0 < res.a_s < 0.5 and res.a_w == pytest.approx(1 - res.a_s)
    assert res.a_s == pytest.approx(a_s_ref, abs=1e-3)
    alloc = replace(cfg, a_s=res.a_s)
    target = quad_oma_esr(cfg, "strong", rel_tol=1e-9)
    assert abs(esr_strong(alloc).total - target) <= 1e-6
    assert esr_weak(alloc).total >= quad_oma_esr(cfg, "weak")
    assert essr(alloc) > target + quad_oma_esr(cfg, "weak")


def test_deterministic():
    cfg = default_config()
    assert match_strong_user(cfg) == match_strong_user(cfg)


def test_ignores_config_a_s():
    cfg = default_config()
    assert match_strong_user(cfg).a_s == match_strong_user(replace(cfg, a_s=0.45)).a_s


def test_superiority_on_grid():
    for pm in (40.0, 50.0, 60.0):
        for ip in (-10.0, 0.0, 10.0, 20.0):
            cfg = default_config(ip, pm)
            res = match_strong_user(cfg)
            assert res.bracket_status is BracketStatus.CONVERGED
            assert esr_weak(replace(cfg, a_s=res.a_s)).total >= quad_oma_esr(cfg, "weak")


@pytest.mark.parametrize("target, status, a_s", [
    (50.0, BracketStatus.CLAMPED_HIGH, BRACKET[1]),
    (0.0, BracketStatus.CLAMPED_LOW, BRACKET[0]),
])
def test_clamped_when_no_sign_change(monkeypatch, target, status, a_s):
    import nomasec.power_alloc as pa
    monkeypatch.setattr(pa, "quad_oma_esr", lambda *a, **k: target)
    res = match_strong_user(default_config())
    assert res.bracket_status is status and res.a_s == a_s and res.iterations == 0
    assert res.achieved_gap == pytest.approx(abs(esr_strong(replace(default_config(), a_s=a_s)).total - target))


def test_tolerance_floor():
    with pytest.raises(ValueError):
        match_strong_user(default_config(), tol=1e-10)
