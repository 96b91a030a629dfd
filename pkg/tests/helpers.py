"""Shared scenario builders for the test suite."""

import numpy as np

from nomasec.model import ModelError, SystemConfig

DEFAULT_PRS = (200.0, 205.0, 210.0, 215.0)


def db(x):
    return 10.0 ** (x / 10.0)


def default_config(ip_db=10.0, pmax_db=50.0, a_s=0.2, sigma_eps2=2e-5, d_pr=DEFAULT_PRS):
    return SystemConfig(d_pr=d_pr, d_near=30.0, d_far=100.0, d_eve=150.0, alpha=2.0,
                        sigma_eps2=sigma_eps2, p_max=db(pmax_db), i_peak=db(ip_db), a_s=a_s)


def random_configs(n, seed, max_prs=4):
    """Valid random scenarios: distances in [20, 500] m, powers in [0, 60] dB."""
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < n:
        m = int(rng.integers(1, max_prs + 1))
        d_n, d_f, d_e = rng.uniform(20, 500, 3)
        try:
            out.append(SystemConfig(
                d_pr=tuple(rng.uniform(20, 500, m)), d_near=d_n, d_far=d_f, d_eve=d_e,
                alpha=2.0, sigma_eps2=float(rng.uniform(0, 5e-5)),
                p_max=db(rng.uniform(0, 60)), i_peak=db(rng.uniform(0, 60)),
                a_s=float(rng.uniform(0.05, 0.45))))
        except ModelError:
            pass
    return out
