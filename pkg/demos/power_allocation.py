"""
Strong-user rate matching
=========================

Picks the strong user's power fraction so its NOMA secrecy rate equals the
OMA one, then shows what the weak user gains.
"""

# %%
from dataclasses import replace

import numpy as np

from nomasec.closed_form import esr_strong, esr_weak
from nomasec.model import SystemConfig
from nomasec.oracles import quad_oma_esr
from nomasec.power_alloc import match_strong_user

base = SystemConfig(d_pr=(200, 205, 210, 215), d_near=30, d_far=100, d_eve=150, alpha=2,
                    sigma_eps2=2e-5, p_max=1e5, i_peak=1.0)

# %%
# The strong-user rate grows with a_s, which is what makes bisection safe
for a in np.linspace(0.05, 0.45, 5):
    print(f"a_s={a:.2f}  R_s={esr_strong(replace(base, a_s=a)).total:.4f}")

# %%
# Sweep the interference budget and allocate at each point
print("I_p[dB]   a_s     NOMA weak  OMA weak")
for ip_db in (-10, 0, 10, 20):
    cfg = replace(base, i_peak=10 ** (ip_db / 10))
    res = match_strong_user(cfg)
    w = esr_weak(replace(cfg, a_s=res.a_s)).total
    print(f"{ip_db:6d}  {res.a_s:.4f}   {w:.4f}     {quad_oma_esr(cfg, 'weak'):.4f}")
