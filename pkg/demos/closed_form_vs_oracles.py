"""
Closed form against two independent oracles
===========================================

Evaluates the strong- and weak-user ergodic secrecy rates at the default
geometry and compares them with nested quadrature and Monte Carlo.
"""

# %%
# Default scenario
# ----------------
# Four primary receivers at 200-215 m, near user at 30 m, far user at
# 100 m, eavesdropper at 150 m.  Powers are given in dB and converted once.
from nomasec.closed_form import esr_strong, esr_weak, essr_asymptotic
from nomasec.model import SystemConfig
from nomasec.oracles import mc_esr, quad_esr_strong, quad_esr_weak

cfg = SystemConfig(d_pr=(200, 205, 210, 215), d_near=30, d_far=100, d_eve=150, alpha=2,
                   sigma_eps2=2e-5, p_max=10 ** 5.0, i_peak=10 ** 1.0, a_s=0.2)

# %%
# Three routes to the same number
# -------------------------------
for name, closed, quad, mode in (("strong", esr_strong, quad_esr_strong, "noma_strong"),
                                 ("weak", esr_weak, quad_esr_weak, "noma_weak")):
    est = mc_esr(cfg, mode, n=1_000_000, seed=0)
    print(f"{name:6s} closed {closed(cfg).total:.6f}  quad {quad(cfg):.6f}  "
          f"MC {est.mean:.6f} +/- {est.stderr:.6f}")

# %%
# The large-budget limit only depends on P_max
print("asymptotic ESSR", round(essr_asymptotic(cfg), 6))
