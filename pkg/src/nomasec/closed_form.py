"""Exact and asymptotic closed-form ergodic secrecy rates.

The rate expressions are sums of products ``A * J(Omega)`` where the
coefficient carries ``exp(+sigma_eps2 / Omega)`` and the kernel carries
``exp(-sigma_eps2 / Omega)``.  Those exponentials can individually overflow,
so everything below works with the *unit* kernels

    j1_unit(Omega)    = exp(sigma_eps2 / Omega) * J1(Omega)
    j2_unit(Omega, B) = exp(sigma_eps2 / Omega) * J2(Omega; B)

and coefficients with the matching exponential already cancelled by hand.
:func:`j1` and :func:`j2` return the unscaled kernels.
"""

from dataclasses import dataclass
import math

import numpy as np

from .model import SystemConfig, derive_stats, max_gain_cdf, phi_expansion
from .special_fn import e1_scaled

LOG2E = 1.0 / math.log(2.0)

# below this |1 - r| the removable singularity of J2 is evaluated by series
_SINGULAR_BAND = 1e-6
_NEGATIVE_TOL = 1e-9


class InternalConsistencyError(ArithmeticError):
    pass


@dataclass(frozen=True)
class EsrBreakdown:
    total: float
    components: tuple
    clamped: bool = False


def _check_positive(**kwargs):
    for name, value in kwargs.items():
        if not np.all(np.isfinite(value)) or np.any(np.asarray(value) <= 0):
            raise ValueError(f"{name} must be finite and > 0, got {value!r}")


def j1_unit(omega, p_max, sigma_eps2):
    """``exp(sigma_eps2/omega) * J1(omega)``; the ESR building block for P = P_max."""
    omega = np.asarray(omega, dtype=float)
    return math.log1p(sigma_eps2 * p_max) + e1_scaled((1.0 / p_max + sigma_eps2) / omega)


def j1(omega, p_max, sigma_eps2):
    """``J1`` such that ``omega*J1 = int_{s2}^inf ln(1 + p_max x) exp(-x/omega) dx``."""
    _check_positive(omega=omega, p_max=p_max)
    if sigma_eps2 < 0:
        raise ValueError("sigma_eps2 must be >= 0")
    omega = np.asarray(omega, dtype=float)
    out = np.exp(-sigma_eps2 / omega) * j1_unit(omega, p_max, sigma_eps2)
    return float(out) if out.ndim == 0 else out


def _ratio_term(u, r):
    """``(f(u) - r f(u/r)) / (1 - r)`` with ``f = e1_scaled``.

    Near ``r = 1`` use the two-term expansion about the removable singularity:
    ``1 + (1-u) f(u) + (r-1) (u^2 f(u) - u + 1) / 2``.
    """
    u, r = np.broadcast_arrays(np.asarray(u, dtype=float), np.asarray(r, dtype=float))
    out = np.empty(u.shape)
    near = np.abs(1.0 - r) < _SINGULAR_BAND
    far = ~near
    if np.any(far):
        uf, rf = u[far], r[far]
        out[far] = (e1_scaled(uf) - rf * e1_scaled(uf / rf)) / (1.0 - rf)
    if np.any(near):
        un, rn = u[near], r[near]
        fu = e1_scaled(un)
        out[near] = 1.0 + (1.0 - un) * fu + 0.5 * (rn - 1.0) * (un * un * fu - un + 1.0)
    return out


def j2_unit(omega, b_eta, theta, i_peak, sigma_eps2):
    """``exp(sigma_eps2/omega) * J2(omega; b_eta)``, vectorised over ``b_eta``.

    Regrouped so every ``exp * E1`` product is an ``e1_scaled`` call times the
    common bounded factor ``exp(-b_eta * theta)``.
    """
    b = np.asarray(b_eta, dtype=float)
    a = i_peak * sigma_eps2
    r = b * i_peak * omega
    u1 = b * (theta + a)
    bracket = -e1_scaled(b * theta) + math.log1p(a / theta) + _ratio_term(u1, r)
    return np.exp(-b * theta) * bracket


def j2(omega, b_eta, theta, i_peak, sigma_eps2):
    """``J2`` such that ``omega*J2 = int_theta^inf b e^{-b y} int_{s2}^inf ln(1 + i_peak x / y) e^{-x/omega} dx dy``."""
    _check_positive(omega=omega, b_eta=b_eta, theta=theta, i_peak=i_peak)
    if sigma_eps2 < 0:
        raise ValueError("sigma_eps2 must be >= 0")
    out = math.exp(-sigma_eps2 / omega) * j2_unit(omega, b_eta, theta, i_peak, sigma_eps2)
    return float(out) if np.ndim(out) == 0 else out


class _Kernels:
    """Cached unit kernels for one scenario."""

    def __init__(self, config: SystemConfig):
        self.config = config
        self.stats = derive_stats(config)
        self.phi = phi_expansion(self.stats.omega_tilde_pr)
        # -sum kappa (1 - exp(-B theta)), via the product form (no cancellation)
        self.bracket = -float(max_gain_cdf(self.stats.omega_tilde_pr, self.stats.theta))

    def k1(self, omega):
        c = self.config
        return float(j1_unit(omega, c.p_max, c.sigma_eps2))

    def k2(self, omega):
        """sum_eta kappa_eta * j2_unit(omega, B_eta)."""
        c = self.config
        vals = j2_unit(omega, self.phi.b, self.stats.theta, c.i_peak, c.sigma_eps2)
        return float(np.sum(self.phi.kappa * vals))


def _finish(components, clamp=True):
    i1, i2, i3, i4 = components
    total = i1 + i2 - i3 - i4
    if not all(math.isfinite(v) for v in components):
        raise InternalConsistencyError(f"non-finite ESR component: {components}")
    clamped = False
    if total < 0:
        if total < -_NEGATIVE_TOL or not clamp:
            raise InternalConsistencyError(f"negative ESR {total:.3e}")
        total, clamped = 0.0, True
    return EsrBreakdown(total, tuple(components), clamped)


def _strong_components(k: _Kernels):
    a_s = k.config.a_s
    oe = k.stats.omega_tilde["e"]
    i1 = i2 = i3 = i4 = 0.0
    for ell, (xi, xie) in enumerate(zip(k.stats.xi, k.stats.xi_e), start=1):
        sign = 1.0 if ell % 2 else -1.0
        w_self, w_eve = xie / xi, xie / oe
        i1 += sign * (k.k1(a_s * xi) - w_self * k.k1(a_s * xie))
        i2 += sign * (k.k2(a_s * xi) - w_self * k.k2(a_s * xie))
        i3 += sign * w_eve * k.k1(a_s * xie)
        i4 += sign * w_eve * k.k2(a_s * xie)
    return (-LOG2E * k.bracket * i1, -LOG2E * i2, -LOG2E * k.bracket * i3, -LOG2E * i4)


def _weak_components(k: _Kernels):
    a_s = k.config.a_s
    oe = k.stats.omega_tilde["e"]
    xi2, xi2e = k.stats.xi[1], k.stats.xi_e[1]
    w_self, w_eve = xi2e / xi2, xi2e / oe

    def legit(kern):
        # check-family (full power) minus hat-family (a_s scaled) terms
        return (kern(xi2) - w_self * kern(xi2e)) - (kern(a_s * xi2) - w_self * kern(a_s * xi2e))

    def eve(kern):
        return w_eve * kern(xi2e) - w_eve * kern(a_s * xi2e)

    return (
        -LOG2E * k.bracket * legit(k.k1),
        -LOG2E * legit(k.k2),
        -LOG2E * k.bracket * eve(k.k1),
        -LOG2E * eve(k.k2),
    )


def esr_strong(config: SystemConfig) -> EsrBreakdown:
    """Ergodic secrecy rate of the strong user, bits/s/Hz."""
    return _finish(_strong_components(_Kernels(config)))


def esr_weak(config: SystemConfig) -> EsrBreakdown:
    """Ergodic secrecy rate of the weak user, bits/s/Hz."""
    return _finish(_weak_components(_Kernels(config)))


def essr(config: SystemConfig) -> float:
    k = _Kernels(config)
    return _finish(_strong_components(k)).total + _finish(_weak_components(k)).total


def essr_asymptotic(config: SystemConfig) -> float:
    """Sum secrecy rate in the limit of unbounded interference tolerance.

    Depends only on the P_max-limited kernels; the number and placement of
    primary receivers and ``i_peak`` drop out entirely.
    """
    stats = derive_stats(config)
    a_s, p_max, s2 = config.a_s, config.p_max, config.sigma_eps2
    oe = stats.omega_tilde["e"]

    def k1(omega):
        return float(j1_unit(omega, p_max, s2))

    strong = 0.0
    for ell, (xi, xie) in enumerate(zip(stats.xi, stats.xi_e), start=1):
        sign = 1.0 if ell % 2 else -1.0
        strong += sign * (k1(a_s * xi) - (xie / xi) * k1(a_s * xie) - (xie / oe) * k1(a_s * xie))

    xi2, xi2e = stats.xi[1], stats.xi_e[1]
    weak = (k1(xi2) - (xi2e / xi2) * k1(xi2e) - k1(a_s * xi2) + (xi2e / xi2) * k1(a_s * xi2e)
            - (xi2e / oe) * k1(xi2e) + (xi2e / oe) * k1(a_s * xi2e))
    return LOG2E * (strong + weak)
