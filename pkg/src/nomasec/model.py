"""Scenario parameters, derived channel statistics and distribution expansions.

All quantities are linear and noise-normalised (unit AWGN power).  Gains on
every link are exponential (Rayleigh fading) with mean ``d**-alpha``; the
estimated gains have mean ``Omega - sigma_eps2``.
"""

from dataclasses import dataclass, field
from itertools import product
import math

import numpy as np

MAX_PRS = 20


class ModelError(ValueError):
    """A scenario violates the model's validity conditions."""

    def __init__(self, message, field_name=None):
        super().__init__(message)
        self.field_name = field_name


@dataclass(frozen=True)
class SystemConfig:
    """All scenario inputs for the two-user underlay NOMA downlink.

    ``d_pr`` holds the distances of the primary receivers; ``m_prs`` is
    implied by its length.  ``a_w`` is never stored, it is always
    ``1 - a_s``.
    """

    d_pr: tuple
    d_near: float
    d_far: float
    d_eve: float
    alpha: float
    sigma_eps2: float
    p_max: float
    i_peak: float
    a_s: float = 0.2

    def __post_init__(self):
        object.__setattr__(self, "d_pr", tuple(float(d) for d in self.d_pr))
        if len(self.d_pr) < 1:
            raise ModelError("at least one primary receiver is required", "d_pr")
        if len(self.d_pr) > MAX_PRS:
            raise ModelError(f"at most {MAX_PRS} primary receivers are supported", "d_pr")
        for name, d in self.links().items():
            if not (math.isfinite(d) and d > 0):
                raise ModelError(f"distance for link {name!r} must be > 0, got {d}", _field_of(name))
        _check(self.alpha > 0, "alpha must be > 0", "alpha")
        _check(self.sigma_eps2 >= 0 and math.isfinite(self.sigma_eps2),
               "sigma_eps2 must be >= 0", "sigma_eps2")
        _check(self.p_max > 0 and math.isfinite(self.p_max), "p_max must be > 0", "p_max")
        _check(self.i_peak > 0 and math.isfinite(self.i_peak), "i_peak must be > 0", "i_peak")
        _check(0 < self.a_s < 0.5, "a_s must lie in (0, 0.5)", "a_s")
        for name, d in self.links().items():
            omega = d ** -self.alpha
            if omega <= self.sigma_eps2:
                raise ModelError(
                    f"link {name!r}: mean gain d**-alpha = {omega:.6g} does not exceed "
                    f"sigma_eps2 = {self.sigma_eps2:.6g}",
                    _field_of(name),
                )

    @property
    def m_prs(self):
        return len(self.d_pr)

    @property
    def a_w(self):
        return 1.0 - self.a_s

    def links(self):
        """Map of link name to distance, primary receivers named ``pr1..prM``."""
        out = {"n": self.d_near, "f": self.d_far, "e": self.d_eve}
        for m, d in enumerate(self.d_pr, start=1):
            out[f"pr{m}"] = d
        return out


def _field_of(link):
    return {"n": "d_near", "f": "d_far", "e": "d_eve"}.get(link, "d_pr")


def _check(cond, message, name):
    if not cond:
        raise ModelError(message, name)


@dataclass(frozen=True)
class ChannelStats:
    omega: dict
    omega_tilde: dict
    xi: tuple
    xi_e: tuple
    theta: float

    @property
    def omega_tilde_pr(self):
        m = sum(1 for k in self.omega_tilde if k.startswith("pr"))
        return tuple(self.omega_tilde[f"pr{i}"] for i in range(1, m + 1))


def derive_stats(config: SystemConfig) -> ChannelStats:
    omega = {name: d ** -config.alpha for name, d in config.links().items()}
    omega_tilde = {}
    for name, om in omega.items():
        ot = om - config.sigma_eps2
        if ot <= 0:
            raise ModelError(f"link {name!r}: Omega <= sigma_eps2", _field_of(name))
        omega_tilde[name] = ot
    on, of, oe = omega_tilde["n"], omega_tilde["f"], omega_tilde["e"]
    xi = (on, 1.0 / (1.0 / on + 1.0 / of), of)
    xi_e = tuple(1.0 / (1.0 / x + 1.0 / oe) for x in xi)
    return ChannelStats(omega, omega_tilde, xi, xi_e, config.i_peak / config.p_max)


@dataclass(frozen=True)
class PhiExpansion:
    """Signed exponential expansion of the maximum of M independent exponentials.

    ``f(x) = -sum kappa * b * exp(-b x)`` with one term per nonzero binary
    vector of length M.
    """

    kappa: np.ndarray
    b: np.ndarray

    @property
    def terms(self):
        return list(zip(self.kappa.tolist(), self.b.tolist()))

    def __len__(self):
        return len(self.b)

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        return -np.sum(self.kappa * self.b * np.exp(-np.multiply.outer(x, self.b)), axis=-1)

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        return np.sum(self.kappa * np.expm1(-np.multiply.outer(x, self.b)), axis=-1)


def phi_expansion(omega_tilde_pr) -> PhiExpansion:
    scales = [float(w) for w in omega_tilde_pr]
    m = len(scales)
    if m < 1:
        raise ModelError("need at least one primary receiver", "d_pr")
    if m > MAX_PRS:
        raise ModelError(f"{2 ** m - 1} expansion terms exceeds the M <= {MAX_PRS} budget", "d_pr")
    if any(not (w > 0) for w in scales):
        raise ModelError("primary-link scales must be > 0", "d_pr")
    rates = np.array([1.0 / w for w in scales])
    etas = np.array([eta for eta in product((0, 1), repeat=m) if any(eta)], dtype=float)
    kappa = np.where(etas.sum(axis=1) % 2 == 0, 1.0, -1.0)
    return PhiExpansion(kappa, etas @ rates)


def max_gain_cdf(omega_tilde_pr, x):
    """Product-form CDF of the maximum primary-link gain."""
    x = np.asarray(x, dtype=float)
    out = np.ones_like(x)
    for w in omega_tilde_pr:
        out = out * -np.expm1(-x / w)
    return out


@dataclass(frozen=True)
class CoefficientSet:
    a_hat: tuple
    a_hat_cal: tuple
    a_check: float
    a_check_cal: float
    c_hat_e: float
    c_hat_scr_e: float
    c_check_e: float
    c_check_scr_e: float
    a_s: float = field(default=0.0, repr=False)
    sigma_eps2: float = field(default=0.0, repr=False)
    xi: tuple = field(default=(), repr=False)
    omega_tilde_e: float = field(default=0.0, repr=False)

    # analytic forms of the shifted gains; x is on [sigma_eps2, inf)

    def strong_pdf(self, x):
        return sum(a * np.exp(-x / (self.a_s * xi)) for a, xi in zip(self.a_hat, self.xi))

    def strong_ccdf(self, x):
        return sum(a * np.exp(-x / (self.a_s * xi)) for a, xi in zip(self.a_hat_cal, self.xi))

    def weak_check_ccdf(self, x):
        return self.a_check_cal * np.exp(-x / self.xi[1])

    def weak_hat_ccdf(self, x):
        return -self.a_hat_cal[1] * np.exp(-x / (self.a_s * self.xi[1]))


def coefficient_set(stats: ChannelStats, a_s: float, sigma_eps2: float) -> CoefficientSet:
    if not 0 < a_s < 0.5:
        raise ModelError("a_s must lie in (0, 0.5)", "a_s")
    s2 = sigma_eps2
    a_hat = tuple((-1) ** (ell + 1) / (a_s * xi) * math.exp(s2 / (a_s * xi))
                  for ell, xi in enumerate(stats.xi, start=1))
    a_hat_cal = tuple(a_s * xi * a for xi, a in zip(stats.xi, a_hat))
    xi2 = stats.xi[1]
    a_check = math.exp(s2 / xi2) / xi2
    oe = stats.omega_tilde["e"]
    c_hat_e = math.exp(s2 / (a_s * oe)) / (a_s * oe)
    c_check_e = math.exp(s2 / oe) / oe
    return CoefficientSet(
        a_hat=a_hat,
        a_hat_cal=a_hat_cal,
        a_check=a_check,
        a_check_cal=xi2 * a_check,
        c_hat_e=c_hat_e,
        c_hat_scr_e=a_s * oe * c_hat_e,
        c_check_e=c_check_e,
        c_check_scr_e=oe * c_check_e,
        a_s=a_s,
        sigma_eps2=s2,
        xi=stats.xi,
        omega_tilde_e=oe,
    )
