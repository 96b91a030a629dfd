"""Independent ground truth for the closed-form rates.

Two engines:

* :func:`mc_esr` draws channel realisations and averages the instantaneous
  secrecy rate, straight from the expectation definitions.
* :func:`quad_esr_strong`, :func:`quad_esr_weak` and :func:`quad_oma_esr`
  evaluate the same expectations as double integrals over the legitimate /
  eavesdropper gain ``x`` and the maximum primary-link gain ``y``, split at
  ``y = theta`` into the power-limited and interference-limited regions.

The quadrature densities are written from first principles (order statistics
of exponentials), not from the coefficient expansions used by the closed
forms, so agreement between the two is a meaningful check.

Monte Carlo seeding: the ``n`` samples are split into fixed-size chunks of
``MC_CHUNK`` draws; chunk ``k`` uses ``SeedSequence(seed).spawn(n_chunks)[k]``
with numpy's PCG64.  Chunk sums are reduced in index order with
``math.fsum``, so results do not depend on how chunks are scheduled.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum
import math
import warnings

import numba as nb
import numpy as np
from scipy import LowLevelCallable, integrate

from .model import SystemConfig, derive_stats

MC_CHUNK = 1 << 16
_TAIL = 40.0
# absolute floor for adaptive quadrature, far below any tolerance of interest
_ABS_FLOOR = 1e-16
_LOG2E = 1.0 / math.log(2.0)


class ConvergenceError(RuntimeError):
    """Adaptive quadrature did not reach the requested tolerance."""


class RateMode(str, Enum):
    NOMA_STRONG = "noma_strong"
    NOMA_WEAK = "noma_weak"
    OMA_STRONG = "oma_strong"
    OMA_WEAK = "oma_weak"


@dataclass(frozen=True)
class McEstimate:
    mean: float
    stderr: float
    n: int


# ---------------------------------------------------------------- Monte Carlo


def transmit_power(p_max, i_peak, g_p):
    return np.minimum(p_max, i_peak / g_p)


def instantaneous_rate(mode, g_s, g_w, g_e, power, a_s, sigma_eps2, oma_estimation_noise=True):
    """Per-realisation secrecy rate (bits/s/Hz) for one of the four modes."""
    mode = RateMode(mode)
    s2 = sigma_eps2
    lg = lambda v: np.log1p(v) * _LOG2E
    if mode is RateMode.NOMA_STRONG:
        legit = lg((s2 + a_s * g_s) * power)
        eve = lg((s2 + a_s * g_e) * power)
    elif mode is RateMode.NOMA_WEAK:
        legit = lg((g_w + s2) * power) - lg((a_s * g_w + s2) * power)
        eve = lg((g_e + s2) * power) - lg((a_s * g_e + s2) * power)
    else:
        g_k = g_s if mode is RateMode.OMA_STRONG else g_w
        shift = s2 if oma_estimation_noise else 0.0
        legit = lg((g_k + shift) * power)
        eve = lg((g_e + shift) * power)
        return 0.5 * np.maximum(legit - eve, 0.0)
    return np.maximum(legit - eve, 0.0)


def _draw(rng, scale, size):
    # inverse CDF with U in (0, 1]
    return -scale * np.log1p(-rng.random(size))


def sample_channels(config: SystemConfig, rng, size):
    """One chunk of estimated gains: dict with g_s, g_w, g_e, g_p and power."""
    stats = derive_stats(config)
    ot = stats.omega_tilde
    g_pr = np.stack([_draw(rng, w, size) for w in stats.omega_tilde_pr])
    g_n = _draw(rng, ot["n"], size)
    g_f = _draw(rng, ot["f"], size)
    g_e = _draw(rng, ot["e"], size)
    g_p = g_pr.max(axis=0)
    g_s = np.maximum(g_n, g_f)
    g_w = np.minimum(g_n, g_f)
    assert np.all(g_s >= g_w)
    return {
        "g_s": g_s,
        "g_w": g_w,
        "g_e": g_e,
        "g_p": g_p,
        "power": transmit_power(config.p_max, config.i_peak, g_p),
    }


def _chunk_sums(config, mode, seed_seq, size, oma_estimation_noise):
    rng = np.random.Generator(np.random.PCG64(seed_seq))
    ch = sample_channels(config, rng, size)
    r = instantaneous_rate(mode, ch["g_s"], ch["g_w"], ch["g_e"], ch["power"],
                           config.a_s, config.sigma_eps2, oma_estimation_noise)
    return float(np.sum(r)), float(np.sum(r * r))


def mc_esr(config: SystemConfig, mode, n=1_000_000, seed=0, workers=1,
           oma_estimation_noise=True) -> McEstimate:
    """Monte Carlo ergodic secrecy rate for ``mode``.

    Bit-identical for fixed ``(config, mode, n, seed)`` for any ``workers``.
    """
    if n < 10_000:
        raise ValueError("Monte Carlo needs n >= 1e4 samples")
    mode = RateMode(mode)
    n_chunks = -(-n // MC_CHUNK)
    sizes = [MC_CHUNK] * (n_chunks - 1) + [n - MC_CHUNK * (n_chunks - 1)]
    seeds = np.random.SeedSequence(seed).spawn(n_chunks)
    job = lambda k: _chunk_sums(config, mode, seeds[k], sizes[k], oma_estimation_noise)
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            parts = list(pool.map(job, range(n_chunks)))
    else:
        parts = [job(k) for k in range(n_chunks)]
    s1 = math.fsum(p[0] for p in parts)
    s2 = math.fsum(p[1] for p in parts)
    mean = s1 / n
    var = max(s2 / n - mean * mean, 0.0) * n / (n - 1)
    return McEstimate(mean, math.sqrt(var / n), n)


# ----------------------------------------------------------------- Quadrature
#
# A "gain law" describes a shifted, scaled gain X = shift + scale * G where G
# is exponential, or the max/min of two independent exponentials.  Densities
# are compiled so QUADPACK calls them without Python overhead.


@dataclass(frozen=True)
class _Law:
    kind: str          # "exp", "max2", "min2"
    rates: tuple       # exponential rates of the underlying unscaled gains
    shift: float
    scale: float

    @property
    def slow(self):
        """Largest decay length of the density, in x units."""
        if self.kind == "max2":
            return self.scale / min(self.rates)
        return self.scale / sum(self.rates)

    @property
    def fast(self):
        if self.kind == "max2":
            return self.scale / max(self.rates)
        return self.slow


@nb.njit(cache=True)
def _max_gain_pdf(y, scales):
    # d/dy prod_m (1 - exp(-y/w_m))
    total = 0.0
    for m in range(scales.shape[0]):
        term = math.exp(-y / scales[m]) / scales[m]
        for j in range(scales.shape[0]):
            if j != m:
                term *= -math.expm1(-y / scales[j])
        total += term
    return total


def _quad(f, lo, hi, rel_tol, points=None, args=()):
    pts = None
    if points:
        pts = sorted(p for p in set(points) if lo < p < hi)
    with warnings.catch_warnings():
        # QUADPACK flags roundoff even when the estimate meets the absolute
        # floor (tiny integrands); judge by the returned error instead
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        out = integrate.quad(f, lo, hi, args=args, epsabs=_ABS_FLOOR, epsrel=rel_tol,
                             limit=400, points=pts or None, full_output=1)
    val, err = out[0], out[1]
    if len(out) > 3 and err > 10 * max(_ABS_FLOOR, rel_tol * abs(val)):
        raise ConvergenceError(f"quadrature on [{lo:.3e}, {hi:.3e}]: {out[3].strip()}")
    return val


def _breaks(lo, lengths):
    pts = []
    for ell in lengths:
        pts.extend(lo + k * ell for k in (0.1, 1.0, 5.0))
    return pts


_KIND = {"exp": 0.0, "min2": 0.0, "max2": 1.0}


@nb.njit(cache=True)
def _law_pdf(x, kind, ra, rb, shift, scale):
    t = (x - shift) / scale
    if t < 0.0:
        return 0.0
    if kind == 0.0:
        lam = ra + rb
        return lam * math.exp(-lam * t) / scale
    ea = math.exp(-ra * t)
    eb = math.exp(-rb * t)
    return (ra * ea * (1.0 - eb) + rb * eb * (1.0 - ea)) / scale


@nb.njit(cache=True)
def _law_cdf(x, kind, ra, rb, shift, scale):
    t = (x - shift) / scale
    if t <= 0.0:
        return 0.0
    if kind == 0.0:
        return -math.expm1(-(ra + rb) * t)
    return math.expm1(-ra * t) * math.expm1(-rb * t)


@nb.cfunc(nb.types.double(nb.types.intc, nb.types.CPointer(nb.types.double)), cache=True)
def _inner_integrand(n, xx):
    # xx: x, power, eve_part, law L (kind, ra, rb, shift, scale), law E (same)
    x, power, eve_part = xx[0], xx[1], xx[2]
    rate = math.log1p(power * x) * _LOG2E
    if eve_part == 0.0:
        return rate * _law_pdf(x, xx[3], xx[4], xx[5], xx[6], xx[7]) * \
            _law_cdf(x, xx[8], xx[9], xx[10], xx[11], xx[12])
    return rate * _law_pdf(x, xx[8], xx[9], xx[10], xx[11], xx[12]) * \
        (1.0 - _law_cdf(x, xx[3], xx[4], xx[5], xx[6], xx[7]))


_INNER = LowLevelCallable(_inner_integrand.ctypes)


def _law_args(law):
    ra = law.rates[0]
    rb = law.rates[1] if len(law.rates) > 1 else 0.0
    return (_KIND[law.kind], ra, rb, law.shift, law.scale)


class _Pair:
    """Secrecy-rate integrals for legit gain law L against eavesdropper law E.

    ``legit(P) = int log2(1 + P x) f_L(x) Pr(E < x) dx`` and
    ``eve(P) = int log2(1 + P x) f_E(x) Pr(L > x) dx``.
    """

    def __init__(self, law_l: _Law, law_e: _Law):
        self.l, self.e = law_l, law_e
        self.lo = law_l.shift
        self.hi_l = self.lo + _TAIL * law_l.slow
        eve_slow = 1.0 / (1.0 / law_e.slow + 1.0 / law_l.slow)
        self.hi_e = self.lo + _TAIL * eve_slow
        self.pts_l = _breaks(self.lo, (law_l.fast, law_l.slow, law_e.slow))
        self.pts_e = _breaks(self.lo, (law_e.slow, eve_slow))
        self.args = _law_args(law_l) + _law_args(law_e)

    def legit(self, power, rel_tol):
        return _quad(_INNER, self.lo, self.hi_l, rel_tol,
                     self.pts_l + [self.lo + 1.0 / power], (power, 0.0) + self.args)

    def eve(self, power, rel_tol):
        return _quad(_INNER, self.lo, self.hi_e, rel_tol,
                     self.pts_e + [self.lo + 1.0 / power], (power, 1.0) + self.args)


def _laws(config: SystemConfig):
    st = derive_stats(config)
    ot = st.omega_tilde
    lam_n, lam_f, lam_e = 1.0 / ot["n"], 1.0 / ot["f"], 1.0 / ot["e"]
    s2, a_s = config.sigma_eps2, config.a_s
    return st, {
        "s_hat": _Law("max2", (lam_n, lam_f), s2, a_s),
        "w_hat": _Law("min2", (lam_n, lam_f), s2, a_s),
        "w_check": _Law("min2", (lam_n, lam_f), s2, 1.0),
        "e_hat": _Law("exp", (lam_e,), s2, a_s),
        "e_check": _Law("exp", (lam_e,), s2, 1.0),
    }


def _four_terms(config, pairs, rel_tol):
    """Region-split terms for a signed list of (weight, _Pair).

    Returns (I1, I2, I3, I4): legit and eavesdropper parts for y <= theta
    (P = P_max) and y > theta (P = I_p / y).
    """
    st = derive_stats(config)
    scales = st.omega_tilde_pr
    theta = st.theta
    p_max, i_peak = config.p_max, config.i_peak
    inner_tol = rel_tol * 1e-2

    scale_arr = np.array(scales)
    pdf_y = lambda y: _max_gain_pdf(y, scale_arr)
    y_pts = _breaks(0.0, scales)
    # probability mass of the power-limited region
    mass = _quad(pdf_y, 0.0, min(theta, _TAIL * max(scales) * len(scales)), inner_tol,
                 y_pts + [theta])
    mass = min(mass, 1.0)

    i1 = sum(w * p.legit(p_max, inner_tol) for w, p in pairs) * mass
    i3 = sum(w * p.eve(p_max, inner_tol) for w, p in pairs) * mass

    y_hi = theta + _TAIL * max(scales)
    def outer(y):
        power = i_peak / y
        dens = pdf_y(y)
        if dens == 0.0:
            return np.zeros(2)
        legit = sum(w * p.legit(power, inner_tol) for w, p in pairs)
        eve = sum(w * p.eve(power, inner_tol) for w, p in pairs)
        return dens * np.array([legit, eve])

    pts = sorted(p for p in set(y_pts + [theta + s for s in scales]) if theta < p < y_hi)
    edges = [theta] + pts + [y_hi]
    i2 = i4 = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        res = integrate.quad_vec(outer, a, b, epsabs=_ABS_FLOOR, epsrel=rel_tol, limit=400)
        val, info = res[0], res[1]
        if info > max(rel_tol * np.max(np.abs(val)), _ABS_FLOOR) * 10:
            raise ConvergenceError(f"outer quadrature error {info:.3e} on [{a:.3e}, {b:.3e}]")
        i2 += val[0]
        i4 += val[1]
    return i1, i2, i3, i4


def _check_tol(rel_tol):
    if not 1e-10 <= rel_tol <= 1e-4:
        raise ValueError("rel_tol must lie in [1e-10, 1e-4]")


def quad_esr_strong_terms(config: SystemConfig, rel_tol=1e-8):
    _check_tol(rel_tol)
    _, laws = _laws(config)
    return _four_terms(config, [(1.0, _Pair(laws["s_hat"], laws["e_hat"]))], rel_tol)


def quad_esr_weak_terms(config: SystemConfig, rel_tol=1e-8):
    _check_tol(rel_tol)
    _, laws = _laws(config)
    pairs = [(1.0, _Pair(laws["w_check"], laws["e_check"])),
             (-1.0, _Pair(laws["w_hat"], laws["e_hat"]))]
    return _four_terms(config, pairs, rel_tol)


def quad_esr_strong(config: SystemConfig, rel_tol=1e-8) -> float:
    """Strong-user ESR by nested adaptive quadrature."""
    i1, i2, i3, i4 = quad_esr_strong_terms(config, rel_tol)
    return i1 + i2 - i3 - i4


def quad_esr_weak(config: SystemConfig, rel_tol=1e-8) -> float:
    """Weak-user ESR by nested adaptive quadrature over the eight integrals."""
    i1, i2, i3, i4 = quad_esr_weak_terms(config, rel_tol)
    return i1 + i2 - i3 - i4


def quad_oma_esr(config: SystemConfig, user="strong", rel_tol=1e-8,
                 oma_estimation_noise=True) -> float:
    """OMA ergodic secrecy rate of one user (half-slot factor included).

    With ``oma_estimation_noise`` (the default) the OMA link sees the same
    estimation-error self-interference as NOMA, i.e. gains ``g + sigma_eps2``.
    Pass ``False`` for the noiseless form ``log2((1 + g_k P) / (1 + g_e P))``.
    """
    _check_tol(rel_tol)
    st = derive_stats(config)
    ot = st.omega_tilde
    shift = config.sigma_eps2 if oma_estimation_noise else 0.0
    rates = (1.0 / ot["n"], 1.0 / ot["f"])
    kind = {"strong": "max2", "weak": "min2"}[user]
    pair = _Pair(_Law(kind, rates, shift, 1.0), _Law("exp", (1.0 / ot["e"],), shift, 1.0))
    i1, i2, i3, i4 = _four_terms(config, [(1.0, pair)], rel_tol)
    return 0.5 * (i1 + i2 - i3 - i4)
