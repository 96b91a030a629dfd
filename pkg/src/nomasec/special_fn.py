"""Exponential-integral kernels.

Every closed-form rate expression in this package is a combination of
``exp(u) * E1(u)`` products.  For realistic link budgets ``u`` can be far
outside the range where ``exp(u)`` is representable, so the workhorse here is
:func:`e1_scaled`, which returns ``exp(x) * E1(x)`` without ever forming
``exp(x)``.

Algorithm: power series for ``x < 1``, modified Lentz continued fraction for
``x >= 1``.  All functions accept scalars or numpy arrays.
"""

import math

import numba as nb
import numpy as np

EULER_GAMMA = 0.57721566490153286060651209008240243

_SPLIT = 1.0
_EPS = 1e-16
_CF_TOL = 1e-15
_TINY = 1e-300
_MAX_CF_ITER = 500
_MAX_SERIES_TERMS = 60


def _as_positive(x):
    arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(arr)) or np.any(arr <= 0.0):
        raise ValueError(f"argument must be finite and > 0, got {x!r}")
    return arr


def _series_sum(x):
    # sum_{k>=1} (-1)^{k+1} x^k / (k k!)
    total = np.zeros_like(x)
    term = np.ones_like(x)
    for k in range(1, _MAX_SERIES_TERMS + 1):
        term = term * (-x) / k
        contrib = -term / k
        total = total + contrib
        if np.all(np.abs(contrib) <= _EPS * np.abs(total)):
            break
    return total


def _e1_small(x):
    return -EULER_GAMMA - np.log(x) + _series_sum(x)


@nb.njit(cache=True)
def _cf_scaled_1(x):
    b = x + 1.0
    c = 1.0 / _TINY
    d = 1.0 / b
    h = d
    for i in range(1, _MAX_CF_ITER + 1):
        an = -float(i * i)
        b += 2.0
        d = an * d + b
        if abs(d) < _TINY:
            d = _TINY
        d = 1.0 / d
        c = b + an / c
        if abs(c) < _TINY:
            c = _TINY
        delta = c * d
        h *= delta
        if abs(delta - 1.0) < _CF_TOL:
            return h
    return math.nan


@nb.njit(cache=True)
def _cf_scaled_many(x):
    out = np.empty_like(x)
    for k in range(x.shape[0]):
        out[k] = _cf_scaled_1(x[k])
    return out


def _cf_scaled(x):
    """exp(x) E1(x) by the continued fraction 1/(x+1- 1/(x+3- 4/(x+5- ...)))."""
    h = _cf_scaled_many(np.ascontiguousarray(x, dtype=float))
    if np.any(np.isnan(h)):
        raise RuntimeError("E1 continued fraction failed to converge")
    return h


def _unwrap(arr, x):
    if np.ndim(x) == 0:
        return float(arr)
    return arr


def e1_scaled(x):
    """Return ``exp(x) * E1(x)`` for ``x > 0`` without overflow."""
    arr = _as_positive(x)
    flat = np.atleast_1d(arr).ravel()
    out = np.empty_like(flat)
    small = flat < _SPLIT
    if np.any(small):
        xs = flat[small]
        out[small] = np.exp(xs) * _e1_small(xs)
    if np.any(~small):
        out[~small] = _cf_scaled(flat[~small])
    return _unwrap(out.reshape(np.shape(arr)), x)


def e1(x):
    """Exponential integral ``E1(x) = int_x^inf exp(-t)/t dt`` for ``x > 0``."""
    arr = _as_positive(x)
    flat = np.atleast_1d(arr).ravel()
    out = np.empty_like(flat)
    small = flat < _SPLIT
    if np.any(small):
        out[small] = _e1_small(flat[small])
    if np.any(~small):
        xl = flat[~small]
        out[~small] = np.exp(-xl) * _cf_scaled(xl)
    return _unwrap(out.reshape(np.shape(arr)), x)


def ei_neg(x):
    """``Ei(-x)`` for ``x > 0``; identical to ``-E1(x)``.

    Only negative-argument Ei is ever needed by the rate expressions.
    """
    return -e1(x)
