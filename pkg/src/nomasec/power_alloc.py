"""Strong-user rate matching: pick ``a_s`` so NOMA and OMA strong-user ESRs agree."""

from dataclasses import dataclass, replace
from enum import Enum

import numpy as np

from .closed_form import esr_strong
from .model import SystemConfig
from .oracles import quad_oma_esr

BRACKET = (1e-6, 0.5 - 1e-6)
_PRESCAN_POINTS = 9


class BracketStatus(str, Enum):
    CONVERGED = "converged"
    CLAMPED_LOW = "clamped_low"
    CLAMPED_HIGH = "clamped_high"


class AllocationError(RuntimeError):
    pass


@dataclass(frozen=True)
class AllocationResult:
    a_s: float
    achieved_gap: float
    iterations: int
    bracket_status: BracketStatus
    target: float

    @property
    def a_w(self):
        return 1.0 - self.a_s


def match_strong_user(config: SystemConfig, tol=1e-6, max_iter=100, rel_tol=1e-9,
                      oma_estimation_noise=True) -> AllocationResult:
    """Bisection on ``esr_strong(a_s) - R_s,OMA`` over ``BRACKET``.

    The OMA target is computed once by quadrature so the root-finding is
    deterministic.  ``config.a_s`` is ignored.  If the gap has no sign change
    the nearer bracket end is returned with the residual as ``achieved_gap``.
    """
    if tol < 1e-8:
        raise ValueError("tol must be >= 1e-8 bits/s/Hz")
    target = float(quad_oma_esr(config, "strong", rel_tol=rel_tol,
                                oma_estimation_noise=oma_estimation_noise))

    def gap(a_s):
        return esr_strong(replace(config, a_s=a_s)).total - target

    lo, hi = BRACKET
    grid = np.linspace(lo, hi, _PRESCAN_POINTS).tolist()
    scan = [gap(a) for a in grid]
    if any(b < a - tol for a, b in zip(scan[:-1], scan[1:])):
        raise AllocationError(
            f"strong-user ESR is not monotone in a_s on the bracket: {np.round(scan, 6)}")

    g_lo, g_hi = scan[0], scan[-1]
    if g_lo >= 0:
        return AllocationResult(lo, float(abs(g_lo)), 0, BracketStatus.CLAMPED_LOW, target)
    if g_hi <= 0:
        return AllocationResult(hi, float(abs(g_hi)), 0, BracketStatus.CLAMPED_HIGH, target)

    # tighten the starting bracket with the pre-scan
    k = int(np.argmax(np.asarray(scan) > 0))
    lo, hi = grid[k - 1], grid[k]
    mid, g_mid = lo, scan[k - 1]
    for it in range(1, max_iter + 1):
        mid = 0.5 * (lo + hi)
        g_mid = gap(mid)
        if abs(g_mid) <= tol:
            return AllocationResult(float(mid), float(abs(g_mid)), it, BracketStatus.CONVERGED, target)
        if g_mid < 0:
            lo = mid
        else:
            hi = mid
    raise AllocationError(f"bisection did not reach tol={tol} in {max_iter} iterations "
                          f"(gap {g_mid:.3e} at a_s={mid:.9f})")
