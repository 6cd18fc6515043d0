"""MGF-based bound on the peak-AoI violation probability.

The conditional bound for a covered user is

    U(theta) = exp(-theta zeta) M_A(theta) / (1/M_S(theta) - M_A(-theta)),

valid when M_A(-theta) M_S(theta) < 1. The network-wide bound weights it by
communication coverage: U_nw = 1 - P_c (1 - min(U, 1)).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize

from .comm import comm_coverage, service_mgf, service_mgf_values
from .errors import BoundUndefinedError, NoArrivalsError
from .numerics import DEFAULT_QUAD, QuadratureSpec
from .params import SystemParameters
from .sensing import SensingCoverage, arrival_mgf, arrival_mgf_values, sensing_coverage

__all__ = [
    "PavpResult",
    "stability",
    "upsilon_raw",
    "pavp_conditional",
    "pavp_networkwide",
    "best_theta",
    "THETA_RANGE",
]

THETA_RANGE = (1e-2, 1e6)


@dataclass(frozen=True)
class PavpResult:
    upsilon: float
    upsilon_nw: float
    theta_star: float | None
    stable: bool
    p_cov_c: float
    p_cov_s: float
    clamped: bool = False
    upsilon_unclamped: float = math.inf
    note: str = ""


def _ps(cov_s) -> float:
    return float(cov_s.p_cov_s if isinstance(cov_s, SensingCoverage) else cov_s)


def stability(theta: float, p: SystemParameters, cov_s, gamma_th: float,
              quad: QuadratureSpec = DEFAULT_QUAD) -> bool:
    """True iff M_A(-theta) M_S(theta) < 1 with a finite service MGF."""
    if theta <= 0:
        raise ValueError("theta must be positive")
    ms = service_mgf(theta, gamma_th, p, quad)
    if not ms.finite:
        return False
    ma_neg = arrival_mgf(-theta, p, cov_s).value
    return ma_neg * ms.value < 1.0


def upsilon_raw(theta: float, zeta: float, p: SystemParameters, cov_s, gamma_th: float,
                quad: QuadratureSpec = DEFAULT_QUAD) -> float:
    """Unclamped conditional bound; inf where undefined."""
    ps = _ps(cov_s)
    ma = arrival_mgf(theta, p, ps)
    if not ma.finite:
        return math.inf
    ms = service_mgf(theta, gamma_th, p, quad)
    if not ms.finite:
        return math.inf
    den = 1.0 / ms.value - arrival_mgf(-theta, p, ps).value
    if den <= 0:
        return math.inf
    return math.exp(-theta * zeta) * ma.value / den


def _upsilon_many(thetas, zeta, p, ps, gamma_th, quad):
    ma = arrival_mgf_values(thetas, ps, p.scan_interval)
    ma_neg = arrival_mgf_values(-thetas, ps, p.scan_interval)
    ms = service_mgf_values(thetas, gamma_th, p, quad)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        den = 1.0 / ms - ma_neg
        u = np.exp(-thetas * zeta) * ma / den
    return np.where(np.isfinite(ma) & np.isfinite(ms) & (den > 0), u, np.inf)


def pavp_conditional(theta: float, zeta: float, p: SystemParameters, cov_s, gamma_th: float,
                     quad: QuadratureSpec = DEFAULT_QUAD) -> float:
    """Conditional bound clamped to [0, 1]; raises when undefined at theta."""
    u = upsilon_raw(theta, zeta, p, cov_s, gamma_th, quad)
    if not math.isfinite(u):
        raise BoundUndefinedError(f"bound undefined at theta={theta!r} (unstable queue or infinite MGF)")
    return min(max(u, 0.0), 1.0)


def _degenerate(p, gamma_th, quad):
    """Result for an empty tier, or None when both tiers are present."""
    if p.lambda_c <= 0:
        ps = sensing_coverage(p, quad).p_cov_s if p.lambda_s > 0 else 0.0
        return PavpResult(1.0, 1.0, None, False, 0.0, ps, note="no communication tier")
    return None


def _compose(u_raw, theta, pc, ps, stable, note=""):
    u_raw, pc, ps = float(u_raw), float(pc), float(ps)
    u = min(max(u_raw, 0.0), 1.0) if math.isfinite(u_raw) else 1.0
    return PavpResult(u, 1.0 - pc * (1.0 - u), theta, stable, pc, ps,
                      clamped=not (0.0 <= u_raw <= 1.0), upsilon_unclamped=u_raw, note=note)


def pavp_networkwide(theta: float, zeta: float, p: SystemParameters, gamma_th: float,
                     quad: QuadratureSpec = DEFAULT_QUAD, cov_s=None) -> PavpResult:
    """Network-wide bound at a fixed theta."""
    deg = _degenerate(p, gamma_th, quad)
    if deg is not None:
        return deg
    ps = _ps(cov_s) if cov_s is not None else sensing_coverage(p, quad).p_cov_s
    pc = comm_coverage(gamma_th, p).p_cov_c
    if ps <= 0:
        return PavpResult(1.0, 1.0, None, False, pc, ps, note="no arrivals")
    if pc <= 0:
        return PavpResult(1.0, 1.0, None, False, pc, ps, note="zero communication coverage")
    u = upsilon_raw(theta, zeta, p, ps, gamma_th, quad)
    stable = math.isfinite(u)
    return _compose(u, theta if stable else None, pc, ps, stable, "" if stable else "unstable at theta")


def best_theta(zeta: float, p: SystemParameters, gamma_th: float, quad: QuadratureSpec = DEFAULT_QUAD,
               cov_s=None, bracket=THETA_RANGE, scan_points: int = 161):
    """Minimize the network-wide bound over theta.

    A log-spaced scan brackets the stable region, then golden-section search in
    log(theta) refines the scan minimum. Minimizing the unclamped log bound is
    equivalent to minimizing U_nw because P_c does not depend on theta.
    Returns (theta_star, PavpResult); theta_star is None when nothing is stable.
    """
    deg = _degenerate(p, gamma_th, quad)
    if deg is not None:
        return None, deg
    ps = _ps(cov_s) if cov_s is not None else sensing_coverage(p, quad).p_cov_s
    pc = comm_coverage(gamma_th, p).p_cov_c
    if ps <= 0:
        return None, PavpResult(1.0, 1.0, None, False, pc, ps, note="no arrivals")
    if pc <= 0:
        return None, PavpResult(1.0, 1.0, None, False, pc, ps, note="zero communication coverage")
    lo, hi = math.log(bracket[0]), math.log(bracket[1])
    grid = np.linspace(lo, hi, scan_points)
    vals = _upsilon_many(np.exp(grid), zeta, p, ps, gamma_th, quad)
    if not np.any(np.isfinite(vals)):
        return None, PavpResult(1.0, 1.0, None, False, pc, ps, note="no stable theta")
    i = int(np.argmin(vals))
    best_x, best_u = grid[i], float(vals[i])

    def obj(x):
        u = upsilon_raw(math.exp(x), zeta, p, ps, gamma_th, quad)
        return math.log(u) if u > 0 and math.isfinite(u) else math.inf

    a = grid[max(i - 1, 0)]
    c = grid[min(i + 1, scan_points - 1)]
    if a < best_x < c:
        # the scan minimum is an interior point, so (a, best_x, c) is a valid bracket
        fa, fc = obj(a), obj(c)
        fb = obj(best_x)
        if fb < fa and fb < fc:
            res = optimize.minimize_scalar(obj, bracket=(a, best_x, c), method="golden",
                                           options={"xtol": 1e-10})
            if res.fun < math.log(best_u):
                best_x, best_u = float(res.x), math.exp(float(res.fun))
    theta = math.exp(best_x)
    # recompute with the scalar routine so the reported value is reproducible
    u = upsilon_raw(theta, zeta, p, ps, gamma_th, quad)
    return theta, _compose(u, theta, pc, ps, True)
