"""Line search for the sensing/communication partition factor beta."""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import CfpavpError
from .numerics import DEFAULT_QUAD, QuadratureSpec
from .params import SystemParameters
from .snc import PavpResult, best_theta, pavp_networkwide

__all__ = [
    "PartitionSolution",
    "evaluate_beta",
    "evaluate_curve",
    "solve_partition",
    "sensitivity_sweep",
    "median_smooth",
    "count_sign_changes",
    "single_dip",
]

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class PartitionSolution:
    beta_star: float | None
    upsilon_nw_star: float
    theta_star: float | None
    curve_beta: np.ndarray = field(repr=False)
    curve_upsilon: np.ndarray = field(repr=False)
    feasible_interval: tuple[float, float] | None
    error: str | None = None

    @property
    def curve(self):
        return list(zip(self.curve_beta.tolist(), self.curve_upsilon.tolist()))


def evaluate_beta(beta: float, p: SystemParameters, zeta: float, gamma_th: float,
                  quad: QuadratureSpec = DEFAULT_QUAD, theta: float | None = None) -> PavpResult:
    """Network-wide bound at one beta. Endpoints 0 and 1 are 1 by definition."""
    if beta <= 0.0 or beta >= 1.0:
        return PavpResult(1.0, 1.0, None, False, 0.0, 0.0, note="endpoint, not evaluated")
    q = p.replace(beta=float(beta))
    if theta is not None:
        return pavp_networkwide(theta, zeta, q, gamma_th, quad)
    return best_theta(zeta, q, gamma_th, quad)[1]


def _eval_job(args):
    beta, p, zeta, gamma_th, quad, theta = args
    return evaluate_beta(beta, p, zeta, gamma_th, quad, theta)


def evaluate_curve(betas, p: SystemParameters, zeta: float, gamma_th: float,
                   quad: QuadratureSpec = DEFAULT_QUAD, theta: float | None = None,
                   workers: int = 1) -> list[PavpResult]:
    """Evaluate the bound on a beta grid; results are in grid order for any worker count."""
    jobs = [(float(b), p, zeta, gamma_th, quad, theta) for b in betas]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            return list(ex.map(_eval_job, jobs))
    return [_eval_job(j) for j in jobs]


def solve_partition(p: SystemParameters, zeta: float, gamma_th: float, grid_points: int = 33,
                    quad: QuadratureSpec = DEFAULT_QUAD, beta_tol: float = 1e-3,
                    theta: float | None = None, workers: int = 1,
                    grid_range: tuple[float, float] = (0.02, 0.98)) -> PartitionSolution:
    """Grid search over beta, then golden-section refinement around the grid minimum.

    The returned optimum is never worse than the best grid point.
    """
    if grid_points < 9:
        raise ValueError("grid_points must be at least 9")
    inner = np.linspace(grid_range[0], grid_range[1], grid_points)
    results = evaluate_curve(inner, p, zeta, gamma_th, quad, theta, workers)
    vals = np.array([r.upsilon_nw for r in results])
    betas = np.concatenate([[0.0], inner, [1.0]])
    curve = np.concatenate([[1.0], vals, [1.0]])
    stable = np.array([r.stable for r in results])
    if not np.any(stable):
        return PartitionSolution(None, 1.0, None, betas, curve, None, error="no stable theta at any beta")
    feasible = (float(inner[stable].min()), float(inner[stable].max()))
    # the minimum must be taken over stable points; ties resolved by the smallest beta
    masked = np.where(stable, vals, np.inf)
    i = int(np.argmin(masked))
    best_b, best_r = float(inner[i]), results[i]

    lo = float(inner[max(i - 1, 0)])
    hi = float(inner[min(i + 1, grid_points - 1)])
    f = lambda b: evaluate_beta(b, p, zeta, gamma_th, quad, theta)
    cache = {}

    def g(b):
        if b not in cache:
            cache[b] = f(b)
        r = cache[b]
        return r.upsilon_nw if r.stable else math.inf

    a, c = lo, hi
    x1 = c - GOLDEN * (c - a)
    x2 = a + GOLDEN * (c - a)
    while c - a > beta_tol:
        if g(x1) <= g(x2):
            c, x2 = x2, x1
            x1 = c - GOLDEN * (c - a)
        else:
            a, x1 = x1, x2
            x2 = a + GOLDEN * (c - a)
    best_val = best_r.upsilon_nw
    for b in sorted(cache):
        if g(b) < best_val:
            best_b, best_r, best_val = b, cache[b], g(b)
    return PartitionSolution(float(best_b), best_r.upsilon_nw, best_r.theta_star, betas, curve, feasible)


def sensitivity_sweep(p: SystemParameters, vary: str, values, zeta: float, gamma_th: float,
                      quad: QuadratureSpec = DEFAULT_QUAD, grid_points: int = 33,
                      theta: float | None = None, workers: int = 1) -> list[PartitionSolution]:
    """Solve the partition problem once per value of one parameter.

    ``vary`` may be any field name, or ``zeta`` / ``gamma_th`` for the
    deadline and SINR threshold. A failing point is recorded and the sweep continues.
    """
    out = []
    for v in values:
        z, g, q = zeta, gamma_th, p
        try:
            if vary in ("zeta", "paoi_threshold"):
                z = float(v)
                q = p.replace(paoi_threshold=z)
            elif vary in ("gamma_th", "sinr_threshold"):
                g = float(v)
                q = p.replace(sinr_threshold=g)
            else:
                q = p.replace(**{vary: v})
            out.append(solve_partition(q, z, g, grid_points, quad, theta=theta, workers=workers))
        except (CfpavpError, ValueError, TypeError, ArithmeticError) as exc:
            empty = np.array([])
            out.append(PartitionSolution(None, 1.0, None, empty, empty, None, error=f"{type(exc).__name__}: {exc}"))
    return out


def median_smooth(y) -> np.ndarray:
    """3-point running median; endpoints kept."""
    y = np.asarray(y, dtype=float)
    if y.size < 3:
        return y.copy()
    out = y.copy()
    out[1:-1] = np.median(np.stack([y[:-2], y[1:-1], y[2:]]), axis=0)
    return out


def count_sign_changes(y, tol: float = 0.0) -> int:
    """Sign changes of forward differences, ignoring differences within +/- tol."""
    d = np.diff(np.asarray(y, dtype=float))
    s = np.sign(np.where(np.abs(d) <= tol, 0.0, d))
    s = s[s != 0]
    return int(np.count_nonzero(s[1:] != s[:-1]))


def single_dip(y, tol: float = 0.0) -> bool:
    """At most one sign change after smoothing, and if one, it goes down then up."""
    sm = median_smooth(y)
    d = np.diff(sm)
    s = np.sign(np.where(np.abs(d) <= tol, 0.0, d))
    s = s[s != 0]
    n = int(np.count_nonzero(s[1:] != s[:-1]))
    if n == 0:
        return True
    return n == 1 and s[0] < 0
