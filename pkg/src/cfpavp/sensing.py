"""Analytical sensing tier: single-AP detection, network coverage, arrival MGF."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import NoArrivalsError
from .numerics import DEFAULT_QUAD, QuadratureSpec, hyp2f1_interference, integrate
from .params import SystemParameters

__all__ = [
    "MgfEvaluation",
    "SensingCoverage",
    "rho_factor",
    "detection_exponent",
    "single_ap_detection",
    "sensing_coverage",
    "arrival_mgf",
    "arrival_mgf_values",
]

NEAR_POLE = 0.999


@dataclass(frozen=True)
class MgfEvaluation:
    """MGF value at theta. ``value`` is inf when the defining series diverges."""

    theta: float
    value: float
    finite: bool
    near_pole: bool = False
    note: str = ""


@dataclass(frozen=True)
class SensingCoverage:
    p_cov_s: float
    radial_integral: float
    r: np.ndarray = field(repr=False)
    p_sg: np.ndarray = field(repr=False)


def rho_factor(r, p: SystemParameters):
    """Range-dependent SINR scaling delta (4 pi)^3 r^(2 alpha) / (g_t g_r N^2 lambda_w^2 sigma)."""
    r = np.asarray(r, dtype=float)
    c = p.detect_threshold * (4.0 * math.pi) ** 3 / (
        p.gain_tx * p.gain_rx * p.n_antennas ** 2 * p.wavelength ** 2 * p.rcs_mean
    )
    return (c * r ** (2.0 * p.alpha))[()]


def detection_exponent(r, p: SystemParameters):
    """log P_sg(r): noise part plus the sector interference Laplace exponent (always <= 0)."""
    rho = np.asarray(rho_factor(r, p), dtype=float)
    a = p.alpha
    noise = rho * p.noise_sensing / p.power if p.power > 0 else np.where(rho > 0, np.inf, 0.0)
    interf = rho / (2.0 * (1.0 + rho)) + rho / (a - 2.0) * hyp2f1_interference(rho, a)
    return (-noise - 2.0 * p.beam_halfwidth * p.lambda_s * interf)[()]


def single_ap_detection(r, p: SystemParameters):
    """Probability that one beam-aligned AP at distance r detects the target."""
    return np.exp(detection_exponent(r, p))[()]


def _breakpoints(R: float) -> list[float]:
    # log-spaced segment ends: rho(r) spans many decades when alpha is near 2
    if R <= 1.0:
        return []
    return list(np.logspace(0.0, math.log10(R), 12)[:-1])


def sensing_coverage(p: SystemParameters, quad: QuadratureSpec = DEFAULT_QUAD, curve_points: int = 201) -> SensingCoverage:
    """Network coverage 1 - exp(-2 Theta lambda_s int_0^R r P_sg(r) dr)."""
    R = p.max_range
    r_grid = np.linspace(0.0, R, curve_points)
    p_sg = np.atleast_1d(single_ap_detection(r_grid, p)) if R > 0 else np.ones(1)
    if p.lambda_s <= 0 or R <= 0 or p.beam_halfwidth <= 0:
        return SensingCoverage(0.0, 0.0, r_grid, p_sg)
    f = lambda r: r * float(single_ap_detection(r, p))
    inner = integrate(f, 0.0, R, quad, points=_breakpoints(R))
    cov = -math.expm1(-2.0 * p.beam_halfwidth * p.lambda_s * inner)
    return SensingCoverage(min(max(cov, 0.0), 1.0), inner, r_grid, p_sg)


def _coverage_value(cov) -> float:
    return float(cov.p_cov_s if isinstance(cov, SensingCoverage) else cov)


def arrival_mgf_values(theta, p_cov_s: float, scan_interval: float) -> np.ndarray:
    """Vectorized inter-arrival MGF; inf where the geometric series diverges."""
    th = np.asarray(theta, dtype=float)
    if not p_cov_s > 0:
        raise NoArrivalsError("sensing coverage is zero; no packets are generated")
    with np.errstate(divide="ignore", over="ignore"):
        d = 1.0 + np.expm1(-th * scan_interval) / p_cov_s
        out = np.where(d > 0, 1.0 / np.where(d > 0, d, 1.0), np.inf)
    return out[()]


def arrival_mgf(theta: float, p: SystemParameters, cov) -> MgfEvaluation:
    """MGF of the geometric (in units of T_s) inter-arrival time.

    Finite iff (1 - P_cv^s) exp(theta T_s) < 1; ``cov`` is a SensingCoverage or a probability.
    """
    ps = _coverage_value(cov)
    val = float(arrival_mgf_values(theta, ps, p.scan_interval))
    ratio = (1.0 - ps) * math.exp(min(theta * p.scan_interval, 700.0))
    finite = math.isfinite(val)
    note = "" if finite else "geometric series diverges"
    return MgfEvaluation(float(theta), val, finite, finite and NEAR_POLE < ratio < 1.0, note)
