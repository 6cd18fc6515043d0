"""Analytical communication tier.

LMMSE channel statistics, the deterministic-equivalent (DE) downlink SINR for a
fixed topology, the Gamma-type coverage lower bound, finite-blocklength
decoding error, and the service-time MGF under retransmissions.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import BoundUndefinedError, NoCommTierError, UnstableServiceError
from .numerics import DEFAULT_QUAD, QuadratureSpec, integrate, integrate_vec, log_gamma, q_function
from .params import SystemParameters, effective_aleph
from .sensing import NEAR_POLE, MgfEvaluation

__all__ = [
    "ChannelStats",
    "CoverageBound",
    "DeSinr",
    "large_scale_gain",
    "channel_stats",
    "de_sinr_from_geometry",
    "de_sinr_matrix_form",
    "conditional_de_sinr",
    "eta_c",
    "psi",
    "psi_sum_form",
    "coverage_bound_value",
    "comm_coverage",
    "rate_matching_sinr",
    "decoding_error",
    "service_mgf",
    "service_mgf_values",
    "sample_bound_sinr",
]


def large_scale_gain(r, alpha: float):
    """Bounded path loss min(1, r^-alpha)."""
    r = np.asarray(r, dtype=float)
    with np.errstate(divide="ignore"):
        g = np.where(r <= 1.0, 1.0, np.power(np.maximum(r, 1.0), -alpha))
    return g[()]


@dataclass(frozen=True)
class ChannelStats:
    """Per (AP m, user k) LMMSE statistics; arrays have shape (M, K)."""

    l_mk: np.ndarray
    d_mk: np.ndarray
    sigma2_mk: np.ndarray


class DeSinr(NamedTuple):
    value: float
    status: str  # "ok", "interference-dominated", "perfect-csi-limit"


def _sq_distances(ap_xy, user_xy):
    ap = np.asarray(ap_xy, dtype=float).reshape(-1, 2)
    us = np.asarray(user_xy, dtype=float).reshape(-1, 2)
    dx = ap[:, 0, None] - us[None, :, 0]
    dy = ap[:, 1, None] - us[None, :, 1]
    return dx * dx + dy * dy


def channel_stats(ap_xy, user_xy, pilots, p: SystemParameters) -> ChannelStats:
    """d_mk = sum_j l_mj [pilot_j == pilot_k] + 1/(tau_tr rho_tr); sigma2 = l^2/d."""
    r2 = _sq_distances(ap_xy, user_xy)
    # min(1, r^-alpha) from squared distances, skipping the square root
    with np.errstate(divide="ignore"):
        l = np.power(np.maximum(r2, 1.0), -0.5 * p.alpha)
    pil = np.asarray(pilots, dtype=np.int64)
    # co-pilot received power, grouped per pilot then scattered back to users
    onehot = np.zeros((pil.size, p.pilot_symbols))
    onehot[np.arange(pil.size), pil] = 1.0
    per_pilot = l @ onehot
    d = per_pilot[:, pil] + 1.0 / (p.pilot_symbols * p.pilot_snr)
    return ChannelStats(l, d, l * l / d)


def _sinr_from_denominator(num, den) -> DeSinr:
    if den > 0:
        return DeSinr(num / den, "ok")
    if den == 0:
        return DeSinr(math.inf, "perfect-csi-limit")
    return DeSinr(0.0, "interference-dominated")


def de_sinr_from_geometry(ap_xy, user_xy, pilots, k: int, p: SystemParameters) -> DeSinr:
    """DE SINR of user k, scalar expansion.

    gamma_k = MN / ((1/M) sum_i sum_m d_mi l_mi^-2 (l_mk + MN/P) - 1), with
    d_mi the LMMSE interference-plus-noise term of user i at AP m.
    """
    ap = np.asarray(ap_xy, dtype=float).reshape(-1, 2)
    if ap.shape[0] == 0:
        raise NoCommTierError("no communication APs in the realization")
    st = channel_stats(ap, user_xy, pilots, p)
    M = ap.shape[0]
    aleph = M * p.n_antennas
    per_ap = (st.d_mk / (st.l_mk * st.l_mk)).sum(axis=1)
    den = float(np.dot(per_ap, st.l_mk[:, k] + aleph / p.power)) / M - 1.0
    return _sinr_from_denominator(float(aleph), den)


def de_sinr_matrix_form(ap_xy, user_xy, pilots, k: int, p: SystemParameters) -> DeSinr:
    """Same DE SINR through block-diagonal trace algebra on aleph x aleph matrices.

    Independent code path used to cross-check :func:`de_sinr_from_geometry`.
    """
    ap = np.asarray(ap_xy, dtype=float).reshape(-1, 2)
    if ap.shape[0] == 0:
        raise NoCommTierError("no communication APs in the realization")
    st = channel_stats(ap, user_xy, pilots, p)
    M, K = st.l_mk.shape
    N = p.n_antennas
    aleph = M * N
    eye = np.eye(N)
    lam_k = np.kron(np.diag(st.l_mk[:, k]), eye)
    shifted = lam_k + (aleph / p.power) * np.eye(aleph)
    total = 0.0
    for i in range(K):
        D_i = np.kron(np.diag(st.d_mk[:, i]), eye)
        lam_i_inv2 = np.kron(np.diag(st.l_mk[:, i] ** -2.0), eye)
        total += np.trace(D_i @ lam_i_inv2 @ shifted)
    den = total / aleph - 1.0
    return _sinr_from_denominator(float(aleph), den)


def conditional_de_sinr(real, user_index: int, p: SystemParameters) -> DeSinr:
    """DE SINR for ``user_index`` in a sampled topology (needs comm_aps, users, pilot_of_user)."""
    return de_sinr_from_geometry(real.comm_aps, real.users, real.pilot_of_user, user_index, p)


def eta_c(aleph: float) -> float:
    """Gamma-bound constant aleph * (aleph!)^(-1/aleph), via log-gamma."""
    return aleph * math.exp(-float(log_gamma(aleph + 1.0)) / aleph)


def psi(p: SystemParameters, aleph: float | None = None) -> float:
    """Mean normalized interference term of the coverage bound (product form)."""
    if p.lambda_c <= 0:
        raise NoCommTierError("lambda_c = 0: no communication tier")
    a = p.alpha
    aleph = effective_aleph(p) if aleph is None else aleph
    ratio = p.lambda_u / (p.lambda_c * p.pilot_symbols)
    return ratio * (p.lambda_u + (a - 2.0) / (a * math.pi * p.pilot_snr)) * (
        1.0 + (a - 1.0) * aleph / ((a - 2.0) * p.power)
    ) - 1.0


def psi_sum_form(p: SystemParameters, aleph: float | None = None) -> tuple[float, float, float]:
    """Same quantity assembled as I1 + I2 - 1 from the two interference moments.

    Returns (psi, I1, I2). Kept as a separate routine so the two printed forms
    can be compared; they agree algebraically.
    """
    if p.lambda_c <= 0:
        raise NoCommTierError("lambda_c = 0: no communication tier")
    a = p.alpha
    aleph = effective_aleph(p) if aleph is None else aleph
    lu, lc, tau, rt = p.lambda_u, p.lambda_c, p.pilot_symbols, p.pilot_snr
    i1 = lu / (lc * tau) * (lu + (a - 2.0) / (rt * a * math.pi))
    i2 = lu * aleph / (lc * tau * p.power) * ((a - 1.0) / (a - 2.0) * lu + (a - 1.0) / (rt * a * math.pi))
    return i1 + i2 - 1.0, i1, i2


@dataclass(frozen=True)
class CoverageBound:
    p_cov_c: float
    psi_value: float
    eta_c: float
    aleph_eff: float
    gamma_th: float
    saturated: bool = False


def coverage_bound_value(gamma, psi_value: float, eta: float, aleph: float):
    """1 - (1 - exp(-eta gamma psi))^aleph, stable for tiny and huge exponents."""
    g = np.asarray(gamma, dtype=float)
    if psi_value <= 0:
        return np.ones_like(g)[()]
    q = np.exp(-eta * g * psi_value)
    with np.errstate(divide="ignore"):
        out = -np.expm1(aleph * np.log1p(-q))
    return np.clip(out, 0.0, 1.0)[()]


def comm_coverage(gamma_th: float, p: SystemParameters) -> CoverageBound:
    """Lower bound on P[DE SINR > gamma_th] for the typical user."""
    if gamma_th < 0:
        raise ValueError("gamma_th must be nonnegative")
    aleph = effective_aleph(p)
    ps = psi(p, aleph)
    eta = eta_c(aleph)
    if ps <= 0:
        return CoverageBound(1.0, ps, eta, aleph, gamma_th, saturated=True)
    return CoverageBound(float(coverage_bound_value(gamma_th, ps, eta, aleph)), ps, eta, aleph, gamma_th)


def rate_matching_sinr(p: SystemParameters) -> float:
    """SINR at which the decoding error equals 1/2: 2^(L/tau_d) - 1."""
    return math.expm1(p.packet_bits * math.log(2.0) / p.tau_d)


def decoding_error(gamma, p: SystemParameters, return_flag: bool = False):
    """Finite-blocklength decoding error probability at SINR gamma.

    gamma = 0 has zero channel dispersion; the error is reported as 1 and, with
    ``return_flag``, a degenerate-channel flag is returned alongside.
    """
    g = np.asarray(gamma, dtype=float)
    if np.any(g < 0):
        raise ValueError("SINR must be nonnegative")
    td = float(p.tau_d)
    safe = np.where(g > 0, g, 1.0)
    v = -np.expm1(-2.0 * np.log1p(safe))
    arg = (np.log1p(safe) - p.packet_bits * math.log(2.0) / td) / np.sqrt(v / td)
    eps = np.where(g > 0, q_function(arg), 1.0)[()]
    if return_flag:
        return eps, bool(np.any(g == 0))
    return eps


def _service_setup(gamma_th, p):
    cov = comm_coverage(gamma_th, p)
    if not cov.saturated and cov.p_cov_c <= 0:
        raise BoundUndefinedError("communication coverage bound is zero; service conditional undefined")
    return cov


def _coverage_scale(cov: CoverageBound) -> float:
    """exp(-eta gamma_th psi) / P_cv^c, kept finite when both underflow."""
    x = cov.eta_c * cov.gamma_th * cov.psi_value
    if x > 700.0:
        return 1.0 / cov.aleph_eff
    q = math.exp(-x)
    return q / -math.expm1(cov.aleph_eff * math.log1p(-q)) if q < 1.0 else 1.0


def service_mgf(theta: float, gamma_th: float, p: SystemParameters, quad: QuadratureSpec = DEFAULT_QUAD,
                strict: bool = False) -> MgfEvaluation:
    """MGF of the retransmission service time J*T_c, SINR drawn from the bound's conditional density.

    The integrand has a pole where exp(-theta T_c) = eps(gamma). Because eps is
    decreasing, the evaluation is finite iff eps(gamma_th) exp(theta T_c) < 1;
    otherwise the result is flagged infinite (``strict`` raises instead).
    When the bound saturates (psi <= 0) the conditional SINR is unbounded and
    every packet goes through in one slot, so the MGF is exp(theta T_c).
    """
    Tc = p.slot
    cov = _service_setup(gamma_th, p)
    if cov.saturated:
        return MgfEvaluation(theta, math.exp(theta * Tc), True, False, "saturated coverage bound")
    eps_th = float(decoding_error(gamma_th, p))
    ratio = eps_th * math.exp(min(theta * Tc, 700.0))
    if ratio >= 1.0:
        if strict:
            raise UnstableServiceError(f"service MGF has a pole in the SINR range at theta={theta!r}")
        return MgfEvaluation(theta, math.inf, False, False, "unstable service: pole in integration range")
    near = ratio > NEAR_POLE
    spec = quad.tightened(10.0) if near else quad
    ps, n = cov.psi_value, cov.aleph_eff
    a = cov.eta_c * ps
    # the integrand in terms of u = exp(theta T_c) stays finite for very negative theta
    u = math.exp(min(theta * Tc, 700.0))
    q_th = math.exp(-cov.eta_c * gamma_th * ps) if cov.eta_c * gamma_th * ps < 700 else 0.0

    def f(x):
        g = gamma_th + x
        eps = float(decoding_error(g, p))
        tail = math.exp(-a * x)
        body = (1.0 - eps) * tail * u / (1.0 - eps * u)
        return body * math.exp((n - 1.0) * math.log1p(-q_th * tail)) if q_th * tail < 1.0 else 0.0

    pts = [0.1 / a, 1.0 / a, 5.0 / a, 30.0 / a]
    if near:
        pts = [1e-4 / a, 1e-2 / a] + pts
    val = integrate(f, 0.0, math.inf, spec, points=pts)
    value = n * a * _coverage_scale(cov) * val
    return MgfEvaluation(theta, value, True, near, "near-pole" if near else "")


def sample_bound_sinr(n: int, gamma_th: float, p: SystemParameters, rng) -> np.ndarray:
    """Inverse-CDF draws from the bound's SINR distribution conditioned on gamma >= gamma_th.

    The bound's CCDF is 1 - (1 - exp(-eta psi gamma))^aleph; drawing the CCDF
    value v uniformly on (0, P_cv^c) and inverting gives exact samples.
    """
    cov = _service_setup(gamma_th, p)
    if cov.saturated:
        return np.full(n, np.inf)
    v = rng.uniform(0.0, 1.0, n) * cov.p_cov_c
    one_minus_f = -np.expm1(np.log1p(-v) / cov.aleph_eff)
    g = -np.log(one_minus_f) / (cov.eta_c * cov.psi_value)
    return np.maximum(g, gamma_th)


def service_mgf_values(thetas, gamma_th: float, p: SystemParameters, quad: QuadratureSpec = DEFAULT_QUAD) -> np.ndarray:
    """Vectorized :func:`service_mgf` over a theta array (inf past the pole).

    All finite entries share one adaptive subdivision, which makes dense
    theta scans cheap. Results agree with the scalar routine to quadrature tolerance.
    """
    th = np.atleast_1d(np.asarray(thetas, dtype=float))
    Tc = p.slot
    cov = _service_setup(gamma_th, p)
    if cov.saturated:
        return np.exp(th * Tc)
    eps_th = float(decoding_error(gamma_th, p))
    out = np.full(th.shape, np.inf)
    ok = eps_th * np.exp(np.minimum(th * Tc, 700.0)) < NEAR_POLE
    if not np.any(ok):
        # near-pole or unstable entries go through the scalar path
        for i in np.flatnonzero(eps_th * np.exp(np.minimum(th * Tc, 700.0)) < 1.0):
            out[i] = service_mgf(th[i], gamma_th, p, quad).value
        return out
    ps, n = cov.psi_value, cov.aleph_eff
    a = cov.eta_c * ps
    u = np.exp(np.minimum(th[ok] * Tc, 700.0))
    q_th = math.exp(-a * gamma_th) if a * gamma_th < 700 else 0.0

    def f(x):
        eps = float(decoding_error(gamma_th + x, p))
        tail = math.exp(-a * x)
        w = q_th * tail
        shape = math.exp((n - 1.0) * math.log1p(-w)) if w < 1.0 else 0.0
        return (1.0 - eps) * tail * shape * u / (1.0 - eps * u)

    # split at the bulk of the density so the shared subdivision resolves it
    edges = [0.0, 1.0 / a, 5.0 / a, 30.0 / a]
    total = np.zeros(u.shape)
    for lo, hi in zip(edges[:-1], edges[1:]):
        total += integrate_vec(f, lo, hi, quad)
    total += integrate_vec(f, edges[-1], math.inf, quad)
    out[ok] = n * a * _coverage_scale(cov) * total
    for i in np.flatnonzero(~ok & (eps_th * np.exp(np.minimum(th * Tc, 700.0)) < 1.0)):
        out[i] = service_mgf(th[i], gamma_th, p, quad).value
    return out
