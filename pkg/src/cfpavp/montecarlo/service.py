"""Per-realization service sampling: DE SINR, then geometric retransmissions."""
from __future__ import annotations

import math

import numpy as np

from ..comm import comm_coverage, conditional_de_sinr, decoding_error
from ..errors import NoCommTierError
from ..params import SystemParameters

__all__ = ["realization_sinr", "sample_slots", "simulate_service_sample", "bound_sinr_unconditional"]


def realization_sinr(real, p: SystemParameters, user_index: int = 0) -> tuple[float, str]:
    """DE SINR of a user in a realization; (0, 'no-comm-tier') when there are no comm APs."""
    try:
        v, status = conditional_de_sinr(real, user_index, p)
    except NoCommTierError:
        return 0.0, "no-comm-tier"
    return v, status


def bound_sinr_unconditional(p: SystemParameters, gamma_th: float, rng) -> float:
    """One SINR draw from the coverage-bound distribution (may fall below gamma_th)."""
    if p.lambda_c <= 0:
        return 0.0
    cov = comm_coverage(0.0, p)
    if cov.saturated:
        return math.inf
    v = rng.random()
    one_minus_f = -math.expm1(math.log1p(-v) / cov.aleph_eff)
    if one_minus_f <= 0:
        return 0.0
    return -math.log(one_minus_f) / (cov.eta_c * cov.psi_value)


def sample_slots(gamma: float, n: int, p: SystemParameters, rng, per_slot_fading: bool = False) -> np.ndarray:
    """Attempts until success for n packets.

    By default the SINR is constant over coherence blocks (channel hardening), so
    the count is Geometric(1 - eps(gamma)). With ``per_slot_fading`` each slot
    sees gamma * h, h ~ Exp(1), independently.
    """
    if not per_slot_fading:
        eps = float(decoding_error(gamma, p)) if math.isfinite(gamma) else 0.0
        if eps >= 1.0:
            raise ValueError("decoding always fails at this SINR")
        return rng.geometric(1.0 - eps, n)
    out = np.zeros(n, dtype=np.int64)
    pending = np.arange(n)
    attempt = 0
    while pending.size:
        attempt += 1
        g = gamma * rng.exponential(1.0, pending.size)
        ok = rng.random(pending.size) >= decoding_error(g, p)
        out[pending[ok]] = attempt
        pending = pending[~ok]
        if attempt > 10 ** 6:
            raise RuntimeError("retransmissions did not terminate")
    return out


def simulate_service_sample(real, user_index: int, p: SystemParameters, rng, gamma_th: float | None = None,
                            per_slot_fading: bool = False):
    """(J, gamma) for one packet of ``user_index``; J is None when the user is out of coverage."""
    g_th = p.sinr_threshold if gamma_th is None else gamma_th
    gamma, status = realization_sinr(real, p, user_index)
    if status in ("interference-dominated", "no-comm-tier") or gamma < g_th or gamma <= 0:
        return None, gamma
    return int(sample_slots(gamma, 1, p, rng, per_slot_fading)[0]), gamma
