"""Radar detection trials on sampled sensing-AP topologies.

An AP detects the target (at the origin) when it is within range R, its beam
of half-width Theta covers the target, and its echo SINR exceeds delta. RCS is
Swerling-I (exponential), interferers see Rayleigh fading and are counted with
the sector probability Theta/pi per (victim, interferer) pair. Interferers
within ``interference_radius`` of the target are explicit points; the far field
is replaced by a Gaussian with its exact mean and variance.
"""
from __future__ import annotations

import math

import numpy as np

from ..params import SystemParameters
from ..sensing import rho_factor
from .rng import substream
from .topology import SpatialRealization

__all__ = ["INTERFERENCE_RADIUS", "detect_batch", "simulate_sensing_trial", "simulate_sensing_trials",
           "sensing_coverage_mc"]

INTERFERENCE_RADIUS = 200.0


def _far_field_moments(p: SystemParameters, r0: float) -> tuple[float, float]:
    a = p.alpha
    w = 2.0 * p.beam_halfwidth * p.lambda_s
    if w <= 0 or r0 <= 0:
        return 0.0, 0.0
    mean = w * p.power * r0 ** (2.0 - a) / (a - 2.0)
    var = w * 2.0 * p.power ** 2 * r0 ** (2.0 - 2.0 * a) / (2.0 * a - 2.0)
    return mean, var


def _near_shared(trial, r, c_idx, t_c, n_trials, r0, p, rng):
    near = np.flatnonzero(r <= r0)
    near_t = trial[near]
    start = np.searchsorted(near_t, np.arange(n_trials), side="left")
    count = np.searchsorted(near_t, np.arange(n_trials), side="right") - start
    k = count[t_c]
    owner = np.repeat(np.arange(c_idx.size), k)
    offs = np.arange(owner.size) - np.repeat(np.cumsum(k) - k, k)
    member = near[np.repeat(start[t_c], k) + offs]
    h = rng.exponential(1.0, owner.size)
    aligned = rng.random(owner.size) < p.beam_halfwidth / math.pi
    gain = np.minimum(1.0, np.maximum(r[member], 1e-300) ** -p.alpha)
    contrib = np.where(aligned & (member != c_idx[owner]), p.power * h * gain, 0.0)
    return np.bincount(owner, weights=contrib, minlength=c_idx.size)


def _near_independent(n_c, r0, p, rng):
    # a fresh interferer field per victim: the independent-mark model of the closed form
    k = rng.poisson(p.lambda_s * math.pi * r0 ** 2, n_c) if p.lambda_s > 0 else np.zeros(n_c, dtype=np.int64)
    owner = np.repeat(np.arange(n_c), k)
    rad = r0 * np.sqrt(rng.random(owner.size))
    h = rng.exponential(1.0, owner.size)
    aligned = rng.random(owner.size) < p.beam_halfwidth / math.pi
    gain = np.minimum(1.0, np.maximum(rad, 1e-300) ** -p.alpha)
    contrib = np.where(aligned, p.power * h * gain, 0.0)
    return np.bincount(owner, weights=contrib, minlength=n_c)


def detect_batch(trial: np.ndarray, xy: np.ndarray, orient: np.ndarray, n_trials: int,
                 p: SystemParameters, rng, r0: float = INTERFERENCE_RADIUS,
                 independent_field: bool = False) -> np.ndarray:
    """Detection outcome per trial. APs are given flat with a nondecreasing ``trial`` index.

    With ``independent_field`` each candidate AP sees its own freshly drawn
    interferer field instead of the other APs of its trial.
    """
    detected = np.zeros(n_trials, dtype=bool)
    if xy.shape[0] == 0 or p.beam_halfwidth <= 0:
        return detected
    r = np.hypot(xy[:, 0], xy[:, 1])
    bearing = np.arctan2(-xy[:, 1], -xy[:, 0])
    off = np.abs((orient - bearing + math.pi) % (2.0 * math.pi) - math.pi)
    victim = np.flatnonzero((r <= p.max_range) & (off <= p.beam_halfwidth))
    if victim.size == 0:
        return detected
    x = rng.exponential(1.0, victim.size)
    mean, var = _far_field_moments(p, r0)
    far = np.maximum(rng.normal(mean, math.sqrt(var), victim.size), 0.0) if mean > 0 else np.zeros(victim.size)
    rho = rho_factor(r[victim], p)
    # interference is nonnegative, so failing on far field plus noise alone is final
    cand = x > rho * (far + p.noise_sensing) / p.power
    c_idx = victim[cand]
    if c_idx.size == 0:
        return detected
    x_c, far_c, rho_c = x[cand], far[cand], rho[cand]
    t_c = trial[c_idx]
    if independent_field:
        i_near = _near_independent(c_idx.size, r0, p, rng)
    else:
        i_near = _near_shared(trial, r, c_idx, t_c, n_trials, r0, p, rng)
    ok = x_c > rho_c * (i_near + far_c + p.noise_sensing) / p.power
    detected[t_c[ok]] = True
    return detected


def simulate_sensing_trial(real: SpatialRealization, p: SystemParameters, rng,
                           interference_radius: float = INTERFERENCE_RADIUS,
                           independent_field: bool = False) -> bool:
    """One scan on a fixed topology: True iff any in-range aligned AP sees SINR > delta."""
    xy = np.asarray(real.sensing_aps, dtype=float).reshape(-1, 2)
    r0 = min(interference_radius, real.sensing_radius) if real.sensing_radius > 0 else interference_radius
    trial = np.zeros(xy.shape[0], dtype=np.int64)
    return bool(detect_batch(trial, xy, np.asarray(real.sensing_orientation, dtype=float), 1, p, rng, r0,
                             independent_field)[0])


def simulate_sensing_trials(p: SystemParameters, n_trials: int, rng, batch: int = 20000,
                            interference_radius: float = INTERFERENCE_RADIUS,
                            independent_field: bool = False) -> np.ndarray:
    """Independent scans, each on a fresh topology. Returns a boolean array."""
    out = np.zeros(n_trials, dtype=bool)
    rf = max(p.max_range, interference_radius)
    lam = p.lambda_s
    done = 0
    while done < n_trials:
        b = min(batch, n_trials - done)
        counts = rng.poisson(lam * math.pi * rf ** 2, b) if lam > 0 else np.zeros(b, dtype=np.int64)
        n = int(counts.sum())
        trial = np.repeat(np.arange(b), counts)
        rad = rf * np.sqrt(rng.random(n))
        phi = 2.0 * math.pi * rng.random(n)
        xy = np.column_stack([rad * np.cos(phi), rad * np.sin(phi)])
        orient = rng.uniform(-math.pi, math.pi, n)
        out[done:done + b] = detect_batch(trial, xy, orient, b, p, rng, interference_radius, independent_field)
        done += b
    return out


def sensing_coverage_mc(p: SystemParameters, n_trials: int, seed: int = 0, key: int = 0,
                        independent_field: bool = False) -> tuple[float, float]:
    """Empirical detection rate and its binomial standard error."""
    d = simulate_sensing_trials(p, n_trials, substream(seed, key, 1), independent_field=independent_field)
    m = float(d.mean())
    return m, math.sqrt(max(m * (1.0 - m), 0.0) / n_trials)
