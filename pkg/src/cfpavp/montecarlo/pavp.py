"""Empirical peak-AoI violation probability over independent spatial realizations."""
from __future__ import annotations

import csv
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ..errors import CfpavpError
from ..params import SystemParameters
from ..sensing import sensing_coverage
from .queue import run_queue
from .rng import substream
from .sensing_sim import simulate_sensing_trial, simulate_sensing_trials
from .service import bound_sinr_unconditional, realization_sinr, sample_slots
from .topology import sample_realization

__all__ = ["PavpEstimate", "simulate_pavp", "simulate_pavp_deadlines", "simulate_realization", "comm_coverage_mc",
           "ARRIVAL_MODES", "SINR_SOURCES"]

ARRIVAL_MODES = ("analytic", "physical", "physical-frozen")
SINR_SOURCES = ("de", "bound")


@dataclass(frozen=True)
class PavpEstimate:
    mean: float
    stderr: float
    n_realizations: int
    in_coverage: int
    packets_simulated: int
    p_cov_s: float
    fractions: np.ndarray = field(repr=False)


@dataclass(frozen=True)
class _Job:
    p: SystemParameters
    zetas: tuple
    gamma_th: float
    packets: int
    seed: int
    arrival_mode: str
    sinr_source: str
    per_slot_fading: bool
    p_cov_s: float
    region_radius: float | None


def _inter_arrivals(job: _Job, real, rng, n: int) -> np.ndarray:
    p = job.p
    if job.arrival_mode == "analytic":
        return p.scan_interval * rng.geometric(job.p_cov_s, n)
    # physical: run scans until n detections
    gaps = np.empty(n)
    if job.arrival_mode == "physical":
        got, since = 0, 0
        while got < n:
            chunk = max(64, int(1.2 * (n - got)))
            det = simulate_sensing_trials(p, chunk, rng)
            for hit in det:
                since += 1
                if hit:
                    gaps[got] = since * p.scan_interval
                    got += 1
                    since = 0
                    if got == n:
                        break
            if got == 0 and since > 10 ** 6:
                raise CfpavpError("no detection in 10^6 scans")
        return gaps
    since = 0
    for i in range(n):
        while True:
            since += 1
            if simulate_sensing_trial(real, p, rng):
                break
            if since > 10 ** 6:
                raise CfpavpError("no detection in 10^6 scans on a frozen topology")
        gaps[i] = since * p.scan_interval
        since = 0
    return gaps


def simulate_realization(job: _Job, index: int):
    """Violation fraction per deadline for one realization, coverage flag, packet count and trace."""
    p = job.p
    rng = substream(job.seed, index, 2)
    frozen = job.arrival_mode == "physical-frozen"
    real = sample_realization(p, job.seed, index, region_radius=job.region_radius, with_sensing=frozen)
    if job.sinr_source == "bound":
        gamma = bound_sinr_unconditional(p, job.gamma_th, rng)
        status = "ok" if p.lambda_c > 0 else "no-comm-tier"
    else:
        gamma, status = realization_sinr(real, p)
    covered = status == "ok" and gamma >= job.gamma_th and gamma > 0
    ones = np.ones(len(job.zetas))
    if not covered:
        return ones, False, 0, None
    if job.arrival_mode == "analytic" and not job.p_cov_s > 0:
        # covered, but the sensing tier never produces an update
        return ones, True, 0, None
    n = job.packets + 1
    arrivals = np.cumsum(_inter_arrivals(job, real, rng, n))
    services = p.slot * sample_slots(gamma, n, p, rng, job.per_slot_fading)
    trace = run_queue(arrivals, services, job.zetas[0])
    frac = np.array([np.count_nonzero(trace.paoi > z) for z in job.zetas]) / trace.paoi.size
    return frac, True, trace.paoi.size, trace


def _run_chunk(args):
    job, indices = args
    return [simulate_realization(job, i)[:3] for i in indices]


def simulate_pavp(p: SystemParameters, zeta: float, gamma_th: float, n_realizations: int,
                  packets_per_realization: int, seed: int = 0, arrival_mode: str = "analytic",
                  sinr_source: str = "de", per_slot_fading: bool = False, workers: int = 1,
                  region_radius: float | None = None, trace_path=None, trace_realizations: int = 1,
                  p_cov_s: float | None = None) -> PavpEstimate:
    """Average violation fraction over realizations; out-of-coverage realizations count as 1.

    ``arrival_mode``: 'analytic' draws geometric inter-arrivals with the
    closed-form sensing coverage; 'physical' runs a detection trial on a fresh
    topology every scan; 'physical-frozen' keeps one sensing topology per realization.
    ``sinr_source``: 'de' uses the DE SINR of the sampled topology, 'bound'
    draws the SINR from the coverage-bound distribution.
    The reported error is the sample standard error of the per-realization fractions.
    """
    return simulate_pavp_deadlines(p, [zeta], gamma_th, n_realizations, packets_per_realization, seed,
                                   arrival_mode, sinr_source, per_slot_fading, workers, region_radius,
                                   trace_path, trace_realizations, p_cov_s)[0]


def simulate_pavp_deadlines(p: SystemParameters, zetas, gamma_th: float, n_realizations: int,
                            packets_per_realization: int, seed: int = 0, arrival_mode: str = "analytic",
                            sinr_source: str = "de", per_slot_fading: bool = False, workers: int = 1,
                            region_radius: float | None = None, trace_path=None, trace_realizations: int = 1,
                            p_cov_s: float | None = None) -> list[PavpEstimate]:
    """:func:`simulate_pavp` for several deadlines scored on the same simulated traces."""
    if n_realizations < 1 or packets_per_realization < 1:
        raise ValueError("realization and packet counts must be >= 1")
    if arrival_mode not in ARRIVAL_MODES:
        raise ValueError(f"arrival_mode must be one of {ARRIVAL_MODES}")
    if sinr_source not in SINR_SOURCES:
        raise ValueError(f"sinr_source must be one of {SINR_SOURCES}")
    zetas = tuple(float(z) for z in zetas)
    if not zetas:
        raise ValueError("at least one deadline is required")
    if p_cov_s is None:
        p_cov_s = sensing_coverage(p).p_cov_s if p.lambda_s > 0 else 0.0
    job = _Job(p, zetas, gamma_th, int(packets_per_realization), int(seed), arrival_mode, sinr_source,
               per_slot_fading, float(p_cov_s), region_radius)
    idx = list(range(n_realizations))
    if workers > 1 and n_realizations > 1:
        size = math.ceil(n_realizations / (4 * workers))
        chunks = [(job, idx[i:i + size]) for i in range(0, n_realizations, size)]
        with ProcessPoolExecutor(max_workers=workers) as ex:
            rows = [r for part in ex.map(_run_chunk, chunks) for r in part]
    else:
        rows = _run_chunk((job, idx))
    frac = np.array([r[0] for r in rows])
    covered = int(sum(1 for r in rows if r[1]))
    packets = int(sum(r[2] for r in rows))
    if trace_path is not None:
        _export_traces(job, trace_path, trace_realizations, n_realizations)
    n = frac.shape[0]
    out = []
    for j in range(len(zetas)):
        f = frac[:, j].copy()
        se = float(f.std(ddof=1) / math.sqrt(n)) if n > 1 else 0.0
        out.append(PavpEstimate(float(f.mean()), se, n, covered, packets, job.p_cov_s, f))
    return out


def _export_traces(job: _Job, path, limit: int, n_realizations: int) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["realization", "packet", "arrival_s", "service_s", "departure_s", "paoi_s"])
        written = 0
        for i in range(n_realizations):
            if written >= limit:
                break
            trace = simulate_realization(job, i)[3]
            if trace is None:
                continue
            for n in range(trace.paoi.size):
                w.writerow([i, n, repr(float(trace.arrivals[n])), repr(float(trace.services[n])),
                            repr(float(trace.departures[n])), repr(float(trace.paoi[n]))])
            written += 1


def comm_coverage_mc(p: SystemParameters, gamma_th, n_realizations: int, seed: int = 0,
                     region_radius: float | None = None):
    """Fraction of realizations whose typical-user DE SINR reaches gamma_th, with binomial standard error.

    ``gamma_th`` may be an array; every threshold is scored on the same realizations.
    """
    g_th = np.asarray(gamma_th, dtype=float)
    gam = np.zeros(n_realizations)
    for i in range(n_realizations):
        real = sample_realization(p, seed, i, region_radius=region_radius, with_sensing=False)
        g, status = realization_sinr(real, p)
        gam[i] = g if status == "ok" else -np.inf
    m = (gam[:, None] >= g_th.reshape(1, -1)).mean(axis=0).reshape(g_th.shape)
    se = np.sqrt(m * (1.0 - m) / n_realizations)
    if m.ndim == 0:
        return float(m), float(se)
    return m, se
