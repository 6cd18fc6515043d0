"""FCFS single-server queue driven by given arrival and service times."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = ["QueueTrace", "run_queue", "paoi_from_trace"]


@dataclass(frozen=True)
class QueueTrace:
    arrivals: np.ndarray = field(repr=False)
    services: np.ndarray = field(repr=False)
    starts: np.ndarray = field(repr=False)
    departures: np.ndarray = field(repr=False)
    paoi: np.ndarray = field(repr=False)
    violations: int = 0
    zeta: float | None = None

    @property
    def waiting(self) -> np.ndarray:
        return self.starts - self.arrivals

    @property
    def violation_fraction(self) -> float:
        return self.violations / self.paoi.size if self.paoi.size else float("nan")


def paoi_from_trace(arrivals, departures) -> np.ndarray:
    """Peak age of packet n: departure of packet n+1 minus arrival of packet n."""
    a = np.asarray(arrivals, dtype=float)
    d = np.asarray(departures, dtype=float)
    return d[1:] - a[:-1]


def run_queue(arrival_times, service_times, zeta: float | None = None) -> QueueTrace:
    """Start-time recursion Z(n) = max(A(n), Z(n-1) + S(n-1)); departure D(n) = Z(n) + S(n).

    The loop is sequential on purpose so the floating-point results match an
    event-by-event simulation exactly.
    """
    a = np.asarray(arrival_times, dtype=float)
    s = np.asarray(service_times, dtype=float)
    if a.shape != s.shape or a.ndim != 1:
        raise ValueError("arrival and service sequences must be 1-D and of equal length")
    if a.size and (np.any(s < 0) or np.any(a < 0)):
        raise ValueError("times must be nonnegative")
    if np.any(np.diff(a) < 0):
        raise ValueError("arrival times must be nondecreasing")
    n = a.size
    z = np.empty(n)
    d = np.empty(n)
    al, sl = a.tolist(), s.tolist()
    free = float("-inf")
    zl = [0.0] * n
    dl = [0.0] * n
    for i in range(n):
        start = al[i] if al[i] > free else free
        zl[i] = start
        free = start + sl[i]
        dl[i] = free
    z[:] = zl
    d[:] = dl
    paoi = paoi_from_trace(a, d)
    viol = int(np.count_nonzero(paoi > zeta)) if zeta is not None else 0
    return QueueTrace(a, s, z, d, paoi, viol, zeta)
