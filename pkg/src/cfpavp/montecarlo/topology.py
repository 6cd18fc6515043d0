"""Poisson point process topologies centred on the typical user/target."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..params import SystemParameters
from .rng import substream

__all__ = ["sample_ppp", "SpatialRealization", "default_region_radius", "sample_realization"]


def sample_ppp(intensity: float, region_radius: float, rng) -> np.ndarray:
    """Homogeneous PPP on a disk: Poisson count, uniform positions. Shape (n, 2)."""
    if intensity < 0:
        raise ValueError("intensity must be nonnegative")
    if region_radius <= 0:
        raise ValueError("region radius must be positive")
    n = rng.poisson(intensity * math.pi * region_radius ** 2) if intensity > 0 else 0
    r = region_radius * np.sqrt(rng.random(n))
    phi = 2.0 * math.pi * rng.random(n)
    return np.column_stack([r * np.cos(phi), r * np.sin(phi)])


@dataclass(frozen=True)
class SpatialRealization:
    """One sampled topology. User 0 is the typical user at the origin, the target sits at the origin too."""

    sensing_aps: np.ndarray = field(repr=False)
    sensing_orientation: np.ndarray = field(repr=False)
    comm_aps: np.ndarray = field(repr=False)
    users: np.ndarray = field(repr=False)
    pilot_of_user: np.ndarray = field(repr=False)
    target: tuple = (0.0, 0.0)
    region_radius: float = 0.0
    sensing_radius: float = 0.0
    rng_seed: int = 0


def default_region_radius(p: SystemParameters) -> float:
    """5 x max(R, 1/sqrt(lambda_c)) around the typical user."""
    scale = p.max_range
    if p.lambda_c > 0:
        scale = max(scale, 1.0 / math.sqrt(p.lambda_c))
    return 5.0 * scale


def sample_realization(p: SystemParameters, seed: int, index: int = 0, region_radius: float | None = None,
                       sensing_radius: float | None = None, with_sensing: bool = True) -> SpatialRealization:
    """Sample comm APs, users (typical user first) with random pilots, and sensing APs.

    Sensing APs are drawn on a disk of radius ``sensing_radius`` (default R)
    around the target with uniform beam orientations.
    """
    rng = substream(seed, index, 0)
    rc = default_region_radius(p) if region_radius is None else region_radius
    comm = sample_ppp(p.lambda_c, rc, rng)
    others = sample_ppp(p.lambda_u, rc, rng)
    users = np.vstack([np.zeros((1, 2)), others])
    pilots = rng.integers(0, p.pilot_symbols, users.shape[0])
    rs = p.max_range if sensing_radius is None else sensing_radius
    if with_sensing and rs > 0:
        sens = sample_ppp(p.lambda_s, rs, rng)
    else:
        sens = np.zeros((0, 2))
    orient = rng.uniform(-math.pi, math.pi, sens.shape[0])
    return SpatialRealization(sens, orient, comm, users, pilots, (0.0, 0.0), rc, rs, int(seed))
