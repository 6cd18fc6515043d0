"""Packet-level Monte Carlo simulator used as empirical ground truth."""
from .pavp import PavpEstimate, comm_coverage_mc, simulate_pavp, simulate_pavp_deadlines
from .queue import QueueTrace, run_queue
from .rng import substream
from .sensing_sim import sensing_coverage_mc, simulate_sensing_trial, simulate_sensing_trials
from .service import sample_slots, simulate_service_sample
from .topology import SpatialRealization, sample_ppp, sample_realization

__all__ = [
    "PavpEstimate",
    "QueueTrace",
    "SpatialRealization",
    "comm_coverage_mc",
    "run_queue",
    "sample_ppp",
    "sample_realization",
    "sample_slots",
    "sensing_coverage_mc",
    "simulate_pavp",
    "simulate_pavp_deadlines",
    "simulate_sensing_trial",
    "simulate_sensing_trials",
    "simulate_service_sample",
    "substream",
]
