"""Stochastic flow simulators: pair distance, n-point motion, coalescing reference."""

from .distance import (
    DistanceEnsemble,
    DistancePath,
    default_dt,
    max_stable_dt,
    simulate_distance,
    simulate_distance_ensemble,
)
from .npoint import (
    FlowState,
    NPointEnsemble,
    ScaledEnsemble,
    make_flow_state,
    simulate_npoint_ensemble,
    simulate_npoint_paths,
    simulate_scaled_ensemble,
    step_npoint,
)
from .arratia import (
    ArratiaEnsemble,
    pair_coalescence_probability,
    simulate_arratia,
    simulate_arratia_ensemble,
)
from .rng import BLOCK_SIZE, BlockNoise, antithetic_units, block_stream, replication_stream

__all__ = [
    "DistanceEnsemble",
    "DistancePath",
    "default_dt",
    "max_stable_dt",
    "simulate_distance",
    "simulate_distance_ensemble",
    "FlowState",
    "NPointEnsemble",
    "ScaledEnsemble",
    "make_flow_state",
    "simulate_npoint_ensemble",
    "simulate_npoint_paths",
    "simulate_scaled_ensemble",
    "step_npoint",
    "ArratiaEnsemble",
    "pair_coalescence_probability",
    "simulate_arratia",
    "simulate_arratia_ensemble",
    "BLOCK_SIZE",
    "BlockNoise",
    "antithetic_units",
    "block_stream",
    "replication_stream",
]
