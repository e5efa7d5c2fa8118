"""Colored geometric random graph simulator and information-theory toolkit."""

from .codec import CodedGraph, DecodeError, UncodableError, decode, encode
from .experiments import SweepResult, aep_sweep, mc_estimate_F, rate_scan, wlln_sweep
from .geometry import CellGrid, MetricMode, ball_volume, distance, grid_build, grid_neighbors
from .infotheory import (
    aep_limit,
    aep_statistic,
    code_length_bits,
    entropy_bits,
    expected_neg_log_likelihood,
    log_likelihood,
    log_likelihood_naive,
    loglik_decomposition,
    near_entropy,
    rate_i1,
    rate_i2,
    rel_entropy_finite,
    rel_entropy_prob,
)
from .measures import (
    EmpiricalPair,
    empirical_pair,
    link_measure,
    product_measure,
    sensor_measure,
)
from .model import (
    Instance,
    ModelSpec,
    RegimeError,
    connection_prob,
    generate,
    instance_from_json,
    instance_to_json,
    radius_of,
    validate,
)

__version__ = "0.1.0"

__all__ = [
    "CellGrid",
    "CodedGraph",
    "DecodeError",
    "EmpiricalPair",
    "Instance",
    "MetricMode",
    "ModelSpec",
    "RegimeError",
    "SweepResult",
    "UncodableError",
    "aep_limit",
    "aep_statistic",
    "aep_sweep",
    "ball_volume",
    "code_length_bits",
    "connection_prob",
    "decode",
    "distance",
    "empirical_pair",
    "encode",
    "entropy_bits",
    "expected_neg_log_likelihood",
    "generate",
    "grid_build",
    "grid_neighbors",
    "instance_from_json",
    "instance_to_json",
    "link_measure",
    "log_likelihood",
    "log_likelihood_naive",
    "loglik_decomposition",
    "mc_estimate_F",
    "near_entropy",
    "product_measure",
    "radius_of",
    "rate_i1",
    "rate_i2",
    "rate_scan",
    "rel_entropy_finite",
    "rel_entropy_prob",
    "sensor_measure",
    "validate",
    "wlln_sweep",
]
