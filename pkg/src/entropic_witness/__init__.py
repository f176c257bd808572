"""Entropic entanglement witness on adaptively sampled, compressed joint distributions."""

from .detector import DetectorConfig, MeasurementRecord, RateModel, acquire, expected_rates, relative_efficiency
from .quadtree import (PartitionTree, QuadNode, SamplerParams, iterative_phase, measure_total, node_rate,
                       partition_phase, split, stability_check)
from .runner import AcquisitionResult, run_acquisition, sweep_resolution, sweep_time
from .source import (GridSpec, JointDistribution, Rect, SourceModel, discretize, gaussian_continuous_bound,
                     joint_density, oracle_ef_bound, region_probability)
from .uncertainty import UncertaintyReport, monte_carlo, propagate_error
from .witness import (EstimatedDistribution, WitnessResult, coarse_grain, component_split_check,
                      conditional_entropy, dimensionality_bound, ef_bound, estimate_distribution,
                      max_certifiable, measurement_count_bound, mutual_information)

__version__ = "0.1.0"
