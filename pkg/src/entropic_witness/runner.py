"""End-to-end experiment runs: acquisition of all four joint distributions,
witness evaluation with uncertainties, and the time / resolution sweeps."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace

import numpy as np

from .config import ExperimentConfig
from .detector import RateModel
from .quadtree import PartitionTree, SamplerParams, acquire_tree, extend_records, measure_total, partition_phase
from .source import MOMENTUM, POSITION, oracle_ef_bound
from .uncertainty import MONTE_CARLO, PROPAGATION, leaf_sets, monte_carlo, propagate_error
from .witness import distribution_from_leaves, ef_bound, estimate_distribution, max_certifiable_for

log = logging.getLogger(__name__)

TREE_ORDER = ((POSITION, "x"), (POSITION, "y"), (MOMENTUM, "x"), (MOMENTUM, "y"))


@dataclass
class AcquisitionResult:
    trees: list[PartitionTree]
    config: ExperimentConfig
    n: int
    models: list[RateModel] = field(default_factory=list, repr=False)

    @property
    def seed(self) -> int:
        return self.config.seed

    def n_leaves(self) -> int:
        return sum(t.n_leaves() for t in self.trees)


def _sampler(config: ExperimentConfig, n: int) -> SamplerParams:
    depth = n.bit_length() - 1
    max_depth = config.sampler.max_depth
    return replace(config.sampler, max_depth=depth if max_depth is None else min(max_depth, depth))


def start_acquisition(config: ExperimentConfig, n: int | None = None) -> AcquisitionResult:
    """Build empty trees and rate models for every basis/component pair."""
    n = config.n if n is None else n
    trees, models = [], []
    for i, (basis, comp) in enumerate(TREE_ORDER):
        grid = config.grid(basis, comp, n)
        models.append(RateModel.from_source(config.source, basis, comp, grid, config.detector))
        trees.append(PartitionTree.new(basis, comp, grid, tree_id=i,
                                       acquisition_time=config.detector.acquisition_time))
    return AcquisitionResult(trees, config, n, models)


def run_acquisition(config: ExperimentConfig, n: int | None = None,
                    passes: int | None = None) -> AcquisitionResult:
    """Measure R_T, partition and iterate on all four joint distributions."""
    result = start_acquisition(config, n)
    params = _sampler(config, result.n)
    for tree, model in zip(result.trees, result.models):
        acquire_tree(tree, params, config.detector, model, passes)
        log.info("tree=%s leaves=%d partition_passes=%d budget_exhausted=%s",
                 tree.label, tree.n_leaves(), tree.partition_passes, tree.budget_exhausted)
    return result


def subtract_modes(flag: str) -> list[bool]:
    return {"off": [False], "on": [True], "both": [False, True]}[flag]


def witness(trees, subtract: bool = False, max_records: int | None = None):
    return ef_bound(estimate_distribution(t, subtract, max_records) for t in trees)


def analyze(trees, subtract: bool, uncertainty: str = "both", mc_trials: int = 100,
            seed: int = 0, max_records: int | None = None) -> dict:
    """Witness, propagated sigma and (optionally) Monte Carlo sigma for one subtraction mode."""
    sets = leaf_sets(trees, max_records)
    res = ef_bound(_dists(sets, subtract))
    out = {"witness": res}
    if uncertainty in (PROPAGATION, "both"):
        prop = propagate_error(sets, subtract)
        res.sigma = prop.ef_sigma
        res.uncertainty_method = PROPAGATION
        out[PROPAGATION] = prop
    if uncertainty in (MONTE_CARLO, "both"):
        mc = monte_carlo(sets, subtract, trials=mc_trials, seed=seed)
        if uncertainty == MONTE_CARLO:
            res.sigma = mc.ef_sigma
            res.uncertainty_method = MONTE_CARLO
        out[MONTE_CARLO] = mc
    return out


def _dists(sets, subtract):
    return [distribution_from_leaves(s.table, s.grid, s.basis, s.component, subtract) for s in sets]


def sweep_time(config: ExperimentConfig, records: list[int]) -> list[dict]:
    """Witness against acquisition time per partition within one growing run.

    The run partitions once, then every leaf is measured until it holds
    ``max(records)`` records; checkpoint ``k`` evaluates each leaf on its
    first ``k`` records only.
    """
    if not records or min(records) < 1:
        raise ValueError("checkpoints must be positive record counts")
    result = start_acquisition(config)
    params = _sampler(config, result.n)
    for tree, model in zip(result.trees, result.models):
        tree.total_rate, tree.total_rate_sigma = measure_total(
            config.detector, model, params.total_duration, tree.tree_id)
        partition_phase(tree, params, config.detector, model)
        extend_records(tree, max(records), config.detector, model)
    rows = []
    t_a = config.detector.acquisition_time
    for k in records:
        row = {"records": k, "time_per_partition": k * t_a}
        for subtract in (False, True):
            rep = propagate_error(result.trees, subtract, max_records=k)
            tag = "sub" if subtract else "raw"
            row[f"ef_{tag}"] = rep.ef_mean
            row[f"sigma_{tag}"] = rep.ef_sigma
        rows.append(row)
    return rows


def naive_measurements(n: int) -> int:
    """Joint measurements for the uncompressed two-dimensional witness: 2 n**4."""
    return 2 * n**4


def sweep_resolution(config: ExperimentConfig, ns: list[int], passes: int | None = None) -> list[dict]:
    """Adaptive witness and leaf count for several maximum resolutions on fixed extents."""
    rows = []
    for n in ns:
        result = run_acquisition(config, n=n, passes=passes)
        leaves = result.n_leaves()
        row = {"n": n, "leaves": leaves, "naive": naive_measurements(n),
               "improvement": naive_measurements(n) / leaves}
        for subtract in (False, True):
            rep = propagate_error(result.trees, subtract)
            tag = "sub" if subtract else "raw"
            row[f"ef_{tag}"] = rep.ef_mean
            row[f"sigma_{tag}"] = rep.ef_sigma
        row["oracle"] = oracle_ef_bound(config.source, config.grids(n))
        rows.append(row)
    return rows


def oracle_summary(config: ExperimentConfig, n: int | None = None) -> dict:
    n = config.n if n is None else n
    grids = config.grids(n)
    return {
        "n": n,
        "oracle_ef_bound": oracle_ef_bound(config.source, grids),
        "max_certifiable": max_certifiable_for(grids),
    }


def fit_exponent(x, y) -> float:
    """Slope of log y against log x."""
    return float(np.polyfit(np.log(np.asarray(x, float)), np.log(np.asarray(y, float)), 1)[0])
