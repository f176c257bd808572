"""Adaptive quad-tree acquisition of one joint distribution.

The joint index space starts split into four quadrants.  In the partition
phase every unstable leaf is measured once per pass; a leaf is stable once
the sign of ``alpha * R_T - R_i`` is known to ``beta`` standard deviations,
and stable leaves with ``R_i >= alpha * R_T`` are split.  Once fewer than
``gamma_frac`` of the leaves are unstable, the iterative phase measures all
leaves uniformly so every leaf ends with the same acquisition time.

Child ``d`` of a node at ``(row, col, span)`` sits at
``(row + h * (d // 2), col + h * (d % 2))`` with ``h = span // 2``; a node's
path is its string of child digits from the root.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .detector import (DetectorConfig, MeasurementRecord, RateModel, acquire_many,
                       relative_efficiency, stream_key)
from .source import GridSpec
from .witness import Leaf, LeafTable

log = logging.getLogger(__name__)

TOTAL_RATE_STREAM = "total-rate"


@dataclass(frozen=True)
class SamplerParams:
    alpha: float = 0.002
    beta: float = 2.0
    gamma_frac: float = 0.15
    max_depth: int | None = None
    max_partition_passes: int = 10_000
    iterative_passes: int = 20
    time_budget: float | None = None        # model seconds per tree (acquisitions x T_a)
    total_duration: float = 10.0            # seconds spent measuring R_T
    include_total_uncertainty: bool = True

    def __post_init__(self):
        if not 0 <= self.alpha <= 1:
            raise ValueError(f"alpha must lie in [0, 1], got {self.alpha!r}")
        if not self.beta > 0:
            raise ValueError(f"beta must be positive, got {self.beta!r}")
        if not 0 < self.gamma_frac <= 1:
            raise ValueError(f"gamma_frac must lie in (0, 1], got {self.gamma_frac!r}")
        if self.max_depth is not None and self.max_depth < 1:
            raise ValueError("max_depth must be at least 1")
        if self.max_partition_passes < 0 or self.iterative_passes < 0:
            raise ValueError("pass counts must be non-negative")
        if self.time_budget is not None and not self.time_budget > 0:
            raise ValueError("time_budget must be positive")
        if not self.total_duration > 0:
            raise ValueError("total_duration must be positive")


class TreeStateError(RuntimeError):
    """Operation not allowed in the node's current state."""


@dataclass(eq=False)
class QuadNode:
    path: str
    row: int
    col: int
    span: int
    key: int = 0
    efficiency: float = 1.0
    acquisition_time: float = 0.5
    counts: list = field(default_factory=list, repr=False)
    accidentals: list = field(default_factory=list, repr=False)
    stable: bool = False
    children: list = field(default_factory=list, repr=False)

    @property
    def depth(self) -> int:
        return len(self.path)

    @property
    def is_leaf(self) -> bool:
        return not self.children

    @property
    def n_records(self) -> int:
        return len(self.counts)

    @property
    def records(self) -> list[MeasurementRecord]:
        return [MeasurementRecord(c, a, self.efficiency, self.acquisition_time)
                for c, a in zip(self.counts, self.accidentals)]

    def add_record(self, record: MeasurementRecord) -> None:
        self.counts.append(record.coincidences)
        self.accidentals.append(record.accidentals)

    def leaves(self):
        if not self.children:
            yield self
            return
        for child in self.children:
            yield from child.leaves()

    def nodes(self):
        yield self
        for child in self.children:
            yield from child.nodes()


def node_rate(node: QuadNode, subtract: bool = False) -> tuple[float, float]:
    """Pooled rate ``sum(C) / (eps * n * T_a)`` and its Poisson standard error.

    A node with no counts at all is given the error of a single count, so
    a silent node becomes stable only after enough time has been spent on it.
    """
    if not node.counts:
        raise TreeStateError(f"node {node.path!r} has no records")
    c = math.fsum(node.counts)
    a = math.fsum(node.accidentals)
    scale = node.efficiency * node.n_records * node.acquisition_time
    if subtract:
        return (c - a) / scale, math.sqrt(max(c + a, 1.0)) / scale
    return c / scale, math.sqrt(max(c, 1.0)) / scale


def stability_check(node: QuadNode, alpha: float, beta: float, total_rate: float,
                    total_sigma: float = 0.0, exact: bool = False) -> bool:
    """True when the node rate sits at least ``beta`` sigma away from ``alpha * R_T``.

    ``exact`` treats the node rate as noise free; a node exactly at the
    threshold is never stable.
    """
    rate, sigma = node_rate(node)
    margin = abs(rate - alpha * total_rate)
    if exact:
        return margin > 0
    sigma = math.hypot(sigma, alpha * total_sigma)
    return margin > 0 and margin >= beta * sigma


def split(node: QuadNode, max_depth: int | None = None) -> QuadNode:
    if node.children:
        raise TreeStateError(f"node {node.path!r} is already split")
    if node.span < 2:
        raise TreeStateError(f"node {node.path!r} has unit span")
    if max_depth is not None and node.depth >= max_depth:
        raise TreeStateError(f"node {node.path!r} is at the maximum depth {max_depth}")
    h = node.span // 2
    node.children = [
        QuadNode(node.path + str(d), node.row + h * (d // 2), node.col + h * (d % 2), h,
                 acquisition_time=node.acquisition_time)
        for d in range(4)
    ]
    return node


@dataclass(eq=False)
class PartitionTree:
    basis: str
    component: str
    grid: GridSpec
    root: QuadNode
    tree_id: int = 0
    total_rate: float = float("nan")
    total_rate_sigma: float = float("nan")
    model_time: float = 0.0
    partition_passes: int = 0
    budget_exhausted: bool = False

    @classmethod
    def new(cls, basis: str, component: str, grid: GridSpec, tree_id: int = 0,
            acquisition_time: float = 0.5) -> "PartitionTree":
        root = QuadNode("", 0, 0, grid.n, acquisition_time=acquisition_time)
        return cls(basis, component, grid, root, tree_id)

    @property
    def label(self) -> str:
        return f"{self.basis}/{self.component}"

    def leaves(self) -> list[QuadNode]:
        return list(self.root.leaves())

    def n_leaves(self) -> int:
        return sum(1 for _ in self.root.leaves())

    def leaf_table(self, max_records: int | None = None) -> LeafTable:
        rows = []
        for leaf in self.root.leaves():
            k = leaf.n_records if max_records is None else min(max_records, leaf.n_records)
            rows.append(Leaf(leaf.path, leaf.row, leaf.col, leaf.span,
                             math.fsum(leaf.counts[:k]), math.fsum(leaf.accidentals[:k]),
                             leaf.efficiency, k * leaf.acquisition_time))
        return LeafTable.from_leaves(rows)

    def check_tiling(self) -> None:
        n = self.grid.n
        area = 0
        cover = np.zeros((n, n), dtype=np.int32)
        for leaf in self.root.leaves():
            cover[leaf.row:leaf.row + leaf.span, leaf.col:leaf.col + leaf.span] += 1
            area += leaf.span**2
        if area != n * n or not np.all(cover == 1):
            raise AssertionError(f"{self.label}: leaves do not tile the {n}x{n} joint space")


def _prepare(tree: PartitionTree, det: DetectorConfig, nodes: list[QuadNode]) -> None:
    n = tree.grid.n
    for node in nodes:
        if node.key == 0:
            node.key = stream_key(tree.tree_id, node.path)
            node.efficiency = float(relative_efficiency(det, (node.row, node.col, node.span, node.span), n))
            node.acquisition_time = det.acquisition_time


def measure_nodes(tree: PartitionTree, nodes: list[QuadNode], det: DetectorConfig,
                  model: RateModel) -> None:
    """Append one record to each node; draws depend only on (seed, node, record index)."""
    if not nodes:
        return
    _prepare(tree, det, nodes)
    rows = np.fromiter((q.row for q in nodes), np.int64, len(nodes))
    cols = np.fromiter((q.col for q in nodes), np.int64, len(nodes))
    spans = np.fromiter((q.span for q in nodes), np.int64, len(nodes))
    eff = np.fromiter((q.efficiency for q in nodes), float, len(nodes))
    keys = np.fromiter((q.key for q in nodes), np.uint64, len(nodes))
    index = np.fromiter((q.n_records for q in nodes), np.uint64, len(nodes))
    coinc, acc = model.rates(rows, cols, spans)
    c, a = acquire_many(coinc, acc, eff, det, keys, index)
    for node, ci, ai in zip(nodes, c.tolist(), a.tolist()):
        node.counts.append(ci)
        node.accidentals.append(ai)
    tree.model_time += len(nodes) * det.acquisition_time


def measure_total(det: DetectorConfig, model: RateModel, duration: float = 10.0,
                  tree_id: int = 0) -> tuple[float, float]:
    """Total coincidence rate with every mirror on, from one long full-grid acquisition."""
    if not duration > 0:
        raise ValueError("total-rate acquisition needs a positive duration")
    coinc, acc = model.rates(0, 0, model.n)
    mean = (float(coinc) + float(acc)) * duration
    if det.noise_free:
        return mean / duration, 0.0
    from .detector import counter_uniform, poisson_from_uniform
    u = counter_uniform(det.rng_seed, np.uint64(stream_key(tree_id, TOTAL_RATE_STREAM)), 0, 0)
    counts = float(poisson_from_uniform(u, mean))
    return counts / duration, math.sqrt(counts) / duration


def _budget_left(tree: PartitionTree, params: SamplerParams) -> bool:
    return params.time_budget is None or tree.model_time < params.time_budget


def partition_phase(tree: PartitionTree, params: SamplerParams, det: DetectorConfig,
                    model: RateModel) -> PartitionTree:
    """Measure unstable leaves pass by pass, splitting stable hot leaves."""
    max_depth = tree.grid.depth if params.max_depth is None else min(params.max_depth, tree.grid.depth)
    if tree.root.is_leaf:
        split(tree.root, max_depth)
    threshold = params.alpha * tree.total_rate
    total_sigma = tree.total_rate_sigma if params.include_total_uncertainty else 0.0
    while True:
        leaves = tree.leaves()
        unstable = [q for q in leaves if not q.stable]
        fraction = len(unstable) / len(leaves)
        if fraction < params.gamma_frac:
            break
        if tree.partition_passes >= params.max_partition_passes or not _budget_left(tree, params):
            tree.budget_exhausted = True
            break
        measure_nodes(tree, unstable, det, model)
        for node in unstable:
            node.stable = stability_check(node, params.alpha, params.beta, tree.total_rate,
                                          total_sigma, exact=det.noise_free)
            if (node.stable and node_rate(node)[0] >= threshold
                    and node.span >= 2 and node.depth < max_depth):
                split(node, max_depth)
        log.info("tree=%s phase=partition pass=%d leaves=%d unstable_fraction=%.4f",
                 tree.label, tree.partition_passes, len(leaves), fraction)
        tree.partition_passes += 1
    return tree


def extend_records(tree: PartitionTree, target: int, det: DetectorConfig, model: RateModel
                   ) -> PartitionTree:
    """Measure every leaf until it holds ``target`` records."""
    leaves = tree.leaves()
    level = min((q.n_records for q in leaves), default=target)
    while level < target:
        behind = [q for q in leaves if q.n_records <= level]
        measure_nodes(tree, behind, det, model)
        log.info("tree=%s phase=iterative records=%d leaves=%d measured=%d",
                 tree.label, level + 1, len(leaves), len(behind))
        level += 1
    return tree


def iterative_phase(tree: PartitionTree, params: SamplerParams, det: DetectorConfig,
                    model: RateModel, passes: int | None = None) -> PartitionTree:
    """Equalize record counts across leaves, then run ``passes`` uniform passes.

    With ``passes == 0`` the tree is left untouched.  A model-time budget
    stops the uniform passes early, never in the middle of a pass.
    """
    passes = params.iterative_passes if passes is None else passes
    if passes <= 0:
        return tree
    leaves = tree.leaves()
    base = max(q.n_records for q in leaves)
    extend_records(tree, base, det, model)
    for k in range(1, passes + 1):
        if not _budget_left(tree, params):
            tree.budget_exhausted = True
            break
        extend_records(tree, base + k, det, model)
    return tree


def acquire_tree(tree: PartitionTree, params: SamplerParams, det: DetectorConfig,
                 model: RateModel, passes: int | None = None) -> PartitionTree:
    """measure R_T, partition, then iterate."""
    tree.total_rate, tree.total_rate_sigma = measure_total(det, model, params.total_duration, tree.tree_id)
    partition_phase(tree, params, det, model)
    iterative_phase(tree, params, det, model, passes)
    return tree
