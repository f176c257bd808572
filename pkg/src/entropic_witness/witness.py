"""Entropies, the compressed-data entanglement witness and its closed-form bounds.

Joint distributions are ``n x n`` matrices with party a on rows and party b
on columns, so ``H(A|B)`` conditions on the column marginal.  All entropies
are in bits with ``0 log 0 = 0``; sums use :func:`math.fsum` because the
witness is a small difference of large entropies.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from .source import BASES, MOMENTUM, POSITION, GridSpec, Rect

RAW = "raw"
SUBTRACTED = "accidental_subtracted"


def _matrix(dist) -> np.ndarray:
    return np.asarray(getattr(dist, "matrix", dist), dtype=float)


def shannon_entropy(p) -> float:
    p = np.asarray(p, dtype=float).ravel()
    p = p[p > 0]
    return -math.fsum(p * np.log2(p))


def joint_entropy(dist) -> float:
    return shannon_entropy(_matrix(dist))


def conditional_entropy(dist) -> float:
    """H(A|B) = H(A,B) - H(B), B being the column (second-index) variable."""
    m = _matrix(dist)
    return joint_entropy(m) - shannon_entropy(m.sum(axis=0))


def mutual_information(dist) -> float:
    m = _matrix(dist)
    return shannon_entropy(m.sum(axis=1)) + shannon_entropy(m.sum(axis=0)) - joint_entropy(m)


class Leaf(NamedTuple):
    path: str
    row: int
    col: int
    span: int
    counts: float
    accidentals: float
    efficiency: float
    total_time: float


@dataclass
class LeafTable:
    """Pooled per-leaf data of one partition tree as parallel arrays."""

    paths: list[str]
    rows: np.ndarray
    cols: np.ndarray
    spans: np.ndarray
    counts: np.ndarray
    accidentals: np.ndarray
    efficiency: np.ndarray
    total_time: np.ndarray

    @classmethod
    def from_leaves(cls, leaves: Iterable[Leaf]) -> "LeafTable":
        leaves = list(leaves)
        cols = list(zip(*leaves)) if leaves else [[]] * 8
        return cls(
            paths=list(cols[0]),
            rows=np.asarray(cols[1], dtype=np.int64),
            cols=np.asarray(cols[2], dtype=np.int64),
            spans=np.asarray(cols[3], dtype=np.int64),
            counts=np.asarray(cols[4], dtype=float),
            accidentals=np.asarray(cols[5], dtype=float),
            efficiency=np.asarray(cols[6], dtype=float),
            total_time=np.asarray(cols[7], dtype=float),
        )

    def __len__(self) -> int:
        return len(self.paths)

    def leaves(self) -> list[Leaf]:
        return [Leaf(p, int(r), int(c), int(s), float(C), float(A), float(e), float(t))
                for p, r, c, s, C, A, e, t in zip(self.paths, self.rows, self.cols, self.spans,
                                                  self.counts, self.accidentals,
                                                  self.efficiency, self.total_time)]

    def with_counts(self, counts: np.ndarray, accidentals: np.ndarray | None = None) -> "LeafTable":
        return LeafTable(self.paths, self.rows, self.cols, self.spans,
                         np.asarray(counts, dtype=float),
                         self.accidentals if accidentals is None else np.asarray(accidentals, dtype=float),
                         self.efficiency, self.total_time)

    def rates(self, subtract: bool = False) -> np.ndarray:
        """Estimated leaf rates; negative post-subtraction rates clamp to zero."""
        net = self.counts - self.accidentals if subtract else self.counts
        return np.clip(net, 0.0, None) / (self.efficiency * self.total_time)


def fill_matrix(table: LeafTable, n: int, values: np.ndarray) -> np.ndarray:
    """Spread each leaf's value uniformly over its square (per-element value = value / span**2)."""
    m = np.zeros((n, n))
    per_elem = values / table.spans.astype(float) ** 2
    for r, c, s, v in zip(table.rows, table.cols, table.spans, per_elem):
        m[r:r + s, c:c + s] = v
    return m


def check_tiling(table: LeafTable, n: int) -> None:
    cover = np.zeros((n, n), dtype=np.int64)
    for r, c, s in zip(table.rows, table.cols, table.spans):
        cover[r:r + s, c:c + s] += 1
    if not np.all(cover == 1):
        raise ValueError("leaves do not tile the joint space exactly once")


@dataclass
class EstimatedDistribution:
    """Multilevel estimate built from quad-tree leaves; constant within each leaf."""

    basis: str
    component: str
    grid: GridSpec
    matrix: np.ndarray = field(repr=False)
    leaves: LeafTable = field(repr=False)
    subtract: bool = False


class DegenerateDistributionError(ValueError):
    """Raised when every leaf rate is zero, so nothing can be normalized."""


def distribution_from_leaves(table: LeafTable, grid: GridSpec, basis: str, component: str,
                             subtract: bool = False) -> EstimatedDistribution:
    rates = table.rates(subtract)
    total = rates.sum()
    if not total > 0:
        raise DegenerateDistributionError(f"{basis}/{component}: all leaf rates are zero")
    matrix = fill_matrix(table, grid.n, rates / total)
    return EstimatedDistribution(basis, component, grid, matrix, table, subtract)


def estimate_distribution(tree, subtract: bool = False, max_records: int | None = None
                          ) -> EstimatedDistribution:
    """P-tilde for one partition tree; ``max_records`` truncates each leaf's history."""
    table = tree.leaf_table(max_records=max_records)
    return distribution_from_leaves(table, tree.grid, tree.basis, tree.component, subtract)


def coarse_grain(dist, blocks: Sequence[Rect | tuple]):
    """Replace every block of a tiling by its mean value.

    Returns an ndarray for ndarray input, otherwise a copy of ``dist`` with
    the new matrix.

    H(A|B) cannot decrease when every column lies in the same column
    interval in all blocks that cover it, and I(A:B) cannot increase when
    the blocks form a product of row and column partitions. A quadtree
    with mixed block sizes satisfies neither, and there both can move the
    wrong way.
    """
    m = _matrix(dist)
    n_rows, n_cols = m.shape
    cover = np.zeros(m.shape, dtype=np.int64)
    out = np.empty_like(m)
    for block in blocks:
        r, c, h, w = Rect(*block)
        if r < 0 or c < 0 or h <= 0 or w <= 0 or r + h > n_rows or c + w > n_cols:
            raise ValueError(f"block {tuple(block)} lies outside the matrix")
        cover[r:r + h, c:c + w] += 1
        out[r:r + h, c:c + w] = m[r:r + h, c:c + w].mean()
    if not np.all(cover == 1):
        raise ValueError("blocks do not tile the matrix exactly once")
    if isinstance(dist, np.ndarray):
        return out
    from dataclasses import replace
    return replace(dist, matrix=out)


def component_split_check(joint) -> tuple[float, float]:
    """Both sides of H(Xa,Ya|Xb,Yb) <= H(Xa|Xb) + H(Ya|Yb).

    ``joint`` is indexed ``[x_a, y_a, x_b, y_b]``.
    """
    p = np.asarray(joint, dtype=float)
    if p.ndim != 4:
        raise ValueError("expected a 4-index distribution [x_a, y_a, x_b, y_b]")
    lhs = shannon_entropy(p) - shannon_entropy(p.sum(axis=(0, 1)))
    rhs = conditional_entropy(p.sum(axis=(1, 3))) + conditional_entropy(p.sum(axis=(0, 2)))
    return lhs, rhs


def log_term(position_grid: GridSpec, momentum_grid: GridSpec) -> float:
    return math.log2(2 * math.pi / (position_grid.delta * momentum_grid.delta))


@dataclass
class WitnessResult:
    """Per-distribution conditional entropies and per-component log terms, in bits."""

    conditional_entropies: dict[tuple[str, str], float]
    log_terms: dict[str, float]
    sigma: float = float("nan")
    method: str = RAW
    uncertainty_method: str | None = None

    @property
    def ef_bound(self) -> float:
        return math.fsum(self.log_terms.values()) - math.fsum(self.conditional_entropies.values())

    def to_dict(self) -> dict:
        return {
            "ef_bound": self.ef_bound,
            "sigma": self.sigma,
            "method": self.method,
            "uncertainty_method": self.uncertainty_method,
            "log_terms": dict(self.log_terms),
            "conditional_entropies": {f"{b}/{c}": h for (b, c), h in self.conditional_entropies.items()},
        }

    @classmethod
    def from_dict(cls, d: dict) -> "WitnessResult":
        ents = {tuple(k.split("/")): v for k, v in d["conditional_entropies"].items()}
        return cls(ents, dict(d["log_terms"]), d["sigma"], d["method"], d["uncertainty_method"])


def ef_bound(dists: Iterable) -> WitnessResult:
    """Lower bound on entanglement of formation (ebits) from paired distributions.

    ``dists`` holds one position and one momentum distribution for every
    component (objects with ``basis``, ``component``, ``grid``, ``matrix``).
    A negative result certifies nothing.
    """
    by_key = {}
    for d in dists:
        key = (d.basis, d.component)
        if key in by_key:
            raise ValueError(f"duplicate distribution for {key}")
        by_key[key] = d
    components = sorted({c for _, c in by_key})
    if not components:
        raise ValueError("no distributions given")
    for c in components:
        missing = [b for b in BASES if (b, c) not in by_key]
        if missing:
            raise ValueError(f"component {c!r} lacks {missing} distribution(s)")
    entropies = {key: conditional_entropy(d) for key, d in by_key.items()}
    logs = {c: log_term(by_key[(POSITION, c)].grid, by_key[(MOMENTUM, c)].grid) for c in components}
    subtract = any(getattr(d, "subtract", False) for d in by_key.values())
    return WitnessResult(entropies, logs, method=SUBTRACTED if subtract else RAW)


def max_certifiable(*deltas: float) -> float:
    """log2((2 pi)**d / prod(deltas)) for d position/momentum pixel pairs.

    Call as ``max_certifiable(dx, dy, dkx, dky)``; this is the witness value
    when every conditional entropy vanishes.
    """
    if len(deltas) % 2 or not deltas:
        raise ValueError("expected one position and one momentum pixel size per component")
    if any(not d > 0 for d in deltas):
        raise ValueError("pixel sizes must be positive")
    d = len(deltas) // 2
    return d * math.log2(2 * math.pi) - math.fsum(math.log2(x) for x in deltas)


def max_certifiable_for(grids: dict[tuple[str, str], GridSpec]) -> float:
    """:func:`max_certifiable` for a ``{(basis, component): grid}`` mapping."""
    comps = sorted({c for _, c in grids})
    deltas = [grids[(POSITION, c)].delta for c in comps] + [grids[(MOMENTUM, c)].delta for c in comps]
    return max_certifiable(*deltas)


def measurement_count_bound(n: int) -> int:
    """Approximate measurements for perfectly diagonal correlations at ``n x n``: 12(n - log2 n - 2)."""
    if int(n) != n or n < 8 or (int(n) & (int(n) - 1)):
        raise ValueError(f"n must be a power of two >= 8, got {n!r}")
    n = int(n)
    return 12 * (n - (n.bit_length() - 1) - 2)


def dimensionality_bound(ef: float, rounding: str = "ceil") -> int:
    """Smallest entanglement dimensionality consistent with ``D >= 2**ef``.

    ``rounding="floor"`` returns the weaker integer ``floor(2**ef)``, which
    is how the bound is commonly quoted.
    """
    if not math.isfinite(ef):
        raise ValueError("ef must be finite")
    if ef <= 0:
        return 1
    value = 2.0**ef
    if rounding == "ceil":
        return math.ceil(value)
    if rounding == "floor":
        return max(1, math.floor(value))
    raise ValueError(f"rounding must be 'ceil' or 'floor', got {rounding!r}")
