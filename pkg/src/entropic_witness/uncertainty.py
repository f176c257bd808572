"""Poisson counting uncertainty of the witness value.

Two routes: first-order propagation with analytic partial derivatives of
the witness with respect to every pooled leaf count, and a parametric
bootstrap that redraws each pooled count from a Poisson law centred on
the measured value.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from .source import MOMENTUM, POSITION, GridSpec
from .witness import (LeafTable, conditional_entropy, distribution_from_leaves, fill_matrix,
                      log_term)

PROPAGATION = "propagation"
MONTE_CARLO = "montecarlo"


class LeafSet(NamedTuple):
    """The pooled leaves of one joint distribution, detached from its tree."""

    basis: str
    component: str
    grid: GridSpec
    table: LeafTable


def leaf_sets(trees, max_records: int | None = None) -> list[LeafSet]:
    out = []
    for t in trees:
        if isinstance(t, LeafSet):
            out.append(t)
        else:
            out.append(LeafSet(t.basis, t.component, t.grid, t.leaf_table(max_records=max_records)))
    return out


@dataclass
class UncertaintyReport:
    ef_mean: float
    ef_sigma: float
    method: str
    subtract: bool = False
    trials: int | None = None
    sensitivities: dict[str, tuple[np.ndarray, np.ndarray]] | None = field(default=None, repr=False)
    samples: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.ef_sigma < 0:
            raise ValueError("ef_sigma must be non-negative")
        if self.method == MONTE_CARLO and (self.trials is None or self.trials < 2):
            raise ValueError("Monte Carlo reports need at least two trials")

    def to_dict(self) -> dict:
        d = {"ef_mean": self.ef_mean, "ef_sigma": self.ef_sigma, "method": self.method,
             "subtract": self.subtract}
        if self.trials is not None:
            d["trials"] = self.trials
        return d


def log_terms(sets: Sequence[LeafSet]) -> dict[str, float]:
    grids = {(s.basis, s.component): s.grid for s in sets}
    comps = sorted({c for _, c in grids})
    for c in comps:
        if (POSITION, c) not in grids or (MOMENTUM, c) not in grids:
            raise ValueError(f"component {c!r} needs both a position and a momentum distribution")
    return {c: log_term(grids[(POSITION, c)], grids[(MOMENTUM, c)]) for c in comps}


def ef_from_leaf_sets(sets: Sequence[LeafSet], subtract: bool = False) -> float:
    total = math.fsum(log_terms(sets).values())
    for s in sets:
        dist = distribution_from_leaves(s.table, s.grid, s.basis, s.component, subtract)
        total -= conditional_entropy(dist.matrix)
    return total


def conditional_entropy_gradient(table: LeafTable, n: int, subtract: bool = False
                                 ) -> tuple[float, np.ndarray, np.ndarray]:
    """H(A|B) of the filled estimate and its partials w.r.t. pooled C and A.

    With leaf weights ``q_k = r_k / Z`` spread over areas ``a_k``,
    ``dH/dq_k = -log2(q_k / a_k) + mean(log2 m_b over the leaf's columns)``
    up to a constant that normalization removes, and
    ``dH/dr_j = (g_j - sum_k q_k g_k) / Z``.  Leaves with zero (or clamped)
    rate get zero partials: their counts carry no variance, or the clamp
    is active.
    """
    net = table.counts - table.accidentals if subtract else table.counts
    active = net > 0
    scale = 1.0 / (table.efficiency * table.total_time)
    r = np.where(active, net, 0.0) * scale
    z = r.sum()
    if not z > 0:
        raise ValueError("all leaf rates are zero")
    q = r / z
    m = fill_matrix(table, n, q)
    col = m.sum(axis=0)
    h = conditional_entropy(m)
    with np.errstate(divide="ignore"):
        log_col = np.where(col > 0, np.log2(np.where(col > 0, col, 1.0)), 0.0)
    cum = np.concatenate([[0.0], np.cumsum(log_col)])
    spans = table.spans.astype(float)
    mean_log = (cum[table.cols + table.spans] - cum[table.cols]) / spans
    g = np.zeros_like(q)
    g[active] = -np.log2(q[active] / spans[active] ** 2) + mean_log[active]
    dh_dr = (g - math.fsum(q * g)) / z
    dh_dc = np.where(active, dh_dr * scale, 0.0)
    dh_da = -dh_dc if subtract else np.zeros_like(dh_dc)
    return h, dh_dc, dh_da


def poisson_sigma(sensitivities, counts) -> float:
    """sqrt(sum (df/dC_i)**2 C_i) for independent Poisson counts."""
    s = np.asarray(sensitivities, dtype=float)
    c = np.asarray(counts, dtype=float)
    return math.sqrt(math.fsum((s * s * c).ravel()))


def propagate_error(trees, subtract: bool = False, max_records: int | None = None
                    ) -> UncertaintyReport:
    """Witness value with first-order Poisson error propagated through every leaf count."""
    sets = leaf_sets(trees, max_records)
    ef = math.fsum(log_terms(sets).values())
    var_terms = []
    sens = {}
    for s in sets:
        h, dh_dc, dh_da = conditional_entropy_gradient(s.table, s.grid.n, subtract)
        ef -= h
        de_dc, de_da = -dh_dc, -dh_da
        sens[f"{s.basis}/{s.component}"] = (de_dc, de_da)
        var_terms.append(poisson_sigma(de_dc, s.table.counts) ** 2)
        if subtract:
            var_terms.append(poisson_sigma(de_da, s.table.accidentals) ** 2)
    return UncertaintyReport(ef, math.sqrt(math.fsum(var_terms)), PROPAGATION, subtract,
                             sensitivities=sens)


def monte_carlo(trees, subtract: bool = False, trials: int = 100, seed: int = 0,
                max_records: int | None = None) -> UncertaintyReport:
    """Parametric bootstrap: redraw every pooled count as Poisson(measured count).

    Trial ``t`` uses its own substream of ``seed``, so results do not depend
    on how trials are scheduled.
    """
    if trials < 2:
        raise ValueError("need at least two Monte Carlo trials")
    sets = leaf_sets(trees, max_records)
    streams = np.random.SeedSequence(int(seed)).spawn(trials)
    samples = np.empty(trials)
    for t, ss in enumerate(streams):
        rng = np.random.default_rng(ss)
        redrawn = []
        for s in sets:
            c = rng.poisson(s.table.counts).astype(float)
            a = rng.poisson(s.table.accidentals).astype(float) if subtract else s.table.accidentals
            redrawn.append(s._replace(table=s.table.with_counts(c, a)))
        samples[t] = ef_from_leaf_sets(redrawn, subtract)
    return UncertaintyReport(float(np.mean(samples)), float(np.std(samples, ddof=1)), MONTE_CARLO,
                             subtract, trials=trials, samples=samples)
