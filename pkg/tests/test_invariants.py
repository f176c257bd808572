"""Property-based checks of invariants that should hold for any input."""

import math

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from entropic_witness.detector import counter_uniform, poisson_from_uniform
from entropic_witness.source import GridSpec, POSITION
from entropic_witness.witness import (Leaf, LeafTable, coarse_grain, conditional_entropy,
                                      distribution_from_leaves, fill_matrix, mutual_information)

SLACK = 1e-12


def random_quadtree(rng, n, p_split=0.55):
    blocks, stack = [], [(0, 0, n)]
    while stack:
        r, c, s = stack.pop()
        if s > 1 and rng.random() < p_split:
            h = s // 2
            stack += [(r, c, h), (r, c + h, h), (r + h, c, h), (r + h, c + h, h)]
        else:
            blocks.append((r, c, s, s))
    return blocks


distributions = st.integers(1, 5).flatmap(
    lambda k: st.tuples(st.just(2**k), st.integers(0, 2**32 - 1)))


@settings(max_examples=150, deadline=None)
@given(distributions)
def test_entropy_bounds(case):
    n, seed = case
    rng = np.random.default_rng(seed)
    p = rng.random((n, n)) ** 3
    p /= p.sum()
    h = conditional_entropy(p)
    assert -SLACK <= h <= math.log2(n) + SLACK
    assert mutual_information(p) >= -SLACK


def random_intervals(rng, n):
    cuts = np.flatnonzero(rng.random(n - 1) < 0.4) + 1
    edges = [0, *cuts.tolist(), n]
    return list(zip(edges[:-1], edges[1:]))


@settings(max_examples=150, deadline=None)
@given(distributions)
def test_product_coarse_graining(case):
    # independent row and column partitions: a local operation on each side
    n, seed = case
    rng = np.random.default_rng(seed)
    p = rng.dirichlet(np.full(n * n, 0.3)).reshape(n, n)
    rows, cols = random_intervals(rng, n), random_intervals(rng, n)
    blocks = [(r0, c0, r1 - r0, c1 - c0) for r0, r1 in rows for c0, c1 in cols]
    q = coarse_grain(p, blocks)
    assert conditional_entropy(q) >= conditional_entropy(p) - SLACK
    assert mutual_information(q) <= mutual_information(p) + SLACK


@settings(max_examples=150, deadline=None)
@given(distributions)
def test_column_aligned_coarse_graining(case):
    # every column sees one column interval, rows split freely per band
    n, seed = case
    rng = np.random.default_rng(seed)
    p = rng.dirichlet(np.full(n * n, 0.3)).reshape(n, n)
    blocks = [(r0, c0, r1 - r0, c1 - c0) for c0, c1 in random_intervals(rng, n)
              for r0, r1 in random_intervals(rng, n)]
    q = coarse_grain(p, blocks)
    assert conditional_entropy(q) >= conditional_entropy(p) - SLACK


@settings(max_examples=150, deadline=None)
@given(distributions)
def test_quadtree_coarse_graining_preserves_mass(case):
    n, seed = case
    rng = np.random.default_rng(seed)
    p = rng.dirichlet(np.full(n * n, 0.3)).reshape(n, n)
    blocks = random_quadtree(rng, n)
    q = coarse_grain(p, blocks)
    assert abs(q.sum() - 1) < 1e-12
    np.testing.assert_allclose(coarse_grain(q, blocks), q, rtol=0, atol=1e-15)


@settings(max_examples=100, deadline=None)
@given(distributions)
def test_estimate_is_normalized_and_piecewise_constant(case):
    n, seed = case
    rng = np.random.default_rng(seed)
    blocks = random_quadtree(rng, n)
    table = LeafTable.from_leaves(
        Leaf(str(i), r, c, s, float(rng.integers(0, 50)), float(rng.integers(0, 5)),
             float(rng.uniform(0.8, 1.0)), 0.5 * int(rng.integers(1, 4)))
        for i, (r, c, s, _) in enumerate(blocks))
    if not np.any(table.counts > table.accidentals):
        return
    for subtract in (False, True):
        d = distribution_from_leaves(table, GridSpec(n, 1.0), POSITION, "x", subtract)
        assert abs(d.matrix.sum() - 1) < 1e-12
        assert np.all(d.matrix >= 0)
        # rebuilt from the leaves alone
        rates = table.rates(subtract)
        np.testing.assert_allclose(fill_matrix(table, n, rates / rates.sum()), d.matrix, rtol=0, atol=0)
        for r, c, s in zip(table.rows, table.cols, table.spans):
            block = d.matrix[r:r + s, c:c + s]
            assert np.all(block == block[0, 0])


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**64 - 1), st.integers(0, 2**20), st.floats(0.0, 1e4))
def test_counter_rng(seed, index, mean):
    keys = np.arange(64, dtype=np.uint64)
    u = counter_uniform(seed, keys, index, 0)
    assert np.all((u > 0) & (u < 1))
    np.testing.assert_array_equal(u, counter_uniform(seed, keys, index, 0))
    draws = poisson_from_uniform(u, mean)
    assert np.all(draws >= 0) and np.all(draws == np.floor(draws))
    if mean == 0:
        assert np.all(draws == 0)
