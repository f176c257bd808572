import math

import numpy as np
import pytest

from entropic_witness.source import MOMENTUM, POSITION, GridSpec, SourceModel, discretize, oracle_ef_bound
from entropic_witness.witness import (DegenerateDistributionError, EstimatedDistribution, Leaf, LeafTable,
                                      WitnessResult, check_tiling, coarse_grain, component_split_check,
                                      conditional_entropy, dimensionality_bound, distribution_from_leaves,
                                      ef_bound, max_certifiable, measurement_count_bound, mutual_information)


def _table(rows):
    """rows: (row, col, span, counts[, accidentals]) with eps = 1 and unit time."""
    return LeafTable.from_leaves(
        Leaf(str(i), r, c, s, float(C), float(rest[0]) if rest else 0.0, 1.0, 1.0)
        for i, (r, c, s, C, *rest) in enumerate(rows))


def _dist(matrix, basis, comp, extent=1.0):
    m = np.asarray(matrix, float)
    grid = GridSpec(m.shape[0], extent)
    return EstimatedDistribution(basis, comp, grid, m, _table([(0, 0, m.shape[0], 1.0)]))


# -- estimated distributions --------------------------------------------------

def test_equal_quadrants_give_uniform():
    table = _table([(0, 0, 2, 5), (0, 2, 2, 5), (2, 0, 2, 5), (2, 2, 2, 5)])
    d = distribution_from_leaves(table, GridSpec(4, 1.0), POSITION, "x")
    np.testing.assert_allclose(d.matrix, np.full((4, 4), 1 / 16), rtol=1e-15)


def test_two_level_fill():
    # quadrants {8, 1, 1, 2}; the hot one split into {4, 2, 1, 1}
    table = _table([(0, 0, 1, 4), (0, 1, 1, 2), (1, 0, 1, 1), (1, 1, 1, 1),
                    (0, 2, 2, 1), (2, 0, 2, 1), (2, 2, 2, 2)])
    check_tiling(table, 4)
    d = distribution_from_leaves(table, GridSpec(4, 1.0), POSITION, "x")
    expected = np.array([[4, 2, .25, .25],
                         [1, 1, .25, .25],
                         [.25, .25, .5, .5],
                         [.25, .25, .5, .5]]) / 12
    np.testing.assert_allclose(d.matrix, expected, rtol=1e-14)
    assert abs(d.matrix.sum() - 1) < 1e-12


def test_subtraction_clamps_at_zero():
    table = _table([(0, 0, 1, 7, 7), (0, 1, 1, 3, 9), (1, 0, 1, 4, 0), (1, 1, 1, 4, 1)])
    d = distribution_from_leaves(table, GridSpec(2, 1.0), POSITION, "x", subtract=True)
    assert d.matrix[0, 0] == 0 and d.matrix[0, 1] == 0
    np.testing.assert_allclose(d.matrix[1], [4 / 7, 3 / 7])


def test_all_zero_is_degenerate():
    table = _table([(0, 0, 1, 0), (0, 1, 1, 0), (1, 0, 1, 0), (1, 1, 1, 0)])
    with pytest.raises(DegenerateDistributionError):
        distribution_from_leaves(table, GridSpec(2, 1.0), POSITION, "x")


def test_overlapping_leaves_rejected():
    with pytest.raises(ValueError):
        check_tiling(_table([(0, 0, 2, 1), (0, 0, 1, 1)]), 2)


# -- entropies ----------------------------------------------------------------

def test_identity_has_zero_conditional_entropy():
    assert conditional_entropy(np.eye(4) / 4) == 0.0


def test_uniform_conditional_entropy():
    assert conditional_entropy(np.full((8, 8), 1 / 64)) == pytest.approx(3.0, abs=1e-12)


def test_conditional_entropy_direct_sum():
    rng = np.random.default_rng(12)
    p = rng.random((5, 5))
    p /= p.sum()
    pb = p.sum(axis=0)
    direct = -sum(p[a, b] * math.log2(p[a, b] / pb[b]) for a in range(5) for b in range(5))
    assert conditional_entropy(p) == pytest.approx(direct, abs=1e-12)


def test_conditions_on_second_index():
    # a is determined by b, but b is not determined by a
    p = np.array([[0.5, 0.25], [0.0, 0.25]])
    assert conditional_entropy(p) == pytest.approx(0.5 * 1.0, abs=1e-12)
    assert conditional_entropy(p.T) == pytest.approx(0.75 * (-(2 / 3) * math.log2(2 / 3) - (1 / 3) * math.log2(1 / 3)))


def test_product_has_no_mutual_information():
    rng = np.random.default_rng(5)
    p, q = rng.random(6), rng.random(6)
    joint = np.outer(p / p.sum(), q / q.sum())
    assert abs(mutual_information(joint)) < 1e-12


def test_identity_mutual_information():
    assert mutual_information(np.eye(16) / 16) == pytest.approx(4.0, abs=1e-12)


# -- coarse graining ----------------------------------------------------------

def test_singletons_are_identity():
    rng = np.random.default_rng(1)
    m = rng.random((4, 4))
    blocks = [(r, c, 1, 1) for r in range(4) for c in range(4)]
    np.testing.assert_array_equal(coarse_grain(m, blocks), m)


def test_whole_block_is_uniform():
    rng = np.random.default_rng(2)
    m = rng.random((8, 8))
    m /= m.sum()
    out = coarse_grain(m, [(0, 0, 8, 8)])
    np.testing.assert_allclose(out, np.full((8, 8), 1 / 64))
    assert conditional_entropy(out) == pytest.approx(3.0, abs=1e-12)


def test_non_tiling_partition_rejected():
    with pytest.raises(ValueError):
        coarse_grain(np.ones((4, 4)), [(0, 0, 2, 2), (2, 2, 2, 2)])
    with pytest.raises(ValueError):
        coarse_grain(np.ones((4, 4)), [(0, 0, 4, 4), (0, 0, 1, 1)])


def test_mixed_tiling_can_lower_conditional_entropy():
    # an unsplit 2x2 quadrant next to single pixels moves mass between
    # columns, so the conditioning marginal changes
    p = np.array([[0, 1, 3, 0], [0, 3, 0, 0], [0, 3, 1, 0], [0, 0, 0, 0]]) / 11
    blocks = [(0, 0, 2, 2)] + [(r, c, 1, 1) for r in range(4) for c in range(4) if r >= 2 or c >= 2]
    q = coarse_grain(p, blocks)
    assert conditional_entropy(p) - conditional_entropy(q) == pytest.approx(0.11699604343663195, rel=1e-12)
    assert mutual_information(q) - mutual_information(p) == pytest.approx(0.039291227775418935, rel=1e-12)


def test_coarse_grain_keeps_dataclass():
    d = _dist(np.eye(4) / 4, POSITION, "x")
    out = coarse_grain(d, [(r, c, 2, 2) for r in (0, 2) for c in (0, 2)])
    assert isinstance(out, EstimatedDistribution)
    assert out.matrix.sum() == pytest.approx(1.0)
    assert conditional_entropy(out) == pytest.approx(1.0)


# -- component split ----------------------------------------------------------

def test_separable_split_is_tight():
    rng = np.random.default_rng(8)
    px, py = rng.random((3, 3)), rng.random((3, 3))
    joint = np.einsum("ac,bd->abcd", px / px.sum(), py / py.sum())
    lhs, rhs = component_split_check(joint)
    assert abs(lhs - rhs) < 1e-12


def test_permutation_coupling():
    joint = np.zeros((3, 3, 3, 3))
    for xa in range(3):
        for ya in range(3):
            joint[xa, ya, (xa + 1) % 3, (ya + 2) % 3] = 1 / 9
    lhs, rhs = component_split_check(joint)
    assert abs(lhs) < 1e-15 and lhs <= rhs


# -- witness ------------------------------------------------------------------

def test_zero_entropies_reach_maximum():
    deltas = {"x": (0.01, 0.2), "y": (0.02, 0.3)}
    dists = []
    for c, (dx, dk) in deltas.items():
        dists.append(_dist(np.eye(8) / 8, POSITION, c, extent=8 * dx))
        dists.append(_dist(np.eye(8)[::-1] / 8, MOMENTUM, c, extent=8 * dk))
    res = ef_bound(dists)
    assert res.ef_bound == pytest.approx(max_certifiable(0.01, 0.02, 0.2, 0.3), abs=1e-12)


def test_uncorrelated_is_negative():
    n = 8
    dists = []
    for c in ("x", "y"):
        dists.append(_dist(np.full((n, n), 1 / n**2), POSITION, c, extent=n * 1.0))
        dists.append(_dist(np.full((n, n), 1 / n**2), MOMENTUM, c, extent=n * 2 * math.pi / n))
    res = ef_bound(dists)
    assert res.ef_bound == pytest.approx(2 * (math.log2(n) - 2 * math.log2(n)), abs=1e-12)
    assert res.ef_bound < 0


def test_dense_grid_matches_oracle():
    src = SourceModel.pure_state(1.0, 0.2, 0.8, 0.15)
    grids = {(b, c): src.default_grid(b, c, 32) for b in (POSITION, MOMENTUM) for c in ("x", "y")}
    res = ef_bound(discretize(src, b, c, g) for (b, c), g in grids.items())
    assert res.ef_bound == pytest.approx(oracle_ef_bound(src, grids), abs=1e-12)


def test_mismatched_components_rejected():
    with pytest.raises(ValueError):
        ef_bound([_dist(np.eye(2) / 2, POSITION, "x")])
    d = _dist(np.eye(2) / 2, POSITION, "x")
    with pytest.raises(ValueError):
        ef_bound([d, d, _dist(np.eye(2) / 2, MOMENTUM, "x")])


def test_witness_result_roundtrip():
    res = WitnessResult({(POSITION, "x"): 0.5, (MOMENTUM, "x"): 0.25}, {"x": 3.0}, sigma=0.1)
    assert res.ef_bound == 2.25
    back = WitnessResult.from_dict(res.to_dict())
    assert back.ef_bound == res.ef_bound and back.sigma == res.sigma


# -- closed forms -------------------------------------------------------------

def test_max_certifiable_at_fourier_limit():
    assert max_certifiable(1.0, 1.0, 2 * math.pi, 2 * math.pi) == pytest.approx(0.0, abs=1e-12)


def test_max_certifiable_n512():
    d = 2 * math.pi / 512
    assert max_certifiable(1.0, 1.0, d, d) == pytest.approx(18.0, abs=1e-12)


def test_max_certifiable_rejects_odd_counts():
    with pytest.raises(ValueError):
        max_certifiable(1.0, 2.0, 3.0)


@pytest.mark.parametrize("n, count", [(512, 6012), (8, 36), (16, 120)])
def test_measurement_count_bound(n, count):
    assert measurement_count_bound(n) == count


def test_measurement_count_near_quoted_value():
    # the formula gives 6012 at n = 512; the rounded figure usually quoted is 6096
    assert measurement_count_bound(512) == pytest.approx(6096, rel=0.015)


def test_dimensionality_bound():
    assert dimensionality_bound(7.11) == 139
    assert dimensionality_bound(7.11, "floor") == 138
    assert dimensionality_bound(3.43, "floor") == 10
    assert dimensionality_bound(3.43) == 11
    assert dimensionality_bound(0.0) == 1
    assert dimensionality_bound(-2.5) == 1
