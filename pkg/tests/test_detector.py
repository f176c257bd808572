import numpy as np
import pytest

from entropic_witness.detector import (SMOOTH, DetectorConfig, RateModel, acquire, acquire_many,
                                       counter_uniform, expected_rates, poisson_rate,
                                       relative_efficiency, stream_key)
from entropic_witness.source import POSITION, GridSpec, Rect, SourceModel


@pytest.fixture
def source():
    return SourceModel.pure_state(1.0, 0.2, total_rate=26_400.0)


def test_full_grid_coincidence_rate_is_total(source):
    grid = source.default_grid(POSITION, "x", 32)
    coinc, _ = expected_rates(source, POSITION, "x", Rect(0, 0, 32, 32), grid, DetectorConfig())
    assert coinc == pytest.approx(source.total_rate, rel=1e-4)


def test_zero_singles_give_no_accidentals(source):
    grid = source.default_grid(POSITION, "x", 16)
    _, acc = expected_rates(source, POSITION, "x", Rect(0, 0, 16, 16), grid, DetectorConfig())
    assert acc == 0.0


def test_full_grid_accidental_rate(source):
    det = DetectorConfig(singles_rate_a=1e5, singles_rate_b=1e5, coincidence_window=1e-9)
    grid = source.default_grid(POSITION, "x", 16)
    _, acc = expected_rates(source, POSITION, "x", Rect(0, 0, 16, 16), grid, det)
    assert acc == pytest.approx(10.0, rel=1e-4)


def test_accidental_model_matches_overlap_simulation():
    # two independent Poisson click streams; count b clicks within +-tau/2 of an a click
    rng = np.random.default_rng(11)
    rate, tau, duration = 1e5, 1e-9, 20.0
    ta = np.sort(rng.uniform(0, duration, rng.poisson(rate * duration)))
    tb = np.sort(rng.uniform(0, duration, rng.poisson(rate * duration)))
    hits = np.searchsorted(tb, ta + tau / 2) - np.searchsorted(tb, ta - tau / 2)
    measured = hits.sum() / duration
    expected = rate * rate * tau
    assert abs(measured - expected) < 4 * np.sqrt(expected / duration)


def test_zero_rate_draws_nothing():
    det = DetectorConfig(rng_seed=5)
    for k in range(20):
        rec = acquire((0.0, 0.0), det, node_id=7, pass_index=k)
        assert rec.coincidences == 0 and rec.accidentals == 0


def test_poisson_moments():
    det = DetectorConfig(acquisition_time=0.5, rng_seed=1)
    n = 10_000
    keys = np.full(n, stream_key(3, "0123"), dtype=np.uint64)
    c, _ = acquire_many(np.full(n, 100.0), np.zeros(n), 1.0, det, keys, np.arange(n, dtype=np.uint64))
    assert abs(c.mean() - 50) < 3 * np.sqrt(50 / n)
    assert c.var(ddof=1) == pytest.approx(c.mean(), rel=0.05)


def test_single_acquire_matches_vectorized():
    det = DetectorConfig(rng_seed=9)
    rec = acquire((100.0, 4.0), det, node_id=123, pass_index=4)
    c, a = acquire_many(np.array([100.0]), np.array([4.0]), 1.0, det,
                        np.array([123], dtype=np.uint64), np.array([4], dtype=np.uint64))
    assert (rec.coincidences, rec.accidentals) == (c[0], a[0])
    assert rec.duration == det.acquisition_time


def test_halving_efficiency_halves_mean():
    det = DetectorConfig(rng_seed=2)
    n = 10_000
    keys = np.arange(n, dtype=np.uint64)
    idx = np.zeros(n, dtype=np.uint64)
    full, _ = acquire_many(np.full(n, 100.0), np.zeros(n), 1.0, det, keys, idx)
    half, _ = acquire_many(np.full(n, 100.0), np.zeros(n), 0.5, det, keys, idx)
    assert half.mean() / full.mean() == pytest.approx(0.5, abs=3 * np.sqrt(25 / n) / 50 + 0.01)


def test_draws_are_deterministic_and_keyed():
    det = DetectorConfig(rng_seed=42)
    a = acquire((1000.0, 10.0), det, "node-a", 0)
    b = acquire((1000.0, 10.0), det, "node-a", 0)
    assert a == b
    u = counter_uniform(42, np.arange(1000, dtype=np.uint64), 0, 0)
    v = counter_uniform(43, np.arange(1000, dtype=np.uint64), 0, 0)
    assert np.all((u > 0) & (u < 1))
    assert not np.array_equal(u, v)


def test_noise_free_returns_expectations():
    det = DetectorConfig(noise_free=True, acquisition_time=0.25)
    rec = acquire((100.0, 8.0), det, 1, 0, efficiency=0.8)
    assert rec.coincidences == pytest.approx(0.8 * 108 * 0.25)
    assert rec.accidentals == pytest.approx(0.8 * 8 * 0.25)


def test_uniform_efficiency_is_one():
    det = DetectorConfig()
    assert relative_efficiency(det, (3, 5, 2, 2), 16) == 1.0


def test_efficiency_is_deterministic():
    det = DetectorConfig(efficiency_model=SMOOTH, rng_seed=4)
    assert relative_efficiency(det, (2, 6, 4, 4), 16) == relative_efficiency(det, (2, 6, 4, 4), 16)


def test_smooth_efficiency_range():
    for seed in range(5):
        det = DetectorConfig(efficiency_model=SMOOTH, rng_seed=seed)
        r, c = np.meshgrid(np.arange(16), np.arange(16), indexing="ij")
        vals = relative_efficiency(det, (r, c, 1, 1), 16)
        assert vals.min() >= 0.8 and vals.max() <= 1.0
        assert vals.std() > 0


def test_rate_model_rectangles():
    rng = np.random.default_rng(0)
    m = rng.random((8, 8))
    m /= m.sum()
    model = RateModel(m, 1000.0)
    assert float(model.mass(2, 3, 4, 2)) == pytest.approx(m[2:6, 3:5].sum())
    coinc, acc = model.rates(0, 0, 8)
    assert float(coinc) == pytest.approx(1000.0)
    assert float(acc) == 0.0


def test_poisson_rate():
    assert poisson_rate(50, 0.5) == (100.0, pytest.approx(np.sqrt(50) / 0.5))
    with pytest.raises(ValueError):
        poisson_rate(1, 0)


def test_bad_detector_config():
    with pytest.raises(ValueError):
        DetectorConfig(acquisition_time=0)
    with pytest.raises(ValueError):
        DetectorConfig(efficiency_model="bumpy")
