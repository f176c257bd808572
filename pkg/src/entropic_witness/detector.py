"""Statistical model of the coincidence-counting apparatus.

Counts are drawn as aggregate Poisson numbers, never as photon streams.
Every draw is keyed by ``(seed, stream, record index, draw)`` through a
splitmix64 hash and converted to a Poisson count by inverse CDF, so a
record does not depend on scan order, on which other nodes exist, or on
how acquisitions are batched.

Accidentals are a flat background: independent pairs land in the
coincidence window at rate ``S_a * S_b * tau`` where ``S_p`` is the party's
singles rate restricted to its interval.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import poisson

from .source import GridSpec, Rect, SourceModel, marginal_masses, pixel_masses

UNIFORM = "uniform"
SMOOTH = "smooth"

_MASK64 = (1 << 64) - 1


@dataclass(frozen=True)
class DetectorConfig:
    acquisition_time: float = 0.5
    coincidence_window: float = 1e-9
    accidental_offset: float = 2e-9     # documentation only; accidentals are modelled, not windowed
    singles_rate_a: float = 0.0
    singles_rate_b: float = 0.0
    efficiency_model: str = UNIFORM
    rng_seed: int = 0
    noise_free: bool = False

    def __post_init__(self):
        if not self.acquisition_time > 0:
            raise ValueError("acquisition_time must be positive")
        if not self.coincidence_window > 0:
            raise ValueError("coincidence_window must be positive")
        if self.singles_rate_a < 0 or self.singles_rate_b < 0:
            raise ValueError("singles rates must be non-negative")
        if self.efficiency_model not in (UNIFORM, SMOOTH):
            raise ValueError(f"efficiency_model must be {UNIFORM!r} or {SMOOTH!r}")
        if not 0 <= int(self.rng_seed) <= _MASK64:
            raise ValueError("rng_seed must fit in 64 unsigned bits")


@dataclass(frozen=True)
class MeasurementRecord:
    coincidences: float
    accidentals: float
    efficiency: float
    duration: float


# -- counter-based uniforms -------------------------------------------------

def _splitmix64(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.uint64)
    with np.errstate(over="ignore"):
        x = x + np.uint64(0x9E3779B97F4A7C15)
        x = (x ^ (x >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
        x = (x ^ (x >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return x ^ (x >> np.uint64(31))


def stream_key(*parts: int | str) -> int:
    """Fold integers and strings into one 64-bit stream identifier."""
    h = np.uint64(0x243F6A8885A308D3)
    for part in parts:
        if isinstance(part, str):
            # length-prefixed so "" and "0" differ
            vals = [len(part)] + [ord(ch) for ch in part]
        else:
            vals = [int(part) & _MASK64]
        for v in vals:
            h = _splitmix64(h ^ np.uint64(v))
    return int(h)


def counter_uniform(seed: int, keys, index, draw: int) -> np.ndarray:
    """Uniform(0, 1) values, one per (key, index) pair, as a pure function of its inputs."""
    keys = np.asarray(keys, dtype=np.uint64)
    index = np.asarray(index, dtype=np.uint64)
    h = _splitmix64(np.uint64(int(seed) & _MASK64) ^ keys)
    h = _splitmix64(h ^ index)
    h = _splitmix64(h ^ np.uint64(draw))
    return ((h >> np.uint64(11)).astype(np.float64) + 0.5) * (1.0 / (1 << 53))


def poisson_from_uniform(u, mean) -> np.ndarray:
    u, mean = np.broadcast_arrays(np.asarray(u, dtype=float), np.asarray(mean, dtype=float))
    out = np.zeros(u.shape)
    pos = mean > 0
    if np.any(pos):
        out[pos] = poisson.ppf(u[pos], mean[pos])
    return out


# -- rates ------------------------------------------------------------------

class RateModel:
    """Expected coincidence and accidental rates for index rectangles of one joint space.

    ``masses`` are pixel probabilities (rows = party a); a summed-area table
    makes every rectangle query O(1).
    """

    def __init__(self, masses: np.ndarray, total_rate: float,
                 marginal_a: np.ndarray | None = None, marginal_b: np.ndarray | None = None,
                 det: DetectorConfig | None = None):
        masses = np.asarray(masses, dtype=float)
        if masses.ndim != 2 or masses.shape[0] != masses.shape[1]:
            raise ValueError("masses must be a square matrix")
        self.n = masses.shape[0]
        self.total_rate = float(total_rate)
        self.det = det or DetectorConfig()
        self._sat = np.zeros((self.n + 1, self.n + 1))
        self._sat[1:, 1:] = masses.cumsum(0).cumsum(1)
        if marginal_a is None:
            marginal_a = masses.sum(axis=1)
        if marginal_b is None:
            marginal_b = masses.sum(axis=0)
        self._cum_a = np.concatenate([[0.0], np.cumsum(marginal_a)])
        self._cum_b = np.concatenate([[0.0], np.cumsum(marginal_b)])

    @classmethod
    def from_source(cls, source: SourceModel, basis: str, component: str, grid: GridSpec,
                    det: DetectorConfig) -> "RateModel":
        marg = marginal_masses(source, basis, component, grid)
        return cls(pixel_masses(source, basis, component, grid), source.total_rate, marg, marg, det)

    def mass(self, rows, cols, heights, widths=None):
        widths = heights if widths is None else widths
        r0, c0 = np.asarray(rows), np.asarray(cols)
        r1, c1 = r0 + np.asarray(heights), c0 + np.asarray(widths)
        s = self._sat
        # summed-area differences can round slightly below zero
        return np.clip(s[r1, c1] - s[r0, c1] - s[r1, c0] + s[r0, c0], 0.0, None)

    def rates(self, rows, cols, heights, widths=None) -> tuple[np.ndarray, np.ndarray]:
        widths = heights if widths is None else widths
        r0, c0 = np.asarray(rows), np.asarray(cols)
        coinc = self.total_rate * self.mass(r0, c0, heights, widths)
        s_a = self.det.singles_rate_a * np.clip(self._cum_a[r0 + np.asarray(heights)] - self._cum_a[r0], 0, None)
        s_b = self.det.singles_rate_b * np.clip(self._cum_b[c0 + np.asarray(widths)] - self._cum_b[c0], 0, None)
        acc = s_a * s_b * self.det.coincidence_window
        return coinc, acc


def expected_rates(source: SourceModel, basis: str, component: str, rect, grid: GridSpec,
                   det: DetectorConfig) -> tuple[float, float]:
    """(coincidence rate, accidental rate) in events/s for one index rectangle."""
    rect = Rect(*rect)
    rect.check(grid)
    model = RateModel.from_source(source, basis, component, grid, det)
    coinc, acc = model.rates(rect.row, rect.col, rect.height, rect.width)
    return float(coinc), float(acc)


# -- efficiencies -----------------------------------------------------------

def _smooth_field_coefficients(seed: int):
    rng = np.random.default_rng([int(seed) & _MASK64, 0x0EFF])
    amp = rng.uniform(0.2, 1.0, size=3)
    freq = rng.uniform(0.3, 1.5, size=(3, 2))
    phase = rng.uniform(0, 2 * np.pi, size=3)
    return amp / amp.sum(), freq, phase


def relative_efficiency(det: DetectorConfig, rect, n: int):
    """Relative coupling efficiency of a rectangle, a smooth function of its centre.

    ``uniform`` gives 1; ``smooth`` gives a seeded field in [0.8, 1.0].
    ``rect`` may hold scalars or arrays.
    """
    row, col, height, width = rect
    row, col = np.asarray(row, dtype=float), np.asarray(col, dtype=float)
    if det.efficiency_model == UNIFORM:
        return np.ones(np.broadcast(row, col).shape) if np.ndim(row) or np.ndim(col) else 1.0
    u = (row + 0.5 * np.asarray(height)) / n
    v = (col + 0.5 * np.asarray(width)) / n
    amp, freq, phase = _smooth_field_coefficients(det.rng_seed)
    field = sum(a * np.sin(2 * np.pi * (f[0] * u + f[1] * v) + p) for a, f, p in zip(amp, freq, phase))
    value = 0.9 + 0.1 * field
    return float(value) if np.ndim(value) == 0 else value


# -- acquisition ------------------------------------------------------------

def acquire_many(coinc_rates, acc_rates, efficiency, det: DetectorConfig, keys, record_index
                 ) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized draws of (C, A) for many nodes, one record each.

    ``keys`` identify the nodes, ``record_index`` is each node's pass index.
    Noise-free detectors return the expectations instead of draws.
    """
    coinc_rates = np.asarray(coinc_rates, dtype=float)
    acc_rates = np.asarray(acc_rates, dtype=float)
    if np.any(coinc_rates < 0) or np.any(acc_rates < 0):
        raise ValueError("rates must be non-negative")
    t = det.acquisition_time
    mean_c = efficiency * (coinc_rates + acc_rates) * t
    mean_a = efficiency * acc_rates * t
    if det.noise_free:
        return np.broadcast_to(mean_c, coinc_rates.shape).astype(float), \
            np.broadcast_to(mean_a, coinc_rates.shape).astype(float)
    u_c = counter_uniform(det.rng_seed, keys, record_index, 0)
    u_a = counter_uniform(det.rng_seed, keys, record_index, 1)
    return poisson_from_uniform(u_c, mean_c), poisson_from_uniform(u_a, mean_a)


def acquire(rates: tuple[float, float], det: DetectorConfig, node_id: int | str, pass_index: int,
            efficiency: float = 1.0) -> MeasurementRecord:
    """One acquisition of length ``det.acquisition_time`` for one node."""
    key = stream_key(node_id) if isinstance(node_id, str) else int(node_id) & _MASK64
    c, a = acquire_many(np.array([rates[0]]), np.array([rates[1]]), efficiency, det,
                        np.array([key], dtype=np.uint64), np.array([pass_index], dtype=np.uint64))
    return MeasurementRecord(float(c[0]), float(a[0]), float(efficiency), det.acquisition_time)


def poisson_rate(counts: float, duration: float) -> tuple[float, float]:
    """Rate estimate and its Poisson standard error."""
    if not duration > 0:
        raise ValueError("duration must be positive")
    return counts / duration, math.sqrt(counts) / duration
