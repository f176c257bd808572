"""Double-Gaussian model of a spatially entangled photon-pair source.

Each transverse component (x or y) is described by two joint densities,
one in the position basis and one in the momentum basis.  In rotated
coordinates ``u = a + b`` and ``v = a - b`` both are products of two
independent Gaussians::

    rho(a, b) = exp(-(a + b)**2 / (2 s_sum**2) - (a - b)**2 / (2 s_diff**2)) / (pi s_sum s_diff)

Position: ``s_sum`` broad, ``s_diff`` narrow (positive correlation).
Momentum: ``s_sum`` narrow, ``s_diff`` broad (anti-correlation).

For a pure double-Gaussian amplitude the momentum widths are the inverse
of the position widths, ``k_sigma_sum = 1 / sigma_sum`` and
``k_sigma_diff = 1 / sigma_diff`` (k = p / hbar).  :func:`fourier_dual_widths`
recovers this numerically from an FFT of the two-photon amplitude.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy.special import ndtr, owens_t

POSITION = "position"
MOMENTUM = "momentum"
BASES = (POSITION, MOMENTUM)
COMPONENTS = ("x", "y")

DEFAULT_TOTAL_RATE = 26_400.0
EXTENT_WIDTHS = 8.0


def _check_basis(basis: str, component: str) -> None:
    if basis not in BASES:
        raise ValueError(f"unknown basis {basis!r}; expected one of {BASES}")
    if component not in COMPONENTS:
        raise ValueError(f"unknown component {component!r}; expected one of {COMPONENTS}")


@dataclass(frozen=True)
class SourceModel:
    """Widths of the double-Gaussian joint densities plus the total pair rate.

    Position widths are lengths (m), momentum widths are spatial
    frequencies (rad/m), ``total_rate`` is the all-mirrors-on coincidence
    rate (1/s).
    """

    sigma_sum_x: float
    sigma_diff_x: float
    k_sigma_sum_x: float
    k_sigma_diff_x: float
    sigma_sum_y: float
    sigma_diff_y: float
    k_sigma_sum_y: float
    k_sigma_diff_y: float
    total_rate: float = DEFAULT_TOTAL_RATE

    def __post_init__(self):
        for name in ("sigma_sum_x", "sigma_diff_x", "k_sigma_sum_x", "k_sigma_diff_x",
                     "sigma_sum_y", "sigma_diff_y", "k_sigma_sum_y", "k_sigma_diff_y"):
            value = getattr(self, name)
            if not (np.isfinite(value) and value > 0):
                raise ValueError(f"{name} must be a positive finite width, got {value!r}")
        if not self.total_rate >= 0:
            raise ValueError(f"total_rate must be non-negative, got {self.total_rate!r}")
        for c in COMPONENTS:
            s_sum, s_diff = self.widths(POSITION, c)
            k_sum, k_diff = self.widths(MOMENTUM, c)
            if s_diff > s_sum:
                raise ValueError(f"position widths for {c}: sigma_diff must not exceed sigma_sum")
            if k_sum > k_diff:
                raise ValueError(f"momentum widths for {c}: k_sigma_sum must not exceed k_sigma_diff")
            # hbar = 1 uncertainty products for each conjugate pair
            if s_sum * k_sum < 0.5 or s_diff * k_diff < 0.5:
                raise ValueError(f"widths for {c} violate the uncertainty product >= 1/2")

    @classmethod
    def pure_state(cls, sigma_sum_x: float, sigma_diff_x: float,
                   sigma_sum_y: float | None = None, sigma_diff_y: float | None = None,
                   total_rate: float = DEFAULT_TOTAL_RATE) -> "SourceModel":
        """Source whose momentum widths are the Fourier duals of the position widths."""
        sigma_sum_y = sigma_sum_x if sigma_sum_y is None else sigma_sum_y
        sigma_diff_y = sigma_diff_x if sigma_diff_y is None else sigma_diff_y
        return cls(
            sigma_sum_x=sigma_sum_x, sigma_diff_x=sigma_diff_x,
            k_sigma_sum_x=1.0 / sigma_sum_x, k_sigma_diff_x=1.0 / sigma_diff_x,
            sigma_sum_y=sigma_sum_y, sigma_diff_y=sigma_diff_y,
            k_sigma_sum_y=1.0 / sigma_sum_y, k_sigma_diff_y=1.0 / sigma_diff_y,
            total_rate=total_rate,
        )

    @classmethod
    def from_pump(cls, waist_x: float = 356e-6, waist_y: float = 334e-6,
                  crystal_length: float = 3e-3, pump_wavelength: float = 405e-9,
                  total_rate: float = DEFAULT_TOTAL_RATE) -> "SourceModel":
        """Pure-state source from pump waist and crystal length.

        Uses the usual Gaussian stand-ins: the sum coordinate follows the
        pump intensity profile (``sigma_sum = waist``) and the phase-matching
        sinc is replaced by a Gaussian of width
        ``sigma_diff = sqrt(crystal_length * pump_wavelength / (2 pi))``.
        With the defaults this gives sigma_sum/sigma_diff of about 26 (x).
        """
        sigma_diff = math.sqrt(crystal_length * pump_wavelength / (2 * math.pi))
        return cls.pure_state(waist_x, sigma_diff, waist_y, sigma_diff, total_rate=total_rate)

    def widths(self, basis: str, component: str) -> tuple[float, float]:
        """(sum-coordinate width, difference-coordinate width) for one joint density."""
        _check_basis(basis, component)
        if basis == POSITION:
            return getattr(self, f"sigma_sum_{component}"), getattr(self, f"sigma_diff_{component}")
        return getattr(self, f"k_sigma_sum_{component}"), getattr(self, f"k_sigma_diff_{component}")

    def default_extent(self, basis: str, component: str) -> float:
        """Window spanning 8 of the broad widths, centred on zero."""
        s_sum, s_diff = self.widths(basis, component)
        return EXTENT_WIDTHS * max(s_sum, s_diff)

    def default_grid(self, basis: str, component: str, n: int) -> "GridSpec":
        return GridSpec(n, self.default_extent(basis, component))


@dataclass(frozen=True)
class GridSpec:
    """``n`` pixels of size ``extent / n`` on ``[-extent/2, extent/2]``."""

    n: int
    extent: float

    def __post_init__(self):
        n = self.n
        if isinstance(n, bool) or int(n) != n or n < 2 or (int(n) & (int(n) - 1)):
            raise ValueError(f"grid size must be a power of two >= 2, got {n!r}")
        object.__setattr__(self, "n", int(n))
        if not (np.isfinite(self.extent) and self.extent > 0):
            raise ValueError(f"grid extent must be positive, got {self.extent!r}")

    @property
    def delta(self) -> float:
        return self.extent / self.n

    @property
    def depth(self) -> int:
        return self.n.bit_length() - 1

    def edges(self) -> np.ndarray:
        return -0.5 * self.extent + self.delta * np.arange(self.n + 1)

    def centers(self) -> np.ndarray:
        return -0.5 * self.extent + self.delta * (np.arange(self.n) + 0.5)


class Rect(NamedTuple):
    """Half-open index rectangle: rows ``[row, row + height)``, cols ``[col, col + width)``."""

    row: int
    col: int
    height: int
    width: int

    @classmethod
    def square(cls, row: int, col: int, span: int) -> "Rect":
        return cls(row, col, span, span)

    def check(self, grid: GridSpec) -> None:
        if (self.row < 0 or self.col < 0 or self.height < 0 or self.width < 0
                or self.row + self.height > grid.n or self.col + self.width > grid.n):
            raise ValueError(f"rectangle {tuple(self)} lies outside the {grid.n}x{grid.n} grid")


@dataclass(frozen=True)
class JointDistribution:
    basis: str
    component: str
    grid: GridSpec
    matrix: np.ndarray = field(repr=False)

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=float)
        if m.shape != (self.grid.n, self.grid.n):
            raise ValueError(f"matrix shape {m.shape} does not match grid n={self.grid.n}")
        if np.any(m < 0):
            raise ValueError("joint distribution has negative entries")
        if abs(m.sum() - 1.0) > 1e-12:
            raise ValueError(f"joint distribution sums to {m.sum()!r}, not 1")
        object.__setattr__(self, "matrix", m)


def joint_density(source: SourceModel, basis: str, component: str, u_a, u_b):
    """Joint probability density at party coordinates ``(u_a, u_b)``; broadcasts."""
    s_sum, s_diff = source.widths(basis, component)
    u_a = np.asarray(u_a, dtype=float)
    u_b = np.asarray(u_b, dtype=float)
    expo = -((u_a + u_b) ** 2) / (2 * s_sum**2) - ((u_a - u_b) ** 2) / (2 * s_diff**2)
    return np.exp(expo) / (np.pi * s_sum * s_diff)


def _conditional_moments(s_sum: float, s_diff: float) -> tuple[float, float, float]:
    """(slope of E[a|b], std of a given b, marginal std of b)."""
    s2, d2 = s_sum**2, s_diff**2
    slope = (s2 - d2) / (s2 + d2)
    cond_std = s_sum * s_diff / math.sqrt(s2 + d2)
    marg_std = 0.5 * math.sqrt(s2 + d2)
    return slope, cond_std, marg_std


def _bvn_cdf(h: np.ndarray, k: np.ndarray, rho: float, r: float) -> np.ndarray:
    """Standard bivariate normal CDF through Owen's T; ``r = sqrt(1 - rho**2)`` given separately."""
    h, k = np.broadcast_arrays(np.asarray(h, dtype=float), np.asarray(k, dtype=float))
    with np.errstate(divide="ignore", invalid="ignore"):
        t_h = owens_t(h, (k - rho * h) / (h * r))
        t_k = owens_t(k, (h - rho * k) / (k * r))
    # T(0, a) = arctan(a) / (2 pi); on an axis the second argument is +-inf
    corner = math.atan((1 - rho) / r) / (2 * math.pi)
    t_h = np.where(h == 0, np.where(k == 0, corner, 0.25 * np.sign(k)), t_h)
    t_k = np.where(k == 0, np.where(h == 0, corner, 0.25 * np.sign(h)), t_k)
    hk = h * k
    beta = np.where((hk > 0) | ((hk == 0) & (h + k >= 0)), 0.0, 0.5)
    return 0.5 * (ndtr(h) + ndtr(k)) - t_h - t_k - beta


def _pixel_masses(s_sum: float, s_diff: float, edges_a: np.ndarray, edges_b: np.ndarray) -> np.ndarray:
    """Probability of every pixel ``[edges_a[i], edges_a[i+1]) x [edges_b[j], edges_b[j+1])``.

    Both parties are N(0, m**2) with correlation
    ``rho = (s_sum**2 - s_diff**2) / (s_sum**2 + s_diff**2)``, so pixel
    masses are exact second differences of the bivariate normal CDF.  This
    stays accurate when one width is far below the pixel size.  Masses are
    not renormalized.
    """
    s2, d2 = s_sum**2, s_diff**2
    rho = (s2 - d2) / (s2 + d2)
    r = 2 * s_sum * s_diff / (s2 + d2)
    marg_std = 0.5 * math.sqrt(s2 + d2)
    h = np.asarray(edges_a, dtype=float) / marg_std
    k = np.asarray(edges_b, dtype=float) / marg_std
    cdf = _bvn_cdf(h[:, None], k[None, :], rho, r)
    return np.clip(np.diff(np.diff(cdf, axis=0), axis=1), 0.0, None)


def pixel_masses(source: SourceModel, basis: str, component: str, grid: GridSpec) -> np.ndarray:
    """Unnormalized probability of every pixel of the ``n x n`` grid (rows = party a)."""
    s_sum, s_diff = source.widths(basis, component)
    edges = grid.edges()
    return _pixel_masses(s_sum, s_diff, edges, edges)


def region_probability(source: SourceModel, basis: str, component: str,
                       rect: Rect | tuple, grid: GridSpec) -> float:
    """Probability that party a lands in the rect's rows and party b in its columns."""
    rect = Rect(*rect)
    rect.check(grid)
    if rect.height == 0 or rect.width == 0:
        return 0.0
    s_sum, s_diff = source.widths(basis, component)
    edges = grid.edges()
    masses = _pixel_masses(s_sum, s_diff,
                           edges[rect.row:rect.row + rect.height + 1],
                           edges[rect.col:rect.col + rect.width + 1])
    return float(masses.sum())


def marginal_masses(source: SourceModel, basis: str, component: str, grid: GridSpec) -> np.ndarray:
    """Single-party probability per pixel (both parties share the same marginal)."""
    s_sum, s_diff = source.widths(basis, component)
    _, _, marg_std = _conditional_moments(s_sum, s_diff)
    return np.diff(ndtr(grid.edges() / marg_std))


def discretize(source: SourceModel, basis: str, component: str, grid: GridSpec) -> JointDistribution:
    masses = pixel_masses(source, basis, component, grid)
    return JointDistribution(basis, component, grid, masses / masses.sum())


def default_grids(source: SourceModel, n: int) -> dict[tuple[str, str], GridSpec]:
    return {(b, c): source.default_grid(b, c, n) for b in BASES for c in COMPONENTS}


def gaussian_conditional_variance(source: SourceModel, basis: str, component: str) -> float:
    s_sum, s_diff = source.widths(basis, component)
    return _conditional_moments(s_sum, s_diff)[1] ** 2


def gaussian_continuous_bound(source: SourceModel) -> float:
    """Continuous-variable witness value from differential conditional entropies.

    sum_i [log2(2 pi) - h(x_a|x_b) - h(k_a|k_b)] with
    h = 0.5 log2(2 pi e var_cond) for Gaussian conditionals.
    """
    total = 0.0
    for c in COMPONENTS:
        total += math.log2(2 * math.pi)
        for b in BASES:
            var = gaussian_conditional_variance(source, b, c)
            total -= 0.5 * math.log2(2 * math.pi * math.e * var)
    return total


def oracle_ef_bound(source: SourceModel, grids: dict[tuple[str, str], GridSpec] | None = None,
                    n: int | None = None) -> float:
    """Witness evaluated on exact discretized distributions (no sampling)."""
    from .witness import conditional_entropy

    if grids is None:
        if n is None:
            raise ValueError("pass either grids or n")
        grids = default_grids(source, n)
    total = 0.0
    for c in COMPONENTS:
        gx, gk = grids[(POSITION, c)], grids[(MOMENTUM, c)]
        total += math.log2(2 * math.pi / (gx.delta * gk.delta))
        total -= conditional_entropy(discretize(source, POSITION, c, gx).matrix)
        total -= conditional_entropy(discretize(source, MOMENTUM, c, gk).matrix)
    return total


def fourier_dual_widths(sigma_sum: float, sigma_diff: float, n: int = 256,
                        window: float = 12.0) -> tuple[float, float]:
    """Numerically Fourier transform the two-photon amplitude.

    The amplitude ``sqrt(rho)`` of the position density is sampled on an
    ``n x n`` grid spanning ``window`` broad widths, transformed with a 2-D
    FFT, and the standard deviations of ``k_a + k_b`` and ``k_a - k_b``
    under ``|FT|**2`` are returned as ``(k_sigma_sum, k_sigma_diff)``.
    The grid must resolve ``sigma_diff``; keep ``sigma_sum / sigma_diff``
    below about ``n / (2 window)``.
    """
    extent = window * sigma_sum
    dx = extent / n
    x = (np.arange(n) - n // 2) * dx
    xa, xb = np.meshgrid(x, x, indexing="ij")
    amp = np.exp(-((xa + xb) ** 2) / (4 * sigma_sum**2) - ((xa - xb) ** 2) / (4 * sigma_diff**2))
    power = np.abs(np.fft.fftshift(np.fft.fft2(np.fft.ifftshift(amp)))) ** 2
    k = 2 * np.pi * np.fft.fftshift(np.fft.fftfreq(n, d=dx))
    ka, kb = np.meshgrid(k, k, indexing="ij")
    w = power / power.sum()
    k_sum = math.sqrt(float(np.sum(w * (ka + kb) ** 2)))
    k_diff = math.sqrt(float(np.sum(w * (ka - kb) ** 2)))
    return k_sum, k_diff
