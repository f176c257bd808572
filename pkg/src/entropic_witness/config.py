"""Experiment configuration: flat ``section.key = value`` text.

Blank lines and ``#`` comments are ignored.  Values are numbers, ``true`` /
``false``, or bare / quoted strings.  Unknown keys and out-of-range values
are rejected with the file name and line number.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Callable

from .detector import SMOOTH, UNIFORM, DetectorConfig
from .quadtree import SamplerParams
from .source import BASES, COMPONENTS, GridSpec, SourceModel


class ConfigError(ValueError):
    pass


def _positive(v):
    return v > 0


def _nonneg(v):
    return v >= 0


def _unit(v):
    return 0 <= v <= 1


def _frac(v):
    return 0 < v <= 1


def _pow2(v):
    return v >= 2 and (v & (v - 1)) == 0


def _u64(v):
    return 0 <= v < 2**64


_ANY = lambda v: True  # noqa: E731

# key -> (type, default, check, description of the check)
SCHEMA: dict[str, tuple[type, Any, Callable, str]] = {
    "name": (str, "experiment", _ANY, ""),
    "seed": (int, 0, _u64, "an unsigned 64-bit integer"),
    "source.model": (str, "pump", lambda v: v in ("pump", "pure", "widths"), "pump, pure or widths"),
    "source.waist_x": (float, 356e-6, _positive, "positive"),
    "source.waist_y": (float, 334e-6, _positive, "positive"),
    "source.crystal_length": (float, 3e-3, _positive, "positive"),
    "source.pump_wavelength": (float, 405e-9, _positive, "positive"),
    "source.total_rate": (float, 26_400.0, _nonneg, "non-negative"),
    **{f"source.{k}": (float, None, _positive, "positive") for k in (
        "sigma_sum_x", "sigma_diff_x", "sigma_sum_y", "sigma_diff_y",
        "k_sigma_sum_x", "k_sigma_diff_x", "k_sigma_sum_y", "k_sigma_diff_y")},
    "grid.n": (int, 512, _pow2, "a power of two >= 2"),
    **{f"grid.{b}_extent_{c}": (float, None, _positive, "positive") for b in BASES for c in COMPONENTS},
    "detector.acquisition_time": (float, 0.5, _positive, "positive"),
    "detector.coincidence_window": (float, 1e-9, _positive, "positive"),
    "detector.accidental_offset": (float, 2e-9, _nonneg, "non-negative"),
    "detector.singles_rate_a": (float, 6.0e5, _nonneg, "non-negative"),
    "detector.singles_rate_b": (float, 6.0e5, _nonneg, "non-negative"),
    "detector.efficiency_model": (str, UNIFORM, lambda v: v in (UNIFORM, SMOOTH), "uniform or smooth"),
    "detector.noise_free": (bool, False, _ANY, ""),
    "sampler.alpha": (float, 0.002, _unit, "within [0, 1]"),
    "sampler.beta": (float, 2.0, _positive, "positive"),
    "sampler.gamma": (float, 0.15, _frac, "within (0, 1]"),
    "sampler.max_depth": (int, None, lambda v: v >= 1, ">= 1"),
    "sampler.max_partition_passes": (int, 10_000, _nonneg, "non-negative"),
    "sampler.iterative_passes": (int, 20, _nonneg, "non-negative"),
    "sampler.time_budget": (float, None, _positive, "positive"),
    "sampler.total_duration": (float, 10.0, _positive, "positive"),
    "sampler.include_total_uncertainty": (bool, True, _ANY, ""),
    "analysis.subtract": (str, "both", lambda v: v in ("on", "off", "both"), "on, off or both"),
    "analysis.uncertainty": (str, "both", lambda v: v in ("propagation", "montecarlo", "both"),
                             "propagation, montecarlo or both"),
    "analysis.mc_trials": (int, 100, lambda v: v >= 2, ">= 2"),
    "output.dir": (str, "out", _ANY, ""),
}


@dataclass(frozen=True)
class ExperimentConfig:
    source: SourceModel = field(default_factory=SourceModel.from_pump)
    detector: DetectorConfig = field(default_factory=lambda: DetectorConfig(
        singles_rate_a=SCHEMA["detector.singles_rate_a"][1],
        singles_rate_b=SCHEMA["detector.singles_rate_b"][1]))
    sampler: SamplerParams = field(default_factory=SamplerParams)
    n: int = 512
    extents: dict = field(default_factory=dict)
    subtract: str = "both"
    uncertainty: str = "both"
    mc_trials: int = 100
    seed: int = 0
    output_dir: str = "out"
    name: str = "experiment"
    values: dict = field(default_factory=dict, compare=False, repr=False)

    def grid(self, basis: str, component: str, n: int | None = None) -> GridSpec:
        n = self.n if n is None else n
        extent = self.extents.get((basis, component))
        if extent is None:
            extent = self.source.default_extent(basis, component)
        return GridSpec(n, extent)

    def grids(self, n: int | None = None) -> dict[tuple[str, str], GridSpec]:
        return {(b, c): self.grid(b, c, n) for b in BASES for c in COMPONENTS}

    def with_seed(self, seed: int) -> "ExperimentConfig":
        if not _u64(seed):
            raise ConfigError("seed must be an unsigned 64-bit integer")
        return replace(self, seed=seed, detector=replace(self.detector, rng_seed=seed),
                       values={**self.values, "seed": seed})


def _parse_value(raw: str, typ: type):
    raw = raw.strip()
    if len(raw) >= 2 and raw[0] == raw[-1] and raw[0] in "\"'":
        raw = raw[1:-1]
    if typ is bool:
        low = raw.lower()
        if low in ("true", "on", "yes", "1"):
            return True
        if low in ("false", "off", "no", "0"):
            return False
        raise ValueError(f"expected true or false, got {raw!r}")
    if typ is int:
        value = int(raw.replace("_", ""), 0)
        return value
    if typ is float:
        value = float(raw.replace("_", ""))
        if not math.isfinite(value):
            raise ValueError(f"expected a finite number, got {raw!r}")
        return value
    return raw


def parse_config(text: str, origin: str = "<config>") -> ExperimentConfig:
    values: dict[str, Any] = {}
    lines: dict[str, int] = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(f"{origin}:{lineno}: expected 'key = value', got {line.strip()!r}")
        key, raw = (part.strip() for part in stripped.split("=", 1))
        if key not in SCHEMA:
            raise ConfigError(f"{origin}:{lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"{origin}:{lineno}: {key} already set on line {lines[key]}")
        typ, _, check, desc = SCHEMA[key]
        try:
            value = _parse_value(raw, typ)
        except ValueError as exc:
            raise ConfigError(f"{origin}:{lineno}: {key}: {exc}") from None
        if not check(value):
            raise ConfigError(f"{origin}:{lineno}: {key} = {raw} must be {desc}")
        values[key] = value
        lines[key] = lineno
    try:
        return build_config(values)
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"{origin}: {exc}") from None


def load_config(path: str | Path) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read config: {exc.strerror}") from None
    return parse_config(text, str(path))


def build_config(values: dict[str, Any] | None = None) -> ExperimentConfig:
    """Config from a ``{dotted key: value}`` mapping, defaults filled in."""
    values = dict(values or {})
    unknown = set(values) - set(SCHEMA)
    if unknown:
        raise ConfigError(f"unknown keys: {sorted(unknown)}")
    v = {k: values.get(k, entry[1]) for k, entry in SCHEMA.items()}

    total_rate = v["source.total_rate"]
    model = v["source.model"]
    if model == "pump":
        source = SourceModel.from_pump(v["source.waist_x"], v["source.waist_y"],
                                       v["source.crystal_length"], v["source.pump_wavelength"],
                                       total_rate)
    else:
        needed = ["sigma_sum_x", "sigma_diff_x"]
        if model == "widths":
            needed += ["sigma_sum_y", "sigma_diff_y", "k_sigma_sum_x", "k_sigma_diff_x",
                       "k_sigma_sum_y", "k_sigma_diff_y"]
        missing = [f"source.{k}" for k in needed if v[f"source.{k}"] is None]
        if missing:
            raise ConfigError(f"source.model = {model} requires {', '.join(missing)}")
        if model == "pure":
            source = SourceModel.pure_state(v["source.sigma_sum_x"], v["source.sigma_diff_x"],
                                            v["source.sigma_sum_y"], v["source.sigma_diff_y"],
                                            total_rate)
        else:
            source = SourceModel(**{k: v[f"source.{k}"] for k in (
                "sigma_sum_x", "sigma_diff_x", "k_sigma_sum_x", "k_sigma_diff_x",
                "sigma_sum_y", "sigma_diff_y", "k_sigma_sum_y", "k_sigma_diff_y")},
                total_rate=total_rate)

    detector = DetectorConfig(
        acquisition_time=v["detector.acquisition_time"],
        coincidence_window=v["detector.coincidence_window"],
        accidental_offset=v["detector.accidental_offset"],
        singles_rate_a=v["detector.singles_rate_a"],
        singles_rate_b=v["detector.singles_rate_b"],
        efficiency_model=v["detector.efficiency_model"],
        rng_seed=v["seed"],
        noise_free=v["detector.noise_free"],
    )
    n = v["grid.n"]
    max_depth = v["sampler.max_depth"]
    if max_depth is not None and max_depth > n.bit_length() - 1:
        raise ConfigError(f"sampler.max_depth = {max_depth} exceeds log2(grid.n) = {n.bit_length() - 1}")
    sampler = SamplerParams(
        alpha=v["sampler.alpha"], beta=v["sampler.beta"], gamma_frac=v["sampler.gamma"],
        max_depth=max_depth, max_partition_passes=v["sampler.max_partition_passes"],
        iterative_passes=v["sampler.iterative_passes"], time_budget=v["sampler.time_budget"],
        total_duration=v["sampler.total_duration"],
        include_total_uncertainty=v["sampler.include_total_uncertainty"],
    )
    extents = {(b, c): v[f"grid.{b}_extent_{c}"] for b in BASES for c in COMPONENTS
               if v[f"grid.{b}_extent_{c}"] is not None}
    return ExperimentConfig(
        source=source, detector=detector, sampler=sampler, n=n, extents=extents,
        subtract=v["analysis.subtract"], uncertainty=v["analysis.uncertainty"],
        mc_trials=v["analysis.mc_trials"], seed=v["seed"], output_dir=v["output.dir"],
        name=v["name"], values={k: x for k, x in values.items()},
    )


def dump_config(config: ExperimentConfig) -> str:
    """Text form of the explicitly set keys, loadable by :func:`parse_config`."""
    lines = []
    for key in SCHEMA:
        if key in config.values:
            value = config.values[key]
            if isinstance(value, bool):
                value = "true" if value else "false"
            lines.append(f"{key} = {value}")
    return "\n".join(lines) + "\n"
