from pathlib import Path

import pytest

from entropic_witness.config import ConfigError, build_config, dump_config, load_config, parse_config
from entropic_witness.source import MOMENTUM, POSITION

ROOT = Path(__file__).resolve().parents[1]


def test_defaults():
    cfg = build_config()
    assert cfg.n == 512
    assert cfg.sampler.alpha == 0.002 and cfg.sampler.beta == 2.0 and cfg.sampler.gamma_frac == 0.15
    assert cfg.detector.acquisition_time == 0.5
    assert cfg.source.total_rate == 26_400.0
    assert cfg.subtract == "both"


def test_parse_values_and_comments():
    cfg = parse_config("""
        # comment
        seed = 0x10
        grid.n = 32          # trailing comment
        detector.noise_free = true
        source.model = "pure"
        source.sigma_sum_x = 1e-3
        source.sigma_diff_x = 1e-4
        sampler.time_budget = 1_000
    """)
    assert cfg.seed == 16 and cfg.detector.rng_seed == 16
    assert cfg.n == 32 and cfg.detector.noise_free
    assert cfg.source.sigma_sum_x == 1e-3 and cfg.source.k_sigma_diff_x == pytest.approx(1e4)
    assert cfg.sampler.time_budget == 1000.0


def test_alpha_out_of_range_names_field():
    with pytest.raises(ConfigError, match=r"run\.cfg:2: sampler\.alpha"):
        parse_config("grid.n = 8\nsampler.alpha = 1.5\n", "run.cfg")


@pytest.mark.parametrize("text, pattern", [
    ("grid.nn = 8", "unknown key"),
    ("grid.n = 12", "power of two"),
    ("grid.n = eight", "grid.n"),
    ("seed = -1", "seed"),
    ("grid.n = 8\ngrid.n = 16", "already set on line 1"),
    ("just words", "expected 'key = value'"),
    ("source.model = pure", "requires source.sigma_sum_x"),
    ("grid.n = 8\nsampler.max_depth = 4", "max_depth"),
    ("detector.noise_free = maybe", "true or false"),
    ("source.total_rate = nan", "finite"),
])
def test_config_errors(text, pattern):
    with pytest.raises(ConfigError, match=pattern):
        parse_config(text)


def test_missing_file():
    with pytest.raises(ConfigError, match="cannot read"):
        load_config("/nonexistent/run.cfg")


def test_dump_roundtrip():
    cfg = load_config(ROOT / "configs" / "quickstart.cfg")
    again = parse_config(dump_config(cfg))
    assert again == cfg


def test_bundled_configs_load():
    for path in sorted((ROOT / "configs").glob("*.cfg")):
        load_config(path)


def test_extents_override_and_with_seed():
    cfg = parse_config("grid.n = 16\ngrid.position_extent_x = 2e-3")
    assert cfg.grid(POSITION, "x").extent == 2e-3
    assert cfg.grid(MOMENTUM, "x").extent == cfg.source.default_extent(MOMENTUM, "x")
    other = cfg.with_seed(99)
    assert other.seed == 99 and other.detector.rng_seed == 99
    with pytest.raises(ConfigError):
        cfg.with_seed(2**64)
