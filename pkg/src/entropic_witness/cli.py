"""Command-line runner.

    entropic-witness simulate --config run.cfg [--seed N] [--out DIR] [--subtract on|off|both]
    entropic-witness sweep-time --config run.cfg --records 1,2,4,8
    entropic-witness sweep-resolution --config run.cfg --resolutions 16,32,64
    entropic-witness oracle --config run.cfg

Exit codes: 0 success, 2 configuration error, 3 runtime error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

from . import io
from .config import ConfigError, ExperimentConfig, load_config
from .runner import analyze, oracle_summary, run_acquisition, subtract_modes, sweep_resolution, sweep_time
from .uncertainty import MONTE_CARLO, PROPAGATION, leaf_sets
from .witness import RAW, SUBTRACTED, dimensionality_bound, max_certifiable_for

log = logging.getLogger("entropic_witness")

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 2, 3


def _int_list(text: str) -> list[int]:
    try:
        values = [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None
    if not values:
        raise argparse.ArgumentTypeError("empty list")
    return values


def _u64(text: str) -> int:
    value = int(text, 0)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="entropic-witness", description=__doc__.split("\n\n")[0])
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, type=Path, help="experiment config file")
    common.add_argument("--seed", type=_u64, help="master seed (overrides the config)")
    common.add_argument("--out", type=Path, help="output directory (overrides the config)")
    common.add_argument("--subtract", choices=("on", "off", "both"),
                        help="accidental subtraction mode (overrides the config)")
    common.add_argument("--quiet", action="store_true", help="only log warnings")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", parents=[common], help="full acquisition and witness analysis")
    p.add_argument("--reanalyze", action="store_true",
                   help="re-run the analysis on the leaf files already in the output directory")
    p.add_argument("--no-timestamp", action="store_true", help="omit the creation time from the summary")

    p = sub.add_parser("sweep-time", parents=[common], help="witness versus acquisition time")
    p.add_argument("--records", type=_int_list, default=[1, 2, 4, 8, 16, 32, 64],
                   help="checkpoints as records per leaf (comma separated)")

    p = sub.add_parser("sweep-resolution", parents=[common], help="witness versus maximum resolution")
    p.add_argument("--resolutions", type=_int_list, default=[8, 16, 32, 64, 128, 256, 512],
                   help="grid sizes (powers of two, comma separated)")

    sub.add_parser("oracle", parents=[common], help="exact dense-grid witness and maximum certifiable value")
    return parser


def _configure(args) -> ExperimentConfig:
    config = load_config(args.config)
    if args.seed is not None:
        config = config.with_seed(args.seed)
    if args.out is not None:
        config = replace(config, output_dir=str(args.out))
    if args.subtract is not None:
        config = replace(config, subtract=args.subtract)
    return config


def _analysis_block(sets, config: ExperimentConfig) -> dict:
    results = {}
    samples = {}
    for subtract in subtract_modes(config.subtract):
        out = analyze(sets, subtract, config.uncertainty, config.mc_trials, config.seed)
        res = out["witness"]
        block = {"witness": res.to_dict(),
                 "dimensionality": {"ceil": dimensionality_bound(res.ef_bound),
                                    "floor": dimensionality_bound(res.ef_bound, "floor")}}
        for key in (PROPAGATION, MONTE_CARLO):
            if key in out:
                block[key] = out[key].to_dict()
        if MONTE_CARLO in out:
            samples[SUBTRACTED if subtract else RAW] = out[MONTE_CARLO].samples
        results[SUBTRACTED if subtract else RAW] = block
    return {"results": results}, samples


def cmd_simulate(config: ExperimentConfig, reanalyze: bool = False, timestamp: bool = True) -> int:
    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    if reanalyze:
        summary = io.read_summary(out / "summary.json")
        sets = io.load_leaf_sets(out, summary)
        trees_meta = summary["trees"]
    else:
        result = run_acquisition(config)
        sets = leaf_sets(result.trees)
        trees_meta = []
        for tree, s in zip(result.trees, sets):
            name = io.leaf_file_name(tree.basis, tree.component)
            io.write_leaf_csv(out / name, tree.tree_id, s.table)
            trees_meta.append({
                "tree_id": tree.tree_id, "basis": tree.basis, "component": tree.component,
                "n": tree.grid.n, "extent": tree.grid.extent, "delta": tree.grid.delta,
                "leaves": len(s.table), "leaf_file": name,
                "total_rate": tree.total_rate, "total_rate_sigma": tree.total_rate_sigma,
                "partition_passes": tree.partition_passes, "model_time": tree.model_time,
                "budget_exhausted": tree.budget_exhausted,
            })
        io.write_partition_csv(out / "partitions.csv",
                               [(t["tree_id"], s.table) for t, s in zip(trees_meta, sets)])
    analysis, samples = _analysis_block(sets, config)
    grids = {(s.basis, s.component): s.grid for s in sets}
    n = max(s.grid.n for s in sets)
    total_leaves = sum(len(s.table) for s in sets)
    summary = {
        "name": config.name,
        "seed": config.seed,
        "config": {k: v for k, v in sorted(config.values.items())},
        "trees": trees_meta,
        "total_leaves": total_leaves,
        "naive_measurements": 2 * n**4,
        "improvement_factor": 2 * n**4 / total_leaves,
        "max_certifiable": max_certifiable_for(grids),
        **analysis,
    }
    if samples:
        io.write_samples_csv(out / "mc_trials.csv", samples)
    io.write_summary(out / ("reanalysis.json" if reanalyze else "summary.json"), summary, timestamp)
    for mode, block in analysis["results"].items():
        w = block["witness"]
        log.info("%s: E_f >= %.4f +/- %.4f ebits (%s)", mode, w["ef_bound"], w["sigma"], w["uncertainty_method"])
    return EXIT_OK


def cmd_sweep_time(config: ExperimentConfig, records: list[int]) -> int:
    rows = sweep_time(config, records)
    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    io.write_rows_csv(out / "sweep_time.csv", rows)
    return EXIT_OK


def cmd_sweep_resolution(config: ExperimentConfig, resolutions: list[int]) -> int:
    for n in resolutions:
        if n < 2 or n & (n - 1):
            raise ConfigError(f"--resolutions: {n} is not a power of two >= 2")
    rows = sweep_resolution(config, resolutions)
    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    io.write_rows_csv(out / "sweep_resolution.csv", rows)
    return EXIT_OK


def cmd_oracle(config: ExperimentConfig) -> int:
    if config.n > 512:
        raise ConfigError("oracle: grid.n must not exceed 512")
    info = oracle_summary(config)
    json.dump(info, sys.stdout, indent=2)
    sys.stdout.write("\n")
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        config = _configure(args)
        if args.command == "simulate":
            return cmd_simulate(config, args.reanalyze, not args.no_timestamp)
        if args.command == "sweep-time":
            return cmd_sweep_time(config, args.records)
        if args.command == "sweep-resolution":
            return cmd_sweep_resolution(config, args.resolutions)
        return cmd_oracle(config)
    except ConfigError as exc:
        log.error("%s", exc)
        return EXIT_CONFIG
    except (OSError, ValueError, RuntimeError) as exc:
        log.error("%s: %s", type(exc).__name__, exc)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
