"""Run artifacts: leaf CSVs, partition-overlay CSV and the JSON summary.

Floats are written with ``repr`` so a reload reproduces them bit for bit;
a summary plus its leaf files is enough to redo the analysis without
simulating again.
"""

from __future__ import annotations

import csv
import json
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from .source import GridSpec
from .uncertainty import LeafSet
from .witness import Leaf, LeafTable

SCHEMA_VERSION = 1
LEAF_COLUMNS = ("tree_id", "path", "row", "col", "span", "pooled_C", "pooled_A", "efficiency", "total_time")
PARTITION_COLUMNS = ("tree_id", "row", "col", "span")


def leaf_file_name(basis: str, component: str) -> str:
    return f"leaves_{basis}_{component}.csv"


def _fmt(x: float) -> str:
    x = float(x)
    return str(int(x)) if x.is_integer() and abs(x) < 2**53 else repr(x)


def write_leaf_csv(path: Path, tree_id: int, table: LeafTable) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(LEAF_COLUMNS)
        for leaf in table.leaves():
            w.writerow([tree_id, leaf.path, leaf.row, leaf.col, leaf.span, _fmt(leaf.counts),
                        _fmt(leaf.accidentals), repr(leaf.efficiency), repr(leaf.total_time)])


def read_leaf_csv(path: Path) -> tuple[int, LeafTable]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != LEAF_COLUMNS:
            raise ValueError(f"{path}: unexpected columns {reader.fieldnames}")
        rows = list(reader)
    tree_ids = {int(r["tree_id"]) for r in rows}
    if len(tree_ids) != 1:
        raise ValueError(f"{path}: expected one tree per leaf file, found {sorted(tree_ids)}")
    table = LeafTable.from_leaves(
        Leaf(r["path"], int(r["row"]), int(r["col"]), int(r["span"]), float(r["pooled_C"]),
             float(r["pooled_A"]), float(r["efficiency"]), float(r["total_time"]))
        for r in rows)
    return tree_ids.pop(), table


def write_partition_csv(path: Path, tables: list[tuple[int, LeafTable]]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(PARTITION_COLUMNS)
        for tree_id, table in tables:
            for r, c, s in zip(table.rows, table.cols, table.spans):
                w.writerow([tree_id, int(r), int(c), int(s)])


def write_rows_csv(path: Path, rows: list[dict]) -> None:
    if not rows:
        raise ValueError("nothing to write")
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(rows[0]), lineterminator="\n")
        w.writeheader()
        for row in rows:
            w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in row.items()})


def write_samples_csv(path: Path, samples: dict[str, np.ndarray]) -> None:
    names = list(samples)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["trial", *names])
        for t, vals in enumerate(zip(*(samples[k] for k in names))):
            w.writerow([t, *(repr(float(v)) for v in vals)])


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, float) and not np.isfinite(obj):
        return None
    return obj


def write_summary(path: Path, summary: dict, timestamp: bool = True) -> None:
    doc = {"schema_version": SCHEMA_VERSION, **summary}
    if timestamp:
        doc["created"] = datetime.now(timezone.utc).isoformat(timespec="seconds")
    with open(path, "w") as fh:
        json.dump(_jsonable(doc), fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_summary(path: Path) -> dict:
    with open(path) as fh:
        doc = json.load(fh)
    version = doc.get("schema_version")
    if version != SCHEMA_VERSION:
        raise ValueError(f"{path}: unsupported schema_version {version!r}")
    return doc


def load_leaf_sets(out_dir: Path, summary: dict | None = None) -> list[LeafSet]:
    """Rebuild every tree's leaves and grid from a run directory."""
    out_dir = Path(out_dir)
    summary = read_summary(out_dir / "summary.json") if summary is None else summary
    sets = []
    for t in summary["trees"]:
        tree_id, table = read_leaf_csv(out_dir / t["leaf_file"])
        if tree_id != t["tree_id"]:
            raise ValueError(f"{t['leaf_file']}: tree_id {tree_id} does not match summary")
        sets.append(LeafSet(t["basis"], t["component"], GridSpec(t["n"], t["extent"]), table))
    return sets
