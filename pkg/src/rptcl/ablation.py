"""Grid sweeps over reply stripping, augmentation, centrality and direction.

A grid maps axis names to value lists; every cell of the cross-product is
trained and tested over the same repeated splits. Axis values are strings
as typed on the command line:

``alpha``
    fraction of unresponded 1-level replies removed from every tree before
    splitting. Unless ``aug`` is gridded too, these cells train without
    augmentation.
``aug``
    ``none``, ``random`` (base operators, uniform rates), or an operator
    pair such as ``nd+ed`` / ``am+ed`` with an optional ``random:`` prefix.
``centrality``
    a centrality name; the cell also records mean per-tree scoring time.
``direction``
    encoder message-passing direction.
"""

from __future__ import annotations

import csv
import io
import itertools
import time
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from sklearn.base import clone

from .centrality import Centrality, CentralityMeasure, compute_centrality
from .estimator import TreeContrastiveClassifier, UnrespondedReplyStripper
from .training import DEFAULT_RATIOS, SplitSummary, run_splits
from .tree import Direction

__all__ = ["AXES", "parse_grid", "parse_aug", "grid_cells", "CellResult", "run_cell",
           "ablation_csv", "format_ablation"]

AXES = ("alpha", "aug", "centrality", "direction")

_OP_NAMES = {"nd": "node_drop", "am": "attr_mask", "ed": "edge_drop",
             "node_drop": "node_drop", "attr_mask": "attr_mask", "edge_drop": "edge_drop"}


def parse_aug(value: str, base_operators=("node_drop", "edge_drop")) -> dict:
    """Estimator overrides for one ``aug`` axis value."""
    v = value.strip().lower()
    if v == "none":
        return {"operators": None}
    if v == "random":
        return {"operators": tuple(base_operators or ("node_drop", "edge_drop")),
                "adaptive": False}
    adaptive = True
    if v.startswith("random:"):
        adaptive, v = False, v[len("random:"):]
    parts = v.split("+")
    if len(parts) != 2 or any(p not in _OP_NAMES for p in parts):
        raise ValueError(f"bad aug value {value!r}; use none, random or e.g. nd+ed, random:am+ed")
    ops = tuple(_OP_NAMES[p] for p in parts)
    if ops[0] == ops[1]:
        raise ValueError(f"aug value {value!r} names the same operator twice")
    return {"operators": ops, "adaptive": adaptive}


def _check_value(axis: str, value: str) -> None:
    if axis == "alpha":
        a = float(value)
        if not 0.0 <= a <= 1.0:
            raise ValueError(f"alpha values must lie in [0, 1], got {value}")
    elif axis == "aug":
        parse_aug(value)
    elif axis == "centrality":
        Centrality(value.lower())
    elif axis == "direction":
        Direction.coerce(value)


def parse_grid(specs: Sequence[str]) -> dict:
    """``["alpha=0,0.5", "aug=none,nd+ed"]`` -> ordered ``{axis: [values]}``."""
    grid = {}
    for spec in specs:
        axis, sep, values = spec.partition("=")
        axis = axis.strip()
        if not sep or axis not in AXES:
            raise ValueError(f"bad grid axis {spec!r}; expected one of {', '.join(AXES)}")
        if axis in grid:
            raise ValueError(f"grid axis {axis!r} given twice")
        vals = [v.strip() for v in values.split(",") if v.strip()]
        if not vals:
            raise ValueError(f"grid axis {axis!r} has no values")
        for v in vals:
            try:
                _check_value(axis, v)
            except ValueError as exc:
                raise ValueError(f"grid axis {axis}: {exc}") from None
        grid[axis] = vals
    if not grid:
        raise ValueError("empty grid")
    return grid


def grid_cells(grid: dict) -> list[dict]:
    axes = list(grid)
    return [dict(zip(axes, combo)) for combo in itertools.product(*(grid[a] for a in axes))]


def cell_estimator(cell: dict, base: TreeContrastiveClassifier) -> TreeContrastiveClassifier:
    est = clone(base)
    if "aug" in cell:
        est.set_params(**parse_aug(cell["aug"], base.operators))
    elif "alpha" in cell:
        est.set_params(operators=None)
    if "centrality" in cell:
        est.set_params(centrality=cell["centrality"].lower(), centrality_direction=None)
    if "direction" in cell:
        est.set_params(direction=Direction.coerce(cell["direction"]).value)
    return est


@dataclass
class CellResult:
    cell: dict
    summary: SplitSummary
    accuracies: list
    centrality_seconds: Optional[float] = None


def _centrality_time(trees, kind: str) -> float:
    measure = CentralityMeasure(kind)
    start = time.perf_counter()
    for t in trees:
        compute_centrality(t, measure)
    return (time.perf_counter() - start) / len(trees)


def run_cell(cell: dict, trees, base: TreeContrastiveClassifier, n_splits: int = 10,
             seed: int = 0, ratios=DEFAULT_RATIOS) -> CellResult:
    """Train and test one grid cell over ``n_splits`` seeded splits."""
    trees = list(trees)
    if "alpha" in cell:
        trees = UnrespondedReplyStripper(float(cell["alpha"]), random_state=seed).transform(trees)
    est = cell_estimator(cell, base)
    summary, runs = run_splits(est, trees, n_splits=n_splits, ratios=ratios, seed=seed)
    seconds = _centrality_time(trees, cell["centrality"].lower()) if "centrality" in cell else None
    return CellResult(dict(cell), summary, [r.metrics.accuracy for r in runs], seconds)


def ablation_csv(results: Sequence[CellResult]) -> str:
    """One row per cell; timings are left out so reruns are byte-identical."""
    axes = list(results[0].cell) if results else []
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow([*axes, "acc_mean", "acc_std", "macro_f1"])
    for r in results:
        w.writerow([*(r.cell[a] for a in axes), f"{r.summary.accuracy_mean:.6f}",
                    f"{r.summary.accuracy_std:.6f}", f"{float(np.mean(r.summary.f1_mean)):.6f}"])
    return buf.getvalue()


def format_ablation(results: Sequence[CellResult]) -> str:
    lines = []
    for r in results:
        label = "  ".join(f"{k}={v}" for k, v in r.cell.items())
        line = f"{label:<40} acc {r.summary.accuracy_mean:.4f} +- {r.summary.accuracy_std:.4f}"
        if r.centrality_seconds is not None:
            line += f"  centrality {1e3 * r.centrality_seconds:.3f} ms/tree"
        lines.append(line)
    return "\n".join(lines) + "\n"
