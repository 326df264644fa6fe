"""Stratified splits, evaluation metrics and repeated-split experiments."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from sklearn.base import clone
from sklearn.metrics import accuracy_score, confusion_matrix, precision_recall_fscore_support

from .validation import UNLABELED, labels_of

__all__ = [
    "EvalMetrics",
    "SplitSummary",
    "make_splits",
    "evaluate",
    "metrics_from_predictions",
    "summarize",
    "run_splits",
    "metrics_csv",
    "training_log_csv",
]

DEFAULT_RATIOS = (0.8, 0.1, 0.1)


def _largest_remainder(total: int, weights: np.ndarray) -> np.ndarray:
    exact = total * weights
    out = np.floor(exact).astype(np.int64)
    short = total - out.sum()
    order = np.argsort(-(exact - out), kind="stable")
    out[order[:short]] += 1
    return out


def make_splits(labels, ratios: Sequence[float] = DEFAULT_RATIOS, seed=0):
    """Disjoint, exhaustive, class-stratified index sets (train, val, test).

    Split sizes follow ``ratios`` by largest remainder; each class lands in
    each split within one item of its proportional share.
    """
    labels = np.asarray(labels)
    ratios = np.asarray(ratios, dtype=np.float64)
    if len(ratios) != 3 or (ratios < 0).any() or not np.isclose(ratios.sum(), 1.0):
        raise ValueError(f"ratios must be three non-negative numbers summing to 1, got {ratios}")
    if (labels == UNLABELED).any():
        raise ValueError("make_splits needs a fully labeled corpus")
    classes, counts = np.unique(labels, return_counts=True)
    needed = int((ratios > 0).sum())
    if (counts < needed).any():
        bad = classes[counts < needed]
        raise ValueError(f"classes {bad.tolist()} have fewer than {needed} items")
    rng = np.random.default_rng(seed)

    targets = _largest_remainder(len(labels), ratios)
    exact = counts[:, None] * ratios[None, :]
    alloc = np.floor(exact).astype(np.int64)
    frac = exact - alloc
    spare = counts - alloc.sum(axis=1)
    deficit = targets - alloc.sum(axis=0)
    # hand out the per-class leftovers where the split totals still fall short
    for c in np.argsort(-spare, kind="stable"):
        for _ in range(spare[c]):
            open_ = np.flatnonzero(deficit > 0)
            if len(open_) == 0:
                open_ = np.arange(3)
            cand = [s for s in open_ if alloc[c, s] < np.ceil(exact[c, s])] or list(open_)
            s = max(cand, key=lambda s: (deficit[s], frac[c, s]))
            alloc[c, s] += 1
            deficit[s] -= 1

    parts = [[], [], []]
    for c, cls in enumerate(classes):
        idx = rng.permutation(np.flatnonzero(labels == cls))
        bounds = np.cumsum(alloc[c])
        for s, chunk in enumerate(np.split(idx, bounds[:-1])):
            parts[s].append(chunk)
    return tuple(np.sort(np.concatenate(p)) for p in parts)


@dataclass
class EvalMetrics:
    accuracy: float
    precision: np.ndarray
    recall: np.ndarray
    f1: np.ndarray
    support: np.ndarray
    confusion: np.ndarray
    classes: np.ndarray


def metrics_from_predictions(y_true, y_pred, classes=None) -> EvalMetrics:
    y_true = np.asarray(y_true)
    y_pred = np.asarray(y_pred)
    if len(y_true) == 0:
        raise ValueError("cannot evaluate an empty split")
    if classes is None:
        classes = np.unique(np.concatenate([y_true, y_pred]))
    classes = np.asarray(classes)
    prec, rec, f1, sup = precision_recall_fscore_support(
        y_true, y_pred, labels=classes, zero_division=0)
    return EvalMetrics(float(accuracy_score(y_true, y_pred)), prec, rec, f1, sup,
                       confusion_matrix(y_true, y_pred, labels=classes), classes)


def evaluate(estimator, trees, y=None) -> EvalMetrics:
    """Metrics of a fitted classifier on labeled ``trees``."""
    trees = list(trees)
    if not trees:
        raise ValueError("cannot evaluate an empty split")
    y = labels_of(trees) if y is None else np.asarray(y)
    if (y == UNLABELED).any():
        raise ValueError("evaluation needs labeled claims")
    return metrics_from_predictions(y, estimator.predict(trees), estimator.classes_)


@dataclass
class SplitSummary:
    per_split: list
    classes: np.ndarray
    accuracy_mean: float = 0.0
    accuracy_std: float = 0.0
    precision_mean: np.ndarray = field(default=None)
    recall_mean: np.ndarray = field(default=None)
    f1_mean: np.ndarray = field(default=None)


def summarize(per_split: Sequence[EvalMetrics]) -> SplitSummary:
    acc = np.array([m.accuracy for m in per_split])
    return SplitSummary(
        list(per_split), per_split[0].classes, float(acc.mean()), float(acc.std()),
        np.mean([m.precision for m in per_split], axis=0),
        np.mean([m.recall for m in per_split], axis=0),
        np.mean([m.f1 for m in per_split], axis=0),
    )


@dataclass
class SplitRun:
    seed: int
    estimator: object
    metrics: EvalMetrics
    indices: tuple


def run_splits(estimator, trees, n_splits: int = 10, ratios=DEFAULT_RATIOS, seed: int = 0,
               split_seeds: Optional[Sequence[int]] = None, callback=None):
    """Fit a fresh clone of ``estimator`` on each random split and test it.

    Returns ``(summary, runs)``. Split ``k`` uses seed ``seed + k`` both for
    the split and the estimator's ``random_state``.
    """
    trees = list(trees)
    labels = labels_of(trees)
    seeds = list(split_seeds) if split_seeds is not None else [seed + k for k in range(n_splits)]
    runs = []
    for s in seeds:
        tr, va, te = make_splits(labels, ratios, s)
        est = clone(estimator).set_params(random_state=s)
        est.fit([trees[i] for i in tr],
                validation_data=([trees[i] for i in va], None) if len(va) else None)
        m = evaluate(est, [trees[i] for i in te])
        run = SplitRun(s, est, m, (tr, va, te))
        runs.append(run)
        if callback is not None:
            callback(run)
    return summarize([r.metrics for r in runs]), runs


def _fmt(x: float) -> str:
    return f"{x:.6f}"


def metrics_csv(summary: SplitSummary, class_names=None) -> str:
    """One row per class: accuracy mean/std (shared) and mean precision/recall/F1."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["class", "acc_mean", "acc_std", "precision", "recall", "f1"])
    for k, c in enumerate(summary.classes):
        name = class_names.get(int(c), c) if class_names else c
        w.writerow([name, _fmt(summary.accuracy_mean), _fmt(summary.accuracy_std),
                    _fmt(summary.precision_mean[k]), _fmt(summary.recall_mean[k]),
                    _fmt(summary.f1_mean[k])])
    return buf.getvalue()


def training_log_csv(history) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["epoch", "l_sup", "l_unsup", "total", "val_accuracy"])
    for row in history:
        w.writerow([row["epoch"], repr(float(row["l_sup"])), repr(float(row["l_unsup"])),
                    repr(float(row["total"])), repr(float(row["val_accuracy"]))])
    return buf.getvalue()
