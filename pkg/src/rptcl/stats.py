"""Structural statistics of propagation trees.

Per claim we count replies by depth and the 1-level replies that received
at least one reply themselves; corpus statistics are plain means over all
claims in the input (labeled or not).
"""

from __future__ import annotations

import csv
import io
from collections import Counter
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from .tree import PropagationTree, tree_from_parents

__all__ = [
    "ClaimStats",
    "CorpusStats",
    "claim_stats",
    "corpus_stats",
    "unresponded_level1",
    "strip_unresponded",
    "format_stats_table",
    "stats_csv",
]


@dataclass(frozen=True)
class ClaimStats:
    replies: int
    level1: int
    level2: int
    deeper: int
    responded_level1: int

    @property
    def unresponded_level1(self) -> int:
        return self.level1 - self.responded_level1


@dataclass(frozen=True)
class CorpusStats:
    claim_count: int
    class_counts: dict = field(default_factory=dict)
    avg_replies: float = 0.0
    avg_level1: float = 0.0
    avg_level2: float = 0.0
    avg_deeper: float = 0.0
    avg_responded_level1: float = 0.0

    def share(self, name: str) -> float:
        """Percentage of all replies at a depth bucket: level1, level2 or deeper."""
        if self.avg_replies == 0:
            return 0.0
        return 100.0 * getattr(self, "avg_" + name) / self.avg_replies


def claim_stats(tree: PropagationTree) -> ClaimStats:
    level = tree.level
    level1 = level == 1
    return ClaimStats(
        replies=tree.n - 1,
        level1=int(level1.sum()),
        level2=int((level == 2).sum()),
        deeper=int((level > 2).sum()),
        responded_level1=int((level1 & tree.has_descendants).sum()),
    )


def corpus_stats(trees: Sequence[PropagationTree]) -> CorpusStats:
    if len(trees) == 0:
        raise ValueError("corpus_stats needs at least one claim")
    rows = np.array([list(asdict(claim_stats(t)).values()) for t in trees], dtype=np.int64)
    # integer totals first so planted means come out exact
    totals = rows.sum(axis=0)
    m = len(trees)
    labels = Counter(t.label for t in trees if t.label is not None)
    return CorpusStats(
        claim_count=m,
        class_counts=dict(sorted(labels.items())),
        avg_replies=totals[0] / m,
        avg_level1=totals[1] / m,
        avg_level2=totals[2] / m,
        avg_deeper=totals[3] / m,
        avg_responded_level1=totals[4] / m,
    )


def unresponded_level1(tree: PropagationTree) -> np.ndarray:
    return np.flatnonzero((tree.level == 1) & ~tree.has_descendants)


def strip_unresponded(tree: PropagationTree, alpha: float, seed=None) -> PropagationTree:
    """Remove ``floor(alpha * k)`` of the ``k`` unresponded 1-level replies.

    The removed replies are drawn uniformly without replacement. They are
    leaves, so the rest of the tree is re-indexed but otherwise untouched.
    """
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must lie in [0, 1], got {alpha}")
    candidates = unresponded_level1(tree)
    k = int(np.floor(alpha * len(candidates)))
    if k == 0:
        return tree
    rng = np.random.default_rng(seed)
    drop = rng.choice(candidates, size=k, replace=False)
    keep = np.ones(tree.n, dtype=bool)
    keep[drop] = False
    new_index = np.cumsum(keep) - 1
    kept = np.flatnonzero(keep)
    parent = tree.parent[kept]
    parent = np.where(parent >= 0, new_index[np.maximum(parent, 0)], -1)
    return tree_from_parents(parent, tree.features[kept], label=tree.label,
                             claim_id=tree.claim_id)


_ROWS = [
    ("# avg reply", "replies"),
    ("# avg 1-level reply", "level1"),
    ("# avg 2-level reply", "level2"),
    ("# avg deeper reply", "deeper"),
    ("# avg responded 1-level reply", "responded_level1"),
]


def _stat_rows(cs: CorpusStats, class_names=None):
    rows = [("# claims", str(cs.claim_count), "")]
    for label, count in cs.class_counts.items():
        name = class_names.get(label, label) if class_names else label
        rows.append((f"# class {name}", str(count), ""))
    for title, attr in _ROWS:
        value = getattr(cs, "avg_" + attr)
        share = f"{cs.share(attr):.1f}" if attr in ("level1", "level2", "deeper") else ""
        rows.append((title, repr(float(value)), share))
    return rows


def format_stats_table(cs: CorpusStats, class_names=None) -> str:
    lines = []
    for title, value, share in _stat_rows(cs, class_names):
        if title.startswith("# avg"):
            value = f"{float(value):.1f}"
        suffix = f" ({share}%)" if share else ""
        lines.append(f"{title:<32}{value}{suffix}")
    return "\n".join(lines) + "\n"


def stats_csv(cs: CorpusStats, class_names=None) -> str:
    """One row per statistic; averages written at full precision."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["statistic", "value", "share_pct"])
    for row in _stat_rows(cs, class_names):
        writer.writerow(row)
    return buf.getvalue()
