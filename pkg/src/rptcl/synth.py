"""Synthetic reply-tree corpora with known structure.

Each tree has a root, a few *responded* 1-level replies that grow deeper
discussion subtrees, and a number of *unresponded* 1-level replies. Class
signal is planted in node features: class ``c`` owns a block of feature
dimensions. Optional noise replies are extra unresponded 1-level replies
whose features carry no class signal.

The generator keeps its own tally of replies per level, so the statistics
it reports are ground truth independent of :mod:`rptcl.stats`.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .stats import ClaimStats
from .tree import ClaimRecord, NodeRecord

__all__ = ["ClassRecipe", "SynthSpec", "SynthCorpus", "synth_corpus"]


@dataclass(frozen=True)
class ClassRecipe:
    """Structure of one class's trees; ranges are inclusive integer ranges."""

    responded_level1: tuple = (2, 4)
    unresponded_level1: tuple = (3, 8)
    branching: tuple = (1, 3)
    max_depth: tuple = (2, 4)
    continue_prob: float = 0.5


@dataclass(frozen=True)
class SynthSpec:
    """What to generate.

    ``signal`` scales the class block planted in root and discussion nodes,
    ``plain_signal`` the block in ordinary unresponded replies; every feature
    also gets Gaussian noise of std ``feature_noise``. ``noise_fraction`` of
    all nodes are noise replies whose features are Gaussian with std
    ``noise_scale`` plus ``decoy_signal`` times a randomly chosen class block.
    The last ``marker_dims`` features are kept out of the class blocks; noise
    replies carry ``noise_marker`` there, like the generic short replies that
    pile up under real posts. ``leaf_signal``, when set, replaces ``signal``
    for discussion replies that got no reply themselves.
    """

    n_classes: int = 2
    trees_per_class: int = 100
    n_features: int = 16
    recipes: tuple = ()
    signal: float = 1.0
    plain_signal: float = 1.0
    feature_noise: float = 0.5
    noise_fraction: float = 0.0
    noise_scale: float = 1.0
    decoy_signal: float = 0.0
    marker_dims: int = 0
    noise_marker: float = 0.0
    leaf_signal: Optional[float] = None
    decimals: Optional[int] = 6

    def __post_init__(self):
        if self.n_classes < 1 or self.trees_per_class < 0:
            raise ValueError("need at least one class and a non-negative tree count")
        if not 0 <= self.marker_dims < self.n_features:
            raise ValueError("marker_dims must leave room for the class blocks")
        if self.n_features - self.marker_dims < self.n_classes:
            raise ValueError("need at least one feature dimension per class")
        if not 0.0 <= self.noise_fraction < 1.0:
            raise ValueError("noise_fraction must lie in [0, 1)")
        if self.recipes and len(self.recipes) != self.n_classes:
            raise ValueError("give one recipe per class or none")

    def recipe(self, c: int) -> ClassRecipe:
        return self.recipes[c] if self.recipes else ClassRecipe()

    @classmethod
    def separable(cls, trees_per_class: int = 100, **kw) -> "SynthSpec":
        """Two classes with disjoint, clearly visible feature signals."""
        return cls(n_classes=2, trees_per_class=trees_per_class, **kw)

    @classmethod
    def noisy(cls, trees_per_class: int = 100, noise_fraction: float = 0.3, **kw) -> "SynthSpec":
        """Weak signal confined to the discussion subtrees, plus noise replies."""
        params = dict(n_classes=2, trees_per_class=trees_per_class, signal=0.35,
                      plain_signal=0.0, feature_noise=1.0, noise_fraction=noise_fraction,
                      noise_scale=1.5, decoy_signal=1.0)
        params.update(kw)
        return cls(**params)


@dataclass
class SynthCorpus:
    records: list
    stats: list
    labels: np.ndarray
    spec: SynthSpec = field(repr=False, default=None)


def _draw(rng, lo_hi):
    lo, hi = lo_hi
    return int(rng.integers(lo, hi + 1))


def _one_tree(rng, spec: SynthSpec, label: int, claim_id: str):
    recipe = spec.recipe(label)
    d = spec.n_features
    block = (d - spec.marker_dims) // spec.n_classes

    def proto(c, scale):
        v = np.zeros(d)
        v[c * block:(c + 1) * block] = scale
        return v

    def signal_row(scale):
        return proto(label, scale) + rng.normal(0.0, spec.feature_noise, d)

    parents = [-1]
    rows = [signal_row(spec.signal)]
    tally = {"level1": 0, "level2": 0, "deeper": 0, "responded": 0}

    def add(parent, level, row):
        parents.append(parent)
        rows.append(row)
        key = "level1" if level == 1 else "level2" if level == 2 else "deeper"
        tally[key] += 1
        return len(parents) - 1

    n_resp = _draw(rng, recipe.responded_level1)
    n_plain = _draw(rng, recipe.unresponded_level1)
    for _ in range(n_resp):
        top = add(0, 1, signal_row(spec.signal))
        tally["responded"] += 1
        depth_cap = max(2, _draw(rng, recipe.max_depth))
        frontier = [(top, 1, True)]
        while frontier:
            nxt = []
            for node, level, must in frontier:
                if level >= depth_cap:
                    continue
                if not must and rng.random() >= recipe.continue_prob:
                    continue
                k = _draw(rng, recipe.branching)
                if must:
                    k = max(1, k)
                for _ in range(k):
                    child = add(node, level + 1, signal_row(spec.signal))
                    nxt.append((child, level + 1, False))
            frontier = nxt
    if spec.leaf_signal is not None:
        answered = set(parents)
        for v in range(1, len(parents)):
            if v not in answered and parents[v] != 0:
                rows[v] += proto(label, spec.leaf_signal - spec.signal)
    for _ in range(n_plain):
        add(0, 1, signal_row(spec.plain_signal))

    n_noise = 0
    if spec.noise_fraction > 0:
        n_noise = int(round(spec.noise_fraction / (1.0 - spec.noise_fraction) * len(parents)))
    for _ in range(n_noise):
        row = rng.normal(0.0, spec.noise_scale, d)
        if spec.decoy_signal:
            row += proto(int(rng.integers(spec.n_classes)), spec.decoy_signal)
        if spec.marker_dims:
            row[d - spec.marker_dims:] += spec.noise_marker
        add(0, 1, row)

    feats = np.vstack(rows)
    if spec.decimals is not None:
        feats = np.round(feats, spec.decimals)
    nodes = tuple(NodeRecord(i, p, None, tuple(float(v) for v in feats[i]))
                  for i, p in enumerate(parents))
    stats = ClaimStats(
        replies=len(parents) - 1,
        level1=tally["level1"],
        level2=tally["level2"],
        deeper=tally["deeper"],
        responded_level1=tally["responded"],
    )
    return ClaimRecord(claim_id, label, nodes), stats


def synth_corpus(spec: SynthSpec, seed=0) -> SynthCorpus:
    """Generate ``spec.trees_per_class`` trees per class in shuffled order."""
    total = spec.n_classes * spec.trees_per_class
    if total == 0:
        raise ValueError("spec describes an empty corpus")
    rng = np.random.default_rng(seed)
    labels = rng.permutation(np.repeat(np.arange(spec.n_classes), spec.trees_per_class))
    records, stats = [], []
    for i, label in enumerate(labels):
        rec, st = _one_tree(rng, spec, int(label), f"synth-{i:05d}")
        records.append(rec)
        stats.append(st)
    return SynthCorpus(records, stats, labels, spec)
