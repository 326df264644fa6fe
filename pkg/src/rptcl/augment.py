"""Centrality-guided augmentation of propagation trees.

Node importance is the (root-adjusted) centrality, edge importance the mean
centrality of its endpoints. Importances go through ``log(w + delta)`` and
are normalised against their maximum and mean, so that the least important
replies get the highest drop or mask probability::

    p_v = min((s_max - s_v) / (s_max - s_mean) * rate, p_max)

The root is never dropped or masked.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import numpy as np

from .centrality import (CentralityMeasure, CentralityScores, compute_centrality,
                         edge_importance, root_min_adjust)
from .tree import PropagationTree

__all__ = [
    "Operator",
    "AugmentConfig",
    "NodeDropPlan",
    "EdgeDropPlan",
    "AugmentPlan",
    "AugmentedView",
    "node_drop_probs",
    "edge_drop_probs",
    "plan_augmentation",
    "apply_node_drop",
    "apply_attr_mask",
    "apply_edge_drop",
    "generate_views",
    "full_view",
]


class Operator(str, Enum):
    NODE_DROP = "node_drop"
    ATTR_MASK = "attr_mask"
    EDGE_DROP = "edge_drop"


@dataclass(frozen=True)
class AugmentConfig:
    """Augmentation settings.

    ``operators`` names the operator producing view 1 and view 2. With
    ``compose=True`` both operators are applied to each view instead.
    ``adaptive=False`` gives the random baseline: every reply (edge) gets
    the base rate regardless of centrality.
    """

    operators: tuple = (Operator.NODE_DROP, Operator.EDGE_DROP)
    p_node: float = 0.2
    p_mask: Optional[float] = None
    p_edge: float = 0.2
    p_max: float = 0.85
    delta: float = 1.0
    measure: CentralityMeasure = field(default_factory=CentralityMeasure)
    adaptive: bool = True
    compose: bool = False

    def __post_init__(self):
        ops = tuple(Operator(getattr(o, "value", o)) for o in self.operators)
        if len(ops) != 2 or ops[0] == ops[1]:
            raise ValueError(f"operators must be two distinct operators, got {self.operators!r}")
        object.__setattr__(self, "operators", ops)
        if not isinstance(self.measure, CentralityMeasure):
            object.__setattr__(self, "measure", CentralityMeasure(self.measure))
        for name in ("p_node", "p_edge", "mask_rate"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {value}")
        if not 0.0 < self.p_max <= 1.0:
            raise ValueError(f"p_max must lie in (0, 1], got {self.p_max}")
        if not self.delta > 0:
            raise ValueError(f"delta must be positive, got {self.delta}")

    @property
    def mask_rate(self) -> float:
        return self.p_node if self.p_mask is None else self.p_mask


@dataclass(frozen=True, eq=False)
class NodeDropPlan:
    w: np.ndarray
    s: np.ndarray
    s_max: float
    u_s: float
    p: np.ndarray


@dataclass(frozen=True, eq=False)
class EdgeDropPlan:
    edges: np.ndarray
    w: np.ndarray
    s: np.ndarray
    s_max: float
    u_s: float
    p: np.ndarray


def _normalise(s: np.ndarray, rate: float, p_max: float):
    s_max = float(s.max())
    u_s = float(s.mean())
    if s_max == float(s.min()):
        p = np.full(len(s), rate)
    else:
        p = (s_max - s) / (s_max - u_s) * rate
    return s_max, u_s, np.clip(p, 0.0, p_max)


def node_drop_probs(scores: CentralityScores, cfg: AugmentConfig,
                    rate: Optional[float] = None) -> NodeDropPlan:
    """Per-node drop probabilities; ``rate`` overrides ``cfg.p_node``."""
    if not scores.root_adjusted:
        raise ValueError("node_drop_probs expects root-adjusted scores")
    w = np.asarray(scores.values, dtype=np.float64)
    if len(w) < 2:
        raise ValueError("a single-node tree has nothing to drop")
    rate = cfg.p_node if rate is None else rate
    s = np.log(w + cfg.delta)
    # the root is exempt, so statistics run over replies only
    s_max, u_s, p_rest = _normalise(s[1:], rate, cfg.p_max)
    p = np.concatenate([[0.0], p_rest])
    return NodeDropPlan(w, s, s_max, u_s, p)


def edge_drop_probs(scores: CentralityScores, tree: PropagationTree,
                    cfg: AugmentConfig) -> EdgeDropPlan:
    if not scores.root_adjusted:
        raise ValueError("edge_drop_probs expects root-adjusted scores")
    edges = tree.edges()
    if len(edges) == 0:
        raise ValueError("a single-node tree has no edges")
    w = edge_importance(np.asarray(scores.values, dtype=np.float64), edges)
    s = np.log(w + cfg.delta)
    s_max, u_s, p = _normalise(s, cfg.p_edge, cfg.p_max)
    return EdgeDropPlan(edges, w, s, s_max, u_s, p)


@dataclass(frozen=True, eq=False)
class AugmentPlan:
    """Drop/mask probabilities for one tree, reusable across epochs."""

    node: NodeDropPlan
    mask: NodeDropPlan
    edge: EdgeDropPlan
    scores: Optional[CentralityScores] = None


def _uniform_plan(tree: PropagationTree, cfg: AugmentConfig) -> AugmentPlan:
    n = tree.n
    edges = tree.edges()

    def node_plan(rate):
        p = np.full(n, min(rate, cfg.p_max))
        p[0] = 0.0
        ones = np.ones(n)
        return NodeDropPlan(ones, np.zeros(n), 0.0, 0.0, p)

    ones = np.ones(len(edges))
    edge = EdgeDropPlan(edges, ones, np.zeros(len(edges)), 0.0, 0.0,
                        np.full(len(edges), min(cfg.p_edge, cfg.p_max)))
    return AugmentPlan(node_plan(cfg.p_node), node_plan(cfg.mask_rate), edge)


def plan_augmentation(tree: PropagationTree, cfg: AugmentConfig,
                      scores: Optional[CentralityScores] = None) -> AugmentPlan:
    """Probability plans for all three operators.

    Single-node trees get empty-effect plans (the root is exempt anyway).
    """
    if tree.n < 2:
        zero = np.zeros(1)
        node = NodeDropPlan(zero, zero, 0.0, 0.0, zero)
        empty = np.zeros(0)
        edge = EdgeDropPlan(tree.edges(), empty, empty, 0.0, 0.0, empty)
        return AugmentPlan(node, node, edge)
    if not cfg.adaptive:
        return _uniform_plan(tree, cfg)
    if scores is None:
        scores = compute_centrality(tree, cfg.measure)
    if not scores.root_adjusted:
        scores = root_min_adjust(scores)
    return AugmentPlan(
        node_drop_probs(scores, cfg),
        node_drop_probs(scores, cfg, rate=cfg.mask_rate),
        edge_drop_probs(scores, tree, cfg),
        scores,
    )


@dataclass(frozen=True, eq=False)
class AugmentedView:
    """A perturbed copy of a tree.

    ``kept`` and ``masked`` hold original node ids (sorted); ``edges`` holds
    the surviving parent->child edges in original ids; ``features`` has one
    row per kept node, zeroed for masked nodes.
    """

    kept: np.ndarray
    masked: np.ndarray
    edges: np.ndarray
    features: np.ndarray
    n_original: int

    @property
    def n(self) -> int:
        return len(self.kept)

    def local_edges(self) -> np.ndarray:
        """Surviving edges re-indexed to rows of ``features``."""
        return np.searchsorted(self.kept, self.edges).reshape(-1, 2)

    def same_as(self, other: "AugmentedView") -> bool:
        return (np.array_equal(self.kept, other.kept)
                and np.array_equal(self.masked, other.masked)
                and np.array_equal(self.edges, other.edges)
                and np.array_equal(self.features, other.features))


@dataclass
class _ViewState:
    keep_node: np.ndarray
    mask_node: np.ndarray
    keep_edge: np.ndarray

    @classmethod
    def full(cls, tree):
        return cls(np.ones(tree.n, bool), np.zeros(tree.n, bool), np.ones(tree.n - 1, bool))

    @classmethod
    def of(cls, tree, view: Optional[AugmentedView]):
        if view is None:
            return cls.full(tree)
        keep = np.zeros(tree.n, bool)
        keep[view.kept] = True
        mask = np.zeros(tree.n, bool)
        mask[view.masked] = True
        keep_edge = np.zeros(tree.n - 1, bool)
        keep_edge[view.edges[:, 1] - 1] = True
        return cls(keep, mask, keep_edge)

    def build(self, tree) -> AugmentedView:
        edges = tree.edges()
        alive = self.keep_edge & self.keep_node[edges[:, 0]] & self.keep_node[edges[:, 1]]
        kept = np.flatnonzero(self.keep_node)
        masked = np.flatnonzero(self.mask_node & self.keep_node)
        feats = np.array(tree.features[kept])
        feats[np.isin(kept, masked)] = 0.0
        return AugmentedView(kept, masked, edges[alive], feats, tree.n)


def _rng(seed) -> np.random.Generator:
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def full_view(tree: PropagationTree) -> AugmentedView:
    return _ViewState.full(tree).build(tree)


def apply_node_drop(tree: PropagationTree, plan: NodeDropPlan, seed=None,
                    view: Optional[AugmentedView] = None) -> AugmentedView:
    """Drop each reply independently with its planned probability.

    Edges touching a dropped reply disappear with it; the dropped reply's
    own replies stay in the view as disconnected nodes.
    """
    state = _ViewState.of(tree, view)
    u = _rng(seed).random(tree.n)
    drop = u < plan.p
    drop[0] = False
    state.keep_node &= ~drop
    return state.build(tree)


def apply_attr_mask(tree: PropagationTree, plan: NodeDropPlan, seed=None,
                    view: Optional[AugmentedView] = None) -> AugmentedView:
    state = _ViewState.of(tree, view)
    u = _rng(seed).random(tree.n)
    mask = u < plan.p
    mask[0] = False
    state.mask_node |= mask
    return state.build(tree)


def apply_edge_drop(tree: PropagationTree, plan: EdgeDropPlan, seed=None,
                    view: Optional[AugmentedView] = None) -> AugmentedView:
    state = _ViewState.of(tree, view)
    u = _rng(seed).random(tree.n - 1)
    state.keep_edge &= ~(u < plan.p)
    return state.build(tree)


def _apply(op: Operator, tree, plan: AugmentPlan, rng, view=None):
    if op is Operator.NODE_DROP:
        return apply_node_drop(tree, plan.node, rng, view)
    if op is Operator.ATTR_MASK:
        return apply_attr_mask(tree, plan.mask, rng, view)
    return apply_edge_drop(tree, plan.edge, rng, view)


def generate_views(tree: PropagationTree, cfg: AugmentConfig, seed=None,
                   plan: Optional[AugmentPlan] = None) -> tuple[AugmentedView, AugmentedView]:
    """Two augmented views of ``tree``, deterministic for a given seed."""
    if plan is None:
        plan = plan_augmentation(tree, cfg)
    rng = _rng(seed)
    if tree.n < 2:
        return full_view(tree), full_view(tree)
    if cfg.compose:
        views = []
        for _ in range(2):
            v = _apply(cfg.operators[0], tree, plan, rng)
            views.append(_apply(cfg.operators[1], tree, plan, rng, v))
        return views[0], views[1]
    return (_apply(cfg.operators[0], tree, plan, rng),
            _apply(cfg.operators[1], tree, plan, rng))
