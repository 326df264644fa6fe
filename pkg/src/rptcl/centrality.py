"""Node centralities on propagation-tree views and the augmentation principles.

Degree, betweenness and PageRank are the measures meant for augmentation.
Eigenvector, Katz and closeness are kept for comparison; on reply trees they
rank shallow unresponded replies too high.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Optional

import numpy as np

from .tree import Direction, PropagationTree, build_view

__all__ = [
    "Centrality",
    "CentralityMeasure",
    "CentralityScores",
    "ConvergenceError",
    "PrincipleReport",
    "compute_centrality",
    "root_min_adjust",
    "check_principles",
    "edge_importance",
]


class ConvergenceError(RuntimeError):
    pass


class Centrality(str, Enum):
    DEGREE = "degree"
    BETWEENNESS = "betweenness"
    PAGERANK = "pagerank"
    EIGENVECTOR = "eigenvector"
    KATZ = "katz"
    CLOSENESS = "closeness"


_DEFAULT_DIRECTION = {
    Centrality.DEGREE: Direction.TOP_DOWN,
    Centrality.BETWEENNESS: Direction.TOP_DOWN,
    Centrality.PAGERANK: Direction.BOTTOM_UP,
    Centrality.EIGENVECTOR: Direction.UNDIRECTED,
    Centrality.KATZ: Direction.UNDIRECTED,
    Centrality.CLOSENESS: Direction.UNDIRECTED,
}


@dataclass(frozen=True)
class CentralityMeasure:
    """Which centrality to compute, on which view, with which constants.

    ``direction=None`` picks the measure's default view: top-down for degree
    and betweenness, bottom-up for PageRank, undirected for the rest.
    """

    kind: Centrality = Centrality.PAGERANK
    direction: Optional[Direction] = None
    damping: float = 0.85
    katz_alpha: float = 0.05
    katz_beta: float = 1.0
    tol: float = 1e-10
    max_iter: Optional[int] = None

    def __post_init__(self):
        object.__setattr__(self, "kind", Centrality(str(getattr(self.kind, "value", self.kind)).lower()))
        direction = self.direction
        if direction is None:
            direction = _DEFAULT_DIRECTION[self.kind]
        object.__setattr__(self, "direction", Direction.coerce(direction))

    @property
    def iteration_cap(self) -> int:
        if self.max_iter is not None:
            return self.max_iter
        return 200 if self.kind is Centrality.PAGERANK else 20000


@dataclass(frozen=True, eq=False)
class CentralityScores:
    values: np.ndarray
    measure: CentralityMeasure
    root_adjusted: bool = False
    seconds: float = 0.0


def _out_degree(edges, n):
    return np.bincount(edges[:, 0], minlength=n) if len(edges) else np.zeros(n, np.int64)


def _degree(tree, edges, m):
    return _out_degree(edges, tree.n).astype(np.float64)


def _betweenness(tree, edges, m):
    # O(n^2) walk over ordered pairs along the unique tree paths
    n = tree.n
    parent = tree.parent
    level = tree.level
    # a directed path s -> t exists only when one end is the other's ancestor
    source_on_top = {Direction.TOP_DOWN: True, Direction.BOTTOM_UP: False}.get(m.direction)
    bc = np.zeros(n)
    for s in range(n):
        for t in range(n):
            if s == t:
                continue
            u, v = s, t
            interior = []
            while level[u] > level[v]:
                u = parent[u]
                interior.append(u)
            while level[v] > level[u]:
                v = parent[v]
                interior.append(v)
            while u != v:
                u, v = parent[u], parent[v]
                interior.append(u)
                if u != v:
                    interior.append(v)
            if source_on_top is not None and u != (s if source_on_top else t):
                continue
            for w in interior:
                if w != s and w != t:
                    bc[w] += 1
    return bc


def _pagerank(tree, edges, m):
    n = tree.n
    d = m.damping
    out = _out_degree(edges, n).astype(np.float64)
    dangling = out == 0
    src, dst = edges[:, 0], edges[:, 1]
    inv_out = np.divide(1.0, out, out=np.zeros(n), where=~dangling)
    x = np.full(n, 1.0 / n)
    for _ in range(m.iteration_cap):
        inflow = np.bincount(dst, weights=x[src] * inv_out[src], minlength=n)
        new = (1.0 - d) / n + d * (inflow + x[dangling].sum() / n)
        if np.abs(new - x).sum() < m.tol:
            return new
        x = new
    raise ConvergenceError(
        f"PageRank did not reach tol={m.tol} within {m.iteration_cap} iterations")


def _eigenvector(tree, edges, m):
    # power iteration on A + I so bipartite trees do not oscillate
    n = tree.n
    if n == 1:
        return np.ones(1)
    src, dst = edges[:, 0], edges[:, 1]
    x = np.full(n, 1.0 / n)
    for _ in range(m.iteration_cap):
        new = x + np.bincount(dst, weights=x[src], minlength=n)
        norm = np.linalg.norm(new)
        if norm == 0:
            raise ConvergenceError("eigenvector iteration collapsed to zero")
        new /= norm
        if np.abs(new - x).sum() < n * m.tol:
            return new
        x = new
    raise ConvergenceError(
        f"eigenvector centrality did not reach tol={m.tol} within {m.iteration_cap} iterations")


def _katz(tree, edges, m):
    n = tree.n
    a = np.zeros((n, n))
    a[edges[:, 0], edges[:, 1]] = 1.0
    if m.direction is Direction.UNDIRECTED and n > 1:
        rho = np.abs(np.linalg.eigvalsh(a)).max()
        if m.katz_alpha * rho >= 1.0:
            raise ConvergenceError(
                f"Katz series diverges: alpha={m.katz_alpha} >= 1/spectral radius {1.0 / rho:.4g}")
    return np.linalg.solve(np.eye(n) - m.katz_alpha * a.T, np.full(n, m.katz_beta))


def _closeness(tree, edges, m):
    # incoming distances, Wasserman-Faust scaling for unreachable nodes
    n = tree.n
    if n == 1:
        return np.zeros(1)
    preds = [[] for _ in range(n)]
    for u, v in edges:
        preds[v].append(u)
    out = np.zeros(n)
    for v in range(n):
        dist = {v: 0}
        frontier = [v]
        while frontier:
            nxt = []
            for w in frontier:
                for u in preds[w]:
                    if u not in dist:
                        dist[u] = dist[w] + 1
                        nxt.append(u)
            frontier = nxt
        total = sum(dist.values())
        reach = len(dist) - 1
        if total > 0:
            out[v] = (reach / total) * (reach / (n - 1))
    return out


_IMPL = {
    Centrality.DEGREE: _degree,
    Centrality.BETWEENNESS: _betweenness,
    Centrality.PAGERANK: _pagerank,
    Centrality.EIGENVECTOR: _eigenvector,
    Centrality.KATZ: _katz,
    Centrality.CLOSENESS: _closeness,
}


def compute_centrality(tree: PropagationTree, measure=CentralityMeasure()) -> CentralityScores:
    """Centrality of every node of ``tree`` on the measure's view.

    Raises :class:`ConvergenceError` when an iterative measure hits its cap.
    """
    if not isinstance(measure, CentralityMeasure):
        measure = CentralityMeasure(measure)
    t0 = time.perf_counter()
    edges = build_view(tree, measure.direction).edges
    values = _IMPL[measure.kind](tree, edges, measure)
    elapsed = time.perf_counter() - t0
    values = np.asarray(values, dtype=np.float64)
    if (values < 0).any():
        # round-off of iterative solvers only
        values = np.maximum(values, 0.0)
    values.setflags(write=False)
    return CentralityScores(values, measure, False, elapsed)


def root_min_adjust(scores: CentralityScores) -> CentralityScores:
    """Give the root the smallest centrality in the tree."""
    values = np.array(scores.values)
    values[0] = values.min()
    values.setflags(write=False)
    return replace(scores, values=values, root_adjusted=True)


def edge_importance(values: np.ndarray, tree_edges: np.ndarray) -> np.ndarray:
    """Mean centrality of the two endpoints of every edge."""
    return (values[tree_edges[:, 0]] + values[tree_edges[:, 1]]) / 2.0


@dataclass
class PrincipleReport:
    """Verdicts of the three augmentation principles for one scoring.

    ``root_exempt`` is structural (the augmenters never touch the root) and
    is always reported as applicable here. ``deep_nodes_preserved`` covers
    both the node and the edge part of the second principle.
    """

    root_exempt: bool = True
    deep_nodes_preserved: bool = True
    deep_nodes_preserved_nodes: bool = True
    deep_nodes_preserved_edges: bool = True
    parents_over_children: bool = True
    parents_over_children_strict: bool = True
    strictly_decreasing: bool = True
    violations: list = field(default_factory=list)

    def as_dict(self) -> dict:
        return {
            "P1_root_exempt": self.root_exempt,
            "P2_deep_preserved": self.deep_nodes_preserved,
            "P2_nodes": self.deep_nodes_preserved_nodes,
            "P2_edges": self.deep_nodes_preserved_edges,
            "P3_weak": self.parents_over_children,
            "P3_strict": self.parents_over_children_strict,
            "parent_gt_child": self.strictly_decreasing,
        }


def check_principles(tree: PropagationTree, scores: CentralityScores) -> PrincipleReport:
    """Check a root-adjusted scoring against the three principles.

    P2: every non-root node with replies outranks every leaf, and every edge
    hanging below a non-root internal node outranks every edge from the root
    to an unresponded reply. P3 (weak): below the root, a parent never ranks
    below its child. P3 (strict): additionally the parent must rank strictly
    higher whenever it has a descendant other than that child.
    ``strictly_decreasing`` requires parent > child for every pair.
    """
    if tree.n < 2:
        raise ValueError("principle checks need at least one reply")
    if not scores.root_adjusted:
        raise ValueError("check_principles expects root-adjusted scores")
    phi = scores.values
    rep = PrincipleReport()
    nonroot = np.arange(1, tree.n)
    internal = nonroot[tree.has_descendants[1:]]
    leaves = nonroot[~tree.has_descendants[1:]]

    if len(internal) and len(leaves):
        lo, hi = phi[internal].min(), phi[leaves].max()
        if not lo > hi:
            rep.deep_nodes_preserved_nodes = False
            rep.violations.append(
                f"P2: internal node {internal[phi[internal].argmin()]} ({lo:.6g}) <= "
                f"leaf {leaves[phi[leaves].argmax()]} ({hi:.6g})")

    edges = tree.edges()
    w = edge_importance(phi, edges)
    deep_edge = (edges[:, 0] != 0) & tree.has_descendants[edges[:, 0]]
    noise_edge = (edges[:, 0] == 0) & ~tree.has_descendants[edges[:, 1]]
    if deep_edge.any() and noise_edge.any():
        lo, hi = w[deep_edge].min(), w[noise_edge].max()
        if not lo > hi:
            rep.deep_nodes_preserved_edges = False
            rep.violations.append(f"P2: deep edge importance {lo:.6g} <= root-leaf edge {hi:.6g}")
    rep.deep_nodes_preserved = rep.deep_nodes_preserved_nodes and rep.deep_nodes_preserved_edges

    subtree = np.ones(tree.n, dtype=np.int64)
    for v in np.argsort(-tree.level, kind="stable")[:-1]:
        subtree[tree.parent[v]] += subtree[v]
    for v in range(1, tree.n):
        p = tree.parent[v]
        if p == 0:
            continue
        if phi[p] < phi[v]:
            rep.parents_over_children = False
            rep.parents_over_children_strict = False
            rep.violations.append(f"P3: parent {p} ({phi[p]:.6g}) < child {v} ({phi[v]:.6g})")
        elif phi[p] == phi[v] and subtree[p] - 1 > 1:
            rep.parents_over_children_strict = False
            rep.violations.append(f"P3-strict: parent {p} ties child {v} ({phi[v]:.6g})")
        if not phi[p] > phi[v]:
            rep.strictly_decreasing = False
    return rep
