"""Claim records, propagation trees and their directed/undirected views.

A claim is a source post plus its replies. On disk each claim is one JSON
line::

    {"id": "c1", "label": 1, "nodes": [{"id": 0, "parent": -1, "text": "..."},
                                       {"id": 1, "parent": 0, "x": [0.1, 0.2]}]}

Node ids run ``0..n-1``, node 0 is the source post (``parent == -1``) and
every other node points at a parent with a smaller id.
"""

from __future__ import annotations

import hashlib
import json
import re
from dataclasses import dataclass, field
from enum import Enum
from typing import IO, Iterable, Optional, Sequence

import numpy as np

__all__ = [
    "Direction",
    "NodeRecord",
    "ClaimRecord",
    "PropagationTree",
    "AdjacencyView",
    "FeaturizerConfig",
    "ClaimSyntaxError",
    "ClaimSchemaError",
    "TreeStructureError",
    "FeatureDimensionError",
    "parse_claims",
    "load_claims",
    "dump_claims",
    "record_to_dict",
    "build_tree",
    "build_trees",
    "build_view",
    "tree_from_parents",
    "hashed_bag_of_tokens",
]


class ClaimSyntaxError(ValueError):
    """A line of the claims file is not valid JSON."""

    def __init__(self, lineno: int, msg: str):
        self.lineno = lineno
        super().__init__(f"line {lineno}: {msg}")


class ClaimSchemaError(ValueError):
    """A line parses as JSON but does not describe a valid claim."""

    def __init__(self, lineno: Optional[int], msg: str):
        self.lineno = lineno
        prefix = f"line {lineno}: " if lineno is not None else ""
        super().__init__(prefix + msg)


class TreeStructureError(ValueError):
    pass


class FeatureDimensionError(ValueError):
    pass


class Direction(str, Enum):
    TOP_DOWN = "top_down"
    BOTTOM_UP = "bottom_up"
    UNDIRECTED = "undirected"

    @classmethod
    def coerce(cls, value) -> "Direction":
        if isinstance(value, cls):
            return value
        key = str(value).lower().replace("-", "_")
        aliases = {"td": "top_down", "topdown": "top_down", "bu": "bottom_up",
                   "bottomup": "bottom_up", "ud": "undirected"}
        return cls(aliases.get(key, key))


@dataclass(frozen=True)
class NodeRecord:
    node_id: int
    parent: int
    text: Optional[str] = None
    features: Optional[tuple] = None


@dataclass(frozen=True)
class ClaimRecord:
    claim_id: str
    label: Optional[int]
    nodes: tuple

    def __post_init__(self):
        object.__setattr__(self, "nodes", tuple(self.nodes))
        _check_record(self)


def _check_record(rec: ClaimRecord, lineno: Optional[int] = None) -> None:
    if not rec.nodes:
        raise ClaimSchemaError(lineno, f"claim {rec.claim_id!r} has no nodes")
    for pos, node in enumerate(rec.nodes):
        if node.node_id != pos:
            raise ClaimSchemaError(
                lineno, f"claim {rec.claim_id!r}: node at position {pos} has id {node.node_id}")
        if node.text is None and node.features is None:
            raise ClaimSchemaError(
                lineno, f"claim {rec.claim_id!r}: node {pos} has neither text nor x")
        if pos == 0:
            if node.parent != -1:
                raise ClaimSchemaError(
                    lineno, f"claim {rec.claim_id!r}: node 0 must have parent -1")
        elif not 0 <= node.parent < pos:
            raise ClaimSchemaError(
                lineno,
                f"claim {rec.claim_id!r}: node {pos} has parent {node.parent}, "
                f"expected an id in [0, {pos})")


def _record_from_obj(obj, lineno: Optional[int]) -> ClaimRecord:
    if not isinstance(obj, dict):
        raise ClaimSchemaError(lineno, "record must be a JSON object")
    for key in ("id", "nodes"):
        if key not in obj:
            raise ClaimSchemaError(lineno, f"missing field {key!r}")
    label = obj.get("label")
    if label is not None and (isinstance(label, bool) or not isinstance(label, int)):
        raise ClaimSchemaError(lineno, f"label must be an integer or null, got {label!r}")
    if not isinstance(obj["nodes"], list):
        raise ClaimSchemaError(lineno, "'nodes' must be a list")
    nodes = []
    for raw in obj["nodes"]:
        if not isinstance(raw, dict) or "id" not in raw or "parent" not in raw:
            raise ClaimSchemaError(lineno, "every node needs 'id' and 'parent'")
        if not all(isinstance(raw[k], int) and not isinstance(raw[k], bool)
                   for k in ("id", "parent")):
            raise ClaimSchemaError(lineno, "node 'id' and 'parent' must be integers")
        text = raw.get("text")
        if text is not None and not isinstance(text, str):
            raise ClaimSchemaError(lineno, f"node {raw['id']}: 'text' must be a string")
        x = raw.get("x")
        if x is not None:
            if not isinstance(x, list) or not all(
                    isinstance(v, (int, float)) and not isinstance(v, bool) for v in x):
                raise ClaimSchemaError(lineno, f"node {raw['id']}: 'x' must be a list of numbers")
            x = tuple(float(v) for v in x)
        nodes.append(NodeRecord(raw["id"], raw["parent"], text, x))
    try:
        return ClaimRecord(str(obj["id"]), label, tuple(nodes))
    except ClaimSchemaError as exc:
        raise ClaimSchemaError(lineno, str(exc)) from None


def parse_claims(lines: Iterable[str]) -> list[ClaimRecord]:
    """Parse JSON-Lines claim records, keeping input order.

    Blank lines are skipped. Errors carry the 1-based line number.
    """
    out = []
    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ClaimSyntaxError(lineno, exc.msg) from None
        out.append(_record_from_obj(obj, lineno))
    return out


def load_claims(path) -> list[ClaimRecord]:
    with open(path, encoding="utf-8") as fh:
        return parse_claims(fh)


def record_to_dict(rec: ClaimRecord) -> dict:
    nodes = []
    for node in rec.nodes:
        d = {"id": node.node_id, "parent": node.parent}
        if node.text is not None:
            d["text"] = node.text
        if node.features is not None:
            d["x"] = list(node.features)
        nodes.append(d)
    return {"id": rec.claim_id, "label": rec.label, "nodes": nodes}


def dump_claims(records: Iterable[ClaimRecord], fh: IO[str]) -> None:
    for rec in records:
        fh.write(json.dumps(record_to_dict(rec), ensure_ascii=False, separators=(",", ":")))
        fh.write("\n")


@dataclass(frozen=True)
class FeaturizerConfig:
    """How node features are obtained.

    With ``source="text"`` every node's text is turned into a hashed
    bag-of-tokens count vector of length ``dim`` (128 when unset). With
    ``source="vectors"`` the records' ``x`` arrays are used as-is and must
    all have length ``dim`` (unset: the length of the first vector).
    ``source="auto"`` picks ``vectors`` when the first node carries ``x``.
    """

    dim: Optional[int] = None
    source: str = "auto"

    @property
    def text_dim(self) -> int:
        return 128 if self.dim is None else self.dim


_TOKEN_RE = re.compile(r"\w+", re.UNICODE)


def _token_bucket(token: str, dim: int) -> int:
    digest = hashlib.blake2b(token.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "little") % dim


def hashed_bag_of_tokens(text: str, dim: int = 128) -> np.ndarray:
    """Count vector of lowercase word tokens hashed into ``dim`` buckets."""
    vec = np.zeros(dim)
    for tok in _TOKEN_RE.findall(text.lower()):
        vec[_token_bucket(tok, dim)] += 1.0
    return vec


@dataclass(frozen=True, eq=False)
class PropagationTree:
    """A validated rooted reply tree with node features.

    Arrays are read-only. ``parent[0] == -1``; ``level`` is the reply depth
    (root 0, direct replies 1) and ``has_descendants`` marks nodes that
    received at least one reply.
    """

    parent: np.ndarray
    level: np.ndarray
    has_descendants: np.ndarray
    features: np.ndarray
    label: Optional[int] = None
    claim_id: str = ""

    @property
    def n(self) -> int:
        return len(self.parent)

    @property
    def n_features(self) -> int:
        return self.features.shape[1]

    def children(self) -> list[list[int]]:
        kids = [[] for _ in range(self.n)]
        for v in range(1, self.n):
            kids[self.parent[v]].append(v)
        return kids

    def edges(self) -> np.ndarray:
        """Parent->child edges, shape (n-1, 2), ordered by child id."""
        child = np.arange(1, self.n)
        return np.column_stack([self.parent[1:], child]).astype(np.int64)

    def with_features(self, features: np.ndarray) -> "PropagationTree":
        return tree_from_parents(self.parent, features, label=self.label, claim_id=self.claim_id)


def _readonly(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


def tree_from_parents(parent: Sequence[int], features=None, *, label=None,
                      claim_id: str = "") -> PropagationTree:
    """Build a tree from a parent array, validating its structure.

    Parents need not precede children here; exactly one root (node 0) and
    no cycles are required.
    """
    parent = np.array(parent, dtype=np.int64)
    n = len(parent)
    if n == 0:
        raise TreeStructureError("tree has no nodes")
    roots = np.flatnonzero(parent == -1)
    if len(roots) != 1 or roots[0] != 0:
        raise TreeStructureError(
            f"expected exactly one root at node 0, found roots at {roots.tolist()}")
    if n > 1 and (parent[1:].min() < 0 or parent[1:].max() >= n):
        raise TreeStructureError("parent index out of range")

    level = np.full(n, -1, dtype=np.int64)
    level[0] = 0
    if np.all(parent[1:] < np.arange(1, n)):
        for v in range(1, n):
            level[v] = level[parent[v]] + 1
    else:
        kids = [[] for _ in range(n)]
        for v in range(1, n):
            kids[parent[v]].append(v)
        stack = [0]
        while stack:
            u = stack.pop()
            for c in kids[u]:
                level[c] = level[u] + 1
                stack.append(c)
        if (level < 0).any():
            raise TreeStructureError("cycle detected: some nodes are unreachable from the root")

    has_desc = np.zeros(n, dtype=bool)
    has_desc[parent[1:]] = True

    if features is None:
        features = np.zeros((n, 0))
    features = np.array(features, dtype=np.float64)
    if features.ndim != 2 or features.shape[0] != n:
        raise FeatureDimensionError(
            f"features must have shape ({n}, D), got {features.shape}")
    return PropagationTree(_readonly(parent), _readonly(level), _readonly(has_desc),
                           _readonly(features), label, claim_id)


def _resolve_source(record: ClaimRecord, config: FeaturizerConfig) -> str:
    if config.source == "auto":
        return "vectors" if record.nodes[0].features is not None else "text"
    if config.source not in ("text", "vectors"):
        raise ValueError(f"unknown feature source {config.source!r}")
    return config.source


def build_tree(record: ClaimRecord, config: FeaturizerConfig = FeaturizerConfig()) -> PropagationTree:
    source = _resolve_source(record, config)
    if source == "text":
        dim = config.text_dim
        if dim <= 0:
            raise ValueError("text features need a positive dim")
        rows = []
        for node in record.nodes:
            if node.text is None:
                raise FeatureDimensionError(
                    f"claim {record.claim_id!r}: node {node.node_id} has no text "
                    "but the corpus uses text-derived features")
            rows.append(hashed_bag_of_tokens(node.text, dim))
        feats = np.vstack(rows)
    else:
        dim = config.dim
        rows = []
        for node in record.nodes:
            if node.features is None:
                raise FeatureDimensionError(
                    f"claim {record.claim_id!r}: node {node.node_id} has no x "
                    "but the corpus uses supplied vectors")
            if dim is None:
                dim = len(node.features)
            if len(node.features) != dim:
                raise FeatureDimensionError(
                    f"claim {record.claim_id!r}: node {node.node_id} has {len(node.features)} "
                    f"features, expected {dim}")
            rows.append(node.features)
        feats = np.array(rows, dtype=np.float64).reshape(len(rows), dim)
    return tree_from_parents([nd.parent for nd in record.nodes], feats,
                             label=record.label, claim_id=record.claim_id)


def build_trees(records: Sequence[ClaimRecord],
                config: FeaturizerConfig = FeaturizerConfig()) -> list[PropagationTree]:
    """Featurize a whole corpus with one feature source and dimension."""
    if not records:
        return []
    source = _resolve_source(records[0], config)
    dim = config.dim
    if source == "vectors" and dim is None:
        dim = len(records[0].nodes[0].features)
    config = FeaturizerConfig(dim=dim, source=source)
    return [build_tree(rec, config) for rec in records]


@dataclass(frozen=True, eq=False)
class AdjacencyView:
    direction: Direction
    edges: np.ndarray
    in_degree: np.ndarray
    n: int = field(default=0)

    def out_degree(self) -> np.ndarray:
        return np.bincount(self.edges[:, 0], minlength=self.n) if len(self.edges) else np.zeros(self.n, int)


def orient_edges(tree_edges: np.ndarray, direction) -> np.ndarray:
    """Orient parent->child pairs for the requested message-passing direction."""
    direction = Direction.coerce(direction)
    tree_edges = np.asarray(tree_edges, dtype=np.int64).reshape(-1, 2)
    if direction is Direction.TOP_DOWN:
        return tree_edges
    if direction is Direction.BOTTOM_UP:
        return tree_edges[:, ::-1].copy()
    return np.vstack([tree_edges, tree_edges[:, ::-1]])


def build_view(tree: PropagationTree, direction) -> AdjacencyView:
    direction = Direction.coerce(direction)
    edges = orient_edges(tree.edges(), direction)
    in_deg = np.bincount(edges[:, 1], minlength=tree.n) if len(edges) else np.zeros(tree.n, np.int64)
    return AdjacencyView(direction, _readonly(edges), _readonly(in_deg), tree.n)
