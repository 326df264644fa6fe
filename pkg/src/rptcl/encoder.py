"""A small graph convolutional encoder with hand-written backward pass.

Each layer computes ``H' = act(A_hat @ H @ W + b)``, where ``A_hat`` averages a
node's own row with the rows of its in-neighbours (so every row of ``A_hat``
sums to one and isolated nodes only see themselves). Hidden layers use ReLU,
the last layer is linear. A graph embedding is the mean of its node rows.

Graphs of a batch are stacked into one block-diagonal system.
"""

from __future__ import annotations

import hashlib
import json
import struct
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np
import scipy.sparse as sp

from .augment import AugmentedView
from .tree import Direction, PropagationTree, orient_edges

__all__ = [
    "EncoderParams",
    "GraphBatch",
    "ForwardCache",
    "init_params",
    "make_batch",
    "gcn_forward",
    "gcn_backward",
    "classify",
    "classify_backward",
    "softmax",
    "aggregation_matrix",
    "save_checkpoint",
    "load_checkpoint",
]


@dataclass
class EncoderParams:
    """Layer weights ``(W, b)`` with ``W`` of shape (d_in, d_out), plus a head."""

    layers: list
    head_w: np.ndarray
    head_b: np.ndarray

    def __post_init__(self):
        d = None
        for i, (w, b) in enumerate(self.layers):
            if d is not None and w.shape[0] != d:
                raise ValueError(f"layer {i} expects {w.shape[0]} inputs, previous layer gives {d}")
            if b.shape != (w.shape[1],):
                raise ValueError(f"layer {i} bias has shape {b.shape}, expected ({w.shape[1]},)")
            d = w.shape[1]
        if self.head_w.shape[0] != d:
            raise ValueError(f"head expects {self.head_w.shape[0]} inputs, encoder gives {d}")

    @property
    def in_dim(self) -> int:
        return self.layers[0][0].shape[0]

    @property
    def embed_dim(self) -> int:
        return self.layers[-1][0].shape[1]

    @property
    def n_classes(self) -> int:
        return self.head_w.shape[1]

    def named_arrays(self) -> list[tuple[str, np.ndarray]]:
        out = []
        for i, (w, b) in enumerate(self.layers):
            out.append((f"layer{i}.weight", w))
            out.append((f"layer{i}.bias", b))
        out.append(("head.weight", self.head_w))
        out.append(("head.bias", self.head_b))
        return out

    def arrays(self) -> list[np.ndarray]:
        return [a for _, a in self.named_arrays()]

    @classmethod
    def from_arrays(cls, arrays: Sequence[np.ndarray]) -> "EncoderParams":
        arrays = list(arrays)
        layers = [(arrays[i], arrays[i + 1]) for i in range(0, len(arrays) - 2, 2)]
        return cls(layers, arrays[-2], arrays[-1])

    def copy(self) -> "EncoderParams":
        return EncoderParams.from_arrays([a.copy() for a in self.arrays()])

    def zeros_like(self) -> "EncoderParams":
        return EncoderParams.from_arrays([np.zeros_like(a) for a in self.arrays()])


def init_params(in_dim: int, hidden_dims: Sequence[int], n_classes: int,
                seed=None) -> EncoderParams:
    """Glorot-uniform weights, zero biases."""
    rng = np.random.default_rng(seed)
    dims = [in_dim, *hidden_dims]
    layers = []
    for d_in, d_out in zip(dims[:-1], dims[1:]):
        bound = np.sqrt(6.0 / (d_in + d_out))
        layers.append((rng.uniform(-bound, bound, (d_in, d_out)), np.zeros(d_out)))
    bound = np.sqrt(6.0 / (dims[-1] + n_classes))
    head_w = rng.uniform(-bound, bound, (dims[-1], n_classes))
    return EncoderParams(layers, head_w, np.zeros(n_classes))


def aggregation_matrix(n: int, edges: np.ndarray) -> sp.csr_matrix:
    """Row-stochastic mean over each node and its in-neighbours.

    ``edges`` are directed ``(src, dst)`` pairs; ``dst`` aggregates ``src``.
    """
    edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
    rows = np.concatenate([np.arange(n), edges[:, 1]])
    cols = np.concatenate([np.arange(n), edges[:, 0]])
    deg = np.bincount(rows, minlength=n).astype(np.float64)
    vals = 1.0 / deg[rows]
    return sp.csr_matrix((vals, (rows, cols)), shape=(n, n))


@dataclass
class GraphBatch:
    features: np.ndarray
    adj: sp.csr_matrix
    pool: sp.csr_matrix
    sizes: np.ndarray


Graph = Union[PropagationTree, AugmentedView]


def _graph_parts(g: Graph):
    if isinstance(g, AugmentedView):
        return g.features, g.local_edges()
    return g.features, g.edges()


def make_batch(graphs: Sequence[Graph], direction=Direction.BOTTOM_UP) -> GraphBatch:
    direction = Direction.coerce(direction)
    feats, edge_blocks, sizes = [], [], []
    offset = 0
    for g in graphs:
        x, e = _graph_parts(g)
        feats.append(x)
        edge_blocks.append(orient_edges(e, direction) + offset)
        sizes.append(len(x))
        offset += len(x)
    sizes = np.array(sizes, dtype=np.int64)
    n = int(sizes.sum())
    adj = aggregation_matrix(n, np.vstack(edge_blocks) if edge_blocks else np.zeros((0, 2), np.int64))
    graph_of = np.repeat(np.arange(len(sizes)), sizes)
    pool = sp.csr_matrix((1.0 / sizes[graph_of], (graph_of, np.arange(n))), shape=(len(sizes), n))
    return GraphBatch(np.vstack(feats), adj, pool, sizes)


@dataclass
class ForwardCache:
    batch: GraphBatch
    aggregated: list = field(default_factory=list)
    pre_act: list = field(default_factory=list)
    nodes: Optional[np.ndarray] = None
    embedding: Optional[np.ndarray] = None


def gcn_forward(batch: GraphBatch, params: EncoderParams) -> ForwardCache:
    """Node matrix of the last layer and one mean-pooled embedding per graph."""
    h = batch.features
    if h.shape[1] != params.in_dim:
        raise ValueError(f"features have {h.shape[1]} columns, encoder expects {params.in_dim}")
    cache = ForwardCache(batch)
    last = len(params.layers) - 1
    for i, (w, b) in enumerate(params.layers):
        ah = batch.adj @ h
        z = ah @ w + b
        cache.aggregated.append(ah)
        cache.pre_act.append(z)
        h = np.maximum(z, 0.0) if i < last else z
    cache.nodes = h
    cache.embedding = batch.pool @ h
    return cache


def gcn_backward(cache: ForwardCache, params: EncoderParams, d_embedding: np.ndarray,
                 grads: Optional[EncoderParams] = None):
    """Accumulate encoder gradients into ``grads``; return (grads, d_features)."""
    if grads is None:
        grads = params.zeros_like()
    batch = cache.batch
    dh = batch.pool.T @ d_embedding
    last = len(params.layers) - 1
    for i in range(last, -1, -1):
        w, _ = params.layers[i]
        dz = dh if i == last else dh * (cache.pre_act[i] > 0)
        gw, gb = grads.layers[i]
        gw += cache.aggregated[i].T @ dz
        gb += dz.sum(axis=0)
        dh = batch.adj.T @ (dz @ w.T)
    return grads, dh


def softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def classify(embedding: np.ndarray, params: EncoderParams):
    """Class logits and probabilities for a batch of embeddings."""
    logits = embedding @ params.head_w + params.head_b
    return logits, softmax(logits)


def classify_backward(embedding: np.ndarray, params: EncoderParams, d_logits: np.ndarray,
                      grads: EncoderParams) -> np.ndarray:
    grads.head_w += embedding.T @ d_logits
    grads.head_b += d_logits.sum(axis=0)
    return d_logits @ params.head_w.T


_MAGIC = b"RPTCLCK1"


def _config_hash(config: dict) -> str:
    blob = json.dumps(config, sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha256(blob).hexdigest()


def save_checkpoint(path, params: EncoderParams, config: Optional[dict] = None) -> None:
    """Write parameters as named little-endian float64 arrays behind a JSON header.

    Layout: 8-byte magic, uint64 header length, UTF-8 JSON header, raw data.
    """
    config = config or {}
    entries, offset = [], 0
    for name, arr in params.named_arrays():
        entries.append({"name": name, "shape": list(arr.shape), "offset": offset})
        offset += arr.size * 8
    header = json.dumps({"arrays": entries, "config": config,
                         "config_hash": _config_hash(config)},
                        sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<Q", len(header)))
        fh.write(header)
        for _, arr in params.named_arrays():
            fh.write(np.ascontiguousarray(arr, dtype="<f8").tobytes())


def load_checkpoint(path) -> tuple[EncoderParams, dict]:
    with open(path, "rb") as fh:
        blob = fh.read()
    if blob[:8] != _MAGIC:
        raise ValueError(f"{path}: not a checkpoint file")
    (hlen,) = struct.unpack("<Q", blob[8:16])
    header = json.loads(blob[16:16 + hlen].decode("utf-8"))
    if header["config_hash"] != _config_hash(header["config"]):
        raise ValueError(f"{path}: config hash mismatch")
    data = blob[16 + hlen:]
    arrays = []
    for entry in header["arrays"]:
        count = int(np.prod(entry["shape"])) if entry["shape"] else 1
        start = entry["offset"]
        arr = np.frombuffer(data, dtype="<f8", count=count, offset=start)
        arrays.append(arr.reshape(entry["shape"]).astype(np.float64))
    return EncoderParams.from_arrays(arrays), header["config"]
