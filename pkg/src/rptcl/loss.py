"""Contrastive, supervised and combined training objectives.

The unsupervised term compares the two views of every graph in a batch.
For graph ``i`` with views ``a_i`` and ``b_i`` and cosine similarity ``sim``::

    -sim(a_i, b_i) / tau
    + log mean_{j != i} exp(sim(a_i, b_j) / tau)
    + log mean_{j != i} exp(sim(a_j, b_i) / tau)

averaged over the batch; the other graphs of the batch act as negatives.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

__all__ = [
    "DegenerateEmbeddingWarning",
    "LossBreakdown",
    "cosine_sim",
    "contrastive_loss",
    "supervised_loss",
    "total_loss",
]


class DegenerateEmbeddingWarning(RuntimeWarning):
    pass


@dataclass(frozen=True)
class LossBreakdown:
    l_sup: float
    l_unsup: float
    lam: float
    total: float


def cosine_sim(x, y) -> float:
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    nx, ny = np.linalg.norm(x), np.linalg.norm(y)
    if nx == 0 or ny == 0:
        warnings.warn("cosine similarity of a zero vector taken as 0", DegenerateEmbeddingWarning)
        return 0.0
    return float(np.clip(x @ y / (nx * ny), -1.0, 1.0))


def _unit_rows(h):
    norms = np.linalg.norm(h, axis=1)
    zero = norms == 0
    if zero.any():
        warnings.warn(f"{int(zero.sum())} zero embedding(s); their similarities are taken as 0",
                      DegenerateEmbeddingWarning)
    safe = np.where(zero, 1.0, norms)
    return h / safe[:, None], safe, zero


def contrastive_loss(h1, h2, temperature: float = 1.0, return_grad: bool = False):
    """Batch contrastive loss of paired view embeddings (rows of ``h1``, ``h2``).

    With ``return_grad`` also returns the gradients w.r.t. ``h1`` and ``h2``.
    """
    h1 = np.asarray(h1, dtype=np.float64)
    h2 = np.asarray(h2, dtype=np.float64)
    if h1.shape != h2.shape or h1.ndim != 2:
        raise ValueError(f"paired embeddings must share a 2-d shape, got {h1.shape} and {h2.shape}")
    b = h1.shape[0]
    if b < 2:
        raise ValueError("contrastive loss needs a batch of at least 2 graphs")
    if temperature <= 0:
        raise ValueError("temperature must be positive")
    z1, n1, zero1 = _unit_rows(h1)
    z2, n2, zero2 = _unit_rows(h2)
    s = (z1 @ z2.T) / temperature
    off = ~np.eye(b, dtype=bool)
    masked = np.where(off, s, -np.inf)
    log_b1 = np.log(b - 1)
    row_lse = logsumexp(masked, axis=1) - log_b1
    col_lse = logsumexp(masked, axis=0) - log_b1
    loss = float(np.mean(-np.diag(s) + row_lse + col_lse))
    if not return_grad:
        return loss

    row_soft = np.exp(masked - (row_lse + log_b1)[:, None])
    col_soft = np.exp(masked - (col_lse + log_b1)[None, :])
    ds = (row_soft + col_soft - np.eye(b)) / b
    dz1 = ds @ z2 / temperature
    dz2 = ds.T @ z1 / temperature
    g1 = (dz1 - z1 * np.sum(dz1 * z1, axis=1, keepdims=True)) / n1[:, None]
    g2 = (dz2 - z2 * np.sum(dz2 * z2, axis=1, keepdims=True)) / n2[:, None]
    g1[zero1] = 0.0
    g2[zero2] = 0.0
    return loss, g1, g2


def supervised_loss(logits, labels, return_grad: bool = False):
    """Mean negative log-likelihood of integer ``labels`` under softmax(logits)."""
    logits = np.asarray(logits, dtype=np.float64)
    labels = np.asarray(labels)
    if labels.dtype == object or (labels.dtype.kind == "f" and np.isnan(labels).any()):
        raise ValueError("supervised loss needs a label for every graph in the batch")
    labels = labels.astype(np.int64)
    if (labels < 0).any():
        raise ValueError("supervised loss needs a label for every graph in the batch")
    b = len(labels)
    log_norm = logsumexp(logits, axis=1)
    loss = float(np.mean(log_norm - logits[np.arange(b), labels]))
    if not return_grad:
        return loss
    grad = np.exp(logits - log_norm[:, None])
    grad[np.arange(b), labels] -= 1.0
    return loss, grad / b


def total_loss(l_sup: float, l_unsup: float, lam: float) -> LossBreakdown:
    return LossBreakdown(l_sup, l_unsup, lam, l_sup + lam * l_unsup)
