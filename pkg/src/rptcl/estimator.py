"""scikit-learn compatible estimators.

:class:`TreeContrastiveClassifier` trains the graph encoder on a supervised
loss over the original trees plus a weighted contrastive loss over two
centrality-guided augmented views. :class:`UnrespondedReplyStripper` and
:class:`TreeStatsTransformer` are stateless transformers over lists of
trees, so everything composes in a :class:`sklearn.pipeline.Pipeline`.
"""

from __future__ import annotations

import logging
from typing import Optional

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .augment import AugmentConfig, generate_views, plan_augmentation
from .centrality import CentralityMeasure
from .encoder import (EncoderParams, classify, classify_backward, gcn_backward, gcn_forward,
                      init_params, make_batch)
from .loss import LossBreakdown, contrastive_loss, supervised_loss, total_loss
from .stats import claim_stats, strip_unresponded
from .tree import Direction
from .validation import UNLABELED, check_labels, check_trees, labels_of

__all__ = [
    "TrainingDivergedError",
    "batch_objective",
    "TreeContrastiveClassifier",
    "UnrespondedReplyStripper",
    "TreeStatsTransformer",
]

log = logging.getLogger(__name__)


class TrainingDivergedError(FloatingPointError):
    pass


def _seed(*parts) -> np.random.SeedSequence:
    return np.random.SeedSequence([int(p) for p in parts])


def batch_objective(params: EncoderParams, graphs, y_idx, views=None, lam=0.1,
                    temperature=1.0, direction=Direction.BOTTOM_UP):
    """Total loss of one batch and its gradient w.r.t. every parameter.

    ``y_idx`` holds class indices (``-1`` for unlabeled graphs, which only
    enter the contrastive term). ``views`` is ``(views1, views2)`` aligned
    with ``graphs``, or ``None`` for the supervised loss alone.
    """
    y_idx = np.asarray(y_idx)
    grads = params.zeros_like()
    cache = gcn_forward(make_batch(graphs, direction), params)
    emb = cache.embedding
    logits, _ = classify(emb, params)
    lab = y_idx != UNLABELED
    d_logits = np.zeros_like(logits)
    l_sup = 0.0
    if lab.any():
        l_sup, d_lab = supervised_loss(logits[lab], y_idx[lab], return_grad=True)
        # mean over the labeled part of the batch
        d_logits[lab] = d_lab
    d_emb = classify_backward(emb, params, d_logits, grads)
    gcn_backward(cache, params, d_emb, grads)

    l_unsup = 0.0
    if views is not None:
        c1 = gcn_forward(make_batch(views[0], direction), params)
        c2 = gcn_forward(make_batch(views[1], direction), params)
        l_unsup, g1, g2 = contrastive_loss(c1.embedding, c2.embedding, temperature,
                                           return_grad=True)
        unsup = params.zeros_like()
        gcn_backward(c1, params, g1, unsup)
        gcn_backward(c2, params, g2, unsup)
        for g, u in zip(grads.arrays(), unsup.arrays()):
            g += lam * u
    return total_loss(l_sup, l_unsup, lam), grads


class TreeContrastiveClassifier(ClassifierMixin, BaseEstimator):
    """Graph classifier for reply trees with adaptive contrastive regularisation.

    Parameters
    ----------
    hidden_dims : tuple of int
        Widths of the graph convolution layers.
    direction : {"bottom_up", "top_down", "undirected"}
        Message-passing direction of the encoder.
    operators : pair of {"node_drop", "attr_mask", "edge_drop"} or None
        Operator producing each augmented view. ``None`` trains the plain
        supervised encoder without views or contrastive loss.
    adaptive : bool
        Centrality-guided probabilities; ``False`` uses the base rates
        uniformly (random augmentation).
    centrality : str
        Node centrality guiding the augmentation.
    centrality_direction : str or None
        View the centrality is computed on; ``None`` uses the measure's default.
    p_node, p_mask, p_edge : float
        Overall node-drop, mask (defaults to ``p_node``) and edge-drop rates.
    p_max : float
        Ceiling on any single drop/mask probability.
    delta : float
        Smoothing constant inside ``log(centrality + delta)``.
    compose_views : bool
        Apply both operators to each view instead of one operator per view.
    temperature : float
        Temperature of the contrastive loss.
    lam : float
        Weight of the contrastive loss in the total objective.
    learning_rate : float
        Step size of plain gradient descent.
    batch_size : int
        Graphs per update (at least 2; the last partial batch is merged).
    max_epochs, patience : int
        Epoch budget and early-stopping patience on validation accuracy.
    random_state : int
        Seed for initialisation, batching and augmentation.

    Attributes
    ----------
    classes_ : ndarray
    params_ : EncoderParams
    history_ : list of dict
        One row per epoch: epoch, l_sup, l_unsup, total, val_accuracy, val_loss.
    best_epoch_ : int
    """

    def __init__(self, hidden_dims=(64, 64), direction="bottom_up",
                 operators=("node_drop", "edge_drop"), adaptive=True, centrality="pagerank",
                 centrality_direction=None, p_node=0.2, p_mask=None, p_edge=0.2, p_max=0.85,
                 delta=1.0, compose_views=False, temperature=1.0, lam=0.1,
                 learning_rate=0.01, batch_size=16, max_epochs=100, patience=20,
                 random_state=0, verbose=0):
        self.hidden_dims = hidden_dims
        self.direction = direction
        self.operators = operators
        self.adaptive = adaptive
        self.centrality = centrality
        self.centrality_direction = centrality_direction
        self.p_node = p_node
        self.p_mask = p_mask
        self.p_edge = p_edge
        self.p_max = p_max
        self.delta = delta
        self.compose_views = compose_views
        self.temperature = temperature
        self.lam = lam
        self.learning_rate = learning_rate
        self.batch_size = batch_size
        self.max_epochs = max_epochs
        self.patience = patience
        self.random_state = random_state
        self.verbose = verbose

    def augment_config(self) -> Optional[AugmentConfig]:
        if self.operators is None:
            return None
        measure = CentralityMeasure(self.centrality, self.centrality_direction)
        return AugmentConfig(tuple(self.operators), self.p_node, self.p_mask, self.p_edge,
                             self.p_max, self.delta, measure, self.adaptive, self.compose_views)

    def _validate_hyperparams(self):
        if self.batch_size < 2:
            raise ValueError("batch_size must be at least 2")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.lam < 0:
            raise ValueError("lam must be non-negative")
        Direction.coerce(self.direction)

    def fit(self, X, y=None, validation_data=None):
        """Train on trees ``X`` with labels ``y`` (``-1`` = unlabeled).

        ``y=None`` takes labels from the trees. ``validation_data`` is an
        optional ``(X_val, y_val)`` pair used for early stopping and model
        selection (best accuracy, ties to lower loss).
        """
        self._validate_hyperparams()
        X = check_trees(X)
        y = labels_of(X) if y is None else check_labels(y, len(X))
        labeled = y != UNLABELED
        if not labeled.any():
            raise ValueError("need at least one labeled claim")
        self.classes_ = np.unique(y[labeled])
        y_idx = np.full(len(y), UNLABELED)
        y_idx[labeled] = np.searchsorted(self.classes_, y[labeled])
        self.n_features_in_ = X[0].n_features

        val = None
        if validation_data is not None:
            X_val = check_trees(validation_data[0], self.n_features_in_)
            y_val = validation_data[1]
            y_val = labels_of(X_val) if y_val is None else check_labels(y_val, len(X_val))
            keep = np.isin(y_val, self.classes_)
            X_val = [t for t, k in zip(X_val, keep) if k]
            val = (X_val, np.searchsorted(self.classes_, y_val[keep])) if X_val else None

        seed = int(self.random_state or 0)
        params = init_params(self.n_features_in_, self.hidden_dims, len(self.classes_),
                             _seed(seed, 0))
        cfg = self.augment_config()
        plans = [plan_augmentation(t, cfg) for t in X] if cfg is not None else None
        if cfg is not None and len(X) < 2:
            raise ValueError("contrastive training needs at least 2 claims")
        direction = Direction.coerce(self.direction)
        order_rng = np.random.default_rng(_seed(seed, 1))
        n_batches = max(1, len(X) // self.batch_size)

        self.history_ = []
        best = (-1.0, np.inf)
        best_params, self.best_epoch_ = params.copy(), 0
        stale = 0
        for epoch in range(1, self.max_epochs + 1):
            sums = np.zeros(3)
            for batch in np.array_split(order_rng.permutation(len(X)), n_batches):
                loss, grads = self._batch_step(X, y_idx, batch, params, cfg, plans, direction,
                                               seed, epoch)
                for a, g in zip(params.arrays(), grads.arrays()):
                    a -= self.learning_rate * g
                sums += (loss.l_sup, loss.l_unsup, loss.total)
            means = sums / n_batches
            row = {"epoch": epoch, "l_sup": means[0], "l_unsup": means[1], "total": means[2],
                   "val_accuracy": float("nan"), "val_loss": float("nan")}
            if val is not None:
                acc, vloss = self._score_idx(params, direction, *val)
                row["val_accuracy"], row["val_loss"] = acc, vloss
                if acc > best[0] or (acc == best[0] and vloss < best[1]):
                    best, best_params, self.best_epoch_ = (acc, vloss), params.copy(), epoch
                    stale = 0
                else:
                    stale += 1
            self.history_.append(row)
            if self.verbose:
                log.info("epoch %d  l_sup %.4f  l_unsup %.4f  total %.4f  val_acc %.4f",
                         epoch, *means, row["val_accuracy"])
            if val is not None and self.patience and stale >= self.patience:
                break
        if val is None:
            best_params, self.best_epoch_ = params, len(self.history_)
        self.params_ = best_params
        return self

    def _batch_step(self, X, y_idx, batch, params, cfg, plans, direction, seed, epoch):
        views = None
        if cfg is not None:
            pairs = [generate_views(X[i], cfg, _seed(seed, 2, epoch, i), plans[i]) for i in batch]
            views = ([p[0] for p in pairs], [p[1] for p in pairs])
        loss, grads = batch_objective(params, [X[i] for i in batch], y_idx[batch], views,
                                      self.lam, self.temperature, direction)
        if not np.isfinite(loss.total) or not all(np.isfinite(g).all() for g in grads.arrays()):
            raise TrainingDivergedError(
                f"non-finite loss at epoch {epoch}: l_sup={loss.l_sup!r}, "
                f"l_unsup={loss.l_unsup!r}; "
                f"max |param| = {max(np.abs(a).max() for a in params.arrays()):.3g}, "
                f"learning_rate={self.learning_rate}")
        return loss, grads

    def _forward(self, params, X, direction, chunk=256):
        embs = []
        for start in range(0, len(X), chunk):
            embs.append(gcn_forward(make_batch(X[start:start + chunk], direction), params).embedding)
        return np.vstack(embs)

    def _score_idx(self, params, direction, X, y_idx):
        logits, proba = classify(self._forward(params, X, direction), params)
        acc = float(np.mean(proba.argmax(axis=1) == y_idx))
        return acc, supervised_loss(logits, y_idx)

    def transform(self, X) -> np.ndarray:
        """Graph embeddings of the original (unaugmented) trees."""
        check_is_fitted(self, "params_")
        X = check_trees(X, self.n_features_in_)
        return self._forward(self.params_, X, Direction.coerce(self.direction))

    def decision_function(self, X) -> np.ndarray:
        logits, _ = classify(self.transform(X), self.params_)
        return logits

    def predict_proba(self, X) -> np.ndarray:
        _, proba = classify(self.transform(X), self.params_)
        return proba

    def predict(self, X) -> np.ndarray:
        check_is_fitted(self, "params_")
        return self.classes_[self.predict_proba(X).argmax(axis=1)]

    def epoch_losses(self) -> list[LossBreakdown]:
        check_is_fitted(self, "history_")
        return [LossBreakdown(r["l_sup"], r["l_unsup"], self.lam, r["total"]) for r in self.history_]

    @classmethod
    def from_params(cls, params: EncoderParams, classes, **kwargs) -> "TreeContrastiveClassifier":
        """A fitted classifier around existing parameters (e.g. a checkpoint)."""
        clf = cls(**kwargs)
        clf.params_ = params
        clf.classes_ = np.asarray(classes)
        clf.n_features_in_ = params.in_dim
        clf.history_ = []
        return clf


class UnrespondedReplyStripper(TransformerMixin, BaseEstimator):
    """Remove a fraction ``alpha`` of each tree's unresponded 1-level replies."""

    def __init__(self, alpha=0.0, random_state=0):
        self.alpha = alpha
        self.random_state = random_state

    def fit(self, X, y=None):
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError(f"alpha must lie in [0, 1], got {self.alpha}")
        return self

    def transform(self, X):
        X = check_trees(X)
        return [strip_unresponded(t, self.alpha, _seed(self.random_state or 0, 3, i))
                for i, t in enumerate(X)]

    def __sklearn_tags__(self):
        tags = super().__sklearn_tags__()
        tags.requires_fit = False
        return tags


class TreeStatsTransformer(TransformerMixin, BaseEstimator):
    """Per-claim structural counts as a (n_claims, 5) integer array.

    Columns: replies, level1, level2, deeper, responded_level1.
    """

    columns = ("replies", "level1", "level2", "deeper", "responded_level1")

    def fit(self, X, y=None):
        return self

    def transform(self, X):
        X = check_trees(X)
        return np.array([[getattr(claim_stats(t), c) for c in self.columns] for t in X],
                        dtype=np.int64)
