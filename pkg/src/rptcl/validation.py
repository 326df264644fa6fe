"""Input checks shared by the estimators."""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .tree import ClaimRecord, FeaturizerConfig, PropagationTree, build_trees

UNLABELED = -1


def check_trees(X, n_features=None) -> list[PropagationTree]:
    """Return ``X`` as a list of trees with a common feature width.

    Claim records are featurized on the fly; anything else is rejected.
    """
    if isinstance(X, (PropagationTree, ClaimRecord)):
        raise TypeError("expected a sequence of trees, got a single tree")
    X = list(X)
    if not X:
        raise ValueError("found an empty sequence of trees")
    if all(isinstance(x, ClaimRecord) for x in X):
        X = build_trees(X, FeaturizerConfig(dim=n_features))
    for i, t in enumerate(X):
        if not isinstance(t, PropagationTree):
            raise TypeError(f"element {i} is {type(t).__name__}, expected PropagationTree")
    widths = {t.n_features for t in X}
    if len(widths) != 1:
        raise ValueError(f"trees have mixed feature widths {sorted(widths)}")
    if n_features is not None and widths != {n_features}:
        raise ValueError(f"trees have {widths.pop()} features, estimator was fitted with {n_features}")
    for t in X:
        if not np.isfinite(t.features).all():
            raise ValueError(f"claim {t.claim_id!r} has non-finite features")
    return X


def labels_of(trees: Sequence[PropagationTree]) -> np.ndarray:
    """Tree labels with ``-1`` standing in for unlabeled claims."""
    return np.array([UNLABELED if t.label is None else t.label for t in trees], dtype=np.int64)


def check_labels(y, n: int) -> np.ndarray:
    y = np.asarray(y)
    if y.ndim != 1 or len(y) != n:
        raise ValueError(f"y must be 1-d with {n} entries, got shape {y.shape}")
    if y.dtype.kind not in "iu":
        if y.dtype.kind == "f" and np.all(np.mod(y, 1) == 0):
            y = y.astype(np.int64)
        else:
            raise ValueError("labels must be integers (-1 marks unlabeled claims)")
    return y.astype(np.int64)
