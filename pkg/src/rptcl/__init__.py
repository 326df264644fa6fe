"""Centrality-guided contrastive learning on reply propagation trees."""

from .ablation import grid_cells, parse_grid, run_cell
from .augment import AugmentConfig, AugmentedView, Operator, generate_views, plan_augmentation
from .centrality import (Centrality, CentralityMeasure, check_principles, compute_centrality,
                         root_min_adjust)
from .estimator import (TreeContrastiveClassifier, batch_objective, TreeStatsTransformer,
                        UnrespondedReplyStripper)
from .stats import claim_stats, corpus_stats, strip_unresponded
from .synth import SynthSpec, synth_corpus
from .training import evaluate, make_splits, run_splits
from .tree import (ClaimRecord, Direction, FeaturizerConfig, NodeRecord, PropagationTree,
                   build_tree, build_trees, build_view, load_claims, parse_claims)

__version__ = "0.1.0"

__all__ = [
    "AugmentConfig",
    "AugmentedView",
    "Centrality",
    "CentralityMeasure",
    "ClaimRecord",
    "Direction",
    "FeaturizerConfig",
    "NodeRecord",
    "Operator",
    "PropagationTree",
    "SynthSpec",
    "TreeContrastiveClassifier",
    "TreeStatsTransformer",
    "UnrespondedReplyStripper",
    "batch_objective",
    "build_tree",
    "build_trees",
    "build_view",
    "check_principles",
    "claim_stats",
    "compute_centrality",
    "corpus_stats",
    "evaluate",
    "generate_views",
    "grid_cells",
    "load_claims",
    "make_splits",
    "parse_claims",
    "parse_grid",
    "plan_augmentation",
    "root_min_adjust",
    "run_cell",
    "run_splits",
    "strip_unresponded",
    "synth_corpus",
]
