import csv
import io

import pytest

from rptcl.ablation import (ablation_csv, cell_estimator, format_ablation, grid_cells, parse_aug,
                            parse_grid, run_cell)
from rptcl.estimator import TreeContrastiveClassifier
from rptcl.synth import SynthSpec, synth_corpus
from rptcl.tree import build_trees


def test_parse_aug():
    assert parse_aug("none") == {"operators": None}
    assert parse_aug("random") == {"operators": ("node_drop", "edge_drop"), "adaptive": False}
    assert parse_aug("nd+am") == {"operators": ("node_drop", "attr_mask"), "adaptive": True}
    assert parse_aug("random:am+ed")["adaptive"] is False
    for bad in ("nd", "nd+nd", "xx+ed", "random:"):
        with pytest.raises(ValueError):
            parse_aug(bad)


def test_parse_grid_keeps_order_and_validates():
    grid = parse_grid(["direction=top_down,bottom_up", "alpha=0,0.5"])
    assert list(grid) == ["direction", "alpha"]
    assert len(grid_cells(grid)) == 4
    assert grid_cells(grid)[1] == {"direction": "top_down", "alpha": "0.5"}
    for bad in (["alpha=2"], ["beta=1"], ["alpha"], ["alpha="], ["alpha=0", "alpha=1"],
                ["centrality=fame"], []):
        with pytest.raises(ValueError):
            parse_grid(bad)


def test_cell_estimator_overrides():
    base = TreeContrastiveClassifier(lam=0.3)
    assert cell_estimator({"alpha": "0.5"}, base).operators is None
    est = cell_estimator({"alpha": "0", "aug": "random:nd+am", "centrality": "Degree",
                          "direction": "top_down"}, base)
    assert est.operators == ("node_drop", "attr_mask") and not est.adaptive
    assert est.centrality == "degree" and est.direction == "top_down" and est.lam == 0.3
    assert base.operators == ("node_drop", "edge_drop")


@pytest.fixture(scope="module")
def trees():
    return build_trees(synth_corpus(SynthSpec.noisy(trees_per_class=10, n_features=6),
                                    seed=3).records)


def test_alpha_sweep_gives_one_row_per_value(trees):
    base = TreeContrastiveClassifier(hidden_dims=(4,), max_epochs=2, batch_size=4)
    cells = grid_cells(parse_grid(["alpha=0,0.25,0.5,0.75,1.0"]))
    results = [run_cell(c, trees, base, n_splits=2) for c in cells]
    rows = list(csv.reader(io.StringIO(ablation_csv(results))))
    assert rows[0] == ["alpha", "acc_mean", "acc_std", "macro_f1"]
    assert [r[0] for r in rows[1:]] == ["0", "0.25", "0.5", "0.75", "1.0"]
    assert all(len(r.accuracies) == 2 for r in results)
    assert ablation_csv(results) == ablation_csv(
        [run_cell(c, trees, base, n_splits=2) for c in cells])


def test_centrality_cells_report_timing(trees):
    base = TreeContrastiveClassifier(hidden_dims=(4,), max_epochs=1, batch_size=4)
    res = run_cell({"centrality": "degree"}, trees, base, n_splits=1)
    assert res.centrality_seconds > 0
    assert "ms/tree" in format_ablation([res])
    assert "ms" not in ablation_csv([res])
