import csv
import io

import numpy as np
import pytest

from rptcl.estimator import TreeContrastiveClassifier
from rptcl.synth import ClassRecipe, SynthSpec, synth_corpus
from rptcl.training import (evaluate, make_splits, metrics_csv, metrics_from_predictions,
                            run_splits, summarize, training_log_csv)
from rptcl.tree import build_trees, tree_from_parents


def test_split_sizes_and_disjointness():
    labels = np.repeat([0, 1], 50)
    tr, va, te = make_splits(labels, seed=0)
    assert (len(tr), len(va), len(te)) == (80, 10, 10)
    assert len(np.intersect1d(tr, va)) == len(np.intersect1d(tr, te)) == 0
    assert sorted(np.concatenate([tr, va, te]).tolist()) == list(range(100))


def test_splits_are_seeded():
    labels = np.repeat([0, 1, 2], [30, 41, 29])
    a, b, c = make_splits(labels, seed=4), make_splits(labels, seed=4), make_splits(labels, seed=5)
    assert all(np.array_equal(x, y) for x, y in zip(a, b))
    assert not all(np.array_equal(x, y) for x, y in zip(a, c))


@pytest.mark.parametrize("counts", [(50, 50), (37, 61, 9), (11, 12), (5, 5, 5, 5, 83)])
@pytest.mark.parametrize("seed", range(3))
def test_stratification_within_one_item(counts, seed):
    labels = np.random.default_rng(seed).permutation(np.repeat(np.arange(len(counts)), counts))
    parts = make_splits(labels, seed=seed)
    n = len(labels)
    for part, ratio in zip(parts, (0.8, 0.1, 0.1)):
        for c, k in enumerate(counts):
            got = int((labels[part] == c).sum())
            assert abs(got - k * ratio) <= 1
        assert abs(len(part) - n * ratio) < 1


def test_split_errors():
    with pytest.raises(ValueError):
        make_splits([0, 0, 0, 1, 1])           # class 1 cannot fill three splits
    with pytest.raises(ValueError):
        make_splits([0, 1, -1] * 5)
    with pytest.raises(ValueError):
        make_splits([0, 1] * 10, ratios=(0.5, 0.5, 0.5))


def test_metrics_from_confusion_matrix():
    y_true = [0] * 10 + [1] * 10
    y_pred = [0] * 8 + [1] * 2 + [0] * 1 + [1] * 9
    m = metrics_from_predictions(y_true, y_pred)
    assert m.confusion.tolist() == [[8, 2], [1, 9]]
    assert m.accuracy == 0.85
    assert m.precision[0] == pytest.approx(8 / 9)
    assert m.recall[0] == pytest.approx(0.8)
    p, r = m.precision, m.recall
    np.testing.assert_allclose(m.f1, 2 * p * r / (p + r))


def test_perfect_and_all_wrong():
    m = metrics_from_predictions([0, 1, 1], [0, 1, 1])
    assert m.accuracy == 1.0 and (m.precision == 1).all() and (m.f1 == 1).all()
    m = metrics_from_predictions([0, 1, 1], [1, 0, 0])
    assert m.accuracy == 0.0 and (m.recall == 0).all() and (m.f1 == 0).all()


def test_empty_split_is_rejected():
    with pytest.raises(ValueError):
        metrics_from_predictions([], [])


@pytest.fixture(scope="module")
def small_corpus():
    spec = SynthSpec.separable(trees_per_class=30, n_features=8,
                               recipes=(ClassRecipe(unresponded_level1=(1, 3)),) * 2)
    return build_trees(synth_corpus(spec, seed=7).records)


def _clf(**kw):
    base = dict(hidden_dims=(8,), max_epochs=4, batch_size=8, random_state=3)
    base.update(kw)
    return TreeContrastiveClassifier(**base)


def test_training_is_bit_reproducible(small_corpus):
    a = _clf().fit(small_corpus)
    b = _clf().fit(small_corpus)
    for x, y in zip(a.params_.arrays(), b.params_.arrays()):
        assert np.array_equal(x, y)
    assert training_log_csv(a.history_) == training_log_csv(b.history_)


def test_zero_weight_and_zero_rates_reduce_to_plain_training(small_corpus):
    plain = _clf(operators=None).fit(small_corpus)
    aug = _clf(lam=0.0, p_node=0.0, p_edge=0.0).fit(small_corpus)
    assert [r["l_sup"] for r in plain.history_] == [r["l_sup"] for r in aug.history_]
    for x, y in zip(plain.params_.arrays(), aug.params_.arrays()):
        assert np.array_equal(x, y)


def test_separable_loss_decreases():
    spec = SynthSpec.separable(trees_per_class=40)
    trees = build_trees(synth_corpus(spec, seed=0).records)
    clf = TreeContrastiveClassifier(max_epochs=10, random_state=0).fit(trees)
    totals = [r["total"] for r in clf.history_]
    assert all(b < a for a, b in zip(totals, totals[1:]))


def test_evaluate_is_pure(small_corpus):
    clf = _clf().fit(small_corpus[:40])
    m1 = evaluate(clf, small_corpus[40:])
    m2 = evaluate(clf, small_corpus[40:])
    assert m1.accuracy == m2.accuracy
    np.testing.assert_array_equal(m1.confusion, m2.confusion)


def test_evaluate_needs_labels(small_corpus):
    clf = _clf(max_epochs=1).fit(small_corpus)
    unlabeled = tree_from_parents([-1, 0], np.zeros((2, 8)))
    with pytest.raises(ValueError):
        evaluate(clf, [unlabeled])
    with pytest.raises(ValueError):
        evaluate(clf, [])


def test_run_splits_and_reports(small_corpus):
    seen = []
    summary, runs = run_splits(_clf(max_epochs=2), small_corpus, n_splits=3,
                               callback=seen.append)
    assert len(runs) == len(seen) == 3
    assert [r.seed for r in runs] == [0, 1, 2]
    assert [r.estimator.random_state for r in runs] == [0, 1, 2]
    accs = [r.metrics.accuracy for r in runs]
    assert summary.accuracy_mean == pytest.approx(np.mean(accs))
    rows = list(csv.reader(io.StringIO(metrics_csv(summary, {0: "non-rumor", 1: "rumor"}))))
    assert rows[0] == ["class", "acc_mean", "acc_std", "precision", "recall", "f1"]
    assert [r[0] for r in rows[1:]] == ["non-rumor", "rumor"]
    assert summarize([r.metrics for r in runs]).accuracy_std == pytest.approx(np.std(accs))


def test_training_log_columns(small_corpus):
    clf = _clf(max_epochs=2).fit(small_corpus)
    rows = list(csv.reader(io.StringIO(training_log_csv(clf.history_))))
    assert rows[0] == ["epoch", "l_sup", "l_unsup", "total", "val_accuracy"]
    assert len(rows) == 3
    for row in rows[1:]:
        assert float(row[3]) == pytest.approx(float(row[1]) + 0.1 * float(row[2]))
