import csv
import json

import pytest

from rptcl.cli import CONFIG_SCHEMA, gradient_check, main

FAST = ["--hidden", "4", "--epochs", "2", "--batch-size", "4"]


@pytest.fixture
def corpus(tmp_path, monkeypatch):
    monkeypatch.delenv("RPTCL_OUTPUT_DIR", raising=False)
    monkeypatch.delenv("RPTCL_JOBS", raising=False)
    assert main(["synth", "--trees-per-class", "10", "--n-features", "6", "--seed", "3",
                 "--output-dir", str(tmp_path)]) == 0
    return tmp_path / "corpus.jsonl"


def _csvs(root):
    return {p.relative_to(root).as_posix(): p.read_bytes() for p in sorted(root.rglob("*.csv"))}


def test_unknown_subcommand_prints_usage(capsys):
    assert main(["frobnicate"]) != 0
    assert "usage" in capsys.readouterr().err
    assert main([]) != 0


def test_synth_writes_corpus_and_truth(corpus, capsys):
    out = corpus.parent
    assert (out / "synth_stats.csv").exists() and (out / "synth.txt").exists()
    assert len(corpus.read_text().splitlines()) == 20


def test_stats_matches_synth_truth(corpus, tmp_path):
    out = tmp_path / "s"
    assert main(["stats", "--data", str(corpus), "--output-dir", str(out)]) == 0
    assert (out / "stats.csv").read_bytes() == (corpus.parent / "synth_stats.csv").read_bytes()


@pytest.mark.parametrize("argv", [
    ["stats"],
    ["centrality", "--measure", "betweenness"],
    ["augment", "--p-node", "0.4"],
    ["train", "--splits", "2", *FAST],
    ["ablate", "--grid", "aug=none,random", "--splits", "1", *FAST],
])
def test_reruns_are_byte_identical(corpus, tmp_path, argv):
    runs = []
    for k in range(2):
        out = tmp_path / f"run{k}"
        assert main([*argv, "--data", str(corpus), "--output-dir", str(out), "--seed", "5"]) == 0
        runs.append(_csvs(out))
    assert runs[0] and runs[0] == runs[1]


def test_train_then_eval(corpus, tmp_path):
    out = tmp_path / "t"
    assert main(["train", "--data", str(corpus), "--splits", "2", *FAST,
                 "--output-dir", str(out)]) == 0
    for k in range(2):
        assert (out / "checkpoints" / f"split{k:02d}.ckpt").exists()
        rows = list(csv.reader(open(out / f"training_log_split{k:02d}.csv")))
        assert rows[0] == ["epoch", "l_sup", "l_unsup", "total", "val_accuracy"]
    ev = tmp_path / "e"
    assert main(["eval", "--data", str(corpus), "--split-seed", "1", "--output-dir", str(ev),
                 "--checkpoint", str(out / "checkpoints" / "split01.ckpt")]) == 0
    split_acc = list(csv.DictReader(open(out / "splits.csv")))[1]["accuracy"]
    ev_acc = list(csv.DictReader(open(ev / "metrics.csv")))[0]["acc_mean"]
    assert float(split_acc) == pytest.approx(float(ev_acc))


def test_alpha_sweep_rows(corpus, tmp_path):
    out = tmp_path / "a"
    assert main(["ablate", "--data", str(corpus), "--grid", "alpha=0,0.25,0.5,0.75,1.0",
                 "--splits", "1", *FAST, "--output-dir", str(out)]) == 0
    rows = list(csv.reader(open(out / "ablation.csv")))
    assert len(rows) == 6
    assert len(list((out / "cells").glob("*.json"))) == 5


def test_config_file_and_flag_precedence(corpus, tmp_path):
    cfg = {"schema_version": 1, "data": str(corpus), "output_dir": str(tmp_path / "c"),
           "model": {"hidden_dims": [4], "max_epochs": 1, "batch_size": 4},
           "splits": {"n_splits": 3}}
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg))
    assert main(["train", "--config", str(path), "--splits", "1"]) == 0
    assert len(list((tmp_path / "c").glob("training_log_*.csv"))) == 1


def test_env_output_dir(corpus, tmp_path, monkeypatch):
    monkeypatch.setenv("RPTCL_OUTPUT_DIR", str(tmp_path / "env"))
    assert main(["stats", "--data", str(corpus)]) == 0
    assert (tmp_path / "env" / "stats.csv").exists()


@pytest.mark.parametrize("cfg", [
    {"model": {}},
    {"schema_version": 2},
    {"schema_version": 1, "colour": "blue"},
    {"schema_version": 1, "model": {"lam": "high"}},
])
def test_bad_configs_are_rejected(tmp_path, cfg, capsys):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(cfg))
    assert main(["gradcheck", "--config", str(path), "--output-dir", str(tmp_path / "o")]) == 2
    assert "config" in capsys.readouterr().err
    assert not (tmp_path / "o").exists()


def test_failed_run_leaves_nothing_behind(tmp_path):
    bad = tmp_path / "bad.jsonl"
    bad.write_text('{"claim_id": "x", "label": 0, "nodes": [{"id": 0, "parent": 5}]}\n')
    out = tmp_path / "o"
    assert main(["stats", "--data", str(bad), "--output-dir", str(out)]) == 2
    assert not out.exists()
    assert main(["stats", "--data", str(tmp_path / "missing.jsonl"),
                 "--output-dir", str(out)]) == 2


def test_gradcheck_command(tmp_path):
    assert main(["gradcheck", "--output-dir", str(tmp_path)]) == 0
    rows = list(csv.DictReader(open(tmp_path / "gradcheck.csv")))
    assert all(float(r["rel_err"]) < 1e-4 for r in rows)
    assert main(["gradcheck", "--tol", "1e-30", "--output-dir", str(tmp_path)]) == 1


def test_gradient_check_helper():
    rows = gradient_check(seed=4, n_graphs=2, max_nodes=6)
    assert max(r[2] for r in rows) < 1e-4


def test_schema_requires_version():
    assert CONFIG_SCHEMA["required"] == ["schema_version"]
