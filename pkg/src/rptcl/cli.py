"""Command-line driver: ``rptcl <subcommand> [options]``.

Every subcommand writes a human-readable ``.txt`` report and one or more CSV
files into the output directory (``--output-dir``, ``$RPTCL_OUTPUT_DIR`` or
the config's ``output_dir``). Files are written atomically, and everything a
failed run has written is removed again.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import tempfile
from concurrent.futures import ProcessPoolExecutor
from dataclasses import fields
from pathlib import Path

import jsonschema
import numpy as np

from . import __version__
from .ablation import (ablation_csv, format_ablation, grid_cells, parse_grid, run_cell)
from .augment import AugmentConfig, generate_views, plan_augmentation
from .centrality import CentralityMeasure, check_principles, compute_centrality, root_min_adjust
from .encoder import init_params, load_checkpoint, save_checkpoint
from .estimator import TreeContrastiveClassifier, batch_objective
from .stats import corpus_stats, format_stats_table, stats_csv
from .synth import SynthSpec, synth_corpus
from .training import (evaluate, make_splits, metrics_csv, run_splits, summarize,
                       training_log_csv)
from .tree import (FeaturizerConfig, TreeStructureError, build_trees, dump_claims,
                   load_claims, tree_from_parents)
from .validation import labels_of

log = logging.getLogger("rptcl")

SCHEMA_VERSION = 1
COMMANDS = ("stats", "centrality", "augment", "train", "eval", "ablate", "synth", "gradcheck")

_MODEL_KEYS = {
    "hidden_dims": {"type": "array", "items": {"type": "integer", "minimum": 1}, "minItems": 1},
    "direction": {"enum": ["bottom_up", "top_down", "undirected"]},
    "operators": {"anyOf": [{"type": "null"},
                            {"type": "array", "items": {"type": "string"},
                             "minItems": 2, "maxItems": 2}]},
    "adaptive": {"type": "boolean"},
    "centrality": {"type": "string"},
    "centrality_direction": {"type": ["string", "null"]},
    "p_node": {"type": "number"}, "p_mask": {"type": ["number", "null"]},
    "p_edge": {"type": "number"}, "p_max": {"type": "number"}, "delta": {"type": "number"},
    "compose_views": {"type": "boolean"}, "temperature": {"type": "number"},
    "lam": {"type": "number"}, "learning_rate": {"type": "number"},
    "batch_size": {"type": "integer"}, "max_epochs": {"type": "integer"},
    "patience": {"type": "integer"},
}

_SYNTH_KEYS = {f.name: {} for f in fields(SynthSpec) if f.name != "recipes"}
_SYNTH_KEYS["kind"] = {"enum": ["separable", "noisy"]}

CONFIG_SCHEMA = {
    "type": "object",
    "required": ["schema_version"],
    "additionalProperties": False,
    "properties": {
        "schema_version": {"const": SCHEMA_VERSION},
        "data": {"type": "string"},
        "output_dir": {"type": "string"},
        "seed": {"type": "integer", "minimum": 0},
        "jobs": {"type": "integer", "minimum": 1},
        "feature_dim": {"type": "integer", "minimum": 1},
        "model": {"type": "object", "properties": _MODEL_KEYS, "additionalProperties": False},
        "splits": {"type": "object", "additionalProperties": False, "properties": {
            "n_splits": {"type": "integer", "minimum": 1},
            "ratios": {"type": "array", "items": {"type": "number"},
                       "minItems": 3, "maxItems": 3}}},
        "synth": {"type": "object", "properties": _SYNTH_KEYS, "additionalProperties": False},
        "grid": {"type": "object", "additionalProperties": False, "properties": {
            a: {"type": "array", "items": {"type": ["string", "number"]}, "minItems": 1}
            for a in ("alpha", "aug", "centrality", "direction")}},
    },
}


class CliError(Exception):
    """A user-facing failure: bad config, bad data, failed check."""


class Outputs:
    """Atomic writer that remembers its files so a failed run can clean up."""

    def __init__(self, root: Path):
        self.root = Path(root)
        self.written: list[Path] = []
        self._created_root = not self.root.exists()

    def path(self, name: str) -> Path:
        return self.root / name

    def write(self, name: str, data) -> Path:
        target = self.root / name
        target.parent.mkdir(parents=True, exist_ok=True)
        mode = "wb" if isinstance(data, bytes) else "w"
        fd, tmp = tempfile.mkstemp(dir=target.parent, prefix=f".{target.name}.")
        try:
            with os.fdopen(fd, mode, **({} if mode == "wb" else {"encoding": "utf-8",
                                                                 "newline": ""})) as fh:
                fh.write(data)
            os.replace(tmp, target)
        except BaseException:
            Path(tmp).unlink(missing_ok=True)
            raise
        self.written.append(target)
        return target

    def adopt(self, path: Path) -> None:
        self.written.append(Path(path))

    def rollback(self) -> None:
        for p in reversed(self.written):
            p.unlink(missing_ok=True)
        if self._created_root and self.root.exists():
            for d in sorted((p for p in self.root.rglob("*") if p.is_dir()), reverse=True):
                if not any(d.iterdir()):
                    d.rmdir()
            if not any(self.root.iterdir()):
                self.root.rmdir()


# ---------------------------------------------------------------- config


def load_config(path) -> dict:
    if path is None:
        return {"schema_version": SCHEMA_VERSION}
    try:
        with open(path, encoding="utf-8") as fh:
            cfg = json.load(fh)
    except OSError as exc:
        raise CliError(f"cannot read config {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise CliError(f"config {path} is not valid JSON: {exc}") from None
    try:
        jsonschema.validate(cfg, CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise CliError(f"config {path}: {where}: {exc.message}") from None
    return cfg


def _env_int(name):
    raw = os.environ.get(name)
    if raw is None or raw == "":
        return None
    try:
        return int(raw)
    except ValueError:
        raise CliError(f"${name} must be an integer, got {raw!r}") from None


def resolve(args, cfg: dict) -> dict:
    """Merge flags over environment over config over defaults."""
    out = {
        "seed": args.seed if args.seed is not None else cfg.get("seed", 0),
        "jobs": args.jobs or _env_int("RPTCL_JOBS") or cfg.get("jobs", 1),
        "output_dir": Path(args.output_dir or os.environ.get("RPTCL_OUTPUT_DIR")
                           or cfg.get("output_dir", ".")),
        "data": getattr(args, "data", None) or cfg.get("data"),
        "feature_dim": getattr(args, "feature_dim", None) or cfg.get("feature_dim"),
    }
    model = dict(cfg.get("model", {}))
    for key in _MODEL_KEYS:
        value = getattr(args, key, None)
        if value is not None:
            model[key] = value
    if getattr(args, "no_augment", False):
        model["operators"] = None
    if "hidden_dims" in model:
        model["hidden_dims"] = tuple(model["hidden_dims"])
    if model.get("operators") is not None:
        model["operators"] = tuple(model["operators"])
    out["model"] = model
    splits = dict(cfg.get("splits", {}))
    if getattr(args, "splits", None) is not None:
        splits["n_splits"] = args.splits
    out["n_splits"] = splits.get("n_splits", 10)
    out["ratios"] = tuple(splits.get("ratios", (0.8, 0.1, 0.1)))
    out["synth"] = dict(cfg.get("synth", {}))
    out["grid"] = cfg.get("grid", {})
    if out["jobs"] < 1:
        raise CliError("--jobs must be at least 1")
    return out


def _estimator(model: dict, seed: int) -> TreeContrastiveClassifier:
    try:
        est = TreeContrastiveClassifier(random_state=seed, **model)
        est.augment_config()
        est._validate_hyperparams()
    except (TypeError, ValueError) as exc:
        raise CliError(f"bad model settings: {exc}") from None
    return est


def _load_trees(run: dict):
    if not run["data"]:
        raise CliError("no dataset given (--data or config 'data')")
    path = Path(run["data"])
    if not path.is_file():
        raise CliError(f"dataset {path} does not exist")
    records = load_claims(path)
    if not records:
        raise CliError(f"dataset {path} holds no claims")
    return records, build_trees(records, FeaturizerConfig(dim=run["feature_dim"]))


# ---------------------------------------------------------------- commands


def cmd_synth(args, run, out: Outputs) -> int:
    params = dict(run["synth"])
    kind = args.kind or params.pop("kind", "separable")
    params.pop("kind", None)
    for key in ("trees_per_class", "n_features", "noise_fraction"):
        if getattr(args, key) is not None:
            params[key] = getattr(args, key)
    try:
        spec = SynthSpec.noisy(**params) if kind == "noisy" else SynthSpec.separable(**params)
        corpus = synth_corpus(spec, seed=run["seed"])
    except (TypeError, ValueError) as exc:
        raise CliError(f"bad synth settings: {exc}") from None
    buf = _StringSink()
    dump_claims(corpus.records, buf)
    name = args.out or "corpus.jsonl"
    out.write(name, buf.getvalue())
    truth = _truth_stats(corpus)
    out.write("synth_stats.csv", stats_csv(truth))
    report = (f"{kind} corpus: {len(corpus.records)} claims, {spec.n_features} features, "
              f"seed {run['seed']}\n\nplanted statistics\n" + format_stats_table(truth))
    out.write("synth.txt", report)
    print(report, end="")
    return 0


class _StringSink(list):
    def write(self, s):
        self.append(s)

    def getvalue(self):
        return "".join(self)


def _truth_stats(corpus):
    # ground truth straight from the generator's own tallies
    from .stats import CorpusStats
    m = len(corpus.stats)
    tot = np.array([[s.replies, s.level1, s.level2, s.deeper, s.responded_level1]
                    for s in corpus.stats], dtype=np.int64).sum(axis=0)
    labels, counts = np.unique(corpus.labels, return_counts=True)
    return CorpusStats(m, {int(k): int(c) for k, c in zip(labels, counts)},
                       *(float(x) for x in tot / m))


def cmd_stats(args, run, out: Outputs) -> int:
    _, trees = _load_trees(run)
    cs = corpus_stats(trees)
    text = format_stats_table(cs)
    out.write("stats.txt", text)
    out.write("stats.csv", stats_csv(cs))
    print(text, end="")
    return 0


def _select(records, trees, claim):
    if claim is None:
        return list(zip(records, trees))
    hits = [(r, t) for r, t in zip(records, trees) if r.claim_id == claim]
    if not hits:
        raise CliError(f"claim {claim!r} not in dataset")
    return hits


def cmd_centrality(args, run, out: Outputs) -> int:
    records, trees = _load_trees(run)
    measure = CentralityMeasure(args.measure, args.centrality_view)
    score_rows = ["claim_id,node,value,adjusted\n"]
    pr_rows = None
    lines = [f"measure {measure.kind.value} on the {measure.direction.value} view\n"]
    total_time = 0.0
    n_trees = 0
    for rec, t in _select(records, trees, args.claim):
        raw = compute_centrality(t, measure)
        adj = root_min_adjust(raw)
        total_time += raw.seconds
        n_trees += 1
        for v in range(t.n):
            score_rows.append(f"{rec.claim_id},{v},{raw.values[v]!r},{adj.values[v]!r}\n")
        if t.n < 2:
            continue
        rep = check_principles(t, adj)
        verdicts = rep.as_dict()
        if pr_rows is None:
            pr_rows = ["claim_id," + ",".join(verdicts) + "\n"]
        pr_rows.append(rec.claim_id + "," + ",".join(str(int(v)) for v in verdicts.values())
                       + "\n")
        bad = [k for k, v in verdicts.items() if not v]
        lines.append(f"{rec.claim_id}: " + ("all principles hold" if not bad else
                                            "fails " + ", ".join(bad)) + "\n")
    lines.append(f"mean time per tree: {1e3 * total_time / max(n_trees, 1):.3f} ms\n")
    out.write("centrality.csv", "".join(score_rows))
    if pr_rows:
        out.write("principles.csv", "".join(pr_rows))
    out.write("centrality.txt", "".join(lines))
    print("".join(lines), end="")
    return 0


def cmd_augment(args, run, out: Outputs) -> int:
    records, trees = _load_trees(run)
    pairs = _select(records, trees, args.claim)
    if args.claim is None:
        pairs = pairs[:1]
    rec, tree = pairs[0]
    est = _estimator(run["model"], run["seed"])
    cfg = est.augment_config() or AugmentConfig()
    plan = plan_augmentation(tree, cfg)
    v1, v2 = generate_views(tree, cfg, np.random.SeedSequence([run["seed"], 4]), plan)
    rows = ["kind,index,parent,child,w,s,p\n"]
    for v in range(tree.n):
        rows.append(f"node,{v},,,{plan.node.w[v]!r},{plan.node.s[v]!r},{plan.node.p[v]!r}\n")
    for v in range(tree.n):
        rows.append(f"mask,{v},,,{plan.mask.w[v]!r},{plan.mask.s[v]!r},{plan.mask.p[v]!r}\n")
    for k, (a, b) in enumerate(plan.edge.edges):
        rows.append(f"edge,{k},{a},{b},{plan.edge.w[k]!r},{plan.edge.s[k]!r},"
                    f"{plan.edge.p[k]!r}\n")
    view_rows = ["view,kind,a,b\n"]
    text = [f"claim {rec.claim_id}: {tree.n} nodes, operators "
            f"{'/'.join(o.value for o in cfg.operators)}, "
            f"{'adaptive' if cfg.adaptive else 'random'}, seed {run['seed']}\n"]
    for i, view in enumerate((v1, v2), 1):
        for v in view.kept:
            view_rows.append(f"{i},kept,{v},\n")
        for v in view.masked:
            view_rows.append(f"{i},masked,{v},\n")
        for a, b in view.edges:
            view_rows.append(f"{i},edge,{a},{b}\n")
        text.append(f"view {i}: kept {view.kept.tolist()}\n"
                    f"        masked {view.masked.tolist()}\n"
                    f"        edges {view.edges.tolist()}\n")
    text.append(f"node drop p: {np.round(plan.node.p, 4).tolist()}\n")
    text.append(f"edge drop p: {np.round(plan.edge.p, 4).tolist()}\n")
    out.write("augment_plan.csv", "".join(rows))
    out.write("augment_views.csv", "".join(view_rows))
    out.write("augment.txt", "".join(text))
    print("".join(text), end="")
    return 0


def _model_config(est: TreeContrastiveClassifier, classes, feature_dim) -> dict:
    params = est.get_params()
    params["hidden_dims"] = list(params["hidden_dims"])
    if params["operators"] is not None:
        params["operators"] = list(params["operators"])
    return {"model": params, "classes": [int(c) for c in classes],
            "feature_dim": feature_dim}


def cmd_train(args, run, out: Outputs) -> int:
    _, trees = _load_trees(run)
    est = _estimator(run["model"], run["seed"])
    lines = []

    def on_split(r):
        k = r.seed - run["seed"]
        stem = f"split{k:02d}"
        ckpt = out.path(f"checkpoints/{stem}.ckpt")
        ckpt.parent.mkdir(parents=True, exist_ok=True)
        save_checkpoint(ckpt, r.estimator.params_,
                        _model_config(r.estimator, r.estimator.classes_, trees[0].n_features))
        out.adopt(ckpt)
        out.write(f"training_log_{stem}.csv", training_log_csv(r.estimator.history_))
        line = (f"split {k} (seed {r.seed}): test accuracy {r.metrics.accuracy:.4f}, "
                f"best epoch {r.estimator.best_epoch_}")
        lines.append(line)
        log.info(line)

    summary, runs = run_splits(est, trees, n_splits=run["n_splits"], ratios=run["ratios"],
                               seed=run["seed"], callback=on_split)
    out.write("metrics.csv", metrics_csv(summary))
    per = ["split,seed,accuracy\n"] + [f"{k},{r.seed},{r.metrics.accuracy!r}\n"
                                      for k, r in enumerate(runs)]
    out.write("splits.csv", "".join(per))
    text = "\n".join(lines) + (f"\nmean accuracy {summary.accuracy_mean:.4f} "
                               f"+- {summary.accuracy_std:.4f} over {len(runs)} splits\n")
    out.write("train.txt", text)
    print(text, end="")
    return 0


def cmd_eval(args, run, out: Outputs) -> int:
    _, trees = _load_trees(run)
    try:
        params, config = load_checkpoint(args.checkpoint)
    except (OSError, ValueError, KeyError) as exc:
        raise CliError(f"cannot load checkpoint {args.checkpoint}: {exc}") from None
    model = dict(config.get("model", {}))
    model.pop("random_state", None)
    est = TreeContrastiveClassifier.from_params(params, config.get("classes", [0, 1]), **model)
    if args.split_seed is not None:
        _, _, test = make_splits(labels_of(trees), run["ratios"], args.split_seed)
        trees = [trees[i] for i in test]
    labeled = [t for t in trees if t.label is not None]
    if not labeled:
        raise CliError("no labeled claims to evaluate")
    try:
        m = evaluate(est, labeled)
    except ValueError as exc:
        raise CliError(str(exc)) from None
    summary = summarize([m])
    out.write("metrics.csv", metrics_csv(summary))
    text = (f"{len(labeled)} claims, accuracy {m.accuracy:.4f}\n"
            + "".join(f"class {c}: precision {p:.4f} recall {r:.4f} f1 {f:.4f}\n"
                      for c, p, r, f in zip(m.classes, m.precision, m.recall, m.f1))
            + f"confusion {m.confusion.tolist()}\n")
    out.write("eval.txt", text)
    print(text, end="")
    return 0


def _ablation_trees(run):
    if run["data"]:
        return _load_trees(run)[1]
    params = dict(run["synth"])
    params.pop("kind", None)
    spec = SynthSpec.noisy(**params)
    return build_trees(synth_corpus(spec, seed=run["seed"]).records)


def _cell_job(payload):
    cell, trees, model, n_splits, seed, ratios, cell_path = payload
    est = TreeContrastiveClassifier(random_state=seed, **model)
    res = run_cell(cell, trees, est, n_splits, seed, ratios)
    blob = json.dumps({"cell": res.cell, "accuracies": res.accuracies,
                       "accuracy_mean": res.summary.accuracy_mean,
                       "accuracy_std": res.summary.accuracy_std}, sort_keys=True)
    tmp = cell_path.with_name("." + cell_path.name + ".tmp")
    tmp.write_text(blob, encoding="utf-8")
    os.replace(tmp, cell_path)
    return res


def cmd_ablate(args, run, out: Outputs) -> int:
    specs = list(args.grid or [])
    if not specs:
        specs = [f"{a}={','.join(str(v) for v in vals)}" for a, vals in run["grid"].items()]
    try:
        grid = parse_grid(specs)
    except ValueError as exc:
        raise CliError(str(exc)) from None
    _estimator(run["model"], run["seed"])
    trees = _ablation_trees(run)
    cells = grid_cells(grid)
    cell_dir = out.path("cells")
    cell_dir.mkdir(parents=True, exist_ok=True)
    payloads = []
    for i, cell in enumerate(cells):
        path = cell_dir / f"cell{i:03d}.json"
        out.adopt(path)
        payloads.append((cell, trees, run["model"], run["n_splits"], run["seed"], run["ratios"],
                         path))
    if run["jobs"] > 1 and len(cells) > 1:
        with ProcessPoolExecutor(max_workers=run["jobs"]) as pool:
            results = list(pool.map(_cell_job, payloads))
    else:
        results = [_cell_job(p) for p in payloads]
    out.write("ablation.csv", ablation_csv(results))
    text = format_ablation(results)
    out.write("ablation.txt", text)
    print(text, end="")
    return 0


def gradient_check(seed=0, n_graphs=3, max_nodes=10, n_features=4, eps=1e-5, lam=1.0):
    """Compare analytic objective gradients with central differences.

    Returns one ``(name, max_abs_diff, rel_err)`` row per parameter array.
    """
    rng = np.random.default_rng(seed)
    trees = []
    for k in range(n_graphs):
        n = int(rng.integers(2, max_nodes + 1))
        parents = [-1] + [int(rng.integers(v)) for v in range(1, n)]
        trees.append(tree_from_parents(parents, rng.normal(size=(n, n_features)), label=k % 2))
    cfg = AugmentConfig(operators=("node_drop", "attr_mask"), p_node=0.3)
    pairs = [generate_views(t, cfg, np.random.SeedSequence([seed, 5, k]))
             for k, t in enumerate(trees)]
    views = ([p[0] for p in pairs], [p[1] for p in pairs])
    params = init_params(n_features, (5, 4), 2, np.random.SeedSequence([seed, 6]))
    for _, b in params.layers:
        b += rng.normal(0.0, 0.1, b.shape)
    y = np.array([t.label for t in trees])
    _, grads = batch_objective(params, trees, y, views, lam)
    rows = []
    for (name, arr), g in zip(params.named_arrays(), grads.arrays()):
        num = np.zeros_like(arr)
        for idx in np.ndindex(arr.shape):
            old = arr[idx]
            arr[idx] = old + eps
            fp = batch_objective(params, trees, y, views, lam)[0].total
            arr[idx] = old - eps
            fm = batch_objective(params, trees, y, views, lam)[0].total
            arr[idx] = old
            num[idx] = (fp - fm) / (2 * eps)
        diff = float(np.abs(num - g).max())
        scale = max(float(np.abs(num).max()), float(np.abs(g).max()), 1e-12)
        rows.append((name, diff, diff / scale))
    return rows


def cmd_gradcheck(args, run, out: Outputs) -> int:
    rows = gradient_check(run["seed"], args.graphs, args.max_nodes)
    worst = max(r[2] for r in rows)
    csv_rows = ["parameter,max_abs_diff,rel_err\n"] + [f"{n},{d:.3e},{e:.3e}\n"
                                                        for n, d, e in rows]
    out.write("gradcheck.csv", "".join(csv_rows))
    ok = worst < args.tol
    text = "".join(f"{n:<16} rel err {e:.2e}\n" for n, _, e in rows)
    text += f"worst relative error {worst:.2e} ({'PASS' if ok else 'FAIL'}, tol {args.tol:g})\n"
    out.write("gradcheck.txt", text)
    print(text, end="")
    return 0 if ok else 1


# ---------------------------------------------------------------- parser


def _model_flags(p):
    g = p.add_argument_group("model")
    g.add_argument("--hidden", dest="hidden_dims", type=lambda s: [int(x) for x in s.split(",")],
                   help="comma-separated layer widths, e.g. 64,64")
    g.add_argument("--direction", choices=["bottom_up", "top_down", "undirected"])
    g.add_argument("--operators", type=lambda s: s.split(","),
                   help="two of node_drop, attr_mask, edge_drop, comma-separated")
    g.add_argument("--no-augment", action="store_true", help="plain supervised training")
    g.add_argument("--random-aug", dest="adaptive", action="store_const", const=False,
                   help="uniform drop rates instead of centrality-guided ones")
    g.add_argument("--centrality")
    g.add_argument("--p-node", type=float)
    g.add_argument("--p-mask", type=float)
    g.add_argument("--p-edge", type=float)
    g.add_argument("--temperature", type=float)
    g.add_argument("--lam", type=float, help="weight of the contrastive loss")
    g.add_argument("--lr", dest="learning_rate", type=float)
    g.add_argument("--batch-size", type=int)
    g.add_argument("--epochs", dest="max_epochs", type=int)
    g.add_argument("--patience", type=int)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON run configuration")
    common.add_argument("--seed", type=int)
    common.add_argument("--output-dir", help="defaults to $RPTCL_OUTPUT_DIR or '.'")
    common.add_argument("--jobs", type=int, help="parallel workers (default $RPTCL_JOBS or 1)")
    common.add_argument("-v", "--verbose", action="store_true")
    data = argparse.ArgumentParser(add_help=False)
    data.add_argument("--data", help="JSON-Lines claim file")
    data.add_argument("--feature-dim", type=int, help="hash width for text claims")

    parser = argparse.ArgumentParser(prog="rptcl", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="{" + ",".join(COMMANDS) + "}")

    p = sub.add_parser("stats", parents=[common, data], help="reply-depth statistics")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("centrality", parents=[common, data],
                       help="node centralities and principle checks")
    p.add_argument("--measure", default="pagerank")
    p.add_argument("--view", dest="centrality_view", default=None,
                   help="top_down, bottom_up or undirected (default: per measure)")
    p.add_argument("--claim", help="only this claim id")
    p.set_defaults(func=cmd_centrality)

    p = sub.add_parser("augment", parents=[common, data], help="dump two augmented views")
    p.add_argument("--claim", help="claim id (default: first claim)")
    _model_flags(p)
    p.set_defaults(func=cmd_augment)

    p = sub.add_parser("train", parents=[common, data], help="train over repeated splits")
    p.add_argument("--splits", type=int, help="number of random splits (default 10)")
    _model_flags(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", parents=[common, data], help="evaluate a checkpoint")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--split-seed", type=int, help="evaluate only that split's test part")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("ablate", parents=[common, data], help="grid sweep")
    p.add_argument("--grid", action="append", metavar="AXIS=V1,V2",
                   help="axis among alpha, aug, centrality, direction; repeat for more axes")
    p.add_argument("--splits", type=int)
    _model_flags(p)
    p.set_defaults(func=cmd_ablate)

    p = sub.add_parser("synth", parents=[common], help="generate a synthetic corpus")
    p.add_argument("--kind", choices=["separable", "noisy"])
    p.add_argument("--trees-per-class", type=int)
    p.add_argument("--n-features", type=int)
    p.add_argument("--noise-fraction", type=float)
    p.add_argument("--out", help="corpus file name inside the output dir")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("gradcheck", parents=[common], help="finite-difference gradient check")
    p.add_argument("--graphs", type=int, default=3)
    p.add_argument("--max-nodes", type=int, default=10)
    p.add_argument("--tol", type=float, default=1e-4)
    p.set_defaults(func=cmd_gradcheck)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    if not argv or argv[0] not in COMMANDS and not argv[0].startswith("-"):
        parser.print_usage(sys.stderr)
        if argv:
            print(f"rptcl: error: unknown subcommand {argv[0]!r}", file=sys.stderr)
        return 2
    args = parser.parse_args(argv)
    if args.command is None:
        parser.print_usage(sys.stderr)
        return 2
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(message)s")
    out = None
    try:
        run = resolve(args, load_config(args.config))
        out = Outputs(run["output_dir"])
        status = args.func(args, run, out)
    except (CliError, TreeStructureError, ValueError, OSError) as exc:
        if out is not None:
            out.rollback()
        print(f"rptcl {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except BaseException:
        if out is not None:
            out.rollback()
        raise
    if status != 0 and out is not None:
        log.info("check failed; reports kept in %s", out.root)
    return status


if __name__ == "__main__":
    sys.exit(main())
