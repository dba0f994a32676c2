"""Pipeline stages. Each reads its inputs from files, writes its outputs
through :class:`~dedupkit.manifest.Artifacts` and returns a short summary.

Stages are ordered generate -> clean -> pairs -> featurize -> train ->
crossval / loco, and every random choice is seeded from one global seed
through a stage-specific derived seed.
"""

from __future__ import annotations

import csv
import json
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from .blocking import (
    BlockingConfig,
    Featurizer,
    build_blocks,
    candidate_pairs,
    default_blocking_config,
    featurize_all,
    pair_reduction_ratio,
)
from .core import (
    FeatureSchema,
    FeatureVector,
    default_schema,
    iter_features,
    read_corpus,
    read_features,
    read_pairs,
    read_schema,
    write_corpus,
    write_features,
    write_pairs,
)
from .datagen import GenConfig, clean_corpus, generate_corpus, label_pairs, read_truth, tune_pool_sizes, write_truth
from .errors import ConfigError, FormatError
from .evaluation import (
    grid_scan,
    run_cv_experiment,
    run_loco_experiment,
    score_report,
    to_arrays,
    undersample,
)
from .manifest import Artifacts
from .models import config_from_dict, load_model, train_model
from .models.io import dumps_model
from .seeding import derive_seed

DEFAULT_SEED = 42


def read_json(path: str | Path | None) -> Any:
    if path is None:
        return None
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from exc


def model_seed(seed: int, kind: str) -> int:
    return derive_seed(seed, "model", kind)


def resolve_model_config(kind: str, raw: dict | None, seed: int):
    raw = dict(raw or {})
    raw.setdefault("seed", model_seed(seed, kind))
    return config_from_dict(kind, raw)


# --- generate / clean / pairs / featurize ----------------------------------


def generate(out: Path, config: GenConfig) -> dict:
    config.validate()
    records, truth = generate_corpus(config)
    kept, _ = clean_corpus(records)
    pairs = candidate_pairs(build_blocks(kept, default_blocking_config()))
    _, recall = label_pairs(pairs, truth, [r.record_id for r in kept])
    n_dup = recall.n_found
    pools = tune_pool_sizes(config.invoices_per_client, round(config.duplicate_fraction * config.invoices_per_client),
                            config.target_pair_imbalance)
    report = {
        "config": config.to_dict(),
        "n_records": len(records),
        "n_truth_pairs": len(truth),
        "suppliers_per_client": pools.suppliers,
        "days_per_client": pools.days,
        "expected_candidate_pairs_per_client": pools.expected_candidate_pairs,
        "default_blocking": {
            "n_pairs": len(pairs),
            "n_duplicates": n_dup,
            "achieved_pair_imbalance": (len(pairs) - n_dup) / n_dup if n_dup else None,
            "blocking_recall": recall.recall,
        },
        "perturbations": [
            {"left_id": l, "right_id": r, "applied": list(truth.perturbations[(l, r)])}
            for l, r in sorted(truth.pairs)
        ],
    }
    art = Artifacts(out, "generate", config.seed, config.to_dict())
    write_corpus(art.path("corpus.csv"), records)
    write_truth(art.path("truth.csv"), truth)
    art.write_json("generation_report.json", report)
    art.commit()
    return {k: v for k, v in report.items() if k != "perturbations"}


def clean(out: Path, corpus_path: Path, seed: int | None = None) -> dict:
    records = read_corpus(corpus_path)
    kept, rep = clean_corpus(records)
    art = Artifacts(out, "clean", seed, None, [corpus_path])
    write_corpus(art.path("corpus.clean.csv"), kept)
    art.write_json("cleaning_report.json", rep.to_dict())
    art.commit()
    return {"n_input": rep.n_input, "n_removed": rep.n_removed, "removal_fraction": rep.removal_fraction,
            "over_budget": rep.over_budget}


def make_pairs(out: Path, corpus_path: Path, blocking_path: Path | None = None,
               truth_path: Path | None = None, seed: int | None = None) -> dict:
    records = read_corpus(corpus_path)
    cfg = BlockingConfig.from_dict(read_json(blocking_path)) if blocking_path else default_blocking_config()
    blocks = build_blocks(records, cfg)
    pairs = candidate_pairs(blocks)
    report: dict[str, Any] = {
        "blocking": cfg.to_dict(),
        "n_records": len(records),
        "n_blocks": len(blocks),
        "n_pairs": len(pairs),
        "pair_reduction_ratio": pair_reduction_ratio(len(records), len(pairs)) if len(records) >= 2 else None,
    }
    inputs = [corpus_path] + ([blocking_path] if blocking_path else [])
    if truth_path is not None:
        pairs, recall = label_pairs(pairs, read_truth(truth_path), [r.record_id for r in records])
        n_dup = sum(p.label.as_int() == 1 for p in pairs)
        report["n_duplicates"] = n_dup
        report["pair_imbalance"] = (len(pairs) - n_dup) / n_dup if n_dup else None
        report["recall"] = recall.to_dict()
        inputs.append(truth_path)
    art = Artifacts(out, "pairs", seed, cfg.to_dict(), inputs)
    write_pairs(art.path("pairs.csv"), pairs)
    art.write_json("pairs_report.json", report)
    art.commit()
    return {k: v for k, v in report.items() if k != "recall"} | (
        {"blocking_recall": report["recall"]["recall"]} if "recall" in report else {})


def featurize(out: Path, pairs_path: Path, corpus_path: Path, schema_path: Path | None = None,
              threads: int = 1, seed: int | None = None) -> dict:
    schema = read_schema(schema_path) if schema_path else default_schema()
    records = read_corpus(corpus_path)
    pairs = read_pairs(pairs_path)
    inputs = [pairs_path, corpus_path] + ([schema_path] if schema_path else [])
    art = Artifacts(out, "featurize", seed, {"schema_digest": schema.digest()}, inputs)
    if threads > 1:
        vectors = featurize_all(pairs, records, schema, threads=threads)
    else:
        # streamed, so a failure leaves the vectors written so far behind
        fz = Featurizer(records, schema)
        vectors = (fz(p) for p in pairs)
    write_features(art.path("features.jsonl"), vectors)
    art.write_json("schema.json", schema.to_list())
    art.commit()
    return {"n_vectors": len(pairs), "schema_digest": schema.digest()}


# --- models -----------------------------------------------------------------


def _schema_digest(schema_path: Path | None) -> str:
    return (read_schema(schema_path) if schema_path else default_schema()).digest()


def train(out: Path, kind: str, features_path: Path, config_raw: dict | None, seed: int,
          schema_path: Path | None = None, balance: bool = True) -> dict:
    cfg = resolve_model_config(kind, config_raw, seed)
    data = read_features(features_path)
    if balance:
        data = undersample(data, derive_seed(seed, "train-undersample"))
    X, y = to_arrays(data)
    model = train_model(cfg, X, y, _schema_digest(schema_path))
    inputs = [features_path] + ([schema_path] if schema_path else [])
    art = Artifacts(out, f"train-{kind}", seed, {"model": kind, **cfg.to_dict(), "undersample": balance}, inputs)
    art.write_text(f"model_{kind}.json", dumps_model(model))
    art.commit()
    return {"model": kind, "n_train": len(data), "final_train_loss": model.train_loss[-1]}


def predict(out: Path, model_path: Path, features_path: Path, schema_path: Path | None = None,
            seed: int | None = None) -> dict:
    model = load_model(model_path)
    digest = read_schema(schema_path).digest() if schema_path else None
    vectors = read_features(features_path)
    X = np.array([v.values for v in vectors], dtype=np.float64).reshape(len(vectors), -1)
    probs = model.predict_proba(X, digest) if len(vectors) else np.zeros(0)
    inputs = [model_path, features_path] + ([schema_path] if schema_path else [])
    art = Artifacts(out, "predict", seed, None, inputs)
    with open(art.path("predictions.csv"), "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["left_id", "right_id", "probability"])
        for v, p in zip(vectors, probs):
            w.writerow([v.pair.left_id, v.pair.right_id, repr(float(p))])
    art.commit()
    return {"n_predictions": len(vectors)}


def read_predictions(path: Path) -> dict[tuple[int, int], float]:
    out = {}
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            try:
                out[(int(row["left_id"]), int(row["right_id"]))] = float(row["probability"])
            except (KeyError, ValueError) as exc:
                raise FormatError(f"{path}: bad prediction row {row!r}") from exc
    return out


def read_labels(path: Path) -> dict[tuple[int, int], int]:
    """Labels from a pairs CSV or a features JSONL file."""
    if Path(path).suffix == ".jsonl":
        items = ((v.pair.key, v.label) for v in iter_features(path))
    else:
        items = ((p.key, p.label.as_int()) for p in read_pairs(path))
    return {k: lab for k, lab in items if lab is not None}


def _write_curves(art: Artifacts, prefix: str, report) -> None:
    def write(name, header, rows):
        with open(art.path(name), "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            w.writerows(rows)

    write(f"{prefix}roc.csv", ["threshold", "fpr", "tpr"],
          [["" if p.threshold is None else p.threshold, p.x, p.y] for p in report.roc])
    if report.pr:
        write(f"{prefix}pr.csv", ["threshold", "recall", "precision"],
              [[p.threshold, p.x, p.y] for p in report.pr])
    for beta, pts in report.f_scores.items():
        write(f"{prefix}fbeta_{beta}.csv", ["threshold", "f", "precision", "recall", "degenerate"],
              [[p.threshold, p.f, p.precision, p.recall, int(p.degenerate)] for p in pts])


def evaluate(out: Path, predictions_path: Path, labels_path: Path, betas=(1.0, 5.0),
             seed: int | None = None) -> dict:
    preds = read_predictions(predictions_path)
    labels = read_labels(labels_path)
    keys = sorted(k for k in preds if k in labels)
    if not keys:
        raise FormatError("no prediction has a label")
    scores = np.array([preds[k] for k in keys])
    y = np.array([labels[k] for k in keys])
    report = score_report(scores, y, betas=betas)
    report.extra = {"n_scored": len(keys), "n_unlabeled_predictions": len(preds) - len(keys)}
    art = Artifacts(out, "evaluate", seed, {"betas": list(betas)}, [predictions_path, labels_path])
    art.write_json("evaluation.json", report.to_dict())
    _write_curves(art, "", report)
    art.commit()
    return {"roc_auc": report.roc_auc, "pr_auc": report.pr_auc}


def crossval(out: Path, kind: str, features_path: Path, config_raw: dict | None, seed: int,
             k: int = 5) -> dict:
    cfg = resolve_model_config(kind, config_raw, seed)
    data = undersample(read_features(features_path), derive_seed(seed, "crossval-undersample"))
    report = run_cv_experiment(data, cfg, k, derive_seed(seed, "crossval"))
    art = Artifacts(out, f"crossval-{kind}", seed, {"model": kind, **cfg.to_dict(), "k": k}, [features_path])
    art.write_json(f"crossval_{kind}.json", report.to_dict())
    art.commit()
    return {"model": kind, "mean_roc_auc": report.roc_auc, "std_roc_auc": report.extra["roc_auc_std"],
            "fold_roc_auc": report.extra["fold_roc_auc"]}


def group_by_client(vectors: list[FeatureVector], corpus_path: Path) -> dict[str, list[FeatureVector]]:
    client = {r.record_id: r.client_id for r in read_corpus(corpus_path)}
    groups: dict[str, list[FeatureVector]] = defaultdict(list)
    for v in vectors:
        try:
            groups[client[v.pair.left_id]].append(v)
        except KeyError:
            raise FormatError(f"record {v.pair.left_id} missing from corpus") from None
    return dict(groups)


def loco(out: Path, kind: str, features_path: Path, corpus_path: Path, config_raw: dict | None,
         seed: int, betas=(1.0, 5.0)) -> dict:
    cfg = resolve_model_config(kind, config_raw, seed)
    groups = group_by_client(read_features(features_path), corpus_path)
    report = run_loco_experiment(groups, cfg, derive_seed(seed, "loco"), betas=betas)
    art = Artifacts(out, f"loco-{kind}", seed, {"model": kind, **cfg.to_dict()}, [features_path, corpus_path])
    art.write_json(f"loco_{kind}.json", report.to_dict())
    _write_curves(art, f"loco_{kind}_", report)
    art.commit()
    return {"model": kind, "pooled_roc_auc": report.roc_auc, "pooled_pr_auc": report.pr_auc}


def gridscan(out: Path, kind: str, features_path: Path, grid: dict, config_raw: dict | None,
             seed: int, k: int = 5) -> dict:
    base = resolve_model_config(kind, config_raw, seed)
    data = undersample(read_features(features_path), derive_seed(seed, "gridscan-undersample"))
    result = grid_scan(data, base, grid, k, derive_seed(seed, "gridscan"))
    art = Artifacts(out, f"gridscan-{kind}", seed, {"model": kind, "base": base.to_dict(), "grid": grid},
                    [features_path])
    art.write_json(f"gridscan_{kind}.json", result.to_dict())
    art.commit()
    return {"model": kind, "best": result.best_config.to_dict()}


# --- whole pipeline ---------------------------------------------------------


@dataclass
class PipelineConfig:
    generate: dict = field(default_factory=dict)
    blocking: dict | None = None
    schema: list | None = None
    models: dict = field(default_factory=lambda: {"gbdt": {}, "nn": {}})
    k: int = 5
    threads: int = 1

    @classmethod
    def from_dict(cls, d: dict | None) -> "PipelineConfig":
        d = dict(d or {})
        extra = set(d) - set(cls.__dataclass_fields__)
        if extra:
            raise ConfigError(f"unknown pipeline keys {sorted(extra)}")
        return cls(**d)


def run_pipeline(out: Path, config: PipelineConfig, seed: int) -> dict:
    """generate -> clean -> pairs -> featurize -> train -> crossval -> loco."""
    out = Path(out)
    gen_cfg = GenConfig.from_dict({**config.generate, "seed": seed})
    summary: dict[str, Any] = {"seed": seed}
    summary["generate"] = generate(out, gen_cfg)
    summary["clean"] = clean(out, out / "corpus.csv", seed)
    blocking_path = schema_path = None
    if config.blocking is not None:
        blocking_path = out / "blocking.json"
        blocking_path.write_text(json.dumps(config.blocking, indent=2) + "\n", encoding="utf-8")
    if config.schema is not None:
        schema_path = out / "schema.input.json"
        FeatureSchema.from_list(config.schema)
        schema_path.write_text(json.dumps(config.schema, indent=2) + "\n", encoding="utf-8")
    summary["pairs"] = make_pairs(out, out / "corpus.clean.csv", blocking_path, out / "truth.csv", seed)
    summary["featurize"] = featurize(out, out / "pairs.csv", out / "corpus.clean.csv", schema_path,
                                     config.threads, seed)
    features = out / "features.jsonl"
    for kind, raw in sorted(config.models.items()):
        summary[f"train_{kind}"] = train(out, kind, features, raw, seed, schema_path)
        summary[f"crossval_{kind}"] = crossval(out, kind, features, raw, seed, config.k)
        summary[f"loco_{kind}"] = loco(out, kind, features, out / "corpus.clean.csv", raw, seed)
    art = Artifacts(out, "pipeline", seed, {
        "generate": gen_cfg.to_dict(), "blocking": config.blocking, "schema": config.schema,
        "models": config.models, "k": config.k,
    })
    art.write_json("pipeline_report.json", summary)
    art.commit()
    return summary

