"""Command-line entry point: ``dedupkit <subcommand> ...``.

Exit status is 0 on success, 1 on a runtime or data error and 2 on a usage
or configuration error (including a missing input file).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import __version__, stages
from .datagen import GenConfig
from .errors import ConfigError, DedupError, ParamError
from .manifest import verify_dir
from .similarity import METRIC_NAMES, similarity

EXIT_OK, EXIT_RUNTIME, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _existing(path: str | None) -> Path | None:
    if path is None:
        return None
    p = Path(path)
    if not p.is_file():
        raise FileNotFoundError(path)
    return p


def _seed(args, fallback: int = stages.DEFAULT_SEED) -> int:
    return fallback if args.seed is None else args.seed


def _betas(text: str) -> tuple[float, ...]:
    try:
        betas = tuple(float(b) for b in text.split(","))
    except ValueError:
        raise UsageError(f"bad --betas {text!r}") from None
    if any(b <= 0 for b in betas):
        raise UsageError("betas must be positive")
    return betas


def cmd_generate(args) -> dict:
    raw = stages.read_json(_existing(args.config)) or {}
    if args.seed is not None:
        raw["seed"] = args.seed
    return stages.generate(Path(args.out), GenConfig.from_dict(raw))


def cmd_clean(args) -> dict:
    return stages.clean(Path(args.out), _existing(args.corpus), args.seed)


def cmd_pairs(args) -> dict:
    return stages.make_pairs(Path(args.out), _existing(args.corpus), _existing(args.config),
                             _existing(args.truth), args.seed)


def cmd_featurize(args) -> dict:
    return stages.featurize(Path(args.out), _existing(args.pairs), _existing(args.corpus),
                            _existing(args.schema), args.threads, args.seed)


def cmd_sim(args) -> None:
    params = json.loads(args.params) if args.params else None
    print(repr(similarity(args.metric, args.a, args.b, params)))


def cmd_train(args) -> dict:
    return stages.train(Path(args.out), args.model, _existing(args.features),
                        stages.read_json(_existing(args.config)), _seed(args),
                        _existing(args.schema), balance=not args.no_undersample)


def cmd_predict(args) -> dict:
    return stages.predict(Path(args.out), _existing(args.model_file), _existing(args.features),
                          _existing(args.schema), args.seed)


def cmd_evaluate(args) -> dict:
    return stages.evaluate(Path(args.out), _existing(args.predictions), _existing(args.labels),
                           _betas(args.betas), args.seed)


def cmd_crossval(args) -> dict:
    return stages.crossval(Path(args.out), args.model, _existing(args.features),
                           stages.read_json(_existing(args.config)), _seed(args), args.k)


def cmd_loco(args) -> dict:
    return stages.loco(Path(args.out), args.model, _existing(args.features), _existing(args.corpus),
                       stages.read_json(_existing(args.config)), _seed(args), _betas(args.betas))


def cmd_gridscan(args) -> dict:
    grid = stages.read_json(_existing(args.grid))
    if not isinstance(grid, dict):
        raise ConfigError("grid file must hold an object of parameter -> list of values")
    return stages.gridscan(Path(args.out), args.model, _existing(args.features), grid,
                           stages.read_json(_existing(args.config)), _seed(args), args.k)


def cmd_verify(args) -> int:
    problems = verify_dir(args.dir)
    for p in problems:
        print(p, file=sys.stderr)
    if not problems:
        print("ok")
    return EXIT_RUNTIME if problems else EXIT_OK


def cmd_run(args) -> dict:
    cfg = stages.PipelineConfig.from_dict(stages.read_json(_existing(args.config)))
    cfg.threads = args.threads
    return stages.run_pipeline(Path(args.out), cfg, _seed(args))


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help=f"global seed (default {stages.DEFAULT_SEED})")
    common.add_argument("--threads", type=int, default=1, help="worker cap for parallel stages")
    common.add_argument("--out", default=".", help="output directory (created if absent)")
    common.add_argument("--config", default=None, help="JSON configuration for the subcommand")

    parser = argparse.ArgumentParser(prog="dedupkit", description="Invoice duplicate detection toolkit.")
    parser.add_argument("--version", action="version", version=f"dedupkit {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, help_text):
        p = sub.add_parser(name, parents=[common], help=help_text)
        p.set_defaults(func=func)
        return p

    add("generate", cmd_generate, "synthetic multi-client corpus + ground truth")

    p = add("clean", cmd_clean, "drop records with missing required fields")
    p.add_argument("--corpus", required=True)

    p = add("pairs", cmd_pairs, "blocked candidate pairs (--config is the blocking config)")
    p.add_argument("--corpus", required=True)
    p.add_argument("--truth", default=None, help="label pairs from a truth CSV")

    p = add("featurize", cmd_featurize, "similarity feature vectors for candidate pairs")
    p.add_argument("--pairs", required=True)
    p.add_argument("--corpus", required=True)
    p.add_argument("--schema", default=None)

    p = add("sim", cmd_sim, "score two strings with one metric")
    p.add_argument("--metric", required=True, choices=METRIC_NAMES)
    p.add_argument("--a", required=True)
    p.add_argument("--b", required=True)
    p.add_argument("--params", default=None, help="metric parameters as JSON")

    for name, func, text in (("train", cmd_train, "fit a model on labelled features"),
                             ("crossval", cmd_crossval, "balanced stratified k-fold"),
                             ("loco", cmd_loco, "leave-one-client-out on imbalanced data"),
                             ("gridscan", cmd_gridscan, "hyperparameter grid scan by CV ROC-AUC")):
        p = add(name, func, text)
        p.add_argument("--model", required=True, choices=("gbdt", "nn"))
        p.add_argument("--features", required=True)
        if name == "train":
            p.add_argument("--schema", default=None)
            p.add_argument("--no-undersample", action="store_true", help="train on all pairs")
        if name in ("crossval", "gridscan"):
            p.add_argument("--k", type=int, default=5)
        if name == "loco":
            p.add_argument("--corpus", required=True, help="maps records to clients")
            p.add_argument("--betas", default="1,5")
        if name == "gridscan":
            p.add_argument("--grid", required=True, help="JSON object: parameter -> list of values")

    p = add("predict", cmd_predict, "duplicate probabilities for feature vectors")
    p.add_argument("--model-file", required=True)
    p.add_argument("--features", required=True)
    p.add_argument("--schema", default=None)

    p = add("evaluate", cmd_evaluate, "ROC, PR and F-beta report for predictions")
    p.add_argument("--predictions", required=True)
    p.add_argument("--labels", required=True, help="labelled pairs CSV or features JSONL")
    p.add_argument("--betas", default="1,5")

    p = add("verify", cmd_verify, "recheck manifest digests in a directory")
    p.add_argument("dir")

    add("run", cmd_run, "whole pipeline: generate through leave-one-client-out")
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    try:
        result = args.func(args)
    except FileNotFoundError as exc:
        print(f"dedupkit: file not found: {exc.filename or exc.args[0]}", file=sys.stderr)
        return EXIT_USAGE
    except (UsageError, ConfigError, ParamError) as exc:
        print(f"dedupkit: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DedupError, ValueError, OSError) as exc:
        print(f"dedupkit: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    if isinstance(result, int):
        return result
    if result is not None:
        print(json.dumps(result, indent=2))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
