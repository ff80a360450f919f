"""Command-line interface.

Verbs:
  gen    write a synthetic dataset (CSV) from a generator config
  run    run the algorithm on a dataset file or a generated instance
  bench  seed-derived trial sweep with JSON/CSV output
  check  validate a dataset file against the batch-format invariants

Exit codes: 0 success, 2 argument error, 3 data-format error,
4 run incomplete (filter budget exhausted).
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace

import numpy as np

from .algorithm import run as run_algorithm
from .errors import DataFormatError
from .evaluate import (
    experiment_to_csv,
    experiment_to_json,
    min_list_error,
    run_experiment,
)
from .formats import (
    has_generator_keys,
    load_batches_csv,
    load_truth,
    parse_algo_config,
    parse_generator_spec,
    save_batches_csv,
    save_truth,
)
from .synth import generate

EXIT_OK = 0
EXIT_ARGUMENT = 2
EXIT_DATA_FORMAT = 3
EXIT_INCOMPLETE = 4


def _read(path: str) -> str:
    try:
        with open(path) as fh:
            return fh.read()
    except OSError as exc:
        raise DataFormatError(f"cannot read {path}: {exc}") from None


def _write_text(path: str | None, text: str) -> None:
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, "w") as fh:
            fh.write(text)


def _cmd_gen(args) -> int:
    spec = parse_generator_spec(_read(args.config))
    if args.seed is not None:
        spec = replace(spec, seed=args.seed)
    labeled = generate(spec)
    save_batches_csv(labeled.coll, args.out)
    if args.truth:
        save_truth(labeled, args.truth)
    print(
        f"wrote {labeled.coll.m} batches (n={labeled.coll.n}, d={labeled.coll.d}) "
        f"to {args.out}",
        file=sys.stderr,
    )
    return EXIT_OK


def _config_dict(cfg):
    from dataclasses import fields

    return {f.name: str(getattr(cfg, f.name)) for f in fields(cfg)}


def _run_payload(cfg, result, metrics_payload):
    return {
        "config": {"algorithm": _config_dict(cfg)},
        "result": {
            "list_size": len(result.M),
            "estimates": [[float(v) for v in t.w] for t in result.M],
            "kappas": [t.kappa for t in result.M],
            "cluster_weights": [t.beta.total() for t in result.M],
            "filter_calls": result.filter_calls,
            "rejected_clusters": result.rejected_clusters,
            "complete": result.complete,
        },
        "metrics": metrics_payload,
    }


def _cmd_run(args) -> int:
    text = _read(args.config)
    cfg = parse_algo_config(text)
    if args.seed is not None:
        cfg = replace(cfg, rng_seed=args.seed)

    if args.data:
        coll = load_batches_csv(args.data)
        result = run_algorithm(coll, cfg)
        metrics_payload = None
        if args.truth:
            truth = load_truth(args.truth)
            per_component = [min_list_error(result.M, w) for w in truth["w_stars"]]
            metrics_payload = {
                "per_component_error": per_component,
                "min_list_error": max(per_component),
            }
        payload = _run_payload(cfg, result, metrics_payload)
        _write_text(args.out, json.dumps(payload, indent=2, sort_keys=True) + "\n")
        return EXIT_OK if result.complete else EXIT_INCOMPLETE

    if not has_generator_keys(text):
        print("run needs --data or generator keys in --config", file=sys.stderr)
        return EXIT_ARGUMENT
    spec = parse_generator_spec(text)
    if args.seed is not None:
        spec = replace(spec, seed=args.seed)
    res = run_experiment(spec, cfg, trials=1, workers=1)
    text_out = experiment_to_csv(res) if args.format == "csv" else experiment_to_json(res)
    _write_text(args.out, text_out)
    bad = any(t.error is not None or not t.complete for t in res.per_trial)
    return EXIT_INCOMPLETE if bad else EXIT_OK


def _cmd_bench(args) -> int:
    text = _read(args.config)
    cfg = parse_algo_config(text)
    if not has_generator_keys(text):
        print("bench needs generator keys in --config", file=sys.stderr)
        return EXIT_ARGUMENT
    spec = parse_generator_spec(text)
    if args.seed is not None:
        spec = replace(spec, seed=args.seed)
    res = run_experiment(
        spec, cfg, trials=args.trials, workers=args.workers
    )
    text_out = experiment_to_csv(res) if args.format == "csv" else experiment_to_json(res)
    _write_text(args.out, text_out)
    total_ms = sum(t.wall_time_ms for t in res.per_trial)
    print(
        f"{args.trials} trials in {total_ms} ms "
        f"({res.aggregate.get('failed_trials', 0)} failed)",
        file=sys.stderr,
    )
    bad = any(t.error is not None or not t.complete for t in res.per_trial)
    return EXIT_INCOMPLETE if bad else EXIT_OK


def _cmd_check(args) -> int:
    coll = load_batches_csv(args.data)
    norms = np.linalg.norm(coll.x.reshape(-1, coll.d), axis=1)
    print(
        f"ok: m={coll.m} n={coll.n} d={coll.d} "
        f"max_cov_norm={norms.max():.6g} max_abs_y={np.abs(coll.y).max():.6g}"
    )
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="batchreg",
        description="List-decodable linear regression from batches",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_gen = sub.add_parser("gen", help="generate a CSV dataset from a config")
    p_gen.add_argument("--config", required=True, help="generator spec (flat key=value)")
    p_gen.add_argument("--out", required=True, help="output CSV path")
    p_gen.add_argument("--seed", type=int, default=None, help="override spec seed")
    p_gen.add_argument("--truth", default=None, help="also write ground truth JSON")
    p_gen.set_defaults(func=_cmd_gen)

    p_run = sub.add_parser("run", help="run the algorithm once")
    p_run.add_argument("--config", required=True, help="algorithm (and generator) config")
    p_run.add_argument("--data", default=None, help="batch CSV (otherwise generate)")
    p_run.add_argument("--truth", default=None, help="ground truth JSON for metrics")
    p_run.add_argument("--out", default=None, help="output path (stdout if omitted)")
    p_run.add_argument("--seed", type=int, default=None)
    p_run.add_argument("--format", choices=("json", "csv"), default="json")
    p_run.set_defaults(func=_cmd_run)

    p_bench = sub.add_parser("bench", help="seed-derived trial sweep")
    p_bench.add_argument("--config", required=True)
    p_bench.add_argument("--trials", type=int, default=10)
    p_bench.add_argument("--out", default=None)
    p_bench.add_argument("--seed", type=int, default=None)
    p_bench.add_argument("--format", choices=("json", "csv"), default="json")
    p_bench.add_argument("--workers", type=int, default=1)
    p_bench.set_defaults(func=_cmd_bench)

    p_check = sub.add_parser("check", help="validate a dataset file")
    p_check.add_argument("--data", required=True)
    p_check.set_defaults(func=_cmd_check)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except DataFormatError as exc:
        print(f"data format error: {exc}", file=sys.stderr)
        return EXIT_DATA_FORMAT
    except ValueError as exc:
        print(f"argument error: {exc}", file=sys.stderr)
        return EXIT_ARGUMENT


if __name__ == "__main__":
    sys.exit(main())
