"""Experiment runner: generator -> algorithm -> metrics, with JSON/CSV output.

Per-trial seeds are derived from the base seeds with the trial index, so a
sweep is a pure function of (generator spec, algorithm config, trials) no
matter how many workers execute it.  Serialized outputs contain only
deterministic fields; wall-clock time stays in memory and in log lines.
"""

from __future__ import annotations

import csv
import io
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .algorithm import RunResult, run, select_by_holdout
from .formats import format_algo_config, format_generator_spec, parse_flat
from .synth import GeneratorSpec, LabeledCollection, generate, generate_holdout
from .types import AlgoConfig, Triplet

__all__ = [
    "Metrics",
    "ExperimentResult",
    "identification_radius",
    "min_list_error",
    "evaluate_run",
    "run_trial",
    "run_experiment",
    "experiment_to_json",
    "experiment_to_csv",
]

DEFAULT_HOLDOUT_COUNT = 24


@dataclass(frozen=True)
class Metrics:
    """Per-run scores; ``error`` is set when the trial failed outright."""

    list_size: int
    min_list_error: float
    per_component_error: tuple[float, ...]
    holdout_accuracy: Optional[float]
    filter_calls: int
    wall_time_ms: int
    complete: bool
    error: Optional[str] = None


@dataclass(frozen=True)
class ExperimentResult:
    spec: GeneratorSpec
    cfg: AlgoConfig
    trials: int
    per_trial: tuple[Metrics, ...]
    aggregate: dict


def min_list_error(M: list[Triplet], w_star) -> float:
    """Distance from w_star to the nearest list element (inf for empty M)."""
    if not M:
        return math.inf
    w_star = np.asarray(w_star, dtype=np.float64)
    return float(min(np.linalg.norm(t.w - w_star) for t in M))


def identification_radius(spec: GeneratorSpec) -> float:
    """Recovery radius 10 sigma log(2/alpha) / sqrt(n alpha) used to judge
    hold-out identification (the list may contain several near-copies of a
    component, so identification is measured by landing within the radius
    of the true component rather than on one distinguished index)."""
    sigma = spec.noise_model.sigma
    return 10.0 * sigma * math.log(2.0 / spec.alpha) / math.sqrt(spec.n * spec.alpha)


def evaluate_run(
    labeled: LabeledCollection,
    result: RunResult,
    spec: GeneratorSpec,
    holdout_count: int = DEFAULT_HOLDOUT_COUNT,
    wall_time_ms: int = 0,
    ident_radius: Optional[float] = None,
) -> Metrics:
    per_component = tuple(min_list_error(result.M, w) for w in labeled.w_stars)
    worst = max(per_component) if per_component else math.inf

    accuracy = None
    if result.M:
        radius = identification_radius(spec) if ident_radius is None else ident_radius
        holdouts = generate_holdout(spec, holdout_count)
        hits = 0
        for batch, comp in holdouts:
            chosen = select_by_holdout(result.M, batch)
            err = np.linalg.norm(result.M[chosen].w - labeled.w_stars[comp])
            if err <= radius:
                hits += 1
        accuracy = hits / len(holdouts)

    return Metrics(
        list_size=len(result.M),
        min_list_error=worst,
        per_component_error=per_component,
        holdout_accuracy=accuracy,
        filter_calls=result.filter_calls,
        wall_time_ms=wall_time_ms,
        complete=result.complete,
    )


def _derive_seed(base: int, trial: int) -> int:
    ss = np.random.SeedSequence((base & 0xFFFFFFFFFFFFFFFF, trial))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def run_trial(
    spec: GeneratorSpec,
    cfg: AlgoConfig,
    trial: int,
    holdout_count: int = DEFAULT_HOLDOUT_COUNT,
) -> Metrics:
    """One seed-derived trial: generate, run, score."""
    trial_spec = replace(spec, seed=_derive_seed(spec.seed, trial))
    trial_cfg = replace(cfg, rng_seed=_derive_seed(cfg.rng_seed, trial))
    start = time.perf_counter()
    try:
        labeled = generate(trial_spec)
        result = run(labeled.coll, trial_cfg)
    except Exception as exc:  # recorded per-row, the sweep continues
        elapsed = int(1000 * (time.perf_counter() - start))
        return Metrics(
            list_size=0,
            min_list_error=math.inf,
            per_component_error=tuple(math.inf for _ in spec.w_stars),
            holdout_accuracy=None,
            filter_calls=0,
            wall_time_ms=elapsed,
            complete=False,
            error=f"{type(exc).__name__}: {exc}",
        )
    elapsed = int(1000 * (time.perf_counter() - start))
    return evaluate_run(labeled, result, trial_spec, holdout_count, elapsed)


def _trial_job(args):
    spec, cfg, trial, holdout_count = args
    return trial, run_trial(spec, cfg, trial, holdout_count)


def run_experiment(
    spec: GeneratorSpec,
    cfg: AlgoConfig,
    trials: int,
    workers: Optional[int] = None,
    holdout_count: int = DEFAULT_HOLDOUT_COUNT,
) -> ExperimentResult:
    """Run a trial sweep, in parallel when workers > 1, output trial-ordered."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    jobs = [(spec, cfg, t, holdout_count) for t in range(trials)]
    results: dict[int, Metrics] = {}
    if workers is None:
        workers = 1
    if workers > 1 and trials > 1:
        with ProcessPoolExecutor(max_workers=min(workers, trials)) as pool:
            for trial, metrics in pool.map(_trial_job, jobs):
                results[trial] = metrics
    else:
        for job in jobs:
            trial, metrics = _trial_job(job)
            results[trial] = metrics
    per_trial = tuple(results[t] for t in range(trials))
    return ExperimentResult(
        spec=spec, cfg=cfg, trials=trials,
        per_trial=per_trial, aggregate=_aggregate(per_trial),
    )


def _aggregate(per_trial) -> dict:
    ok = [t for t in per_trial if t.error is None]
    agg: dict = {"completed_trials": len(ok), "failed_trials": len(per_trial) - len(ok)}
    if not ok:
        return agg
    for name in ("list_size", "min_list_error", "holdout_accuracy", "filter_calls"):
        vals = [getattr(t, name) for t in ok if getattr(t, name) is not None]
        if not vals:
            continue
        arr = np.asarray(vals, dtype=np.float64)
        agg[name] = {
            "mean": float(arr.mean()),
            "median": float(np.median(arr)),
            "max": float(arr.max()),
        }
    return agg


def _metrics_payload(trial: int, t: Metrics) -> dict:
    # wall_time_ms is intentionally absent: serialized outputs are a pure
    # function of (spec, cfg, trials)
    return {
        "trial": trial,
        "list_size": t.list_size,
        "min_list_error": t.min_list_error,
        "per_component_error": list(t.per_component_error),
        "holdout_accuracy": t.holdout_accuracy,
        "filter_calls": t.filter_calls,
        "complete": t.complete,
        "error": t.error,
    }


def experiment_to_json(res: ExperimentResult) -> str:
    payload = {
        "config": {
            "generator": parse_flat(format_generator_spec(res.spec)),
            "algorithm": parse_flat(format_algo_config(res.cfg)),
            "trials": res.trials,
        },
        "per_trial": [_metrics_payload(i, t) for i, t in enumerate(res.per_trial)],
        "aggregate": res.aggregate,
    }
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def experiment_to_csv(res: ExperimentResult) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow([
        "trial", "list_size", "min_list_error", "per_component_error",
        "holdout_accuracy", "filter_calls", "complete", "error",
    ])
    for i, t in enumerate(res.per_trial):
        writer.writerow([
            i,
            t.list_size,
            repr(t.min_list_error),
            ";".join(repr(v) for v in t.per_component_error),
            "" if t.holdout_accuracy is None else repr(t.holdout_accuracy),
            t.filter_calls,
            t.complete,
            t.error or "",
        ])
    return buf.getvalue()
