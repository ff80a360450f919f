"""Outer loop: maintain a worklist of soft clusters, filter or accept each.

Every cluster popped from the worklist gets a clipping parameter and
stationary point, then per-batch scores are tested: mean absolute
residuals against the theta1 threshold (Type-1), projections of clipped
gradients on the top covariance eigenvector against theta2 (Type-2).  A
firing test sends the cluster through the multifilter and re-queues the
sufficiently heavy outputs; otherwise the triplet is accepted into the
output list M.  Weight-square contraction plus the weight floor on queued
clusters caps |M| at 4/alpha^2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .clipping import find_clipping_parameter
from .errors import (
    ClippingLoopError,
    DegenerateWeightsError,
    NoProgressError,
    SplitSearchError,
    StationaryNotConvergedError,
)
from .losses import collection_abs_residuals, collection_clipped_grads
from .multifilter import multifilter
from .types import AlgoConfig, Batch, BatchCollection, Triplet, WeightVector
from .wstats import cov_top_eig, weighted_mean, weighted_upper_quantile, weighted_variance

__all__ = ["RunResult", "theta1", "theta2", "run", "select_by_holdout", "list_size_bound"]

_CLUSTER_ERRORS = (
    StationaryNotConvergedError,
    ClippingLoopError,
    NoProgressError,
    SplitSearchError,
    DegenerateWeightsError,
)


def theta1(theta0: float, cfg: AlgoConfig, n: int) -> float:
    """Variance threshold for absolute-residual scores:
    (c2/n) (sigma^2 + (8 sqrt(C) theta0 / 7 + sigma/7)^2)."""
    if not np.isfinite(theta0):
        raise ValueError("theta0 must be finite")
    inner = 8.0 * math.sqrt(cfg.C) * theta0 / 7.0 + cfg.sigma / 7.0
    return (cfg.c2 / n) * (cfg.sigma**2 + inner**2)


def theta2(mean_v: float, cfg: AlgoConfig, n: int) -> float:
    """Variance threshold for projected-gradient scores:
    (c4/n) (sigma^2 + 16 C^2 (E[v] + sigma)^2)."""
    if mean_v < 0.0:
        raise ValueError("mean_v must be >= 0")
    return (cfg.c4 / n) * (cfg.sigma**2 + 16.0 * cfg.C**2 * (mean_v + cfg.sigma) ** 2)


def list_size_bound(alpha: float) -> int:
    return math.ceil(4.0 / alpha**2)


@dataclass
class RunResult:
    """Final list M plus run accounting.

    ``complete`` is false when the filter-call budget ran out with work
    still queued; diagnostics hold one record per processed cluster.
    """

    M: list[Triplet] = field(default_factory=list)
    filter_calls: int = 0
    rejected_clusters: int = 0
    diagnostics: list[dict] = field(default_factory=list)
    complete: bool = True


def _eig_seed(rng_seed: int, iteration: int) -> int:
    ss = np.random.SeedSequence((rng_seed & 0xFFFFFFFFFFFFFFFF, iteration))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def run(coll: BatchCollection, cfg: AlgoConfig) -> RunResult:
    """Execute the full filtering loop on a batch collection.

    Deterministic for fixed (coll, cfg): the worklist is a stack and all
    randomness derives from cfg.rng_seed.  A subroutine failure rejects
    only the offending cluster; the run always returns.
    """
    if cfg.sigma <= 0.0:
        raise ValueError("run requires sigma > 0")
    m, n = coll.m, coll.n
    alpha = cfg.alpha
    max_calls = cfg.max_filter_calls
    if max_calls is None:
        max_calls = 16 * math.ceil(m / alpha**2)
    log_sq = math.log(2.0 / alpha) ** 2
    quantile_mass = alpha * m / 4.0
    weight_floor = alpha * m / 2.0

    result = RunResult()
    worklist = [WeightVector.ones(m)]
    iteration = 0

    while worklist:
        beta = worklist.pop()
        iteration += 1
        rec: dict = {
            "iteration": iteration,
            "total_weight": beta.total(),
            "branch": None,
            "error": None,
        }
        try:
            clip = find_clipping_parameter(coll, beta, cfg)
            rec["kappa"] = clip.kappa
            rec["clip_loop_iterations"] = clip.loop_iterations
            rec["solver_iterations"] = clip.report.iterations

            grads = collection_clipped_grads(coll, clip.w, clip.kappa)
            v = collection_abs_residuals(coll, clip.w)
            eig = cov_top_eig(
                grads,
                beta,
                tol=cfg.power_iter_tol,
                max_iter=cfg.power_iter_max,
                seed=_eig_seed(cfg.rng_seed, iteration),
            )
            vt = grads @ eig.u
            rec["eig_lambda"] = eig.lam
            rec["eig_converged"] = eig.converged

            th0 = weighted_upper_quantile(v, beta, quantile_mass)
            th1 = theta1(th0, cfg, n)
            mean_v = weighted_mean(v, beta)
            th2 = theta2(mean_v, cfg, n)
            var_v = weighted_variance(v, beta)
            rec.update(theta0=th0, theta1=th1, theta2=th2, mean_v=mean_v, var_v=var_v)

            outcome = None
            if var_v > cfg.c3 * log_sq * th1:
                rec["branch"] = "type1"
                outcome = multifilter(beta, v, th1, alpha, cfg.c3)
            else:
                var_vt = weighted_variance(vt, beta)
                rec["var_vt"] = var_vt
                if var_vt > cfg.c3 * log_sq * th2:
                    rec["branch"] = "type2"
                    outcome = multifilter(beta, vt, th2, alpha, cfg.c3)
                else:
                    rec["branch"] = "accept"
                    result.M.append(Triplet(beta=beta, kappa=clip.kappa, w=clip.w))

            if outcome is not None:
                result.filter_calls += 1
                children = []
                for child in outcome.new_weights:
                    tw = child.total()
                    children.append(tw)
                    if tw >= weight_floor:
                        worklist.append(child)
                rec["children_weights"] = children
                if result.filter_calls >= max_calls and worklist:
                    rec["note"] = "filter budget exhausted"
                    result.diagnostics.append(rec)
                    result.complete = False
                    break
        except _CLUSTER_ERRORS as exc:
            result.rejected_clusters += 1
            rec["branch"] = "rejected"
            rec["error"] = f"{type(exc).__name__}: {exc}"
        result.diagnostics.append(rec)

    return result


def select_by_holdout(M: list[Triplet], holdout: Batch) -> int:
    """Index of the list element with the smallest mean squared residual on
    a hold-out batch; ties break to the lowest index."""
    if not M:
        raise ValueError("empty candidate list")
    scores = [float(np.mean((holdout.x @ t.w - holdout.y) ** 2)) for t in M]
    return int(np.argmin(scores))
