"""Joint choice of clipping parameter and stationary point for a cluster.

Starting from an effectively infinite clipping parameter (plain squared
loss), each round solves for a stationary point, re-derives the clipping
level from the achieved loss, and stops once the level no longer halves.
The returned kappa always sits at or above the noise floor a2 * sigma.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import StationaryNotConvergedError, ClippingLoopError
from .losses import collection_clipped_losses
from .solver import SolverReport, estimate_step_bound, solve_stationary, weighted_ols
from .types import AlgoConfig, BatchCollection, WeightVector
from .wstats import weighted_mean

__all__ = ["ClipResult", "compute_a_constants", "find_clipping_parameter"]

_MAX_WARMSTART_DIM = 2048


@dataclass(frozen=True)
class ClipResult:
    """Clipping parameter, estimate, final solver report, loop count."""

    kappa: float
    w: np.ndarray
    report: SolverReport
    loop_iterations: int


def compute_a_constants(cfg: AlgoConfig, n: int) -> tuple[float, float]:
    """Scale constants tying the clipping level to loss and noise.

    a1 = 256 C sqrt(2) / 3 and
    a2 = a1/4 + 2 max{2 (8 C_p C)^(1/p),
                      2 (8 C_p sqrt(n alpha) / log(2/alpha))^(1/(p-1))}.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    a1 = 256.0 * cfg.C * math.sqrt(2.0) / 3.0
    tail_a = 2.0 * (8.0 * cfg.C_p * cfg.C) ** (1.0 / cfg.p)
    tail_b = 2.0 * (
        8.0 * cfg.C_p * math.sqrt(n * cfg.alpha) / math.log(2.0 / cfg.alpha)
    ) ** (1.0 / (cfg.p - 1.0)) if cfg.p > 1.0 else 0.0
    a2 = a1 / 4.0 + 2.0 * max(tail_a, tail_b)
    return a1, a2


def find_clipping_parameter(
    coll: BatchCollection,
    beta: WeightVector,
    cfg: AlgoConfig,
    w_init=None,
) -> ClipResult:
    """Run the halving loop and return (kappa, w) with their bracket
    guarantees.

    The first solve uses the plain squared loss (kappa = inf) and is warm
    started from the weighted least-squares solution when the dimension
    permits; later solves warm start from the previous stationary point.
    Solver failures propagate as StationaryNotConvergedError; exceeding the
    provable iteration bound indicates broken monotonicity and raises
    ClippingLoopError.
    """
    if cfg.sigma <= 0.0:
        raise ValueError("find_clipping_parameter requires sigma > 0")
    a1, a2 = compute_a_constants(cfg, coll.n)
    tol = cfg.stationary_tol(coll.n)
    floor = a2 * cfg.sigma

    max_abs_y = float(np.max(np.abs(coll.y)))
    if max_abs_y > 0.0:
        bound = math.ceil(math.log2(a1 * max_abs_y / floor)) + 2
    else:
        bound = 0
    max_loops = max(bound, 3) + 5

    step_bound = estimate_step_bound(coll, beta)
    if w_init is None and coll.d <= _MAX_WARMSTART_DIM:
        w_init = weighted_ols(coll, beta)

    kappa = math.inf
    w = w_init
    loop_iterations = 0
    while True:
        loop_iterations += 1
        if loop_iterations > max_loops:
            raise ClippingLoopError(
                f"clipping loop exceeded {max_loops} iterations (bound {bound})"
            )
        report = solve_stationary(
            coll, beta, kappa, tol, w_init=w, step_bound=step_bound
        )
        if not report.converged:
            raise StationaryNotConvergedError(
                f"stationary solve stalled at grad norm {report.grad_norm:.3e}"
                f" (tol {tol:.3e}, kappa {kappa:.3e})",
                report=report,
            )
        w = report.w
        mean_loss = weighted_mean(collection_clipped_losses(coll, w, kappa), beta)
        if not np.isfinite(mean_loss):
            raise ClippingLoopError("non-finite mean clipped loss")
        kappa_new = max(a1 * math.sqrt(max(mean_loss, 0.0)), floor)
        if kappa_new >= kappa / 2.0:
            break
        kappa = kappa_new

    return ClipResult(kappa=kappa, w=w, report=report, loop_iterations=loop_iterations)
