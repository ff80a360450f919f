"""Approximate stationary points of the weighted clipped loss.

The objective E_beta[f_b(w, kappa)] is an average of Huber losses, hence
convex with gradient Lipschitz constant bounded by the largest eigenvalue
of the weighted second-moment matrix of the covariates.  Full-gradient
descent with a 1/L step and Armijo backtracking therefore converges; the
solver stops once the gradient norm reaches the requested tolerance.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateWeightsError
from .losses import weighted_clipped_loss_grad
from .types import BatchCollection, WeightVector

__all__ = ["SolverReport", "solve_stationary", "estimate_step_bound", "weighted_ols"]

_ARMIJO_DECREASE = 1e-4
_ARMIJO_SHRINK = 0.5


@dataclass(frozen=True)
class SolverReport:
    """Result of one stationary-point solve.

    ``grad_norm`` is the norm of the weighted mean clipped gradient at the
    returned ``w``; ``converged`` is false when the iteration budget ran
    out first (the best iterate is still returned).
    """

    w: np.ndarray
    grad_norm: float
    iterations: int
    converged: bool


def _probs(beta: WeightVector) -> np.ndarray:
    total = beta.weights.sum()
    if total <= 0.0:
        raise DegenerateWeightsError("total weight is zero")
    return beta.weights / total


def estimate_step_bound(coll: BatchCollection, beta: WeightVector,
                        iters: int = 80, seed: int = 0) -> float:
    """Power-iteration estimate of the top eigenvalue of the weighted
    second-moment matrix of covariates (the gradient Lipschitz bound)."""
    p = _probs(beta)
    m, n, d = coll.x.shape
    xf = coll.x.reshape(m * n, d)
    q = np.repeat(p / n, n)

    rng = np.random.Generator(np.random.Philox(seed))
    v = rng.standard_normal(d)
    v /= np.linalg.norm(v)
    lam = 0.0
    for _ in range(iters):
        z = xf.T @ (q * (xf @ v))
        norm = float(np.linalg.norm(z))
        if norm <= 0.0:
            return 0.0
        v = z / norm
        new_lam = float(v @ (xf.T @ (q * (xf @ v))))
        if abs(new_lam - lam) <= 1e-3 * max(new_lam, 1e-300):
            return new_lam
        lam = new_lam
    return lam


def weighted_ols(coll: BatchCollection, beta: WeightVector) -> np.ndarray:
    """Weighted least-squares solution via the normal equations.

    Used as a warm start for the clipping loop; falls back to the
    pseudoinverse when the Gram matrix is singular.
    """
    p = _probs(beta)
    m, n, d = coll.x.shape
    xf = coll.x.reshape(m * n, d)
    q = np.repeat(p / n, n)
    gram = xf.T @ (xf * q[:, None])
    rhs = xf.T @ (q * coll.y.reshape(m * n))
    try:
        return np.linalg.solve(gram, rhs)
    except np.linalg.LinAlgError:
        return np.linalg.lstsq(gram, rhs, rcond=None)[0]


def solve_stationary(
    coll: BatchCollection,
    beta: WeightVector,
    kappa: float,
    tol: float,
    w_init=None,
    max_iter: int = 10_000,
    step_bound: float | None = None,
) -> SolverReport:
    """Gradient descent with backtracking until the weighted mean clipped
    gradient has norm <= tol.

    ``w_init`` defaults to the zero vector; callers running a sequence of
    related solves pass the previous solution (and a precomputed
    ``step_bound``) to warm-start.
    """
    if tol <= 0.0:
        raise ValueError("tol must be > 0")
    p = _probs(beta)
    w = np.zeros(coll.d) if w_init is None else np.array(w_init, dtype=np.float64)
    if w.shape != (coll.d,):
        raise ValueError("w_init has the wrong dimension")

    lip = estimate_step_bound(coll, beta) if step_bound is None else step_bound
    t0 = 1.0 / lip if lip > 0.0 else 1.0

    f, g = weighted_clipped_loss_grad(coll, p, w, kappa)
    gnorm = float(np.linalg.norm(g))
    iterations = 0
    converged = gnorm <= tol

    while not converged and iterations < max_iter:
        t = t0
        gsq = gnorm * gnorm
        accepted = False
        while t > 1e-20 * t0:
            trial = w - t * g
            ft, gt = weighted_clipped_loss_grad(coll, p, trial, kappa)
            if ft <= f - _ARMIJO_DECREASE * t * gsq:
                w, f, g = trial, ft, gt
                accepted = True
                break
            t *= _ARMIJO_SHRINK
        iterations += 1
        if not accepted:
            break  # line search hit numerical floor
        gnorm = float(np.linalg.norm(g))
        converged = gnorm <= tol

    return SolverReport(w=w, grad_norm=gnorm, iterations=iterations, converged=converged)
