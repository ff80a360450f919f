"""Weighted expectations, variances, top eigenvectors, and quantile thresholds.

Everything here treats a weight vector beta as an unnormalized probability
over batches: E[h] = sum_b (beta_b / beta_total) h_b.  Operations raise
DegenerateWeightsError when the total weight is zero.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateWeightsError
from .types import WeightVector

__all__ = [
    "EigPair",
    "as_weights",
    "weighted_mean",
    "weighted_variance",
    "cov_top_eig",
    "weighted_upper_quantile",
    "value_blocks",
]


@dataclass(frozen=True)
class EigPair:
    """Approximate top eigenpair of a weighted covariance.

    ``lam`` is the Rayleigh quotient u' Cov u at the returned unit vector;
    ``converged`` is false when the iteration budget ran out, in which case
    u is the best iterate found (the 0.5-approximation contract is loose,
    so callers proceed either way).
    """

    u: np.ndarray
    lam: float
    converged: bool = True
    iterations: int = 0

    def __post_init__(self):
        if abs(float(np.linalg.norm(self.u)) - 1.0) > 1e-9:
            raise ValueError("eigenvector must have unit norm")
        if self.lam < 0.0:
            raise ValueError("Rayleigh quotient of a covariance must be >= 0")


def as_weights(beta) -> np.ndarray:
    """Accept a WeightVector or any nonnegative weight array.

    The statistics here are scale-free in the weights, so they are not
    restricted to the [0, 1]-entry soft clusters the algorithm itself uses.
    """
    arr = beta.weights if isinstance(beta, WeightVector) else np.asarray(beta, dtype=np.float64)
    if arr.ndim != 1 or arr.size == 0:
        raise ValueError("weights must be a nonempty 1-d array")
    if not np.all(np.isfinite(arr)) or np.any(arr < 0.0):
        raise ValueError("weights must be finite and >= 0")
    return arr


def _probs(beta) -> np.ndarray:
    w = as_weights(beta)
    total = w.sum()
    if total <= 0.0:
        raise DegenerateWeightsError("total weight is zero")
    return w / total


def weighted_mean(values, beta):
    """Beta-weighted mean of per-batch scalars (m,) or vectors (m, k)."""
    values = np.asarray(values, dtype=np.float64)
    p = _probs(beta)
    if values.shape[0] != p.shape[0]:
        raise ValueError("values and weights disagree on m")
    out = p @ values
    return float(out) if values.ndim == 1 else out


def weighted_variance(values, beta) -> float:
    """Beta-weighted variance of per-batch scalars."""
    values = np.asarray(values, dtype=np.float64)
    p = _probs(beta)
    if values.ndim != 1 or values.shape[0] != p.shape[0]:
        raise ValueError("values must be (m,) scalars")
    mu = p @ values
    return float(p @ (values - mu) ** 2)


def cov_top_eig(
    values,
    beta,
    tol: float = 1e-6,
    max_iter: int = 1000,
    seed: int = 0,
) -> EigPair:
    """Top approximate unit eigenvector of the weighted covariance of vectors.

    Matrix-free power iteration: the covariance action
    v -> sum_b p_b (z_b - mu) ((z_b - mu) . v) is applied without forming
    the d x d matrix.  Deterministic for a fixed seed.  Restarts once from
    a fresh vector if the first run stalls at lambda ~ 0 while the action
    is demonstrably nonzero.
    """
    values = np.asarray(values, dtype=np.float64)
    p = _probs(beta)
    if values.ndim != 2 or values.shape[0] != p.shape[0]:
        raise ValueError("values must be (m, d) vectors")
    d = values.shape[1]
    centered = values - p @ values
    scale = float(np.max(np.abs(centered), initial=0.0))

    def action(v):
        return centered.T @ (p * (centered @ v))

    def run(start_seed):
        rng = np.random.Generator(np.random.Philox(start_seed))
        u = rng.standard_normal(d)
        u /= np.linalg.norm(u)
        lam = float(u @ action(u))
        for it in range(1, max_iter + 1):
            z = action(u)
            norm = float(np.linalg.norm(z))
            if norm <= 1e-30 * max(scale * scale, 1.0):
                return u, max(lam, 0.0), True, it, True  # operator ~ 0 along u
            u = z / norm
            new_lam = float(u @ action(u))
            if abs(new_lam - lam) <= tol * max(abs(new_lam), 1e-300):
                return u, max(new_lam, 0.0), True, it, False
            lam = new_lam
        return u, max(lam, 0.0), False, max_iter, False

    u, lam, converged, iters, stalled = run(seed)
    if stalled and lam <= 0.0:
        # distinguish a genuinely zero covariance from an unlucky start
        rng = np.random.Generator(np.random.Philox(seed + 1))
        probe = rng.standard_normal(d)
        if np.linalg.norm(action(probe)) > 1e-30 * max(scale * scale, 1.0):
            u, lam, converged, iters, _ = run(seed + 1)
    return EigPair(u=u, lam=lam, converged=converged, iterations=iters)


def value_blocks(values, beta):
    """Distinct values ascending plus the total weight tied at each value."""
    values = np.asarray(values, dtype=np.float64)
    w = as_weights(beta)
    if values.ndim != 1 or values.shape[0] != w.shape[0]:
        raise ValueError("values must be (m,) scalars")
    uniq, inverse = np.unique(values, return_inverse=True)
    block_w = np.bincount(inverse, weights=w, minlength=uniq.size)
    return uniq, block_w


def weighted_upper_quantile(values, beta, mass: float) -> float:
    """Smallest threshold leaving at most ``mass`` weight at or above it.

    Returns inf{v : sum_{values >= v} beta <= mass}, realized at a data
    point: ties are all-or-nothing blocks, and when even the full weight is
    <= mass the support floor min(values) is returned.
    """
    if mass < 0.0:
        raise ValueError("mass must be >= 0")
    uniq, block_w = value_blocks(values, beta)
    cum_from_top = np.cumsum(block_w[::-1])  # weight of {values >= uniq[k]} descending
    above = np.nonzero(cum_from_top > mass)[0]
    if above.size == 0:
        return float(uniq[0])
    return float(uniq[::-1][above[0]])
