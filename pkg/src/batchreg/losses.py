"""Huber-clipped losses, clipped gradients, and absolute-residual stats.

Sample- and batch-level functions are direct transcriptions of the
definitions; the ``collection_*`` functions compute the same quantities
for every batch at once through the selected kernel backend.

For residual r = w.x - y and clipping parameter kappa the clipped loss is
r^2/2 when |r| <= kappa and kappa*|r| - kappa^2/2 otherwise; its gradient
is clip(r, -kappa, kappa) * x.  The two branches agree in value and slope
at |r| = kappa, and kappa = inf recovers the plain squared loss.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .backend import kernels
from .types import Batch, BatchCollection, Sample

__all__ = [
    "ResidualStats",
    "clipped_loss_sample",
    "clipped_grad_sample",
    "batch_clipped_loss",
    "batch_clipped_grad",
    "batch_abs_residual",
    "collection_abs_residuals",
    "collection_clipped_losses",
    "collection_clipped_grads",
    "weighted_clipped_loss_grad",
]


@dataclass(frozen=True)
class ResidualStats:
    """Mean absolute residual of one batch."""

    v: float

    def __post_init__(self):
        if not (self.v >= 0.0):
            raise ValueError("mean absolute residual must be >= 0")

    @classmethod
    def of(cls, batch: Batch, w: np.ndarray) -> "ResidualStats":
        return cls(batch_abs_residual(batch, w))


def _check_kappa(kappa: float) -> float:
    kappa = float(kappa)
    if not kappa > 0.0:
        raise ValueError("kappa must be > 0")
    return kappa


def _check_w(w, d: int) -> np.ndarray:
    w = np.ascontiguousarray(w, dtype=np.float64)
    if w.shape != (d,):
        raise ValueError(f"w has dimension {w.shape}, expected ({d},)")
    return w


def clipped_loss_sample(s: Sample, w, kappa: float) -> float:
    kappa = _check_kappa(kappa)
    w = _check_w(w, s.d)
    r = float(w @ s.x - s.y)
    if abs(r) <= kappa:
        return 0.5 * r * r
    return kappa * abs(r) - 0.5 * kappa * kappa


def clipped_grad_sample(s: Sample, w, kappa: float) -> np.ndarray:
    kappa = _check_kappa(kappa)
    w = _check_w(w, s.d)
    r = float(w @ s.x - s.y)
    if np.isinf(kappa):
        return r * s.x  # quadratic branch everywhere
    # max(|r|, kappa) in the denominator keeps r = 0 well defined
    return (r / max(abs(r), kappa)) * kappa * s.x


def batch_clipped_loss(b: Batch, w, kappa: float) -> float:
    return float(np.mean([clipped_loss_sample(s, w, kappa) for s in b.samples]))


def batch_clipped_grad(b: Batch, w, kappa: float) -> np.ndarray:
    grads = [clipped_grad_sample(s, w, kappa) for s in b.samples]
    return np.mean(grads, axis=0)


def batch_abs_residual(b: Batch, w) -> float:
    w = _check_w(w, b.d)
    return float(np.mean(np.abs(b.x @ w - b.y)))


def collection_abs_residuals(coll: BatchCollection, w) -> np.ndarray:
    """Mean absolute residual of every batch, shape (m,)."""
    w = _check_w(w, coll.d)
    return kernels.abs_residual_means(coll.x, coll.y, w)


def collection_clipped_losses(coll: BatchCollection, w, kappa: float) -> np.ndarray:
    """Mean clipped loss of every batch, shape (m,)."""
    kappa = _check_kappa(kappa)
    w = _check_w(w, coll.d)
    return kernels.clipped_loss_means(coll.x, coll.y, w, kappa)


def collection_clipped_grads(coll: BatchCollection, w, kappa: float) -> np.ndarray:
    """Mean clipped gradient of every batch, shape (m, d)."""
    kappa = _check_kappa(kappa)
    w = _check_w(w, coll.d)
    return kernels.clipped_grad_means(coll.x, coll.y, w, kappa)


def weighted_clipped_loss_grad(coll: BatchCollection, p: np.ndarray, w, kappa: float):
    """Fused hot path: (weighted mean loss, its gradient) for probabilities p."""
    kappa = _check_kappa(kappa)
    w = _check_w(w, coll.d)
    p = np.ascontiguousarray(p, dtype=np.float64)
    if p.shape != (coll.m,):
        raise ValueError("p must be an (m,) probability vector")
    return kernels.weighted_loss_grad(coll.x, coll.y, p, w, kappa)
