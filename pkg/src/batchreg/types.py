"""Core data model: batches, soft clusters, configuration, outputs.

All types are immutable value objects after construction (arrays are
locked), so they can be shared freely across threads.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

__all__ = [
    "Sample",
    "Batch",
    "BatchCollection",
    "WeightVector",
    "AlgoConfig",
    "Triplet",
    "FilterOutcome",
    "total_weight",
]


def _as_locked(a, dtype=np.float64):
    arr = np.ascontiguousarray(a, dtype=dtype)
    arr.setflags(write=False)
    return arr


def _require_finite(arr, what):
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{what} must be finite")


@dataclass(frozen=True)
class Sample:
    """One regression sample: covariate vector x and scalar response y."""

    x: np.ndarray
    y: float

    def __post_init__(self):
        object.__setattr__(self, "x", _as_locked(self.x))
        object.__setattr__(self, "y", float(self.y))
        if self.x.ndim != 1 or self.x.size == 0:
            raise ValueError("sample covariate must be a nonempty 1-d vector")
        _require_finite(self.x, "sample covariate")
        if not np.isfinite(self.y):
            raise ValueError("sample response must be finite")

    @property
    def d(self) -> int:
        return self.x.shape[0]


@dataclass(frozen=True)
class Batch:
    """An ordered group of n samples from a single source.

    Stored as stacked arrays ``x`` (n, d) and ``y`` (n,); the ``samples``
    property materializes Sample objects on demand.
    """

    x: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "x", _as_locked(self.x))
        object.__setattr__(self, "y", _as_locked(self.y))
        if self.x.ndim != 2 or self.y.ndim != 1:
            raise ValueError("batch arrays must have shapes (n, d) and (n,)")
        if self.x.shape[0] != self.y.shape[0]:
            raise ValueError("batch covariates and responses disagree on n")
        if self.x.shape[0] < 1 or self.x.shape[1] < 1:
            raise ValueError("batch needs n >= 1 samples of dimension d >= 1")
        _require_finite(self.x, "batch covariates")
        _require_finite(self.y, "batch responses")

    @classmethod
    def from_samples(cls, samples: Sequence[Sample]) -> "Batch":
        if not samples:
            raise ValueError("batch needs at least one sample")
        d = samples[0].d
        if any(s.d != d for s in samples):
            raise ValueError("all samples in a batch must share dimension d")
        return cls(np.stack([s.x for s in samples]), np.array([s.y for s in samples]))

    @property
    def n(self) -> int:
        return self.x.shape[0]

    @property
    def d(self) -> int:
        return self.x.shape[1]

    @property
    def samples(self) -> list[Sample]:
        return [Sample(self.x[i], self.y[i]) for i in range(self.n)]


@dataclass(frozen=True)
class BatchCollection:
    """m batches of n samples each, stacked as (m, n, d) / (m, n) arrays."""

    x: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "x", _as_locked(self.x))
        object.__setattr__(self, "y", _as_locked(self.y))
        if self.x.ndim != 3 or self.y.ndim != 2:
            raise ValueError("collection arrays must have shapes (m, n, d) and (m, n)")
        if self.x.shape[:2] != self.y.shape:
            raise ValueError("covariate and response arrays disagree on (m, n)")
        m, n, d = self.x.shape
        if m < 1 or n < 1 or d < 1:
            raise ValueError("collection needs m, n, d >= 1")
        _require_finite(self.x, "collection covariates")
        _require_finite(self.y, "collection responses")

    @classmethod
    def from_batches(cls, batches: Sequence[Batch]) -> "BatchCollection":
        if not batches:
            raise ValueError("collection needs at least one batch")
        n, d = batches[0].n, batches[0].d
        if any(b.n != n or b.d != d for b in batches):
            raise ValueError("all batches must share the same n and d")
        return cls(np.stack([b.x for b in batches]), np.stack([b.y for b in batches]))

    @property
    def m(self) -> int:
        return self.x.shape[0]

    @property
    def n(self) -> int:
        return self.x.shape[1]

    @property
    def d(self) -> int:
        return self.x.shape[2]

    @property
    def batches(self) -> list[Batch]:
        return [Batch(self.x[b], self.y[b]) for b in range(self.m)]

    def batch(self, b: int) -> Batch:
        return Batch(self.x[b], self.y[b])


@dataclass(frozen=True)
class WeightVector:
    """Per-batch membership weights in [0, 1] (a soft cluster of batches)."""

    weights: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "weights", _as_locked(self.weights))
        if self.weights.ndim != 1 or self.weights.size == 0:
            raise ValueError("weights must be a nonempty 1-d array")
        _require_finite(self.weights, "weights")
        if np.any(self.weights < 0.0) or np.any(self.weights > 1.0):
            raise ValueError("weights must lie in [0, 1]")

    @classmethod
    def ones(cls, m: int) -> "WeightVector":
        return cls(np.ones(m))

    @property
    def m(self) -> int:
        return self.weights.shape[0]

    def total(self, subset: Optional[Iterable[int]] = None) -> float:
        return total_weight(self, subset)

    @property
    def support(self) -> np.ndarray:
        """Boolean mask of batches with strictly positive weight."""
        return self.weights > 0.0

    def masked(self, keep: np.ndarray) -> "WeightVector":
        """Restriction: weights kept where ``keep`` is true, zero elsewhere."""
        keep = np.asarray(keep, dtype=bool)
        if keep.shape != self.weights.shape:
            raise ValueError("mask length must match the number of batches")
        return WeightVector(np.where(keep, self.weights, 0.0))


def total_weight(beta: WeightVector, subset: Optional[Iterable[int]] = None) -> float:
    """Sum of weights over ``subset`` (all batches when omitted)."""
    if subset is None:
        return float(beta.weights.sum())
    idx = np.fromiter(subset, dtype=np.int64)
    if idx.size == 0:
        return 0.0
    if np.any(idx < 0) or np.any(idx >= beta.m):
        raise ValueError("subset index out of range")
    return float(beta.weights[idx].sum())


@dataclass(frozen=True)
class AlgoConfig:
    """Algorithm inputs and universal constants.

    ``alpha`` is the guaranteed fraction of genuine batches and ``sigma``
    the noise scale; both are required inputs, nothing is estimated.  The
    constants c2/c3/c4 scale the two variance thresholds; the asymptotic
    analysis leaves them unspecified, so they are exposed here (defaults
    picked so that desk-scale runs both filter and terminate).
    """

    alpha: float
    sigma: float
    C: float = 1.0
    C_p: float = 1.0
    p: float = 2.0
    c2: float = 4.0
    c3: float = 1.0
    c4: float = 4.0
    stationary_tol_scale: float = 1.0
    power_iter_tol: float = 1e-6
    power_iter_max: int = 1000
    max_filter_calls: Optional[int] = None
    rng_seed: int = 0

    def __post_init__(self):
        if not (0.0 < self.alpha <= 1.0):
            raise ValueError("alpha must lie in (0, 1]")
        if self.sigma < 0.0:
            raise ValueError("sigma must be >= 0")
        if self.C < 1.0 or self.C_p < 1.0:
            raise ValueError("hypercontractivity constants must be >= 1")
        if self.p < 2.0:
            raise ValueError("p must be >= 2")
        for name in ("c2", "c3", "c4", "stationary_tol_scale", "power_iter_tol"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"{name} must be > 0")
        if self.power_iter_max < 1:
            raise ValueError("power_iter_max must be >= 1")
        if self.max_filter_calls is not None and self.max_filter_calls < 1:
            raise ValueError("max_filter_calls must be >= 1 (or None for auto)")
        object.__setattr__(self, "rng_seed", int(self.rng_seed))

    def stationary_tol(self, n: int) -> float:
        """Gradient-norm tolerance for approximate stationary points."""
        base = np.log(2.0 / self.alpha) * self.sigma / (8.0 * np.sqrt(n * self.alpha))
        return float(base * self.stationary_tol_scale)


@dataclass(frozen=True)
class Triplet:
    """A candidate output: soft cluster, clipping parameter, estimate."""

    beta: WeightVector
    kappa: float
    w: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "w", _as_locked(self.w))
        object.__setattr__(self, "kappa", float(self.kappa))
        if not (self.kappa > 0.0 and np.isfinite(self.kappa)):
            raise ValueError("kappa must be positive and finite")
        if self.w.ndim != 1:
            raise ValueError("estimate w must be a 1-d vector")
        _require_finite(self.w, "estimate w")


@dataclass(frozen=True)
class FilterOutcome:
    """One or two new weight vectors produced by a multifilter step."""

    new_weights: tuple[WeightVector, ...] = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "new_weights", tuple(self.new_weights))
        if len(self.new_weights) not in (1, 2):
            raise ValueError("a filter outcome holds one or two weight vectors")
        m = self.new_weights[0].m
        if any(wv.m != m for wv in self.new_weights):
            raise ValueError("outcome weight vectors must share length m")
