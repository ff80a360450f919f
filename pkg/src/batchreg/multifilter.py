"""Soft-cluster filtering: downweight outliers or split into two clusters.

Given per-batch scalar scores whose weighted variance exceeds the
threshold c3 * log^2(2/alpha) * theta, either:

* the variance is concentrated in thin tails: trimming brings it below
  half the threshold, and batches are downweighted by squared distance to
  the trimmed band (zeroing at least the farthest one), or
* the trimmed scores still spread: the cluster splits into two overlapping
  restrictions whose squared total weights sum to at most the original's.

Both branches strictly shrink the support, which bounds the depth of the
filtering tree.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    DegenerateWeightsError,
    FilterPreconditionError,
    NoProgressError,
    SplitSearchError,
)
from .types import FilterOutcome, WeightVector
from .wstats import value_blocks, weighted_variance

__all__ = ["SplitParams", "trim_bounds", "downweight", "find_split", "multifilter"]

_RADII_GRID_SIZE = 192


@dataclass(frozen=True)
class SplitParams:
    """Center and radius defining the two overlapping half-lines."""

    z0: float
    R: float

    def __post_init__(self):
        if not self.R > 0.0:
            raise ValueError("split radius must be > 0")


def trim_bounds(beta: WeightVector, z, alpha: float) -> tuple[float, float]:
    """Largest a and smallest b leaving weight <= alpha * total / 8 strictly
    outside on each side.  Both are realized at data points; a <= b always
    since each side trims at most an eighth of the weight."""
    total = beta.weights.sum()
    if total <= 0.0:
        raise DegenerateWeightsError("total weight is zero")
    mass = alpha * total / 8.0
    uniq, block_w = value_blocks(z, beta)
    cum = np.cumsum(block_w)
    below = cum - block_w  # weight strictly below each distinct value
    above = total - cum    # weight strictly above
    a = float(uniq[np.nonzero(below <= mass)[0][-1]])
    b = float(uniq[np.nonzero(above <= mass)[0][0]])
    return a, b


def downweight(beta: WeightVector, z, a: float, b: float) -> WeightVector:
    """Scale weights by 1 - f/max(f) where f is the squared distance of the
    score to [a, b]; the farthest supported batches drop to zero."""
    if a > b:
        raise ValueError("need a <= b")
    z = np.asarray(z, dtype=np.float64)
    dist = np.where(z < a, a - z, np.where(z > b, z - b, 0.0))
    f = dist * dist
    support = beta.support
    if not support.any():
        raise DegenerateWeightsError("no supported batches")
    fmax = float(f[support].max())
    if fmax == 0.0:
        raise NoProgressError("all supported scores already inside the band")
    factors = np.maximum(1.0 - f / fmax, 0.0)
    return WeightVector(beta.weights * factors)


def _radii_grid(uniq: np.ndarray) -> np.ndarray:
    gaps = np.diff(uniq)
    lo = float(gaps.min()) / 2.0 * (1.0 - 1e-9)
    hi = float(uniq[-1] - uniq[0])
    if lo <= 0.0 or hi <= 0.0:
        return np.array([])
    return np.geomspace(lo, max(hi, lo), _RADII_GRID_SIZE)


def find_split(beta: WeightVector, z, alpha: float) -> SplitParams:
    """Deterministic scan for (z0, R) satisfying both split conditions.

    Candidate centers are the distinct supported scores plus midpoints of
    consecutive ones; radii come from a geometric grid between half the
    minimum gap and the data range.  The first passing pair under
    (centers ascending, radii ascending) is returned.
    """
    z = np.asarray(z, dtype=np.float64)
    total = beta.weights.sum()
    if total <= 0.0:
        raise DegenerateWeightsError("total weight is zero")
    uniq, block_w = value_blocks(z, beta)
    keep = block_w > 0.0
    uniq, block_w = uniq[keep], block_w[keep]
    need = 48.0 * math.log(2.0 / alpha)
    if uniq.size < 2:
        raise SplitSearchError(
            "fewer than two distinct supported scores",
            {"distinct": int(uniq.size)},
        )

    cum = np.cumsum(block_w)  # weight of {z <= uniq[k]}
    mids = (uniq[:-1] + uniq[1:]) / 2.0
    centers = np.sort(np.concatenate((uniq, mids)))
    radii = _radii_grid(uniq)

    def weight_below(threshold):  # strict: weight of {z < threshold}
        k = np.searchsorted(uniq, threshold, side="left")
        return 0.0 if k == 0 else float(cum[k - 1])

    total_sq = total * total
    for z0 in centers:
        for r in radii:
            w_lower = weight_below(z0 - r)           # excluded from B'
            w_upper = total - weight_below(z0 + r)   # excluded from B''
            bp = total - w_lower
            bpp = total - w_upper
            if bp * bp + bpp * bpp > total_sq:
                continue
            slack = min(w_lower, w_upper) / total
            if slack * r * r >= need:
                return SplitParams(z0=float(z0), R=float(r))
    raise SplitSearchError(
        "no candidate satisfied both split conditions",
        {
            "distinct": int(uniq.size),
            "span": float(uniq[-1] - uniq[0]),
            "min_radius_needed": math.sqrt(2.0 * need),
        },
    )


def multifilter(
    beta: WeightVector,
    z,
    theta: float,
    alpha: float,
    c3: float,
) -> FilterOutcome:
    """One filtering step on scores z at variance threshold theta.

    Requires weighted_variance(z, beta) > c3 * log^2(2/alpha) * theta;
    returns one downweighted vector or two overlapping restrictions.
    """
    z = np.asarray(z, dtype=np.float64)
    if theta < 0.0:
        raise ValueError("theta must be >= 0")
    threshold = c3 * math.log(2.0 / alpha) ** 2 * theta
    variance = weighted_variance(z, beta)
    if not variance > threshold:
        raise FilterPreconditionError(
            f"variance {variance:.6e} does not exceed threshold {threshold:.6e}"
        )
    a, b = trim_bounds(beta, z, alpha)
    trimmed = beta.masked((z >= a) & (z <= b))
    if weighted_variance(z, trimmed) <= threshold / 2.0:
        return FilterOutcome((downweight(beta, z, a, b),))
    split = find_split(beta, z, alpha)
    lower_cut = split.z0 - split.R
    upper_cut = split.z0 + split.R
    beta_one = beta.masked(z >= lower_cut)
    beta_two = beta.masked(z < upper_cut)
    return FilterOutcome((beta_one, beta_two))
