"""Deterministic generators for genuine and adversarial batch collections.

Genuine batches draw i.i.d. covariates with second-moment operator of unit
norm, responses y = w*_j . x + noise for their component j.  Adversarial
batches follow a configurable attack and may depend on the genuine data.
Randomness is counter-based (Philox) with one spawned stream per batch, so
generation is reproducible and order-independent.

Attack strategies:

* ``fixed-wrong-model``: fresh covariates with responses from a planted
  wrong regressor — the classic mixture-style corruption.
* ``mirror``: replays genuine batches with responses negated and scaled.
* ``point-mass``: every sample is one constant (x0, y0) pair.
* ``gradient-attack``: responses reuse the genuine noise magnitudes but
  with signs aligned to a target direction, so per-batch residual sizes
  look ordinary while batch gradients acquire a coherent bias.  Stresses
  the projected-gradient filter rather than the residual filter.

With adversary ``none`` every batch is genuine (useful for pure-mixture
instances); otherwise exactly ceil(alpha * m) batches are genuine.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .types import Batch, BatchCollection

__all__ = [
    "CovariateModel",
    "NoiseModel",
    "Adversary",
    "GeneratorSpec",
    "LabeledCollection",
    "generate",
    "generate_holdout",
]

_COVARIATE_KINDS = ("isotropic-gaussian-clamped", "bounded-uniform", "anisotropic")
_NOISE_KINDS = ("gaussian", "bounded", "student-t")
_ADVERSARY_KINDS = ("none", "fixed-wrong-model", "mirror", "point-mass", "gradient-attack")

_HOLDOUT_TAG = 0x484F4C44  # disjoint stream root for hold-out batches


@dataclass(frozen=True)
class CovariateModel:
    """Covariate distribution; norm_bound is the C1 of ||x|| <= C1 sqrt(d)."""

    kind: str = "isotropic-gaussian-clamped"
    condition_number: float = 1.0
    norm_bound: float = 4.0

    def __post_init__(self):
        if self.kind not in _COVARIATE_KINDS:
            raise ValueError(f"unknown covariate model {self.kind!r}")
        if self.condition_number < 1.0:
            raise ValueError("condition_number must be >= 1")
        if self.norm_bound <= 0.0:
            raise ValueError("norm_bound must be > 0")


@dataclass(frozen=True)
class NoiseModel:
    kind: str = "gaussian"
    sigma: float = 0.0
    dof: float = 5.0

    def __post_init__(self):
        if self.kind not in _NOISE_KINDS:
            raise ValueError(f"unknown noise model {self.kind!r}")
        if self.sigma < 0.0:
            raise ValueError("sigma must be >= 0")
        if self.kind == "student-t" and self.dof <= 2.0:
            raise ValueError("student-t noise needs dof > 2 for finite variance")


@dataclass(frozen=True)
class Adversary:
    kind: str = "none"
    w_adv: Optional[np.ndarray] = None
    scale: float = 1.0
    x0: Optional[np.ndarray] = None
    y0: float = 0.0
    target: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.kind not in _ADVERSARY_KINDS:
            raise ValueError(f"unknown adversary {self.kind!r}")
        for name in ("w_adv", "x0", "target"):
            val = getattr(self, name)
            if val is not None:
                object.__setattr__(self, name, np.asarray(val, dtype=np.float64))
        if self.kind == "fixed-wrong-model" and self.w_adv is None:
            raise ValueError("fixed-wrong-model needs w_adv")
        if self.kind == "point-mass" and self.x0 is None:
            raise ValueError("point-mass needs x0")
        if self.kind == "gradient-attack":
            if self.target is None or not np.any(self.target):
                raise ValueError("gradient-attack needs a nonzero target")


@dataclass(frozen=True)
class GeneratorSpec:
    d: int
    n: int
    m: int
    alpha: float
    w_stars: tuple[np.ndarray, ...]
    covariate_model: CovariateModel = CovariateModel()
    noise_model: NoiseModel = NoiseModel()
    adversary: Adversary = Adversary()
    seed: int = 0

    def __post_init__(self):
        if min(self.d, self.n, self.m) < 1:
            raise ValueError("d, n, m must be >= 1")
        if not (0.0 < self.alpha <= 1.0):
            raise ValueError("alpha must lie in (0, 1]")
        if self.alpha * self.m < 1.0:
            raise ValueError("alpha * m < 1: no genuine batch would exist")
        ws = tuple(np.asarray(w, dtype=np.float64) for w in self.w_stars)
        if not ws:
            raise ValueError("need at least one true regression vector")
        if any(w.shape != (self.d,) for w in ws):
            raise ValueError("every w_star must have shape (d,)")
        object.__setattr__(self, "w_stars", ws)
        object.__setattr__(self, "seed", int(self.seed))

    @property
    def k(self) -> int:
        return len(self.w_stars)

    @property
    def num_good(self) -> int:
        return self.m if self.adversary.kind == "none" else math.ceil(self.alpha * self.m)


@dataclass(frozen=True)
class LabeledCollection:
    """Generated data plus ground truth for evaluation."""

    coll: BatchCollection
    good_mask: np.ndarray
    component_of: np.ndarray
    w_stars: tuple[np.ndarray, ...]

    def __post_init__(self):
        object.__setattr__(self, "good_mask", np.asarray(self.good_mask, dtype=bool))
        object.__setattr__(self, "component_of", np.asarray(self.component_of, dtype=np.int64))


def _draw_covariates(model: CovariateModel, rng: np.random.Generator, n: int, d: int):
    bound = model.norm_bound * math.sqrt(d)
    if model.kind == "bounded-uniform":
        half = math.sqrt(3.0)
        return rng.uniform(-half, half, size=(n, d))
    if model.kind == "anisotropic" and d > 1:
        eigs = model.condition_number ** (-np.arange(d) / (d - 1))
    else:
        eigs = np.ones(d)
    scale = np.sqrt(eigs)
    x = rng.standard_normal((n, d)) * scale
    # reject-and-redraw the (astronomically rare at norm_bound=4) overlong rows
    over = np.linalg.norm(x, axis=1) > bound
    while over.any():
        x[over] = rng.standard_normal((int(over.sum()), d)) * scale
        over = np.linalg.norm(x, axis=1) > bound
    return x


def _draw_noise(model: NoiseModel, rng: np.random.Generator, n: int):
    if model.sigma == 0.0:
        return np.zeros(n)
    if model.kind == "gaussian":
        return model.sigma * rng.standard_normal(n)
    if model.kind == "bounded":
        half = math.sqrt(3.0) * model.sigma
        return rng.uniform(-half, half, size=n)
    scale = model.sigma * math.sqrt((model.dof - 2.0) / model.dof)
    return scale * rng.standard_t(model.dof, size=n)


def generate(spec: GeneratorSpec) -> LabeledCollection:
    """Build a labeled collection, fully determined by spec.seed."""
    m, n, d = spec.m, spec.n, spec.d
    root = np.random.SeedSequence(spec.seed)
    streams = root.spawn(m + 1)
    layout_rng = np.random.Generator(np.random.Philox(streams[0]))

    num_good = spec.num_good
    perm = layout_rng.permutation(m)
    good_positions = np.sort(perm[:num_good])
    good_mask = np.zeros(m, dtype=bool)
    good_mask[good_positions] = True
    component_of = np.full(m, -1, dtype=np.int64)
    for rank, b in enumerate(good_positions):
        component_of[b] = rank % spec.k

    x = np.empty((m, n, d))
    y = np.empty((m, n))
    for b in good_positions:
        rng = np.random.Generator(np.random.Philox(streams[1 + b]))
        xb = _draw_covariates(spec.covariate_model, rng, n, d)
        noise = _draw_noise(spec.noise_model, rng, n)
        x[b] = xb
        y[b] = xb @ spec.w_stars[component_of[b]] + noise

    adv = spec.adversary
    adv_positions = np.nonzero(~good_mask)[0]
    for j, b in enumerate(adv_positions):
        rng = np.random.Generator(np.random.Philox(streams[1 + b]))
        if adv.kind == "fixed-wrong-model":
            xb = _draw_covariates(spec.covariate_model, rng, n, d)
            x[b] = xb
            y[b] = xb @ adv.w_adv + _draw_noise(spec.noise_model, rng, n)
        elif adv.kind == "mirror":
            src = good_positions[j % num_good]
            x[b] = x[src]
            y[b] = -adv.scale * y[src]
        elif adv.kind == "point-mass":
            if adv.x0.shape != (d,):
                raise ValueError("point-mass x0 must have shape (d,)")
            x[b] = np.tile(adv.x0, (n, 1))
            y[b] = adv.y0
        else:  # gradient-attack
            if adv.target.shape != (d,):
                raise ValueError("gradient-attack target must have shape (d,)")
            direction = adv.target / np.linalg.norm(adv.target)
            xb = _draw_covariates(spec.covariate_model, rng, n, d)
            noise = _draw_noise(spec.noise_model, rng, n)
            x[b] = xb
            y[b] = xb @ spec.w_stars[0] + np.abs(noise) * np.sign(xb @ direction)

    coll = BatchCollection(x, y)
    return LabeledCollection(
        coll=coll, good_mask=good_mask, component_of=component_of, w_stars=spec.w_stars
    )


def generate_holdout(spec: GeneratorSpec, count: int) -> list[tuple[Batch, int]]:
    """Fresh genuine batches on RNG streams disjoint from generate()'s.

    Batch i belongs to component i mod k; returns (batch, component) pairs.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    root = np.random.SeedSequence((spec.seed, _HOLDOUT_TAG))
    streams = root.spawn(count)
    out = []
    for i in range(count):
        rng = np.random.Generator(np.random.Philox(streams[i]))
        comp = i % spec.k
        xb = _draw_covariates(spec.covariate_model, rng, spec.n, spec.d)
        yb = xb @ spec.w_stars[comp] + _draw_noise(spec.noise_model, rng, spec.n)
        out.append((Batch(xb, yb), comp))
    return out
