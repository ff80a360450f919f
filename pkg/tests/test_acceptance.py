"""Acceptance suite: one test per criterion, each printing a verdict line.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the per-criterion
lines.  The mixture/adversarial criteria are statistical and use the
constants calibrated for desk scale (c2=4, c3=1, c4=1); the variance
thresholds scale freely, so these checks exercise the full pipeline rather
than one magic configuration.
"""

import json
import math
import time
from dataclasses import replace

import numpy as np
import pytest

import batchreg as br
from batchreg.cli import main as cli_main
from batchreg.errors import NoProgressError, SplitSearchError
from batchreg.losses import (
    clipped_grad_sample,
    clipped_loss_sample,
    collection_abs_residuals,
    collection_clipped_losses,
)
from batchreg.multifilter import multifilter
from batchreg.types import BatchCollection, Sample, WeightVector
from batchreg.wstats import cov_top_eig, weighted_mean, weighted_variance

RADIUS_SCALE = 10.0  # absorbs the analysis' unspecified universal constant


def report(num, ok, detail):
    line = f"{'PASS' if ok else 'FAIL'} criterion {num}: {detail}"
    print(line, flush=True)
    assert ok, line


def recovery_radius(sigma, alpha, n):
    return RADIUS_SCALE * sigma * math.log(2.0 / alpha) / math.sqrt(n * alpha)


# ---------------------------------------------------------------------------
# criterion-6 configuration, shared with criterion 8
# ---------------------------------------------------------------------------

MIX_D, MIX_N, MIX_M, MIX_SIGMA, MIX_ALPHA = 16, 300, 400, 0.2, 0.25
MIX_SEPARATION = 300.0
MIX_TRIALS = 50


def mixture_spec():
    w_stars = tuple(MIX_SEPARATION * np.eye(MIX_D)[j] for j in range(4))
    return br.GeneratorSpec(
        d=MIX_D, n=MIX_N, m=MIX_M, alpha=MIX_ALPHA, w_stars=w_stars,
        noise_model=br.NoiseModel(kind="gaussian", sigma=MIX_SIGMA),
        seed=60_001,
    )


def mixture_cfg():
    return br.AlgoConfig(
        alpha=MIX_ALPHA, sigma=MIX_SIGMA, c2=4.0, c3=1.0, c4=1.0, rng_seed=60_002
    )


@pytest.fixture(scope="module")
def mixture_experiment():
    start = time.perf_counter()
    res = br.run_experiment(mixture_spec(), mixture_cfg(), trials=MIX_TRIALS, workers=2)
    elapsed = time.perf_counter() - start
    return res, elapsed


def test_criterion_1_gradient_matches_finite_differences():
    start = time.perf_counter()
    rng = np.random.default_rng(1001)
    h = 1e-6
    worst = 0.0
    checked = 0
    while checked < 1000:
        d = int(rng.integers(1, 7))
        s = Sample(rng.standard_normal(d), float(rng.standard_normal()))
        w = rng.standard_normal(d)
        kappa = float(rng.uniform(0.2, 3.0))
        r = abs(float(w @ s.x - s.y))
        if abs(r - kappa) < 1e-3 or r < 0.05 or np.linalg.norm(s.x) < 0.1:
            continue
        grad = clipped_grad_sample(s, w, kappa)
        fd = np.empty(d)
        for j in range(d):
            e = np.zeros(d)
            e[j] = h
            fd[j] = (
                clipped_loss_sample(s, w + e, kappa)
                - clipped_loss_sample(s, w - e, kappa)
            ) / (2 * h)
        worst = max(worst, np.linalg.norm(grad - fd) / max(np.linalg.norm(grad), 1e-12))
        checked += 1
    elapsed = time.perf_counter() - start
    report(
        1,
        worst < 1e-6 and elapsed < 5.0,
        f"1000 finite-difference checks, worst relative error {worst:.2e} "
        f"in {elapsed:.2f}s",
    )


def test_criterion_2_ols_oracle_equivalence():
    start = time.perf_counter()
    rng = np.random.default_rng(1002)
    d, n, m, sigma = 8, 50, 100, 0.1
    x = rng.standard_normal((m, n, d))
    y = x @ rng.standard_normal(d) + sigma * rng.standard_normal((m, n))
    coll = BatchCollection(x, y)
    beta = WeightVector(np.ones(m))
    reportd = br.solve_stationary(coll, beta, kappa=1e6, tol=1e-8)
    xf = x.reshape(m * n, d)
    w_oracle = np.linalg.solve(xf.T @ xf, xf.T @ y.reshape(-1))
    err = float(np.linalg.norm(reportd.w - w_oracle))
    elapsed = time.perf_counter() - start
    report(
        2,
        reportd.converged and err < 1e-5 and elapsed < 10.0,
        f"gradient solver vs normal equations: distance {err:.2e} in {elapsed:.2f}s",
    )


def test_criterion_3_clipping_parameter_contracts():
    rng = np.random.default_rng(1003)
    violations = []
    for trial in range(200):
        m = int(rng.integers(2, 25))
        n = int(rng.integers(2, 15))
        d = int(rng.integers(1, 6))
        x = rng.standard_normal((m, n, d))
        w_true = rng.standard_normal(d) * rng.uniform(0.5, 4.0)
        sigma = float(rng.uniform(0.05, 1.0))
        y = x @ w_true + sigma * rng.standard_normal((m, n))
        if rng.random() < 0.3:
            y[rng.integers(0, m)] = rng.uniform(-10, 10, size=n)
        coll = BatchCollection(x, y)
        weights = rng.uniform(0.0, 1.0, m)
        weights[rng.integers(0, m)] = 1.0
        beta = WeightVector(weights)
        cfg = br.AlgoConfig(
            alpha=float(rng.choice([0.1, 0.25, 0.5, 1.0])),
            sigma=sigma,
            p=float(rng.choice([2.0, 4.0])),
        )
        res = br.find_clipping_parameter(coll, beta, cfg)
        a1, a2 = br.compute_a_constants(cfg, n)

        mean_loss = weighted_mean(collection_clipped_losses(coll, res.w, res.kappa), beta)
        lo2 = max(a1 * math.sqrt(max(mean_loss, 0.0)), a2 * sigma)
        if not (lo2 <= res.kappa * (1 + 1e-9) <= 2 * lo2 * (1 + 1e-9)):
            violations.append((trial, "loss bracket"))
        mean_v = weighted_mean(collection_abs_residuals(coll, res.w), beta)
        lo3 = max(a1 / 2 * mean_v, a2 * sigma)
        hi3 = max(4 * a1 * a1 * mean_v, a2 * sigma)
        if not (lo3 <= res.kappa * (1 + 1e-9) and res.kappa <= hi3 * (1 + 1e-9)):
            violations.append((trial, "residual bracket"))
        max_y = float(np.max(np.abs(coll.y)))
        bound = math.ceil(math.log2(a1 * max_y / (a2 * sigma))) + 2
        if res.loop_iterations > bound:
            violations.append((trial, "loop bound"))
    report(3, not violations, f"200 random clusters, violations: {violations or 'none'}")


def test_criterion_4_multifilter_invariants():
    rng = np.random.default_rng(1004)
    violations = []
    outcomes = 0
    branch_counts = {1: 0, 2: 0}
    attempts = 0
    while outcomes < 500 and attempts < 2000:
        attempts += 1
        alpha = float(rng.choice([0.1, 0.25, 0.5]))
        m = int(rng.integers(8, 80))
        if rng.random() < 0.5:
            z = rng.normal(0, 0.05, m)
            k = int(rng.integers(1, max(2, m // 10)))
            z[:k] = rng.uniform(50, 500, k) * rng.choice([-1, 1], k)
            rng.shuffle(z)
        else:
            modes = rng.uniform(-400, 400, int(rng.integers(2, 4)))
            z = modes[rng.integers(0, len(modes), m)] + rng.normal(0, 0.1, m)
        weights = rng.uniform(0.1, 1.0, m)
        beta = WeightVector(weights)
        var = weighted_variance(z, beta)
        theta = var / (math.log(2 / alpha) ** 2) * float(rng.uniform(0.2, 0.9))
        try:
            outcome = multifilter(beta, z, theta, alpha, c3=1.0)
        except (NoProgressError, SplitSearchError):
            continue
        outcomes += 1
        branch_counts[len(outcome.new_weights)] += 1
        parent_sq = beta.total() ** 2
        if sum(wv.total() ** 2 for wv in outcome.new_weights) > parent_sq * (1 + 1e-12):
            violations.append((attempts, "weight-square"))
        parent_support = set(np.nonzero(beta.weights)[0])
        for child in outcome.new_weights:
            support = set(np.nonzero(child.weights)[0])
            if not support < parent_support:
                violations.append((attempts, "support"))
            if np.any(child.weights > beta.weights + 1e-15):
                violations.append((attempts, "monotonicity"))
    report(
        4,
        not violations and outcomes == 500 and min(branch_counts.values()) > 0,
        f"{outcomes} filter outcomes (split/downweight {branch_counts[2]}/{branch_counts[1]}), "
        f"violations: {violations or 'none'}",
    )


def test_criterion_5_list_size_bound_sweep():
    rng = np.random.default_rng(1005)
    alphas = [0.1, 0.2, 0.25, 0.5]
    kinds = ["fixed-wrong-model", "mirror", "point-mass", "gradient-attack"]
    checked = 0
    worst = []
    instance = 0
    while checked < 50:
        alpha = alphas[instance % len(alphas)]
        kind = kinds[instance % len(kinds)]
        instance += 1
        d, n, m = 4, 30, 48
        w_true = 200.0 * rng.standard_normal(d) / math.sqrt(d)
        adv_kw = {"kind": kind}
        if kind == "fixed-wrong-model":
            adv_kw["w_adv"] = -w_true
        elif kind == "point-mass":
            adv_kw.update(x0=np.ones(d), y0=float(rng.uniform(-60, 60)))
        elif kind == "gradient-attack":
            adv_kw["target"] = rng.standard_normal(d)
        spec = br.GeneratorSpec(
            d=d, n=n, m=m, alpha=alpha, w_stars=(w_true,),
            noise_model=br.NoiseModel(kind="gaussian", sigma=0.25),
            adversary=br.Adversary(**adv_kw),
            seed=50_000 + instance,
        )
        labeled = br.generate(spec)
        cfg = br.AlgoConfig(alpha=alpha, sigma=0.25, c4=1.0, rng_seed=instance)
        result = br.run(labeled.coll, cfg)
        bound = br.list_size_bound(alpha)
        if len(result.M) > bound:
            worst.append((alpha, kind, len(result.M), bound))
        checked += 1
    report(5, not worst, f"50 adversarial instances, bound violations: {worst or 'none'}")


def test_criterion_6_mixture_recovery(mixture_experiment):
    res, elapsed = mixture_experiment
    radius = recovery_radius(MIX_SIGMA, MIX_ALPHA, MIX_N)
    good = sum(
        1
        for t in res.per_trial
        if t.error is None and t.min_list_error <= radius
    )
    report(
        6,
        good >= 45 and elapsed < 600.0,
        f"{good}/{MIX_TRIALS} trials recovered all 4 components within "
        f"{radius:.3f} ({elapsed:.0f}s total)",
    )


def test_criterion_7_adversarial_robustness():
    d, n, m, sigma, alpha = 16, 300, 400, 0.2, 0.25
    radius = recovery_radius(sigma, alpha, n)
    w_true = np.zeros(d)
    w_adv = MIX_SEPARATION * np.eye(d)[0]
    base = br.GeneratorSpec(
        d=d, n=n, m=m, alpha=alpha, w_stars=(w_true,),
        noise_model=br.NoiseModel(kind="gaussian", sigma=sigma),
        adversary=br.Adversary(kind="fixed-wrong-model", w_adv=w_adv),
        seed=70_001,
    )
    cfg = br.AlgoConfig(alpha=alpha, sigma=sigma, c4=1.0, rng_seed=70_002)
    recovered = 0
    control_ok = 0
    trials = 50
    for trial in range(trials):
        labeled = br.generate(replace(base, seed=base.seed + trial))
        result = br.run(labeled.coll, replace(cfg, rng_seed=cfg.rng_seed + trial))
        if br.min_list_error(result.M, w_true) <= radius:
            recovered += 1
        xf = labeled.coll.x.reshape(-1, d)
        w_ols = np.linalg.lstsq(xf, labeled.coll.y.reshape(-1), rcond=None)[0]
        if np.linalg.norm(w_ols - w_true) >= 5 * radius:
            control_ok += 1
    report(
        7,
        recovered >= 45 and control_ok == trials,
        f"{recovered}/{trials} trials within {radius:.3f}; pooled-OLS control "
        f"exceeded 5x radius in {control_ok}/{trials}",
    )


def test_criterion_8_holdout_identification(mixture_experiment):
    res, _ = mixture_experiment
    trials = res.per_trial[:20]
    accs = [t.holdout_accuracy for t in trials if t.holdout_accuracy is not None]
    # every trial scores the same number of hold-out batches, so the mean of
    # accuracies is the aggregate fraction of correctly assigned batches
    overall = float(np.mean(accs)) if len(accs) == 20 else 0.0
    report(
        8,
        len(accs) == 20 and overall >= 0.95,
        f"hold-out batches assigned to a list element within the recovery "
        f"radius of their component: {overall:.3f} over 20 trials",
    )


def test_criterion_9_eigen_oracle():
    rng = np.random.default_rng(1009)
    below_half = 0
    near_exact = 0
    cases = 1000
    for i in range(cases):
        m = int(rng.integers(2, 40))
        d = int(rng.integers(1, 9))
        values = rng.standard_normal((m, d)) * rng.uniform(0.3, 3.0, size=d)
        weights = rng.uniform(0.05, 1.0, m)
        beta = WeightVector(weights)
        p = weights / weights.sum()
        centered = values - p @ values
        lam_max = float(np.linalg.eigvalsh((centered * p[:, None]).T @ centered)[-1])
        pair = cov_top_eig(values, beta, seed=int(rng.integers(0, 2**63)))
        if pair.lam < 0.5 * lam_max - 1e-12:
            below_half += 1
        if lam_max == 0.0 or pair.lam >= 0.99 * lam_max:
            near_exact += 1
    report(
        9,
        below_half == 0 and near_exact >= 950,
        f"{cases} random point sets: 0.5-floor violations {below_half}, "
        f"within 1% of dense oracle in {near_exact}",
    )


def test_criterion_10_bench_determinism(tmp_path):
    cfg_text = """
alpha=0.5
sigma=0.25
c4=1.0
rng_seed=4
d=3
n=20
m=12
seed=17
w_star.0=0.0,0.0,0.0
w_star.1=120.0,0.0,0.0
noise_model.kind=gaussian
noise_model.sigma=0.25
adversary.kind=none
"""
    cfg = tmp_path / "bench.cfg"
    cfg.write_text(cfg_text)
    out1, out2 = str(tmp_path / "r1.json"), str(tmp_path / "r2.json")
    code1 = cli_main(["bench", "--config", str(cfg), "--trials", "3", "--out", out1])
    code2 = cli_main(["bench", "--config", str(cfg), "--trials", "3", "--out", out2])
    b1, b2 = open(out1, "rb").read(), open(out2, "rb").read()
    identical = b1 == b2
    json.loads(b1)  # well-formed output
    report(
        10,
        code1 == 0 and code2 == 0 and identical,
        f"two bench executions produced byte-identical JSON ({len(b1)} bytes)",
    )
