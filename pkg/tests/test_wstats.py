import numpy as np
import pytest

from batchreg.errors import DegenerateWeightsError
from batchreg.types import WeightVector
from batchreg.wstats import (
    cov_top_eig,
    weighted_mean,
    weighted_upper_quantile,
    weighted_variance,
)


def wv(*vals):
    return WeightVector(np.array(vals, dtype=float))


def test_weighted_mean_examples():
    values = np.array([[1.0, 0.0], [3.0, 0.0]])
    assert np.allclose(weighted_mean(values, wv(1, 1)), [2.0, 0.0])
    assert np.allclose(weighted_mean(values, wv(1, 0)), [1.0, 0.0])
    with pytest.raises(DegenerateWeightsError):
        weighted_mean(values, wv(0, 0))


def test_weighted_variance_examples():
    assert weighted_variance(np.array([1.0, 3.0]), wv(1, 1)) == pytest.approx(1.0)
    assert weighted_variance(np.array([5.0, 5.0, 5.0]), wv(1, 1, 1)) == 0.0
    # frozen from direct evaluation of sum p_b (h_b - mu)^2 with mu = 2.5;
    # raw weight arrays outside [0, 1] are fine for the scale-free stats
    assert weighted_variance(np.array([0.0, 10.0]), np.array([3.0, 1.0])) == pytest.approx(18.75)


def test_zero_weight_batches_do_not_affect_mean_or_variance():
    rng = np.random.default_rng(3)
    for _ in range(25):
        m = int(rng.integers(2, 12))
        vals = rng.standard_normal(m)
        weights = rng.random(m)
        base_mean = weighted_mean(vals, WeightVector(weights))
        base_var = weighted_variance(vals, WeightVector(weights))
        vals2 = np.concatenate([vals, rng.standard_normal(3)])
        weights2 = np.concatenate([weights, np.zeros(3)])
        assert weighted_mean(vals2, WeightVector(weights2)) == pytest.approx(base_mean)
        assert weighted_variance(vals2, WeightVector(weights2)) == pytest.approx(base_var)


def test_top_eig_rank_one():
    values = np.array([[1.0, 0.0], [-1.0, 0.0]])
    pair = cov_top_eig(values, wv(1, 1), seed=0)
    assert pair.lam == pytest.approx(1.0, rel=1e-6)
    assert abs(pair.u[0]) == pytest.approx(1.0, abs=1e-6)


def test_top_eig_zero_covariance():
    values = np.tile(np.array([2.0, -1.0, 3.0]), (4, 1))
    pair = cov_top_eig(values, wv(1, 1, 1, 1), seed=0)
    assert pair.lam == 0.0
    assert pair.converged


def test_top_eig_known_diagonal_covariance():
    # four points whose weighted covariance is exactly diag(4, 1)
    s = np.sqrt(2.0)
    values = np.array([[2 * s, 0.0], [-2 * s, 0.0], [0.0, s], [0.0, -s]])
    beta = wv(1, 1, 1, 1)
    p = beta.weights / beta.weights.sum()
    centered = values - p @ values
    dense = (centered * p[:, None]).T @ centered
    oracle = np.linalg.eigvalsh(dense)[-1]
    assert oracle == pytest.approx(4.0)
    pair = cov_top_eig(values, beta, seed=1)
    assert pair.lam >= 0.99 * oracle
    assert pair.lam <= oracle * (1 + 1e-9)
    assert abs(pair.u[0]) > 0.99


def test_top_eig_beats_half_of_dense_oracle():
    rng = np.random.default_rng(19)
    for _ in range(50):
        m = int(rng.integers(2, 30))
        d = int(rng.integers(1, 9))
        values = rng.standard_normal((m, d)) * rng.uniform(0.5, 3.0, size=d)
        weights = rng.random(m)
        if weights.sum() == 0:
            continue
        beta = WeightVector(weights)
        p = weights / weights.sum()
        centered = values - p @ values
        dense = (centered * p[:, None]).T @ centered
        lam_max = float(np.linalg.eigvalsh(dense)[-1])
        pair = cov_top_eig(values, beta, seed=int(rng.integers(0, 2**32)))
        assert pair.lam >= 0.5 * lam_max - 1e-12
        # Rayleigh quotient can never exceed the true top eigenvalue
        assert pair.lam <= lam_max * (1 + 1e-8) + 1e-12


def test_top_eig_deterministic_for_fixed_seed():
    rng = np.random.default_rng(23)
    values = rng.standard_normal((10, 4))
    beta = WeightVector(rng.random(10))
    a = cov_top_eig(values, beta, seed=7)
    b = cov_top_eig(values, beta, seed=7)
    assert np.array_equal(a.u, b.u) and a.lam == b.lam


def test_upper_quantile_examples():
    beta = wv(1, 1, 1, 1)
    values = np.array([1.0, 2.0, 3.0, 4.0])
    assert weighted_upper_quantile(values, beta, 1.0) == 3.0
    assert weighted_upper_quantile(values, beta, 5.0) == 1.0  # mass >= total
    assert weighted_upper_quantile(values, beta, 0.0) == 4.0


def test_upper_quantile_tie_blocks():
    beta = wv(1, 1, 1)
    values = np.array([2.0, 2.0, 1.0])
    # the tied 2.0s enter the >= set as a block of weight 2 > mass, so the
    # infimum of {v: weight(>= v) <= 1} sits at 2.0 itself
    assert weighted_upper_quantile(values, beta, 1.0) == 2.0
    assert weighted_upper_quantile(values, beta, 2.0) == 1.0


def test_upper_quantile_step_function_property():
    rng = np.random.default_rng(29)
    for _ in range(60):
        m = int(rng.integers(1, 15))
        values = np.round(rng.standard_normal(m), 1)  # force ties
        weights = rng.random(m)
        beta = WeightVector(weights)
        total = weights.sum()
        mass = float(rng.uniform(0, 1.2) * total)
        vstar = weighted_upper_quantile(values, beta, mass)
        eps = 1e-9

        def mass_at(v):
            return weights[values >= v].sum()

        if mass < total:
            for v in np.concatenate([values, values + eps]):
                if v > vstar:
                    assert mass_at(v) <= mass + 1e-12
            assert mass_at(vstar - eps) > mass
        else:
            assert vstar == values.min()
