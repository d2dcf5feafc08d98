"""Sampler correctness on analytic targets, determinism, persistence."""

from __future__ import annotations

import numpy as np
import pytest
from scipy.special import expit

from tmdp.config import McmcConfig
from tmdp.errors import InitializationError, RejectedInputError
from tmdp.inference_engine.draws import PosteriorDrawSet
from tmdp.inference_engine.sampler import GenericTarget, sample


class TestGaussianTarget:
    def test_moments_recovered(self):
        mean = np.array([1.5, -0.7])
        cov = np.array([[1.0, 0.6], [0.6, 2.0]])
        prec = np.linalg.inv(cov)

        def logpost(x):
            d = x - mean
            return -0.5 * d @ prec @ d

        model = GenericTarget(logpost, dim=2)
        cfg = McmcConfig(chains=2, iterations=11000, burn_in=1000, seed=7)
        ds = sample(model, cfg, model_tag="gauss")
        draws = ds.stacked()
        n_eff = 600  # conservative effective-sample bound for moment SEs
        se_mean = np.sqrt(np.diag(cov) / n_eff)
        assert np.all(np.abs(draws.mean(axis=0) - mean) < 3 * se_mean)
        emp_cov = np.cov(draws.T)
        assert np.all(np.abs(emp_cov - cov) < 3 * np.sqrt(2.0 / n_eff) * np.outer(
            np.sqrt(np.diag(cov)), np.sqrt(np.diag(cov))
        ))

    def test_bernoulli_logit_grid_posterior(self):
        """Posterior mean of p within 0.03 of a dense-grid oracle."""
        rng = np.random.default_rng(0)
        n, p_true = 1000, 0.3
        k = int(rng.binomial(n, p_true))

        def logpost(x):
            eta = x[0]
            return k * eta - n * np.logaddexp(0.0, eta)

        model = GenericTarget(logpost, dim=1)
        cfg = McmcConfig(chains=2, iterations=6000, burn_in=1000, seed=3)
        ds = sample(model, cfg, model_tag="logit")
        p_draws = expit(ds.stacked()[:, 0])

        grid = np.linspace(-4, 4, 20001)
        logw = k * grid - n * np.logaddexp(0.0, grid)
        w = np.exp(logw - logw.max())
        oracle_mean = float((expit(grid) * w).sum() / w.sum())
        assert abs(p_draws.mean() - oracle_mean) < 0.03
        assert abs(p_draws.mean() - p_true) < 0.05


class TestContracts:
    def test_same_seed_identical_streams(self):
        def logpost(x):
            return -0.5 * float(x @ x)

        cfg = McmcConfig(chains=2, iterations=500, burn_in=100, seed=11)
        d1 = sample(GenericTarget(logpost, dim=3), cfg, model_tag="t")
        d2 = sample(GenericTarget(logpost, dim=3), cfg, model_tag="t")
        assert np.array_equal(d1.draws, d2.draws)
        assert np.array_equal(d1.acceptance, d2.acceptance)

    def test_different_seed_differs(self):
        def logpost(x):
            return -0.5 * float(x @ x)

        d1 = sample(GenericTarget(logpost, dim=2), McmcConfig(chains=2, iterations=300, burn_in=50, seed=1))
        d2 = sample(GenericTarget(logpost, dim=2), McmcConfig(chains=2, iterations=300, burn_in=50, seed=2))
        assert not np.array_equal(d1.draws, d2.draws)

    def test_initialization_at_minus_inf_rejected(self):
        def logpost(x):
            return -np.inf

        with pytest.raises(InitializationError):
            sample(GenericTarget(logpost, dim=1), McmcConfig(chains=2, iterations=200, burn_in=50))

    def test_single_chain_rejected(self):
        def logpost(x):
            return 0.0

        with pytest.raises(RejectedInputError):
            sample(GenericTarget(logpost, dim=1), McmcConfig(chains=1, iterations=200, burn_in=50))

    def test_acceptance_adapted_into_window(self):
        def logpost(x):
            return -0.5 * float(x @ x)

        cfg = McmcConfig(chains=2, iterations=3000, burn_in=1500, seed=5)
        ds = sample(GenericTarget(logpost, dim=4), cfg)
        post_burn_accept = ds.acceptance.mean(axis=0)
        assert np.all(post_burn_accept > 0.15) and np.all(post_burn_accept < 0.5)

    def test_roundtrip_persistence(self, tmp_path):
        def logpost(x):
            return -0.5 * float(x @ x)

        cfg = McmcConfig(chains=2, iterations=400, burn_in=100, seed=9)
        ds = sample(GenericTarget(logpost, dim=2), cfg, model_tag="demo",
                    extra_meta={"note": "test"})
        ds.save(tmp_path)
        back = PosteriorDrawSet.load(tmp_path, "demo")
        assert np.array_equal(back.draws, ds.draws)
        assert back.block_names == ds.block_names
        assert back.extra == {"note": "test"}
        assert (tmp_path / "manifest_demo.json").exists()
