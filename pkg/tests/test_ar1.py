"""AR(1) multivariate-normal kernel against dense linear-algebra oracles."""

from __future__ import annotations

import numpy as np
import pytest
from scipy.stats import multivariate_normal, norm

from tmdp.hier_models.ar1 import (
    ar1_corr,
    ar1_grad_rho,
    ar1_grad_sd,
    ar1_grad_x,
    ar1_logpdf,
    gamma_logpdf,
)


def dense_logpdf(x, mean, sd, rho):
    cov = sd**2 * ar1_corr(rho, n=len(x))
    return multivariate_normal(mean=np.full(len(x), 0.0) + mean, cov=cov).logpdf(x)


class TestAr1Logpdf:
    @pytest.mark.parametrize("rho", [0.94, -0.6, 0.3, 0.0])
    def test_matches_dense_evaluation(self, rho):
        rng = np.random.default_rng(1)
        for _ in range(5):
            x = rng.normal(size=8)
            mean = rng.normal(size=8)
            sd = float(rng.uniform(0.3, 2.5))
            assert ar1_logpdf(x, mean, sd, rho) == pytest.approx(
                dense_logpdf(x, mean, sd, rho), abs=1e-8
            )

    def test_rho_zero_is_product_of_normals(self):
        rng = np.random.default_rng(2)
        x = rng.normal(size=8)
        sd = 1.7
        expected = norm(loc=0.0, scale=sd).logpdf(x).sum()
        assert abs(float(ar1_logpdf(x, 0.0, sd, 0.0)) - expected) < 1e-10

    def test_batched(self):
        rng = np.random.default_rng(3)
        xs = rng.normal(size=(10, 8))
        means = rng.normal(size=(10, 8))
        out = ar1_logpdf(xs, means, 1.2, 0.5)
        for i in range(10):
            assert out[i] == pytest.approx(dense_logpdf(xs[i], means[i], 1.2, 0.5), abs=1e-8)


class TestAr1Grads:
    def test_grad_x_fd(self):
        rng = np.random.default_rng(4)
        x = rng.normal(size=8)
        sd, rho = 1.3, 0.7
        g = ar1_grad_x(x - 0.2, sd, rho)
        h = 1e-6
        for i in range(8):
            xp, xm = x.copy(), x.copy()
            xp[i] += h
            xm[i] -= h
            fd = (ar1_logpdf(xp, 0.2, sd, rho) - ar1_logpdf(xm, 0.2, sd, rho)) / (2 * h)
            assert g[i] == pytest.approx(float(fd), rel=1e-5, abs=1e-7)

    def test_grad_sd_rho_fd(self):
        rng = np.random.default_rng(5)
        e = rng.normal(size=8)
        sd, rho = 0.9, -0.4
        h = 1e-6
        fd_sd = (ar1_logpdf(e, 0.0, sd + h, rho) - ar1_logpdf(e, 0.0, sd - h, rho)) / (2 * h)
        fd_rho = (ar1_logpdf(e, 0.0, sd, rho + h) - ar1_logpdf(e, 0.0, sd, rho - h)) / (2 * h)
        assert float(ar1_grad_sd(e, sd, rho)) == pytest.approx(float(fd_sd), rel=1e-5)
        assert float(ar1_grad_rho(e, sd, rho)) == pytest.approx(float(fd_rho), rel=1e-5)


def test_gamma_logpdf_matches_scipy():
    from scipy.stats import gamma as sp_gamma

    assert gamma_logpdf(1.3, 2.0, 0.1) == pytest.approx(
        sp_gamma(a=2.0, scale=10.0).logpdf(1.3)
    )
    assert gamma_logpdf(-1.0, 2.0, 0.1) == -np.inf
