import numpy as np
import pytest

from qsysid.baselines import (
    BETA_GRID,
    MarginalObjective,
    default_lambda_grid,
    empirical_noise_variance,
    ls_estimate,
    marginal_likelihood_objective,
    ssml_estimate,
)
from qsysid.errors import DomainError, EstimationFailureError, InsufficientDataError
from qsysid.kernel import build_kernel
from qsysid.samplers import RngHandle
from qsysid.simulate import toeplitz_regressor, white_input


def slogdet_oracle(w, U, lam, beta, sigma2):
    K = build_kernel(beta, U.shape[1]).entries
    cov = lam * U @ K @ U.T + sigma2 * np.eye(len(w))
    return np.linalg.slogdet(cov)[1] + w @ np.linalg.solve(cov, w)


class TestLeastSquares:
    def test_exact_recovery_noiseless(self):
        rng = np.random.default_rng(1)
        U = rng.standard_normal((50, 8))
        g = rng.standard_normal(8)
        fit = ls_estimate(U @ g, U)
        np.testing.assert_allclose(fit.g, g, rtol=1e-10)
        assert not fit.rank_deficient

    def test_rank_deficiency_flagged(self):
        rng = np.random.default_rng(2)
        U = rng.standard_normal((30, 4))
        U[:, 3] = U[:, 2]
        fit = ls_estimate(U @ np.ones(4), U)
        assert fit.rank_deficient
        assert np.all(np.isfinite(fit.g))  # minimum-norm solution

    def test_short_record(self):
        with pytest.raises(InsufficientDataError):
            ls_estimate(np.ones(3), np.ones((3, 4)))

    def test_non_finite_rejected(self):
        with pytest.raises(DomainError):
            ls_estimate(np.array([1.0, np.nan]), np.ones((2, 1)))


class TestEmpiricalNoiseVariance:
    def test_matches_direct_formula(self):
        rng = np.random.default_rng(3)
        N, n = 80, 6
        U = rng.standard_normal((N, n))
        w = U @ rng.standard_normal(n) + 0.3 * rng.standard_normal(N)
        got = empirical_noise_variance(w, U)
        g = np.linalg.lstsq(U, w, rcond=None)[0]
        want = np.sum((w - U @ g) ** 2) / (N - n)
        np.testing.assert_allclose(got, want, rtol=1e-12)

    def test_needs_strictly_more_rows(self):
        with pytest.raises(InsufficientDataError):
            empirical_noise_variance(np.ones(4), np.eye(4))

    def test_consistency_at_scale(self):
        # long record: the corrected residual variance approaches the truth
        rng = np.random.default_rng(4)
        N, n = 20_000, 5
        U = rng.standard_normal((N, n))
        w = U @ rng.standard_normal(n) + np.sqrt(0.7) * rng.standard_normal(N)
        assert abs(empirical_noise_variance(w, U) - 0.7) < 0.03


class TestMarginalObjective:
    def test_both_routes_match_oracle(self):
        rng = np.random.default_rng(5)
        for N, n in [(40, 10), (15, 25)]:
            U = rng.standard_normal((N, n))
            w = rng.standard_normal(N)
            for lam, beta, s2 in [(0.5, 0.9, 0.2), (3.0, 0.5, 1.5)]:
                want = slogdet_oracle(w, U, lam, beta, s2)
                for method in ("dense", "lowrank"):
                    got = marginal_likelihood_objective(w, U, lam, beta, s2,
                                                        method=method)
                    assert abs(got - want) / abs(want) < 1e-10, (N, n, method)

    def test_auto_uses_dense_below_threshold(self):
        rng = np.random.default_rng(6)
        U = rng.standard_normal((30, 5))
        w = rng.standard_normal(30)
        auto = marginal_likelihood_objective(w, U, 1.0, 0.8, 0.5)
        dense = marginal_likelihood_objective(w, U, 1.0, 0.8, 0.5, method="dense")
        assert auto == dense

    def test_cached_evaluator_matches_function(self):
        rng = np.random.default_rng(7)
        U = rng.standard_normal((25, 6))
        w = rng.standard_normal(25)
        obj = MarginalObjective(w, U, 0.4)
        for lam in (0.1, 1.0, 10.0):
            for beta in (0.5, 0.9):
                np.testing.assert_allclose(
                    obj.evaluate(lam, beta),
                    marginal_likelihood_objective(w, U, lam, beta, 0.4),
                    rtol=1e-12,
                )

    @pytest.mark.parametrize("lam,beta,s2", [
        (-1.0, 0.5, 1.0), (1.0, 0.0, 1.0), (1.0, 0.5, -1.0), (np.inf, 0.5, 1.0),
    ])
    def test_domain(self, lam, beta, s2):
        with pytest.raises(DomainError):
            marginal_likelihood_objective(np.ones(4), np.eye(4, 2), lam, beta, s2)

    def test_unknown_method(self):
        with pytest.raises(DomainError):
            marginal_likelihood_objective(np.ones(4), np.eye(4, 2), 1.0, 0.5,
                                          1.0, method="magic")


class TestDefaultGrids:
    def test_lambda_grid_shape(self):
        w = np.full(200, 2.0)  # power 4
        grid = default_lambda_grid(w)
        assert len(grid) == 25
        np.testing.assert_allclose(grid[0], 4e-4, rtol=1e-12)
        np.testing.assert_allclose(grid[-1], 4e4, rtol=1e-12)
        ratios = grid[1:] / grid[:-1]
        np.testing.assert_allclose(ratios, ratios[0], rtol=1e-9)

    def test_lambda_grid_zero_power_fallback(self):
        grid = default_lambda_grid(np.zeros(10))
        assert np.all(np.isfinite(grid)) and np.all(grid > 0)

    def test_beta_grid_contents(self):
        assert len(BETA_GRID) == 34
        assert BETA_GRID[0] == 0.30
        assert BETA_GRID[-1] == 0.98
        assert 0.88 in BETA_GRID and 0.90 in BETA_GRID
        steps = np.diff(BETA_GRID[:30])
        np.testing.assert_allclose(steps, 0.02, atol=1e-9)


class TestSsmlEstimate:
    def make_data(self, seed, N=150, n=12, noise=0.05):
        rng = RngHandle(seed, 1)
        u = white_input(N, rng)
        U = toeplitz_regressor(u, n)
        # smooth exponentially decaying response
        g = 0.7 ** np.arange(1, n + 1) * np.sin(np.arange(n) + 0.4)
        g = g / np.linalg.norm(g)
        w = U @ g + noise * RngHandle(seed, 2).generator.standard_normal(N)
        return w, U, g

    def test_recovers_smooth_response(self):
        w, U, g = self.make_data(0)
        fit = ssml_estimate(w, U)
        assert np.linalg.norm(fit.g - g) / np.linalg.norm(g) < 0.2
        assert fit.beta in BETA_GRID
        assert fit.sigma2 == empirical_noise_variance(w, U)

    def test_single_point_grid_matches_brute_force(self):
        w, U, g = self.make_data(1)
        beta = 0.7
        s2 = empirical_noise_variance(w, U)
        lams = default_lambda_grid(w)
        vals = [marginal_likelihood_objective(w, U, lam, beta, s2) for lam in lams]
        fit = ssml_estimate(w, U, beta_grid=(beta,))
        assert fit.lam == lams[int(np.argmin(vals))]
        assert fit.beta == beta

    def test_grid_order_irrelevant(self):
        w, U, _ = self.make_data(2, N=80, n=6)
        a = ssml_estimate(w, U, beta_grid=(0.9, 0.5, 0.7))
        b = ssml_estimate(w, U, beta_grid=(0.5, 0.7, 0.9))
        assert a.beta == b.beta and a.lam == b.lam
        np.testing.assert_array_equal(a.g, b.g)

    def test_sigma2_override(self):
        w, U, _ = self.make_data(3, N=60, n=5)
        fit = ssml_estimate(w, U, sigma2=0.123)
        assert fit.sigma2 == 0.123

    def test_zero_sigma2_rejected(self):
        w, U, _ = self.make_data(4, N=60, n=5)
        with pytest.raises(DomainError):
            ssml_estimate(w, U, sigma2=0.0)

    def test_all_grid_points_failing(self):
        w, U, _ = self.make_data(5, N=60, n=5)
        with pytest.raises(EstimationFailureError):
            ssml_estimate(w, U, lambda_grid=(1e308,), beta_grid=(0.98,))

    def test_empty_grid_rejected(self):
        w, U, _ = self.make_data(6, N=60, n=5)
        with pytest.raises(DomainError):
            ssml_estimate(w, U, beta_grid=())
