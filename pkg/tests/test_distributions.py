import numpy as np
import pytest

from rffmargin.distributions import (
    CHI_FLOOR,
    GigHalfParams,
    RngStream,
    beta_draw,
    categorical_from_logs,
    chol_with_jitter,
    dirichlet_draw,
    gamma_draw,
    gamma_draws,
    gig_half_draw,
    gig_half_draws,
    invwishart_draw,
    mvn_draw,
    uniform_draw,
)
from rffmargin.errors import InvalidParameterError, NumericalDegeneracyError

from oracles import quad_positive_moments


class TestRngStream:
    def test_same_seed_and_stream_reproduce(self):
        a = RngStream(123, 4).gen.standard_normal(100)
        b = RngStream(123, 4).gen.standard_normal(100)
        np.testing.assert_array_equal(a, b)

    def test_distinct_streams_differ(self):
        a = RngStream(123, 0).gen.standard_normal(100)
        b = RngStream(123, 1).gen.standard_normal(100)
        assert not np.allclose(a, b)
        assert abs(np.corrcoef(a, b)[0, 1]) < 0.3

    def test_substream_matches_direct_construction(self):
        a = RngStream(7, 0).substream(9).gen.random(10)
        b = RngStream(7, 9).gen.random(10)
        np.testing.assert_array_equal(a, b)


class TestGigHalf:
    def test_mean_chi_four(self):
        # E[GIG(1/2, 1, chi)] = sqrt(chi) + 1, so 3.0 at chi = 4
        draws = gig_half_draws(np.full(100_000, 4.0), RngStream(0, 1))
        assert abs(draws.mean() - 3.0) < 0.05

    def test_mean_chi_zero_clamped(self):
        draws = gig_half_draws(np.zeros(100_000), RngStream(0, 2))
        assert abs(draws.mean() - 1.0) < 0.05

    def test_draws_positive_finite(self):
        draws = gig_half_draws(np.geomspace(1e-12, 100, 10_000), RngStream(0, 3))
        assert np.all(draws > 0) and np.all(np.isfinite(draws))

    @pytest.mark.parametrize("chi", [0.01, 1.0, 4.0, 25.0])
    def test_mean_matches_closed_form(self, chi):
        n = 100_000
        draws = gig_half_draws(np.full(n, chi), RngStream(5, int(chi * 100)))
        expected = np.sqrt(chi) + 1.0
        # Var[GIG(1/2, 1, chi)] = sqrt(chi) + 2
        se = np.sqrt((np.sqrt(chi) + 2.0) / n)
        assert abs(draws.mean() - expected) < 3 * se

    @pytest.mark.parametrize("chi", [0.01, 1.0, 4.0, 25.0])
    def test_closed_form_agrees_with_quadrature(self, chi):
        mean, _ = quad_positive_moments(lambda x: -0.5 * np.log(x) - 0.5 * (x + chi / x))
        assert mean == pytest.approx(np.sqrt(chi) + 1.0, rel=1e-8)

    def test_scalar_draw_uses_params(self):
        value = gig_half_draw(GigHalfParams(a=1.0, chi=4.0), RngStream(1, 1))
        assert value > 0

    def test_invalid_parameters_rejected(self):
        with pytest.raises(InvalidParameterError):
            GigHalfParams(a=0.0, chi=1.0)
        with pytest.raises(InvalidParameterError):
            GigHalfParams(a=1.0, chi=-1.0)
        with pytest.raises(InvalidParameterError):
            GigHalfParams(a=np.nan, chi=1.0)
        with pytest.raises(InvalidParameterError):
            gig_half_draws(np.array([1.0, np.inf]), RngStream(0, 0))

    def test_chi_floor_applied(self):
        a = gig_half_draws(np.zeros(10), RngStream(9, 9))
        b = gig_half_draws(np.full(10, CHI_FLOOR), RngStream(9, 9))
        np.testing.assert_array_equal(a, b)


class TestGamma:
    def test_mean_is_shape_over_rate(self):
        draws = gamma_draws(2.0, 4.0, 100_000, RngStream(2, 0))
        assert abs(draws.mean() - 0.5) < 0.01

    def test_exponential_cdf_at_one(self):
        draws = gamma_draws(1.0, 1.0, 100_000, RngStream(2, 1))
        assert abs(np.mean(draws <= 1.0) - (1.0 - np.exp(-1.0))) < 0.01

    def test_invalid_parameters(self):
        with pytest.raises(InvalidParameterError):
            gamma_draw(0.0, 1.0, RngStream(0, 0))
        with pytest.raises(InvalidParameterError):
            gamma_draw(1.0, -1.0, RngStream(0, 0))
        with pytest.raises(InvalidParameterError):
            gamma_draw(np.inf, 1.0, RngStream(0, 0))


class TestMvn:
    def test_degenerate_covariance_hits_jitter_floor(self):
        draw = mvn_draw([1.0, 2.0], np.zeros((2, 2)), RngStream(3, 0))
        np.testing.assert_allclose(draw, [1.0, 2.0], atol=1e-4)

    def test_identity_sample_covariance(self):
        rng = RngStream(3, 1)
        draws = np.array([mvn_draw(np.zeros(3), np.eye(3), rng) for _ in range(20_000)])
        cov = np.cov(draws.T)
        np.testing.assert_allclose(cov, np.eye(3), atol=0.05)
        np.testing.assert_allclose(draws.mean(axis=0), 0.0, atol=0.05)

    def test_nonsymmetric_rejected(self):
        with pytest.raises(InvalidParameterError):
            mvn_draw(np.zeros(2), np.array([[1.0, 0.5], [0.0, 1.0]]), RngStream(0, 0))

    def test_degenerate_error_after_max_jitter(self):
        # A large negative eigenvalue cannot be fixed by the jitter ladder.
        bad = np.array([[1.0, 0.0], [0.0, -5.0]])
        with pytest.raises(NumericalDegeneracyError):
            chol_with_jitter(bad)


class TestPlumbingMoments:
    def test_beta_one_alpha_mean(self):
        rng = RngStream(4, 0)
        alpha = 3.0
        n = 100_000
        draws = np.array([beta_draw(1.0, alpha, rng) for _ in range(n)])
        expected = 1.0 / (1.0 + alpha)
        var = alpha / ((1 + alpha) ** 2 * (2 + alpha))
        assert abs(draws.mean() - expected) < 3 * np.sqrt(var / n)

    def test_dirichlet_component_means(self):
        rng = RngStream(4, 1)
        conc = np.array([2.0, 5.0, 3.0])
        draws = np.array([dirichlet_draw(conc, rng) for _ in range(20_000)])
        np.testing.assert_allclose(draws.mean(axis=0), conc / conc.sum(), atol=0.01)
        np.testing.assert_allclose(draws.sum(axis=1), 1.0, atol=1e-12)

    def test_invwishart_mean(self):
        rng = RngStream(4, 2)
        psi = np.array([[2.0, 0.3], [0.3, 1.0]])
        nu = 7.0
        draws = np.zeros((2, 2))
        n = 100_000
        for _ in range(n):
            draws += invwishart_draw(psi, nu, rng)
        np.testing.assert_allclose(draws / n, psi / (nu - 2 - 1), rtol=0.03)

    def test_invwishart_requires_enough_dof(self):
        with pytest.raises(InvalidParameterError):
            invwishart_draw(np.eye(3), 1.5, RngStream(0, 0))

    def test_uniform_support_and_mean(self):
        rng = RngStream(4, 3)
        draws = np.array([uniform_draw(2.0, 5.0, rng) for _ in range(50_000)])
        assert draws.min() >= 2.0 and draws.max() <= 5.0
        assert abs(draws.mean() - 3.5) < 0.02

    def test_categorical_from_logs_frequencies(self):
        rng = RngStream(4, 4)
        logw = np.log([0.2, 0.5, 0.3])
        counts = np.bincount(
            [categorical_from_logs(logw, rng) for _ in range(50_000)], minlength=3
        )
        np.testing.assert_allclose(counts / 50_000, [0.2, 0.5, 0.3], atol=0.01)

    def test_categorical_handles_minus_inf(self):
        rng = RngStream(4, 5)
        picks = {categorical_from_logs([-np.inf, 0.0, -np.inf], rng) for _ in range(100)}
        assert picks == {1}
