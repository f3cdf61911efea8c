import math

import numpy as np
import pytest
from scipy import integrate
from scipy.special import gammaln

from weibayes.distributions import WeibullModel, weibull_sample
from weibayes.posterior import (
    absorb_sample,
    beta_bar,
    beta_marginal_log_density,
    estimate_beta,
    estimate_xr,
    initial_state,
    log_likelihood,
    log_sum_powers,
    log_t,
    rebuild_windowed,
    t_of_beta,
    xr_conditional_log_pdf,
)
from weibayes.prior import make_prior


def _carbon_state(train, k=None):
    """State after absorbing the first k training subgroups."""
    prior = make_prior(2.4, 7.2, 1.22)
    state = initial_state(prior, r=0.99, n=5)
    for row in train[: k if k is not None else len(train)]:
        state = absorb_sample(state, row)
    return state


class TestRecurringFactor:
    def test_unit_example(self):
        # Prior scale a = 1 (via x_bar = Gamma(1/2)), R = e^-1 so the
        # leading constant is 1, and two unit observations:
        # T(2) = 1 + 1 * (1^2 + 1^2) = 3.
        prior = make_prior(1.0, 3.0, float(math.gamma(0.5)))
        assert prior.a == pytest.approx(1.0, rel=1e-12)
        state = initial_state(prior, r=math.exp(-1.0), n=2)
        state = absorb_sample(state, [1.0, 1.0])
        assert t_of_beta(state, 2.0) == pytest.approx(3.0, rel=1e-12)

    def test_empty_state_reduces_to_prior_scale(self):
        prior = make_prior(2.4, 7.2, 1.22)
        state = initial_state(prior, r=0.99, n=5)
        for beta in (2.5, 4.8, 7.0):
            assert t_of_beta(state, beta) == pytest.approx(
                prior.a**-beta, rel=1e-12
            )

    def test_log_sum_powers_against_direct(self):
        rng = np.random.default_rng(3)
        x = rng.uniform(0.2, 5.0, size=400)
        betas = np.array([0.5, 2.0, 7.5])
        got = log_sum_powers(np.log(x), betas)
        want = np.log((x[:, None] ** betas[None, :]).sum(axis=0))
        assert np.allclose(got, want, rtol=1e-12)

    def test_log_space_safety(self):
        # Observations spanning six decades with a wide shape interval must
        # not overflow anywhere in the pipeline.
        prior = make_prior(0.5, 20.0, 1.0)
        state = initial_state(prior, r=0.99, n=4)
        state = absorb_sample(state, [1e-3, 1e-2, 1e2, 1e3])
        lt = log_t(state, np.linspace(0.5, 20.0, 301))
        assert np.all(np.isfinite(lt))
        assert math.isfinite(state.beta_hat_history[-1])
        assert math.isfinite(estimate_xr(state, beta_bar(state)))


class TestLikelihood:
    def test_against_direct_evaluation(self):
        x = np.array([0.8, 1.3, 2.1])
        x_r, beta, r = 1.1, 2.5, 0.9

        def direct():
            c = math.log(1.0 / r)
            return float(
                len(x) * math.log(beta)
                - beta * len(x) * math.log(x_r)
                + (beta - 1.0) * np.log(x).sum()
                - x_r**-beta * c * (x**beta).sum()
            )

        assert log_likelihood(x, x_r, beta, r) == pytest.approx(direct(), rel=1e-12)

    def test_validation(self):
        with pytest.raises(ValueError):
            log_likelihood([], 1.0, 2.0, 0.9)
        with pytest.raises(ValueError):
            log_likelihood([1.0, -1.0], 1.0, 2.0, 0.9)
        with pytest.raises(ValueError):
            log_likelihood([1.0], 0.0, 2.0, 0.9)


class TestRecursiveFactorization:
    def test_two_steps_match_stacked_update(self, train):
        # Without re-elicitation, absorbing two subgroups sequentially must
        # give the same marginal as absorbing all ten observations at once.
        prior = make_prior(2.4, 7.2, 1.22)
        twostep = initial_state(prior, r=0.99, n=5)
        twostep = absorb_sample(twostep, train[0], reelicit=False)
        twostep = absorb_sample(twostep, train[1], reelicit=False)

        stacked = initial_state(prior, r=0.99, n=10)
        stacked = absorb_sample(stacked, np.concatenate([train[0], train[1]]))

        grid = np.linspace(2.5, 7.1, 401)
        a = beta_marginal_log_density(twostep, grid)
        b = beta_marginal_log_density(stacked, grid)
        assert np.allclose(a, b, rtol=0, atol=1e-10)
        assert twostep.beta_hat_history[-1] == pytest.approx(
            stacked.beta_hat_history[-1], rel=1e-10
        )


class TestShapeEstimate:
    def test_requires_data(self):
        state = initial_state(make_prior(2.4, 7.2, 1.22), r=0.99, n=5)
        with pytest.raises(ValueError):
            estimate_beta(state)
        with pytest.raises(ValueError):
            beta_bar(state)

    def test_support_containment(self, train):
        state = _carbon_state(train)
        bh = estimate_beta(state)
        assert state.prior.beta1 < bh < state.prior.beta2

    def test_matches_quadrature_oracle(self, train):
        state = _carbon_state(train, k=3)
        shift = float(beta_marginal_log_density(state, 4.0))

        def w(b):
            return math.exp(beta_marginal_log_density(state, float(b)) - shift)

        p = state.prior
        mass, _ = integrate.quad(w, p.beta1, p.beta2, limit=400)
        moment, _ = integrate.quad(lambda b: b * w(b), p.beta1, p.beta2, limit=400)
        assert estimate_beta(state) == pytest.approx(moment / mass, rel=1e-8)

    def test_grid_doubling_stability(self, train):
        state = _carbon_state(train, k=4)
        coarse = estimate_beta(state, rtol=1e-10)
        fine = estimate_beta(state, rtol=1e-13)
        assert abs(coarse - fine) <= 1e-7

    def test_consistency_large_sample(self):
        model = WeibullModel(delta=1.0, beta=3.0)
        obs = weibull_sample(model, np.random.default_rng(11), size=10_000)
        prior = make_prior(1.5, 6.0, 0.472)
        state = initial_state(prior, r=0.9, n=10_000)
        state = absorb_sample(state, obs)
        assert state.beta_hat_history[-1] == pytest.approx(3.0, abs=0.05)


class TestPercentileEstimate:
    def test_empty_state_returns_anticipated_percentile(self):
        # With no data, T(bb) = a^-bb and the posterior mean collapses to
        # Gamma(1 - 1/bb)/a, the prior mean by construction.
        prior = make_prior(2.4, 7.2, 1.22)
        state = initial_state(prior, r=0.99, n=5)
        assert estimate_xr(state, prior.b_bar) == pytest.approx(1.22, rel=1e-12)

    def test_divergence_guard(self):
        prior = make_prior(2.4, 7.2, 1.22)
        state = initial_state(prior, r=0.99, n=5)
        with pytest.raises(ValueError):
            estimate_xr(state, 0.5)

    def test_matches_numeric_posterior_mean(self, train):
        state = _carbon_state(train, k=5)
        bb = beta_bar(state)
        mean, _ = integrate.quad(
            lambda x: x * math.exp(xr_conditional_log_pdf(x, state, bb)),
            1e-6,
            10.0,
            limit=400,
        )
        assert estimate_xr(state, bb) == pytest.approx(mean, rel=1e-6)

    def test_conditional_density_normalizes(self, train):
        state = _carbon_state(train, k=5)
        bb = beta_bar(state)
        total, _ = integrate.quad(
            lambda x: math.exp(xr_conditional_log_pdf(x, state, bb)),
            1e-6,
            10.0,
            limit=400,
        )
        assert total == pytest.approx(1.0, abs=1e-8)

    def test_gamma_transform_pointwise_identity(self, train):
        # The conditional density must equal the standard Gamma density of
        # z = x^-bb T(bb) with shape kn+1, times |dz/dx|, to near machine
        # precision in log space.
        state = _carbon_state(train, k=7)
        bb = beta_bar(state)
        kn = state.k * state.n
        lt = float(log_t(state, bb)[0])
        xs = np.linspace(0.6, 2.4, 181)
        got = xr_conditional_log_pdf(xs, state, bb)
        log_z = -bb * np.log(xs) + lt
        want = (
            kn * log_z
            - np.exp(log_z)
            - gammaln(kn + 1.0)
            + math.log(bb)
            - (bb + 1.0) * np.log(xs)
            + lt
        )
        assert np.max(np.abs(got - want)) <= 1e-10


class TestAbsorption:
    def test_shape_validation(self, train):
        state = initial_state(make_prior(2.4, 7.2, 1.22), r=0.99, n=5)
        with pytest.raises(ValueError):
            absorb_sample(state, train[0][:3])
        with pytest.raises(ValueError):
            absorb_sample(state, [-1.0, 1.0, 1.0, 1.0, 1.0])

    def test_reelicitation_recentres_prior(self, train):
        state = _carbon_state(train, k=2)
        bh1 = state.beta_hat_history[0]
        assert state.prior.beta1 == pytest.approx(0.5 * bh1, rel=1e-12)
        assert state.prior.beta2 == pytest.approx(1.5 * bh1, rel=1e-12)

    def test_history_grows_and_is_finite(self, train):
        state = _carbon_state(train, k=6)
        assert len(state.beta_hat_history) == 6
        assert all(math.isfinite(b) for b in state.beta_hat_history)


class TestWindowedRebuild:
    def test_full_window_keeps_observations(self, train):
        state = _carbon_state(train, k=6)
        rebuilt = rebuild_windowed(state, 6)
        assert np.array_equal(rebuilt.observations, state.observations)
        assert rebuilt.beta_hat_history == state.beta_hat_history
        # The prior is refreshed from the full-history estimates.
        assert rebuilt.prior.x_bar_r == pytest.approx(
            estimate_xr(state, beta_bar(state)), rel=1e-12
        )

    def test_truncation_keeps_trailing_subgroups(self, train):
        state = _carbon_state(train, k=6)
        rebuilt = rebuild_windowed(state, 2)
        assert rebuilt.k == 2
        assert np.array_equal(rebuilt.observations, state.observations[-10:])
        assert rebuilt.beta_hat_history == state.beta_hat_history[-2:]
        assert rebuilt.sum_log_x == pytest.approx(
            float(np.log(state.observations[-10:]).sum()), rel=1e-12
        )

    def test_window_bounds(self, train):
        state = _carbon_state(train, k=3)
        with pytest.raises(ValueError):
            rebuild_windowed(state, 0)
        with pytest.raises(ValueError):
            rebuild_windowed(state, 4)
