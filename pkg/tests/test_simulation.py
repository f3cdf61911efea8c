import math

import numpy as np
import pytest

from weibayes.chart import ChartConfig
from weibayes.distributions import (
    WeibullModel,
    percentile_of,
    weibull_moments,
    weibull_sample,
)
from weibayes.limits import xr_limits
from weibayes.posterior import absorb_sample, beta_bar, estimate_xr, initial_state
from weibayes.simulation import (
    PRESETS,
    ScenarioSpec,
    _LeanChart,
    prior_sensitivity_grid,
    run_study,
    scenario_from_shift,
    scenario_prior,
)

IC = WeibullModel(delta=3.2, beta=4.8)


class TestScenarioPrior:
    def test_centered_on_in_control_model(self):
        spec = ScenarioSpec(ic=IC, ooc=IC, r=0.99)
        prior = scenario_prior(spec)
        assert prior.beta1 == pytest.approx(2.4)
        assert prior.beta2 == pytest.approx(7.2)
        assert prior.x_bar_r == pytest.approx(percentile_of(IC, 0.99), rel=1e-12)

    def test_interval_nudged_when_restriction_would_break(self):
        # A unit in-control shape gives (0.5, 1.5), which violates
        # beta1 + beta2 > 2; the upper end moves to the smallest admissible
        # value instead.
        unit = WeibullModel(delta=1.0, beta=1.0)
        prior = scenario_prior(ScenarioSpec(ic=unit, ooc=unit, r=0.90))
        assert prior.beta1 == pytest.approx(0.5)
        assert prior.beta2 == pytest.approx(1.51)

    def test_shifted_mode_scales_percentile(self):
        spec = ScenarioSpec(
            ic=IC, ooc=IC, r=0.99, prior_mode="shifted", prior_shift=1.3
        )
        prior = scenario_prior(spec)
        assert prior.x_bar_r == pytest.approx(
            1.3 * percentile_of(IC, 0.99), rel=1e-12
        )


class TestScenarioFromShift:
    def test_identity_recovers_in_control_model(self):
        model = scenario_from_shift(0.99, x_r=percentile_of(IC, 0.99), beta=4.8)
        assert model.delta == pytest.approx(3.2, rel=1e-9)
        assert model.beta == 4.8

    def test_percentile_and_mean(self):
        # Dropping the percentile to 0.26 while holding the mean at 2.91
        # lands near shape 1.8, scale 3.3.
        model = scenario_from_shift(0.99, x_r=0.26, mu=2.91)
        assert model.beta == pytest.approx(1.8, abs=0.05)
        assert model.delta == pytest.approx(3.3, abs=0.05)
        mu, _ = weibull_moments(model)
        assert mu == pytest.approx(2.91, rel=1e-9)
        assert percentile_of(model, 0.99) == pytest.approx(0.26, rel=1e-9)

    def test_percentile_and_shape(self):
        # Same percentile drop with the shape held: the scale collapses.
        model = scenario_from_shift(0.99, x_r=0.26, beta=4.8)
        assert model.delta == pytest.approx(0.7, abs=0.05)

    def test_mean_and_sigma(self):
        mu, sigma = weibull_moments(IC)
        model = scenario_from_shift(0.99, mu=mu, sigma=sigma)
        assert model.beta == pytest.approx(4.8, rel=1e-6)
        assert model.delta == pytest.approx(3.2, rel=1e-6)

    def test_exactly_two_targets(self):
        with pytest.raises(ValueError):
            scenario_from_shift(0.99, x_r=0.26)
        with pytest.raises(ValueError):
            scenario_from_shift(0.99, x_r=0.26, mu=2.91, sigma=1.0)
        with pytest.raises(ValueError):
            scenario_from_shift(0.99, x_r=-0.26, mu=2.91)

    def test_unattainable_dispersion(self):
        # No Weibull shape in the search range has a coefficient of
        # variation this small.
        with pytest.raises(ValueError):
            scenario_from_shift(0.99, mu=1.0, sigma=0.001)


class TestStudies:
    def test_deterministic_given_seed(self):
        spec = ScenarioSpec(
            ic=IC,
            ooc=WeibullModel(delta=0.7, beta=4.8),
            r=0.99,
            n=3,
            m=3,
            replications=5,
            max_run=50,
            seed=99,
        )
        a = run_study(spec)
        b = run_study(spec)
        assert a.run_lengths == b.run_lengths
        assert a.arl == b.arl

    def test_truncation_counted_at_cap(self):
        spec = ScenarioSpec(
            ic=IC, ooc=IC, r=0.99, n=2, m=2, replications=4, max_run=3, seed=1
        )
        res = run_study(spec)
        assert res.truncated == 4
        assert res.arl == 3.0
        assert res.run_lengths == (3, 3, 3, 3)

    def test_standard_error(self):
        spec = ScenarioSpec(
            ic=IC,
            ooc=WeibullModel(delta=0.7, beta=4.8),
            r=0.99,
            n=2,
            m=2,
            replications=8,
            max_run=50,
            seed=5,
        )
        res = run_study(spec)
        assert res.se == pytest.approx(res.sdrl / math.sqrt(8))


class TestLeanEngineAgreesWithExactPosterior:
    def test_trajectory_and_limits(self):
        # The run-length engine caches power sums on a master grid and uses
        # fixed-node marginals; it must track the exact accumulated-data
        # posterior to a few parts in a million along a whole replication.
        spec = ScenarioSpec(
            ic=IC, ooc=WeibullModel(delta=2.0, beta=3.0), r=0.99, n=5, m=6, seed=0
        )
        prior = scenario_prior(spec)
        rng = np.random.default_rng(1234)
        phase1 = [weibull_sample(spec.ic, rng, 5) for _ in range(6)]
        phase2 = [weibull_sample(spec.ooc, rng, 5) for _ in range(4)]

        lean = _LeanChart(prior, 0.99, 5, beta_hi=max(12.0, 4.5 * prior.beta2))
        exact = initial_state(
            prior, 0.99, 5, prior_scale_weight=False, anchor_b=True
        )
        for row in phase1:
            lean.absorb(row)
            exact = absorb_sample(exact, row)
            assert lean.bh[-1] == pytest.approx(
                exact.beta_hat_history[-1], rel=2e-6
            )
        lcl, ucl = lean.freeze_xr(0.0027)
        ref = xr_limits(exact, beta_bar(exact), 0.0027)
        assert lcl == pytest.approx(ref.lcl, rel=1e-5)
        assert ucl == pytest.approx(ref.ucl, rel=1e-5)

        for row in phase2:
            lean.absorb(row)
            exact = absorb_sample(exact, row)
            assert lean.xhat == pytest.approx(
                estimate_xr(exact, beta_bar(exact)), rel=1e-5
            )


class TestPriorSensitivityGrid:
    def test_restriction_violations_reported_per_cell(self, train, test_rows):
        config = ChartConfig(
            r=0.99,
            alpha=0.0027,
            n=5,
            phase1_samples=10,
            prior_beta1=2.4,
            prior_beta2=7.2,
            prior_x_bar=1.22,
        )
        cells = prior_sensitivity_grid(
            config, train, test_rows, factors=(0.2, 1.0)
        )
        assert len(cells) == 4
        failed = [c for c in cells if c.error is not None]
        worked = [c for c in cells if c.error is None]
        # Scaling the shape interval by 0.2 breaks beta1 + beta2 > 2;
        # scaling the anticipated percentile never does.
        assert {c.beta_factor for c in failed} == {0.2}
        assert {c.beta_factor for c in worked} == {1.0}
        for cell in worked:
            assert cell.width is not None
            assert cell.signal_index is not None


class TestPresets:
    def test_catalogue(self):
        expected = {
            "up-shift-r90",
            "down-shift-r99",
            "shape-drop-r90",
            "up-shift-r99",
            "sigma-shift",
            "mixed-shift",
            "mean-beta-shift",
            "mean-sigma-shift",
            "shape-quarter",
            "shape-half",
            "shape-double",
            "shape-quadruple",
            "ic-calibration",
        }
        assert expected <= set(PRESETS)

    def test_ic_calibration_has_no_shift(self):
        spec = PRESETS["ic-calibration"]
        assert spec.ic == spec.ooc

    def test_strength_presets_center_on_strength_process(self):
        for name in ("sigma-shift", "mixed-shift", "mean-beta-shift", "mean-sigma-shift"):
            spec = PRESETS[name]
            assert spec.ic == IC
            assert spec.r == 0.99
