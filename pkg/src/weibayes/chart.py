"""Phase I / Phase II control charting for Weibull percentiles.

Phase I absorbs a fixed run of training subgroups, recomputing the
probability-based limits after every subgroup so the chart tightens as
information accumulates. Around fifty training observations are usually
enough for the limits to settle; the bundled demo uses ten subgroups of
five. At the end of Phase I the current limits are frozen from the full
accumulated state; an optional handoff window then rebuilds the posterior
from the trailing subgroups only, which keeps later monitoring responsive
when Phase I was long.

Phase II absorbs one subgroup at a time and compares the running
percentile estimate (and optionally the running shape estimate, which
shares the same posterior) against the frozen limits. A point strictly
outside signals. The state just before the signaled subgroup is kept so
that monitoring can resume with the offending subgroup excluded from the
posterior and from the shape-estimate history.

Charts built here evaluate the shape marginal without the standalone
prior-scale factor and re-elicit with the anticipated shape midpoint
anchored, the convention under which the bundled reference scenarios
reproduce their published run lengths. The posterior module's defaults are
unchanged; see its docstring.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from . import posterior as post
from .limits import ControlLimits, beta_limits, xr_limits
from .prior import make_prior

PHASE1 = "phase1"
PHASE2 = "phase2"

SIGNAL_NONE = "none"
SIGNAL_XR = "xr_ooc"
SIGNAL_BETA = "beta_ooc"
SIGNAL_BOTH = "both"


@dataclass(frozen=True)
class ChartConfig:
    """Static configuration of one chart run."""

    r: float
    alpha: float
    n: int
    phase1_samples: int
    prior_beta1: float
    prior_beta2: float
    prior_x_bar: float
    handoff_window: Optional[int] = None
    enable_beta_chart: bool = False
    phase2_reelicit: bool = True

    def __post_init__(self):
        if not (0.0 < self.r < 1.0):
            raise ValueError(f"reliability must lie in (0, 1), got {self.r}")
        if not (0.0 < self.alpha < 1.0):
            raise ValueError(f"alpha must lie in (0, 1), got {self.alpha}")
        if self.n < 1:
            raise ValueError(f"subgroup size must be positive, got {self.n}")
        if self.phase1_samples < 1:
            raise ValueError(
                f"phase1_samples must be positive, got {self.phase1_samples}"
            )
        if not (0.0 < self.prior_beta1 < self.prior_beta2):
            raise ValueError(
                "anticipated shape interval needs 0 < beta1 < beta2, got "
                f"({self.prior_beta1}, {self.prior_beta2})"
            )
        if self.prior_beta1 + self.prior_beta2 <= 2.0:
            raise ValueError(
                "anticipated shape interval must satisfy beta1 + beta2 > 2"
            )
        if self.prior_x_bar <= 0:
            raise ValueError(f"prior_x_bar must be positive, got {self.prior_x_bar}")
        if self.handoff_window is not None and not (
            1 <= self.handoff_window <= self.phase1_samples
        ):
            raise ValueError(
                f"handoff_window must lie in [1, phase1_samples], got {self.handoff_window}"
            )


@dataclass(frozen=True)
class ChartRecord:
    """One plotted point: estimates, the limits in force, and the verdict."""

    sample_index: int
    xr_point: float
    beta_point: float
    xr_limits_at_k: ControlLimits
    beta_limits_at_k: Optional[ControlLimits]
    phase: str
    signal: str = SIGNAL_NONE
    diagnostic: bool = False

    def __post_init__(self):
        if self.phase not in (PHASE1, PHASE2):
            raise ValueError(f"unknown phase {self.phase!r}")
        if self.signal not in (SIGNAL_NONE, SIGNAL_XR, SIGNAL_BETA, SIGNAL_BOTH):
            raise ValueError(f"unknown signal {self.signal!r}")
        if self.phase == PHASE1 and self.signal != SIGNAL_NONE:
            raise ValueError("Phase I records never carry signals")


@dataclass(frozen=True)
class ChartState:
    """Everything needed to continue monitoring or to render a report."""

    config: ChartConfig
    posterior: post.PosteriorState
    phase: str
    records: tuple = ()
    frozen_xr: Optional[ControlLimits] = None
    frozen_beta: Optional[ControlLimits] = None
    rollback: Optional[post.PosteriorState] = None
    samples_seen: int = 0


def _new_posterior(config: ChartConfig) -> post.PosteriorState:
    prior = make_prior(config.prior_beta1, config.prior_beta2, config.prior_x_bar)
    return post.initial_state(
        prior, config.r, config.n, prior_scale_weight=False, anchor_b=True
    )


def new_chart(config: ChartConfig) -> ChartState:
    """Fresh Phase I chart with no data absorbed yet."""
    return ChartState(config=config, posterior=_new_posterior(config), phase=PHASE1)


def _point_estimates(state: post.PosteriorState):
    bb = post.beta_bar(state)
    return post.estimate_xr(state, bb), state.beta_hat_history[-1], bb


def run_phase1(config: ChartConfig, samples) -> ChartState:
    """Absorb the Phase I training run and freeze the monitoring limits.

    ``samples`` must provide ``phase1_samples`` subgroups of ``n`` positive
    values. The returned state carries one record per subgroup with the
    limits in force at that step, the frozen Phase II limits computed from
    the full end-of-phase state, and, if a handoff window was configured,
    a posterior rebuilt from the trailing subgroups (the freeze always
    happens first). Phase I records never signal; points that fall outside
    the previous step's limits are only flagged diagnostically.
    """
    data = np.asarray(samples, dtype=float)
    if data.shape != (config.phase1_samples, config.n):
        raise ValueError(
            f"expected {config.phase1_samples} subgroups of {config.n}, got {data.shape}"
        )
    state = _new_posterior(config)
    records = []
    prev_limits = None
    for i, row in enumerate(data, start=1):
        state = post.absorb_sample(state, row, reelicit=True)
        xr_hat, beta_hat, bb = _point_estimates(state)
        lims = xr_limits(state, bb, config.alpha)
        blims = beta_limits(state, config.alpha) if config.enable_beta_chart else None
        diagnostic = prev_limits is not None and not (
            prev_limits.lcl <= xr_hat <= prev_limits.ucl
        )
        records.append(
            ChartRecord(
                sample_index=i,
                xr_point=xr_hat,
                beta_point=beta_hat,
                xr_limits_at_k=lims,
                beta_limits_at_k=blims,
                phase=PHASE1,
                diagnostic=diagnostic,
            )
        )
        prev_limits = lims

    frozen_xr = xr_limits(state, post.beta_bar(state), config.alpha)
    frozen_beta = beta_limits(state, config.alpha) if config.enable_beta_chart else None
    if config.handoff_window is not None and config.handoff_window < config.phase1_samples:
        state = post.rebuild_windowed(state, config.handoff_window)
    return ChartState(
        config=config,
        posterior=state,
        phase=PHASE2,
        records=tuple(records),
        frozen_xr=frozen_xr,
        frozen_beta=frozen_beta,
        samples_seen=config.phase1_samples,
    )


def monitor(chart: ChartState, sample: Sequence[float]) -> ChartState:
    """Absorb one Phase II subgroup and compare against the frozen limits.

    A point strictly outside its limits signals; the pre-absorption
    posterior is retained on the returned state so the subgroup can be
    excluded again via restart_after_signal. Monitoring may continue past
    a signal, in which case a later signal replaces the retained snapshot.
    """
    if chart.phase != PHASE2:
        raise ValueError("monitor requires a Phase II chart; run Phase I first")
    snapshot = chart.posterior
    new_post = post.absorb_sample(
        snapshot, sample, reelicit=chart.config.phase2_reelicit
    )
    xr_hat, beta_hat, _ = _point_estimates(new_post)

    fx = chart.frozen_xr
    xr_out = not (fx.lcl <= xr_hat <= fx.ucl)
    beta_out = False
    if chart.config.enable_beta_chart:
        fb = chart.frozen_beta
        beta_out = not (fb.lcl <= beta_hat <= fb.ucl)
    if xr_out and beta_out:
        signal = SIGNAL_BOTH
    elif xr_out:
        signal = SIGNAL_XR
    elif beta_out:
        signal = SIGNAL_BETA
    else:
        signal = SIGNAL_NONE

    record = ChartRecord(
        sample_index=chart.samples_seen + 1,
        xr_point=xr_hat,
        beta_point=beta_hat,
        xr_limits_at_k=fx,
        beta_limits_at_k=chart.frozen_beta,
        phase=PHASE2,
        signal=signal,
    )
    return replace(
        chart,
        posterior=new_post,
        records=chart.records + (record,),
        rollback=snapshot if signal != SIGNAL_NONE else chart.rollback,
        samples_seen=chart.samples_seen + 1,
    )


def restart_after_signal(chart: ChartState) -> ChartState:
    """Resume monitoring with the signaled subgroup excluded.

    Reverts the posterior to the snapshot taken just before the most
    recent signaled subgroup, dropping that subgroup's observations and
    its shape estimate from the history. The record log is kept. Raises
    if no signal is pending. Two signal/restart cycles compose: the final
    posterior equals one that never absorbed either signaled subgroup.
    """
    if chart.rollback is None:
        raise ValueError("no signal pending; nothing to roll back")
    return replace(chart, posterior=chart.rollback, rollback=None)
