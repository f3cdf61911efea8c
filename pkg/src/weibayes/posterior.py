"""Recursive posterior over (x_R, beta) for accumulated Weibull subgroups.

After k subgroups of size n the joint posterior factors through two pieces:
the marginal posterior of the shape parameter beta on the anticipated
interval (beta1, beta2), and, conditional on a representative shape value,
a closed-form posterior for the percentile x_R. Everything is driven by the
recurring factor

    T(beta) = a^(-beta) + ln(1/R) * sum_i x_i^beta

taken over all accumulated observations, which is always evaluated through
log-sum-exp (beta * ln x_i spans hundreds for realistic data).

The conditional x_R posterior transforms to a standard Gamma law with shape
k*n + 1 under z = x_R^(-beta_bar) * T(beta_bar), which is what makes exact
probability-based control limits cheap (see the limits module).

States are immutable; absorbing a subgroup returns a new state. From the
second subgroup on, the prior hyper-parameters are re-elicited from the
previous step's point estimates before the new data are absorbed.

Two evaluation conventions exist for the beta marginal, differing in
whether the prior scale contributes a standalone a^(-beta) factor on top of
its contribution through T(beta). ``prior_scale_weight`` selects between
them (default: factor included). The control chart constructs states with
the factor omitted and with re-elicitation anchored to the initial
anticipated shape, the convention under which the bundled benchmark
scenarios reproduce their reference run lengths; see the chart module.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np
from scipy.special import gammaln, logsumexp

from .prior import PriorSpec, next_prior

_MAX_PANELS = 2**14
_OBS_CHUNK = 8192


@dataclass(frozen=True, eq=False)
class PosteriorState:
    """Accumulated-data posterior state after k subgroups of size n."""

    observations: np.ndarray
    k: int
    n: int
    r: float
    prior: PriorSpec
    sum_log_x: float
    beta_hat_history: tuple = ()
    prior_scale_weight: bool = True
    anchor_b: bool = False

    def __post_init__(self):
        obs = np.asarray(self.observations, dtype=float)
        object.__setattr__(self, "observations", obs)
        if obs.size != self.k * self.n:
            raise ValueError(
                f"state holds {obs.size} observations but k*n = {self.k * self.n}"
            )
        if obs.size and np.any(obs <= 0):
            raise ValueError("all observations must be positive")
        if not (0.0 < self.r < 1.0):
            raise ValueError(f"reliability must lie in (0, 1), got {self.r}")
        if len(self.beta_hat_history) != self.k:
            raise ValueError("beta_hat_history length must equal k")


def initial_state(
    prior: PriorSpec,
    r: float,
    n: int,
    prior_scale_weight: bool = True,
    anchor_b: bool = False,
) -> PosteriorState:
    """Empty state (k = 0) carrying the user-elicited prior."""
    if n < 1:
        raise ValueError(f"subgroup size must be a positive integer, got {n}")
    return PosteriorState(
        observations=np.empty(0),
        k=0,
        n=n,
        r=r,
        prior=prior,
        sum_log_x=0.0,
        beta_hat_history=(),
        prior_scale_weight=prior_scale_weight,
        anchor_b=anchor_b,
    )


def log_likelihood(sample: Sequence[float], x_r: float, beta: float, r: float) -> float:
    """Weibull log likelihood of one subgroup in the percentile parameterization.

    n ln(beta) - beta n ln(x_R) + (beta - 1) sum ln x_i
      - x_R^(-beta) ln(1/R) sum x_i^beta,
    with the beta-free proportionality constant dropped.
    """
    x = np.asarray(sample, dtype=float)
    if x.size == 0:
        raise ValueError("sample must be nonempty")
    if np.any(x <= 0):
        raise ValueError("all observations must be positive")
    if x_r <= 0:
        raise ValueError("x_r must be positive")
    log_x = np.log(x)
    log_pow = logsumexp(beta * log_x)
    return float(
        x.size * math.log(beta)
        - beta * x.size * math.log(x_r)
        + (beta - 1.0) * log_x.sum()
        - math.exp(math.log(math.log(1.0 / r)) + log_pow - beta * math.log(x_r))
    )


def log_sum_powers(log_obs: np.ndarray, betas: np.ndarray) -> np.ndarray:
    """ln sum_i x_i^beta for each beta, chunked log-sum-exp over observations."""
    betas = np.atleast_1d(np.asarray(betas, dtype=float))
    out = np.full(betas.shape, -np.inf)
    for start in range(0, log_obs.size, _OBS_CHUNK):
        chunk = log_obs[start : start + _OBS_CHUNK]
        part = logsumexp(np.multiply.outer(chunk, betas), axis=0)
        out = np.logaddexp(out, part)
    return out


def _log_t_parts(log_a: float, log_c: float, betas: np.ndarray, log_pow: np.ndarray):
    """ln T(beta) from precomputed ln sum x^beta (-inf for an empty sum)."""
    return np.logaddexp(-betas * log_a, log_c + log_pow)


def log_t(state: PosteriorState, betas) -> np.ndarray:
    """ln T(beta) = ln[a^(-beta) + ln(1/R) sum x_i^beta], vectorized in beta."""
    betas = np.atleast_1d(np.asarray(betas, dtype=float))
    log_a = math.log(state.prior.a)
    if state.observations.size == 0:
        return -betas * log_a
    log_c = math.log(math.log(1.0 / state.r))
    log_pow = log_sum_powers(np.log(state.observations), betas)
    return _log_t_parts(log_a, log_c, betas, log_pow)


def t_of_beta(state: PosteriorState, beta: float) -> float:
    """The recurring posterior factor T(beta), exponentiated from log form."""
    return float(np.exp(log_t(state, beta)[0]))


def _marginal_logw(
    kn: int,
    sum_log_x: float,
    log_a: float,
    betas: np.ndarray,
    log_t_vals: np.ndarray,
    prior_scale_weight: bool,
) -> np.ndarray:
    """Unnormalized log marginal of beta on its support (shared core)."""
    with np.errstate(divide="ignore"):
        lw = (
            kn * np.log(betas)
            + (betas - 1.0) * sum_log_x
            - (kn + 1.0) * log_t_vals
        )
    if prior_scale_weight:
        lw = lw - betas * log_a
    return lw


def beta_marginal_log_density(state: PosteriorState, beta) -> np.ndarray | float:
    """Unnormalized log marginal posterior density of beta.

    k n ln(beta) + (beta - 1) sum ln x_i - (k n + 1) ln T(beta), plus a
    standalone -beta ln(a) term when the state carries
    ``prior_scale_weight=True``. Minus infinity outside (beta1, beta2).
    """
    betas = np.atleast_1d(np.asarray(beta, dtype=float))
    # closed at the endpoints: the marginal is continuous up to the
    # boundary, and zeroing the boundary nodes would stall the quadrature
    inside = (betas >= state.prior.beta1) & (betas <= state.prior.beta2)
    out = np.full(betas.shape, -np.inf)
    if np.any(inside):
        bs = betas[inside]
        lw = _marginal_logw(
            state.k * state.n,
            state.sum_log_x,
            math.log(state.prior.a),
            bs,
            log_t(state, bs),
            state.prior_scale_weight,
        )
        out[inside] = lw
    if np.isscalar(beta):
        return float(out[0])
    return out


def _simpson(values: np.ndarray, h: float, axis: int = -1) -> np.ndarray:
    """Composite Simpson rule on a uniform grid with an even panel count."""
    v = np.moveaxis(values, axis, -1)
    return (
        h
        / 3.0
        * (v[..., 0] + v[..., -1] + 4.0 * v[..., 1::2].sum(-1) + 2.0 * v[..., 2:-1:2].sum(-1))
    )


def _refine_until_stable(eval_fn, lo, hi, rtol, combine, min_panels=128):
    """Double a uniform Simpson grid until ``combine``'s outputs stabilize.

    ``eval_fn`` maps a node array to integrand values (any number of rows);
    ``combine`` maps (nodes, values, h) to a tuple of integrals. Previously
    computed values are reused on refinement; only the new odd-index nodes
    are evaluated.
    """
    panels = min_panels
    xs = np.linspace(lo, hi, panels + 1)
    ys = eval_fn(xs)
    result = combine(xs, ys, (hi - lo) / panels)
    while panels < _MAX_PANELS:
        panels *= 2
        xs2 = np.linspace(lo, hi, panels + 1)
        ys2 = np.empty(ys.shape[:-1] + (panels + 1,))
        ys2[..., ::2] = ys
        ys2[..., 1::2] = eval_fn(xs2[1::2])
        xs, ys = xs2, ys2
        new = combine(xs, ys, (hi - lo) / panels)
        scale = max(max(abs(v) for v in new), 1e-300)
        if max(abs(a - b) for a, b in zip(new, result)) <= rtol * scale:
            return xs, ys, new
        result = new
    return xs, ys, result


def _marginal_log_shift(state: PosteriorState, probe_nodes: int = 513) -> float:
    """A fixed exponent shift for the marginal, from a coarse probe grid.

    The shift must stay constant across refinement levels of one
    integration, otherwise reused values and newly computed values would
    carry different scales.
    """
    p = state.prior
    probe = np.linspace(p.beta1, p.beta2, probe_nodes)[1:-1]
    return float(np.max(beta_marginal_log_density(state, probe)))


def _weights_on_grid(state: PosteriorState, xs: np.ndarray, shift: float) -> np.ndarray:
    lw = beta_marginal_log_density(state, xs)
    return np.exp(lw - shift)


def estimate_beta(state: PosteriorState, rtol: float = 1e-10) -> float:
    """Posterior mean of beta, by adaptive Simpson quadrature on (beta1, beta2).

    The integrand is exponentiated after subtracting its maximum log value;
    the grid is doubled until both the normalizer and the first-moment
    integral are stable to ``rtol``.
    """
    if state.k < 1:
        raise ValueError("estimate_beta needs at least one absorbed subgroup")
    return _estimate_beta_unchecked(state, rtol)


def beta_bar(state: PosteriorState) -> float:
    """Running mean of all shape estimates accumulated so far."""
    if not state.beta_hat_history:
        raise ValueError("no shape estimates recorded yet")
    return float(np.mean(state.beta_hat_history))


def xr_conditional_log_pdf(x_r, state: PosteriorState, beta_bar: float):
    """Log density of x_R given the data and a representative shape value.

    ln(bb) - [bb(kn+1)+1] ln(x_R) - ln Gamma(kn+1) + (kn+1) ln T(bb)
      - x_R^(-bb) T(bb),  with bb = beta_bar and kn = k*n.
    """
    x = np.atleast_1d(np.asarray(x_r, dtype=float))
    if np.any(x <= 0):
        raise ValueError("x_r must be positive")
    kn = state.k * state.n
    lt = float(log_t(state, beta_bar)[0])
    log_x = np.log(x)
    out = (
        math.log(beta_bar)
        - (beta_bar * (kn + 1.0) + 1.0) * log_x
        - gammaln(kn + 1.0)
        + (kn + 1.0) * lt
        - np.exp(lt - beta_bar * log_x)
    )
    if np.isscalar(x_r):
        return float(out[0])
    return out


def estimate_xr(state: PosteriorState, beta_bar: float) -> float:
    """Posterior mean of x_R given the representative shape value.

    exp[ln Gamma(kn+1-1/bb) - ln Gamma(kn+1)] * T(bb)^(1/bb). Requires
    kn + 1 > 1/bb, otherwise the mean diverges.
    """
    kn = state.k * state.n
    if kn + 1.0 - 1.0 / beta_bar <= 0:
        raise ValueError(
            f"posterior mean of x_R diverges: k*n+1 = {kn + 1} <= 1/beta_bar"
        )
    lt = float(log_t(state, beta_bar)[0])
    return float(
        math.exp(gammaln(kn + 1.0 - 1.0 / beta_bar) - gammaln(kn + 1.0) + lt / beta_bar)
    )


def absorb_sample(
    state: PosteriorState, sample: Sequence[float], reelicit: bool = True
) -> PosteriorState:
    """Absorb one subgroup and return the successor state.

    From the second subgroup on (and whenever ``reelicit`` is left on), the
    prior is first re-elicited from the previous step's point estimates
    (beta_hat_{k-1}, x_hat_{k-1}); the new shape estimate is computed and
    appended to the history.
    """
    x = np.asarray(sample, dtype=float)
    if x.shape != (state.n,):
        raise ValueError(f"expected a subgroup of {state.n} values, got shape {x.shape}")
    if np.any(x <= 0):
        raise ValueError("all observations must be positive")

    prior = state.prior
    if reelicit and state.k >= 1:
        prev_beta = state.beta_hat_history[-1]
        prev_xr = estimate_xr(state, beta_bar(state))
        prior = next_prior(prev_beta, prev_xr, prior, anchor_b=state.anchor_b)

    # the new shape estimate is not known until the grown state exists, so
    # the history slot is filled with a placeholder first
    grown = replace(
        state,
        observations=np.concatenate([state.observations, x]),
        k=state.k + 1,
        prior=prior,
        sum_log_x=state.sum_log_x + float(np.log(x).sum()),
        beta_hat_history=state.beta_hat_history + (math.nan,),
    )
    bh = _estimate_beta_unchecked(grown)
    return replace(grown, beta_hat_history=state.beta_hat_history + (bh,))


def _estimate_beta_unchecked(state: PosteriorState, rtol: float = 1e-10) -> float:
    p = state.prior
    shift = _marginal_log_shift(state)

    def combine(xs, ys, h):
        return (_simpson(ys, h), _simpson(xs * ys, h))

    _, _, (mass, moment) = _refine_until_stable(
        lambda xs: _weights_on_grid(state, xs, shift), p.beta1, p.beta2, rtol, combine
    )
    if not (mass > 0 and np.isfinite(mass)):
        raise ArithmeticError("beta marginal quadrature failed to converge")
    return float(moment / mass)


def rebuild_windowed(state: PosteriorState, window: int) -> PosteriorState:
    """Keep only the trailing ``window`` subgroups, re-eliciting the prior.

    The re-elicitation uses the full-history estimates (the running mean of
    all shape estimates and the current percentile estimate), so the
    discarded subgroups still inform the prior of the rebuilt state. The
    shape-estimate history is truncated to match.
    """
    if not (1 <= window <= state.k):
        raise ValueError(f"window must lie in [1, k={state.k}], got {window}")
    bb = beta_bar(state)
    xr = estimate_xr(state, bb)
    prior = next_prior(bb, xr, state.prior, anchor_b=state.anchor_b)
    kept = state.observations[-window * state.n :]
    return replace(
        state,
        observations=kept.copy(),
        k=window,
        prior=prior,
        sum_log_x=float(np.log(kept).sum()),
        beta_hat_history=state.beta_hat_history[-window:],
    )
