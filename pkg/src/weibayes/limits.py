"""Probability-based control limits for the percentile and shape charts.

The x_R limits come from an exact change of variables: given the
representative shape value bb, the quantity z = x_R^(-bb) * T(bb) follows a
standard Gamma law with shape k*n + 1 under the conditional posterior of
x_R. Equal-tail limits in z map back through x = (T / z)^(1/bb); the upper
z quantile gives the lower x limit and vice versa.

The shape-chart limits have no such transform and are found by inverting
the numerically integrated marginal CDF of beta on its anticipated
interval.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import cumulative_simpson

from .distributions import gamma_quantile
from .posterior import (
    PosteriorState,
    _marginal_log_shift,
    _refine_until_stable,
    _simpson,
    _weights_on_grid,
    beta_marginal_log_density,
    estimate_beta,
    estimate_xr,
    log_t,
    xr_conditional_log_pdf,
)

DEFAULT_ALPHA = 0.0027
"""False-alarm rate giving a nominal in-control ARL of about 370."""

EXTENDED_ALPHA = 0.002
"""Preset for long monitoring runs, nominal in-control ARL of 500."""

_QUANTILE_TOL = 1e-9


@dataclass(frozen=True)
class ControlLimits:
    """Equal-tail control limits with their defining tail probability."""

    lcl: float
    ucl: float
    cl: float
    alpha: float
    gamma_shape: float

    def __post_init__(self):
        if not (0.0 < self.alpha < 1.0):
            raise ValueError(f"alpha must lie in (0, 1), got {self.alpha}")
        if not (self.lcl < self.ucl):
            raise ValueError(f"lcl must be below ucl, got [{self.lcl}, {self.ucl}]")


@dataclass(frozen=True)
class LimitCheck:
    """Numeric coverage of a limit pair against its nominal level."""

    coverage: float
    nominal: float
    abs_error: float


def xr_limits(state: PosteriorState, beta_bar: float, alpha: float) -> ControlLimits:
    """Equal-tail limits for the percentile chart via the Gamma transform.

    With gamma = k*n + 1 and lt = ln T(beta_bar), the limits are
    (T / z)^(1/beta_bar) at the upper and lower alpha/2 Gamma quantiles.
    """
    if not (0.0 < alpha < 1.0):
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    gamma = state.k * state.n + 1.0
    lt = float(log_t(state, beta_bar)[0])
    z_hi = gamma_quantile(1.0 - alpha / 2.0, gamma)
    z_lo = gamma_quantile(alpha / 2.0, gamma)
    lcl = math.exp((lt - math.log(z_hi)) / beta_bar)
    ucl = math.exp((lt - math.log(z_lo)) / beta_bar)
    cl = estimate_xr(state, beta_bar)
    return ControlLimits(lcl=lcl, ucl=ucl, cl=cl, alpha=alpha, gamma_shape=gamma)


def xr_limit_check(
    state: PosteriorState, beta_bar: float, limits: ControlLimits
) -> LimitCheck:
    """Integrate the conditional x_R density between the limits numerically.

    Independent of the Gamma transform used to place the limits, so it
    validates the transform: the coverage should equal 1 - alpha.
    """
    shift = float(xr_conditional_log_pdf(limits.cl, state, beta_bar))

    def density(xs):
        lp = xr_conditional_log_pdf(xs, state, beta_bar)
        return np.exp(lp - shift)

    def combine(xs, ys, h):
        return (_simpson(ys, h),)

    _, _, (coverage,) = _refine_until_stable(
        density, limits.lcl, limits.ucl, 1e-12, combine
    )
    coverage *= math.exp(shift)
    nominal = 1.0 - limits.alpha
    return LimitCheck(
        coverage=float(coverage), nominal=nominal, abs_error=abs(coverage - nominal)
    )


_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(16)


def _beta_grid_cdf(state: PosteriorState):
    """Converged density grid, its cumulative Simpson CDF, and the density.

    The CDF is normalized to end at 1; the returned weight function is
    normalized consistently so it is the derivative of the CDF.
    """
    p = state.prior
    shift = _marginal_log_shift(state)

    def combine(xs, ys, h):
        return (_simpson(ys, h),)

    xs, ys, (mass,) = _refine_until_stable(
        lambda b: _weights_on_grid(state, b, shift), p.beta1, p.beta2, 1e-10, combine
    )
    if not (mass > 0 and np.isfinite(mass)):
        raise ArithmeticError("beta marginal quadrature failed to converge")
    cum = cumulative_simpson(ys, x=xs, initial=0.0)
    total = float(cum[-1])
    cum = cum / total

    def density(b):
        return _weights_on_grid(state, np.asarray(b, dtype=float), shift) / total

    return xs, cum, density


def _invert_cdf(xs: np.ndarray, cum: np.ndarray, p: float, density) -> float:
    """Solve CDF(x) = p by bisection, re-integrating inside the bracket.

    The grid CDF brackets the quantile; within the bracket the cumulative
    mass is recomputed from the density by Gauss-Legendre quadrature, so
    the answer is not limited by linear interpolation between grid nodes.
    """
    i = int(np.searchsorted(cum, p, side="left"))
    i = min(max(i, 1), xs.size - 1)
    x0, lo, hi = xs[i - 1], xs[i - 1], xs[i]
    c0 = cum[i - 1]

    def cdf(x):
        if x <= x0:
            return c0
        nodes = 0.5 * (x - x0) * _GL_NODES + 0.5 * (x + x0)
        return c0 + 0.5 * (x - x0) * float(np.dot(_GL_WEIGHTS, density(nodes)))

    while hi - lo > _QUANTILE_TOL:
        mid = 0.5 * (lo + hi)
        if cdf(mid) < p:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def beta_limits(state: PosteriorState, alpha: float) -> ControlLimits:
    """Equal-tail limits for the shape chart from the integrated marginal CDF.

    The density grid and its cumulative integrals are computed once; both
    quantiles are then found by bisection to 1e-9. Before any data arrive
    the marginal is flat and the limits sit symmetrically inside the
    anticipated interval.
    """
    if not (0.0 < alpha < 1.0):
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    xs, cum, density = _beta_grid_cdf(state)
    lcl = _invert_cdf(xs, cum, alpha / 2.0, density)
    ucl = _invert_cdf(xs, cum, 1.0 - alpha / 2.0, density)
    cl = estimate_beta(state) if state.k >= 1 else state.prior.b_bar
    return ControlLimits(
        lcl=lcl, ucl=ucl, cl=cl, alpha=alpha, gamma_shape=float(state.k * state.n + 1)
    )


def beta_limit_check(state: PosteriorState, limits: ControlLimits) -> LimitCheck:
    """Coverage of the shape-chart limits by direct forward integration."""
    probe = np.linspace(state.prior.beta1, state.prior.beta2, 513)[1:-1]
    shift = float(np.max(beta_marginal_log_density(state, probe)))

    def density(bs):
        return np.exp(beta_marginal_log_density(state, bs) - shift)

    def combine(xs, ys, h):
        return (_simpson(ys, h),)

    lo = max(limits.lcl, state.prior.beta1)
    hi = min(limits.ucl, state.prior.beta2)
    _, _, (part,) = _refine_until_stable(density, lo, hi, 1e-12, combine)
    _, _, (total,) = _refine_until_stable(
        density, state.prior.beta1, state.prior.beta2, 1e-12, combine
    )
    coverage = float(part / total)
    nominal = 1.0 - limits.alpha
    return LimitCheck(coverage=coverage, nominal=nominal, abs_error=abs(coverage - nominal))
