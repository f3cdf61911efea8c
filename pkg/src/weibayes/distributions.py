"""Distribution primitives: Weibull, Inverse Weibull, and standard Gamma.

The Weibull law is handled in two equivalent parameterizations. The native
one carries scale delta and shape beta, with cdf F(x) = 1 - exp[-(x/delta)^beta].
The percentile view replaces delta by the reliability percentile x_R, the
value exceeded with probability R:

    x_R = delta * [ln(1/R)]^(1/beta)

so that F(x_R) = 1 - R. Monitoring works directly on x_R.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import gamma as gamma_fn
from scipy.special import gammainc, gammaincinv, gammaln


@dataclass(frozen=True)
class WeibullModel:
    """Weibull distribution with scale ``delta`` and shape ``beta``."""

    delta: float
    beta: float

    def __post_init__(self):
        if not (self.delta > 0 and np.isfinite(self.delta)):
            raise ValueError(f"delta must be a positive real, got {self.delta}")
        if not (self.beta > 0 and np.isfinite(self.beta)):
            raise ValueError(f"beta must be a positive real, got {self.beta}")


@dataclass(frozen=True)
class PercentileView:
    """Weibull model expressed through its reliability percentile.

    ``x_R`` is the value exceeded with probability ``R``; ``beta`` is the
    usual shape parameter.
    """

    x_r: float
    beta: float
    r: float

    def __post_init__(self):
        if not (self.x_r > 0 and np.isfinite(self.x_r)):
            raise ValueError(f"x_r must be a positive real, got {self.x_r}")
        if not (self.beta > 0 and np.isfinite(self.beta)):
            raise ValueError(f"beta must be a positive real, got {self.beta}")
        if not (0.0 < self.r < 1.0):
            raise ValueError(f"r must lie in (0, 1), got {self.r}")


def weibull_cdf(x, model: WeibullModel):
    """Cumulative distribution function of ``model`` at ``x`` (scalar or array)."""
    x = np.asarray(x, dtype=float)
    if np.any(~np.isfinite(x)) or np.any(x < 0):
        raise ValueError("x must be finite and nonnegative")
    out = -np.expm1(-((x / model.delta) ** model.beta))
    return float(out) if out.ndim == 0 else out


def percentile_of(model: WeibullModel, r: float) -> float:
    """Percentile x_R exceeded with probability ``r``: delta * [ln(1/r)]^(1/beta)."""
    if not (0.0 < r < 1.0):
        raise ValueError(f"reliability must lie in (0, 1), got {r}")
    return model.delta * np.log(1.0 / r) ** (1.0 / model.beta)


def params_from_percentile(view: PercentileView) -> WeibullModel:
    """Invert :func:`percentile_of`: recover the scale from (x_R, beta, R)."""
    delta = view.x_r * np.log(1.0 / view.r) ** (-1.0 / view.beta)
    return WeibullModel(delta=delta, beta=view.beta)


def weibull_moments(model: WeibullModel) -> tuple[float, float]:
    """Mean and standard deviation of ``model``.

    mu = delta * Gamma(1 + 1/beta)
    sigma^2 = delta^2 * [Gamma(1 + 2/beta) - Gamma^2(1 + 1/beta)]
    """
    g1 = gamma_fn(1.0 + 1.0 / model.beta)
    g2 = gamma_fn(1.0 + 2.0 / model.beta)
    mu = model.delta * g1
    var = model.delta**2 * (g2 - g1**2)
    return mu, float(np.sqrt(max(var, 0.0)))


def inv_weibull_pdf(x_r, a: float, b: float):
    """Inverse Weibull density a*b*(a*x)^-(b+1) * exp[-(a*x)^-b] at ``x_r``."""
    if a <= 0 or b <= 0:
        raise ValueError("a and b must be positive")
    x_r = np.asarray(x_r, dtype=float)
    if np.any(x_r <= 0):
        raise ValueError("x_r must be positive")
    ax = a * x_r
    out = a * b * ax ** -(b + 1.0) * np.exp(-(ax**-b))
    return float(out) if out.ndim == 0 else out


def inv_weibull_mean(a: float, b: float) -> float:
    """Mean Gamma(1 - 1/b)/a of the Inverse Weibull; defined only for b > 1."""
    if b <= 1.0:
        raise ValueError(f"Inverse Weibull mean diverges for b <= 1, got b={b}")
    return float(gamma_fn(1.0 - 1.0 / b) / a)


def gamma_pdf(z, gamma: float):
    """Standard Gamma density z^(gamma-1) e^-z / Gamma(gamma)."""
    if gamma <= 0:
        raise ValueError("shape must be positive")
    z = np.asarray(z, dtype=float)
    if np.any(z < 0):
        raise ValueError("z must be nonnegative")
    with np.errstate(divide="ignore"):
        logz = np.where(z > 0, np.log(np.where(z > 0, z, 1.0)), -np.inf)
    logpdf = (gamma - 1.0) * logz - z - gammaln(gamma)
    if gamma == 1.0:
        logpdf = np.where(z == 0, -gammaln(gamma), logpdf)
    out = np.exp(logpdf)
    return float(out) if out.ndim == 0 else out


def gamma_quantile(p: float, gamma: float) -> float:
    """Quantile of the standard Gamma law: z with P(gamma, z) = p.

    P is the regularized lower incomplete gamma function; the inverse is
    solved to near machine precision.
    """
    if not (0.0 < p < 1.0):
        raise ValueError(f"p must lie in (0, 1), got {p}")
    if gamma <= 0:
        raise ValueError("shape must be positive")
    z = float(gammaincinv(gamma, p))
    if not np.isfinite(z):
        raise ArithmeticError(f"gamma quantile failed for p={p}, gamma={gamma}")
    return z


def gamma_cdf(z, gamma: float):
    """Regularized lower incomplete gamma P(gamma, z)."""
    out = gammainc(gamma, np.asarray(z, dtype=float))
    return float(out) if out.ndim == 0 else out


def weibull_sample(model: WeibullModel, rng: np.random.Generator, size=None):
    """Draw from ``model`` by inverse-CDF transform of uniforms from ``rng``.

    With u uniform on (0, 1), x = delta * (-ln(1 - u))^(1/beta). One uniform
    is consumed per observation, so results are deterministic given the
    generator state.
    """
    u = rng.random(size)
    x = model.delta * (-np.log1p(-u)) ** (1.0 / model.beta)
    return float(x) if size is None else x
