"""Prior elicitation for the joint (x_R, beta) prior.

The shape parameter beta gets a Uniform prior on an anticipated interval
(beta1, beta2). The percentile x_R gets an Inverse Weibull prior whose shape
b is anticipated as b_bar = (beta1 + beta2)/2 and whose scale a is chosen so
the prior mean of x_R equals the anticipated value x_bar_R:

    a = Gamma(1 - 1/b_bar) / x_bar_R

The Gamma argument forces the one restriction of the scheme: beta1 + beta2
must exceed 2, otherwise b_bar <= 1 and the prior mean diverges. An interval
that would violate it has to be widened from above (raise beta2).

As samples accumulate, the hyper-parameters are re-elicited from the current
point estimates; see :func:`next_prior`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

from scipy.special import gamma as gamma_fn


@dataclass(frozen=True)
class PriorSpec:
    """Hyper-parameters of the joint prior.

    beta1, beta2   Uniform support for the shape parameter.
    a, b_bar       Inverse Weibull scale and anticipated shape for x_R.
    x_bar_r        anticipated percentile; ties a and b_bar together through
                   a = Gamma(1 - 1/b_bar)/x_bar_r.
    """

    beta1: float
    beta2: float
    a: float
    b_bar: float
    x_bar_r: float

    def __post_init__(self):
        if not (0.0 < self.beta1 < self.beta2):
            raise ValueError(
                f"need 0 < beta1 < beta2, got ({self.beta1}, {self.beta2})"
            )
        if self.beta1 + self.beta2 <= 2.0:
            raise ValueError(
                "beta1 + beta2 must exceed 2 (the prior mean of x_R "
                f"diverges otherwise); got {self.beta1} + {self.beta2}"
            )
        if self.b_bar <= 1.0:
            raise ValueError(f"b_bar must exceed 1, got {self.b_bar}")
        if self.x_bar_r <= 0:
            raise ValueError(f"x_bar_r must be positive, got {self.x_bar_r}")
        expected = gamma_fn(1.0 - 1.0 / self.b_bar) / self.x_bar_r
        if abs(self.a - expected) > 1e-12 * max(abs(expected), 1.0):
            raise ValueError(
                f"inconsistent scale: a={self.a} but Gamma(1-1/b_bar)/x_bar_r"
                f"={expected}"
            )


def elicit_b_bar(beta1: float, beta2: float) -> float:
    """Anticipated Inverse Weibull shape: the midpoint of (beta1, beta2)."""
    if not beta1 < beta2:
        raise ValueError(f"need beta1 < beta2, got ({beta1}, {beta2})")
    if beta1 + beta2 <= 2.0:
        raise ValueError(
            f"beta1 + beta2 must exceed 2, got {beta1 + beta2}; widen the "
            "interval from above"
        )
    return 0.5 * (beta1 + beta2)


def elicit_a(x_bar_r: float, b_bar: float) -> float:
    """Inverse Weibull scale making the prior mean of x_R equal x_bar_r."""
    if b_bar <= 1.0:
        raise ValueError(f"b_bar must exceed 1, got {b_bar}")
    if x_bar_r <= 0:
        raise ValueError(f"x_bar_r must be positive, got {x_bar_r}")
    return float(gamma_fn(1.0 - 1.0 / b_bar) / x_bar_r)


def make_prior(beta1: float, beta2: float, x_bar_r: float) -> PriorSpec:
    """Build a PriorSpec from the three user-supplied quantities."""
    b_bar = elicit_b_bar(beta1, beta2)
    a = elicit_a(x_bar_r, b_bar)
    return PriorSpec(beta1=beta1, beta2=beta2, a=a, b_bar=b_bar, x_bar_r=x_bar_r)


def joint_prior_log_pdf(x_r: float, beta: float, spec: PriorSpec) -> float:
    """Log density of the joint prior at (x_R, beta).

    Uniform(beta1, beta2) times Inverse Weibull(a, b=beta); minus infinity
    outside the beta support.
    """
    if x_r <= 0:
        raise ValueError(f"x_r must be positive, got {x_r}")
    if not (spec.beta1 < beta < spec.beta2):
        return -math.inf
    log_ax = math.log(spec.a) + math.log(x_r)
    return (
        -math.log(spec.beta2 - spec.beta1)
        + math.log(spec.a)
        + math.log(beta)
        - (beta + 1.0) * log_ax
        - math.exp(-beta * log_ax)
    )


def next_prior(
    beta_hat_prev: float,
    x_hat_prev: float,
    current: PriorSpec,
    anchor_b: bool = False,
) -> PriorSpec:
    """Re-elicit the prior from the previous step's point estimates.

    When the previous shape estimate exceeds 1 the interval is recentred to
    (beta_hat/2, 1.5*beta_hat); otherwise the interval is left alone so the
    beta1 + beta2 > 2 restriction cannot be broken. The Inverse Weibull
    scale is always refreshed so the prior mean of x_R equals the latest
    percentile estimate.

    ``anchor_b`` selects which anticipated shape b_bar feeds the scale
    update. By default b_bar follows the recentred interval's midpoint
    (i.e. the previous beta estimate). With ``anchor_b=True`` the b_bar of
    ``current`` is kept, so only the anticipated percentile is replaced;
    the control chart uses the anchored form (see chart module notes).
    """
    if beta_hat_prev <= 0 or x_hat_prev <= 0:
        raise ValueError("estimates must be positive")
    if beta_hat_prev > 1.0:
        beta1, beta2 = 0.5 * beta_hat_prev, 1.5 * beta_hat_prev
        b_bar = current.b_bar if anchor_b else beta_hat_prev
    else:
        beta1, beta2 = current.beta1, current.beta2
        b_bar = current.b_bar
    a = elicit_a(x_hat_prev, b_bar)
    return replace(
        current, beta1=beta1, beta2=beta2, a=a, b_bar=b_bar, x_bar_r=x_hat_prev
    )
