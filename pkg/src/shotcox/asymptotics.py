"""Precise large- and moderate-deviation estimates for ``N_t``.

Each estimator returns a :class:`DeviationEstimate` carrying both the value
and its logarithm; comparisons against exact probabilities should be done on
``log_value`` since the values underflow quickly as ``t`` grows.

Only the leading-order term of the large-deviation expansions is computed
(``order = 0``); the ``O(1/t)`` corrections are not.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

from .cgf import _ctx, eta_deriv, phi
from .errors import DomainError
from .rate import SaddlePoint, rate_derivs, solve_saddle

__all__ = [
    "DeviationEstimate",
    "pld_point",
    "pld_tail",
    "mdp_gaussian",
    "mdp_saddle",
    "mdp_expansion",
    "mdp_expansion_general",
    "mdp_threshold",
    "normal_tail",
]

REGIMES = ("pld_point", "pld_tail", "mdp_gaussian", "mdp_saddle", "mdp_expansion")
_LATTICE_TOL = 1e-9
# below this theta* the 1/(1 - e^-theta*) prefactor dominates the estimate
_SMALL_THETA = 1e-6
_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)


@dataclass(frozen=True)
class DeviationEstimate:
    value: float
    log_value: float
    regime: str
    t: float
    x: float | None = None
    y: float | None = None
    m: int | None = None
    threshold: float | None = None
    saddle: SaddlePoint | None = None
    order: int = 0
    flags: tuple = field(default_factory=tuple)

    def __post_init__(self):
        if self.regime not in REGIMES:
            raise ValueError(f"unknown regime {self.regime!r}")


def normal_tail(y):
    """Standard normal upper tail ``P(Z >= y)``."""
    return 0.5 * math.erfc(y / math.sqrt(2.0))


def _check_t(t):
    if not (math.isfinite(t) and t > 0):
        raise DomainError(f"horizon t must be > 0, got {t!r}")


def _leading_log(ctx, t, sp):
    # log of e^{-tI} sqrt(I''/(2 pi t)) psi(theta*)
    return (-t * sp.I + 0.5 * math.log(sp.I2 / t) - _LOG_SQRT_2PI
            + ctx.rho * phi(ctx, sp.theta_star))


def pld_point(ctx, t, x) -> DeviationEstimate:
    """Leading term of ``P(N_t = t x)`` for lattice points ``t x``.

    ``exp(-t I(x)) sqrt(I''(x) / (2 pi t)) psi(theta*)``.
    """
    ctx = _ctx(ctx)
    _check_t(t)
    if not x > 0:
        raise DomainError(f"x must be > 0, got {x!r}")
    k = t * x
    if abs(k - round(k)) > _LATTICE_TOL:
        raise DomainError(f"t x = {k!r} is not an integer; the point estimate needs a lattice value")
    sp = solve_saddle(ctx, x)
    log_v = _leading_log(ctx, t, sp)
    return DeviationEstimate(math.exp(log_v), log_v, "pld_point", float(t), x=float(x),
                             threshold=float(round(k)), saddle=sp)


def pld_tail(ctx, t, x) -> DeviationEstimate:
    """Leading term of ``P(N_t >= t x)`` for ``x`` above the mean rate.

    ``exp(-t I(x)) sqrt(I''(x) / (2 pi t)) psi(theta*) / (1 - exp(-theta*))``.
    """
    ctx = _ctx(ctx)
    _check_t(t)
    mean = ctx.params.mean_rate
    if not x > mean:
        raise DomainError(
            f"x = {x!r} must exceed the mean rate nu + rho ||g|| = {mean!r}")
    sp = solve_saddle(ctx, x)
    if not sp.theta_star > 0:
        raise DomainError(f"x = {x!r} is numerically at the mean rate (theta* = {sp.theta_star!r})")
    flags = ("prefactor_divergent",) if sp.theta_star < _SMALL_THETA else ()
    log_v = _leading_log(ctx, t, sp) - math.log(-math.expm1(-sp.theta_star))
    return DeviationEstimate(math.exp(log_v), log_v, "pld_tail", float(t), x=float(x),
                             threshold=float(t * x), saddle=sp, flags=flags)


def mdp_threshold(ctx, t, y):
    """``(nu + rho G) t + sqrt(t (nu + rho G (G + 1))) y``."""
    ctx = _ctx(ctx)
    p = ctx.params
    return p.mean_rate * t + math.sqrt(t * p.variance_rate) * y


def mdp_gaussian(ctx, t, y) -> DeviationEstimate:
    """Gaussian approximation ``Psi(y)`` to ``P(N_t >= mdp_threshold(t, y))``."""
    ctx = _ctx(ctx)
    _check_t(t)
    v = normal_tail(y)
    log_v = math.log(v) if v > 0 else -math.inf
    return DeviationEstimate(v, log_v, "mdp_gaussian", float(t), y=float(y),
                             threshold=mdp_threshold(ctx, t, y))


def mdp_saddle(ctx, t, y) -> DeviationEstimate:
    """Moderate-deviation saddlepoint estimate.

    With ``x* = mean + sqrt(var / t) y`` and ``eta'(theta*) = x*``, returns
    ``exp(-t I(x*)) / (theta* sqrt(2 pi t eta''(theta*)))``.
    """
    ctx = _ctx(ctx)
    _check_t(t)
    if not y > 0:
        raise DomainError(f"y must be > 0, got {y!r}")
    p = ctx.params
    x_star = p.mean_rate + math.sqrt(p.variance_rate / t) * y
    sp = solve_saddle(ctx, x_star)
    if not sp.theta_star > 0:
        raise DomainError(f"y = {y!r} too small: theta* = {sp.theta_star!r}")
    log_v = (-t * sp.I - math.log(sp.theta_star) - _LOG_SQRT_2PI
             - 0.5 * math.log(t * sp.eta_d2))
    return DeviationEstimate(math.exp(log_v), log_v, "mdp_saddle", float(t), x=x_star,
                             y=float(y), threshold=mdp_threshold(ctx, t, y), saddle=sp)


def _check_y_m(y, m):
    if not y > 0:
        raise DomainError(f"y must be > 0, got {y!r}")
    if int(m) != m or m < 3:
        raise DomainError(f"m must be an integer >= 3, got {m!r}")


def mdp_expansion_general(ctx, t, y, m) -> DeviationEstimate:
    """Rate-function expansion with terms ``i = 2 .. m-1``.

    ``(1 / (y sqrt(2 pi))) exp(-sum_i I^(i)(mu) / i! eta''(0)^(i/2) y^i / t^((i-2)/2))``
    where ``mu = eta'(0)`` is the mean rate.
    """
    ctx = _ctx(ctx)
    _check_t(t)
    _check_y_m(y, m)
    m = int(m)
    mu = ctx.params.mean_rate
    e2 = eta_deriv(ctx, 0.0, 2)
    derivs = rate_derivs(ctx, mu, m)
    expo = 0.0
    for i, d in zip(range(2, m), derivs):
        expo += d / math.factorial(i) * e2 ** (i / 2) * y**i / t ** ((i - 2) / 2)
    log_v = -expo - math.log(y) - _LOG_SQRT_2PI
    return DeviationEstimate(math.exp(log_v), log_v, "mdp_expansion", float(t), y=float(y),
                             m=m, threshold=mdp_threshold(ctx, t, y))


def mdp_expansion(ctx, t, y, m=4) -> DeviationEstimate:
    """Moderate-deviation expansion of ``P(N_t >= mdp_threshold(t, y))``.

    For ``m = 4`` this is the closed form
    ``exp(-y^2/2) exp(eta'''(0) y^3 / (6 eta''(0)^(3/2) sqrt(t))) / (y sqrt(2 pi))``;
    other ``m`` use :func:`mdp_expansion_general`.
    """
    ctx = _ctx(ctx)
    if m != 4:
        return mdp_expansion_general(ctx, t, y, m)
    _check_t(t)
    _check_y_m(y, m)
    e2 = eta_deriv(ctx, 0.0, 2)
    e3 = eta_deriv(ctx, 0.0, 3)
    log_v = (-0.5 * y * y + e3 / (6.0 * e2**1.5) * y**3 / math.sqrt(t)
             - math.log(y) - _LOG_SQRT_2PI)
    return DeviationEstimate(math.exp(log_v), log_v, "mdp_expansion", float(t), y=float(y),
                             m=4, threshold=mdp_threshold(ctx, t, y))
