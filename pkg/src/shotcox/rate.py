"""Legendre transform of ``eta``: saddlepoint, rate function and its derivatives."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .cgf import _ctx, eta, eta_deriv
from .errors import ConvergenceError, DomainError

__all__ = ["SaddlePoint", "solve_saddle", "rate_function", "rate_derivs"]

MAX_ITER = 200
_THETA_MIN = -700.0   # exp underflows below this; eta' is numerically zero
_THETA_MAX = 700.0


@dataclass(frozen=True)
class SaddlePoint:
    """Solution of ``eta'(theta_star) = x`` and the Legendre data at it."""

    x: float
    theta_star: float
    I: float
    eta_d2: float
    eta_d3: float
    eta_d4: float
    residual: float

    @property
    def I2(self) -> float:
        """``I''(x) = 1 / eta''(theta_star)``."""
        return 1.0 / self.eta_d2


def _tolerance(x):
    return 1e-10 * max(1.0, x)


def solve_saddle(ctx, x) -> SaddlePoint:
    """Solve ``eta'(theta) = x`` by safeguarded Newton iteration.

    ``eta'`` is increasing with range ``(0, inf)`` for any nondegenerate
    model, so every ``x > 0`` has a unique saddlepoint. The bracket starts at
    ``[-1, 1]`` and is doubled until it straddles ``x``; Newton steps that
    leave the bracket are replaced by bisection.
    """
    ctx = _ctx(ctx)
    ctx.params.require_nondegenerate()
    x = float(x)
    if not (math.isfinite(x) and x > 0):
        raise DomainError(f"x must lie in the range of eta', (0, inf); got {x!r}")

    d1 = lambda th: eta_deriv(ctx, th, 1)  # noqa: E731
    lo, hi = -1.0, 1.0
    while d1(hi) < x:
        lo, hi = hi, 2.0 * hi
        if hi > _THETA_MAX:
            raise DomainError(f"x = {x!r} is beyond the representable range of eta'")
    while d1(lo) > x:
        lo, hi = 2.0 * lo, lo
        if lo < _THETA_MIN:
            raise DomainError(f"x = {x!r} is below the representable range of eta' (0, inf)")

    mean = ctx.params.mean_rate
    theta = min(max(math.log(x / mean), lo), hi)
    tol = _tolerance(x)
    r = d1(theta) - x
    for _ in range(MAX_ITER):
        if r < 0:
            lo = theta
        else:
            hi = theta
        if abs(r) <= tol:
            # one polishing step; keep it only if it does not worsen the residual
            cand = theta - r / eta_deriv(ctx, theta, 2)
            if lo <= cand <= hi:
                rc = d1(cand) - x
                if abs(rc) < abs(r):
                    theta, r = cand, rc
            break
        step = theta - r / eta_deriv(ctx, theta, 2)
        theta = step if lo < step < hi else 0.5 * (lo + hi)
        r = d1(theta) - x
    else:
        raise ConvergenceError(
            f"saddlepoint for x = {x!r} did not converge in {MAX_ITER} iterations",
            achieved=abs(r),
        )

    I = max(theta * x - eta(ctx, theta), 0.0)
    return SaddlePoint(
        x=x,
        theta_star=float(theta),
        I=float(I),
        eta_d2=eta_deriv(ctx, theta, 2),
        eta_d3=eta_deriv(ctx, theta, 3),
        eta_d4=eta_deriv(ctx, theta, 4),
        residual=float(abs(r)),
    )


def rate_function(ctx, x) -> float:
    """``I(x) = sup_theta {theta x - eta(theta)}``."""
    return solve_saddle(ctx, x).I


def _closed_derivs(sp: SaddlePoint):
    e2, e3, e4 = sp.eta_d2, sp.eta_d3, sp.eta_d4
    return {
        1: sp.theta_star,
        2: 1.0 / e2,
        3: -e3 / e2**3,
        4: (3.0 * e3**2 - e2 * e4) / e2**5,
    }


def _central_weights(n):
    q = (n + 1) // 2
    j = np.arange(-q, q + 1, dtype=float)
    A = np.vander(j, increasing=True).T
    b = np.zeros(2 * q + 1)
    b[n] = math.factorial(n)
    return j, np.linalg.solve(A, b)


def rate_derivs(ctx, x, m):
    """Derivatives ``[I''(x), ..., I^(m-1)(x)]``.

    Orders 2 to 4 come from the closed-form Legendre chain at the saddlepoint.
    Higher orders differentiate ``I''''`` numerically: central differences
    with step ``1e-3 max(1, |x|)``, Richardson-extrapolated once.
    """
    ctx = _ctx(ctx)
    m = int(m)
    if m < 2:
        raise DomainError(f"m must be >= 2, got {m!r}")
    sp = solve_saddle(ctx, x)
    closed = _closed_derivs(sp)
    out = [closed[i] for i in range(2, min(m, 5))]
    if m <= 5:
        return out

    h = 1e-3 * max(1.0, abs(x))
    i4 = lambda xx: _closed_derivs(solve_saddle(ctx, xx))[4]  # noqa: E731
    cache = {}

    def f(k, step):
        key = (k, step)
        if key not in cache:
            cache[key] = i4(x + k * step)
        return cache[key]

    for i in range(5, m):
        n = i - 4
        j, wts = _central_weights(n)
        if x - j.max() * h <= 0:
            raise DomainError(f"x = {x!r} too close to 0 for finite-difference order {i}")

        def diff(step):
            return sum(wk * f(int(jk), step) for jk, wk in zip(j, wts)) / step**n

        coarse, fine = diff(h), diff(h / 2)
        out.append((4.0 * fine - coarse) / 3.0)
    return out
