"""Cumulant generating functions of the shot-noise Cox process.

Notation: ``w = e^theta - 1``, ``G = ||g||_1``, ``G(u) = int_0^u g``,
``T(u) = G - G(u)`` and ``D(t) = int_t^inf T``.

All finite-horizon quantities are assembled from

    h(u) = exp(w G(u)) - exp(w G) = exp(w G) * expm1(-w T(u)),

which decays like ``T(u)``; integrating ``h`` instead of ``exp(w G(u)) - 1``
keeps every quadrature bounded and lets ``psi`` and the finite-horizon
factor be compared without cancellation.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, QuadratureError
from .model import ModelParams
from .quadrature import gk21

__all__ = [
    "CgfContext",
    "eta",
    "eta_deriv",
    "eta_finite",
    "phi",
    "psi",
    "modphi_gap",
    "finite_mean",
    "finite_variance",
    "SpeedTable",
    "measure_speed",
]

QUAD_ATOL = 1e-12
QUAD_RTOL = 1e-13
PHI_REMAINDER_TOL = 1e-13
_U_CAP = 1e15

# Touchard polynomials T_k(x) = sum_j S(k, j) x^j: the k-th theta-derivative of
# exp(G (e^theta - 1)) is exp(G (e^theta - 1)) * T_k(G e^theta).
_TOUCHARD = {
    1: (0, 1),
    2: (0, 1, 1),
    3: (0, 1, 3, 1),
    4: (0, 1, 7, 6, 1),
}


@dataclass(frozen=True)
class CgfContext:
    """Model parameters with ``G = ||g||_1`` cached."""

    params: ModelParams
    G: float = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "G", float(self.params.kernel.l1))

    @property
    def nu(self):
        return self.params.nu_base

    @property
    def rho(self):
        return self.params.rho

    @property
    def kernel(self):
        return self.params.kernel


def _ctx(obj) -> CgfContext:
    return obj if isinstance(obj, CgfContext) else CgfContext(obj)


def _w(theta):
    return np.expm1(theta)


def _scalar(x):
    x = np.asarray(x)
    if x.ndim:
        return x
    return complex(x) if np.iscomplexobj(x) else float(x)


def _has_shots(ctx):
    # rho = 0 or G = 0 removes the shot term; skipping it avoids 0 * inf
    return ctx.rho != 0 and ctx.G != 0


def _eta_from_w(ctx, w):
    if not _has_shots(ctx):
        return w * ctx.nu
    return w * ctx.nu + ctx.rho * np.expm1(w * ctx.G)


def eta(ctx, theta):
    """Limiting cumulant generating function ``eta(theta)``.

    ``eta(theta) = (e^theta - 1) nu + rho (exp((e^theta - 1) G) - 1)``; accepts
    real or complex scalars and arrays.
    """
    ctx = _ctx(ctx)
    return _scalar(_eta_from_w(ctx, _w(np.asarray(theta))))


def eta_deriv(ctx, theta, order):
    """``order``-th derivative of ``eta`` at real ``theta`` (``order`` in 1..4)."""
    ctx = _ctx(ctx)
    if order not in _TOUCHARD:
        raise DomainError(f"eta_deriv supports orders 1..4, got {order!r}")
    theta = np.asarray(theta, dtype=float)
    s = np.exp(theta)
    if not _has_shots(ctx):
        return _scalar(s * ctx.nu)
    x = ctx.G * s
    poly = np.polynomial.polynomial.polyval(x, _TOUCHARD[order])
    with np.errstate(over="ignore"):    # +inf is the right answer for huge theta
        return _scalar(s * ctx.nu + ctx.rho * np.exp(ctx.G * np.expm1(theta)) * poly)


def _h(ctx, w):
    """Integrand ``h(u)`` as a function of ``u`` for the (array of) ``w``."""
    w = np.asarray(w)
    ewG = np.exp(w * ctx.G)
    kernel = ctx.kernel

    def f(u):
        tail = kernel._tail(u)
        if w.ndim == 0:
            return ewG * np.expm1(-w * tail)
        return ewG[None, :] * np.expm1(-np.multiply.outer(tail, w))

    return f


def _grid(kernel, a, b):
    """Seed panels: kernel kinks plus a geometric grid anchored at ``a``."""
    pts = [k for k in kernel.kinks if a < k < b]
    step = kernel.length_scale
    x = a + step
    while x < b:
        pts.append(x)
        step *= 2.0
        x = a + step
    return pts


def _h_integral(ctx, w, a, b, atol=QUAD_ATOL):
    if b <= a:
        shape = np.shape(w)
        return np.zeros(shape, dtype=np.result_type(w, float))[()], 0.0
    if ctx.G == 0 or ctx.rho == 0:
        w = np.asarray(w)
        return np.zeros(w.shape, dtype=np.result_type(w, float))[()], 0.0
    value, err = gk21(_h(ctx, w), a, b, atol=atol, rtol=QUAD_RTOL,
                      breakpoints=_grid(ctx.kernel, a, b))
    return value, float(np.max(err))


def eta_finite(ctx, t, theta):
    """Finite-horizon cumulant generating function ``log E exp(theta N_t)``.

    Equal to ``(e^theta - 1) t nu + rho int_0^t (exp((e^theta - 1) G(u)) - 1) du``;
    evaluated as ``t eta(theta) + rho int_0^t h(u) du``. ``theta`` may be
    complex or an array (evaluated in a single vectorized quadrature).
    """
    ctx = _ctx(ctx)
    if not t >= 0:
        raise DomainError(f"horizon t must be >= 0, got {t!r}")
    theta = np.asarray(theta)
    if t == 0:
        return _scalar(np.zeros(theta.shape, dtype=np.result_type(theta, float)))
    w = _w(theta)
    integral, _ = _h_integral(ctx, w, 0.0, float(t))
    return _scalar(t * _eta_from_w(ctx, w) + ctx.rho * integral)


def log_pgf(ctx, t, z):
    """``log E z^{N_t}`` for complex ``z`` (array), with ``w = z - 1``."""
    ctx = _ctx(ctx)
    w = np.asarray(z, dtype=complex) - 1.0
    integral, _ = _h_integral(ctx, w, 0.0, float(t))
    return t * _eta_from_w(ctx, w) + ctx.rho * integral


def _remainder_bound(ctx, w_abs, x):
    return w_abs * math.exp(w_abs * ctx.G) * float(ctx.kernel.double_tail(x))


def _cutoff(ctx, w_abs, a, tol):
    """Smallest dyadic ``U >= a`` with remainder bound ``<= tol``."""
    kernel = ctx.kernel
    if math.isfinite(kernel.support_end):
        return max(a, kernel.support_end)
    step = kernel.length_scale
    U = a + step
    while _remainder_bound(ctx, w_abs, U) > tol:
        step *= 2.0
        U = a + step
        if U > _U_CAP:
            raise QuadratureError(
                f"tail remainder bound cannot reach {tol:.1e}",
                achieved=_remainder_bound(ctx, w_abs, U),
            )
    return U


def _tail_h(ctx, theta, t, rel):
    """``int_t^inf h(u) du``: quadrature to a cutoff plus a bounded remainder."""
    w = complex(_w(complex(theta))) if np.iscomplexobj(theta) else float(_w(theta))
    w_abs = abs(w)
    scale = _remainder_bound(ctx, w_abs, t)
    if scale == 0.0 or ctx.rho == 0:
        return 0.0 * w, 0.0
    tol = PHI_REMAINDER_TOL if rel is None else rel * scale
    U = _cutoff(ctx, w_abs, t, tol)
    atol = QUAD_ATOL if rel is None else max(rel * scale, 1e-300)
    value, _ = _h_integral(ctx, w, t, U, atol=atol)
    return _scalar(value), _remainder_bound(ctx, w_abs, U)


def phi(ctx, theta):
    """``phi(theta) = int_0^inf [exp(w G(u)) - exp(w G)] du`` for scalar ``theta``.

    The integral is truncated at ``U`` chosen so that the analytic remainder
    bound ``|w| exp(|w| G) D(U)`` is at most 1e-13.
    """
    ctx = _ctx(ctx)
    value, _ = _tail_h(ctx, theta, 0.0, rel=None)
    return value


def psi(ctx, theta):
    """Limiting function ``psi(theta) = exp(rho phi(theta))``."""
    ctx = _ctx(ctx)
    return _scalar(np.exp(ctx.rho * np.asarray(phi(ctx, theta))))


def modphi_gap(ctx, t, theta):
    """``|exp(eta_t(theta) - t eta(theta)) - psi(theta)|``.

    Since the two terms are ``exp(rho A_t)`` and ``exp(rho (A_t + R_t))`` with
    ``A_t = int_0^t h`` and ``R_t = int_t^inf h``, the gap is computed as
    ``|exp(rho A_t)| |expm1(rho R_t)|``, which stays accurate far below
    machine epsilon relative to ``psi``.
    """
    ctx = _ctx(ctx)
    if not t > 0:
        raise DomainError(f"horizon t must be > 0, got {t!r}")
    w = _w(np.asarray(theta))
    head, _ = _h_integral(ctx, w, 0.0, float(t))
    tail, _ = _tail_h(ctx, theta, float(t), rel=1e-12)
    return float(abs(np.exp(ctx.rho * head)) * abs(np.expm1(ctx.rho * tail)))


def finite_mean(ctx, t):
    """``E N_t = t nu + rho int_0^t G(u) du = t nu + rho (t G - D(0) + D(t))``."""
    ctx = _ctx(ctx)
    k = ctx.kernel
    return t * ctx.nu + ctx.rho * (t * ctx.G - float(k.double_tail(0.0)) + float(k.double_tail(t)))


def finite_variance(ctx, t):
    """``Var N_t = t nu + rho int_0^t (G(u)^2 + G(u)) du``."""
    ctx = _ctx(ctx)
    if t == 0:
        return 0.0
    k = ctx.kernel
    sq, _ = gk21(lambda u: k._cum(u) ** 2, 0.0, float(t), atol=QUAD_ATOL, rtol=QUAD_RTOL,
                 breakpoints=_grid(k, 0.0, float(t)))
    return finite_mean(ctx, t) + ctx.rho * float(sq)


@dataclass(frozen=True)
class SpeedTable:
    """Convergence-gap measurements and their log-log regression slope."""

    theta: float
    t: tuple
    gap: tuple
    slope: float
    local_slopes: tuple
    expected_order: float | None


def measure_speed(ctx, theta, ts):
    """Measure how fast the mod-phi gap decays over the horizons ``ts``.

    The least-squares slope of ``log gap`` against ``log t`` estimates
    ``-r`` for a kernel decaying like ``t^-(r+2)``.
    """
    ctx = _ctx(ctx)
    ts = [float(t) for t in ts]
    if len(ts) < 2:
        raise DomainError("need at least two horizons")
    gaps = [modphi_gap(ctx, t, theta) for t in ts]
    if min(gaps) <= 0:
        t0 = ts[gaps.index(min(gaps))]
        raise DomainError(f"gap underflows to 0 at t = {t0:g}; use shorter horizons "
                          "(kernels with exponential decay need t of order 10 to 100)")
    lt, lg = np.log(ts), np.log(gaps)
    slope = float(np.polyfit(lt, lg, 1)[0])
    local = tuple(float(v) for v in np.diff(lg) / np.diff(lt))
    try:
        expected = float(ctx.kernel.speed_order)
    except DomainError:
        expected = None
    return SpeedTable(float(theta), tuple(ts), tuple(gaps), slope, local, expected)
