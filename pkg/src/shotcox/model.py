"""Shot-noise kernels and model parameters.

A kernel ``g`` is a nonnegative, integrable response function on ``[0, inf)``.
Every variant carries closed forms for

* ``cum_integral(u)  = int_0^u g``
* ``tail_integral(u) = int_u^inf g``
* ``double_tail(t)   = int_t^inf int_u^inf g(s) ds du``

so that downstream quadrature only ever integrates smooth functions of these.

Note on notation: the polynomial decay exponent of a kernel is called the
*speed order* ``r`` here (``g(t) = O(t^-(r+2))``), to keep it apart from the
baseline intensity ``nu``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, UnsupportedKernelError

__all__ = [
    "Kernel",
    "Exponential",
    "PowerLaw",
    "BoxCar",
    "Tabulated",
    "Zero",
    "ModelParams",
    "standard_model",
    "l1_norm",
    "cum_integral",
    "tail_integral",
    "double_tail",
]


def _as_nonneg(u, name="u"):
    arr = np.asarray(u, dtype=float)
    if np.any(np.isnan(arr)) or np.any(arr < 0):
        raise DomainError(f"{name} must be >= 0, got {u!r}")
    return arr


def _out(arr):
    return float(arr) if np.ndim(arr) == 0 else arr


def _check_finite_nonneg(**kwargs):
    for name, v in kwargs.items():
        if not math.isfinite(v) or v < 0:
            raise DomainError(f"{name} must be finite and >= 0, got {v!r}")


class Kernel:
    """Base class for kernel variants.

    Subclasses implement the ``_g``, ``_cum``, ``_dtail`` methods on float
    arrays with nonnegative entries and the ``l1`` property.
    """

    #: right end of the support (``inf`` for non-compact kernels)
    support_end = math.inf
    #: points where ``g`` is not smooth; used to seed quadrature panels
    kinks = ()

    @property
    def l1(self) -> float:
        raise NotImplementedError

    @property
    def length_scale(self) -> float:
        """Typical decay length; seeds the geometric quadrature grid."""
        return 1.0

    def _g(self, s):
        raise NotImplementedError

    def _cum(self, u):
        raise NotImplementedError

    def _tail(self, u):
        return self.l1 - self._cum(u)

    def _dtail(self, t):
        raise NotImplementedError

    def value(self, s):
        """Kernel value ``g(s)`` for ``s >= 0`` (scalar or array)."""
        return _out(self._g(_as_nonneg(s, "s")))

    def cum_integral(self, u):
        return _out(self._cum(_as_nonneg(u)))

    def tail_integral(self, u):
        return _out(self._tail(_as_nonneg(u)))

    def double_tail(self, t):
        return _out(self._dtail(_as_nonneg(t, "t")))

    @property
    def is_nonincreasing(self) -> bool:
        return True

    @property
    def speed_order(self) -> float:
        """Polynomial decay order ``r`` with ``g(t) = O(t^-(r+2))``."""
        raise UnsupportedKernelError(
            f"{type(self).__name__} kernels are compactly supported; "
            "polynomial speed order is not defined"
        )


@dataclass(frozen=True)
class Exponential(Kernel):
    """``g(s) = a * exp(-b s)``."""

    a: float
    b: float

    def __post_init__(self):
        _check_finite_nonneg(a=self.a)
        if not (math.isfinite(self.b) and self.b > 0):
            raise DomainError(f"decay b must be > 0, got {self.b!r}")

    @property
    def l1(self):
        return self.a / self.b

    @property
    def length_scale(self):
        return 1.0 / self.b

    def _g(self, s):
        return self.a * np.exp(-self.b * s)

    def _cum(self, u):
        return -self.a / self.b * np.expm1(-self.b * u)

    def _tail(self, u):
        return self.a / self.b * np.exp(-self.b * u)

    def _dtail(self, t):
        return self.a / self.b**2 * np.exp(-self.b * t)

    @property
    def speed_order(self):
        return math.inf


@dataclass(frozen=True)
class PowerLaw(Kernel):
    """``g(s) = c / (1 + s)^p`` with ``p > 2``; speed order ``p - 2``."""

    c: float
    p: float

    def __post_init__(self):
        _check_finite_nonneg(c=self.c)
        if not (math.isfinite(self.p) and self.p > 2):
            raise DomainError(f"power-law exponent p must be > 2, got {self.p!r}")

    @property
    def l1(self):
        return self.c / (self.p - 1)

    def _g(self, s):
        return self.c * (1 + s) ** (-self.p)

    def _cum(self, u):
        # c/(p-1) * (1 - (1+u)^(1-p)), written to keep precision for small u
        return -self.c / (self.p - 1) * np.expm1((1 - self.p) * np.log1p(u))

    def _tail(self, u):
        return self.c / (self.p - 1) * (1 + u) ** (1 - self.p)

    def _dtail(self, t):
        p = self.p
        return self.c / ((p - 1) * (p - 2)) * (1 + t) ** (2 - p)

    @property
    def speed_order(self):
        return self.p - 2


@dataclass(frozen=True)
class BoxCar(Kernel):
    """``g(s) = h`` on ``[0, w]``, zero afterwards."""

    h: float
    w: float

    def __post_init__(self):
        _check_finite_nonneg(h=self.h)
        if not (math.isfinite(self.w) and self.w > 0):
            raise DomainError(f"width w must be > 0, got {self.w!r}")

    @property
    def support_end(self):
        return self.w

    @property
    def kinks(self):
        return (self.w,)

    @property
    def length_scale(self):
        return self.w

    @property
    def l1(self):
        return self.h * self.w

    def _g(self, s):
        return np.where(s <= self.w, self.h, 0.0)

    def _cum(self, u):
        return self.h * np.minimum(u, self.w)

    def _tail(self, u):
        return self.h * np.maximum(self.w - u, 0.0)

    def _dtail(self, t):
        d = np.maximum(self.w - t, 0.0)
        return 0.5 * self.h * d * d


@dataclass(frozen=True)
class Tabulated(Kernel):
    """Piecewise-linear kernel through ``knots = ((s0, g0), (s1, g1), ...)``.

    The grid must start at ``s0 = 0`` and be nondecreasing; ``g`` is zero past
    the last knot. Repeated abscissae encode jumps.
    """

    knots: tuple
    _s: np.ndarray = field(init=False, repr=False, compare=False)
    _v: np.ndarray = field(init=False, repr=False, compare=False)
    _cum_at: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        pts = tuple((float(s), float(v)) for s, v in self.knots)
        if len(pts) < 2:
            raise DomainError("tabulated kernel needs at least two knots")
        s = np.array([p[0] for p in pts])
        v = np.array([p[1] for p in pts])
        if not (np.all(np.isfinite(s)) and np.all(np.isfinite(v))):
            raise DomainError("tabulated knots must be finite")
        if s[0] != 0.0:
            raise DomainError("first tabulated knot must be at s = 0")
        if np.any(np.diff(s) < 0):
            raise DomainError("tabulated abscissae must be nondecreasing")
        if np.any(v < 0):
            raise DomainError("tabulated kernel values must be >= 0")
        cum = np.concatenate([[0.0], np.cumsum(0.5 * np.diff(s) * (v[1:] + v[:-1]))])
        object.__setattr__(self, "knots", pts)
        object.__setattr__(self, "_s", s)
        object.__setattr__(self, "_v", v)
        object.__setattr__(self, "_cum_at", cum)

    @property
    def support_end(self):
        return float(self._s[-1])

    @property
    def kinks(self):
        return tuple(float(x) for x in np.unique(self._s))

    @property
    def length_scale(self):
        return max(self.support_end, 1e-300) / max(len(self._s) - 1, 1)

    @property
    def l1(self):
        return float(self._cum_at[-1])

    def _segment(self, u):
        s = self._s
        i = np.clip(np.searchsorted(s, u, side="right") - 1, 0, len(s) - 2)
        width = s[i + 1] - s[i]
        with np.errstate(invalid="ignore", divide="ignore"):
            slope = np.where(width > 0, (self._v[i + 1] - self._v[i]) / width, 0.0)
        return i, slope

    def _g(self, s):
        i, slope = self._segment(s)
        val = self._v[i] + slope * (s - self._s[i])
        return np.where(s > self._s[-1], 0.0, val)

    def _cum(self, u):
        i, slope = self._segment(u)
        du = np.minimum(u, self._s[-1]) - self._s[i]
        return self._cum_at[i] + self._v[i] * du + 0.5 * slope * du * du

    def _dtail(self, t):
        # D(t) = int_t^S (s - t) g(s) ds, exact on each linear segment
        t = np.asarray(t, dtype=float)
        total = np.zeros_like(t)
        s, v = self._s, self._v
        for i in range(len(s) - 1):
            lo, hi = s[i], s[i + 1]
            if hi <= lo:
                continue
            m = (v[i + 1] - v[i]) / (hi - lo)
            alpha = v[i] + m * (t - lo)
            a = np.maximum(t, lo) - t
            b = np.maximum(hi - t, 0.0)
            total += alpha * (b * b - a * a) / 2 + m * (b**3 - a**3) / 3
        return np.maximum(total, 0.0)

    @property
    def is_nonincreasing(self):
        return bool(np.all(np.diff(self._v) <= 0))


@dataclass(frozen=True)
class Zero(Kernel):
    """The null kernel; the process reduces to a homogeneous Poisson process."""

    support_end = 0.0

    @property
    def l1(self):
        return 0.0

    def _g(self, s):
        return np.zeros_like(s)

    def _cum(self, u):
        return np.zeros_like(u)

    def _dtail(self, t):
        return np.zeros_like(t)

    @property
    def speed_order(self):
        return math.inf


@dataclass(frozen=True)
class ModelParams:
    """Baseline intensity ``nu``, shot rate ``rho`` and kernel ``g``."""

    nu_base: float
    rho: float
    kernel: Kernel

    def __post_init__(self):
        _check_finite_nonneg(nu_base=self.nu_base, rho=self.rho)
        if not isinstance(self.kernel, Kernel):
            raise DomainError(f"kernel must be a Kernel, got {type(self.kernel).__name__}")

    @property
    def l1(self) -> float:
        return self.kernel.l1

    @property
    def mean_rate(self) -> float:
        """Long-run mean count per unit time, ``nu + rho G``."""
        return self.nu_base + self.rho * self.l1

    @property
    def variance_rate(self) -> float:
        """Long-run variance per unit time, ``nu + rho G (G + 1)``."""
        G = self.l1
        return self.nu_base + self.rho * G * (G + 1)

    @property
    def is_degenerate(self) -> bool:
        return self.nu_base == 0 and self.rho * self.l1 == 0

    def require_nondegenerate(self):
        if self.is_degenerate:
            raise DomainError("degenerate process: nu = 0 and rho * ||g|| = 0")


def standard_model() -> ModelParams:
    """``nu = 1``, ``rho = 1``, ``g(s) = exp(-s)``; mean rate 2, variance rate 3."""
    return ModelParams(1.0, 1.0, Exponential(1.0, 1.0))


def l1_norm(k: Kernel) -> float:
    return k.l1


def cum_integral(k: Kernel, u):
    return k.cum_integral(u)


def tail_integral(k: Kernel, u):
    return k.tail_integral(u)


def double_tail(k: Kernel, t):
    return k.double_tail(t)
