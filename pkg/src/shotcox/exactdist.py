"""Exact law of ``N_t`` by discrete Fourier inversion of its generating function.

The probability generating function ``E z^{N_t}`` is evaluated at the ``M``-th
roots of unity and inverted with a radix-2 FFT. Circular aliasing adds the
mass of ``{N_t >= M}`` to the table; it is bounded with a Chernoff bound and
reported alongside the probabilities.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy import stats

from .cgf import _ctx, eta_finite, finite_mean, finite_variance, log_pgf
from .errors import DomainError, NoiseFloorWarning

__all__ = [
    "PmfTable",
    "IncrementLaw",
    "fft",
    "required_size",
    "pmf_exact",
    "tail_exact",
    "increment_law",
    "NOISE_FLOOR",
]

NOISE_FLOOR = 1e-13
ALIASING_TARGET = 1e-12
_SD_MULTIPLE = 12
_MAX_SIZE = 1 << 24


@dataclass(frozen=True)
class PmfTable:
    """Probabilities ``probs[k] = P(N = k)`` for ``k < M``.

    ``min_raw`` is the most negative entry before clamping to zero (0 if
    none); ``t`` is ``None`` for the limiting increment law.
    """

    t: float | None
    M: int
    probs: np.ndarray
    aliasing_bound: float
    mean: float
    variance: float
    min_raw: float = 0.0

    def tail(self, k0):
        return tail_sum(self.probs, k0)


class IncrementLaw(NamedTuple):
    fourier: PmfTable
    convolution: PmfTable


def _is_pow2(n):
    return isinstance(n, (int, np.integer)) and n >= 1 and (n & (n - 1)) == 0


def fft(a):
    """Forward DFT ``A[k] = sum_j a[j] exp(-2 pi i j k / n)``, ``n`` a power of two."""
    a = np.asarray(a, dtype=complex)
    n = a.shape[0]
    if not _is_pow2(n):
        raise DomainError(f"FFT length must be a power of two, got {n}")
    bits = n.bit_length() - 1
    idx = np.arange(n)
    rev = np.zeros(n, dtype=np.int64)
    for b in range(bits):
        rev |= ((idx >> b) & 1) << (bits - 1 - b)
    a = a[rev]
    size = 2
    while size <= n:
        half = size // 2
        tw = np.exp(-2j * np.pi * np.arange(half) / size)
        blocks = a.reshape(-1, size)
        even = blocks[:, :half]
        odd = blocks[:, half:] * tw
        a = np.concatenate([even + odd, even - odd], axis=1).ravel()
        size *= 2
    return a


def _invert(values_half, M):
    """Invert PGF values at ``omega^j``, ``j = 0..M/2``, using conjugate symmetry."""
    full = np.empty(M, dtype=complex)
    full[: M // 2 + 1] = values_half
    full[M // 2 + 1:] = np.conj(values_half[1: M // 2][::-1])
    raw = fft(full).real / M
    min_raw = float(min(raw.min(), 0.0))
    return np.maximum(raw, 0.0), min_raw


def _roots_half(M):
    return np.exp(2j * np.pi * np.arange(M // 2 + 1) / M)


def _chernoff_tail(ctx, t, M, mean):
    """``min_theta exp(-M theta + eta_t(theta))`` over a grid, bounding P(N_t >= M)."""
    if mean <= 0:
        return 0.0
    top = max(math.log(M / mean), 0.0) + 1.0
    grid = np.linspace(top / 64, top, 64)
    log_b = -M * grid + np.asarray(eta_finite(ctx, t, grid))
    return float(np.exp(min(log_b.min(), 0.0)))


def required_size(ctx, t, k_max=0):
    """Smallest power of two with ``M >= mean + 12 sd`` and ``M > k_max``."""
    ctx = _ctx(ctx)
    mean = finite_mean(ctx, t)
    sd = math.sqrt(finite_variance(ctx, t))
    need = max(mean + _SD_MULTIPLE * sd, k_max + 1, 2)
    return 1 << max(1, math.ceil(math.log2(need)))


def pmf_exact(ctx, t, M=None) -> PmfTable:
    """Exact pmf of ``N_t`` on ``{0, ..., M-1}``.

    With ``M=None`` the size starts at :func:`required_size` and doubles until
    the aliasing bound is at most 1e-12.
    """
    ctx = _ctx(ctx)
    if not t >= 0:
        raise DomainError(f"horizon t must be >= 0, got {t!r}")
    t = float(t)
    mean = finite_mean(ctx, t)
    var = finite_variance(ctx, t)
    if M is None:
        M = required_size(ctx, t)
        while _chernoff_tail(ctx, t, M, mean) > ALIASING_TARGET and M < _MAX_SIZE:
            M *= 2
    if not _is_pow2(M):
        raise DomainError(f"M must be a power of two, got {M!r}")
    need = mean + _SD_MULTIPLE * math.sqrt(var)
    if M < need:
        raise DomainError(
            f"M = {M} is below mean + 12 sd = {need:.1f}; use M = {required_size(ctx, t)}"
        )
    M = int(M)
    z = _roots_half(M)
    if t == 0:
        values = np.ones_like(z)
    else:
        values = np.exp(log_pgf(ctx, t, z))
    probs, min_raw = _invert(values, M)
    return PmfTable(
        t=t,
        M=M,
        probs=probs,
        aliasing_bound=_chernoff_tail(ctx, t, M, mean),
        mean=mean,
        variance=var,
        min_raw=min_raw,
    )


def tail_sum(probs, k0):
    """``sum_{k >= k0} probs[k]``, accumulated from the smallest terms upward.

    ``math.fsum`` tracks exact partial sums, so the result is correctly rounded.
    """
    k0 = int(k0)
    if k0 < 0:
        raise DomainError(f"k0 must be >= 0, got {k0}")
    value = math.fsum(np.asarray(probs)[k0:][::-1].tolist())
    if value < NOISE_FLOOR:
        warnings.warn(
            f"tail probability {value:.3e} at k0 = {k0} is below the "
            f"{NOISE_FLOOR:.0e} double-precision noise floor",
            NoiseFloorWarning,
            stacklevel=3,
        )
    return value


def tail_exact(ctx, t, k0, M=None) -> float:
    """``P(N_t >= k0)`` from the exact pmf table."""
    ctx = _ctx(ctx)
    k0 = int(k0)
    if k0 < 0:
        raise DomainError(f"k0 must be >= 0, got {k0}")
    if M is None:
        table = pmf_exact(ctx, t)
        if table.M <= k0:
            table = pmf_exact(ctx, t, 1 << math.ceil(math.log2(k0 + 1)))
    else:
        if M <= k0:
            raise DomainError(f"k0 = {k0} lies outside a table of size M = {M}")
        table = pmf_exact(ctx, t, M)
    return tail_sum(table.probs, k0)


def _poisson_pmf(mu, M):
    return stats.poisson.pmf(np.arange(M), mu) if mu > 0 else np.eye(1, M).ravel()


def increment_law(ctx, M) -> IncrementLaw:
    """Law of ``Y`` with ``E exp(theta Y) = exp(eta(theta))``, two ways.

    ``fourier`` inverts ``exp(eta)`` on the unit circle. ``convolution`` builds
    ``Poisson(nu)`` convolved with ``sum_{i<=R} Z_i`` (``R ~ Poisson(rho)``,
    ``Z_i ~ Poisson(G)``) from truncated arrays, independently of the transform.
    """
    ctx = _ctx(ctx)
    nu, rho, G = ctx.nu, ctx.rho, ctx.G
    mean = nu + rho * G
    var = nu + rho * G * (G + 1)
    if not _is_pow2(M):
        raise DomainError(f"M must be a power of two, got {M!r}")
    need = _SD_MULTIPLE * var + 16
    if M < need:
        raise DomainError(f"M = {M} is below 12 var + 16 = {need:.1f}; use M = "
                          f"{1 << math.ceil(math.log2(need))}")
    M = int(M)

    # Fourier route
    w = _roots_half(M) - 1.0
    probs, min_raw = _invert(np.exp(w * nu + rho * np.expm1(w * G)), M)
    top = max(math.log(M / mean), 0.0) + 1.0 if mean > 0 else 1.0
    grid = np.linspace(top / 64, top, 64)
    alias = float(np.exp(min((-M * grid + np.expm1(grid) * nu
                              + rho * np.expm1(np.expm1(grid) * G)).min(), 0.0)))
    fourier = PmfTable(None, M, probs, alias, mean, var, min_raw)

    # convolution route
    base = _poisson_pmf(G, M)
    shot_sum = np.eye(1, M).ravel()         # law of Z_1 + ... + Z_r, starting at r = 0
    compound = np.zeros(M)
    r = 0
    weight = math.exp(-rho)
    remaining = 1.0
    while True:
        compound += weight * shot_sum
        remaining -= weight
        r += 1
        if remaining < 1e-17 or rho == 0 or G == 0:
            break
        weight = stats.poisson.pmf(r, rho)
        shot_sum = np.convolve(shot_sum, base)[:M]
    if G == 0:
        compound = np.eye(1, M).ravel()
        remaining = 0.0
    conv = np.convolve(_poisson_pmf(nu, M), compound)[:M]
    lost = max(1.0 - math.fsum(conv.tolist()), 0.0)
    convolution = PmfTable(None, M, conv, lost + max(remaining, 0.0), mean, var)
    return IncrementLaw(fourier, convolution)
