"""Exact Monte Carlo simulation of the shot-noise Cox process.

Path ``i`` of a batch draws from its own Philox stream keyed by the batch
seed with the path index in the high counter word, so results do not depend
on how paths are split across workers.

Count sampling conditions on the shots: given shot times ``tau_1..tau_K`` on
``[0, t]``, ``N_t`` is Poisson with mean ``nu t + sum_i G(t - tau_i)``.
Path sampling thins a piecewise-constant dominating rate, which is exact for
nonincreasing kernels.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .cgf import _ctx
from .errors import DomainError, UnsupportedKernelError

__all__ = [
    "SimConfig",
    "SimBatch",
    "MgfEstimate",
    "path_rng",
    "sample_counts",
    "sample_paths",
    "empirical_tail",
    "empirical_mgf",
]

MODES = ("counts", "paths")
_LOG_MAX = math.log(np.finfo(float).max)


@dataclass(frozen=True)
class SimConfig:
    t: float
    n_paths: int
    seed: int = 0
    mode: str = "counts"

    def __post_init__(self):
        if not (math.isfinite(self.t) and self.t > 0):
            raise DomainError(f"horizon t must be > 0, got {self.t!r}")
        if int(self.n_paths) != self.n_paths or self.n_paths < 1:
            raise DomainError(f"n_paths must be a positive integer, got {self.n_paths!r}")
        if int(self.seed) != self.seed or not 0 <= self.seed < 2**64:
            raise DomainError(f"seed must be an unsigned 64-bit integer, got {self.seed!r}")
        if self.mode not in MODES:
            raise DomainError(f"mode must be one of {MODES}, got {self.mode!r}")


@dataclass(frozen=True)
class SimBatch:
    """Simulated counts at the horizon (and event times in ``paths`` mode)."""

    config: SimConfig
    counts: np.ndarray
    events: tuple | None = None

    @property
    def mode(self):
        return self.config.mode

    @property
    def n(self):
        return len(self.counts)

    @property
    def mean(self):
        return math.fsum(self.counts.tolist()) / self.n

    @property
    def variance(self):
        if self.n < 2:
            return 0.0
        mu = self.mean
        return math.fsum(((self.counts - mu) ** 2).tolist()) / (self.n - 1)

    @property
    def min(self):
        return int(self.counts.min())

    @property
    def max(self):
        return int(self.counts.max())

    def summary(self):
        return {
            "n_paths": self.n,
            "mean": self.mean,
            "variance": self.variance,
            "min": self.min,
            "max": self.max,
        }


class MgfEstimate(NamedTuple):
    value: float
    stderr: float


def path_rng(seed, i):
    """Generator for path ``i``: Philox keyed by ``seed``, counter offset ``i * 2^128``."""
    return np.random.Generator(np.random.Philox(key=int(seed), counter=[0, 0, int(i), 0]))


def _shots(rng, rho, t):
    k = rng.poisson(rho * t) if rho > 0 else 0
    return t * rng.random(k)


def _count_range(ctx, cfg, start, stop):
    nu, rho, kernel, t = ctx.nu, ctx.rho, ctx.kernel, cfg.t
    out = np.empty(stop - start, dtype=np.int64)
    for i in range(start, stop):
        rng = path_rng(cfg.seed, i)
        tau = _shots(rng, rho, t)
        lam = nu * t + math.fsum(kernel._cum(t - tau).tolist())
        out[i - start] = rng.poisson(lam)
    return out


def _path_range(ctx, cfg, start, stop):
    nu, rho, kernel, t = ctx.nu, ctx.rho, ctx.kernel, cfg.t
    paths = []
    for i in range(start, stop):
        rng = path_rng(cfg.seed, i)
        tau = np.sort(_shots(rng, rho, t))
        a = np.concatenate([[0.0], tau])
        b = np.concatenate([tau, [t]])
        # intensity is nonincreasing between shots, so its value at ``a`` dominates
        # the shot opening each interval has age 0 and is active
        age = a[:, None] - tau[None, :]
        bound = nu + np.where(age >= 0, kernel._g(np.maximum(age, 0.0)), 0.0).sum(axis=1)
        n = rng.poisson(bound * (b - a))
        total = int(n.sum())
        if total == 0:
            paths.append(np.empty(0))
            continue
        lo = np.repeat(a, n)
        cand = np.sort(lo + np.repeat(b - a, n) * rng.random(total))
        age = cand[:, None] - tau[None, :]
        lam = nu + np.where(age > 0, kernel._g(np.maximum(age, 0.0)), 0.0).sum(axis=1)
        keep = rng.random(total) * np.repeat(bound, n) <= lam
        paths.append(cand[keep])
    return paths


def _run(fn, ctx, cfg, workers):
    n = cfg.n_paths
    if workers is None or workers <= 1 or n < 2:
        return [fn(ctx, cfg, 0, n)]
    bounds = np.linspace(0, n, min(workers, n) + 1).astype(int)
    with ProcessPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(fn, ctx, cfg, int(a), int(b))
                   for a, b in zip(bounds[:-1], bounds[1:]) if b > a]
        return [f.result() for f in futures]


def sample_counts(ctx, cfg: SimConfig, workers=None) -> SimBatch:
    """Draw ``N_t`` for ``cfg.n_paths`` independent paths (any kernel)."""
    ctx = _ctx(ctx)
    parts = _run(_count_range, ctx, cfg, workers)
    return SimBatch(cfg, np.concatenate(parts))


def sample_paths(ctx, cfg: SimConfig, workers=None) -> SimBatch:
    """Draw full event paths on ``[0, t]`` by thinning.

    Requires a nonincreasing kernel; raises :class:`UnsupportedKernelError`
    otherwise.
    """
    ctx = _ctx(ctx)
    if not ctx.kernel.is_nonincreasing:
        raise UnsupportedKernelError("path sampling needs a nonincreasing kernel")
    parts = _run(_path_range, ctx, cfg, workers)
    events = tuple(p for part in parts for p in part)
    counts = np.array([len(e) for e in events], dtype=np.int64)
    return SimBatch(cfg, counts, events)


def empirical_tail(batch: SimBatch, k0) -> float:
    """Fraction of paths with ``N_t >= k0``."""
    return int(np.count_nonzero(batch.counts >= k0)) / batch.n


def empirical_mgf(batch: SimBatch, theta) -> MgfEstimate:
    """Sample mean of ``exp(theta N_t)`` with its standard error."""
    theta = float(theta)
    top = batch.max if theta > 0 else batch.min
    if theta * top > _LOG_MAX:
        raise DomainError(
            f"exp(theta * {top}) overflows; need theta <= {_LOG_MAX / top:.6g}")
    vals = np.exp(theta * batch.counts.astype(float))
    n = batch.n
    mean = math.fsum((vals / n).tolist())
    if n < 2:
        return MgfEstimate(mean, math.inf)
    # spread of vals / mean, so squares stay finite near the overflow bound
    var = math.fsum(((vals / mean - 1.0) ** 2).tolist()) / (n - 1)
    return MgfEstimate(mean, mean * math.sqrt(var / n))
