import math

import numpy as np
import pytest
from scipy import integrate

from shotcox.cgf import CgfContext
from shotcox.model import BoxCar, Exponential, ModelParams, PowerLaw, Tabulated, Zero, standard_model

ACCEPTANCE_LINES = []


@pytest.fixture
def std():
    return CgfContext(standard_model())


@pytest.fixture
def poisson_ctx():
    return CgfContext(ModelParams(1.0, 0.0, Exponential(1.0, 1.0)))


@pytest.fixture
def powerlaw_ctx():
    return CgfContext(ModelParams(1.0, 1.0, PowerLaw(3.0, 4.0)))


ALL_KERNELS = [
    Exponential(1.0, 1.0),
    Exponential(0.7, 2.5),
    PowerLaw(3.0, 4.0),
    PowerLaw(0.5, 2.5),
    BoxCar(2.0, 0.5),
    Tabulated(((0.0, 1.0), (0.5, 0.8), (0.5, 0.3), (2.0, 0.1), (3.0, 0.0))),
    Tabulated(((0.0, 0.0), (1.0, 2.0), (2.0, 0.0))),
    Zero(),
]


def panjer_pmf(params, t, kmax, jmax=60):
    """Exact pmf of N_t by Panjer recursion.

    Given the shots, N_t is Poisson(nu t) plus one Poisson(G(t - tau)) count
    per shot, so it is compound Poisson with rate (nu + rho) t and severity
    f_j = [nu t 1{j=1} + rho int_0^t e^{-G(u)} G(u)^j / j! du] / ((nu + rho) t).
    Independent of the Fourier route.
    """
    nu, rho, k = params.nu_base, params.rho, params.kernel
    lam = (nu + rho) * t
    f = np.zeros(jmax + 1)
    pts = [p for p in (1.0, 5.0, 20.0, 60.0) if p < t]
    for j in range(jmax + 1):
        val, _ = integrate.quad(
            lambda u: math.exp(-k.cum_integral(u)) * k.cum_integral(u) ** j / math.factorial(j),
            0.0, t, points=pts or None, limit=500, epsabs=1e-15, epsrel=1e-13)
        f[j] = rho * val
    f[1] += nu * t
    f /= lam
    p = np.zeros(kmax + 1)
    p[0] = math.exp(-lam * (1.0 - f[0]))
    jj = np.arange(1, jmax + 1)
    for n in range(1, kmax + 1):
        m = min(n, jmax)
        p[n] = lam / n * np.dot(jj[:m] * f[1:m + 1], p[n - 1::-1][:m])
    return p


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
