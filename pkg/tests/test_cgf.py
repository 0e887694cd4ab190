import math

import mpmath
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate

from shotcox.cgf import (
    CgfContext,
    eta,
    eta_deriv,
    eta_finite,
    finite_mean,
    finite_variance,
    log_pgf,
    measure_speed,
    modphi_gap,
    phi,
    psi,
)
from shotcox.errors import DomainError
from shotcox.model import BoxCar, Exponential, ModelParams, PowerLaw, Zero

from conftest import ALL_KERNELS

# Frozen oracle values. eta_t(1, 0.5) and phi(0.5) for the standard model from
# mpmath quadrature at 30 digits of the defining integrals; eta_t(1, 0.5) also
# agrees with composite Simpson on 10^6 panels.
ETA_FINITE_STD_T1_HALF = 0.92690842528893966
PHI_STD_HALF = -1.0656103442142161543
PSI_STD_HALF = 0.34451751631154318


def _mp_eta(nu, rho, G, theta):
    w = mpmath.expm1(theta)
    return w * nu + rho * mpmath.expm1(w * G)


def _simpson(f, a, b, n):
    x = np.linspace(a, b, 2 * n + 1)
    y = f(x)
    hh = (b - a) / (2 * n)
    return hh / 3 * (y[0] + y[-1] + 4 * y[1:-1:2].sum() + 2 * y[2:-1:2].sum())


# --- eta and derivatives ----------------------------------------------------------

def test_eta_examples(std):
    assert eta(std, 0.0) == 0.0
    assert eta(std, math.log(2)) == pytest.approx(math.e, rel=1e-15)
    p = CgfContext(ModelParams(1.7, 0.0, Exponential(1.0, 1.0)))
    for th in (-2.0, 0.3, 1.5):
        assert eta(p, th) == pytest.approx(1.7 * math.expm1(th), rel=1e-15)


def test_eta_complex_and_array(std):
    th = np.array([0.1, -0.4 + 0.7j])
    w = np.expm1(th)
    np.testing.assert_allclose(eta(std, th), w + np.expm1(w), rtol=1e-15)


def test_eta_deriv_at_zero(std):
    assert [eta_deriv(std, 0.0, k) for k in (1, 2, 3, 4)] == pytest.approx([2, 3, 6, 16], rel=1e-15)


@pytest.mark.parametrize("params", [(1.0, 1.0, 1.0), (0.3, 2.0, 0.7), (0.0, 1.5, 2.0)])
@pytest.mark.parametrize("theta", [-1.0, 0.0, 0.5, 1.0])
@pytest.mark.parametrize("order", [1, 2, 3, 4])
def test_eta_deriv_vs_central_differences(params, theta, order):
    nu, rho, G = params
    ctx = CgfContext(ModelParams(nu, rho, Exponential(G, 1.0)))
    h = mpmath.mpf("1e-4")
    with mpmath.workdps(50):
        ref = mpmath.diff(lambda s: _mp_eta(nu, rho, G, s), mpmath.mpf(theta), order, h=h,
                          method="step", direction=0)
    assert eta_deriv(ctx, theta, order) == pytest.approx(float(ref), rel=1e-6)
    # the same check in double precision, one order at a time
    lower = (lambda s: eta(ctx, s)) if order == 1 else (lambda s: eta_deriv(ctx, s, order - 1))
    fd = (lower(theta + 1e-4) - lower(theta - 1e-4)) / 2e-4
    assert eta_deriv(ctx, theta, order) == pytest.approx(fd, rel=1e-6)


def test_eta_deriv_bad_order(std):
    for order in (0, 5):
        with pytest.raises(DomainError):
            eta_deriv(std, 0.0, order)


@given(theta=st.floats(-30, 3), nu=st.floats(0, 5), rho=st.floats(0, 5), G=st.floats(0, 3))
def test_eta_convex_and_anchored(theta, nu, rho, G):
    ctx = CgfContext(ModelParams(nu, rho, Exponential(G, 1.0)))
    assert eta(ctx, 0.0) == 0.0
    if nu > 0 or rho * G > 0:
        assert eta_deriv(ctx, theta, 2) > 0


# --- finite horizon -----------------------------------------------------------------

def test_eta_finite_at_zero_horizon(std):
    assert eta_finite(std, 0.0, 0.7) == 0.0


def test_eta_finite_poisson(poisson_ctx):
    for th in (-1.0, 0.3, 2.0):
        assert eta_finite(poisson_ctx, 5.0, th) == pytest.approx(5 * math.expm1(th), rel=1e-14)


def test_eta_finite_simpson_oracle(std):
    w = math.expm1(0.5)
    ref = w + _simpson(lambda u: np.expm1(w * -np.expm1(-u)), 0.0, 1.0, 10**6)
    assert ref == pytest.approx(ETA_FINITE_STD_T1_HALF, abs=1e-13)
    assert eta_finite(std, 1.0, 0.5) == pytest.approx(ETA_FINITE_STD_T1_HALF, abs=1e-10)


@pytest.mark.parametrize("kernel", ALL_KERNELS, ids=lambda k: type(k).__name__)
@pytest.mark.parametrize("theta", [-1.5, 0.4, 0.2 + 1.1j])
def test_eta_finite_vs_raw_formula(kernel, theta):
    ctx = CgfContext(ModelParams(0.8, 1.3, kernel))
    t = 7.0
    w = complex(np.expm1(theta))

    def part(fn):
        return integrate.quad(lambda u: fn(np.expm1(w * kernel.cum_integral(u))), 0, t,
                              points=[p for p in kernel.kinks if p < t] or None,
                              limit=400, epsabs=1e-14, epsrel=1e-13)[0]

    ref = w * t * 0.8 + 1.3 * (part(np.real) + 1j * part(np.imag))
    assert complex(eta_finite(ctx, t, theta)) == pytest.approx(ref, abs=1e-10)


def test_eta_finite_vectorized(std):
    th = np.array([-0.5, 0.1, 0.9])
    np.testing.assert_allclose(eta_finite(std, 12.0, th), [eta_finite(std, 12.0, x) for x in th],
                               rtol=1e-13)


@pytest.mark.parametrize("kernel", ALL_KERNELS[:6], ids=lambda k: type(k).__name__)
@pytest.mark.parametrize("t", [0.5, 3.0, 40.0])
def test_moment_formulas(kernel, t):
    ctx = CgfContext(ModelParams(0.6, 1.4, kernel))
    G = kernel.cum_integral
    pts = [p for p in kernel.kinks if p < t] or None
    ig = integrate.quad(G, 0, t, points=pts, limit=400, epsabs=1e-13, epsrel=1e-13)[0]
    ig2 = integrate.quad(lambda u: G(u) ** 2, 0, t, points=pts, limit=400, epsabs=1e-13,
                         epsrel=1e-13)[0]
    mean = 0.6 * t + 1.4 * ig
    var = mean + 1.4 * ig2
    assert finite_mean(ctx, t) == pytest.approx(mean, rel=1e-11)
    assert finite_variance(ctx, t) == pytest.approx(var, rel=1e-11)
    # complex-step derivatives of the finite-horizon cumulant
    h = 1e-6
    assert complex(eta_finite(ctx, t, 1j * h)).imag / h == pytest.approx(mean, rel=1e-9)
    h = 1e-3
    k2 = -2 * complex(eta_finite(ctx, t, 1j * h)).real / h**2
    assert k2 == pytest.approx(var, rel=1e-5)


def test_log_pgf_at_zero_gives_empty_probability(std):
    t = 1.0
    ref = -t + integrate.quad(lambda u: math.expm1(-(1 - math.exp(-u))), 0, t, epsabs=1e-15)[0]
    assert complex(log_pgf(std, t, 0.0)).real == pytest.approx(ref, abs=1e-13)


# --- large-t limit ------------------------------------------------------------------

@pytest.mark.parametrize("theta", [-1.0, -0.5, 0.25])
def test_eta_finite_over_t_converges(std, theta):
    t = 1e3
    assert abs(eta_finite(std, t, theta) / t - eta(std, theta)) <= 1e-3


@pytest.mark.parametrize("theta", [-1.0, 0.25, 0.5, 1.0])
def test_eta_finite_offset_converges_to_phi(std, theta):
    # eta_t - t eta -> rho phi, so the 1/t deviation of eta_t / t is rho phi / t
    t = 1e3
    offset = eta_finite(std, t, theta) - t * eta(std, theta)
    assert offset == pytest.approx(phi(std, theta), abs=1e-9)


# --- phi, psi -----------------------------------------------------------------------

def test_phi_trivial_cases(std):
    assert phi(std, 0.0) == 0.0
    assert psi(std, 0.0) == 1.0
    z = CgfContext(ModelParams(1.0, 1.0, Zero()))
    assert phi(z, 0.8) == 0.0
    assert psi(z, 0.8) == 1.0


def test_phi_frozen_oracle(std):
    assert phi(std, 0.5) == pytest.approx(PHI_STD_HALF, abs=1e-12)
    assert psi(std, 0.5) == pytest.approx(PSI_STD_HALF, rel=1e-12)
    assert psi(std, 0.5) == pytest.approx(math.exp(std.rho * phi(std, 0.5)), rel=1e-15)


@pytest.mark.parametrize("kernel", [Exponential(1.0, 1.0), PowerLaw(3.0, 4.0), PowerLaw(0.5, 3.0),
                                    BoxCar(2.0, 0.5), ALL_KERNELS[5]],
                         ids=lambda k: type(k).__name__)
@pytest.mark.parametrize("theta", [-1.0, 0.5, 0.3 - 0.8j])
def test_phi_vs_brute_force(kernel, theta):
    ctx = CgfContext(ModelParams(1.0, 1.0, kernel))
    w = complex(np.expm1(theta))
    eG = np.exp(w * kernel.l1)

    def f(u, part):
        return part(np.exp(w * kernel.cum_integral(u)) - eG)

    end = kernel.support_end if math.isfinite(kernel.support_end) else np.inf
    ref = sum(s * integrate.quad(f, 0, end, args=(part,), limit=800, epsabs=1e-14,
                                 epsrel=1e-13)[0]
              for s, part in ((1, np.real), (1j, np.imag)))
    assert complex(phi(ctx, theta)) == pytest.approx(ref, abs=1e-11)


# --- mod-phi gap ----------------------------------------------------------------------

def test_gap_zero_kernel():
    z = CgfContext(ModelParams(1.0, 1.0, Zero()))
    assert modphi_gap(z, 10.0, 0.5) == 0.0


def test_gap_matches_definition_at_small_t(std):
    for t in (1.0, 3.0, 6.0):
        ref = abs(math.exp(eta_finite(std, t, 0.5) - t * eta(std, 0.5)) - psi(std, 0.5))
        assert modphi_gap(std, t, 0.5) == pytest.approx(ref, rel=1e-9, abs=0)


def test_gap_decreasing(std):
    gaps = [modphi_gap(std, 10.0 * 2**k, 0.5) for k in range(7)]
    assert all(b < a for a, b in zip(gaps, gaps[1:]))
    # exponential kernel: gap ~ psi |w| e^{wG} e^{-t} for large t
    w = math.expm1(0.5)
    ref = psi(std, 0.5) * w * math.exp(w) * math.exp(-80.0)
    assert gaps[3] == pytest.approx(ref, rel=1e-6, abs=0)


def test_gap_rejects_nonpositive_t(std):
    with pytest.raises(DomainError):
        modphi_gap(std, 0.0, 0.5)


def test_powerlaw_speed(powerlaw_ctx):
    table = measure_speed(powerlaw_ctx, 0.5, (50, 100, 200, 400, 800))
    assert -2.3 <= table.slope <= -1.7
    assert table.expected_order == 2.0
    assert all(-2.3 <= s <= -1.7 for s in table.local_slopes)
