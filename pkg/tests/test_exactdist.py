import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, stats

from shotcox.cgf import CgfContext, finite_mean, finite_variance
from shotcox.errors import DomainError, NoiseFloorWarning
from shotcox.exactdist import (
    fft,
    increment_law,
    pmf_exact,
    required_size,
    tail_exact,
    tail_sum,
)
from shotcox.model import BoxCar, Exponential, ModelParams, PowerLaw, Zero

from conftest import ALL_KERNELS, panjer_pmf

# P(N_1 = 0) for the standard model: mpmath quadrature of the closed form at 30 digits.
P0_STD_T1 = 0.27357880130493441498


# --- FFT ---------------------------------------------------------------------------------

@pytest.mark.parametrize("n", [1, 2, 4, 8, 64, 1024])
def test_fft_matches_numpy(n):
    rng = np.random.default_rng(n)
    a = rng.normal(size=n) + 1j * rng.normal(size=n)
    np.testing.assert_allclose(fft(a), np.fft.fft(a), rtol=0, atol=1e-12 * n)


def test_fft_rejects_non_power_of_two():
    with pytest.raises(DomainError):
        fft(np.ones(12))


# --- pmf ------------------------------------------------------------------------------------

def test_poisson_reduction(poisson_ctx):
    table = pmf_exact(poisson_ctx, 5.0, 64)
    k = np.arange(61)
    np.testing.assert_allclose(table.probs[:61], stats.poisson.pmf(k, 5.0), rtol=0, atol=1e-10)
    assert table.probs[0] == pytest.approx(math.exp(-5.0), rel=1e-12)


@pytest.mark.parametrize("t", [1.0, 20.0, 200.0])
def test_poisson_reduction_auto_size(t):
    ctx = CgfContext(ModelParams(2.0, 0.0, Exponential(1.0, 1.0)))
    table = pmf_exact(ctx, t)
    ref = stats.poisson.pmf(np.arange(table.M), 2.0 * t)
    np.testing.assert_allclose(table.probs, ref, rtol=0, atol=1e-10)


def test_p0_standard_model(std):
    assert pmf_exact(std, 1.0).probs[0] == pytest.approx(P0_STD_T1, abs=1e-12)


@pytest.mark.parametrize("kernel", ALL_KERNELS, ids=lambda k: type(k).__name__)
def test_p0_closed_form(kernel):
    ctx = CgfContext(ModelParams(0.7, 1.2, kernel))
    t = 6.0
    pts = [p for p in kernel.kinks if p < t] or None
    integral = integrate.quad(lambda u: math.expm1(-kernel.cum_integral(u)), 0, t, points=pts,
                              epsabs=1e-14, epsrel=1e-12, limit=200)[0]
    ref = math.exp(-t * 0.7 + 1.2 * integral)
    assert pmf_exact(ctx, t).probs[0] == pytest.approx(ref, rel=1e-10, abs=1e-15)


@pytest.mark.parametrize("kernel", [Exponential(1.0, 1.0), PowerLaw(3.0, 4.0), BoxCar(2.0, 0.5),
                                    ALL_KERNELS[6]], ids=lambda k: type(k).__name__)
def test_matches_panjer_oracle(kernel):
    params = ModelParams(1.0, 1.0, kernel)
    t = 30.0
    table = pmf_exact(CgfContext(params), t)
    ref = panjer_pmf(params, t, table.M - 1)
    np.testing.assert_allclose(table.probs, ref, rtol=0, atol=1e-13)


@pytest.mark.parametrize("kernel", ALL_KERNELS, ids=lambda k: type(k).__name__)
@pytest.mark.parametrize("t", [0.5, 10.0, 80.0])
def test_table_invariants(kernel, t):
    ctx = CgfContext(ModelParams(1.0, 1.5, kernel))
    table = pmf_exact(ctx, t)
    assert table.aliasing_bound <= 1e-12
    assert abs(math.fsum(table.probs.tolist()) - 1) <= 1e-10 + table.aliasing_bound
    assert np.all(table.probs >= 0)
    assert table.min_raw >= -1e-12
    k = np.arange(table.M)
    mean = math.fsum((k * table.probs).tolist())
    var = math.fsum(((k - mean) ** 2 * table.probs).tolist())
    assert mean == pytest.approx(finite_mean(ctx, t), rel=0, abs=1e-8 * (1 + table.mean))
    assert var == pytest.approx(finite_variance(ctx, t), rel=0, abs=1e-8 * (1 + table.variance))


@pytest.mark.parametrize("t", [5.0, 60.0, 300.0])
def test_doubling_stability(std, t):
    a = pmf_exact(std, t)
    b = pmf_exact(std, t, 2 * a.M)
    big = a.probs > 1e-12
    assert np.max(np.abs(a.probs[big] - b.probs[: a.M][big])) <= 1e-11


def test_zero_horizon(std):
    table = pmf_exact(std, 0.0)
    assert table.probs[0] == 1.0
    assert np.all(table.probs[1:] == 0.0)


def test_zero_kernel_is_poisson():
    table = pmf_exact(CgfContext(ModelParams(1.5, 3.0, Zero())), 4.0)
    np.testing.assert_allclose(table.probs, stats.poisson.pmf(np.arange(table.M), 6.0), atol=1e-13)


def test_small_M_rejected_with_suggestion(std):
    need = required_size(std, 50.0)
    with pytest.raises(DomainError, match=f"M = {need}"):
        pmf_exact(std, 50.0, need // 2)
    with pytest.raises(DomainError):
        pmf_exact(std, 5.0, 100)
    with pytest.raises(DomainError):
        pmf_exact(std, -1.0)


def test_deterministic(std):
    assert pmf_exact(std, 25.0).probs.tobytes() == pmf_exact(std, 25.0).probs.tobytes()


# --- tails -----------------------------------------------------------------------------------

def test_tail_examples(poisson_ctx, std):
    assert tail_exact(std, 10.0, 0) == pytest.approx(1.0, abs=1e-10)
    assert tail_exact(poisson_ctx, 5.0, 10) == pytest.approx(stats.poisson.sf(9, 5.0), abs=1e-10)


def test_tail_pinned_magnitude(std):
    # the exact tail at t = 150, k0 = 390 is of order 3e-5
    value = tail_exact(std, 150.0, math.ceil(2.6 * 150))
    assert 1e-5 < value < 1e-4


def test_tail_beyond_default_table_grows_M(std):
    small = pmf_exact(std, 2.0)
    k0 = small.M + 5
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", NoiseFloorWarning)
        assert tail_exact(std, 2.0, k0) >= 0.0
    with pytest.raises(DomainError):
        tail_exact(std, 2.0, small.M, M=small.M)


def test_noise_floor_flagged(poisson_ctx):
    with pytest.warns(NoiseFloorWarning):
        tail_exact(poisson_ctx, 5.0, 40)


@settings(max_examples=40)
@given(st.lists(st.floats(0, 1e-3), min_size=1, max_size=300), st.integers(0, 310))
def test_tail_sum_correctly_rounded(probs, k0):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", NoiseFloorWarning)
        got = tail_sum(np.array(probs), k0)
    assert got == math.fsum(probs[k0:])


def test_tail_sum_negative_k0():
    with pytest.raises(DomainError):
        tail_sum(np.ones(4), -1)


# --- increment law ----------------------------------------------------------------------------

def test_increment_law_poisson():
    law = increment_law(CgfContext(ModelParams(1.0, 0.0, Exponential(1.0, 1.0))), 32)
    ref = stats.poisson.pmf(np.arange(32), 1.0)
    np.testing.assert_allclose(law.fourier.probs, ref, atol=1e-14)
    np.testing.assert_allclose(law.convolution.probs, ref, atol=1e-14)


def test_increment_law_point_mass():
    law = increment_law(CgfContext(ModelParams(0.0, 1.0, Zero())), 16)
    for table in law:
        assert table.probs[0] == pytest.approx(1.0, abs=1e-15)
        assert np.all(np.abs(table.probs[1:]) <= 1e-15)


@pytest.mark.parametrize("params", [(1.0, 1.0, 1.0), (0.5, 2.0, 1.5), (0.0, 3.0, 0.4)])
def test_increment_law_routes_agree(params):
    nu, rho, G = params
    ctx = CgfContext(ModelParams(nu, rho, Exponential(G, 1.0)))
    var = nu + rho * G * (G + 1)
    law = increment_law(ctx, 1 << math.ceil(math.log2(12 * var + 16)))
    assert np.max(np.abs(law.fourier.probs - law.convolution.probs)) <= 1e-10
    assert law.fourier.t is None
    k = np.arange(law.fourier.M)
    assert math.fsum((k * law.fourier.probs).tolist()) == pytest.approx(nu + rho * G, rel=1e-9)


def test_increment_law_size_checks(std):
    with pytest.raises(DomainError):
        increment_law(std, 24)
    with pytest.raises(DomainError, match="use M = 64"):
        increment_law(std, 32)
