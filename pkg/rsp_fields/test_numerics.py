"""Tests for the numerical kernels."""
import math

import numpy as np
import pytest

from .errors import DistributionalError, NumericDomainError
from .numerics import (
    DomainKind,
    Grid1D,
    SampledFunction,
    angular_average,
    bessel_j,
    dft_freq_to_time,
    dft_time_to_freq,
    gauss_legendre_panels,
    invert_monotone,
    linear_fit,
    periodic_quadrature,
    richardson_extrapolate,
)

FIRST_ZERO_J0 = 2.404825557695773


def test_grid_rejects_bad_parameters():
    with pytest.raises(NumericDomainError):
        Grid1D(0.0, 0.0, 10)
    with pytest.raises(NumericDomainError):
        Grid1D(0.0, 1.0, 1)
    with pytest.raises(NumericDomainError):
        Grid1D(float("nan"), 1.0, 4)


def test_grid_spanning_hits_both_ends():
    grid = Grid1D.spanning(-1.0, 3.0, 5)
    assert grid.step == pytest.approx(1.0)
    assert grid.stop == pytest.approx(3.0)
    np.testing.assert_allclose(grid.points(), [-1, 0, 1, 2, 3])


def test_sampled_function_checks_length_and_finiteness():
    grid = Grid1D(0.0, 1.0, 3)
    with pytest.raises(NumericDomainError):
        SampledFunction(grid, np.zeros(4), DomainKind.TIME)
    with pytest.raises(NumericDomainError):
        SampledFunction(grid, [0.0, np.inf, 0.0], DomainKind.TIME)


def test_bessel_special_values():
    assert bessel_j(0, 0.0) == 1.0
    assert abs(bessel_j(0, FIRST_ZERO_J0)) < 1e-10
    assert bessel_j(0.5, 1.0) == pytest.approx(np.sqrt(2 / np.pi) * np.sin(1.0), rel=1e-12)
    assert bessel_j(-0.5, 1.0) == pytest.approx(np.sqrt(2 / np.pi) * np.cos(1.0), rel=1e-12)
    assert bessel_j(0.5, 0.0) == 0.0


def test_bessel_matches_power_series():
    x = np.array([0.1, 1.0, 5.0, 11.0])
    series = sum(
        (-1) ** j * (x / 2) ** (2 * j) / math.factorial(j) ** 2 for j in range(60)
    )
    np.testing.assert_allclose(bessel_j(0, x), series, rtol=1e-11, atol=1e-14)


def test_bessel_rejects_bad_input():
    with pytest.raises(NumericDomainError):
        bessel_j(2, 1.0)
    with pytest.raises(NumericDomainError):
        bessel_j(-0.5, 0.0)
    with pytest.raises(NumericDomainError):
        bessel_j(0, -1.0)


def test_bessel_derivative_identity():
    h = 1e-6
    x = np.linspace(0.5, 30.0, 50)
    derivative = (bessel_j(0, x + h) - bessel_j(0, x - h)) / (2 * h)
    np.testing.assert_allclose(derivative, -bessel_j(1, x), atol=1e-4)


@pytest.mark.parametrize("dimension", [1, 2, 3])
def test_angular_average_closed_forms(dimension):
    z = np.array([0.0, 0.3, 2.0, 17.5])
    expected = {
        1: 2 * np.cos(z),
        2: 2 * np.pi * np.array([bessel_j(0, v) for v in z]),
        3: 4 * np.pi * np.sinc(z / np.pi),
    }[dimension]
    np.testing.assert_allclose(angular_average(dimension, z), expected, rtol=1e-12, atol=1e-14)
    np.testing.assert_allclose(
        angular_average(dimension, z.astype(complex)), expected, rtol=1e-12, atol=1e-14
    )


def test_periodic_quadrature_basic_integrands():
    assert abs(periodic_quadrature(lambda a: np.exp(1j * a))) < 1e-14
    assert periodic_quadrature(lambda a: 1.0) == pytest.approx(2 * np.pi)
    value = periodic_quadrature(lambda a: np.exp(1j * np.cos(a)))
    assert value == pytest.approx(2 * np.pi * bessel_j(0, 1.0), rel=1e-12)


def test_periodic_quadrature_exact_for_trig_polynomials():
    coefficients = {0: 0.7, 3: 1.5 - 0.2j, -5: 0.3j, 7: -1.1}
    exact = 2 * np.pi * coefficients[0]

    def poly(alpha):
        return sum(c * np.exp(1j * n * alpha) for n, c in coefficients.items())

    assert abs(periodic_quadrature(poly) - exact) < 1e-13


def test_periodic_quadrature_rejects_bad_sample_counts():
    with pytest.raises(NumericDomainError):
        periodic_quadrature(lambda a: 1.0, n_samples=8)
    with pytest.raises(NumericDomainError):
        periodic_quadrature(lambda a: 1.0, n_samples=24)


def test_dft_of_impulse_and_zero():
    t0 = 1.3
    grid = Grid1D(-t0, 0.01, 200)
    values = np.zeros(grid.count)
    values[0] = 1.0 / grid.step
    impulse = SampledFunction(grid, values, DomainKind.TIME)
    freqs = Grid1D.spanning(0.0, 40.0, 101)
    spectrum = dft_time_to_freq(impulse, freqs)
    np.testing.assert_allclose(spectrum.values, np.exp(-1j * freqs.points() * t0), atol=1e-12)

    zero = SampledFunction(grid, np.zeros(grid.count), DomainKind.TIME)
    assert np.all(dft_time_to_freq(zero, freqs).values == 0)


def test_dft_of_rectangle():
    t0 = 2.0
    n = 4001
    grid = Grid1D.spanning(-t0, 0.0, n)
    values = np.ones(n)
    values[[0, -1]] = 0.5  # trapezoid end weights
    rect = SampledFunction(grid, values, DomainKind.TIME)
    freqs = Grid1D.spanning(0.0, 10.0, 51)
    w = freqs.points()
    expected = t0 * np.exp(-1j * w * t0 / 2) * np.sinc(w * t0 / (2 * np.pi))
    np.testing.assert_allclose(dft_time_to_freq(rect, freqs).values, expected, atol=1e-5)


def test_dft_rejects_wrong_domain():
    grid = Grid1D(0.0, 1.0, 4)
    with pytest.raises(NumericDomainError):
        dft_time_to_freq(SampledFunction(grid, np.ones(4), DomainKind.RADIUS), grid)


def test_parseval():
    grid = Grid1D.spanning(-8.0, 8.0, 1601)
    t = grid.points()
    pulse = SampledFunction(grid, np.exp(-t**2) * np.exp(3j * t), DomainKind.TIME)
    freqs = Grid1D.spanning(-15.0, 21.0, 7201)
    spectrum = dft_time_to_freq(pulse, freqs)
    freq_energy = spectrum.energy() / (2 * np.pi)
    assert freq_energy == pytest.approx(pulse.energy(), rel=1e-6)


def test_hermitian_inverse_recovers_even_pulse():
    w = 0.7
    freqs = Grid1D.spanning(0.0, 60.0, 6001)
    spectrum = SampledFunction(
        freqs, w * np.sqrt(np.pi) * np.exp(-(w * freqs.points()) ** 2 / 4), DomainKind.ANGULAR_FREQUENCY
    )
    times = Grid1D.spanning(-3.0, 3.0, 61)
    pulse = dft_freq_to_time(spectrum, times)
    np.testing.assert_allclose(pulse.values.real, np.exp(-(times.points() / w) ** 2), atol=1e-9)
    assert np.all(pulse.values.imag == 0)


def test_gauss_legendre_panels_integrate_polynomials():
    nodes, weights = gauss_legendre_panels(np.array([0.0, 0.5, 2.0, 3.0]), order=6)
    assert np.sum(weights * nodes**5) == pytest.approx(3.0**6 / 6, rel=1e-13)


def test_richardson_removes_linear_and_quadratic_bias():
    value, levels = richardson_extrapolate(lambda h: 1.25 + 3 * h - 2 * h**2 + 0.5 * h**3, 0.2)
    assert value == pytest.approx(1.25, abs=1e-12)
    assert 3 <= levels <= 8


def test_richardson_flags_divergence():
    with pytest.raises(DistributionalError):
        richardson_extrapolate(lambda h: 1.0 / h**3 + np.log(h), 0.2)


def test_invert_monotone():
    root = invert_monotone(np.exp, 2.0, (0.0, 5.0))
    assert root == pytest.approx(np.log(2.0), rel=1e-13)
    with pytest.raises(NumericDomainError):
        invert_monotone(np.exp, -1.0, (0.0, 5.0))


def test_linear_fit_exact_line():
    fit = linear_fit([0, 1, 2, 3], [1, -1, -3, -5])
    assert fit.slope == pytest.approx(-2.0)
    assert fit.intercept == pytest.approx(1.0)
    assert fit.r_squared == pytest.approx(1.0)
