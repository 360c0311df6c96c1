"""Tests for delta-window wavepackets, reach radii and vacuum correlators."""
import math

import numpy as np
import pytest
from scipy.special import k0, k1

from .dispersion import DispersionKind, DispersionModel, WeightRule, group_velocity, omega
from .dynamics import (
    CorrelatorQuery,
    correlator,
    delta_window_state,
    fit_decay_rate,
    packet_velocity,
    probe_amplitude,
    reach_radius,
    regularized_correlator,
    superoscillation_needed,
    superoscillation_needed_everywhere,
    track_peak,
)
from .errors import DistributionalError, NumericDomainError, OutOfBandError
from .fieldstate import Profile, ProfileKind, TargetState, desired_amplitude
from .numerics import Grid1D

MASSLESS = DispersionModel(DispersionKind.RELATIVISTIC_MASSLESS)
MASSIVE = DispersionModel(DispersionKind.RELATIVISTIC_MASSIVE, mass=1.0)
SCHROEDINGER = DispersionModel(DispersionKind.SCHROEDINGER, mass=1.0)
BOUNDED = DispersionModel(DispersionKind.BOUNDED_FREQUENCY, max_frequency=3.0)


def _fresnel(mass, dimension, r, dt):
    return (mass / (2j * math.pi * dt)) ** (dimension / 2) * np.exp(1j * mass * r**2 / (2 * dt))


def test_query_validation():
    with pytest.raises(NumericDomainError):
        CorrelatorQuery(MASSIVE, 4, 1.0, 0.0)
    with pytest.raises(NumericDomainError):
        CorrelatorQuery(MASSIVE, 3, -1.0, 0.0)
    with pytest.raises(NumericDomainError):
        CorrelatorQuery(MASSIVE, 3, 1.0, math.inf)


def test_delta_window_state_without_delay_is_real():
    grid = Grid1D.spanning(0.0, 5.0, 101)
    state = delta_window_state(MASSIVE, 0.0, grid)
    assert state.norm() == pytest.approx(1.0, abs=1e-12)
    assert np.all(state.values.imag == 0)
    expected = 1 / np.sqrt(2 * omega(MASSIVE, grid.points()))
    np.testing.assert_allclose(state.values / state.values[0], expected / expected[0], rtol=1e-12)


def test_delta_window_state_phase():
    grid = Grid1D.spanning(0.0, 5.0, 101)
    delayed = delta_window_state(MASSIVE, 1.7, grid)
    prompt = delta_window_state(MASSIVE, 0.0, grid)
    w = omega(MASSIVE, grid.points())
    np.testing.assert_allclose(delayed.values, prompt.values * np.exp(-1.7j * w), rtol=1e-12)


def test_delta_window_state_rejects_bad_envelope():
    grid = Grid1D.spanning(0.0, 5.0, 101)
    with pytest.raises(NumericDomainError):
        delta_window_state(MASSIVE, 0.0, grid, envelope=(2.0, 0.0))


def test_probe_at_zero_time_recovers_profile():
    unit = DispersionModel(DispersionKind.RELATIVISTIC_MASSLESS, weight_rule=WeightRule.UNIT)
    profile = Profile(ProfileKind.GAUSSIAN_BALL, width=0.8)
    state = desired_amplitude(TargetState(1, profile, 0.0, unit), Grid1D.spanning(0.0, 12.0, 1201))
    x = np.linspace(-2.0, 2.0, 41)
    values = probe_amplitude(state, x, 0.0)
    np.testing.assert_allclose(values / values[20], profile(np.abs(x)), atol=1e-9)


def test_probe_decays_far_away():
    unit = DispersionModel(DispersionKind.RELATIVISTIC_MASSLESS, weight_rule=WeightRule.UNIT)
    profile = Profile(ProfileKind.GAUSSIAN_BALL, width=0.8)
    state = desired_amplitude(TargetState(1, profile, 0.0, unit), Grid1D.spanning(0.0, 12.0, 1201))
    near = abs(probe_amplitude(state, 0.0, 0.0))
    far = abs(probe_amplitude(state, 40.0, 0.0))
    assert far < 1e-10 * near


def test_massless_packet_sits_on_the_light_cone():
    k_grid = Grid1D.spanning(7.5, 12.5, 1001)
    state = delta_window_state(MASSLESS, 2.0, k_grid, envelope=(10.0, 0.5))
    x = np.linspace(0.0, 10.0, 1001)
    peak = track_peak(x, probe_amplitude(state, x, 3.0))
    assert peak == pytest.approx(5.0, abs=0.01)


@pytest.mark.parametrize(
    "model, k_center, times, x_max",
    [
        (MASSLESS, 10.0, (6.0, 7.0, 8.0, 9.0, 10.0), 14.0),
        (MASSIVE, 3.0, (6.0, 7.0, 8.0, 9.0, 10.0), 14.0),
        (SCHROEDINGER, 3.0, (2.0, 2.5, 3.0, 3.5, 4.0), 20.0),
    ],
)
def test_packet_moves_at_group_velocity(model, k_center, times, x_max):
    k_grid = Grid1D.spanning(k_center - 2.5, k_center + 2.5, 1001)
    state = delta_window_state(model, 0.0, k_grid, envelope=(k_center, 0.5))
    fit = packet_velocity(state, Grid1D.spanning(0.0, x_max, 2001), times)
    assert fit.slope == pytest.approx(group_velocity(model, k_center), rel=0.05)
    assert fit.r_squared > 0.999


def test_track_peak_interpolates_parabola():
    x = np.linspace(0.0, 1.0, 11)
    assert track_peak(x, 1.0 - (x - 0.437) ** 2) == pytest.approx(0.437, abs=1e-12)
    with pytest.raises(NumericDomainError):
        track_peak(x, x)


def test_reach_radius():
    for w in (0.1, 1.0, 7.0):
        assert reach_radius(MASSLESS, w, 1.5) == pytest.approx(1.5)
    assert reach_radius(SCHROEDINGER, 2.0, 1.0) == pytest.approx(2.0)
    for w in (1.01, 2.0, 50.0):
        assert reach_radius(MASSIVE, w, 1.0) < 1.0
    with pytest.raises(OutOfBandError):
        reach_radius(MASSIVE, 0.5, 1.0)


def test_superoscillation_needed():
    assert all(superoscillation_needed(MASSLESS, 2.0, 1.0, w) for w in (0.1, 1.0, 100.0))
    assert superoscillation_needed_everywhere(MASSLESS, 2.0, 1.0)
    assert not superoscillation_needed_everywhere(SCHROEDINGER, 2.0, 1.0)
    assert not superoscillation_needed_everywhere(BOUNDED, 0.5, 1.0)

    # v_g t0 >= L once w >= m L^2 / (2 t0^2)
    assert superoscillation_needed(SCHROEDINGER, 3.0, 1.0, 4.0)
    assert not superoscillation_needed(SCHROEDINGER, 3.0, 1.0, 5.0)
    assert superoscillation_needed(SCHROEDINGER, 3.0, 1.0, 5.0, ingoing=True)
    assert superoscillation_needed_everywhere(SCHROEDINGER, 3.0, 1.0, ingoing=True)


@pytest.mark.parametrize(
    "dimension, oracle",
    [
        (1, lambda r: k0(r) / (2 * math.pi)),
        (2, lambda r: math.exp(-r) / (4 * math.pi * r)),
        (3, lambda r: k1(r) / (4 * math.pi**2 * r)),
    ],
)
def test_massive_equal_time_correlator(dimension, oracle):
    for r in (1.0, 2.0, 5.0):
        value = correlator(CorrelatorQuery(MASSIVE, dimension, r, 0.0))
        assert value.real == pytest.approx(oracle(r), rel=1e-6)
        assert abs(value.imag) < 1e-9 * abs(value.real)


def test_massive_correlator_decay_rate():
    r = np.linspace(5.0, 15.0, 11)
    values = [correlator(CorrelatorQuery(MASSIVE, 3, rr, 0.0)) for rr in r]
    fit = fit_decay_rate(r, values, 3)
    assert fit.slope == pytest.approx(1.0, rel=0.05)
    assert fit.r_squared > 0.999
    assert all(0 < abs(v) < 1e-3 for v in values)


def test_schroedinger_correlator_matches_free_propagator():
    points = [(r, dt) for r in (0.0, 0.5, 2.0, 5.0) for dt in (0.1, -0.4, 0.7, 1.5, -3.0)]
    for dimension in (1, 2, 3):
        for r, dt in points:
            value = correlator(CorrelatorQuery(SCHROEDINGER, dimension, r, dt))
            expected = _fresnel(1.0, dimension, r, dt)
            assert abs(value - expected) <= 1e-6 * abs(expected)


def test_schroedinger_correlator_with_heavier_mass():
    model = DispersionModel(DispersionKind.SCHROEDINGER, mass=2.5)
    value = correlator(CorrelatorQuery(model, 3, 1.5, 0.3))
    expected = _fresnel(2.5, 3, 1.5, 0.3)
    assert abs(value - expected) <= 1e-6 * abs(expected)


@pytest.mark.parametrize(
    "model, r, dt",
    [(MASSIVE, 3.0, 0.5), (SCHROEDINGER, 1.0, 0.8)],
)
def test_correlator_is_hermitian(model, r, dt):
    forward = correlator(CorrelatorQuery(model, 3, r, dt))
    backward = correlator(CorrelatorQuery(model, 3, r, -dt))
    assert abs(forward - np.conj(backward)) <= 1e-8 * abs(forward)


def test_unit_weight_regulated_correlator_is_poisson_kernel():
    r, epsilon = 2.0, 0.1
    one = regularized_correlator(CorrelatorQuery(SCHROEDINGER, 1, r, 0.0), epsilon)
    three = regularized_correlator(CorrelatorQuery(SCHROEDINGER, 3, r, 0.0), epsilon)
    assert one.real == pytest.approx(epsilon / (math.pi * (r**2 + epsilon**2)), rel=1e-8)
    assert three.real == pytest.approx(epsilon / (math.pi**2 * (r**2 + epsilon**2) ** 2), rel=1e-8)


def test_unit_weight_equal_time_correlator_vanishes_apart():
    value = correlator(CorrelatorQuery(SCHROEDINGER, 3, 2.0, 0.0))
    assert abs(value) < 1e-8


def test_unit_weight_coincidence_is_distributional():
    with pytest.raises(DistributionalError):
        correlator(CorrelatorQuery(SCHROEDINGER, 3, 0.0, 0.0))


def test_regulator_must_be_positive():
    with pytest.raises(NumericDomainError):
        regularized_correlator(CorrelatorQuery(MASSIVE, 3, 1.0, 0.0), 0.0)


def test_massless_line_is_infrared_divergent():
    with pytest.raises(NumericDomainError):
        correlator(CorrelatorQuery(MASSLESS, 1, 1.0, 0.0))
    value = correlator(CorrelatorQuery(MASSLESS, 3, 2.0, 0.0))
    assert value.real == pytest.approx(1 / (4 * math.pi**2 * 4.0), rel=1e-6)


def test_front_velocity_dichotomy():
    for dt in (0.05, 1.0):
        scale = (1.0 / (2 * math.pi * dt)) ** 1.5
        for r in np.linspace(0.0, 20.0, 5):
            assert abs(correlator(CorrelatorQuery(SCHROEDINGER, 3, r, dt))) > 0.5 * scale
    far = abs(correlator(CorrelatorQuery(MASSIVE, 3, 15.0, 0.0)))
    assert 0 < far < 1e-6
