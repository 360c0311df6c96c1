"""Tests for target states, amplitudes, fidelity and the infidelity tail."""
import math

import numpy as np
import pytest
from scipy.integrate import quad

from .dispersion import DispersionKind, DispersionModel, WeightRule, omega_prime
from .errors import NumericDomainError
from .fieldstate import (
    ModeAmplitude,
    Profile,
    ProfileKind,
    TargetState,
    desired_amplitude,
    desired_time_window,
    fidelity,
    generated_amplitude,
    infidelity_tail,
    profile_transform,
    radial_target_transform,
    success_probability,
    tail_to_cutoff,
)
from .numerics import DomainKind, Grid1D, SampledFunction
from .superosc import (
    BasisKind,
    Mollifier,
    PlanTerm,
    SuperoscParams,
    WindowPlan,
    evaluate_plan,
    synthesize_window,
)

MASSLESS = DispersionModel(DispersionKind.RELATIVISTIC_MASSLESS)
MASSLESS_UNIT = DispersionModel(DispersionKind.RELATIVISTIC_MASSLESS, weight_rule=WeightRule.UNIT)
MASSIVE = DispersionModel(DispersionKind.RELATIVISTIC_MASSIVE, mass=1.0)
SCHROEDINGER = DispersionModel(DispersionKind.SCHROEDINGER, mass=1.0)
BOUNDED = DispersionModel(DispersionKind.BOUNDED_FREQUENCY, max_frequency=20.0)

SHELL = Profile(ProfileKind.GAUSSIAN_SHELL, width=1.0, L=2.0)
BALL = Profile(ProfileKind.GAUSSIAN_BALL, width=0.8)


def _target(profile=SHELL, model=MASSLESS, dimension=1, gap=0.0):
    return TargetState(dimension, profile, gap, model)


def test_profiles_validate_parameters():
    with pytest.raises(NumericDomainError):
        Profile(ProfileKind.GAUSSIAN_BALL, width=0.0)
    with pytest.raises(NumericDomainError):
        Profile(ProfileKind.GAUSSIAN_SHELL, width=1.0)
    with pytest.raises(NumericDomainError):
        TargetState(4, BALL, 0.0, MASSLESS)
    with pytest.raises(NumericDomainError):
        TargetState(1, BALL, -1.0, MASSLESS)


def test_one_dimensional_transform_is_cosine_transform():
    k = np.array([0.0, 0.4, 1.3, 3.0])
    expected = [
        2 * quad(lambda r: SHELL(r) * math.cos(kk * r), 0, 20, limit=200)[0] for kk in k
    ]
    np.testing.assert_allclose(profile_transform(SHELL, 1, k), expected, rtol=1e-10, atol=1e-12)


@pytest.mark.parametrize(
    "profile, analytic",
    [
        (BALL, lambda k: math.sqrt(math.pi) * 0.8 * np.exp(-((0.8 * k) ** 2) / 4)),
        (Profile(ProfileKind.EXPONENTIAL_BALL, width=0.5), lambda k: 1.0 / (1 + 0.25 * k**2)),
        (Profile(ProfileKind.SECH_BALL, width=0.7), lambda k: 1.4 / np.cosh(0.7 * k)),
    ],
)
def test_one_dimensional_closed_forms(profile, analytic):
    k = np.linspace(0.0, 30.0, 61)
    np.testing.assert_allclose(profile_transform(profile, 1, k), analytic(k), rtol=1e-9, atol=1e-12)


def test_three_dimensional_shell_closed_form():
    L, w = 6.0, 1.0
    shell = Profile(ProfileKind.GAUSSIAN_SHELL, width=w, L=L)
    k = np.array([0.3, 1.0, 2.2, 4.5])
    gaussian = w * math.sqrt(math.pi) * np.exp(-((k * w) ** 2) / 4)
    expected = 4 * math.pi / k * gaussian * (L * np.sin(k * L) + k * w**2 / 2 * np.cos(k * L))
    np.testing.assert_allclose(profile_transform(shell, 3, k), expected, rtol=1e-9, atol=1e-12)


def test_two_dimensional_ball_closed_form():
    k = np.array([0.0, 0.5, 2.0, 6.0])
    expected = math.pi * 0.8**2 * np.exp(-((0.8 * k) ** 2) / 4)
    np.testing.assert_allclose(profile_transform(BALL, 2, k), expected, rtol=1e-9, atol=1e-12)


def test_radial_transform_uses_shifted_frequency():
    target = _target(BALL, MASSIVE, 3)
    freqs = Grid1D.spanning(0.0, 5.0, 11)
    spectrum = radial_target_transform(target, freqs)
    k = np.sqrt((freqs.points() + 1.0) ** 2 - 1.0)
    np.testing.assert_allclose(spectrum.values, profile_transform(BALL, 3, k), rtol=1e-10)
    assert spectrum.domain_kind is DomainKind.ANGULAR_FREQUENCY


def test_desired_amplitude_is_unit_norm_gaussian():
    target = _target(BALL, MASSLESS_UNIT, 1)
    grid = Grid1D.spanning(0.0, 8.0, 400)
    amplitude = desired_amplitude(target, grid)
    assert amplitude.norm() == pytest.approx(1.0, abs=1e-10)
    k = grid.points()
    shape = np.exp(-((0.8 * k) ** 2) / 4)
    ratio = amplitude.values / shape
    np.testing.assert_allclose(ratio, ratio[0], rtol=1e-8)


def test_desired_time_window_of_massless_line_is_profile():
    target = _target(BALL, MASSLESS_UNIT, 1)
    freqs = Grid1D.spanning(0.0, 16.0, 4001)
    times = Grid1D.spanning(-4.0, 4.0, 81)
    window = desired_time_window(target, times, freqs)
    np.testing.assert_allclose(window.values.real, BALL(np.abs(times.points())), atol=1e-9)
    assert np.all(window.values.imag == 0)


def test_zero_spectrum_rejected():
    target = _target(BALL, MASSLESS_UNIT, 1)
    freqs = Grid1D.spanning(0.0, 5.0, 11)
    zero = SampledFunction(freqs, np.zeros(11), DomainKind.ANGULAR_FREQUENCY)
    with pytest.raises(NumericDomainError):
        generated_amplitude(zero, target, Grid1D.spanning(0.0, 5.0, 21))


def test_generated_amplitude_of_flat_spectrum_is_flat():
    target = _target(BALL, MASSLESS_UNIT, 1)
    freqs = Grid1D.spanning(0.0, 5.0, 11)
    flat = SampledFunction(freqs, np.full(11, 2.0 - 1.0j), DomainKind.ANGULAR_FREQUENCY)
    amplitude = generated_amplitude(flat, target, Grid1D.spanning(0.0, 5.0, 21))
    np.testing.assert_allclose(amplitude.values, amplitude.values[0], rtol=1e-12)


def test_generated_amplitude_requires_coverage():
    target = _target(BALL, MASSLESS_UNIT, 1)
    freqs = Grid1D.spanning(0.0, 2.0, 11)
    flat = SampledFunction(freqs, np.ones(11), DomainKind.ANGULAR_FREQUENCY)
    with pytest.raises(NumericDomainError):
        generated_amplitude(flat, target, Grid1D.spanning(0.0, 5.0, 21))


MODEL_RANGES = [
    (MASSLESS, (0.05, 10.0)),
    (MASSIVE, (0.0, 10.0)),
    (SCHROEDINGER, (0.0, 12.0)),
    (BOUNDED, (0.0, 12.0)),
]


def _matched_fidelity(profile, model, dimension, k_range):
    target = _target(profile, model, dimension)
    k_grid = Grid1D.spanning(*k_range, 512)
    freqs = Grid1D.spanning(omega_prime(model, k_range[0]), omega_prime(model, k_range[1]), 4096)
    spectrum = radial_target_transform(target, freqs)
    generated = generated_amplitude(spectrum, target, k_grid)
    return fidelity(generated, desired_amplitude(target, k_grid))


@pytest.mark.parametrize("dimension", [1, 2, 3])
@pytest.mark.parametrize("model, k_range", MODEL_RANGES)
def test_matching_condition_gives_unit_fidelity(model, k_range, dimension):
    assert _matched_fidelity(SHELL, model, dimension, k_range) == pytest.approx(1.0, abs=1e-8)


@pytest.mark.parametrize(
    "profile, model, dimension, k_range",
    [
        (BALL, SCHROEDINGER, 2, (0.0, 12.0)),
        (BALL, BOUNDED, 3, (0.0, 12.0)),
        (Profile(ProfileKind.EXPONENTIAL_BALL, width=1.0), MASSIVE, 1, (0.0, 30.0)),
        (Profile(ProfileKind.SECH_BALL, width=1.0), SCHROEDINGER, 3, (0.0, 20.0)),
    ],
)
def test_matching_condition_for_other_profiles(profile, model, dimension, k_range):
    assert _matched_fidelity(profile, model, dimension, k_range) == pytest.approx(1.0, abs=1e-8)


def test_fidelity_properties():
    grid = Grid1D.spanning(0.0, 4.0, 81)
    model = MASSLESS_UNIT
    k = grid.points()
    a = ModeAmplitude(grid, np.exp(-k**2) * (1 + 0.3j * k), 3, model)
    b = ModeAmplitude(grid, 5.0 * np.exp(1.1j) * a.values, 3, model)
    assert fidelity(a, a) == pytest.approx(1.0, abs=1e-14)
    assert fidelity(a, b) == pytest.approx(1.0, abs=1e-14)

    c = ModeAmplitude(grid, np.exp(-((k - 2) ** 2)), 3, model)
    assert fidelity(a, c) == pytest.approx(fidelity(c, a), abs=1e-15)

    left = ModeAmplitude(grid, np.where(k < 2, 1.0, 0.0), 3, model)
    right = ModeAmplitude(grid, np.where(k >= 2, 1.0, 0.0), 3, model)
    assert fidelity(left, right) == 0.0

    other = ModeAmplitude(Grid1D.spanning(0.0, 4.0, 41), np.ones(41), 3, model)
    with pytest.raises(NumericDomainError):
        fidelity(a, other)


def _end_to_end_fidelity(m_index, omega_c=2.0, design_band=8.0):
    target = _target(SHELL, MASSLESS, 1)
    omega_grid = Grid1D.spanning(0.0, 8.0, 2048)
    times = Grid1D.spanning(-7.0, 7.0, 701)
    desired = desired_time_window(target, times, Grid1D.spanning(0.0, design_band, 2048))
    plan = synthesize_window(desired, 1.0, omega_c, m_index)
    k_grid = Grid1D.spanning(0.005, 7.9, 1024)
    generated = generated_amplitude(evaluate_plan(plan, omega_grid), target, k_grid)
    return fidelity(generated, desired_amplitude(target, k_grid))


def test_synthesized_window_improves_with_m_index():
    ladder = [_end_to_end_fidelity(m_index) for m_index in (4, 6, 8, 10)]
    assert ladder[-1] >= 0.95
    assert all(later >= earlier - 1e-3 for earlier, later in zip(ladder, ladder[1:]))


def test_synthesized_window_improves_with_cutoff():
    # each window is designed from the target band [0, omega_c] only
    ladder = [_end_to_end_fidelity(10, omega_c, omega_c) for omega_c in (1.0, 1.5, 2.0, 2.5)]
    assert all(later >= earlier - 1e-3 for earlier, later in zip(ladder, ladder[1:]))
    assert ladder[-1] > ladder[0]


def _single_pair_plan(t_prime, m_index=2):
    params = SuperoscParams.for_offset(t_prime, 1.0, m_index)
    return WindowPlan(
        (PlanTerm(t_prime, 1.0 + 0j, BasisKind.SUPEROSC_PAIR, params),), 1.0, t_prime, 1.0, m_index
    )


def test_success_probability_scales_with_coupling():
    target = _target(BALL, MASSLESS_UNIT, 1)
    k_grid = Grid1D.spanning(0.0, 1.0, 101)
    plan = _single_pair_plan(1.0)
    small = success_probability(plan, target, 1e-3, k_grid)
    large = success_probability(plan, target, 2e-3, k_grid)
    assert large.probability == pytest.approx(4 * small.probability, rel=1e-12)
    assert small.log_window_energy == large.log_window_energy
    assert small.perturbative


def test_success_probability_with_mollifier():
    target = _target(BALL, MASSLESS_UNIT, 1)
    k_grid = Grid1D.spanning(0.0, 1.0, 101)
    mollifier = Mollifier(8, 0.05)
    inner = mollifier.inner_support(1.0)
    params = SuperoscParams.for_offset(1.0, inner, 2)
    plan = WindowPlan((PlanTerm(1.0, 1.0 + 0j, BasisKind.SUPEROSC_PAIR, params),), inner, 1.0, 1.0, 2)
    plain = success_probability(plan, target, 1e-3, k_grid)
    smooth = success_probability(plan, target, 1e-3, k_grid, mollifier=mollifier)
    # a unit-integral bump cannot raise the window's L2 norm
    assert smooth.log_window_energy < plain.log_window_energy + 1e-6
    assert smooth.log_probability >= plain.log_probability - 1e-3


def test_interior_window_is_not_suppressed():
    target = _target(BALL, MASSLESS_UNIT, 1)
    k_grid = Grid1D.spanning(0.0, 4.0, 201)
    terms = tuple(
        PlanTerm(t, 0.02 * math.sin(math.pi * t) ** 2 + 0j, BasisKind.IMPULSE)
        for t in np.linspace(-0.9, -0.1, 41)
    )
    result = success_probability(WindowPlan(terms, 1.0, 0.9, 4.0, 4), target, 1e-3, k_grid)
    assert result.log_probability > 2 * math.log(1e-3) - 10


def test_success_probability_cost_of_superoscillation():
    target = _target(BALL, MASSLESS_UNIT, 1)
    k_grid = Grid1D.spanning(0.0, 1.0, 101)
    b = 4 * math.pi + math.pi / 4
    exponents, log_p = [], []
    for t_prime in (1.0, 2.0, 3.0, 4.0, 5.0):
        cosh_a = 2 * t_prime + 1
        exponents.append(b * math.sqrt(cosh_a**2 - 1))
        log_p.append(success_probability(_single_pair_plan(t_prime), target, 1e-3, k_grid).log_probability)
    slope = np.polyfit(exponents, log_p, 1)[0]
    assert slope == pytest.approx(-2.0, rel=0.1)


def test_infidelity_tail_limits():
    target = _target(BALL, MASSIVE, 3)
    assert infidelity_tail(target, -0.5) == 1.0
    assert infidelity_tail(target, 1e6) == 0.0
    values = [infidelity_tail(target, w) for w in np.linspace(0.0, 20.0, 41)]
    assert all(a >= b for a, b in zip(values, values[1:]))
    assert values[0] == pytest.approx(1.0, abs=1e-6)

    bounded = _target(BALL, BOUNDED, 3)
    assert infidelity_tail(bounded, 25.0) == 0.0


def test_infidelity_tail_matches_direct_quadrature():
    target = _target(BALL, MASSLESS_UNIT, 1)

    def weight(k):
        return math.pi * 0.64 * math.exp(-((0.8 * k) ** 2) / 2)

    total = quad(weight, 0, np.inf)[0]
    for omega_c in (0.5, 2.0, 4.0):
        expected = quad(weight, omega_c, np.inf)[0] / total
        assert infidelity_tail(target, omega_c) == pytest.approx(expected, rel=2e-3)


def test_tail_to_cutoff_round_trip():
    target = _target(SHELL, MASSIVE, 3)
    for eta in (0.3, 1e-2, 1e-5):
        assert infidelity_tail(target, tail_to_cutoff(target, eta)) == pytest.approx(eta, rel=1e-6)
    with pytest.raises(NumericDomainError):
        tail_to_cutoff(target, 1e-200)
    with pytest.raises(NumericDomainError):
        tail_to_cutoff(target, 1.5)


def test_exponential_spectrum_gives_logarithmic_cutoff():
    width = 0.7
    target = _target(Profile(ProfileKind.SECH_BALL, width=width), MASSLESS_UNIT, 1)
    cutoffs = [tail_to_cutoff(target, eta) for eta in (1e-3, 1e-4, 1e-5, 1e-6)]
    steps = np.diff(cutoffs)
    np.testing.assert_allclose(steps, math.log(10) / (2 * width), rtol=0.01)


def test_power_law_spectrum_gives_power_law_cutoff():
    target = _target(Profile(ProfileKind.EXPONENTIAL_BALL, width=1.0), MASSLESS_UNIT, 1)
    etas = np.array([1e-3, 1e-4, 1e-5, 1e-6])
    cutoffs = np.array([tail_to_cutoff(target, eta) for eta in etas])
    slope, _ = np.polyfit(np.log(1 / etas), np.log(cutoffs), 1)
    assert slope == pytest.approx(1 / 3, rel=0.03)
