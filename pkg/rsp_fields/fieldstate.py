"""Desired and generated single-particle states, overlaps and probabilities."""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
import logging
import math
from typing import Optional, Tuple

import numpy as np
from scipy.integrate import cumulative_trapezoid
from scipy.interpolate import CubicSpline

from .const import PERTURBATIVE_LIMIT
from .dispersion import (
    DispersionModel,
    band,
    invert_omega_prime,
    mode_weight,
    omega,
    omega_prime,
)
from .errors import NumericDomainError
from .numerics import (
    ANGULAR_VOLUME,
    TWO_PI,
    DomainKind,
    Grid1D,
    SampledFunction,
    angular_average,
    dft_freq_to_time,
    gauss_legendre_panels,
    invert_monotone,
)
from .superosc import Mollifier, WindowPlan, plan_spectrum_at, window_energy

_LOGGER = logging.getLogger(__name__)

_RADIAL_NODES = 12
_MIN_RADIAL_PANELS = 64
_CHUNK_ELEMENTS = 2**22
_TAIL_POINTS = 2048
_TAIL_FLOOR = 1e-300
_COVERAGE_SLACK = 1e-9


class ProfileKind(str, Enum):
    """Radial shapes F(r) of the target excitation."""

    GAUSSIAN_SHELL = "gaussian_shell"
    GAUSSIAN_BALL = "gaussian_ball"
    EXPONENTIAL_BALL = "exponential_ball"
    SECH_BALL = "sech_ball"


# Radial cut-off and spectral extent, in units of the width.
_PROFILE_EXTENT = {
    ProfileKind.GAUSSIAN_SHELL: (12.0, 16.0),
    ProfileKind.GAUSSIAN_BALL: (12.0, 16.0),
    ProfileKind.EXPONENTIAL_BALL: (40.0, 400.0),
    ProfileKind.SECH_BALL: (30.0, 40.0),
}


@dataclass(frozen=True)
class Profile:
    """Spherically symmetric radial profile F(r)."""

    kind: ProfileKind
    width: float
    L: float = 0.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", ProfileKind(self.kind))
        if not (np.isfinite(self.width) and self.width > 0):
            raise NumericDomainError(f"Profile width must be positive, got {self.width}")
        if self.kind is ProfileKind.GAUSSIAN_SHELL:
            if not (np.isfinite(self.L) and self.L > 0):
                raise NumericDomainError(f"gaussian_shell needs a positive radius L, got {self.L}")

    def __call__(self, r) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        w = self.width
        if self.kind is ProfileKind.GAUSSIAN_SHELL:
            return np.exp(-(((r - self.L) / w) ** 2))
        if self.kind is ProfileKind.GAUSSIAN_BALL:
            return np.exp(-((r / w) ** 2))
        if self.kind is ProfileKind.EXPONENTIAL_BALL:
            return np.exp(-r / w)
        return 1.0 / np.cosh(np.pi * r / (2.0 * w))

    @property
    def radial_extent(self) -> float:
        """Radius beyond which F is negligible."""
        return self.L + _PROFILE_EXTENT[self.kind][0] * self.width

    @property
    def spectral_extent(self) -> float:
        """Wavenumber beyond which the transform carries negligible weight."""
        return _PROFILE_EXTENT[self.kind][1] / self.width


@dataclass(frozen=True)
class TargetState:
    """Spherically symmetric single excitation centred on the detector."""

    dimension_d: int
    profile: Profile
    detector_gap_omega: float
    model: DispersionModel

    def __post_init__(self) -> None:
        if self.dimension_d not in ANGULAR_VOLUME:
            raise NumericDomainError(f"Dimension must be 1, 2 or 3, got {self.dimension_d}")
        if not (np.isfinite(self.detector_gap_omega) and self.detector_gap_omega >= 0):
            raise NumericDomainError("Detector gap must be finite and non-negative")

    @property
    def omega0(self) -> float:
        """Spectral floor omega(0) + Omega of the window frame."""
        return omega(self.model, 0.0) + self.detector_gap_omega


@dataclass(frozen=True, eq=False)
class ModeAmplitude:
    """Single-particle amplitude sampled on a wavenumber grid."""

    k_grid: Grid1D
    values: np.ndarray
    dimension_d: int
    model: DispersionModel

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=complex)
        if values.shape != (self.k_grid.count,):
            raise NumericDomainError("Amplitude length does not match its wavenumber grid")
        if not np.all(np.isfinite(values)):
            raise NumericDomainError("Amplitude contains non-finite values")
        object.__setattr__(self, "values", values)

    def points(self) -> np.ndarray:
        return self.k_grid.points()

    def omega_k(self) -> np.ndarray:
        return omega(self.model, self.points())

    def inner(self, other: ModeAmplitude) -> complex:
        """<self|other> with the d-dimensional wavenumber measure."""
        measure = _measure(self.k_grid, self.dimension_d)
        return complex(np.sum(np.conj(self.values) * other.values * measure))

    def norm(self) -> float:
        return math.sqrt(max(self.inner(self).real, 0.0))


def _measure(k_grid: Grid1D, dimension_d: int) -> np.ndarray:
    k = k_grid.points()
    if k_grid.start < 0:
        raise NumericDomainError("Wavenumber grid must be non-negative")
    return ANGULAR_VOLUME[dimension_d] / TWO_PI**dimension_d * k ** (dimension_d - 1) * k_grid.step


def _normalized(k_grid: Grid1D, values: np.ndarray, target: TargetState, what: str) -> ModeAmplitude:
    raw = ModeAmplitude(k_grid, values, target.dimension_d, target.model)
    norm = raw.norm()
    if norm == 0:
        raise NumericDomainError(f"{what} has zero norm on the wavenumber grid")
    return ModeAmplitude(k_grid, raw.values / norm, target.dimension_d, target.model)


def profile_transform(profile: Profile, dimension_d: int, k) -> np.ndarray:
    """F~(k) = integral dr r^(d-1) F(r) (angular average of e^{ik.x}) on composite Gauss-Legendre panels."""
    k = np.atleast_1d(np.asarray(k, dtype=float))
    radius = profile.radial_extent
    out = np.empty(k.shape, dtype=float)
    order = np.argsort(k)
    begin = 0
    while begin < k.size:
        # panels sized for the largest wavenumber of the chunk
        k_top = k[order[min(begin + 1024, k.size) - 1]]
        n_panels = max(_MIN_RADIAL_PANELS, int(math.ceil(2.0 * k_top * radius / np.pi)))
        nodes, weights = gauss_legendre_panels(np.linspace(0.0, radius, n_panels + 1), _RADIAL_NODES)
        radial = weights * nodes ** (dimension_d - 1) * profile(nodes)
        rows = max(1, min(1024, _CHUNK_ELEMENTS // nodes.size))
        block = order[begin:begin + rows]
        kernel = angular_average(dimension_d, np.outer(k[block], nodes))
        out[block] = kernel @ radial
        begin += rows
    return out


def radial_target_transform(target: TargetState, freq_grid: Grid1D) -> SampledFunction:
    """Desired window spectrum at omega' = omega_k - omega(0), i.e. F~(k(omega'))."""
    k = invert_omega_prime(target.model, freq_grid.points())
    values = profile_transform(target.profile, target.dimension_d, k)
    _LOGGER.debug(
        "Radial transform of %s on %d frequencies", target.profile.kind.value, freq_grid.count
    )
    return SampledFunction(freq_grid, values, DomainKind.ANGULAR_FREQUENCY)


def desired_time_window(
    target: TargetState, time_grid: Grid1D, omega_grid: Grid1D
) -> SampledFunction:
    """Temporal window whose spectrum reproduces the desired one on omega' >= 0."""
    return dft_freq_to_time(radial_target_transform(target, omega_grid), time_grid)


def desired_amplitude(target: TargetState, k_grid: Grid1D) -> ModeAmplitude:
    """Unit-norm amplitude h(omega_k) F~(k)."""
    k = k_grid.points()
    values = mode_weight(target.model, omega(target.model, k)) * profile_transform(
        target.profile, target.dimension_d, k
    )
    amplitude = _normalized(k_grid, values, target, "Desired amplitude")

    uncovered = infidelity_tail(target, float(omega_prime(target.model, k_grid.stop)))
    if uncovered > 1e-3:
        _LOGGER.warning(
            "Wavenumber grid up to %.4g leaves %.2g of the target weight outside", k_grid.stop, uncovered
        )
    return amplitude


def generated_amplitude(
    spectrum: SampledFunction, target_meta: TargetState, k_grid: Grid1D
) -> ModeAmplitude:
    """Unit-norm amplitude eps~(omega'_k) h(omega_k) of the post-selected state."""
    if spectrum.domain_kind is not DomainKind.ANGULAR_FREQUENCY:
        raise NumericDomainError("generated_amplitude needs an angular-frequency spectrum")
    k = k_grid.points()
    w = omega_prime(target_meta.model, k)
    slack = _COVERAGE_SLACK * max(1.0, abs(spectrum.grid.stop))
    if w.min() < spectrum.grid.start - slack or w.max() > spectrum.grid.stop + slack:
        raise NumericDomainError(
            f"Spectrum [{spectrum.grid.start:.6g}, {spectrum.grid.stop:.6g}] does not cover "
            f"omega' in [{w.min():.6g}, {w.max():.6g}]"
        )
    points = spectrum.points()
    sampled = CubicSpline(points, spectrum.values.real)(w) + 1j * CubicSpline(
        points, spectrum.values.imag
    )(w)
    values = sampled * mode_weight(target_meta.model, omega(target_meta.model, k))
    return _normalized(k_grid, values, target_meta, "Generated amplitude")


def fidelity(a: ModeAmplitude, b: ModeAmplitude) -> float:
    """|<a|b>| / (|a| |b|), clipped to [0, 1]."""
    if a.k_grid != b.k_grid or a.dimension_d != b.dimension_d:
        raise NumericDomainError("Amplitudes live on different grids or dimensions")
    norms = a.norm() * b.norm()
    if norms == 0:
        raise NumericDomainError("Fidelity of a zero amplitude is undefined")
    return float(np.clip(abs(a.inner(b)) / norms, 0.0, 1.0))


@dataclass(frozen=True)
class SuccessProbability:
    """Post-selection probability with the window scaled to unit L2 norm."""

    probability: float
    log_probability: float
    log_window_energy: float
    perturbative: bool


def success_probability(
    plan: WindowPlan,
    target_meta: TargetState,
    coupling_lambda: float,
    k_grid: Grid1D,
    time_count: int = 2**13 + 1,
    spike_width: Optional[float] = None,
    mollifier: Optional[Mollifier] = None,
) -> SuccessProbability:
    """First-order excitation probability lambda^2 N1 for a unit-norm window."""
    if coupling_lambda <= 0:
        raise NumericDomainError("coupling_lambda must be positive")
    k = k_grid.points()
    w = omega_prime(target_meta.model, k)
    spectrum = plan_spectrum_at(plan, w)
    if mollifier is not None:
        spectrum = spectrum * mollifier.multiplier(w)
    weighted = spectrum * mode_weight(target_meta.model, omega(target_meta.model, k))
    n1 = float(np.sum(np.abs(weighted) ** 2 * _measure(k_grid, target_meta.dimension_d)))
    if n1 == 0:
        raise NumericDomainError("Window spectrum vanishes on the wavenumber grid")

    support = plan.t0 + (mollifier.tau if mollifier is not None else 0.0)
    energy = window_energy(plan, Grid1D.spanning(-support, 0.0, time_count), spike_width, mollifier)
    log_p = 2.0 * math.log(coupling_lambda) + math.log(n1) - energy.log_energy
    probability = math.exp(log_p) if log_p < 700 else math.inf
    perturbative = probability <= PERTURBATIVE_LIMIT
    if not perturbative:
        _LOGGER.warning(
            "lambda^2 N1 = %.3g exceeds %.2g; first-order perturbation theory is unreliable",
            probability,
            PERTURBATIVE_LIMIT,
        )
    return SuccessProbability(probability, log_p, energy.log_energy, perturbative)


@lru_cache(maxsize=64)
def _tail_table(target: TargetState) -> Tuple[np.ndarray, np.ndarray, float]:
    """Wavenumber nodes, log of the weight above each node, and the total weight."""
    width = target.profile.width
    k = np.geomspace(1e-4 / width, target.profile.spectral_extent, _TAIL_POINTS)
    lower, upper = band(target.model)
    if np.isfinite(upper):
        k = k[omega(target.model, k) < upper]
    weight = (
        mode_weight(target.model, omega(target.model, k)) ** 2
        * profile_transform(target.profile, target.dimension_d, k) ** 2
        * k ** (target.dimension_d - 1)
    )
    above = cumulative_trapezoid(weight[::-1], -k[::-1], initial=0.0)[::-1]
    total = float(above[0])
    if total <= 0:
        raise NumericDomainError("Target profile has zero spectral weight")
    return k, np.log(np.maximum(above, _TAIL_FLOOR * total)), total


def infidelity_tail(target: TargetState, omega_c: float) -> float:
    """Fraction of the desired state's weight carried by modes with omega' > omega_c."""
    if omega_c < 0:
        return 1.0
    _, upper = band(target.model)
    if omega_c + omega(target.model, 0.0) >= upper:
        return 0.0
    k, log_above, total = _tail_table(target)
    k_c = float(invert_omega_prime(target.model, omega_c))
    if k_c <= k[0]:
        return 1.0
    if k_c >= k[-1]:
        return 0.0
    return float(min(1.0, math.exp(np.interp(k_c, k, log_above)) / total))


def tail_to_cutoff(target: TargetState, eta: float) -> float:
    """Band edge omega_c at which the excluded weight fraction equals eta."""
    if not 0 < eta < 1:
        raise NumericDomainError(f"eta must lie in (0, 1), got {eta}")
    k, _, _ = _tail_table(target)
    lowest = float(omega_prime(target.model, k[0]))
    highest = float(omega_prime(target.model, k[-2]))
    floor = infidelity_tail(target, highest)
    if eta <= floor:
        raise NumericDomainError(f"eta = {eta:.3g} is below the numerical floor {floor:.3g}")
    if eta >= infidelity_tail(target, lowest):
        raise NumericDomainError(f"eta = {eta:.3g} is not attainable inside the band")
    return invert_monotone(lambda w: infidelity_tail(target, w), eta, (lowest, highest))
