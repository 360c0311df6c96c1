"""Wavepackets left by delta windows, reach radii and vacuum two-point correlators."""
from __future__ import annotations

from dataclasses import dataclass
import logging
import math
from typing import Callable, Optional, Sequence, Tuple

import numpy as np
from scipy.integrate import trapezoid

from .const import DEFAULT_EPSILON0
from .dispersion import (
    DispersionKind,
    DispersionModel,
    WeightRule,
    group_velocity,
    invert_omega,
    max_group_velocity,
    mode_weight,
    omega,
)
from .errors import NumericDomainError
from .fieldstate import ModeAmplitude
from .numerics import (
    ANGULAR_VOLUME,
    TWO_PI,
    Grid1D,
    LinearFit,
    angular_average,
    gauss_legendre_panels,
    linear_fit,
    richardson_extrapolate,
)

_LOGGER = logging.getLogger(__name__)

# The regulated integrand is cut where e^{-eps k} reaches e^-40.
_CUTOFF_EXPONENT = 40.0
_PANEL_ORDER = 8
_PANEL_CAP = 0.25
_PANEL_CHUNK = 2**17
_ROUNDOFF = 32.0 * np.finfo(float).eps

# Contour rotation for the Schroedinger propagator; the angle keeps the
# Bessel-kernel growth along the ray below e^5.
_MAX_ROTATION = np.pi / 8
_ROTATION_GROWTH = 20.0

_PHASE_STEP_LIMIT = np.pi / 2
_EDGE_FRACTION = 1e-6


@dataclass(frozen=True)
class CorrelatorQuery:
    """Vacuum two-point function <0|phi(x, t) phi(x', t')|0> at scalar separation."""

    model: DispersionModel
    dimension_d: int
    separation: float
    dt: float

    def __post_init__(self) -> None:
        if self.dimension_d not in ANGULAR_VOLUME:
            raise NumericDomainError(f"Dimension must be 1, 2 or 3, got {self.dimension_d}")
        if not (np.isfinite(self.separation) and self.separation >= 0):
            raise NumericDomainError(f"Separation must be finite and non-negative, got {self.separation}")
        if not np.isfinite(self.dt):
            raise NumericDomainError("Time difference must be finite")


def delta_window_state(
    model: DispersionModel,
    t0: float,
    k_grid: Grid1D,
    envelope: Optional[Tuple[float, float]] = None,
) -> ModeAmplitude:
    """State left in one dimension by a window concentrated at t = -t0.

    The amplitude is h(omega_k) e^{-i omega_k t0} on both the +k and -k branch;
    the grid holds |k| and the one-dimensional measure counts both. ``envelope``
    is (k_center, k_width) of a Gaussian carrier for narrowband packets.
    """
    if not np.isfinite(t0):
        raise NumericDomainError("t0 must be finite")
    if k_grid.start < 0:
        raise NumericDomainError("Wavenumber grid must be non-negative")
    k = k_grid.points()
    w = omega(model, k)
    values = mode_weight(model, w) * np.exp(-1j * w * t0)
    if envelope is not None:
        k_center, k_width = envelope
        if not (k_center >= 0 and k_width > 0):
            raise NumericDomainError(f"Invalid envelope (k_center={k_center}, k_width={k_width})")
        values = values * np.exp(-0.5 * ((k - k_center) / k_width) ** 2)

    raw = ModeAmplitude(k_grid, values, 1, model)
    norm = raw.norm()
    if norm == 0:
        raise NumericDomainError("Delta-window state vanishes on the wavenumber grid")
    return ModeAmplitude(k_grid, raw.values / norm, 1, model)


def _check_resolution(state: ModeAmplitude, r_max: float, t: float) -> None:
    speed = float(np.max(np.abs(group_velocity(state.model, state.points()))))
    phase_step = state.k_grid.step * (r_max + speed * abs(t))
    if phase_step > _PHASE_STEP_LIMIT:
        _LOGGER.warning(
            "Wavenumber step %.3g leaves %.2f rad per cell at |x| = %.4g, t = %.4g",
            state.k_grid.step,
            phase_step,
            r_max,
            t,
        )
    magnitude = np.abs(state.values)
    if magnitude[-1] > _EDGE_FRACTION * magnitude.max():
        _LOGGER.warning("State is truncated at the top of its grid (k = %.4g)", state.k_grid.stop)


def probe_amplitude(state: ModeAmplitude, x, t: float):
    """Field amplitude <0|phi(x, t)|state> by trapezoid quadrature on the state's grid."""
    x = np.asarray(x, dtype=float)
    r = np.abs(np.atleast_1d(x))
    _check_resolution(state, float(r.max()), t)

    k = state.points()
    w = state.omega_k()
    radial = (
        k ** (state.dimension_d - 1)
        * mode_weight(state.model, w)
        * state.values
        * np.exp(-1j * w * t)
    )
    kernel = angular_average(state.dimension_d, np.outer(r, k))
    out = trapezoid(kernel * radial, k, axis=1) / TWO_PI**state.dimension_d
    return complex(out[0]) if x.ndim == 0 else out


def track_peak(x, magnitude) -> float:
    """Peak position of a parabola through the largest sample and its neighbours."""
    x = np.asarray(x, dtype=float)
    magnitude = np.abs(np.asarray(magnitude))
    if x.shape != magnitude.shape or x.size < 3:
        raise NumericDomainError("Peak tracking needs at least three matching samples")
    i = int(np.argmax(magnitude))
    if i == 0 or i == x.size - 1:
        raise NumericDomainError(f"Peak sits on the edge of the sampled range (x = {x[i]:.6g})")
    curvature, slope, _ = np.polyfit(x[i - 1:i + 2], magnitude[i - 1:i + 2], 2)
    if curvature >= 0:
        return float(x[i])
    return float(-slope / (2.0 * curvature))


def packet_velocity(state: ModeAmplitude, x_grid: Grid1D, times: Sequence[float]) -> LinearFit:
    """Fit of the tracked |probe| peak against time; ``slope`` is the packet velocity."""
    x = x_grid.points()
    peaks = [track_peak(x, probe_amplitude(state, x, t)) for t in times]
    fit = linear_fit(np.asarray(times, dtype=float), peaks)
    _LOGGER.debug("Tracked %d peaks, velocity %.6g (R^2 %.6f)", len(peaks), fit.slope, fit.r_squared)
    return fit


def reach_radius(model: DispersionModel, w, t0: float):
    """Distance r0 = v_g(k(w)) t0 the mode of frequency w covers within t0."""
    if not (np.isfinite(t0) and t0 >= 0):
        raise NumericDomainError(f"t0 must be finite and non-negative, got {t0}")
    return group_velocity(model, invert_omega(model, w)) * t0


def superoscillation_needed(
    model: DispersionModel, L: float, t0: float, w: float, ingoing: bool = False
) -> bool:
    """True when the mode of frequency w cannot reach radius L within t0.

    Targets with an ingoing component always need superoscillations.
    """
    if ingoing:
        return True
    return bool(reach_radius(model, w, t0) < L)


def superoscillation_needed_everywhere(
    model: DispersionModel, L: float, t0: float, ingoing: bool = False
) -> bool:
    """True when no frequency of the band reaches radius L within t0."""
    if ingoing:
        return True
    return bool(max_group_velocity(model) * t0 < L)


def check_infrared(model: DispersionModel, dimension_d: int) -> None:
    """Raise when the vacuum correlator integral diverges at small k."""
    if model.weight_rule is not WeightRule.INVERSE_SQRT_TWO_OMEGA or omega(model, 0.0) > 0:
        return
    # h^2 = 1/(2 omega) with omega ~ k^p near k = 0
    power = 1 if model.kind is DispersionKind.RELATIVISTIC_MASSLESS else 2
    if dimension_d <= power:
        raise NumericDomainError(
            f"Correlator of {model.kind.value} with 1/sqrt(2 omega) weight is infrared divergent in d = {dimension_d}"
        )


def _panel_integral(integrand: Callable[[np.ndarray], np.ndarray], upper: float, rate: float) -> Tuple[complex, float]:
    """Composite Gauss-Legendre integral over [0, upper] and the sum of |terms|.

    ``rate`` bounds the phase derivative of the integrand.
    """
    width = _PANEL_CAP if rate <= 0 else min(_PANEL_CAP, np.pi / rate)
    n_panels = max(16, int(math.ceil(upper / width)))
    edges = np.linspace(0.0, upper, n_panels + 1)
    total, magnitude = 0j, 0.0
    for begin in range(0, n_panels, _PANEL_CHUNK):
        nodes, weights = gauss_legendre_panels(edges[begin:begin + _PANEL_CHUNK + 1], _PANEL_ORDER)
        terms = weights * integrand(nodes)
        total += complex(terms.sum())
        magnitude += float(np.abs(terms).sum())
    return total, magnitude


def _regulated_integral(q: CorrelatorQuery, epsilon: float) -> Tuple[complex, float]:
    model, d, r, dt = q.model, q.dimension_d, q.separation, q.dt
    upper = _CUTOFF_EXPONENT / epsilon
    speed = 0.0
    if dt != 0:
        speed = max_group_velocity(model)
        if not np.isfinite(speed):
            speed = float(group_velocity(model, upper))

    def integrand(k: np.ndarray) -> np.ndarray:
        w = omega(model, k)
        return (
            k ** (d - 1)
            * angular_average(d, k * r)
            * mode_weight(model, w) ** 2
            * np.exp(-1j * w * dt - epsilon * k)
        )

    value, magnitude = _panel_integral(integrand, upper, r + speed * abs(dt))
    scale = TWO_PI**d
    return value / scale, magnitude / scale


def regularized_correlator(q: CorrelatorQuery, epsilon: float) -> complex:
    """Correlator with the high-wavenumber regulator e^{-epsilon k} at fixed epsilon."""
    if not (np.isfinite(epsilon) and epsilon > 0):
        raise NumericDomainError(f"Regulator must be positive, got {epsilon}")
    check_infrared(q.model, q.dimension_d)
    value, _ = _regulated_integral(q, epsilon)
    return value


def _rotated_correlator(q: CorrelatorQuery) -> complex:
    """Schroedinger correlator at dt != 0 on the ray k = s e^{-i phi sign(dt)}."""
    mass, d, r, dt = q.model.mass, q.dimension_d, q.separation, q.dt
    if r == 0:
        phi = _MAX_ROTATION
    else:
        phi = min(_MAX_ROTATION, _ROTATION_GROWTH * abs(dt) / (r * r * mass))
    direction = complex(np.exp(-1j * math.copysign(phi, dt)))
    decay = abs(dt) * math.sin(2.0 * phi) / (2.0 * mass)
    growth = r * math.sin(phi)
    exponent = _CUTOFF_EXPONENT + _ROTATION_GROWTH / 4.0
    upper = (growth + math.sqrt(growth**2 + 4.0 * decay * exponent)) / (2.0 * decay)
    unit = q.model.weight_rule is WeightRule.UNIT

    def integrand(s: np.ndarray) -> np.ndarray:
        k = s * direction
        w = k * k / (2.0 * mass)
        weight = 1.0 if unit else 0.5 / w
        return k ** (d - 1) * angular_average(d, k * r) * weight * np.exp(-1j * w * dt)

    value, _ = _panel_integral(integrand, upper, r + abs(dt) * upper / mass)
    _LOGGER.debug("Rotated contour by %.4g rad up to |k| = %.4g", phi, upper)
    return value * direction / TWO_PI**d


def correlator(q: CorrelatorQuery, epsilon0: float = DEFAULT_EPSILON0) -> complex:
    """Vacuum correlator as the epsilon -> 0 limit of the regulated radial integral.

    Raises DistributionalError when the limit does not exist, as for the
    unit-weight correlator at coincidence.
    """
    check_infrared(q.model, q.dimension_d)
    if q.model.kind is DispersionKind.SCHROEDINGER and q.dt != 0:
        return _rotated_correlator(q)

    floor = [0.0]

    def estimate(epsilon: float) -> complex:
        value, magnitude = _regulated_integral(q, epsilon)
        floor[0] = max(floor[0], _ROUNDOFF * magnitude)
        return value

    value, levels = richardson_extrapolate(estimate, epsilon0, noise=lambda: floor[0])
    _LOGGER.debug(
        "Correlator at r = %.6g, dt = %.6g settled after %d regulator levels", q.separation, q.dt, levels
    )
    return value


def fit_decay_rate(r, values, dimension_d: int) -> LinearFit:
    """Exponential decay rate of |C(r)| with the r^(-d/2) prefactor removed.

    Fits -log(|C| r^(d/2)) against r, so ``slope`` is the rate.
    """
    r = np.asarray(r, dtype=float)
    magnitude = np.abs(np.asarray(values))
    if r.shape != magnitude.shape:
        raise NumericDomainError("Separations and values differ in length")
    if np.any(r <= 0) or np.any(magnitude == 0):
        raise NumericDomainError("Decay fit needs positive separations and nonzero values")
    return linear_fit(r, -np.log(magnitude * r ** (dimension_d / 2.0)))
