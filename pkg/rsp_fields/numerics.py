"""Numerical kernels: Bessel functions, quadrature, direct Fourier sums and extrapolation."""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
import logging
from typing import Callable, NamedTuple, Optional, Tuple

import numpy as np
from scipy import special
from scipy.optimize import root_scalar

from .const import DEFAULT_QUADRATURE_TOL, PERIODIC_MAX_SAMPLES
from .errors import DistributionalError, NumericDomainError, PrecisionError

_LOGGER = logging.getLogger(__name__)

TWO_PI = 2.0 * np.pi

# Largest number of complex exponentials formed at once by the direct sums.
_CHUNK_ELEMENTS = 2**22

_SUPPORTED_ORDERS = (-0.5, 0.0, 0.5, 1.0)

# Surface measure of the unit sphere in d dimensions (two points for d = 1).
ANGULAR_VOLUME = {1: 2.0, 2: TWO_PI, 3: 2.0 * TWO_PI}


class DomainKind(str, Enum):
    """Physical coordinate a sampled function lives on."""

    TIME = "time"
    ANGULAR_FREQUENCY = "angular_frequency"
    RADIUS = "radius"
    WAVENUMBER = "wavenumber"


@dataclass(frozen=True)
class Grid1D:
    """Uniform grid ``start + step * j`` for ``j = 0 .. count - 1``."""

    start: float
    step: float
    count: int

    def __post_init__(self) -> None:
        if not (np.isfinite(self.start) and np.isfinite(self.step)):
            raise NumericDomainError("Grid start and step must be finite")
        if self.step <= 0:
            raise NumericDomainError(f"Grid step must be positive, got {self.step}")
        if int(self.count) != self.count or self.count < 2:
            raise NumericDomainError(f"Grid needs at least 2 points, got {self.count}")
        if not np.isfinite(self.start + self.step * (self.count - 1)):
            raise NumericDomainError("Grid end point is not finite")

    @classmethod
    def spanning(cls, lower: float, upper: float, count: int) -> Grid1D:
        """Return the grid with both end points on ``[lower, upper]``."""
        if upper <= lower:
            raise NumericDomainError(f"Empty span [{lower}, {upper}]")
        return cls(float(lower), (upper - lower) / (count - 1), int(count))

    @property
    def stop(self) -> float:
        return self.start + self.step * (self.count - 1)

    def points(self) -> np.ndarray:
        return self.start + self.step * np.arange(self.count)


@dataclass(frozen=True, eq=False)
class SampledFunction:
    """Complex samples of a function on a uniform grid."""

    grid: Grid1D
    values: np.ndarray
    domain_kind: DomainKind

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=complex)
        if values.shape != (self.grid.count,):
            raise NumericDomainError(
                f"Expected {self.grid.count} samples, got shape {values.shape}"
            )
        if not np.all(np.isfinite(values)):
            raise NumericDomainError("Sampled function contains non-finite values")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "domain_kind", DomainKind(self.domain_kind))

    def points(self) -> np.ndarray:
        return self.grid.points()

    def energy(self) -> float:
        """Riemann sum of ``|f|**2`` over the grid."""
        return float(np.sum(np.abs(self.values) ** 2) * self.grid.step)

    def l2_norm(self) -> float:
        return float(np.sqrt(self.energy()))


class LinearFit(NamedTuple):
    """Least-squares line with its coefficient of determination."""

    slope: float
    intercept: float
    r_squared: float


def bessel_j(order: float, x):
    """Bessel function of the first kind for the orders that occur in d <= 3.

    Integer orders go through the cephes rational/asymptotic approximations in
    scipy; half-integer orders use their trigonometric closed forms.
    """
    order = float(order)
    if order not in _SUPPORTED_ORDERS:
        raise NumericDomainError(f"Unsupported Bessel order {order}")
    xa = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(xa)) or np.any(xa < 0):
        raise NumericDomainError("Bessel argument must be finite and non-negative")

    if order == 0.0:
        out = special.j0(xa)
    elif order == 1.0:
        out = special.j1(xa)
    else:
        if order < 0 and np.any(xa == 0):
            raise NumericDomainError("J_{-1/2} is singular at x = 0")
        with np.errstate(divide="ignore", invalid="ignore"):
            amplitude = np.sqrt(2.0 / (np.pi * xa))
            if order > 0:
                out = np.where(xa == 0, 0.0, amplitude * np.sin(xa))
            else:
                out = amplitude * np.cos(xa)

    if np.ndim(out) == 0:
        return float(out)
    return out


def angular_average(dimension_d: int, z):
    """Integral of ``exp(i k.x)`` over the directions of k, as a function of z = kr.

    Equals ``(2 pi)^(d/2) z^((2-d)/2) J_{(d-2)/2}(z)``; complex z is accepted for
    rotated integration contours.
    """
    if dimension_d not in ANGULAR_VOLUME:
        raise NumericDomainError(f"Dimension must be 1, 2 or 3, got {dimension_d}")
    z = np.asarray(z)
    if np.iscomplexobj(z):
        if dimension_d == 1:
            return 2.0 * np.cos(z)
        if dimension_d == 2:
            return TWO_PI * special.jv(0, z)
        return 2.0 * TWO_PI * np.sinc(z / np.pi)

    z = np.asarray(z, dtype=float)
    out = np.full(z.shape, ANGULAR_VOLUME[dimension_d])
    positive = z > 0
    zp = z[positive]
    nu = (dimension_d - 2) / 2.0
    out[positive] = TWO_PI ** (dimension_d / 2.0) * zp ** (-nu) * bessel_j(nu, zp)
    return out


def periodic_quadrature(
    f: Callable[[np.ndarray], np.ndarray],
    n_samples: int = 16,
    tol: float = DEFAULT_QUADRATURE_TOL,
    max_samples: int = PERIODIC_MAX_SAMPLES,
) -> complex:
    """Trapezoid rule over one period [0, 2 pi), doubling until two estimates agree.

    Agreement is also accepted at the rounding floor of the integrand's mean
    modulus, so a result that cancels far below that modulus carries only
    absolute accuracy.
    """
    if n_samples < 16 or n_samples & (n_samples - 1):
        raise NumericDomainError(f"n_samples must be a power of two >= 16, got {n_samples}")

    def _estimate(n: int) -> Tuple[complex, float]:
        alpha = TWO_PI * np.arange(n) / n
        values = np.broadcast_to(np.asarray(f(alpha), dtype=complex), alpha.shape)
        return TWO_PI * values.mean(), TWO_PI * float(np.abs(values).mean())

    n = n_samples
    previous, _ = _estimate(n)
    while n < max_samples:
        n *= 2
        estimate, scale = _estimate(n)
        roundoff = 64.0 * np.finfo(float).eps * scale
        if abs(estimate - previous) <= max(tol * abs(estimate), roundoff):
            _LOGGER.debug("Periodic quadrature converged with %d samples", n)
            return complex(estimate)
        previous = estimate

    raise PrecisionError(
        f"Periodic quadrature did not converge within {max_samples} samples; "
        "the integrand's dynamic range is too large"
    )


def fourier_sum(
    positions: np.ndarray,
    values: np.ndarray,
    weight: float,
    frequencies: np.ndarray,
    sign: float = 1.0,
) -> np.ndarray:
    """Direct sum ``weight * sum_j values_j exp(sign * i * w * x_j)`` for every w."""
    positions = np.asarray(positions, dtype=float)
    values = np.asarray(values, dtype=complex)
    frequencies = np.asarray(frequencies, dtype=float)
    nonzero = values != 0
    positions, values = positions[nonzero], values[nonzero]

    out = np.zeros(frequencies.shape, dtype=complex)
    if positions.size == 0:
        return out

    chunk = max(1, _CHUNK_ELEMENTS // positions.size)
    for begin in range(0, frequencies.size, chunk):
        block = frequencies[begin:begin + chunk]
        phases = np.exp(sign * 1j * np.outer(block, positions))
        out[begin:begin + chunk] = (phases @ values) * weight
    return out


def dft_time_to_freq(f: SampledFunction, freq_grid: Grid1D) -> SampledFunction:
    """Discretized ``integral dt f(t) exp(i w t)`` on an arbitrary frequency grid."""
    if f.domain_kind is not DomainKind.TIME:
        raise NumericDomainError(f"Expected a time-domain function, got {f.domain_kind.value}")
    values = fourier_sum(f.points(), f.values, f.grid.step, freq_grid.points())
    return SampledFunction(freq_grid, values, DomainKind.ANGULAR_FREQUENCY)


def dft_freq_to_time(spectrum: SampledFunction, time_grid: Grid1D) -> SampledFunction:
    """Real time function whose transform matches ``spectrum`` on w >= 0.

    The spectrum is extended to negative frequency by Hermitian symmetry, so
    ``f(t) = (1/pi) Re integral_0^inf dw S(w) exp(-i w t)`` (trapezoid in w).
    """
    if spectrum.domain_kind is not DomainKind.ANGULAR_FREQUENCY:
        raise NumericDomainError("Expected an angular-frequency spectrum")
    if spectrum.grid.start < 0:
        raise NumericDomainError("Spectrum grid must start at a non-negative frequency")
    weighted = spectrum.values.copy()
    weighted[0] *= 0.5
    weighted[-1] *= 0.5
    summed = fourier_sum(
        spectrum.points(), weighted, spectrum.grid.step, time_grid.points(), sign=-1.0
    )
    return SampledFunction(time_grid, summed.real / np.pi, DomainKind.TIME)


def gauss_legendre_panels(edges: np.ndarray, order: int = 8) -> Tuple[np.ndarray, np.ndarray]:
    """Nodes and weights of composite Gauss-Legendre quadrature over consecutive panels."""
    edges = np.asarray(edges, dtype=float)
    x, w = np.polynomial.legendre.leggauss(order)
    lower = edges[:-1, None]
    upper = edges[1:, None]
    half = 0.5 * (upper - lower)
    nodes = (half * x + 0.5 * (upper + lower)).ravel()
    weights = (half * w).ravel()
    return nodes, weights


def richardson_extrapolate(
    estimator: Callable[[float], complex],
    h0: float,
    tol: float = 1e-9,
    min_levels: int = 3,
    max_levels: int = 8,
    ratio: float = 2.0,
    noise: Optional[Callable[[], float]] = None,
) -> Tuple[complex, int]:
    """Extrapolate ``estimator(h)`` to h -> 0 assuming an expansion in integer powers of h.

    ``noise`` reports the absolute rounding floor of the estimates made so far;
    changes below it count as settled. Returns the extrapolated value and the
    number of levels used. Raises DistributionalError when the diagonal of the
    table does not settle.
    """
    table: list[list[complex]] = []
    scale = 0.0
    for level in range(max_levels):
        h = h0 / ratio**level
        row = [complex(estimator(h))]
        for j in range(1, level + 1):
            row.append(row[j - 1] + (row[j - 1] - table[level - 1][j - 1]) / (ratio**j - 1.0))
        table.append(row)
        if level == 0:
            scale = abs(row[0])
            continue
        if level + 1 >= min_levels:
            change = abs(row[-1] - table[-2][-1])
            floor = noise() if noise is not None else 0.0
            if change <= max(tol * max(abs(row[-1]), scale), floor):
                _LOGGER.debug("Richardson extrapolation settled after %d levels", level + 1)
                return row[-1], level + 1

    raise DistributionalError(
        f"Extrapolation did not converge after {max_levels} levels (h down to "
        f"{h0 / ratio ** (max_levels - 1):.3g})"
    )


def invert_monotone(
    fn: Callable[[float], float],
    target: float,
    bracket: Tuple[float, float],
    xtol: float = 2e-12,
    rtol: float = 8.881784197001252e-16,
    maxiter: int = 200,
) -> float:
    """Solve ``fn(x) = target`` inside ``bracket`` with Brent's method."""

    def residual(x: float) -> float:
        return fn(x) - target

    try:
        sol = root_scalar(
            residual, method="brentq", bracket=bracket, xtol=xtol, rtol=rtol, maxiter=maxiter
        )
    except ValueError as err:
        raise NumericDomainError(
            f"Value {target:.6g} is not bracketed by {bracket}: {err}"
        ) from err
    if not sol.converged:
        raise NumericDomainError(f"Root finding for {target:.6g} did not converge: {sol.flag}")
    return float(sol.root)


def linear_fit(x, y) -> LinearFit:
    """Least-squares straight line through (x, y)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size < 2:
        raise NumericDomainError("A linear fit needs at least two points")
    slope, intercept = np.polyfit(x, y, 1)
    residual = y - (slope * x + intercept)
    total = np.sum((y - y.mean()) ** 2)
    r_squared = 1.0 - np.sum(residual**2) / total if total > 0 else 1.0
    return LinearFit(float(slope), float(intercept), float(r_squared))
