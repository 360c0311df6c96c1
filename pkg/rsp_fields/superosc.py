"""Superoscillatory window functions and the synthesis of window plans."""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
import logging
import math
from pathlib import Path
from typing import List, NamedTuple, Optional, Tuple, Union

import numpy as np
from numpy.polynomial import Polynomial
from scipy import special

from .const import (
    BAND_EDGE_TOLERANCE,
    DEFAULT_M_INDEX,
    DEFAULT_QUADRATURE_TOL,
    MOLLIFIER_MIN_ORDER,
    QUADRATURE_ORACLE_TOL,
    QUADRATURE_RANGE_CAP,
    SYNTHESIS_ENERGY_QUANTILE,
    SYNTHESIS_VALIDITY,
)
from .errors import (
    ConfigError,
    InsufficientResolutionError,
    NumericDomainError,
    PrecisionError,
)
from .numerics import (
    TWO_PI,
    DomainKind,
    Grid1D,
    SampledFunction,
    bessel_j,
    fourier_sum,
    periodic_quadrature,
)

_LOGGER = logging.getLogger(__name__)

# Largest natural log of a magnitude that still fits in a double.
_LOG_OVERFLOW = 700.0

_CHUNK_ELEMENTS = 2**21
_PANEL_NODES = 8
_SPIKE_ORDER = 8
_MOLLIFIER_SERIES_SWITCH = 1e-3

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(_PANEL_NODES)


def _bump_cdf(order_n: int) -> Polynomial:
    """Cumulative distribution of the unit-integral bump (1 - u^2)^n on [-1, 1]."""
    cdf = (Polynomial([1.0, 0.0, -1.0]) ** order_n).integ(lbnd=-1.0)
    return cdf / cdf(1.0)


_SPIKE_CDF = _bump_cdf(_SPIKE_ORDER)


class Branch(str, Enum):
    """Sign in front of cosh A in the pair's local frequency."""

    PLUS = "plus"
    MINUS = "minus"


class BasisKind(str, Enum):
    """Basis function a plan term is realized with."""

    IMPULSE = "impulse"
    SUPEROSC_PAIR = "superosc_pair"


def quantized_inverse_delta_sq(m_index: int, second: bool = False) -> float:
    """Return 1/delta^2 = 2 pi m + pi/4 (first member) or 2 pi m - pi/4 (second member)."""
    shift = -np.pi / 4 if second else np.pi / 4
    return TWO_PI * m_index + shift


def offset_cosh(t_prime: float, t0: float) -> float:
    """cosh A of the pair whose local frequency is t_prime."""
    if -t0 < t_prime < 0:
        raise NumericDomainError(
            f"t' = {t_prime:.6g} lies inside (-t0, 0); use an impulse term instead"
        )
    return abs(2.0 * t_prime / t0 + 1.0)


@dataclass(frozen=True)
class SuperoscParams:
    """Constants of one superoscillatory basis function."""

    D: float
    delta: float
    A: float
    t0: float
    omega0: float = 0.0
    branch: Branch = Branch.PLUS
    m_index: int = 1

    def __post_init__(self) -> None:
        for name in ("D", "delta", "t0"):
            value = getattr(self, name)
            if not (np.isfinite(value) and value > 0):
                raise NumericDomainError(f"{name} must be positive and finite, got {value}")
        if not (np.isfinite(self.A) and self.A >= 0):
            raise NumericDomainError(f"A must be non-negative and finite, got {self.A}")
        if not np.isfinite(self.omega0):
            raise NumericDomainError("omega0 must be finite")
        if int(self.m_index) != self.m_index or self.m_index < 1:
            raise NumericDomainError(f"m_index must be a positive integer, got {self.m_index}")
        object.__setattr__(self, "branch", Branch(self.branch))
        object.__setattr__(self, "m_index", int(self.m_index))

    @classmethod
    def for_offset(
        cls,
        t_prime: float,
        t0: float,
        m_index: int,
        D: float = 1.0,
        omega0: float = 0.0,
        second: bool = False,
    ) -> SuperoscParams:
        """Parameters whose pair oscillates at local frequency t_prime."""
        cosh_a = offset_cosh(t_prime, t0)
        return cls(
            D=D,
            delta=1.0 / math.sqrt(quantized_inverse_delta_sq(m_index, second)),
            A=float(np.arccosh(cosh_a)),
            t0=t0,
            omega0=omega0,
            branch=Branch.PLUS if t_prime >= 0 else Branch.MINUS,
            m_index=m_index,
        )

    @property
    def cosh_a(self) -> float:
        return math.cosh(self.A)

    @property
    def sinh_a(self) -> float:
        return math.sinh(self.A)

    @property
    def inverse_delta_sq(self) -> float:
        return 1.0 / self.delta**2

    @property
    def amplitude_scale(self) -> float:
        """Prefactor D sqrt(pi) / (sqrt(2) delta) of the closed form."""
        return self.D * math.sqrt(np.pi / 2.0) / self.delta

    @property
    def t_prime(self) -> float:
        sign = 1.0 if self.branch is Branch.PLUS else -1.0
        return self.t0 * (sign * self.cosh_a - 1.0) / 2.0


def _check_band(omega_prime) -> np.ndarray:
    w = np.asarray(omega_prime, dtype=float)
    if np.any(~np.isfinite(w)) or np.any(w < 0):
        raise NumericDomainError("omega' must be finite and non-negative here; see growth_probe")
    return w


def _scalar(out):
    return complex(out) if np.ndim(out) == 0 else out


def _roundoff_bound(p: SuperoscParams, a: float) -> float:
    """Rounding error bound of the alpha-integral, before the prefactor.

    The integrand's modulus peaks at e^{sinh A/delta^2} and integrates to
    2 pi I0(sinh A/delta^2) over a period; its exponent carries relative
    rounding of order the unit roundoff times its own size.
    """
    growth = p.sinh_a * p.inverse_delta_sq
    phase = p.inverse_delta_sq * p.cosh_a + abs(a)
    exponent_error = 2.0 + growth + phase / math.sqrt(1.0 + growth)
    magnitude = TWO_PI * float(special.i0e(growth)) * math.exp(growth)
    return 0.5 * np.finfo(float).eps * exponent_error * magnitude


def superosc_quadrature(
    p: SuperoscParams,
    omega_prime: float,
    tol: float = DEFAULT_QUADRATURE_TOL,
    accuracy: float = QUADRATURE_ORACLE_TOL,
) -> complex:
    """Evaluate the basis function from its alpha-integral representation.

    Raises PrecisionError when cancellation in the integrand leaves less than
    ``accuracy`` relative precision.
    """
    b = p.inverse_delta_sq
    dynamic_range = p.sinh_a * b
    if dynamic_range > QUADRATURE_RANGE_CAP:
        raise PrecisionError(
            f"sinh(A)/delta^2 = {dynamic_range:.3g} exceeds {QUADRATURE_RANGE_CAP}; "
            "use superosc_closed"
        )
    a = omega_prime * p.t0 / 2.0

    def integrand(alpha: np.ndarray) -> np.ndarray:
        return np.exp(1j * a * (np.cos(alpha) - 1.0)) * np.exp(1j * b * np.cos(alpha - 1j * p.A))

    integral = periodic_quadrature(integrand, tol=tol)
    bound = _roundoff_bound(p, a)
    if bound > accuracy * abs(integral):
        relative = bound / abs(integral) if integral != 0 else math.inf
        raise PrecisionError(
            f"Cancellation limits the alpha-integral to {relative:.2g} relative accuracy "
            f"at sinh(A)/delta^2 = {dynamic_range:.3g}, omega' = {omega_prime:.6g}; "
            "use superosc_closed"
        )
    prefactor = p.D / (2.0 * p.delta * math.sqrt(TWO_PI))
    return prefactor * integral


def superosc_closed(p: SuperoscParams, omega_prime):
    """Closed Bessel form of the basis function for omega' >= 0."""
    w = _check_band(omega_prime)
    b = p.inverse_delta_sq
    a = w * p.t0 / 2.0
    radius = np.sqrt(b * b + 2.0 * a * b * p.cosh_a + a * a)
    return _scalar(p.amplitude_scale * np.exp(-1j * a) * bessel_j(0, radius))


def superosc_asymptotic(p: SuperoscParams, omega_prime):
    """Large-argument form D e^{-i w t0/2} cos(1/delta^2 + w t0 cosh A / 2 - pi/4)."""
    w = _check_band(omega_prime)
    a = w * p.t0 / 2.0
    return _scalar(p.D * np.exp(-1j * a) * np.cos(p.inverse_delta_sq + a * p.cosh_a - np.pi / 4))


def superosc_pair(t_prime: float, t0: float, m_index: int, D: float, omega_prime):
    """Two quantized basis functions combined into an approximate plane wave D e^{i w t'}."""
    first = SuperoscParams.for_offset(t_prime, t0, m_index, D)
    second = SuperoscParams.for_offset(t_prime, t0, m_index, D, second=True)
    coefficient = 1j if first.branch is Branch.PLUS else -1j
    return _scalar(
        np.asarray(superosc_closed(first, omega_prime))
        + coefficient * np.asarray(superosc_closed(second, omega_prime))
    )


def _pair_response(cosh_a: np.ndarray, coefficient: np.ndarray, t0: float, m_index: int, w: np.ndarray):
    """Unit-amplitude pair responses, one row per term and one column per frequency."""
    a = w[None, :] * t0 / 2.0
    total = np.zeros((cosh_a.size, w.size), dtype=complex)
    for second, coef in ((False, 1.0), (True, coefficient[:, None])):
        b = quantized_inverse_delta_sq(m_index, second)
        radius = np.sqrt(b * b + 2.0 * a * b * cosh_a[:, None] + a * a)
        total += coef * math.sqrt(b) * bessel_j(0, radius)
    return math.sqrt(np.pi / 2.0) * np.exp(-1j * a) * total


@dataclass(frozen=True)
class PlanTerm:
    """One basis function of a window plan."""

    t_prime: float
    weight: complex
    basis: BasisKind
    params: Optional[SuperoscParams] = None


@dataclass(frozen=True)
class WindowPlan:
    """Weighted basis functions whose sum approximates the desired window spectrum."""

    terms: Tuple[PlanTerm, ...]
    t0: float
    T: float
    omega_c: float
    m_index: int = DEFAULT_M_INDEX
    omega0: float = 0.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "terms", tuple(self.terms))
        if not (self.t0 > 0 and self.T >= 0 and self.omega_c > 0 and self.m_index >= 1):
            raise NumericDomainError("Window plan needs t0 > 0, T >= 0, omega_c > 0, m_index >= 1")
        if not np.isfinite(self.omega0):
            raise NumericDomainError("omega0 must be finite")
        slack = 1e-9 * max(self.T, self.t0)
        for term in self.terms:
            if abs(term.t_prime) > self.T + slack:
                raise NumericDomainError(f"Term at t' = {term.t_prime:.6g} exceeds T = {self.T:.6g}")
            inside = -self.t0 < term.t_prime < 0
            if inside != (term.basis is BasisKind.IMPULSE):
                raise NumericDomainError(
                    f"{term.basis.value} term not allowed at t' = {term.t_prime:.6g}"
                )
            if term.params is not None and term.params.omega0 != self.omega0:
                raise NumericDomainError(
                    f"Term at t' = {term.t_prime:.6g} uses omega0 = {term.params.omega0:.6g}, "
                    f"plan uses {self.omega0:.6g}"
                )

    def impulse_terms(self) -> List[PlanTerm]:
        return [term for term in self.terms if term.basis is BasisKind.IMPULSE]

    def pair_terms(self) -> List[PlanTerm]:
        return [term for term in self.terms if term.basis is BasisKind.SUPEROSC_PAIR]


def _make_term(
    t_prime: float, weight: complex, t0: float, m_index: int, omega0: float = 0.0
) -> PlanTerm:
    if -t0 < t_prime < 0:
        return PlanTerm(t_prime, weight, BasisKind.IMPULSE)
    return PlanTerm(
        t_prime,
        weight,
        BasisKind.SUPEROSC_PAIR,
        SuperoscParams.for_offset(t_prime, t0, m_index, omega0=omega0),
    )


def resolution_figure(plan: WindowPlan) -> Tuple[float, float]:
    """Return (delta^2 omega_c t0 cosh A_eff, cosh A_eff) for the plan's pair terms.

    A_eff is the largest A among the heaviest pair terms that together carry
    the configured quantile of the pair weight energy.
    """
    pairs = plan.pair_terms()
    if not pairs:
        return 0.0, 1.0
    energy = np.array([abs(term.weight) ** 2 for term in pairs])
    cosh_a = np.array([offset_cosh(term.t_prime, plan.t0) for term in pairs])
    order = np.argsort(-energy, kind="stable")
    cumulative = np.cumsum(energy[order])
    keep = int(np.searchsorted(cumulative, SYNTHESIS_ENERGY_QUANTILE * cumulative[-1])) + 1
    cosh_eff = float(cosh_a[order[:keep]].max())
    figure = plan.omega_c * plan.t0 * cosh_eff / quantized_inverse_delta_sq(plan.m_index, True)
    return figure, cosh_eff


def pair_band_error(plan: WindowPlan, samples: int = 64) -> Tuple[float, float]:
    """Worst modulus and phase deviation of the plan's unit pairs from e^{i w t'} on [0, omega_c]."""
    pairs = plan.pair_terms()
    if not pairs:
        return 0.0, 0.0
    w = np.linspace(0.0, plan.omega_c, samples)
    t_prime = np.array([term.t_prime for term in pairs])
    cosh_a = np.abs(2.0 * t_prime / plan.t0 + 1.0)
    coefficient = np.where(t_prime >= 0, 1j, -1j)
    response = _pair_response(cosh_a, coefficient, plan.t0, plan.m_index, w)
    modulus = float(np.abs(np.abs(response) - 1.0).max())
    phase = float(np.abs(np.angle(response * np.exp(-1j * np.outer(t_prime, w)))).max())
    return modulus, phase


def minimal_m_index(omega_c: float, t0: float, cosh_eff: float) -> int:
    """Smallest m_index whose second member keeps the resolution figure below the limit."""
    needed = omega_c * t0 * cosh_eff / SYNTHESIS_VALIDITY
    return int(math.floor((needed + np.pi / 4) / TWO_PI)) + 1


def synthesize_window(
    eps_des_time: SampledFunction,
    t0: float,
    omega_c: float,
    m_index: int,
    omega0: float = 0.0,
) -> WindowPlan:
    """Build a plan with one term per nonzero sample of the desired temporal window.

    ``omega0`` is the spectral floor of the rotating frame the window lives in.
    """
    if eps_des_time.domain_kind is not DomainKind.TIME:
        raise NumericDomainError("synthesize_window needs a time-domain desired window")
    if not (t0 > 0 and omega_c > 0):
        raise NumericDomainError("t0 and omega_c must be positive")
    if int(m_index) != m_index or m_index < 1:
        raise NumericDomainError(f"m_index must be a positive integer, got {m_index}")

    grid = eps_des_time.grid
    if np.pi / grid.step <= omega_c:
        raise NumericDomainError(
            f"Time step {grid.step:.6g} cannot resolve omega_c = {omega_c:.6g} "
            f"(Nyquist {np.pi / grid.step:.6g})"
        )

    span = max(abs(grid.start), abs(grid.stop))
    terms = [
        _make_term(float(t), complex(value * grid.step), t0, m_index, omega0)
        for t, value in zip(eps_des_time.points(), eps_des_time.values)
        if value != 0
    ]
    plan = WindowPlan(tuple(terms), t0, span, omega_c, m_index, omega0)

    figure, cosh_eff = resolution_figure(plan)
    if figure >= SYNTHESIS_VALIDITY:
        minimal = minimal_m_index(omega_c, t0, cosh_eff)
        raise InsufficientResolutionError(
            f"m_index {m_index} too small for omega_c = {omega_c:.6g} "
            f"(delta^2 omega_c t0 cosh A = {figure:.3g}); use m_index >= {minimal}",
            minimal,
        )

    _LOGGER.debug(
        "Synthesized plan with %d impulse and %d pair terms (resolution figure %.3g)",
        len(plan.impulse_terms()),
        len(plan.pair_terms()),
        figure,
    )
    return plan


def plan_spectrum_at(plan: WindowPlan, omega_prime) -> np.ndarray:
    """Window spectrum of the plan at arbitrary omega' >= 0."""
    w = np.atleast_1d(_check_band(omega_prime))
    impulses = plan.impulse_terms()
    values = fourier_sum(
        np.array([term.t_prime for term in impulses]),
        np.array([term.weight for term in impulses], dtype=complex),
        1.0,
        w,
    )

    pairs = plan.pair_terms()
    if pairs:
        weights = np.array([term.weight for term in pairs], dtype=complex)
        cosh_a = np.array([offset_cosh(term.t_prime, plan.t0) for term in pairs])
        coefficient = np.where(np.array([term.t_prime for term in pairs]) >= 0, 1j, -1j)
        rows = max(1, _CHUNK_ELEMENTS // w.size)
        for begin in range(0, len(pairs), rows):
            block = slice(begin, begin + rows)
            response = _pair_response(cosh_a[block], coefficient[block], plan.t0, plan.m_index, w)
            values = values + weights[block] @ response
    return values


def evaluate_plan(plan: WindowPlan, freq_grid: Grid1D) -> SampledFunction:
    """Window spectrum of the plan on a grid of omega' >= 0."""
    values = plan_spectrum_at(plan, freq_grid.points())
    return SampledFunction(freq_grid, values, DomainKind.ANGULAR_FREQUENCY)


def mollifier_multiplier(omega_prime, order_n: int, tau: float) -> np.ndarray:
    """Fourier transform of the unit-integral bump (1 - (2t/tau + 1)^2)^n on [-tau, 0]."""
    w = np.asarray(omega_prime, dtype=float)
    kappa = np.abs(w) * tau / 2.0
    nu = order_n + 0.5
    small = kappa <= _MOLLIFIER_SERIES_SWITCH
    safe = np.where(small, 1.0, kappa)
    envelope = np.exp(special.gammaln(nu + 1.0) + nu * np.log(2.0 / safe)) * special.jv(nu, safe)
    envelope = np.where(small, 1.0 - kappa**2 / (2.0 * (2 * order_n + 3)), envelope)
    return np.exp(-1j * w * tau / 2.0) * envelope


@dataclass(frozen=True)
class Mollifier:
    """Unit-integral C^n bump (1 - (2t/tau + 1)^2)^n supported on [-tau, 0]."""

    order_n: int
    tau: float

    def __post_init__(self) -> None:
        if int(self.order_n) != self.order_n or self.order_n < MOLLIFIER_MIN_ORDER:
            raise NumericDomainError(
                f"Mollifier order must be >= {MOLLIFIER_MIN_ORDER}, got {self.order_n}"
            )
        if not (np.isfinite(self.tau) and self.tau > 0):
            raise NumericDomainError(f"Mollifier width must be positive, got {self.tau}")
        object.__setattr__(self, "order_n", int(self.order_n))

    def inner_support(self, t0: float) -> float:
        """Support t0 - tau left to the window before it is mollified."""
        if not self.tau < t0 / 10:
            raise NumericDomainError(f"Mollifier width {self.tau:.6g} must lie in (0, t0/10)")
        return t0 - self.tau

    def multiplier(self, omega_prime) -> np.ndarray:
        return mollifier_multiplier(omega_prime, self.order_n, self.tau)

    def cell_weights(self, step: float) -> np.ndarray:
        """Bump integrals over the cells of width ``step`` centred on 0, -step, -2 step, ..."""
        centres = -step * np.arange(int(math.ceil(self.tau / step - 0.5)) + 1)
        upper = np.minimum(centres + step / 2, 0.0)
        lower = np.maximum(centres - step / 2, -self.tau)
        cdf = _bump_cdf(self.order_n)
        return cdf(2.0 * upper / self.tau + 1.0) - cdf(2.0 * lower / self.tau + 1.0)

    def smooth(self, values: np.ndarray, step: float) -> np.ndarray:
        """Convolve cell averages on a uniform time grid with the bump."""
        weights = self.cell_weights(step)
        lag = weights.size - 1
        # out[i] = sum_j weights[j] * values[i + j]
        return np.convolve(values, weights[::-1])[lag:lag + values.size]


def mollify(
    plan_spectrum: SampledFunction, order_n: int, tau: float, t0: float
) -> SampledFunction:
    """Multiply a window spectrum by the transform of a C^n bump of width tau.

    The window being mollified must already live on [-(t0 - tau), 0] so the
    result keeps its support inside [-t0, 0].
    """
    if plan_spectrum.domain_kind is not DomainKind.ANGULAR_FREQUENCY:
        raise NumericDomainError("mollify needs an angular-frequency spectrum")
    mollifier = Mollifier(order_n, tau)
    mollifier.inner_support(t0)
    multiplier = mollifier.multiplier(plan_spectrum.points())
    return SampledFunction(
        plan_spectrum.grid, plan_spectrum.values * multiplier, DomainKind.ANGULAR_FREQUENCY
    )


def _cell_edges(time_grid: Grid1D) -> np.ndarray:
    points = time_grid.points()
    return np.concatenate(([points[0] - time_grid.step / 2], points + time_grid.step / 2))


def _spike_cells(term: PlanTerm, t0: float, width: float, edges: np.ndarray) -> Tuple[slice, np.ndarray]:
    """Cell integrals of a unit-weight polynomial spike centred on the term's t'."""
    width = min(width, 2.0 * (term.t_prime + t0), -2.0 * term.t_prime)
    lo = int(np.searchsorted(edges, term.t_prime - width / 2, side="right")) - 1
    hi = int(np.searchsorted(edges, term.t_prime + width / 2, side="left")) + 1
    lo, hi = max(lo, 0), min(hi, edges.size)
    u = np.clip(2.0 * (edges[lo:hi] - term.t_prime) / width, -1.0, 1.0)
    return slice(lo, hi - 1), np.diff(_SPIKE_CDF(u))


def _pair_cells(term: PlanTerm, t0: float, m_index: int, edges: np.ndarray) -> Tuple[float, np.ndarray]:
    """Cell integrals of a unit-weight pair as (log scale, scaled integrals).

    Each cell maps to alpha = arccos(1 + 2t/t0) and its mirror 2 pi - alpha; the
    two alpha-integrands are summed and integrated with composite Gauss-Legendre.
    """
    cosh_a = offset_cosh(term.t_prime, t0)
    sinh_a = math.sqrt(max(cosh_a**2 - 1.0, 0.0))
    coefficient = 1j if term.t_prime >= 0 else -1j
    b1 = quantized_inverse_delta_sq(m_index)
    b2 = quantized_inverse_delta_sq(m_index, True)
    log_scale = b1 * sinh_a
    members = (
        (b1, math.sqrt(b1) / (2.0 * math.sqrt(TWO_PI))),
        (b2, coefficient * math.sqrt(b2) / (2.0 * math.sqrt(TWO_PI)) * math.exp((b2 - b1) * sinh_a)),
    )

    def integrand(alpha: np.ndarray) -> np.ndarray:
        sin_alpha = np.sin(alpha)
        cos_alpha = np.cos(alpha)
        out = np.zeros(alpha.shape, dtype=complex)
        for b, prefactor in members:
            growth = np.exp(b * sinh_a * (sin_alpha - 1.0)) + np.exp(-b * sinh_a * (sin_alpha + 1.0))
            out += prefactor * np.exp(1j * b * cosh_a * cos_alpha) * growth
        return out

    n_panels = int(math.ceil(np.pi * b1 * (cosh_a + sinh_a))) + 16
    panel_edges = np.linspace(0.0, np.pi, n_panels + 1)
    half = 0.5 * (panel_edges[1:] - panel_edges[:-1])
    mid = 0.5 * (panel_edges[1:] + panel_edges[:-1])
    nodes = mid[:, None] + half[:, None] * _GL_NODES
    panel_integrals = (integrand(nodes) * _GL_WEIGHTS).sum(axis=1) * half
    cumulative = np.concatenate(([0.0], np.cumsum(panel_integrals)))

    alpha = np.arccos(np.clip(1.0 + 2.0 * edges / t0, -1.0, 1.0))
    index = np.clip(np.searchsorted(panel_edges, alpha, side="right") - 1, 0, n_panels - 1)
    start = panel_edges[index]
    partial_half = 0.5 * (alpha - start)
    partial_nodes = start[:, None] + partial_half[:, None] * (_GL_NODES + 1.0)
    partial = (integrand(partial_nodes) * _GL_WEIGHTS).sum(axis=1) * partial_half
    antiderivative = cumulative[index] + partial
    # alpha decreases as t increases
    return log_scale, antiderivative[:-1] - antiderivative[1:]


def _scaled_window(
    plan: WindowPlan,
    time_grid: Grid1D,
    spike_width: Optional[float],
    mollifier: Optional[Mollifier] = None,
) -> Tuple[np.ndarray, float]:
    """Cell-averaged window as (values / e^scale, scale)."""
    reach = plan.t0 + (mollifier.tau if mollifier is not None else 0.0)
    if time_grid.start > -reach or time_grid.stop < 0:
        raise NumericDomainError(f"Time grid must cover the support [{-reach:.6g}, 0]")
    edges = _cell_edges(time_grid)
    width = plan.t0 / 64 if spike_width is None else spike_width
    if width <= 0:
        raise NumericDomainError("spike_width must be positive")

    pair_parts = [
        (term.weight, *_pair_cells(term, plan.t0, plan.m_index, edges)) for term in plan.pair_terms()
    ]
    log_scale = max([0.0] + [part[1] for part in pair_parts])

    values = np.zeros(time_grid.count, dtype=complex)
    for weight, term_scale, cells in pair_parts:
        values += weight * math.exp(term_scale - log_scale) * cells
    impulse_factor = math.exp(-log_scale)
    for term in plan.impulse_terms():
        cells_slice, cells = _spike_cells(term, plan.t0, width, edges)
        values[cells_slice] += term.weight * impulse_factor * cells
    values /= time_grid.step
    if mollifier is not None:
        values = mollifier.smooth(values, time_grid.step)
    return values, log_scale


def reconstruct_time(
    plan: WindowPlan,
    time_grid: Grid1D,
    spike_width: Optional[float] = None,
    mollifier: Optional[Mollifier] = None,
) -> SampledFunction:
    """Cell-averaged temporal window of the plan, supported on [-t0, 0].

    With a mollifier the support grows to [-t0 - tau, 0].
    """
    values, log_scale = _scaled_window(plan, time_grid, spike_width, mollifier)
    peak = np.abs(values).max(initial=0.0)
    if peak > 0 and log_scale + math.log(peak) > _LOG_OVERFLOW:
        raise PrecisionError(
            f"Window amplitude e^{log_scale + math.log(peak):.1f} overflows; use window_energy"
        )
    return SampledFunction(time_grid, values * math.exp(log_scale), DomainKind.TIME)


def reconstruct_time_scaled(
    plan: WindowPlan,
    time_grid: Grid1D,
    spike_width: Optional[float] = None,
    mollifier: Optional[Mollifier] = None,
) -> Tuple[SampledFunction, float]:
    """Cell-averaged window divided by e^scale, together with the scale."""
    values, log_scale = _scaled_window(plan, time_grid, spike_width, mollifier)
    return SampledFunction(time_grid, values, DomainKind.TIME), log_scale


def physical_window(plan: WindowPlan, window: SampledFunction) -> SampledFunction:
    """Lab-frame coupling epsilon(t) e^{-i omega0 t} from rotating-frame samples."""
    if window.domain_kind is not DomainKind.TIME:
        raise NumericDomainError("physical_window needs a time-domain window")
    phase = np.exp(-1j * plan.omega0 * window.points())
    return SampledFunction(window.grid, window.values * phase, DomainKind.TIME)


class WindowEnergy(NamedTuple):
    """Logarithms of the time-domain energy and peak modulus of a window."""

    log_energy: float
    log_peak: float

    @property
    def energy(self) -> float:
        with np.errstate(over="ignore"):
            return float(np.exp(self.log_energy))


def window_energy(
    plan: WindowPlan,
    time_grid: Grid1D,
    spike_width: Optional[float] = None,
    mollifier: Optional[Mollifier] = None,
) -> WindowEnergy:
    """Energy of the reconstructed window, accumulated in log-scaled form."""
    values, log_scale = _scaled_window(plan, time_grid, spike_width, mollifier)
    total = float(np.sum(np.abs(values) ** 2) * time_grid.step)
    if total == 0:
        return WindowEnergy(-np.inf, -np.inf)
    return WindowEnergy(
        2.0 * log_scale + math.log(total), log_scale + math.log(float(np.abs(values).max()))
    )


def growth_probe(p: SuperoscParams, omega_prime):
    """log|basis function| for omega' <= 0, where the closed form grows like I_0."""
    w = np.asarray(omega_prime, dtype=float)
    b = p.inverse_delta_sq
    far_branch_point = -2.0 * b * math.exp(p.A) / p.t0
    if np.any(w > 0):
        raise NumericDomainError("growth_probe only covers omega' <= 0")
    if np.any(w < far_branch_point):
        raise NumericDomainError(
            f"omega' below the branch point {far_branch_point:.6g} of the closed form"
        )
    a = w * p.t0 / 2.0
    radius_sq = b * b + 2.0 * a * b * p.cosh_a + a * a
    oscillating = radius_sq >= 0
    real_radius = np.sqrt(np.where(oscillating, radius_sq, 0.0))
    imaginary_radius = np.sqrt(np.where(oscillating, 0.0, -radius_sq))
    with np.errstate(divide="ignore"):
        log_bessel = np.where(
            oscillating,
            np.log(np.abs(bessel_j(0, real_radius))),
            np.log(special.i0e(imaginary_radius)) + imaginary_radius,
        )
    out = math.log(p.amplitude_scale) + log_bessel
    return float(out) if np.ndim(out) == 0 else out


def instantaneous_frequency(
    t_prime: float, t0: float, m_index: int, omega_grid: Union[Grid1D, np.ndarray]
) -> np.ndarray:
    """Derivative of the unwrapped phase of a unit pair with respect to omega'."""
    w = omega_grid.points() if isinstance(omega_grid, Grid1D) else np.asarray(omega_grid, float)
    phase = np.unwrap(np.angle(superosc_pair(t_prime, t0, m_index, 1.0, w)))
    return np.gradient(phase, w)


def operational_band_edge(
    t_prime: float,
    t0: float,
    m_index: int,
    tolerance: float = BAND_EDGE_TOLERANCE,
    samples: int = 4096,
) -> float:
    """Largest omega' up to which a unit pair keeps |modulus - 1| and its
    local-frequency error within ``tolerance``.

    The frequency error is taken relative to max(|t'|, t0).
    """
    cosh_a = offset_cosh(t_prime, t0)
    upper = 4.0 * quantized_inverse_delta_sq(m_index, True) / (t0 * cosh_a)
    w = np.linspace(0.0, upper, samples)
    values = superosc_pair(t_prime, t0, m_index, 1.0, w)
    frequency = np.gradient(np.unwrap(np.angle(values)), w)
    healthy = (np.abs(np.abs(values) - 1.0) <= tolerance) & (
        np.abs(frequency - t_prime) <= tolerance * max(abs(t_prime), t0)
    )
    if healthy.all():
        return float(upper)
    first_failure = int(np.argmin(healthy))
    return float(w[first_failure - 1]) if first_failure > 0 else 0.0


def write_plan(plan: WindowPlan, path: Union[str, Path]) -> None:
    """Write the plan as a plain-text record, one term per line."""
    lines = [
        f"# t0={plan.t0:.17g} T={plan.T:.17g} omega_c={plan.omega_c:.17g} m_index={plan.m_index} "
        f"omega0={plan.omega0:.17g}",
        "# basis t_prime weight_re weight_im m_index",
    ]
    lines.extend(
        f"{term.basis.value} {term.t_prime:.17g} {term.weight.real:.17g} "
        f"{term.weight.imag:.17g} {plan.m_index}"
        for term in plan.terms
    )
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")


def _parse_header(line: str) -> dict:
    try:
        return dict(token.split("=", 1) for token in line.lstrip("#").split())
    except ValueError as err:
        raise ConfigError(f"Malformed plan header: {line!r}", "plan") from err


def read_plan(path: Union[str, Path]) -> WindowPlan:
    """Read a plan written by write_plan."""
    lines = [line for line in Path(path).read_text(encoding="utf-8").splitlines() if line.strip()]
    if not lines or not lines[0].startswith("#"):
        raise ConfigError("Plan file is missing its header", "plan")
    header = _parse_header(lines[0])
    try:
        t0 = float(header["t0"])
        span = float(header["T"])
        omega_c = float(header["omega_c"])
        m_index = int(header["m_index"])
        omega0 = float(header.get("omega0", 0.0))
        terms = []
        for line in lines[1:]:
            if line.startswith("#"):
                continue
            basis, t_prime, re, im, _ = line.split()
            term = _make_term(float(t_prime), complex(float(re), float(im)), t0, m_index, omega0)
            if term.basis is not BasisKind(basis):
                raise ValueError(f"basis {basis} does not match t' = {t_prime}")
            terms.append(term)
    except (KeyError, ValueError) as err:
        raise ConfigError(f"Malformed plan file {path}: {err}", "plan") from err
    return WindowPlan(tuple(terms), t0, span, omega_c, m_index, omega0)
