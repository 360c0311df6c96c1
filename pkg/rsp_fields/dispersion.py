"""Dispersion relations, their inverses and mode weights."""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
import logging
from typing import Optional, Tuple

import numpy as np

from .const import PROBE_GRID_POINTS, PROBE_K_RANGE
from .errors import NumericDomainError, OutOfBandError

_LOGGER = logging.getLogger(__name__)


class DispersionKind(str, Enum):
    """Supported model families."""

    RELATIVISTIC_MASSIVE = "relativistic_massive"
    RELATIVISTIC_MASSLESS = "relativistic_massless"
    SCHROEDINGER = "schroedinger"
    BOUNDED_FREQUENCY = "bounded_frequency"


class WeightRule(str, Enum):
    """Normalization h(omega) of the mode expansion."""

    INVERSE_SQRT_TWO_OMEGA = "inverse_sqrt_two_omega"
    UNIT = "unit"


_RELATIVISTIC = (DispersionKind.RELATIVISTIC_MASSIVE, DispersionKind.RELATIVISTIC_MASSLESS)


@dataclass(frozen=True)
class DispersionModel:
    """Rotationally invariant dispersion omega(k) in natural units."""

    kind: DispersionKind
    mass: float = 0.0
    max_frequency: Optional[float] = None
    weight_rule: Optional[WeightRule] = None

    def __post_init__(self) -> None:
        kind = DispersionKind(self.kind)
        object.__setattr__(self, "kind", kind)

        if kind in (DispersionKind.RELATIVISTIC_MASSIVE, DispersionKind.SCHROEDINGER):
            if not (np.isfinite(self.mass) and self.mass > 0):
                raise NumericDomainError(f"{kind.value} needs a positive finite mass, got {self.mass}")
        elif self.mass < 0:
            raise NumericDomainError(f"Mass must be non-negative, got {self.mass}")

        if kind is DispersionKind.BOUNDED_FREQUENCY:
            if self.max_frequency is None or not (
                np.isfinite(self.max_frequency) and self.max_frequency > 0
            ):
                raise NumericDomainError(
                    f"bounded_frequency needs a positive finite max_frequency, got {self.max_frequency}"
                )

        if self.weight_rule is None:
            rule = WeightRule.INVERSE_SQRT_TWO_OMEGA if kind in _RELATIVISTIC else WeightRule.UNIT
        else:
            rule = WeightRule(self.weight_rule)
        object.__setattr__(self, "weight_rule", rule)

        probe = np.geomspace(*PROBE_K_RANGE, PROBE_GRID_POINTS)
        if not np.all(np.diff(omega(self, probe)) > 0):
            raise NumericDomainError(f"Dispersion {kind.value} is not strictly increasing")
        _LOGGER.debug("Dispersion model %s ready (weight rule %s)", kind.value, rule.value)


def _check_wavenumber(k) -> np.ndarray:
    k = np.asarray(k, dtype=float)
    if np.any(~np.isfinite(k)) or np.any(k < 0):
        raise NumericDomainError("Wavenumber must be finite and non-negative")
    return k


def _scalar(out):
    return float(out) if np.ndim(out) == 0 else out


def omega(model: DispersionModel, k):
    """Frequency of the mode with wavenumber k."""
    k = _check_wavenumber(k)
    kind = model.kind
    if kind is DispersionKind.RELATIVISTIC_MASSIVE:
        out = np.hypot(k, model.mass)
    elif kind is DispersionKind.RELATIVISTIC_MASSLESS:
        out = k.copy()
    elif kind is DispersionKind.SCHROEDINGER:
        out = k**2 / (2.0 * model.mass)
    else:
        out = model.max_frequency * k**2 / (1.0 + k**2)
    return _scalar(out)


def group_velocity(model: DispersionModel, k):
    """Analytic derivative d omega / d k."""
    k = _check_wavenumber(k)
    kind = model.kind
    if kind is DispersionKind.RELATIVISTIC_MASSIVE:
        out = k / np.hypot(k, model.mass)
    elif kind is DispersionKind.RELATIVISTIC_MASSLESS:
        out = np.ones_like(k)
    elif kind is DispersionKind.SCHROEDINGER:
        out = k / model.mass
    else:
        out = 2.0 * model.max_frequency * k / (1.0 + k**2) ** 2
    return _scalar(out)


def band(model: DispersionModel) -> Tuple[float, float]:
    """Attained frequency range ``[omega(0), sup omega)``."""
    upper = model.max_frequency if model.kind is DispersionKind.BOUNDED_FREQUENCY else np.inf
    return omega(model, 0.0), float(upper)


def max_group_velocity(model: DispersionModel) -> float:
    """Supremum of the group velocity over all k."""
    kind = model.kind
    if kind in _RELATIVISTIC:
        return 1.0
    if kind is DispersionKind.SCHROEDINGER:
        return float(np.inf)
    # maximum of 2Wk/(1+k^2)^2 sits at k = 1/sqrt(3)
    return 9.0 * model.max_frequency / (8.0 * np.sqrt(3.0))


def invert_omega(model: DispersionModel, w):
    """Wavenumber of the unique mode with frequency w."""
    w = np.asarray(w, dtype=float)
    lower, upper = band(model)
    if np.any(~np.isfinite(w)) or np.any(w < lower) or np.any(w >= upper):
        raise OutOfBandError(
            f"Frequency outside the band [{lower:.6g}, {upper:.6g}) of {model.kind.value}"
        )
    kind = model.kind
    if kind is DispersionKind.RELATIVISTIC_MASSIVE:
        out = np.sqrt((w - model.mass) * (w + model.mass))
    elif kind is DispersionKind.RELATIVISTIC_MASSLESS:
        out = w.copy()
    elif kind is DispersionKind.SCHROEDINGER:
        out = np.sqrt(2.0 * model.mass * w)
    else:
        out = np.sqrt(w / (model.max_frequency - w))
    return _scalar(out)


def mode_weight(model: DispersionModel, w):
    """Mode normalization h(omega)."""
    w = np.asarray(w, dtype=float)
    if model.weight_rule is WeightRule.UNIT:
        return _scalar(np.ones_like(w))
    if np.any(w <= 0):
        raise NumericDomainError("inverse_sqrt_two_omega weight is singular at omega <= 0")
    return _scalar(1.0 / np.sqrt(2.0 * w))


def omega_prime(model: DispersionModel, k):
    """Frequency above the band floor, omega(k) - omega(0)."""
    return _scalar(np.asarray(omega(model, k)) - omega(model, 0.0))


def invert_omega_prime(model: DispersionModel, w_prime):
    """Wavenumber of the mode sitting w_prime above the band floor."""
    return invert_omega(model, np.asarray(w_prime, dtype=float) + omega(model, 0.0))
