"""Run configuration for rsp_fields: sectioned key=value files validated per section."""
from __future__ import annotations

import configparser
from dataclasses import dataclass
import hashlib
import logging
from pathlib import Path
from typing import Any, Callable, Dict, Mapping, Optional, Tuple, Union

import voluptuous as vol

from .const import (
    CMD_CORRELATOR,
    CMD_FIDELITY,
    CMD_PROPAGATE,
    CMD_SWEEP,
    CMD_SYNTH,
    COMMANDS,
    CONF_AXIS,
    CONF_COUPLING,
    CONF_DIMENSION,
    CONF_DIRECTORY,
    CONF_DT_VALUES,
    CONF_EPSILON0,
    CONF_GAP,
    CONF_HALF_SPAN,
    CONF_INGOING,
    CONF_K_CENTER,
    CONF_K_COUNT,
    CONF_K_MAX,
    CONF_K_MIN,
    CONF_K_WIDTH,
    CONF_KIND,
    CONF_M_INDEX,
    CONF_MASS,
    CONF_MAX_FREQUENCY,
    CONF_MOLLIFIER_ORDER,
    CONF_MOLLIFIER_TAU,
    CONF_OMEGA_C,
    CONF_OMEGA_COUNT,
    CONF_POINT_TIMEOUT,
    CONF_PROFILE,
    CONF_R_COUNT,
    CONF_R_MAX,
    CONF_R_MIN,
    CONF_RADIUS,
    CONF_SPIKE_WIDTH,
    CONF_T0,
    CONF_T_VALUES,
    CONF_TIME_COUNT,
    CONF_TIME_STEP,
    CONF_VALUES,
    CONF_WEIGHT_RULE,
    CONF_WIDTH,
    CONF_X_COUNT,
    CONF_X_MAX,
    CONF_X_MIN,
    DEFAULT_CORRELATOR_DIMENSION,
    DEFAULT_COUPLING,
    DEFAULT_EPSILON0,
    DEFAULT_K_COUNT,
    DEFAULT_M_INDEX,
    DEFAULT_OMEGA_COUNT,
    DEFAULT_OUTPUT_DIRECTORY,
    DEFAULT_POINT_TIMEOUT,
    DEFAULT_R_COUNT,
    DEFAULT_TIME_COUNT,
    DEFAULT_TIME_STEP,
    DEFAULT_X_COUNT,
    MOLLIFIER_MIN_ORDER,
    SECTION_CORRELATOR,
    SECTION_GRID,
    SECTION_MODEL,
    SECTION_OUTPUT,
    SECTION_PROPAGATE,
    SECTION_SWEEP,
    SECTION_TARGET,
    SECTION_WINDOW,
    SWEEP_AXES,
)
from .dispersion import DispersionKind, DispersionModel, WeightRule
from .errors import ConfigError, NumericDomainError
from .fieldstate import Profile, ProfileKind, TargetState

_LOGGER = logging.getLogger(__name__)


def float_list(value: Any) -> Tuple[float, ...]:
    """Validate a comma separated list of numbers."""
    if isinstance(value, (list, tuple)):
        items = list(value)
    else:
        items = [item.strip() for item in str(value).split(",") if item.strip()]
    if not items:
        raise vol.Invalid("expected at least one value")
    try:
        return tuple(float(item) for item in items)
    except (TypeError, ValueError) as err:
        raise vol.Invalid(f"not a list of numbers: {value}") from err


POSITIVE = vol.All(vol.Coerce(float), vol.Range(min=0, min_included=False))
NON_NEGATIVE = vol.All(vol.Coerce(float), vol.Range(min=0))
COUNT = vol.All(vol.Coerce(int), vol.Range(min=2))
DIMENSION = vol.All(vol.Coerce(int), vol.In([1, 2, 3]))

MODEL_SCHEMA = vol.Schema(
    {
        vol.Required(CONF_KIND): vol.In([kind.value for kind in DispersionKind]),
        vol.Optional(CONF_MASS, default=0.0): NON_NEGATIVE,
        vol.Optional(CONF_MAX_FREQUENCY): POSITIVE,
        vol.Optional(CONF_WEIGHT_RULE): vol.In([rule.value for rule in WeightRule]),
    }
)

TARGET_SCHEMA = vol.Schema(
    {
        vol.Required(CONF_PROFILE): vol.In([kind.value for kind in ProfileKind]),
        vol.Required(CONF_DIMENSION): DIMENSION,
        vol.Required(CONF_WIDTH): POSITIVE,
        vol.Optional(CONF_RADIUS, default=0.0): NON_NEGATIVE,
        vol.Optional(CONF_GAP, default=0.0): NON_NEGATIVE,
        vol.Optional(CONF_INGOING, default=False): vol.Boolean(),
    }
)


def window_schema(t0_required: bool) -> vol.Schema:
    """Window section; propagation runs treat t0 as an optional delay."""
    t0 = vol.Required(CONF_T0) if t0_required else vol.Optional(CONF_T0, default=0.0)
    return vol.Schema(
        {
            t0: POSITIVE if t0_required else NON_NEGATIVE,
            vol.Optional(CONF_HALF_SPAN): POSITIVE,
            vol.Optional(CONF_M_INDEX, default=DEFAULT_M_INDEX): vol.All(
                vol.Coerce(int), vol.Range(min=1)
            ),
            vol.Optional(CONF_OMEGA_C): POSITIVE,
            vol.Optional(CONF_TIME_STEP, default=DEFAULT_TIME_STEP): POSITIVE,
            vol.Optional(CONF_COUPLING, default=DEFAULT_COUPLING): POSITIVE,
            vol.Optional(CONF_MOLLIFIER_ORDER): vol.All(
                vol.Coerce(int), vol.Range(min=MOLLIFIER_MIN_ORDER)
            ),
            vol.Optional(CONF_MOLLIFIER_TAU): POSITIVE,
            vol.Optional(CONF_SPIKE_WIDTH): POSITIVE,
        }
    )


GRID_SCHEMA = vol.Schema(
    {
        vol.Optional(CONF_K_MIN): NON_NEGATIVE,
        vol.Optional(CONF_K_MAX): POSITIVE,
        vol.Optional(CONF_K_COUNT, default=DEFAULT_K_COUNT): COUNT,
        vol.Optional(CONF_OMEGA_COUNT, default=DEFAULT_OMEGA_COUNT): COUNT,
        vol.Optional(CONF_TIME_COUNT, default=DEFAULT_TIME_COUNT): COUNT,
    }
)

SWEEP_SCHEMA = vol.Schema(
    {
        vol.Required(CONF_AXIS): vol.In(list(SWEEP_AXES)),
        vol.Required(CONF_VALUES): float_list,
        vol.Optional(CONF_POINT_TIMEOUT, default=DEFAULT_POINT_TIMEOUT): POSITIVE,
    }
)

CORRELATOR_SCHEMA = vol.Schema(
    {
        vol.Optional(CONF_DIMENSION, default=DEFAULT_CORRELATOR_DIMENSION): DIMENSION,
        vol.Required(CONF_R_MIN): NON_NEGATIVE,
        vol.Required(CONF_R_MAX): NON_NEGATIVE,
        vol.Optional(CONF_R_COUNT, default=DEFAULT_R_COUNT): vol.All(
            vol.Coerce(int), vol.Range(min=1)
        ),
        vol.Optional(CONF_DT_VALUES, default="0"): float_list,
        vol.Optional(CONF_EPSILON0, default=DEFAULT_EPSILON0): POSITIVE,
    }
)

PROPAGATE_SCHEMA = vol.Schema(
    {
        vol.Required(CONF_X_MIN): vol.Coerce(float),
        vol.Required(CONF_X_MAX): vol.Coerce(float),
        vol.Optional(CONF_X_COUNT, default=DEFAULT_X_COUNT): COUNT,
        vol.Required(CONF_T_VALUES): float_list,
        vol.Optional(CONF_K_CENTER): NON_NEGATIVE,
        vol.Optional(CONF_K_WIDTH): POSITIVE,
    }
)

OUTPUT_SCHEMA = vol.Schema(
    {vol.Optional(CONF_DIRECTORY, default=DEFAULT_OUTPUT_DIRECTORY): vol.All(str, vol.Length(min=1))}
)

# (required sections, optional sections) per command
_SYNTH_SECTIONS = ((SECTION_MODEL, SECTION_TARGET, SECTION_WINDOW), (SECTION_GRID, SECTION_OUTPUT))
COMMAND_SECTIONS: Dict[str, Tuple[Tuple[str, ...], Tuple[str, ...]]] = {
    CMD_SYNTH: _SYNTH_SECTIONS,
    CMD_FIDELITY: _SYNTH_SECTIONS,
    CMD_SWEEP: (_SYNTH_SECTIONS[0] + (SECTION_SWEEP,), _SYNTH_SECTIONS[1]),
    CMD_CORRELATOR: ((SECTION_MODEL, SECTION_CORRELATOR), (SECTION_OUTPUT,)),
    CMD_PROPAGATE: (
        (SECTION_MODEL, SECTION_PROPAGATE),
        (SECTION_WINDOW, SECTION_GRID, SECTION_OUTPUT),
    ),
}


def _section_schema(section: str, command: str) -> vol.Schema:
    if section == SECTION_WINDOW:
        return window_schema(command != CMD_PROPAGATE)
    return {
        SECTION_MODEL: MODEL_SCHEMA,
        SECTION_TARGET: TARGET_SCHEMA,
        SECTION_GRID: GRID_SCHEMA,
        SECTION_SWEEP: SWEEP_SCHEMA,
        SECTION_CORRELATOR: CORRELATOR_SCHEMA,
        SECTION_PROPAGATE: PROPAGATE_SCHEMA,
        SECTION_OUTPUT: OUTPUT_SCHEMA,
    }[section]


def _validate(section: str, schema: vol.Schema, data: Mapping[str, Any]) -> Dict[str, Any]:
    try:
        return schema(dict(data))
    except vol.Invalid as err:
        first = getattr(err, "errors", [err])[0]
        key = first.path[0] if first.path else None
        field = f"{section}.{key}" if key is not None else section
        raise ConfigError(f"Invalid value for {field}: {first.msg}", field) from err


def _construct(field: str, factory: Callable[[], Any]) -> Any:
    try:
        return factory()
    except NumericDomainError as err:
        raise ConfigError(str(err), field) from err


def build_model(data: Mapping[str, Any]) -> DispersionModel:
    """Return the dispersion model described by a validated [model] section."""
    return _construct(
        f"{SECTION_MODEL}.{CONF_KIND}",
        lambda: DispersionModel(
            DispersionKind(data[CONF_KIND]),
            mass=data[CONF_MASS],
            max_frequency=data.get(CONF_MAX_FREQUENCY),
            weight_rule=data.get(CONF_WEIGHT_RULE),
        ),
    )


def build_target(data: Mapping[str, Any], model: DispersionModel) -> TargetState:
    """Return the target state described by a validated [target] section."""
    profile = _construct(
        f"{SECTION_TARGET}.{CONF_PROFILE}",
        lambda: Profile(ProfileKind(data[CONF_PROFILE]), width=data[CONF_WIDTH], L=data[CONF_RADIUS]),
    )
    return _construct(
        f"{SECTION_TARGET}.{CONF_DIMENSION}",
        lambda: TargetState(data[CONF_DIMENSION], profile, data[CONF_GAP], model),
    )


@dataclass(frozen=True)
class RunConfig:
    """A validated run configuration."""

    command: str
    sections: Dict[str, Dict[str, Any]]
    model: DispersionModel
    target: Optional[TargetState]
    output_directory: Path
    input_hash: str

    def get(self, section: str, key: str, default: Any = None) -> Any:
        return self.sections.get(section, {}).get(key, default)

    def echo(self) -> Dict[str, Dict[str, Any]]:
        """JSON friendly copy of the validated sections."""
        return {
            section: {key: list(value) if isinstance(value, tuple) else value for key, value in data.items()}
            for section, data in sorted(self.sections.items())
        }

    def with_value(self, section: str, key: str, value: Any) -> RunConfig:
        """Return a copy with one key replaced and every section validated again."""
        sections = {name: dict(data) for name, data in self.sections.items()}
        sections.setdefault(section, {})[key] = value
        return build_config(self.command, sections, self.input_hash, self.output_directory)


def build_config(
    command: str,
    raw_sections: Mapping[str, Mapping[str, Any]],
    input_hash: str,
    output_override: Optional[Union[str, Path]] = None,
) -> RunConfig:
    """Validate raw sections for a command and build the model and target."""
    if command not in COMMANDS:
        raise ConfigError(f"Unknown command {command!r}", "command")
    required, optional = COMMAND_SECTIONS[command]
    allowed = set(required) | set(optional)

    for section in raw_sections:
        if section not in allowed:
            raise ConfigError(f"Section [{section}] is not used by {command}", section)
    for section in required:
        if section not in raw_sections:
            raise ConfigError(f"Missing section [{section}]", section)

    sections = {
        section: _validate(section, _section_schema(section, command), raw_sections.get(section, {}))
        for section in (*required, *optional)
        if section in raw_sections or section in (SECTION_GRID, SECTION_OUTPUT, SECTION_WINDOW)
    }

    if SECTION_CORRELATOR in sections:
        correlator = sections[SECTION_CORRELATOR]
        if correlator[CONF_R_MAX] < correlator[CONF_R_MIN]:
            raise ConfigError("r_max must not be below r_min", f"{SECTION_CORRELATOR}.{CONF_R_MAX}")
    if SECTION_PROPAGATE in sections:
        propagate = sections[SECTION_PROPAGATE]
        if propagate[CONF_X_MAX] <= propagate[CONF_X_MIN]:
            raise ConfigError("x_max must exceed x_min", f"{SECTION_PROPAGATE}.{CONF_X_MAX}")
        if (CONF_K_CENTER in propagate) != (CONF_K_WIDTH in propagate):
            missing = CONF_K_WIDTH if CONF_K_CENTER in propagate else CONF_K_CENTER
            raise ConfigError("k_center and k_width go together", f"{SECTION_PROPAGATE}.{missing}")

    model = build_model(sections[SECTION_MODEL])
    target = build_target(sections[SECTION_TARGET], model) if SECTION_TARGET in sections else None

    directory = Path(output_override or sections[SECTION_OUTPUT][CONF_DIRECTORY])
    _LOGGER.debug("Validated %s configuration with sections %s", command, sorted(sections))
    return RunConfig(command, sections, model, target, directory, input_hash)


def parse_config(
    text: str, command: str, output_override: Optional[Union[str, Path]] = None
) -> RunConfig:
    """Parse and validate configuration text."""
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str  # keys such as L and T are case sensitive
    try:
        parser.read_string(text)
    except configparser.Error as err:
        raise ConfigError(f"Malformed configuration: {err}", "config") from err

    raw = {section: dict(parser.items(section)) for section in parser.sections()}
    digest = hashlib.sha256(text.encode("utf-8")).hexdigest()
    return build_config(command, raw, digest, output_override)


def load_config(
    path: Union[str, Path], command: str, output_override: Optional[Union[str, Path]] = None
) -> RunConfig:
    """Read and validate a configuration file."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as err:
        raise ConfigError(f"Cannot read configuration {path}: {err}", "config") from err
    _LOGGER.debug("Loaded configuration from %s", path)
    return parse_config(text, command, output_override)
