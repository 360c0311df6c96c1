"""Command-line surface: synth, fidelity, sweep, correlator and propagate runs."""
from __future__ import annotations

import argparse
from contextlib import nullcontext
from dataclasses import dataclass
import logging
import math
from pathlib import Path
import sys
from typing import Any, Callable, ContextManager, Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import __version__
from .config import RunConfig, load_config
from .const import (
    AMPLITUDE_COLUMNS,
    BAND_EDGE_TOLERANCE,
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
    CONF_HALF_SPAN,
    CONF_INGOING,
    CONF_K_CENTER,
    CONF_K_COUNT,
    CONF_K_MAX,
    CONF_K_MIN,
    CONF_K_WIDTH,
    CONF_M_INDEX,
    CONF_MOLLIFIER_ORDER,
    CONF_MOLLIFIER_TAU,
    CONF_OMEGA_C,
    CONF_OMEGA_COUNT,
    CONF_POINT_TIMEOUT,
    CONF_R_COUNT,
    CONF_R_MAX,
    CONF_R_MIN,
    CONF_SPIKE_WIDTH,
    CONF_T0,
    CONF_T_VALUES,
    CONF_TIME_COUNT,
    CONF_TIME_STEP,
    CONF_VALUES,
    CONF_X_COUNT,
    CONF_X_MAX,
    CONF_X_MIN,
    CORRELATOR_COLUMNS,
    DEFAULT_MOLLIFIER_ORDER,
    DEFAULT_TAIL_ETA,
    DOMAIN,
    ENV_THREADS,
    EXIT_OK,
    FILE_AMPLITUDES_DESIRED,
    FILE_AMPLITUDES_GENERATED,
    FILE_CORRELATOR,
    FILE_PLAN,
    FILE_PROPAGATE,
    FILE_SPECTRUM,
    FILE_SWEEP,
    FILE_WINDOW,
    FILE_WINDOW_PHYSICAL,
    PROPAGATE_COLUMNS,
    SECTION_CORRELATOR,
    SECTION_GRID,
    SECTION_OUTPUT,
    SECTION_PROPAGATE,
    SECTION_SWEEP,
    SECTION_TARGET,
    SECTION_WINDOW,
    SPECTRUM_COLUMNS,
    SWEEP_AXES,
    SWEEP_COLUMNS,
    WINDOW_COLUMNS,
)
from .coordinator import PointResult, SweepCoordinator, resolve_threads
from .dispersion import DispersionModel, WeightRule, group_velocity, omega, omega_prime
from .dynamics import (
    CorrelatorQuery,
    check_infrared,
    correlator,
    delta_window_state,
    fit_decay_rate,
    probe_amplitude,
    superoscillation_needed_everywhere,
    track_peak,
)
from .errors import ConfigError, DistributionalError, NumericDomainError, RspError
from .fieldstate import (
    ModeAmplitude,
    SuccessProbability,
    TargetState,
    desired_amplitude,
    desired_time_window,
    fidelity,
    generated_amplitude,
    infidelity_tail,
    success_probability,
    tail_to_cutoff,
)
from .numerics import Grid1D, SampledFunction, linear_fit
from .report import RunReport, fit_summary, write_csv
from .superosc import (
    BasisKind,
    Mollifier,
    PlanTerm,
    SuperoscParams,
    WindowPlan,
    evaluate_plan,
    mollify,
    pair_band_error,
    physical_window,
    quantized_inverse_delta_sq,
    reconstruct_time_scaled,
    resolution_figure,
    synthesize_window,
    write_plan,
)

_LOGGER = logging.getLogger(__name__)

# Window CSV covers [-t0, 0] with this margin on each side, in units of t0
_WINDOW_MARGIN = 0.25
# Envelope-derived wavenumber grids reach this many widths around the carrier
_ENVELOPE_SPAN = 8.0
_MIN_FIT_POINTS = 3


@dataclass
class Synthesis:
    """Everything one synthesis pipeline produced."""

    plan: WindowPlan
    spectrum: SampledFunction
    k_grid: Grid1D
    desired: ModeAmplitude
    generated: ModeAmplitude
    fidelity: float
    eta: float
    success: SuccessProbability
    mollifier: Optional[Mollifier] = None


def _stage(report: Optional[RunReport], name: str) -> ContextManager[None]:
    return report.stage(name) if report is not None else nullcontext()


def _infrared_singular(model: DispersionModel) -> bool:
    return model.weight_rule is WeightRule.INVERSE_SQRT_TWO_OMEGA and omega(model, 0.0) == 0


def _k_grid(config: RunConfig, default_max: float, default_min: float = 0.0) -> Grid1D:
    """Wavenumber grid from [grid], stepping off k = 0 where the mode weight is singular."""
    grid = config.sections[SECTION_GRID]
    k_max = grid.get(CONF_K_MAX, default_max)
    count = grid[CONF_K_COUNT]
    k_min = grid.get(CONF_K_MIN)
    if k_min is None:
        k_min = default_min
        if k_min == 0 and _infrared_singular(config.model):
            k_min = k_max / count
    if k_min == 0 and _infrared_singular(config.model):
        raise ConfigError("The mode weight is singular at k = 0; set k_min > 0", f"{SECTION_GRID}.{CONF_K_MIN}")
    if k_max <= k_min:
        raise ConfigError(f"k_max {k_max:.6g} must exceed k_min {k_min:.6g}", f"{SECTION_GRID}.{CONF_K_MAX}")
    return Grid1D.spanning(k_min, k_max, count)


def _time_grid(half_span: float, step: float) -> Grid1D:
    """Symmetric grid with spacing ``step`` covering [-half_span, half_span]."""
    count = max(1, math.ceil(half_span / step - 1e-9))
    return Grid1D(-count * step, step, 2 * count + 1)


def _band_edge(config: RunConfig) -> float:
    omega_c = config.get(SECTION_WINDOW, CONF_OMEGA_C)
    if omega_c is None:
        omega_c = tail_to_cutoff(config.target, DEFAULT_TAIL_ETA)
        _LOGGER.debug("Band edge %.6g from the eta = %.3g tail", omega_c, DEFAULT_TAIL_ETA)
    return omega_c


def _mollifier(config: RunConfig) -> Optional[Mollifier]:
    window = config.sections[SECTION_WINDOW]
    tau = window.get(CONF_MOLLIFIER_TAU)
    if tau is None:
        return None
    return Mollifier(window.get(CONF_MOLLIFIER_ORDER, DEFAULT_MOLLIFIER_ORDER), tau)


def _plan_support(config: RunConfig, mollifier: Optional[Mollifier]) -> float:
    """Support length of the unmollified window, t0 or t0 - tau."""
    t0 = config.sections[SECTION_WINDOW][CONF_T0]
    return t0 if mollifier is None else mollifier.inner_support(t0)


def _assess(
    config: RunConfig, plan: WindowPlan, k_grid: Grid1D, omega_grid: Grid1D, report: Optional[RunReport] = None
) -> Synthesis:
    """Spectrum, amplitudes, fidelity, success probability and tail of a plan."""
    target: TargetState = config.target
    window = config.sections[SECTION_WINDOW]
    mollifier = _mollifier(config)
    with _stage(report, "spectrum"):
        spectrum = evaluate_plan(plan, omega_grid)
        if mollifier is not None:
            spectrum = mollify(spectrum, mollifier.order_n, mollifier.tau, window[CONF_T0])
    with _stage(report, "fidelity"):
        desired = desired_amplitude(target, k_grid)
        generated = generated_amplitude(spectrum, target, k_grid)
        value = fidelity(desired, generated)
    with _stage(report, "probability"):
        success = success_probability(
            plan,
            target,
            window[CONF_COUPLING],
            k_grid,
            config.sections[SECTION_GRID][CONF_TIME_COUNT],
            window.get(CONF_SPIKE_WIDTH),
            mollifier,
        )
    eta = infidelity_tail(target, plan.omega_c)
    return Synthesis(plan, spectrum, k_grid, desired, generated, value, eta, success, mollifier)


def _frequency_grid(config: RunConfig, k_grid: Grid1D) -> Grid1D:
    top = float(omega_prime(config.model, k_grid.stop))
    return Grid1D.spanning(0.0, top, config.sections[SECTION_GRID][CONF_OMEGA_COUNT])


def synthesize(config: RunConfig, report: Optional[RunReport] = None) -> Synthesis:
    """Desired window, plan synthesis and the plan's assessment."""
    target: TargetState = config.target
    window = config.sections[SECTION_WINDOW]
    k_grid = _k_grid(config, target.profile.spectral_extent)
    omega_grid = _frequency_grid(config, k_grid)
    time_grid = _time_grid(window.get(CONF_HALF_SPAN, target.profile.radial_extent), window[CONF_TIME_STEP])
    omega_c = _band_edge(config)
    support = _plan_support(config, _mollifier(config))

    with _stage(report, "synthesis"):
        desired_window = desired_time_window(target, time_grid, omega_grid)
        plan = synthesize_window(desired_window, support, omega_c, window[CONF_M_INDEX], target.omega0)
    return _assess(config, plan, k_grid, omega_grid, report)


def _prepare_output(config: RunConfig) -> Path:
    directory = config.output_directory
    try:
        directory.mkdir(parents=True, exist_ok=True)
    except OSError as err:
        raise ConfigError(f"Cannot create {directory}: {err}", f"{SECTION_OUTPUT}.{CONF_DIRECTORY}") from err
    return directory


def _new_report(config: RunConfig) -> RunReport:
    return RunReport(config.command, config.echo(), config.input_hash)


def _complex_rows(points: np.ndarray, values: np.ndarray) -> List[Tuple[float, float, float, float]]:
    return [(x, v.real, v.imag, abs(v)) for x, v in zip(points, values)]


def _record_synthesis(config: RunConfig, result: Synthesis, report: RunReport, directory: Path) -> None:
    plan = result.plan
    window = config.sections[SECTION_WINDOW]
    t0 = window[CONF_T0]

    path = directory / FILE_PLAN
    write_plan(plan, path)
    report.add_file(path)
    report.add_file(
        write_csv(
            directory / FILE_SPECTRUM,
            SPECTRUM_COLUMNS,
            _complex_rows(result.spectrum.points(), result.spectrum.values),
        )
    )

    with report.stage("reconstruction"):
        time_grid = Grid1D.spanning(
            -(1 + _WINDOW_MARGIN) * t0,
            _WINDOW_MARGIN * t0,
            config.sections[SECTION_GRID][CONF_TIME_COUNT],
        )
        scaled, log_scale = reconstruct_time_scaled(
            plan, time_grid, window.get(CONF_SPIKE_WIDTH), result.mollifier
        )
        physical = physical_window(plan, scaled)
    report.add_file(write_csv(directory / FILE_WINDOW, WINDOW_COLUMNS, _complex_rows(time_grid.points(), scaled.values)))
    report.add_file(
        write_csv(directory / FILE_WINDOW_PHYSICAL, WINDOW_COLUMNS, _complex_rows(time_grid.points(), physical.values))
    )

    figure, cosh_eff = resolution_figure(plan)
    modulus_error, phase_error = pair_band_error(plan)
    if modulus_error > BAND_EDGE_TOLERANCE:
        _LOGGER.warning(
            "Pair terms deviate from plane waves on [0, %.6g] by up to %.3g in modulus and %.3g rad in phase",
            plan.omega_c,
            modulus_error,
            phase_error,
        )
    target: TargetState = config.target
    report.derived.update(
        {
            "omega_c": plan.omega_c,
            "omega0": plan.omega0,
            "eta": result.eta,
            "fidelity": result.fidelity,
            "log_p": result.success.log_probability,
            "probability": result.success.probability,
            "perturbative": result.success.perturbative,
            "log_window_energy": result.success.log_window_energy,
            "window_log_scale": log_scale,
            "T_used": plan.T,
            "t0_superoscillatory": plan.t0,
            "m_index": plan.m_index,
            "impulse_terms": len(plan.impulse_terms()),
            "pair_terms": len(plan.pair_terms()),
            "resolution_figure": figure,
            "cosh_a_effective": cosh_eff,
            "pair_modulus_error": modulus_error,
            "pair_phase_error": phase_error,
            "superoscillation_needed_everywhere": superoscillation_needed_everywhere(
                config.model,
                target.profile.L,
                t0,
                config.get(SECTION_TARGET, CONF_INGOING, False),
            ),
        }
    )


def cmd_synth(config: RunConfig, threads: int = 1) -> RunReport:
    """Synthesize the window for the target and write plan, spectrum, window and report."""
    directory = _prepare_output(config)
    report = _new_report(config)
    result = synthesize(config, report)
    _record_synthesis(config, result, report, directory)
    _LOGGER.info("Synthesis completed with fidelity %.9f", result.fidelity)
    report.write(directory)
    return report


def _amplitude_rows(amplitude: ModeAmplitude) -> List[Tuple[float, float, float, float]]:
    return [
        (k, v.real, v.imag, w)
        for k, v, w in zip(amplitude.points(), amplitude.values, amplitude.omega_k())
    ]


def cmd_fidelity(config: RunConfig, threads: int = 1) -> RunReport:
    """Synthesis plus the desired and generated amplitudes."""
    directory = _prepare_output(config)
    report = _new_report(config)
    result = synthesize(config, report)
    _record_synthesis(config, result, report, directory)
    report.add_file(write_csv(directory / FILE_AMPLITUDES_DESIRED, AMPLITUDE_COLUMNS, _amplitude_rows(result.desired)))
    report.add_file(
        write_csv(directory / FILE_AMPLITUDES_GENERATED, AMPLITUDE_COLUMNS, _amplitude_rows(result.generated))
    )
    report.write(directory)
    return report


def _pair_plan(config: RunConfig, a_value: float, omega_c: float) -> WindowPlan:
    """Plan of a single unit pair whose local frequency follows from A."""
    t0 = _plan_support(config, _mollifier(config))
    m_index = config.sections[SECTION_WINDOW][CONF_M_INDEX]
    omega0 = config.target.omega0
    t_prime = t0 * (math.cosh(a_value) - 1.0) / 2.0
    params = SuperoscParams.for_offset(t_prime, t0, m_index, omega0=omega0)
    term = PlanTerm(t_prime, 1.0 + 0j, BasisKind.SUPEROSC_PAIR, params)
    return WindowPlan((term,), t0, t_prime, omega_c, m_index, omega0)


def _sweep_worker(config: RunConfig) -> Callable[[float], Synthesis]:
    axis = config.sections[SECTION_SWEEP][CONF_AXIS]
    if axis != "A":
        section = SWEEP_AXES[axis]["section"]
        return lambda value: synthesize(config.with_value(section, axis, value))

    k_grid = _k_grid(config, config.target.profile.spectral_extent)
    omega_grid = _frequency_grid(config, k_grid)
    omega_c = _band_edge(config)
    return lambda value: _assess(config, _pair_plan(config, value, omega_c), k_grid, omega_grid)


def _sweep_row(point: PointResult) -> Tuple[Any, ...]:
    if not point.ok:
        return (point.value, None, None, None, None, f"{point.kind}: {point.error}")
    result: Synthesis = point.result
    return (
        point.value,
        result.fidelity,
        result.success.log_probability,
        result.eta,
        result.plan.omega_c,
        None,
    )


def _fit_point(config: RunConfig, axis: str, point: PointResult) -> Optional[Tuple[float, float]]:
    """(x, y) of a point for the axis' scaling law, or None when it does not enter the fit."""
    result: Synthesis = point.result
    if axis == "A":
        inverse_delta_sq = quantized_inverse_delta_sq(config.sections[SECTION_WINDOW][CONF_M_INDEX])
        return math.sinh(point.value) * inverse_delta_sq, result.success.log_probability
    if axis == CONF_HALF_SPAN:
        return point.value**2, result.success.log_probability
    if axis == CONF_OMEGA_C and result.eta > 0:
        return math.log(result.eta), math.log(result.plan.omega_c)
    return None


def _sweep_fit(config: RunConfig, points: Sequence[PointResult]) -> Optional[Dict[str, Any]]:
    axis = config.sections[SECTION_SWEEP][CONF_AXIS]
    law = SWEEP_AXES[axis]["fit"]
    if law is None:
        return None
    pairs = [_fit_point(config, axis, point) for point in points if point.ok]
    pairs = [pair for pair in pairs if pair is not None and all(math.isfinite(v) for v in pair)]
    if len(pairs) < _MIN_FIT_POINTS:
        _LOGGER.warning("Only %d usable points for the %s fit; skipping it", len(pairs), law)
        return None
    x, y = zip(*pairs)
    return fit_summary(linear_fit(np.array(x), np.array(y)), law)


def cmd_sweep(config: RunConfig, threads: int = 1) -> RunReport:
    """Run the synthesis pipeline along one axis and fit its scaling law."""
    directory = _prepare_output(config)
    report = _new_report(config)
    sweep = config.sections[SECTION_SWEEP]
    coordinator = SweepCoordinator(_sweep_worker(config), threads, sweep[CONF_POINT_TIMEOUT])

    with report.stage("sweep"):
        points = coordinator.run(sweep[CONF_VALUES])
    report.add_file(write_csv(directory / FILE_SWEEP, SWEEP_COLUMNS, [_sweep_row(point) for point in points]))

    failed = [point for point in points if not point.ok]
    report.derived.update({"axis": sweep[CONF_AXIS], "points": len(points), "failed_points": len(failed)})
    fit = _sweep_fit(config, points)
    if fit is not None:
        report.fits[sweep[CONF_AXIS]] = fit
    report.write(directory)
    return report


def _correlator_worker(model: DispersionModel, dimension_d: int, epsilon0: float):
    def evaluate(point: Tuple[float, float]) -> Tuple[complex, str]:
        r, dt = point
        try:
            return correlator(CorrelatorQuery(model, dimension_d, r, dt), epsilon0), ""
        except DistributionalError as err:
            _LOGGER.debug("Correlator at r = %.6g, dt = %.6g is distributional: %s", r, dt, err)
            return complex(math.nan, math.nan), "distributional"

    return evaluate


def _correlator_row(point: PointResult) -> Tuple[Any, ...]:
    r, dt = point.value
    if not point.ok:
        return (r, dt, math.nan, math.nan, math.nan, point.kind)
    value, flag = point.result
    return (r, dt, value.real, value.imag, abs(value), flag)


def cmd_correlator(config: RunConfig, threads: int = 1) -> RunReport:
    """Vacuum correlator over a separation range for each time difference."""
    directory = _prepare_output(config)
    report = _new_report(config)
    section = config.sections[SECTION_CORRELATOR]
    dimension_d = section[CONF_DIMENSION]
    check_infrared(config.model, dimension_d)

    r_values = np.linspace(section[CONF_R_MIN], section[CONF_R_MAX], section[CONF_R_COUNT])
    queries = [(float(r), float(dt)) for dt in section[CONF_DT_VALUES] for r in r_values]
    coordinator = SweepCoordinator(_correlator_worker(config.model, dimension_d, section[CONF_EPSILON0]), threads)
    with report.stage("correlator"):
        points = coordinator.run(queries)
    report.add_file(
        write_csv(directory / FILE_CORRELATOR, CORRELATOR_COLUMNS, [_correlator_row(point) for point in points])
    )

    equal_time = [
        (point.value[0], point.result[0])
        for point in points
        if point.ok and point.value[1] == 0 and point.value[0] > 0 and point.result[1] == "" and point.result[0] != 0
    ]
    report.derived.update(
        {
            "rows": len(points),
            "distributional_rows": sum(1 for point in points if point.ok and point.result[1]),
            "failed_rows": sum(1 for point in points if not point.ok),
        }
    )
    if len(equal_time) >= _MIN_FIT_POINTS:
        r, values = zip(*equal_time)
        fit = fit_decay_rate(np.array(r), np.array(values), dimension_d)
        report.fits["decay_rate"] = fit_summary(fit, "-log(|C| r^(d/2)) vs r")
        report.derived["decay_rate"] = fit.slope
    report.write(directory)
    return report


def _propagate_k_grid(config: RunConfig) -> Grid1D:
    propagate = config.sections[SECTION_PROPAGATE]
    k_center = propagate.get(CONF_K_CENTER)
    if k_center is not None:
        reach = _ENVELOPE_SPAN * propagate[CONF_K_WIDTH]
        return _k_grid(config, k_center + reach, max(0.0, k_center - reach))
    if config.get(SECTION_GRID, CONF_K_MAX) is None:
        raise ConfigError("Set grid.k_max or an envelope for propagation", f"{SECTION_GRID}.{CONF_K_MAX}")
    return _k_grid(config, config.get(SECTION_GRID, CONF_K_MAX))


def cmd_propagate(config: RunConfig, threads: int = 1) -> RunReport:
    """|probe(x, t)| of the delta-window state on a rectangular (x, t) grid."""
    directory = _prepare_output(config)
    report = _new_report(config)
    propagate = config.sections[SECTION_PROPAGATE]
    envelope = None
    if propagate.get(CONF_K_CENTER) is not None:
        envelope = (propagate[CONF_K_CENTER], propagate[CONF_K_WIDTH])

    k_grid = _propagate_k_grid(config)
    state = delta_window_state(config.model, config.sections[SECTION_WINDOW][CONF_T0], k_grid, envelope)
    x = np.linspace(propagate[CONF_X_MIN], propagate[CONF_X_MAX], propagate[CONF_X_COUNT])
    times = propagate[CONF_T_VALUES]

    rows: List[Tuple[float, float, float]] = []
    peaks: List[Dict[str, float]] = []
    forward = x >= 0
    with report.stage("propagation"):
        for t in times:
            magnitude = np.abs(probe_amplitude(state, x, t))
            rows.extend((xx, t, mm) for xx, mm in zip(x, magnitude))
            if np.count_nonzero(forward) >= 3:
                try:
                    peaks.append({"t": t, "x": track_peak(x[forward], magnitude[forward])})
                except NumericDomainError as err:
                    _LOGGER.debug("No interior peak at t = %.6g: %s", t, err)
    report.add_file(write_csv(directory / FILE_PROPAGATE, PROPAGATE_COLUMNS, rows))

    report.derived["peaks"] = peaks
    if envelope is not None:
        report.derived["group_velocity_center"] = float(group_velocity(config.model, envelope[0]))
    if len(peaks) >= 2:
        fit = linear_fit(np.array([peak["t"] for peak in peaks]), np.array([peak["x"] for peak in peaks]))
        report.fits["packet_velocity"] = fit_summary(fit, "peak x vs t")
    report.write(directory)
    return report


COMMAND_HANDLERS: Dict[str, Callable[[RunConfig, int], RunReport]] = {
    CMD_SYNTH: cmd_synth,
    CMD_FIDELITY: cmd_fidelity,
    CMD_SWEEP: cmd_sweep,
    CMD_CORRELATOR: cmd_correlator,
    CMD_PROPAGATE: cmd_propagate,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog=DOMAIN,
        description="Remote state preparation of field states by superoscillating detector windows.",
    )
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", required=True, type=Path, help="sectioned key=value run configuration")
    parser.add_argument("--out", type=Path, help="output directory, overrides [output] directory")
    parser.add_argument("--threads", type=int, help=f"worker threads, overrides {ENV_THREADS}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log at debug level")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    return parser


def format_error(err: RspError) -> str:
    """Single machine-parseable line describing a failed run."""
    message = " ".join(str(err).split()).replace("\\", "\\\\").replace('"', '\\"')
    return f'error code={err.exit_code} kind={type(err).__name__} field={err.field or "-"} message="{message}"'


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    try:
        threads = resolve_threads(args.threads)
        config = load_config(args.config, args.command, args.out)
        COMMAND_HANDLERS[args.command](config, threads)
    except RspError as err:
        _LOGGER.error("%s failed: %s", args.command, err)
        print(format_error(err), file=sys.stderr)
        return err.exit_code
    return EXIT_OK
