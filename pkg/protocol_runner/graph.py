"""
Two-phase LNA qualification workflow using LangGraph.

Phase 1 measures a control device with known parameters to qualify the
test setup; Phase 2 measures a device of unknown parameters against the
integrator's limits and refuses to start without a Phase 1 PASS taken on
the same testbed.
"""

import logging
from typing import Any, Dict, List, Literal, Optional, TypedDict

import numpy as np
from dotenv import load_dotenv
from langgraph.graph import END, StateGraph
from pydantic import BaseModel, Field, ValidationError

from lna_metrics import (
    BandSpec,
    P1dbResult,
    PowerSweep,
    Relation,
    band_compliance,
    extract_p1db,
    gain_at,
    gain_flatness,
    peak_gain,
)
from network_core import DomainError, ScalarTrace, Unit, from_db
from noise_engine import (
    NoiseExtraction,
    build_loss_tables,
    calibrate_receiver,
    chain_noise_temperature,
    extract_noise_temperature,
    hot_temperature,
    noise_figure_from_temperature,
)
from simlab import (
    ReferenceExpectations,
    SaPath,
    Scenario,
    SourceState,
    Standard,
    SwitchState,
    VirtualTestbed,
    reference_expectations,
)
from thermal_model import (
    ThermalProfile,
    effective_temperature,
    fit_lumped_temperature,
    integrated_cable_noise,
    t_loss,
)
from trl_cal import ErrorModel, VerificationResult, deembed, solve_trl, verify_cal
from uncertainty_budget import OperatingPoint, monte_carlo_tdut, propagate_tdut

from .limits import LimitOutcome, Phase1Tolerances, SpecLimits, Verdict, load_limit_set
from .memory import RunStore
from .records import CalibrationSummary, RunRecord, TraceRecord, clean_json, content_hash, derive_run_id

load_dotenv()

logger = logging.getLogger(__name__)

CAUSE_CALIBRATION = "CALIBRATION"


class QualificationError(RuntimeError):
    pass


class Phase2GatingError(QualificationError):
    pass


class RunOptions(BaseModel):
    seed: Optional[int] = Field(default=None, description="Overrides the scenario's testbed seed")
    cable_temperature_mode: Literal["per_frequency", "lumped"] = Field(
        default="per_frequency", description="T_cable as T_eff(f)/(L(f)-1) or one fitted value")
    cold_sensor: Optional[Literal["attenuator", "lna_base"]] = Field(
        default=None, description="Thermometer used as the cold reference; scenario default when unset")
    before_fraction: float = Field(default=0.5, ge=0, le=1, description="Share of the system thru loss before the DUT")
    loss_table_offset_db: float = Field(default=0.0, description="Error added to the attenuator loss in the before table")
    verify_tolerance_db: float = Field(default=0.05, gt=0, description="THRU re-measurement tolerance")
    failure_analysis_sigma: float = Field(default=2.0, ge=0, description="Marginal-failure window in sigmas")
    monte_carlo_samples: int = Field(default=10_000, ge=0, description="0 skips the Monte Carlo check")


class QualificationState(TypedDict, total=False):
    phase: int
    scenario: Scenario
    limits: SpecLimits
    tolerances: Optional[Phase1Tolerances]
    options: RunOptions
    reference: Optional[ReferenceExpectations]
    phase1_reference: Optional[str]
    store: Optional[RunStore]
    testbed: VirtualTestbed
    error_model: ErrorModel
    verification: VerificationResult
    raw_thru_db: ScalarTrace
    traces: Dict[str, ScalarTrace]
    metrics: Dict[str, Any]
    p1db: List[P1dbResult]
    noise: NoiseExtraction
    operating: Dict[str, Any]
    sigma_t_dut: ScalarTrace
    uncertainty: Dict[str, Any]
    outcomes: List[LimitOutcome]
    verdict: Verdict
    cause: Optional[str]
    record: RunRecord
    record_path: Optional[str]
    error: Optional[str]


def _band_values(trace: ScalarTrace, band: BandSpec) -> np.ndarray:
    return trace.values[trace.grid.band_mask(band.f_low_hz, band.f_high_hz)]


def _trace_outcome(name: str, trace: ScalarTrace, threshold: float, relation: Relation, band: BandSpec,
                   sigma, unit: str) -> LimitOutcome:
    """Band compliance of one trace; `sigma` is a trace or a scalar."""
    result = band_compliance(trace, threshold, relation, band)
    values = _band_values(trace, band)
    finite = values[np.isfinite(values)]
    if finite.size:
        measured = float(finite.max() if relation is Relation.BELOW else finite.min())
    else:
        measured = None
    min_violation = None
    point_sigma = sigma if not isinstance(sigma, ScalarTrace) else None
    if not result.passed:
        min_violation = result.min_violation
        excess = values - threshold if relation is Relation.BELOW else threshold - values
        failing = np.flatnonzero(np.isfinite(excess) & (excess > 0))
        if failing.size and isinstance(sigma, ScalarTrace):
            worst = failing[np.argmin(excess[failing])]
            point_sigma = float(_band_values(sigma, band)[worst])
    return LimitOutcome(
        name=name, passed=result.passed, threshold=threshold, measured=measured, unit=unit,
        violations_hz=result.violations, min_violation=min_violation, sigma=point_sigma,
    )


def _scalar_outcome(name: str, value: Optional[float], threshold: float, relation: Relation,
                    sigma: Optional[float], unit: str) -> LimitOutcome:
    if value is None or np.isnan(value):
        return LimitOutcome(name=name, passed=False, threshold=threshold, unit=unit, sigma=sigma)
    excess = value - threshold if relation is Relation.BELOW else threshold - value
    passed = excess <= 0
    return LimitOutcome(
        name=name, passed=passed, threshold=threshold, measured=value, unit=unit,
        min_violation=None if passed else float(excess), sigma=sigma,
    )


def _deviation_outcome(name: str, deviation: np.ndarray, frequencies: np.ndarray, tolerance: float,
                       sigma, unit: str) -> LimitOutcome:
    """|measured - reference| against a Phase 1 tolerance, point by point."""
    deviation = np.abs(np.asarray(deviation, dtype=float))
    excess = deviation - tolerance
    bad = ~(excess <= 0)
    worst = float(np.nanmax(deviation)) if np.any(np.isfinite(deviation)) else None
    min_violation = None
    point_sigma = sigma if np.isscalar(sigma) else None
    if np.any(bad):
        finite_bad = np.flatnonzero(bad & np.isfinite(excess))
        if finite_bad.size:
            idx = finite_bad[np.argmin(excess[finite_bad])]
            min_violation = float(excess[idx])
            if not np.isscalar(sigma):
                point_sigma = float(np.asarray(sigma)[idx])
        else:
            min_violation = float("inf")
    return LimitOutcome(
        name=name, passed=not np.any(bad), threshold=tolerance, measured=worst, unit=unit,
        violations_hz=[float(f) for f in np.asarray(frequencies)[bad]],
        min_violation=min_violation, sigma=point_sigma,
    )


def _mark_marginal(outcome: LimitOutcome, k_sigma: float) -> LimitOutcome:
    if outcome.passed or outcome.min_violation is None or outcome.sigma is None:
        return outcome
    if not (np.isfinite(outcome.min_violation) and np.isfinite(outcome.sigma)):
        return outcome
    outcome.marginal = bool(outcome.min_violation <= k_sigma * outcome.sigma)
    return outcome


class QualificationRunner:
    def __init__(self, store: Optional[RunStore] = None):
        self.store = store
        self.graph = self.create_graph()

    def create_graph(self) -> StateGraph:
        workflow = StateGraph(QualificationState)
        steps = [
            ("calibrate", self.calibrate),
            ("verify_calibration", self.verify_calibration),
            ("s_parameter_suite", self.s_parameter_suite),
            ("power_sweeps", self.power_sweeps),
            ("noise_suite", self.noise_suite),
            ("uncertainty", self.uncertainty),
            ("evaluate", self.evaluate),
            ("finalize", self.finalize),
        ]
        for name, node in steps:
            workflow.add_node(name, node)
        workflow.add_node("handle_error", self.handle_error)
        workflow.set_entry_point("calibrate")
        for (name, _), (following, _) in zip(steps, steps[1:]):
            workflow.add_conditional_edges(
                name,
                self.should_continue,
                {"continue": following, "error": "handle_error"},
            )
        workflow.add_conditional_edges(
            "finalize",
            self.should_continue,
            {"continue": END, "error": "handle_error"},
        )
        workflow.add_edge("handle_error", END)
        return workflow.compile()

    def should_continue(self, state: QualificationState) -> str:
        return "error" if state.get("error") else "continue"

    # nodes

    def calibrate(self, state: QualificationState) -> QualificationState:
        try:
            options = state["options"]
            testbed = VirtualTestbed(state["scenario"], options.seed)
            error_model = solve_trl(testbed.measure_standards())
            state["testbed"] = testbed
            state["error_model"] = error_model
            state["traces"] = {"line_phase_deg": ScalarTrace(testbed.grid, error_model.line_phase_deg, Unit.DEGREES)}
            state["metrics"] = {}
        except Exception as e:
            state["error"] = f"TRL calibration failed: {e}"
        return state

    def verify_calibration(self, state: QualificationState) -> QualificationState:
        try:
            testbed = state["testbed"]
            raw_thru = testbed.vna_measure(SwitchState.select(Standard.THRU))
            verification = verify_cal(state["error_model"], raw_thru, state["options"].verify_tolerance_db)
            state["verification"] = verification
            state["raw_thru_db"] = raw_thru.s_db(2, 1)
            state["traces"]["thru_raw_db"] = raw_thru.s_db(2, 1)
            state["traces"]["thru_residual_db"] = verification.residual
            if not verification.passed:
                # downstream steps still run and are recorded
                state["cause"] = CAUSE_CALIBRATION
        except Exception as e:
            state["error"] = f"Calibration verification failed to run: {e}"
        return state

    def s_parameter_suite(self, state: QualificationState) -> QualificationState:
        try:
            scenario = state["scenario"]
            band = scenario.band
            raw = state["testbed"].vna_measure(SwitchState.select(Standard.DUT), scenario.dut)
            corrected = deembed(state["error_model"], raw)
            gain = corrected.s_db(2, 1)
            traces = state["traces"]
            traces["gain_raw_db"] = raw.s_db(2, 1)
            traces["gain_db"] = gain
            traces["s11_db"] = corrected.s_db(1, 1)
            traces["s22_db"] = corrected.s_db(2, 2)
            traces["s12_db"] = corrected.s_db(1, 2)
            in_band = _band_values(gain, band)
            state["metrics"].update({
                "flatness_db": gain_flatness(gain, band),
                "peak_gain_db": peak_gain(gain, band),
                "midband_gain_db": gain_at(gain, 0.5 * (band.f_low_hz + band.f_high_hz)),
                "min_gain_db": float(in_band.min()),
                "max_gain_db": float(in_band.max()),
            })
            logger.info(
                f"S-parameters: flatness {state['metrics']['flatness_db']:.3f} dB, "
                f"peak gain {state['metrics']['peak_gain_db']:.2f} dB over {band.label()}"
            )
        except Exception as e:
            state["error"] = f"S-parameter suite failed: {e}"
        return state

    def power_sweeps(self, state: QualificationState) -> QualificationState:
        try:
            scenario = state["scenario"]
            testbed = state["testbed"]
            error_model = state["error_model"]
            pin = scenario.sweep.pin_grid()
            results = []
            for f_ghz in scenario.sweep.frequencies_ghz:
                raw = testbed.power_sweep(scenario.dut, f_ghz * 1e9, pin)
                # move source and receiver readings to the DUT planes with the solved boxes
                idx = testbed.grid.nearest_index(raw.frequency_hz)
                l_in = -20.0 * np.log10(np.abs(error_model.input_box.s21[idx]))
                l_out = -20.0 * np.log10(np.abs(error_model.output_box.s21[idx]))
                sweep = PowerSweep(raw.frequency_hz, raw.pin_dbm - l_in, raw.pout_dbm + l_out)
                results.append(extract_p1db(sweep, tuple(scenario.sweep.fit_window)))
            state["p1db"] = results
            found = [r.op1db_dbm for r in results if r.found]
            state["metrics"]["min_op1db_dbm"] = min(found) if found else None
        except Exception as e:
            state["error"] = f"Power sweeps failed: {e}"
        return state

    def noise_suite(self, state: QualificationState) -> QualificationState:
        try:
            options = state["options"]
            testbed = state["testbed"]
            cfg = testbed.config
            grid = testbed.grid
            dut = state["scenario"].dut
            enr = testbed.enr
            traces = state["traces"]
            metrics = state["metrics"]
            band = state["scenario"].band

            receiver = calibrate_receiver(
                enr,
                testbed.sa_measure(SourceState.HOT, SaPath.DIRECT),
                testbed.sa_measure(SourceState.COLD, SaPath.DIRECT),
            )
            system_thru_loss = ScalarTrace(grid, -state["raw_thru_db"].values - cfg.attenuator_db, Unit.DB)
            attenuator_db = cfg.attenuator_db + options.loss_table_offset_db
            l_cable = from_db(system_thru_loss.values * options.before_fraction)
            l_a = from_db(attenuator_db)

            t_cable = {
                "per_frequency": effective_temperature(testbed.input_profile).values,
                "lumped": np.full(len(grid), fit_lumped_temperature(testbed.input_cable_noise,
                                                                    testbed.input_profile.total_loss)),
            }
            t_after = {
                "per_frequency": effective_temperature(testbed.output_profile),
                "lumped": ScalarTrace.constant(grid, fit_lumped_temperature(testbed.output_cable_noise,
                                                                            testbed.output_profile.total_loss),
                                               Unit.KELVIN),
            }
            n_hot = testbed.sa_measure(SourceState.HOT, SaPath.CHAIN, dut)
            n_cold = testbed.sa_measure(SourceState.COLD, SaPath.CHAIN, dut)

            def extract(mode: str, sensor: str):
                t_reference = cfg.cold_sensor_temperature(sensor)
                tables = build_loss_tables(
                    system_thru_loss, attenuator_db,
                    ScalarTrace(grid, t_loss(l_cable, t_cable[mode], l_a, t_reference), Unit.KELVIN),
                    options.before_fraction, t_after[mode],
                )
                return extract_noise_temperature(enr, n_hot, n_cold, tables, receiver), tables

            mode = options.cable_temperature_mode
            other_mode = "lumped" if mode == "per_frequency" else "per_frequency"
            sensor = options.cold_sensor or cfg.cold_sensor
            other_sensor = "lna_base" if sensor == "attenuator" else "attenuator"

            noise, tables = extract(mode, sensor)
            alt_mode, _ = extract(other_mode, sensor)
            alt_sensor, _ = extract(mode, other_sensor)

            # THRU in place of the DUT: the whole passive chain against the thermal model
            chain = chain_noise_temperature(
                enr,
                testbed.sa_measure(SourceState.HOT, SaPath.CHAIN),
                testbed.sa_measure(SourceState.COLD, SaPath.CHAIN),
                receiver,
            )
            attenuator_element = ThermalProfile(grid, [cfg.attenuator_temperature_k],
                                                np.full((len(grid), 1), from_db(cfg.attenuator_db)))
            chain_model = integrated_cable_noise(
                testbed.input_profile.concatenate(attenuator_element).concatenate(testbed.output_profile)
            )

            traces.update({
                "t_dut_k": noise.t_dut,
                f"t_dut_{other_mode}_k": alt_mode.t_dut,
                f"t_dut_{other_sensor}_k": alt_sensor.t_dut,
                "t_system_k": noise.t_system,
                "y_factor": noise.y,
                "gain_noise_db": noise.gain_db,
                "t_second_stage_k": noise.t_second_stage,
                "t_receiver_k": receiver.t_receiver,
                "system_thru_loss_db": system_thru_loss,
                "loss_before_db": tables.before,
                "loss_after_db": tables.after,
                "t_loss_k": tables.t_loss,
                "t_cable_k": ScalarTrace(grid, t_cable[mode], Unit.KELVIN),
                "chain_t_measured_k": chain,
                "chain_t_model_k": chain_model,
            })

            t_band = _band_values(noise.t_dut, band)
            finite = t_band[np.isfinite(t_band)]
            gain_delta = _band_values(noise.gain_db, band) - _band_values(traces["gain_db"], band)
            metrics.update({
                "cable_temperature_mode": mode,
                "cold_sensor": sensor,
                "t_dut_min_k": float(finite.min()) if finite.size else None,
                "t_dut_max_k": float(finite.max()) if finite.size else None,
                "t_dut_mean_k": float(finite.mean()) if finite.size else None,
                "noise_figure_max_db": (float(noise_figure_from_temperature(finite.max()))
                                        if finite.size and finite.max() >= 0 else None),
                "invalid_points": int(noise.invalid.sum()),
                "unphysical_points": int(noise.unphysical.sum()),
                "t_cable_lumped_k": float(t_cable["lumped"][0]),
                "cable_mode_residual_k": float(np.nanmax(np.abs(
                    _band_values(alt_mode.t_dut, band) - t_band))),
                "cold_sensor_offset_k": float(np.nanmean(_band_values(alt_sensor.t_dut, band) - t_band)),
                "chain_residual_k": float(np.nanmax(np.abs(chain.values - chain_model.values))),
                "noise_vs_vna_gain_db": float(np.nanmax(np.abs(gain_delta))),
            })
            state["noise"] = noise
            state["operating"] = {
                "l_cable": l_cable,
                "l_a": float(l_a),
                "t_cable": t_cable[mode],
                "t_a": cfg.cold_sensor_temperature(sensor),
                "t_hot": hot_temperature(enr).values,
                "t_cold": enr.t_off_k,
            }
            logger.info(
                f"Noise suite: T_DUT {metrics['t_dut_min_k']}-{metrics['t_dut_max_k']} K in {band.label()}, "
                f"{mode} vs {other_mode} residual {metrics['cable_mode_residual_k'] * 1e3:.2f} mK"
            )
        except Exception as e:
            state["error"] = f"Noise suite failed: {e}"
        return state

    def uncertainty(self, state: QualificationState) -> QualificationState:
        try:
            scenario = state["scenario"]
            budget = scenario.budget
            noise = state["noise"]
            op = state["operating"]
            grid = noise.grid
            sigma = np.full(len(grid), np.nan)
            points: Dict[int, OperatingPoint] = {}
            gain_linear = from_db(noise.gain_db.values)
            for i in range(len(grid)):
                try:
                    point = OperatingPoint(
                        y=float(noise.y.values[i]),
                        t_hot=float(op["t_hot"][i]),
                        t_cold=float(op["t_cold"]),
                        l_a=op["l_a"],
                        l_cable=float(op["l_cable"][i]),
                        t_cable=float(op["t_cable"][i]),
                        t_a=op["t_a"],
                        g_dut=float(gain_linear[i]),
                        t_second_stage=float(noise.t_second_stage.values[i]),
                        frequency_hz=float(grid.points[i]),
                    )
                    sigma[i] = propagate_tdut(budget, point).sigma_k
                    points[i] = point
                except (ValidationError, DomainError):
                    continue
            sigma_trace = ScalarTrace(grid, sigma, Unit.KELVIN)
            state["sigma_t_dut"] = sigma_trace
            state["traces"]["sigma_t_dut_k"] = sigma_trace

            band = scenario.band
            centre = grid.nearest_index(0.5 * (band.f_low_hz + band.f_high_hz))
            summary: Dict[str, Any] = {"max_sigma_in_band_k": float(np.nanmax(_band_values(sigma_trace, band)))}
            if centre in points:
                result = propagate_tdut(budget, points[centre])
                summary["frequency_hz"] = float(grid.points[centre])
                summary["operating_point"] = points[centre].model_dump()
                summary["analytic"] = result.to_dict()
                samples = state["options"].monte_carlo_samples
                if samples:
                    summary["monte_carlo"] = monte_carlo_tdut(
                        budget, points[centre], n=samples, seed=state["testbed"].seed
                    ).to_dict()
            else:
                logger.warning(f"No valid operating point at the band centre {grid.points[centre]:.4g} Hz")
            state["uncertainty"] = summary
        except Exception as e:
            state["error"] = f"Uncertainty propagation failed: {e}"
        return state

    def evaluate(self, state: QualificationState) -> QualificationState:
        try:
            traces = state["traces"]
            metrics = state["metrics"]
            limits = state["limits"]
            band = limits.band
            vna_sigma = state["scenario"].testbed.vna_noise_db
            sigma_t = state["sigma_t_dut"]
            outcomes: List[LimitOutcome] = []

            if state["phase"] == 1:
                outcomes.extend(self._reference_outcomes(state, vna_sigma))

            if limits.min_gain_db is not None:
                outcomes.append(_trace_outcome("min_gain_db", traces["gain_db"], limits.min_gain_db,
                                               Relation.ABOVE, band, vna_sigma, "dB"))
            if limits.max_gain_db is not None:
                outcomes.append(_trace_outcome("max_gain_db", traces["gain_db"], limits.max_gain_db,
                                               Relation.BELOW, band, vna_sigma, "dB"))
            if limits.max_flatness_db is not None:
                outcomes.append(_scalar_outcome("max_flatness_db", gain_flatness(traces["gain_db"], band),
                                                limits.max_flatness_db, Relation.BELOW, vna_sigma, "dB"))
            if limits.max_noise_temperature_k is not None:
                outcomes.append(_trace_outcome("max_noise_temperature_k", traces["t_dut_k"],
                                               limits.max_noise_temperature_k, Relation.BELOW, band, sigma_t, "K"))
            if limits.min_op1db_dbm is not None:
                # a device that never compresses within the sweep clears any OP1dB floor below the sweep top
                found = [r.op1db_dbm for r in state["p1db"] if r.found]
                outcomes.append(_scalar_outcome("min_op1db_dbm", min(found) if found else float("inf"),
                                                limits.min_op1db_dbm, Relation.ABOVE, vna_sigma, "dBm"))
            if limits.return_loss_db is not None:
                rl_band = limits.return_loss_band or band
                s11 = _trace_outcome("s11", traces["s11_db"], limits.return_loss_db, Relation.BELOW, rl_band,
                                     vna_sigma, "dB")
                s22 = _trace_outcome("s22", traces["s22_db"], limits.return_loss_db, Relation.BELOW, rl_band,
                                     vna_sigma, "dB")
                violations = [m for m in (s11.min_violation, s22.min_violation) if m is not None]
                worst = [m for m in (s11.measured, s22.measured) if m is not None]
                outcomes.append(LimitOutcome(
                    name="return_loss_db",
                    passed=s11.passed and s22.passed,
                    threshold=limits.return_loss_db,
                    measured=max(worst) if worst else None,
                    unit="dB",
                    violations_hz=sorted(set(s11.violations_hz) | set(s22.violations_hz)),
                    min_violation=min(violations) if violations else None,
                    sigma=vna_sigma,
                ))
            if limits.isolation_db is not None:
                outcomes.append(_trace_outcome("isolation_db", traces["s12_db"], limits.isolation_db,
                                               Relation.BELOW, band, vna_sigma, "dB"))

            k_sigma = state["options"].failure_analysis_sigma
            outcomes = [_mark_marginal(o, k_sigma) for o in outcomes]
            failing = [o for o in outcomes if not o.passed]
            calibration_ok = state["verification"].passed

            if calibration_ok and not failing:
                verdict = Verdict.PASS
                cause = None
            elif not calibration_ok:
                verdict = Verdict.FAIL
                cause = CAUSE_CALIBRATION
            else:
                verdict = Verdict.FAILURE_ANALYSIS if all(o.marginal for o in failing) else Verdict.FAIL
                cause = "LIMITS: " + ", ".join(o.name for o in failing)
                if verdict is Verdict.FAILURE_ANALYSIS:
                    logger.warning(f"Marginal failure within {k_sigma} sigma, flagged for failure analysis: {cause}")
            state["outcomes"] = outcomes
            state["verdict"] = verdict
            state["cause"] = cause
            logger.info(f"Phase {state['phase']} verdict: {verdict.value}" + (f" ({cause})" if cause else ""))
        except Exception as e:
            state["error"] = f"Limit evaluation failed: {e}"
        return state

    def _reference_outcomes(self, state: QualificationState, vna_sigma: float) -> List[LimitOutcome]:
        reference = state["reference"]
        tolerances = state["tolerances"]
        floor = tolerances.numeric_floor
        band = state["scenario"].band
        traces = state["traces"]
        mask = traces["gain_db"].grid.band_mask(band.f_low_hz, band.f_high_hz)
        freqs = traces["gain_db"].frequencies[mask]
        outcomes = [
            _deviation_outcome(
                "reference_gain_db",
                traces["gain_db"].values[mask] - reference.gain_db.values[mask],
                freqs, tolerances.gain_db + floor, vna_sigma, "dB",
            ),
            _deviation_outcome(
                "reference_flatness_db",
                np.array([state["metrics"]["flatness_db"] - reference.flatness_db]),
                np.array([0.5 * (band.f_low_hz + band.f_high_hz)]),
                tolerances.flatness_db + floor, vna_sigma, "dB",
            ),
            _deviation_outcome(
                "reference_noise_temperature_k",
                traces["t_dut_k"].values[mask] - reference.noise_temperature.values[mask],
                freqs, tolerances.noise_temperature_k + floor, state["sigma_t_dut"].values[mask], "K",
            ),
        ]
        expected = reference.op1db_by_frequency()
        measured = {r.frequency_hz: r.op1db_dbm for r in state["p1db"]}
        deltas = []
        for f, ref_op in expected.items():
            got = measured.get(f)
            if ref_op is None and got is None:
                deltas.append(0.0)
            elif ref_op is None or got is None:
                deltas.append(np.nan)
            else:
                deltas.append(got - ref_op)
        if expected:
            outcomes.append(_deviation_outcome(
                "reference_op1db_dbm", np.array(deltas), np.array(list(expected)),
                tolerances.op1db_db + floor, vna_sigma, "dB",
            ))
        return outcomes

    def finalize(self, state: QualificationState) -> QualificationState:
        try:
            scenario = state["scenario"]
            testbed = state["testbed"]
            options = state["options"]
            verification = state["verification"]
            error_model = state["error_model"]

            config_hash = content_hash(scenario.model_dump(mode="json", by_alias=True))
            testbed_hash = content_hash(scenario.testbed.model_dump(mode="json", exclude={"seed"}))
            limits = state["limits"].model_dump(mode="json")
            tolerances = state["tolerances"].model_dump() if state.get("tolerances") else None
            run_id = derive_run_id(config_hash, testbed.seed, state["phase"], {
                "limits": limits,
                "tolerances": tolerances,
                "options": options.model_dump(mode="json", exclude={"seed"}),
                "phase1_reference": state.get("phase1_reference"),
            })
            model_dict = error_model.to_dict()
            model_dict.pop("created_at", None)

            record = RunRecord(
                run_id=run_id,
                phase=state["phase"],
                scenario=scenario.name,
                device=scenario.dut.name,
                config_hash=config_hash,
                testbed_hash=testbed_hash,
                seed=testbed.seed,
                band=scenario.band,
                bias=scenario.dut.bias.model_dump(),
                limits=limits,
                tolerances=tolerances,
                options=options.model_dump(mode="json"),
                phase1_reference=state.get("phase1_reference"),
                calibration=CalibrationSummary(
                    verified=verification.passed,
                    max_residual_db=verification.max_abs_residual_db,
                    tolerance_db=verification.tolerance_db,
                    ill_conditioned_hz=error_model.ill_conditioned_frequencies,
                    error_model_hash=content_hash(model_dict),
                ),
                metrics=clean_json(state["metrics"]),
                p1db=clean_json([r.to_dict() for r in state["p1db"]]),
                uncertainty=clean_json(state["uncertainty"]),
                traces=[TraceRecord.from_trace(name, trace) for name, trace in state["traces"].items()
                        if trace is not None],
                outcomes=state["outcomes"],
                verdict=state["verdict"],
                cause=state.get("cause"),
            )
            store = state.get("store")
            if store is not None:
                artifact = store.artifact_dir(f"{record.stamp}_{run_id}") / "error_model.json"
                record.artifacts["error_model"] = str(error_model.save(artifact))
                state["record_path"] = str(store.save_record(record))
            state["record"] = record
        except Exception as e:
            state["error"] = f"Run record could not be written: {e}"
        return state

    def handle_error(self, state: QualificationState) -> QualificationState:
        logger.error(f"Qualification run aborted: {state['error']}")
        return state

    # entry points

    def _invoke(self, initial_state: QualificationState) -> RunRecord:
        final_state = self.graph.invoke(initial_state)
        if final_state.get("error"):
            raise QualificationError(final_state["error"])
        return final_state["record"]

    def run_phase1(self, scenario: Scenario, limits: Optional[SpecLimits] = None,
                   tolerances: Optional[Phase1Tolerances] = None,
                   options: Optional[RunOptions] = None) -> RunRecord:
        if scenario.role != "control":
            logger.warning(f"Phase 1 on {scenario.name!r}, which is not marked as a control device")
        limits = limits or load_limit_set(f"{scenario.name}_phase1")
        return self._invoke({
            "phase": 1,
            "scenario": scenario,
            "limits": limits,
            "tolerances": tolerances or Phase1Tolerances(),
            "options": options or RunOptions(),
            "reference": reference_expectations(scenario),
            "phase1_reference": None,
            "store": self.store,
            "error": None,
        })

    def check_gate(self, scenario: Scenario, phase1_record: Optional[RunRecord]) -> RunRecord:
        testbed_hash = content_hash(scenario.testbed.model_dump(mode="json", exclude={"seed"}))
        if phase1_record is None and self.store is not None:
            phase1_record = self.store.latest_pass(phase=1, testbed_hash=testbed_hash)
        if phase1_record is None:
            raise Phase2GatingError("Phase 2 needs a Phase 1 PASS record for this testbed; run phase1 first")
        if phase1_record.phase != 1:
            raise Phase2GatingError(f"record {phase1_record.run_id} is a phase {phase1_record.phase} record")
        if phase1_record.verdict is not Verdict.PASS:
            raise Phase2GatingError(
                f"Phase 1 record {phase1_record.run_id} has verdict {phase1_record.verdict.value}, not PASS"
            )
        if phase1_record.testbed_hash != testbed_hash:
            raise Phase2GatingError(f"Phase 1 record {phase1_record.run_id} was taken on a different testbed")
        return phase1_record

    def run_phase2(self, scenario: Scenario, limits: SpecLimits, phase1_record: Optional[RunRecord] = None,
                   options: Optional[RunOptions] = None) -> RunRecord:
        gate = self.check_gate(scenario, phase1_record)
        logger.info(f"Phase 2 on {scenario.name!r}, gated by Phase 1 run {gate.run_id}")
        return self._invoke({
            "phase": 2,
            "scenario": scenario,
            "limits": limits,
            "tolerances": None,
            "options": options or RunOptions(),
            "reference": None,
            "phase1_reference": gate.run_id,
            "store": self.store,
            "error": None,
        })


def run_phase1(scenario: Scenario, limits: Optional[SpecLimits] = None,
               tolerances: Optional[Phase1Tolerances] = None, options: Optional[RunOptions] = None,
               store: Optional[RunStore] = None) -> RunRecord:
    return QualificationRunner(store).run_phase1(scenario, limits, tolerances, options)


def run_phase2(scenario: Scenario, limits: SpecLimits, phase1_record: Optional[RunRecord] = None,
               options: Optional[RunOptions] = None, store: Optional[RunStore] = None) -> RunRecord:
    return QualificationRunner(store).run_phase2(scenario, limits, phase1_record, options)
