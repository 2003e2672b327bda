"""
Command-line entry point: ``python -m protocol_runner <command> ...``

Exit codes: 0 on success or PASS, 1 on a FAIL verdict (including
FAIL→FAILURE_ANALYSIS), 2 on an execution error.
"""

import argparse
import json
import logging
import os
import sys
from pathlib import Path
from typing import List, Optional

import numpy as np
from dotenv import load_dotenv

from lna_metrics import PowerSweep, SlopeMode, extract_p1db
from network_core import ScalarTrace, Unit, read_touchstone, read_trace_csv, write_touchstone, write_trace_csv
from noise_engine import EnrTable, build_loss_tables, calibrate_receiver, extract_noise_temperature
from simlab import (
    SaPath,
    SourceState,
    Standard,
    SwitchState,
    VirtualTestbed,
    load_scenario,
    operating_point,
)
from thermal_model import effective_temperature, fit_lumped_temperature
from trl_cal import ErrorModel, TrlStandardsMeasurement, deembed, solve_trl, verify_cal
from uncertainty_budget import Aggregation, UncertaintyBudget, monte_carlo_tdut, propagate_tdut

from .graph import QualificationRunner, RunOptions
from .limits import Phase1Tolerances, Verdict, load_limit_set
from .memory import RunStore
from .records import clean_json, content_hash
from .report import ReportFormat, render_report

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_ERROR = 2


def _print_json(payload) -> None:
    print(json.dumps(clean_json(payload), indent=2, ensure_ascii=False))


def _seed(args) -> Optional[int]:
    if args.seed is not None:
        return args.seed
    env_seed = os.getenv("CRYOLNA_SEED")
    return int(env_seed) if env_seed else None


def _out(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_calibrate(args) -> int:
    meas = TrlStandardsMeasurement.from_reflect_network(
        read_touchstone(args.thru), read_touchstone(args.line), read_touchstone(args.reflect)
    )
    model = solve_trl(meas)
    path = model.save(_out(args) / "error_model.json")
    summary = {"error_model": str(path), "ill_conditioned_hz": model.ill_conditioned_frequencies}
    if args.verify_thru:
        result = verify_cal(model, read_touchstone(args.verify_thru), args.tolerance_db)
        summary["verification"] = {"passed": result.passed, "max_residual_db": result.max_abs_residual_db}
        _print_json(summary)
        return EXIT_OK if result.passed else EXIT_FAIL
    _print_json(summary)
    return EXIT_OK


def cmd_deembed(args) -> int:
    model = ErrorModel.load(args.error_model)
    raw = read_touchstone(args.raw)
    corrected = deembed(model, raw)
    path = write_touchstone(corrected, _out(args) / f"{Path(args.raw).stem}_deembedded.s2p")
    _print_json({"deembedded": str(path)})
    return EXIT_OK


def cmd_noise(args) -> int:
    n_hot = read_trace_csv(args.hot, Unit.DBM_PER_HZ)
    n_cold = read_trace_csv(args.cold, Unit.DBM_PER_HZ)
    grid = n_hot.grid
    if args.enr:
        enr = EnrTable.from_csv(args.enr, args.t_off).resample(grid)
    else:
        enr = EnrTable.flat(grid, args.enr_db, args.t_off)
    system_loss = read_trace_csv(args.system_thru_loss, Unit.DB).resample(grid)
    tables = build_loss_tables(system_loss, args.attenuator_db, args.t_loss, args.before_fraction)
    receiver = None
    if args.rx_hot and args.rx_cold:
        receiver = calibrate_receiver(enr, read_trace_csv(args.rx_hot, Unit.DBM_PER_HZ),
                                      read_trace_csv(args.rx_cold, Unit.DBM_PER_HZ))
    result = extract_noise_temperature(enr, n_hot, n_cold, tables, receiver)
    out = _out(args)
    written = [write_trace_csv(result.t_dut, out / "t_dut.csv")]
    if result.gain_db is not None:
        written.append(write_trace_csv(result.gain_db, out / "gain_noise_db.csv"))
    finite = result.t_dut.values[np.isfinite(result.t_dut.values)]
    _print_json({
        "files": [str(p) for p in written],
        "t_dut_min_k": finite.min() if finite.size else None,
        "t_dut_max_k": finite.max() if finite.size else None,
        "invalid_points": int(result.invalid.sum()),
        "unphysical_points": int(result.unphysical.sum()),
    })
    return EXIT_OK


def cmd_p1db(args) -> int:
    sweep = PowerSweep.from_csv(args.sweep)
    result = extract_p1db(sweep, tuple(args.fit_window), SlopeMode(args.slope))
    _print_json(result.to_dict())
    return EXIT_OK if result.found else EXIT_FAIL


def cmd_thermal(args) -> int:
    testbed = VirtualTestbed(load_scenario(args.config or "lna_c"))
    out = _out(args)
    summary = {}
    for side, profile in (("input", testbed.input_profile), ("output", testbed.output_profile)):
        t_eff = effective_temperature(profile)
        write_trace_csv(t_eff, out / f"{side}_cable_temperature.csv")
        noise = testbed.input_cable_noise if side == "input" else testbed.output_cable_noise
        summary[side] = {
            "elements": int(profile.temperatures.size),
            "t_cable_lumped_k": fit_lumped_temperature(noise, profile.total_loss),
            "t_eff_min_k": float(np.nanmin(t_eff.values)),
            "t_eff_max_k": float(np.nanmax(t_eff.values)),
        }
    _print_json(summary)
    return EXIT_OK


def cmd_uncertainty(args) -> int:
    scenario = load_scenario(args.config or "lna_c")
    budget = UncertaintyBudget.from_json(args.budget) if args.budget else scenario.budget
    if args.aggregation:
        budget = budget.model_copy(update={"aggregation": Aggregation(args.aggregation)})
    op = operating_point(scenario, args.frequency_ghz * 1e9)
    payload = {"operating_point": op.model_dump(), "analytic": propagate_tdut(budget, op).to_dict()}
    if args.mc_samples:
        payload["monte_carlo"] = monte_carlo_tdut(budget, op, n=args.mc_samples, seed=_seed(args) or 0).to_dict()
    _print_json(payload)
    return EXIT_OK


def cmd_simulate(args) -> int:
    """Writes the raw files a bench session would produce, plus a content summary."""
    scenario = load_scenario(args.config or "lna_c")
    testbed = VirtualTestbed(scenario, _seed(args))
    out = _out(args)
    files = {}
    for standard in (Standard.THRU, Standard.LINE, Standard.REFLECT):
        network = testbed.vna_measure(SwitchState.select(standard))
        files[f"{standard.value.lower()}.s2p"] = write_touchstone(network, out / f"{standard.value.lower()}.s2p")
    dut_raw = testbed.vna_measure(SwitchState.select(Standard.DUT), scenario.dut)
    files["dut_raw.s2p"] = write_touchstone(dut_raw, out / "dut_raw.s2p")
    for path, dut, prefix in ((SaPath.DIRECT, None, "rx"), (SaPath.CHAIN, scenario.dut, "noise"),
                              (SaPath.CHAIN, None, "thru_noise")):
        for source in (SourceState.HOT, SourceState.COLD):
            name = f"{prefix}_{source.value}.csv"
            files[name] = write_trace_csv(testbed.sa_measure(source, path, dut), out / name)
    files["enr.csv"] = write_trace_csv(ScalarTrace(testbed.grid, testbed.enr.enr_db, Unit.DB), out / "enr.csv")
    pin = scenario.sweep.pin_grid()
    for f_ghz in scenario.sweep.frequencies_ghz:
        name = f"sweep_{f_ghz:g}GHz.csv"
        files[name] = testbed.power_sweep(scenario.dut, f_ghz * 1e9, pin).to_csv(out / name)

    summary = {
        "scenario": scenario.name,
        "config_hash": content_hash(scenario.model_dump(mode="json", by_alias=True)),
        "seed": testbed.seed,
        "files": {name: content_hash(Path(path).read_text(encoding="utf-8")) for name, path in sorted(files.items())},
    }
    summary_path = out / "summary.json"
    summary_path.write_text(json.dumps(summary, sort_keys=True, separators=(",", ":")), encoding="utf-8")
    logger.info(f"Simulated {len(files)} measurement files for {scenario.name!r} into {out}")
    _print_json({"summary": str(summary_path), "files": len(files)})
    return EXIT_OK


def _run_options(args) -> RunOptions:
    return RunOptions(
        seed=_seed(args),
        cable_temperature_mode=args.cable_mode,
        cold_sensor=args.cold_sensor,
        loss_table_offset_db=args.loss_table_offset_db,
        monte_carlo_samples=args.mc_samples,
    )


def _finish_run(record, args) -> int:
    for path in render_report(record, args.format, _out(args)):
        logger.info(f"Report written to {path}")
    _print_json({"run_id": record.run_id, "verdict": record.verdict.value, "cause": record.cause})
    return EXIT_OK if record.verdict is Verdict.PASS else EXIT_FAIL


def cmd_phase1(args) -> int:
    scenario = load_scenario(args.config or "lna_c")
    limits = load_limit_set(args.limits or f"{scenario.name}_phase1")
    if args.zero_tolerances:
        tolerances = Phase1Tolerances.zero()
    elif args.tolerances:
        tolerances = Phase1Tolerances.model_validate_json(Path(args.tolerances).read_text(encoding="utf-8"))
    else:
        tolerances = Phase1Tolerances()
    runner = QualificationRunner(RunStore(args.runs_dir))
    return _finish_run(runner.run_phase1(scenario, limits, tolerances, _run_options(args)), args)


def cmd_phase2(args) -> int:
    scenario = load_scenario(args.config or "lna_t")
    limits = load_limit_set(args.limits or f"{scenario.name}_phase2")
    store = RunStore(args.runs_dir)
    phase1_record = store.load_record(args.phase1) if args.phase1 else None
    runner = QualificationRunner(store)
    return _finish_run(runner.run_phase2(scenario, limits, phase1_record, _run_options(args)), args)


def cmd_report(args) -> int:
    record = RunStore(args.runs_dir).load_record(args.record)
    written = render_report(record, args.format, _out(args))
    _print_json({"files": [str(p) for p in written]})
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="Scenario preset name or path to a scenario JSON")
    common.add_argument("--seed", type=int, default=None, help="RNG seed (default: CRYOLNA_SEED or the scenario's)")
    common.add_argument("--out", default="out", help="Output directory")
    common.add_argument("--format", choices=[f.value for f in ReportFormat], default="json",
                        help="Report format for phase runs and the report command")

    parser = argparse.ArgumentParser(prog="cryolna", description="Cryogenic LNA characterization toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("calibrate", parents=[common], help="Solve TRL from .s2p standards")
    p.add_argument("--thru", required=True)
    p.add_argument("--line", required=True)
    p.add_argument("--reflect", required=True, help="Two-port REFLECT capture (S11 and S22 are used)")
    p.add_argument("--verify-thru", help="Fresh THRU capture for calibration verification")
    p.add_argument("--tolerance-db", type=float, default=0.05)
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("deembed", parents=[common], help="Remove error boxes from a raw .s2p")
    p.add_argument("--error-model", required=True)
    p.add_argument("--raw", required=True)
    p.set_defaults(func=cmd_deembed)

    p = sub.add_parser("noise", parents=[common], help="Y-factor pipeline from trace CSVs")
    p.add_argument("--hot", required=True, help="Hot-state noise density CSV, dBm/Hz")
    p.add_argument("--cold", required=True, help="Cold-state noise density CSV, dBm/Hz")
    p.add_argument("--enr", help="ENR table CSV (dB)")
    p.add_argument("--enr-db", type=float, default=15.0, help="Flat ENR when no table is given")
    p.add_argument("--t-off", type=float, default=296.0, help="Source-off physical temperature, K")
    p.add_argument("--system-thru-loss", required=True, help="System thru loss CSV (dB, no attenuator)")
    p.add_argument("--attenuator-db", type=float, default=30.0)
    p.add_argument("--t-loss", type=float, required=True, help="Equivalent loss temperature, K")
    p.add_argument("--before-fraction", type=float, default=0.5)
    p.add_argument("--rx-hot", help="Receiver calibration, hot (source at the analyzer)")
    p.add_argument("--rx-cold", help="Receiver calibration, cold")
    p.set_defaults(func=cmd_noise)

    p = sub.add_parser("p1db", parents=[common], help="P1dB from a power-sweep CSV")
    p.add_argument("--sweep", required=True)
    p.add_argument("--fit-window", type=float, nargs=2, default=(-80.0, -60.0), metavar=("LOW", "HIGH"))
    p.add_argument("--slope", choices=[m.value for m in SlopeMode], default=SlopeMode.UNIT.value)
    p.set_defaults(func=cmd_p1db)

    p = sub.add_parser("thermal", parents=[common], help="Cable thermal model and lumped fit")
    p.set_defaults(func=cmd_thermal)

    p = sub.add_parser("uncertainty", parents=[common], help="σ(T_DUT) at a scenario operating point")
    p.add_argument("--frequency-ghz", type=float, default=6.0)
    p.add_argument("--budget", help="UncertaintyBudget JSON (default: the scenario's)")
    p.add_argument("--aggregation", choices=[a.value for a in Aggregation])
    p.add_argument("--mc-samples", type=int, default=100_000, help="0 skips Monte Carlo")
    p.set_defaults(func=cmd_uncertainty)

    p = sub.add_parser("simulate", parents=[common], help="Write a scenario's virtual measurement files")
    p.set_defaults(func=cmd_simulate)

    for name, func, helptext in (("phase1", cmd_phase1, "Qualify the setup with the control LNA"),
                                 ("phase2", cmd_phase2, "Measure a device against limits")):
        p = sub.add_parser(name, parents=[common], help=helptext)
        p.add_argument("--limits", help="Limit-set name or JSON path")
        p.add_argument("--runs-dir", default=None, help="Run store (default: CRYOLNA_RUNS_DIR or runs)")
        p.add_argument("--cable-mode", choices=["per_frequency", "lumped"], default="per_frequency")
        p.add_argument("--cold-sensor", choices=["attenuator", "lna_base"], default=None)
        p.add_argument("--loss-table-offset-db", type=float, default=0.0,
                       help="Error added to the attenuator entry of the before-DUT table")
        p.add_argument("--mc-samples", type=int, default=10_000)
        p.set_defaults(func=func)
        if name == "phase1":
            p.add_argument("--tolerances", help="Phase1Tolerances JSON")
            p.add_argument("--zero-tolerances", action="store_true")
        else:
            p.add_argument("--phase1", help="Phase 1 run id or record path (default: latest PASS)")

    p = sub.add_parser("report", parents=[common], help="Render a stored run record")
    p.add_argument("--record", required=True, help="Run id or record path")
    p.add_argument("--runs-dir", default=None)
    p.set_defaults(func=cmd_report)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    load_dotenv()
    logging.basicConfig(
        level=os.getenv("CRYOLNA_LOG_LEVEL", "INFO").upper(),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except Exception as e:
        logger.error(f"{args.command} failed: {e}")
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
