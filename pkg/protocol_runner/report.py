"""
Run-record rendering: canonical JSON, a Markdown datasheet and a CSV bundle
with one plot-ready file per trace.
"""

import logging
from enum import Enum
from pathlib import Path
from typing import List, Optional, Union

import numpy as np

from network_core import write_trace_csv

from .records import RunRecord

logger = logging.getLogger(__name__)


class ReportFormat(str, Enum):
    JSON = "json"
    MARKDOWN = "markdown"
    CSV = "csv"


def _fmt(value: Optional[float], spec: str = ".3f", unit: str = "") -> str:
    if value is None:
        return "n/a"
    text = format(value, spec)
    return f"{text} {unit}".rstrip()


def _trace_summary(record: RunRecord, name: str):
    """(min, mean, max) of a trace over the record's band, NaN points skipped."""
    trace = record.trace(name).to_trace()
    values = trace.band(record.band.f_low_hz, record.band.f_high_hz)
    values = values[np.isfinite(values)]
    if not values.size:
        return None, None, None
    return float(values.min()), float(values.mean()), float(values.max())


def format_markdown(record: RunRecord) -> str:
    metrics = record.metrics
    lines = [
        f"# {record.device}: Phase {record.phase} qualification",
        "",
        f"**Verdict:** {record.verdict.value}" + (f" ({record.cause})" if record.cause else ""),
        "",
        f"- Run id: `{record.run_id}`",
        f"- Scenario: `{record.scenario}` (config `{record.config_hash[:12]}`, seed {record.seed})",
        f"- Timestamp: {record.timestamp}",
    ]
    if record.phase1_reference:
        lines.append(f"- Gated by Phase 1 run `{record.phase1_reference}`")

    lines += ["", "## Bias conditions", ""]
    bias_labels = {"v_d_volts": ("V_D", "V"), "i_d_ma": ("I_D", "mA"), "v_g_volts": ("V_G", "V")}
    for key, (label, unit) in bias_labels.items():
        if record.bias.get(key) is not None:
            lines.append(f"- {label} = {record.bias[key]:g} {unit}")
    if not any(v is not None for v in record.bias.values()):
        lines.append("- not recorded")

    lines += [
        "",
        "## Gain",
        "",
        f"- Band: {record.band.label()}",
        f"- Gain flatness: {metrics.get('flatness_db')!r} dB",
        f"- Peak gain: {_fmt(metrics.get('peak_gain_db'), '.3f', 'dB')}",
        f"- Mid-band gain: {_fmt(metrics.get('midband_gain_db'), '.3f', 'dB')}",
        f"- In-band gain range: {_fmt(metrics.get('min_gain_db'), '.3f')} to {_fmt(metrics.get('max_gain_db'), '.3f', 'dB')}",
        "",
        "## Compression",
        "",
        "| Frequency (GHz) | Gain (dB) | IP1dB (dBm) | OP1dB (dBm) | Expansion |",
        "|---|---|---|---|---|",
    ]
    for row in record.p1db:
        lines.append(
            f"| {row['frequency_hz'] / 1e9:.3f} | {_fmt(row.get('small_signal_gain_db'), '.2f')} "
            f"| {_fmt(row.get('ip1db_dbm'), '.2f')} | {_fmt(row.get('op1db_dbm'), '.2f')} "
            f"| {'yes' if row.get('expansion') else 'no'} |"
        )

    lines += ["", "## Noise temperature", ""]
    t_min, t_mean, t_max = _trace_summary(record, "t_dut_k")
    lines += [
        f"- T_DUT over {record.band.label()}: min {_fmt(t_min, '.3f', 'K')}, "
        f"mean {_fmt(t_mean, '.3f', 'K')}, max {_fmt(t_max, '.3f', 'K')}",
        f"- Cable temperature mode: {metrics.get('cable_temperature_mode', 'n/a')} "
        f"(lumped fit {_fmt(metrics.get('t_cable_lumped_k'), '.1f', 'K')}, "
        f"mode residual {_fmt(metrics.get('cable_mode_residual_k'), '.4f', 'K')})",
        f"- Cold reference: {metrics.get('cold_sensor', 'n/a')} "
        f"(offset to the other sensor {_fmt(metrics.get('cold_sensor_offset_k'), '.3f', 'K')})",
        f"- Noise-derived vs VNA gain: {_fmt(metrics.get('noise_vs_vna_gain_db'), '.4f', 'dB')} max difference",
        f"- Invalid points: {metrics.get('invalid_points', 0)}, unphysical points: {metrics.get('unphysical_points', 0)}",
    ]

    analytic = record.uncertainty.get("analytic")
    lines += ["", "## Uncertainty", ""]
    if analytic:
        f_ghz = record.uncertainty["frequency_hz"] / 1e9
        lines += [
            f"σ(T_DUT) at {f_ghz:.3f} GHz: **{analytic['sigma_k'] * 1e3:.1f} mK** "
            f"({analytic['aggregation']} aggregation; "
            + ", ".join(f"{k}: {v * 1e3:.1f} mK" for k, v in analytic["totals"].items()) + ")",
            "",
            "| Term | σ | Sensitivity | Contribution (mK) | Included |",
            "|---|---|---|---|---|",
        ]
        for term in analytic["terms"]:
            lines.append(
                f"| {term['name']} | {term['sigma']:g} {term['unit']} | {term['sensitivity']:.4g} "
                f"| {term['contribution_k'] * 1e3:.1f} | {'yes' if term['included'] else 'no'} |"
            )
        mc = record.uncertainty.get("monte_carlo")
        if mc:
            lines += ["", f"Monte Carlo: σ = {mc['sigma_k'] * 1e3:.1f} mK over {mc['n']} samples (seed {mc['seed']})"]
    else:
        lines.append("No valid operating point at the band centre.")

    lines += [
        "",
        "## Calibration",
        "",
        f"- TRL verification: {'passed' if record.calibration.verified else 'FAILED'}, "
        f"max THRU residual {record.calibration.max_residual_db:.4f} dB "
        f"(tolerance {record.calibration.tolerance_db} dB)",
        f"- Ill-conditioned frequencies: {len(record.calibration.ill_conditioned_hz)}",
        "",
        "## Limits",
        "",
        "| Limit | Threshold | Measured | Result | Violations |",
        "|---|---|---|---|---|",
    ]
    for outcome in record.outcomes:
        result = "PASS" if outcome.passed else ("FAIL (marginal)" if outcome.marginal else "FAIL")
        lines.append(
            f"| {outcome.name} | {_fmt(outcome.threshold, 'g', outcome.unit)} "
            f"| {_fmt(outcome.measured, '.4g', outcome.unit)} | {result} | {len(outcome.violations_hz)} |"
        )
    if record.tolerances:
        lines += ["", "Phase 1 tolerances: " + ", ".join(f"{k} {v:g}" for k, v in record.tolerances.items())]
    return "\n".join(lines) + "\n"


def render_report(record: RunRecord, fmt: Union[ReportFormat, str] = ReportFormat.JSON,
                  out_dir: Union[str, Path] = "reports") -> List[Path]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    fmt = ReportFormat(fmt)
    if fmt is ReportFormat.JSON:
        path = out_dir / f"{record.run_id}.json"
        path.write_text(record.to_json(), encoding="utf-8")
        written = [path]
    elif fmt is ReportFormat.MARKDOWN:
        path = out_dir / f"{record.run_id}.md"
        path.write_text(format_markdown(record), encoding="utf-8")
        written = [path]
    else:
        bundle = out_dir / f"{record.run_id}_traces"
        written = [write_trace_csv(trace.to_trace(), bundle / f"{trace.name}.csv") for trace in record.traces]
    logger.info(f"Rendered {fmt.value} report for run {record.run_id}: {len(written)} file(s) in {out_dir}")
    return written
