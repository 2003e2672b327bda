"""
CSV exchange for scalar traces and power sweeps.

Trace files::

    # unit: kelvin
    freq_hz,value
    4000000000,2.61
    ...

Power sweep files carry ``# frequency_hz: <f>`` and a ``pin_dbm,pout_dbm``
column header.
"""

import csv
import io
import logging
from pathlib import Path
from typing import Tuple, Union

import numpy as np

from .errors import TraceParseError
from .network import FrequencyGrid, ScalarTrace
from .units import Unit

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


def _read_rows(text: str, source: str):
    header = {}
    rows = []
    for line_number, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped:
            continue
        if stripped.startswith("#"):
            key, _, value = stripped[1:].partition(":")
            header[key.strip().lower()] = value.strip()
            continue
        cells = next(csv.reader([stripped]))
        try:
            rows.append([float(c) for c in cells])
        except ValueError:
            if rows:
                raise TraceParseError(f"non-numeric row in {source}", line_number)
            # column header line
            continue
        if len(rows[-1]) != 2:
            raise TraceParseError(f"expected 2 columns in {source}, found {len(rows[-1])}", line_number)
    if not rows:
        raise TraceParseError(f"{source} holds no data rows")
    return header, np.asarray(rows)


def parse_trace_csv(text: str, default_unit: Unit = Unit.LINEAR, source: str = "trace") -> ScalarTrace:
    header, data = _read_rows(text, source)
    unit = Unit(header.get("unit", default_unit.value))
    return ScalarTrace(FrequencyGrid(data[:, 0]), data[:, 1], unit)


def read_trace_csv(path: PathLike, default_unit: Unit = Unit.LINEAR) -> ScalarTrace:
    path = Path(path)
    return parse_trace_csv(path.read_text(encoding="utf-8"), default_unit, source=str(path))


def format_trace_csv(trace: ScalarTrace, value_column: str = "value") -> str:
    buf = io.StringIO()
    buf.write(f"# unit: {trace.unit.value}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["freq_hz", value_column])
    for f, v in zip(trace.grid.points, trace.values):
        writer.writerow([repr(float(f)), repr(float(v))])
    return buf.getvalue()


def write_trace_csv(trace: ScalarTrace, path: PathLike, value_column: str = "value") -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(format_trace_csv(trace, value_column), encoding="utf-8")
    return path


def read_power_sweep_csv(path: PathLike) -> Tuple[float, np.ndarray, np.ndarray]:
    """Returns (frequency_hz, pin_dbm, pout_dbm)."""
    path = Path(path)
    header, data = _read_rows(path.read_text(encoding="utf-8"), str(path))
    if "frequency_hz" not in header:
        raise TraceParseError(f"{path} lacks a '# frequency_hz:' header")
    return float(header["frequency_hz"]), data[:, 0], data[:, 1]


def write_power_sweep_csv(frequency_hz: float, pin_dbm, pout_dbm, path: PathLike) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    buf = io.StringIO()
    buf.write(f"# frequency_hz: {float(frequency_hz)!r}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["pin_dbm", "pout_dbm"])
    for pin, pout in zip(pin_dbm, pout_dbm):
        writer.writerow([repr(float(pin)), repr(float(pout))])
    path.write_text(buf.getvalue(), encoding="utf-8")
    return path
