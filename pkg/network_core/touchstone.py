"""
Touchstone v1 (.s2p) reader and writer.

Option line: ``# <Hz|kHz|MHz|GHz> S <RI|MA|DB> R <z0>``; missing tokens take
the Touchstone defaults (GHz, S, MA, R 50). Two-port data rows are
``f  S11  S21  S12  S22`` with each parameter as a pair of numbers.
"""

import logging
from pathlib import Path
from typing import Tuple, Union

import numpy as np

from .errors import TouchstoneParseError, UnsupportedParameterError
from .network import FrequencyGrid, TwoPortNetwork, Z0_DEFAULT

logger = logging.getLogger(__name__)

FREQUENCY_UNITS = {"HZ": 1.0, "KHZ": 1e3, "MHZ": 1e6, "GHZ": 1e9}
VALUE_FORMATS = ("RI", "MA", "DB")
# file column order of the four parameters
_COLUMN_ORDER = ((0, 0), (1, 0), (0, 1), (1, 1))
_MAGNITUDE_FLOOR = 1e-30


def _parse_option_line(line: str, line_number: int) -> Tuple[float, str, float]:
    tokens = line[1:].split()
    multiplier, fmt, z0 = FREQUENCY_UNITS["GHZ"], "MA", Z0_DEFAULT
    i = 0
    while i < len(tokens):
        tok = tokens[i].upper()
        if tok in FREQUENCY_UNITS:
            multiplier = FREQUENCY_UNITS[tok]
        elif tok in VALUE_FORMATS:
            fmt = tok
        elif tok == "S":
            pass
        elif tok in ("Y", "Z", "H", "G"):
            raise UnsupportedParameterError(f"parameter type {tok} is not supported, only S", line_number)
        elif tok == "R":
            if i + 1 >= len(tokens):
                raise TouchstoneParseError("option 'R' needs a reference impedance", line_number)
            try:
                z0 = float(tokens[i + 1])
            except ValueError:
                raise TouchstoneParseError(f"bad reference impedance {tokens[i + 1]!r}", line_number)
            i += 1
        else:
            raise TouchstoneParseError(f"malformed option line, unknown token {tokens[i]!r}", line_number)
        i += 1
    if z0 != Z0_DEFAULT:
        raise TouchstoneParseError(f"reference impedance {z0} ohm is not supported (50 ohm only)", line_number)
    return multiplier, fmt, z0


def _pairs_to_complex(a: np.ndarray, b: np.ndarray, fmt: str) -> np.ndarray:
    if fmt == "RI":
        return a + 1j * b
    mag = a if fmt == "MA" else np.power(10.0, a / 20.0)
    return mag * np.exp(1j * np.deg2rad(b))


def parse_touchstone(text: str, name: str = "") -> TwoPortNetwork:
    multiplier, fmt = None, None
    freqs, rows = [], []
    last_f = None
    for line_number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("!", 1)[0].strip()
        if not line:
            continue
        if line.startswith("#"):
            if multiplier is not None:
                raise TouchstoneParseError("second option line", line_number)
            multiplier, fmt, _ = _parse_option_line(line, line_number)
            continue
        if multiplier is None:
            multiplier, fmt = FREQUENCY_UNITS["GHZ"], "MA"
        parts = line.split()
        if len(parts) != 9:
            raise TouchstoneParseError(f"expected 9 columns for a two-port row, found {len(parts)}", line_number)
        try:
            values = [float(p) for p in parts]
        except ValueError as e:
            raise TouchstoneParseError(f"non-numeric value ({e})", line_number)
        f = values[0] * multiplier
        if last_f is not None and f <= last_f:
            raise TouchstoneParseError("frequencies must be strictly increasing", line_number)
        last_f = f
        freqs.append(f)
        rows.append(values[1:])
    if len(freqs) < 2:
        raise TouchstoneParseError("file holds fewer than two frequency points")

    data = np.asarray(rows)
    s = np.empty((len(freqs), 2, 2), dtype=complex)
    for k, (i, j) in enumerate(_COLUMN_ORDER):
        s[:, i, j] = _pairs_to_complex(data[:, 2 * k], data[:, 2 * k + 1], fmt)
    logger.debug(f"Parsed {len(freqs)} points ({fmt}) from {name or 'text'}")
    return TwoPortNetwork(FrequencyGrid(np.asarray(freqs)), s, name=name)


def read_touchstone(path: Union[str, Path]) -> TwoPortNetwork:
    path = Path(path)
    return parse_touchstone(path.read_text(encoding="utf-8"), name=path.stem)


def format_touchstone(network: TwoPortNetwork, fmt: str = "DB", precision: int = 12) -> str:
    """Serialize to Touchstone text. ``precision`` significant digits, at least 9."""
    fmt = fmt.upper()
    if fmt not in VALUE_FORMATS:
        raise ValueError(f"unknown Touchstone format {fmt!r}")
    precision = max(int(precision), 9)
    lines = [f"! {network.name or 'two-port network'}", f"# Hz S {fmt} R {network.z0:g}"]
    for n, f in enumerate(network.grid.points):
        cells = [f"{f:.{precision + 3}g}"]
        for i, j in _COLUMN_ORDER:
            z = network.s[n, i, j]
            if fmt == "RI":
                a, b = z.real, z.imag
            else:
                mag = max(abs(z), _MAGNITUDE_FLOOR)
                a = mag if fmt == "MA" else 20.0 * np.log10(mag)
                b = np.degrees(np.angle(z))
            cells.append(f"{a:.{precision}g}")
            cells.append(f"{b:.{precision}g}")
        lines.append(" ".join(cells))
    return "\n".join(lines) + "\n"


def write_touchstone(network: TwoPortNetwork, path: Union[str, Path], fmt: str = "DB", precision: int = 12) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(format_touchstone(network, fmt, precision), encoding="utf-8")
    logger.info(f"Wrote {len(network.grid)}-point Touchstone file {path}")
    return path
