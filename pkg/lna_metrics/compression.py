"""
1 dB compression point from a swept-power measurement.

A small-signal line is fitted over a low-power window and projected across
the sweep; IP1dB is where the measured output first drops 1 dB below it for
good (every later sample stays at least 1 dB below).
"""

import logging
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Optional, Tuple, Union

import numpy as np

from network_core import DomainError, read_power_sweep_csv, write_power_sweep_csv

logger = logging.getLogger(__name__)

DEFAULT_FIT_WINDOW = (-80.0, -60.0)
MIN_SWEEP_POINTS = 8
MIN_WINDOW_POINTS = 3
COMPRESSION_DB = 1.0
EXPANSION_FLAG_DB = 0.2


class SlopeMode(str, Enum):
    UNIT = "unit"
    FREE = "free"


@dataclass(frozen=True, eq=False)
class PowerSweep:
    frequency_hz: float
    pin_dbm: np.ndarray
    pout_dbm: np.ndarray

    def __post_init__(self):
        pin = np.array(self.pin_dbm, dtype=float).ravel()
        pout = np.array(self.pout_dbm, dtype=float).ravel()
        if pin.size != pout.size:
            raise DomainError("input and output power arrays differ in length")
        if pin.size < MIN_SWEEP_POINTS:
            raise DomainError(f"a power sweep needs at least {MIN_SWEEP_POINTS} points, got {pin.size}")
        if np.any(np.diff(pin) <= 0):
            raise DomainError("input powers must be strictly increasing")
        if not (np.all(np.isfinite(pin)) and np.all(np.isfinite(pout))):
            raise DomainError("power sweep contains non-finite values")
        pin.setflags(write=False)
        pout.setflags(write=False)
        object.__setattr__(self, "pin_dbm", pin)
        object.__setattr__(self, "pout_dbm", pout)

    @property
    def gain_db(self) -> np.ndarray:
        return self.pout_dbm - self.pin_dbm

    def shifted(self, offset_db: float) -> "PowerSweep":
        return PowerSweep(self.frequency_hz, self.pin_dbm + offset_db, self.pout_dbm + offset_db)

    @classmethod
    def from_csv(cls, path: Union[str, Path]) -> "PowerSweep":
        return cls(*read_power_sweep_csv(path))

    def to_csv(self, path: Union[str, Path]) -> Path:
        return write_power_sweep_csv(self.frequency_hz, self.pin_dbm, self.pout_dbm, path)


@dataclass(frozen=True)
class P1dbResult:
    frequency_hz: float
    found: bool
    small_signal_gain_db: float
    slope: float
    ip1db_dbm: Optional[float] = None
    op1db_dbm: Optional[float] = None
    # largest rise of Pout above the small-signal line
    max_expansion_db: float = 0.0

    @property
    def expansion(self) -> bool:
        return self.max_expansion_db > EXPANSION_FLAG_DB

    def to_dict(self) -> dict:
        return {
            "frequency_hz": self.frequency_hz,
            "found": self.found,
            "ip1db_dbm": self.ip1db_dbm,
            "op1db_dbm": self.op1db_dbm,
            "small_signal_gain_db": self.small_signal_gain_db,
            "slope": self.slope,
            "max_expansion_db": self.max_expansion_db,
            "expansion": self.expansion,
        }


def extract_p1db(sweep: PowerSweep, fit_window: Tuple[float, float] = DEFAULT_FIT_WINDOW,
                 slope_mode: Union[SlopeMode, str] = SlopeMode.UNIT) -> P1dbResult:
    lo, hi = fit_window
    if lo >= hi:
        raise DomainError("fit window must have low < high")
    pin, pout = sweep.pin_dbm, sweep.pout_dbm
    window = (pin >= lo) & (pin <= hi)
    if window.sum() < MIN_WINDOW_POINTS:
        raise DomainError(f"fit window [{lo}, {hi}] dBm holds {int(window.sum())} points, need {MIN_WINDOW_POINTS}")

    if SlopeMode(slope_mode) is SlopeMode.UNIT:
        slope = 1.0
        intercept = float(np.mean(pout[window] - pin[window]))
    else:
        slope, intercept = (float(c) for c in np.polyfit(pin[window], pout[window], 1))
    line = slope * pin + intercept
    gain = float(np.mean(line[window] - pin[window]))

    deviation = line - pout
    max_expansion = float(max(0.0, -deviation.min()))
    if max_expansion > EXPANSION_FLAG_DB:
        logger.warning(f"Gain expansion of {max_expansion:.2f} dB at {sweep.frequency_hz / 1e9:.3f} GHz")

    # compressed from k onwards iff the suffix minimum clears 1 dB
    suffix_min = np.minimum.accumulate(deviation[::-1])[::-1]
    compressed = suffix_min >= COMPRESSION_DB
    if not compressed.any() or compressed[0]:
        logger.info(f"No 1 dB compression within sweep at {sweep.frequency_hz / 1e9:.3f} GHz")
        return P1dbResult(sweep.frequency_hz, False, gain, slope, max_expansion_db=max_expansion)

    k = int(np.argmax(compressed))
    d0, d1 = deviation[k - 1], deviation[k]
    frac = (COMPRESSION_DB - d0) / (d1 - d0)
    ip1db = float(pin[k - 1] + frac * (pin[k] - pin[k - 1]))
    op1db = float(pout[k - 1] + frac * (pout[k] - pout[k - 1]))
    logger.info(f"P1dB at {sweep.frequency_hz / 1e9:.3f} GHz: IP1dB {ip1db:.2f} dBm, OP1dB {op1db:.2f} dBm")
    return P1dbResult(sweep.frequency_hz, True, gain, slope, ip1db, op1db, max_expansion)
