"""
Band-limited gain metrics and threshold compliance.
"""

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import List, Union

import numpy as np
from pydantic import BaseModel, Field, model_validator

from network_core import DomainError, ScalarTrace

logger = logging.getLogger(__name__)


class BandSpec(BaseModel):
    f_low_hz: float = Field(description="Lower band edge in Hz")
    f_high_hz: float = Field(description="Upper band edge in Hz")

    @model_validator(mode="after")
    def _ordered(self):
        if not 0 < self.f_low_hz < self.f_high_hz:
            raise ValueError("band needs 0 < f_low < f_high")
        return self

    @classmethod
    def ghz(cls, f_low: float, f_high: float) -> "BandSpec":
        return cls(f_low_hz=f_low * 1e9, f_high_hz=f_high * 1e9)

    def label(self) -> str:
        return f"{self.f_low_hz / 1e9:g}-{self.f_high_hz / 1e9:g} GHz"


class Relation(str, Enum):
    BELOW = "below"
    ABOVE = "above"


def _in_band(trace: ScalarTrace, band: BandSpec) -> np.ndarray:
    if not trace.grid.covers(band.f_low_hz, band.f_high_hz):
        raise DomainError(f"band {band.label()} lies outside the trace grid")
    mask = trace.grid.band_mask(band.f_low_hz, band.f_high_hz)
    if not mask.any():
        raise DomainError(f"no grid points inside band {band.label()}")
    return mask


def gain_flatness(gain: ScalarTrace, band: BandSpec) -> float:
    """Peak-to-peak gain over the band, dB."""
    values = gain.values[_in_band(gain, band)]
    return float(values.max() - values.min())


def peak_gain(gain: ScalarTrace, band: BandSpec) -> float:
    return float(gain.values[_in_band(gain, band)].max())


def gain_at(gain: ScalarTrace, frequency_hz: float) -> float:
    """Gain interpolated at one frequency (mid-band figure of a datasheet)."""
    grid = gain.grid
    if not grid.start <= frequency_hz <= grid.stop:
        raise DomainError(f"{frequency_hz:.6g} Hz is outside the trace grid")
    return float(np.interp(frequency_hz, grid.points, gain.values))


@dataclass(frozen=True)
class ComplianceResult:
    passed: bool
    violations: List[float] = field(default_factory=list)
    # smallest amount by which a violating point misses the threshold
    worst_margin: float = 0.0
    min_violation: float = 0.0


def band_compliance(trace: ScalarTrace, threshold: float, relation: Union[Relation, str],
                    band: BandSpec) -> ComplianceResult:
    mask = _in_band(trace, band)
    values = trace.values[mask]
    freqs = trace.frequencies[mask]
    if Relation(relation) is Relation.BELOW:
        excess = values - threshold
    else:
        excess = threshold - values
    # NaN points (invalid measurements) count as violations
    bad = ~(excess <= 0)
    violations = [float(f) for f in freqs[bad]]
    finite_bad = excess[bad & np.isfinite(excess)]
    result = ComplianceResult(
        passed=not violations,
        violations=violations,
        worst_margin=float(np.nanmax(excess)) if np.any(np.isfinite(excess)) else float("nan"),
        min_violation=float(finite_bad.min()) if finite_bad.size else (float("inf") if violations else 0.0),
    )
    if violations:
        logger.info(f"Threshold {threshold} {Relation(relation).value}: {len(violations)} violations in {band.label()}")
    return result
