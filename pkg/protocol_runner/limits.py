"""
System-integrator limits, Phase 1 agreement tolerances and per-limit outcomes.
"""

import math
from enum import Enum
from pathlib import Path
from typing import List, Optional, Union

from pydantic import BaseModel, Field, field_validator, model_validator

from lna_metrics import BandSpec

LIMIT_SETS_DIR = Path(__file__).parent / "limit_sets"

_LIMIT_FIELDS = (
    "min_gain_db",
    "max_gain_db",
    "max_flatness_db",
    "max_noise_temperature_k",
    "min_op1db_dbm",
    "return_loss_db",
    "isolation_db",
)


class SpecLimits(BaseModel):
    band: BandSpec = Field(description="Operating band the limits apply over")
    min_gain_db: Optional[float] = Field(default=None, description="Lowest in-band gain")
    max_gain_db: Optional[float] = Field(default=None, description="Highest in-band gain")
    max_flatness_db: Optional[float] = Field(default=None, description="Peak-to-peak in-band gain")
    max_noise_temperature_k: Optional[float] = Field(default=None, description="Highest in-band T_DUT")
    min_op1db_dbm: Optional[float] = Field(default=None, description="Lowest OP1dB over the sweep frequencies")
    return_loss_db: Optional[float] = Field(default=None, description="S11 and S22 must stay below this, dB")
    return_loss_band: Optional[BandSpec] = Field(default=None, description="Band for the return-loss limit")
    isolation_db: Optional[float] = Field(default=None, description="S12 must stay below this, dB")

    @model_validator(mode="after")
    def _at_least_one(self):
        if not self.present():
            raise ValueError("SpecLimits needs at least one limit")
        return self

    def present(self) -> List[str]:
        return [name for name in _LIMIT_FIELDS if getattr(self, name) is not None]

    @classmethod
    def from_json(cls, path: Union[str, Path]) -> "SpecLimits":
        return cls.model_validate_json(Path(path).read_text(encoding="utf-8"))


class Phase1Tolerances(BaseModel):
    """Allowed deviation of a control-device measurement from its known reference."""

    gain_db: float = Field(default=0.1, ge=0)
    flatness_db: float = Field(default=0.1, ge=0)
    noise_temperature_k: float = Field(default=0.3, ge=0)
    op1db_db: float = Field(default=0.5, ge=0)
    # added to every tolerance so exact recovery passes with all tolerances at zero
    numeric_floor: float = Field(default=1e-6, ge=0)

    @classmethod
    def zero(cls) -> "Phase1Tolerances":
        return cls(gain_db=0.0, flatness_db=0.0, noise_temperature_k=0.0, op1db_db=0.0)


class Verdict(str, Enum):
    PASS = "PASS"
    FAIL = "FAIL"
    FAILURE_ANALYSIS = "FAIL→FAILURE_ANALYSIS"


class LimitOutcome(BaseModel):
    name: str
    passed: bool
    threshold: Optional[float] = None
    measured: Optional[float] = Field(default=None, description="Worst measured value against the threshold")
    unit: str = ""
    violations_hz: List[float] = Field(default_factory=list)
    min_violation: Optional[float] = Field(default=None, description="Smallest amount by which a failing point misses")
    sigma: Optional[float] = Field(default=None, description="Measurement uncertainty used for the marginal test")
    marginal: bool = False

    @field_validator("threshold", "measured", "min_violation", "sigma")
    @classmethod
    def _finite_or_none(cls, v):
        # a violation that cannot be sized (NaN points, no finite value) is stored as None
        if v is None or not math.isfinite(v):
            return None
        return float(v)


def load_limit_set(name_or_path: Union[str, Path]) -> SpecLimits:
    path = Path(name_or_path)
    if not path.exists():
        path = LIMIT_SETS_DIR / f"{name_or_path}.json"
    if not path.exists():
        available = sorted(p.stem for p in LIMIT_SETS_DIR.glob("*.json"))
        raise KeyError(f"Unknown limit set {name_or_path!r}; available: {available}")
    return SpecLimits.from_json(path)
