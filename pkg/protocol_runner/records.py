"""
Persisted outcome of one qualification run.

The canonical form (sorted keys, no whitespace, timestamp and artifact paths
removed) is what the content hash covers; identical config, seed and limits
give byte-identical canonical JSON.
"""

import hashlib
import json
import math
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Union

import numpy as np
from pydantic import BaseModel, Field

from lna_metrics import BandSpec
from network_core import FrequencyGrid, ScalarTrace, Unit

from .limits import LimitOutcome, Verdict

CANONICAL_EXCLUDE = {"timestamp", "artifacts"}


def clean_json(value: Any) -> Any:
    """numpy scalars to Python, non-finite floats to None, recursively."""
    if isinstance(value, dict):
        return {str(k): clean_json(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [clean_json(v) for v in value]
    if isinstance(value, np.ndarray):
        return [clean_json(v) for v in value.tolist()]
    if isinstance(value, (np.bool_,)):
        return bool(value)
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return value if math.isfinite(value) else None
    return value


def content_hash(payload: Any) -> str:
    text = json.dumps(clean_json(payload), sort_keys=True, separators=(",", ":"), ensure_ascii=False)
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def derive_run_id(config_hash: str, seed: int, phase: int, limits: Dict[str, Any]) -> str:
    return content_hash({"config": config_hash, "seed": seed, "phase": phase, "limits": limits})[:12]


class TraceRecord(BaseModel):
    name: str
    unit: str
    frequency_hz: List[float]
    values: List[Optional[float]]

    @classmethod
    def from_trace(cls, name: str, trace: ScalarTrace) -> "TraceRecord":
        return cls(name=name, unit=trace.unit.value, frequency_hz=clean_json(trace.frequencies),
                   values=clean_json(trace.values))

    def to_trace(self) -> ScalarTrace:
        values = [np.nan if v is None else v for v in self.values]
        return ScalarTrace(FrequencyGrid(self.frequency_hz), values, Unit(self.unit))


class CalibrationSummary(BaseModel):
    verified: bool
    max_residual_db: float
    tolerance_db: float
    ill_conditioned_hz: List[float] = Field(default_factory=list)
    error_model_hash: str = ""


class RunRecord(BaseModel):
    run_id: str
    timestamp: str = Field(default_factory=lambda: datetime.now(timezone.utc).isoformat())
    phase: Literal[1, 2]
    scenario: str
    device: str
    config_hash: str
    testbed_hash: str
    seed: int
    band: BandSpec
    bias: Dict[str, Optional[float]] = Field(default_factory=dict)
    limits: Dict[str, Any] = Field(default_factory=dict)
    tolerances: Optional[Dict[str, float]] = None
    options: Dict[str, Any] = Field(default_factory=dict)
    phase1_reference: Optional[str] = Field(default=None, description="run id of the gating Phase 1 PASS record")
    calibration: CalibrationSummary
    metrics: Dict[str, Any] = Field(default_factory=dict)
    p1db: List[Dict[str, Any]] = Field(default_factory=list)
    uncertainty: Dict[str, Any] = Field(default_factory=dict)
    traces: List[TraceRecord] = Field(default_factory=list)
    outcomes: List[LimitOutcome] = Field(default_factory=list)
    verdict: Verdict
    cause: Optional[str] = None
    artifacts: Dict[str, str] = Field(default_factory=dict)

    def trace(self, name: str) -> TraceRecord:
        for trace in self.traces:
            if trace.name == name:
                return trace
        raise KeyError(f"record {self.run_id} has no trace {name!r}")

    def canonical_json(self) -> str:
        data = self.model_dump(mode="json", exclude=CANONICAL_EXCLUDE)
        return json.dumps(data, sort_keys=True, separators=(",", ":"), ensure_ascii=False)

    def content_hash(self) -> str:
        return hashlib.sha256(self.canonical_json().encode("utf-8")).hexdigest()

    def to_json(self) -> str:
        return json.dumps(self.model_dump(mode="json"), indent=2, ensure_ascii=False)

    @classmethod
    def from_json(cls, text: str) -> "RunRecord":
        return cls.model_validate_json(text)

    @classmethod
    def load(cls, path: Union[str, Path]) -> "RunRecord":
        return cls.from_json(Path(path).read_text(encoding="utf-8"))

    @property
    def stamp(self) -> str:
        moment = datetime.fromisoformat(self.timestamp)
        return moment.astimezone(timezone.utc).strftime("%Y%m%dT%H%M%SZ")
