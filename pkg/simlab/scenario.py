"""
Scenario documents for the virtual testbed (JSON, ``schema: 1``).

Spectral quantities of the DUT are given as knot lists ``[[f_GHz, value], ...]``
and interpolated linearly in frequency onto the testbed grid.
"""

import logging
from enum import Enum
from functools import lru_cache
from pathlib import Path
from typing import List, Literal, Optional, Tuple, Union

import numpy as np
from pydantic import BaseModel, Field, field_validator, model_validator

from lna_metrics import BandSpec
from network_core import DbKind, FrequencyGrid, ScalarTrace, TwoPortNetwork, Unit, from_db
from thermal_model import LossWeighting
from uncertainty_budget import UncertaintyBudget

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1
PRESETS_DIR = Path(__file__).parent / "presets"

Knots = List[Tuple[float, float]]


def _check_knots(knots: Knots) -> Knots:
    if len(knots) < 2:
        raise ValueError("a knot list needs at least two points")
    freqs = [k[0] for k in knots]
    if any(b <= a for a, b in zip(freqs, freqs[1:])):
        raise ValueError("knot frequencies must be strictly increasing")
    return knots


def interpolate_knots(knots: Knots, frequencies_hz: np.ndarray) -> np.ndarray:
    f_ghz = np.asarray(frequencies_hz, dtype=float) / 1e9
    kf = np.array([k[0] for k in knots], dtype=float)
    kv = np.array([k[1] for k in knots], dtype=float)
    # small relative slack for grid points computed in Hz
    if np.any(f_ghz < kf[0] * (1 - 1e-12)) or np.any(f_ghz > kf[-1] * (1 + 1e-12)):
        raise ValueError(f"knots span {kf[0]}-{kf[-1]} GHz and do not cover the requested frequencies")
    return np.interp(f_ghz, kf, kv)


class CompressionKind(str, Enum):
    RAPP = "rapp"
    HARD = "hard"
    NONE = "none"


class CompressionConfig(BaseModel):
    model: CompressionKind = Field(default=CompressionKind.RAPP, description="Large-signal model")
    psat_dbm: float = Field(default=0.0, description="Saturated output power, dBm")
    smoothness: float = Field(default=2.0, gt=0, description="Rapp knee sharpness (power form exponent)")


class BiasConditions(BaseModel):
    v_d_volts: Optional[float] = Field(default=None, description="Drain voltage V_D")
    i_d_ma: Optional[float] = Field(default=None, description="Drain current I_D in mA")
    v_g_volts: Optional[float] = Field(default=None, description="Gate voltage V_G")


class DutModel(BaseModel):
    name: str = Field(description="Device label")
    gain_db: Knots = Field(description="Small-signal gain |S21|, dB")
    noise_temperature_k: Knots = Field(description="Input-referred added noise temperature, K")
    input_return_db: Knots = Field(description="|S11| in dB (negative)")
    output_return_db: Knots = Field(description="|S22| in dB (negative)")
    reverse_isolation_db: Knots = Field(description="|S12| in dB")
    input_phase_deg: float = Field(default=0.0, description="Constant phase of S11")
    output_phase_deg: float = Field(default=0.0, description="Constant phase of S22")
    compression: CompressionConfig = Field(default_factory=CompressionConfig)
    bias: BiasConditions = Field(default_factory=BiasConditions)

    @field_validator("gain_db", "noise_temperature_k", "input_return_db", "output_return_db", "reverse_isolation_db")
    @classmethod
    def _knots(cls, v):
        return _check_knots(v)

    @model_validator(mode="after")
    def _physical(self):
        if any(k[1] < 0 for k in self.noise_temperature_k):
            raise ValueError("noise temperature must be >= 0 K")
        if any(k[1] >= 0 for k in self.input_return_db + self.output_return_db):
            raise ValueError("|Gamma| must be < 1 (return dB values negative)")
        return self

    def gain(self, grid: FrequencyGrid) -> ScalarTrace:
        return ScalarTrace(grid, interpolate_knots(self.gain_db, grid.points), Unit.DB)

    def noise_temperature(self, grid: FrequencyGrid) -> ScalarTrace:
        return ScalarTrace(grid, interpolate_knots(self.noise_temperature_k, grid.points), Unit.KELVIN)

    def s_parameters(self, grid: FrequencyGrid) -> TwoPortNetwork:
        f = grid.points

        def amp(knots):
            return from_db(interpolate_knots(knots, f), DbKind.AMPLITUDE)

        s11 = amp(self.input_return_db) * np.exp(1j * np.radians(self.input_phase_deg))
        s22 = amp(self.output_return_db) * np.exp(1j * np.radians(self.output_phase_deg))
        return TwoPortNetwork.from_parameters(grid, s11, amp(self.gain_db), amp(self.reverse_isolation_db), s22,
                                              name=self.name)


class GridConfig(BaseModel):
    start_ghz: float = Field(default=2.0, gt=0)
    stop_ghz: float = Field(default=10.0, gt=0)
    points: int = Field(default=81, ge=2)

    def build(self) -> FrequencyGrid:
        return FrequencyGrid.linspace(self.start_ghz * 1e9, self.stop_ghz * 1e9, self.points)


class CableSectionConfig(BaseModel):
    name: str = ""
    material: str = Field(description="Bundled material key (cu_rrr100, becu) or CSV path")
    length_m: float = Field(gt=0)
    t_hot_k: float = Field(gt=0)
    t_cold_k: float = Field(gt=0)
    loss_db: float = Field(ge=0, description="Insertion loss at reference_ghz")
    reference_ghz: float = Field(default=6.0, gt=0)
    loss_exponent: float = Field(default=0.5, description="Loss scales as (f/f_ref)^exponent")

    def loss_trace(self, grid: FrequencyGrid) -> ScalarTrace:
        ratio = grid.points / (self.reference_ghz * 1e9)
        return ScalarTrace(grid, self.loss_db * np.power(ratio, self.loss_exponent), Unit.DB)


class CablePathConfig(BaseModel):
    sections: List[CableSectionConfig] = Field(min_length=1, description="Sections in signal order")
    cold_end_first: bool = Field(default=False, description="Signal enters each section at its cold end")
    elements_per_section: int = Field(default=1000, ge=1)
    weighting: LossWeighting = LossWeighting.SQRT_RHO
    delay_ns: float = Field(default=6.0, ge=0, description="Electrical length of the run")


class NoiseSourceConfig(BaseModel):
    enr_db: float = Field(default=15.0, description="Flat ENR, dB")
    enr_knots: Optional[Knots] = Field(default=None, description="Frequency-dependent ENR overriding enr_db")
    t_off_k: float = Field(default=296.0, gt=0)


class StandardsConfig(BaseModel):
    line_delay_ps: float = Field(default=41.67, gt=0, description="LINE offset delay relative to THRU")
    line_loss_db: float = Field(default=0.05, ge=0, description="LINE insertion loss at the reference frequency")
    reference_ghz: float = Field(default=6.0, gt=0)
    reflect: Literal["SHORT"] = "SHORT"
    reflect_magnitude: float = Field(default=1.0, gt=0, le=1.0)
    thru_vswr: float = Field(default=1.0, ge=1.0, description="Imperfect THRU match, 1.0 for an ideal THRU")


class EtalonConfig(BaseModel):
    enabled: bool = False
    amplitude_db: float = Field(default=0.05, ge=0)
    period_hz: float = Field(default=0.5e9, gt=0)


class TestbedConfig(BaseModel):
    grid: GridConfig = Field(default_factory=GridConfig)
    input_path: CablePathConfig
    output_path: CablePathConfig
    attenuator_db: float = Field(default=30.0, ge=0)
    attenuator_temperature_k: float = Field(default=3.2, gt=0, description="Potted attenuator thermometer (T_A)")
    lna_base_temperature_k: float = Field(default=2.88, gt=0, description="LNA base thermometer")
    base_temperature_k: float = Field(default=2.74, gt=0)
    cold_sensor: Literal["attenuator", "lna_base"] = "attenuator"
    noise_source: NoiseSourceConfig = Field(default_factory=NoiseSourceConfig)
    receiver_temperature_k: float = Field(default=16000.0, ge=0)
    receiver_gain_db: float = 0.0
    vna_noise_db: float = Field(default=0.005, ge=0)
    sa_noise_db: float = Field(default=0.0005, ge=0)
    standards: StandardsConfig = Field(default_factory=StandardsConfig)
    etalon: EtalonConfig = Field(default_factory=EtalonConfig)
    seed: int = Field(default=0, ge=0)

    def cold_sensor_temperature(self, sensor: Optional[str] = None) -> float:
        sensor = sensor or self.cold_sensor
        return self.attenuator_temperature_k if sensor == "attenuator" else self.lna_base_temperature_k


class SweepConfig(BaseModel):
    pin_start_dbm: float = -80.0
    pin_stop_dbm: float = -20.0
    step_db: float = Field(default=0.5, gt=0)
    frequencies_ghz: List[float] = Field(default_factory=lambda: [6.0])
    fit_window: Tuple[float, float] = (-80.0, -60.0)

    def pin_grid(self) -> np.ndarray:
        count = int(round((self.pin_stop_dbm - self.pin_start_dbm) / self.step_db)) + 1
        return self.pin_start_dbm + self.step_db * np.arange(count)


class Scenario(BaseModel):
    schema_version: Literal[1] = Field(default=SCHEMA_VERSION, alias="schema")
    name: str
    description: str = ""
    role: Literal["control", "dut"] = "dut"
    band: BandSpec
    return_loss_band: Optional[BandSpec] = None
    testbed: TestbedConfig
    dut: DutModel
    sweep: SweepConfig = Field(default_factory=SweepConfig)
    budget: UncertaintyBudget = Field(default_factory=UncertaintyBudget)

    model_config = {"populate_by_name": True}

    def noiseless(self) -> "Scenario":
        testbed = self.testbed.model_copy(update={"vna_noise_db": 0.0, "sa_noise_db": 0.0})
        return self.model_copy(update={"testbed": testbed})

    def with_seed(self, seed: int) -> "Scenario":
        return self.model_copy(update={"testbed": self.testbed.model_copy(update={"seed": seed})})

    def to_json(self) -> str:
        return self.model_dump_json(by_alias=True, indent=2)

    @classmethod
    def from_json(cls, path: Union[str, Path]) -> "Scenario":
        scenario = cls.model_validate_json(Path(path).read_text(encoding="utf-8"))
        logger.info(f"Loaded scenario {scenario.name!r} from {path}")
        return scenario


def list_presets() -> List[str]:
    return sorted(p.stem for p in PRESETS_DIR.glob("*.json"))


@lru_cache(maxsize=None)
def _preset_text(name: str) -> str:
    path = PRESETS_DIR / f"{name}.json"
    if not path.exists():
        raise KeyError(f"Unknown preset {name!r}; available: {list_presets()}")
    return path.read_text(encoding="utf-8")


def load_preset(name: str) -> Scenario:
    return Scenario.model_validate_json(_preset_text(name))


def load_scenario(name_or_path: Union[str, Path]) -> Scenario:
    """Preset name or path to a scenario JSON file."""
    path = Path(name_or_path)
    if path.suffix == ".json" and path.exists():
        return Scenario.from_json(path)
    return load_preset(str(name_or_path))
