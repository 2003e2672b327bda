"""
Parameter uncertainty set and the operating point it is evaluated at.
"""

from enum import Enum
from pathlib import Path
from typing import Union

from pydantic import BaseModel, Field, model_validator

from network_core import DbKind, T0_KELVIN


class Aggregation(str, Enum):
    # second-stage T_eff term, ENR excluded
    T_EFF = "t_eff"
    # ENR term, T_eff excluded
    ENR = "enr"


class UncertaintyBudget(BaseModel):
    """One-sigma standard uncertainties; defaults are the published measurement budget."""

    sigma_gain_db: float = Field(default=0.033, ge=0, description="DUT gain, dB")
    sigma_cable_loss_db: float = Field(default=0.033, ge=0, description="Input cable insertion loss, dB")
    sigma_attenuator_loss_db: float = Field(default=0.033, ge=0, description="Cold attenuator loss, dB")
    sigma_t_cable_k: float = Field(default=32.0, ge=0, description="Lumped cable temperature, K")
    sigma_t_a_k: float = Field(default=0.005, ge=0, description="Attenuator physical temperature, K")
    sigma_enr_db: float = Field(default=0.18, ge=0, description="Noise source ENR, dB")
    sigma_t_eff_k: float = Field(default=12.0, ge=0, description="Second-stage effective temperature, K")
    aggregation: Aggregation = Field(default=Aggregation.T_EFF, description="Which of ENR / T_eff enters the total")
    gain_db_kind: DbKind = Field(default=DbKind.POWER, description="dB convention of sigma_gain_db")

    @classmethod
    def zero(cls, **overrides) -> "UncertaintyBudget":
        values = dict(sigma_gain_db=0.0, sigma_cable_loss_db=0.0, sigma_attenuator_loss_db=0.0,
                      sigma_t_cable_k=0.0, sigma_t_a_k=0.0, sigma_enr_db=0.0, sigma_t_eff_k=0.0)
        values.update(overrides)
        return cls(**values)

    @classmethod
    def from_json(cls, path: Union[str, Path]) -> "UncertaintyBudget":
        return cls.model_validate_json(Path(path).read_text(encoding="utf-8"))


class OperatingPoint(BaseModel):
    """Chain values at one frequency. Source temperatures are at the noise source, not the DUT."""

    y: float = Field(gt=1.0, description="Measured Y-factor, linear")
    t_hot: float = Field(gt=0, description="Hot source temperature, K")
    t_cold: float = Field(gt=0, description="Cold (off) source temperature, K")
    l_a: float = Field(ge=1.0, description="Cold attenuator loss, linear")
    l_cable: float = Field(ge=1.0, description="Input cable loss, linear")
    t_cable: float = Field(ge=0, description="Lumped cable temperature, K")
    t_a: float = Field(ge=0, description="Attenuator physical temperature, K")
    g_dut: float = Field(gt=0, description="DUT gain, linear power")
    t_second_stage: float = Field(default=0.0, ge=0, description="After-DUT noise temperature referred to the DUT output, K")
    frequency_hz: float = Field(default=0.0, ge=0, description="Frequency the point was taken at")

    @model_validator(mode="after")
    def _hot_above_cold(self):
        if self.t_hot <= self.t_cold:
            raise ValueError("hot source temperature must exceed the cold one")
        return self

    @property
    def enr_linear(self) -> float:
        return (self.t_hot - self.t_cold) / T0_KELVIN
