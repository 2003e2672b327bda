"""
Y-factor relations of the cold-attenuator method.

ENR convention: T_hot = 290·10^(ENR/10) + T_off, the diode off state sitting
at its physical temperature T_off.
"""

import logging
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Union

import numpy as np

from network_core import (
    DomainError,
    FrequencyGrid,
    ScalarTrace,
    T0_KELVIN,
    Unit,
    read_trace_csv,
    to_db,
)
from thermal_model import t_loss as lumped_loss_temperature

logger = logging.getLogger(__name__)

DEFAULT_T_OFF_K = 296.0


class InputModel(str, Enum):
    FULL = "full"
    LUMPED = "lumped"


@dataclass(frozen=True, eq=False)
class EnrTable:
    grid: FrequencyGrid
    enr_db: np.ndarray
    t_off_k: float = DEFAULT_T_OFF_K

    def __post_init__(self):
        enr = np.array(self.enr_db, dtype=float).ravel()
        if enr.size != len(self.grid):
            raise DomainError("ENR table length does not match its grid")
        if not np.all(np.isfinite(enr)):
            raise DomainError("ENR values must be finite")
        if self.t_off_k <= 0:
            raise DomainError("off-state temperature must be > 0 K")
        enr.setflags(write=False)
        object.__setattr__(self, "enr_db", enr)

    @classmethod
    def flat(cls, grid: FrequencyGrid, enr_db: float, t_off_k: float = DEFAULT_T_OFF_K) -> "EnrTable":
        return cls(grid, np.full(len(grid), float(enr_db)), t_off_k)

    @classmethod
    def from_csv(cls, path: Union[str, Path], t_off_k: float = DEFAULT_T_OFF_K) -> "EnrTable":
        trace = read_trace_csv(path, default_unit=Unit.DB)
        return cls(trace.grid, trace.values, t_off_k)

    def resample(self, grid: FrequencyGrid) -> "EnrTable":
        trace = ScalarTrace(self.grid, self.enr_db, Unit.DB).resample(grid)
        return EnrTable(grid, trace.values, self.t_off_k)


@dataclass(frozen=True, eq=False)
class YFactorMeasurement:
    n_hot: ScalarTrace
    n_cold: ScalarTrace
    t_hot: ScalarTrace
    t_cold: ScalarTrace

    def __post_init__(self):
        grid = self.n_hot.grid
        for trace in (self.n_cold, self.t_hot, self.t_cold):
            grid.require_same(trace.grid, "Y-factor traces")

    @property
    def grid(self) -> FrequencyGrid:
        return self.n_hot.grid

    @property
    def valid(self) -> np.ndarray:
        return _linear_power(self.n_hot) > _linear_power(self.n_cold)


def hot_temperature(enr: EnrTable) -> ScalarTrace:
    t_hot = T0_KELVIN * np.power(10.0, enr.enr_db / 10.0) + enr.t_off_k
    return ScalarTrace(enr.grid, t_hot, Unit.KELVIN)


def _linear_power(trace: ScalarTrace) -> np.ndarray:
    if trace.unit in (Unit.DBM, Unit.DBM_PER_HZ, Unit.DB):
        return np.power(10.0, trace.values / 10.0)
    return np.asarray(trace.values, dtype=float)


@dataclass(frozen=True, eq=False)
class YFactorResult:
    y: ScalarTrace
    invalid: np.ndarray


def y_factor(n_hot: ScalarTrace, n_cold: ScalarTrace) -> YFactorResult:
    """Elementwise N_hot / N_cold; points with Y <= 1 are flagged invalid."""
    n_hot.grid.require_same(n_cold.grid, "hot and cold noise powers")
    hot = _linear_power(n_hot)
    cold = _linear_power(n_cold)
    if np.any(cold <= 0):
        raise DomainError("cold-state noise power must be > 0")
    y = hot / cold
    invalid = y <= 1.0
    if np.any(invalid):
        logger.warning(f"Y <= 1 at {int(invalid.sum())} of {y.size} points, marked invalid")
    return YFactorResult(ScalarTrace(n_hot.grid, y, Unit.LINEAR), invalid)


def dut_noise_temperature(y, t_hot, t_cold):
    """T_DUT = (T_hot − Y·T_cold)/(Y − 1); NaN where Y <= 1.

    Negative results are returned as they are (they point at a calibration
    fault); callers flag them.
    """
    y = np.asarray(y, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        t = (np.asarray(t_hot, dtype=float) - y * np.asarray(t_cold, dtype=float)) / (y - 1.0)
    t = np.where(y > 1.0, t, np.nan)
    if np.any(t < 0):
        logger.warning("Unphysical negative noise temperature in Y-factor result")
    return float(t) if np.ndim(t) == 0 else t


def input_noise_temperature(t_s, l_a, t_a, l_cable, t_cable,
                            mode: Union[InputModel, str] = InputModel.FULL):
    """Noise temperature presented to the DUT: source → cable → cold attenuator."""
    l_a = np.asarray(l_a, dtype=float)
    l_cable = np.asarray(l_cable, dtype=float)
    if np.any(l_a < 1) or np.any(l_cable < 1):
        raise DomainError("losses must be >= 1 (linear)")
    t_s = np.asarray(t_s, dtype=float)
    if InputModel(mode) is InputModel.FULL:
        out = (t_s / (l_a * l_cable)
               + (1.0 / l_a) * (1.0 - 1.0 / l_cable) * np.asarray(t_cable, dtype=float)
               + (1.0 - 1.0 / l_a) * np.asarray(t_a, dtype=float))
    else:
        l_cable_b, l_a_b = np.broadcast_arrays(l_cable, l_a)
        lossless = l_cable_b * l_a_b == 1.0
        # T_Loss is undefined without loss; its weight (1 - 1/L) is zero there anyway
        t_l = np.where(lossless, 0.0,
                       lumped_loss_temperature(np.where(lossless, 2.0, l_cable_b), t_cable, l_a_b, t_a))
        out = lumped_input_temperature(t_s, l_a_b * l_cable_b, t_l)
    return float(out) if np.ndim(out) == 0 else out


def lumped_input_temperature(t_s, l_total, t_loss):
    """Lumped-loss form: T_s/L + (1 − 1/L)·T_Loss."""
    l_total = np.asarray(l_total, dtype=float)
    return np.asarray(t_s, dtype=float) / l_total + (1.0 - 1.0 / l_total) * np.asarray(t_loss, dtype=float)


def second_stage_correction(t_measured, g_dut, t_receiver):
    g = np.asarray(g_dut, dtype=float)
    if np.any(g <= 0):
        raise DomainError("DUT gain must be > 0 for the second-stage correction")
    out = np.asarray(t_measured, dtype=float) - np.asarray(t_receiver, dtype=float) / g
    return float(out) if np.ndim(out) == 0 else out


def noise_figure_from_temperature(t):
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise DomainError("noise temperature must be >= 0 K")
    return to_db(1.0 + t / T0_KELVIN)
