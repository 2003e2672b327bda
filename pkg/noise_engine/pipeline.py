"""
Full cold-attenuator Y-factor extraction, the textbook equivalent of the
analyzer's corrected noise-figure measurement:

1. receiver calibration with the noise source straight into the analyzer
   gives T_rx and the receiver gain;
2. hot/cold noise powers through the chain plus the loss tables give the
   DUT-input temperatures (lumped model);
3. Y-factor gives the system temperature at the DUT input;
4. the hot-minus-cold power step gives the DUT gain and the second-stage
   (after-DUT loss + receiver) contribution is removed.
"""

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

from network_core import ScalarTrace, Unit, dbm_to_watts

from .loss_tables import LossTables
from .yfactor import (
    EnrTable,
    YFactorMeasurement,
    dut_noise_temperature,
    hot_temperature,
    lumped_input_temperature,
    second_stage_correction,
    y_factor,
)

logger = logging.getLogger(__name__)


def _watts_per_hz(trace: ScalarTrace) -> np.ndarray:
    if trace.unit in (Unit.DBM_PER_HZ, Unit.DBM):
        return dbm_to_watts(trace.values)
    return np.asarray(trace.values, dtype=float)


@dataclass(frozen=True, eq=False)
class ReceiverCalibration:
    t_receiver: ScalarTrace
    # k_B·G_rx: W/Hz per kelvin at the analyzer input
    gain: ScalarTrace


def calibrate_receiver(enr: EnrTable, n_hot: ScalarTrace, n_cold: ScalarTrace) -> ReceiverCalibration:
    enr.grid.require_same(n_hot.grid, "ENR table and receiver powers")
    t_hot = hot_temperature(enr).values
    result = y_factor(n_hot, n_cold)
    t_rx = dut_noise_temperature(result.y.values, t_hot, enr.t_off_k)
    gain = (_watts_per_hz(n_hot) - _watts_per_hz(n_cold)) / (t_hot - enr.t_off_k)
    logger.info(f"Receiver calibrated: T_rx {np.nanmin(t_rx):.1f}-{np.nanmax(t_rx):.1f} K")
    return ReceiverCalibration(
        ScalarTrace(enr.grid, t_rx, Unit.KELVIN),
        ScalarTrace(enr.grid, gain, Unit.LINEAR),
    )


@dataclass(frozen=True, eq=False)
class NoiseExtraction:
    measurement: YFactorMeasurement
    y: ScalarTrace
    t_system: ScalarTrace
    t_dut: ScalarTrace
    gain_db: Optional[ScalarTrace]
    t_second_stage: Optional[ScalarTrace]
    invalid: np.ndarray
    unphysical: np.ndarray

    @property
    def grid(self):
        return self.t_dut.grid


def extract_noise_temperature(enr: EnrTable, n_hot: ScalarTrace, n_cold: ScalarTrace, tables: LossTables,
                              receiver: Optional[ReceiverCalibration] = None) -> NoiseExtraction:
    grid = n_hot.grid
    for other in (enr.grid, n_cold.grid, tables.grid):
        grid.require_same(other, "noise pipeline inputs")

    l_before = tables.before_linear
    l_after = tables.after_linear
    t_hot_in = lumped_input_temperature(hot_temperature(enr).values, l_before, tables.t_loss.values)
    t_cold_in = lumped_input_temperature(enr.t_off_k, l_before, tables.t_loss.values)
    measurement = YFactorMeasurement(
        n_hot, n_cold,
        ScalarTrace(grid, t_hot_in, Unit.KELVIN),
        ScalarTrace(grid, t_cold_in, Unit.KELVIN),
    )

    y = y_factor(n_hot, n_cold)
    t_sys = dut_noise_temperature(y.y.values, t_hot_in, t_cold_in)

    gain_db = None
    t_stage2 = None
    t_dut = t_sys
    if receiver is not None:
        grid.require_same(receiver.t_receiver.grid, "receiver calibration")
        g2 = receiver.gain.values / l_after
        g_dut = (_watts_per_hz(n_hot) - _watts_per_hz(n_cold)) / (g2 * (t_hot_in - t_cold_in))
        t2 = (l_after - 1.0) * tables.t_after.values + l_after * receiver.t_receiver.values
        positive = g_dut > 0
        t_dut = np.where(positive, second_stage_correction(t_sys, np.where(positive, g_dut, 1.0), t2), np.nan)
        gain_db = ScalarTrace(grid, np.where(positive, 10.0 * np.log10(np.where(positive, g_dut, 1.0)), np.nan), Unit.DB)
        t_stage2 = ScalarTrace(grid, t2, Unit.KELVIN)

    invalid = y.invalid | ~np.isfinite(t_dut)
    unphysical = np.isfinite(t_dut) & (t_dut < 0)
    if np.any(unphysical):
        logger.warning(f"Negative T_DUT at {int(unphysical.sum())} points, check calibration and loss tables")
    return NoiseExtraction(
        measurement=measurement,
        y=y.y,
        t_system=ScalarTrace(grid, t_sys, Unit.KELVIN),
        t_dut=ScalarTrace(grid, t_dut, Unit.KELVIN),
        gain_db=gain_db,
        t_second_stage=t_stage2,
        invalid=invalid,
        unphysical=unphysical,
    )


def chain_noise_temperature(enr: EnrTable, n_hot: ScalarTrace, n_cold: ScalarTrace,
                            receiver: ReceiverCalibration) -> ScalarTrace:
    """Input-referred noise temperature of a passive chain measured with a THRU in place of the DUT."""
    grid = n_hot.grid
    for other in (enr.grid, n_cold.grid, receiver.gain.grid):
        grid.require_same(other, "chain measurement inputs")
    t_rx = receiver.t_receiver.values
    t4_hot = _watts_per_hz(n_hot) / receiver.gain.values - t_rx
    t4_cold = _watts_per_hz(n_cold) / receiver.gain.values - t_rx
    t_chain = dut_noise_temperature(t4_hot / t4_cold, hot_temperature(enr).values, enr.t_off_k)
    return ScalarTrace(grid, t_chain, Unit.KELVIN)
