"""
Virtual VNA, spectrum analyzer and swept-power source of the cryostat
testbed.

Each measurement call draws its noise from its own substream
SeedSequence(seed, spawn_key=(call_index,)); two testbeds built from the same
scenario and seed return identical data for the same sequence of calls.
"""

import logging
from enum import Enum
from functools import cached_property
from typing import Optional, Union

import numpy as np
from pydantic import BaseModel, Field

from lna_metrics import PowerSweep
from network_core import (
    DomainError,
    FrequencyGrid,
    ScalarTrace,
    T0_KELVIN,
    TwoPortNetwork,
    Unit,
    cascade,
    from_db,
    noise_density_dbm_per_hz,
)
from noise_engine import EnrTable
from thermal_model import ThermalProfile, build_profile, integrated_cable_noise
from trl_cal import TrlStandardsMeasurement

from .amplifier import output_power_dbm
from .fixture import (
    cable_thermal_spec,
    line_standard,
    path_loss_db,
    reflect_gamma,
    thru_standard,
    vna_error_boxes,
)
from .scenario import DutModel, Scenario, interpolate_knots

logger = logging.getLogger(__name__)

LN10 = np.log(10.0)


class Standard(str, Enum):
    THRU = "THRU"
    REFLECT = "REFLECT"
    LINE = "LINE"
    DUT = "DUT"
    SPARE = "SPARE"


class SwitchState(BaseModel):
    """Selection of the two SP6T switches, actuated together."""

    port1: Standard = Field(description="Input-side SP6T position")
    port2: Standard = Field(description="Output-side SP6T position")

    @classmethod
    def select(cls, standard: Union[Standard, str]) -> "SwitchState":
        return cls(port1=standard, port2=standard)

    @property
    def consistent(self) -> bool:
        return self.port1 is self.port2 and self.port1 is not Standard.SPARE


class SourceState(str, Enum):
    HOT = "hot"
    COLD = "cold"


class SaPath(str, Enum):
    # noise source straight into the analyzer (receiver calibration)
    DIRECT = "direct"
    # source -> input run -> attenuator -> DUT or THRU -> output run -> analyzer
    CHAIN = "chain"


class VirtualTestbed:
    def __init__(self, scenario: Scenario, seed: Optional[int] = None):
        self.scenario = scenario
        self.config = scenario.testbed
        self.seed = self.config.seed if seed is None else int(seed)
        self.grid: FrequencyGrid = self.config.grid.build()
        self._calls = 0
        logger.info(f"Virtual testbed for {scenario.name!r}: {len(self.grid)} points, seed {self.seed}")

    def _rng(self) -> np.random.Generator:
        rng = np.random.default_rng(np.random.SeedSequence(self.seed, spawn_key=(self._calls,)))
        self._calls += 1
        return rng

    @property
    def call_count(self) -> int:
        return self._calls

    # fixture

    @cached_property
    def error_boxes(self):
        return vna_error_boxes(self.config, self.grid)

    @cached_property
    def input_profile(self) -> ThermalProfile:
        return build_profile(cable_thermal_spec(self.config.input_path, self.grid), self.grid)

    @cached_property
    def output_profile(self) -> ThermalProfile:
        return build_profile(cable_thermal_spec(self.config.output_path, self.grid), self.grid)

    @cached_property
    def input_loss_db(self) -> ScalarTrace:
        return path_loss_db(self.config.input_path, self.grid)

    @cached_property
    def output_loss_db(self) -> ScalarTrace:
        return path_loss_db(self.config.output_path, self.grid)

    @cached_property
    def input_cable_noise(self) -> ScalarTrace:
        return integrated_cable_noise(self.input_profile)

    @cached_property
    def output_cable_noise(self) -> ScalarTrace:
        return integrated_cable_noise(self.output_profile)

    @cached_property
    def enr(self) -> EnrTable:
        source = self.config.noise_source
        if source.enr_knots:
            return EnrTable(self.grid, interpolate_knots(source.enr_knots, self.grid.points), source.t_off_k)
        return EnrTable.flat(self.grid, source.enr_db, source.t_off_k)

    def source_temperature(self, source: Union[SourceState, str]) -> np.ndarray:
        enr = self.enr
        if SourceState(source) is SourceState.HOT:
            return T0_KELVIN * from_db(enr.enr_db) + enr.t_off_k
        return np.full(len(self.grid), enr.t_off_k)

    # instruments

    def vna_measure(self, state: SwitchState, dut: Optional[DutModel] = None) -> TwoPortNetwork:
        if not state.consistent:
            raise DomainError(f"inconsistent switch state {state.port1.value}/{state.port2.value}")
        selected = state.port1
        if (selected is Standard.DUT) != (dut is not None):
            raise DomainError("a DUT model must be given exactly when the switches select the DUT")
        rng = self._rng()
        input_box, output_box = self.error_boxes
        standards = self.config.standards
        if selected is Standard.REFLECT:
            gamma = reflect_gamma(standards, self.grid)
            s = np.zeros((len(self.grid), 2, 2), dtype=complex)
            s[:, 0, 0] = input_box.terminate(gamma)
            s[:, 1, 1] = output_box.flipped().terminate(gamma)
            raw = TwoPortNetwork(self.grid, s, name="REFLECT")
        else:
            element = {
                Standard.THRU: lambda: thru_standard(standards, self.grid),
                Standard.LINE: lambda: line_standard(standards, self.grid),
                Standard.DUT: lambda: dut.s_parameters(self.grid),
            }[selected]()
            raw = cascade(input_box, element, output_box)
            raw = TwoPortNetwork(self.grid, raw.s, name=selected.value)
        sigma = self.config.vna_noise_db
        if sigma > 0:
            # independent log-magnitude (dB) and log-phase perturbations of equal scale
            n = rng.standard_normal((len(self.grid), 2, 2, 2)) * sigma
            factor = np.exp((n[..., 0] + 1j * n[..., 1]) * LN10 / 20.0)
            raw = TwoPortNetwork(self.grid, raw.s * factor, name=raw.name)
        return raw

    def measure_standards(self) -> TrlStandardsMeasurement:
        thru = self.vna_measure(SwitchState.select(Standard.THRU))
        line = self.vna_measure(SwitchState.select(Standard.LINE))
        reflect = self.vna_measure(SwitchState.select(Standard.REFLECT))
        return TrlStandardsMeasurement.from_reflect_network(thru, line, reflect)

    def chain_temperature(self, source: Union[SourceState, str], dut: Optional[DutModel] = None) -> np.ndarray:
        """Noise temperature delivered to the analyzer input through the cryostat chain."""
        cfg = self.config
        l_c = from_db(self.input_loss_db.values)
        l_a = from_db(cfg.attenuator_db)
        l_out = from_db(self.output_loss_db.values)
        t1 = (self.source_temperature(source) + self.input_cable_noise.values) / l_c
        t2 = t1 / l_a + (1.0 - 1.0 / l_a) * cfg.attenuator_temperature_k
        if dut is None:
            t3 = t2
        else:
            g = from_db(dut.gain(self.grid).values)
            t3 = g * (t2 + dut.noise_temperature(self.grid).values)
        return (t3 + self.output_cable_noise.values) / l_out

    def sa_measure(self, source: Union[SourceState, str], path: Union[SaPath, str] = SaPath.CHAIN,
                   dut: Optional[DutModel] = None) -> ScalarTrace:
        if SaPath(path) is SaPath.DIRECT:
            if dut is not None:
                raise DomainError("the direct receiver path has no DUT")
            t_in = self.source_temperature(source)
        else:
            t_in = self.chain_temperature(source, dut)
        rng = self._rng()
        density = noise_density_dbm_per_hz(t_in + self.config.receiver_temperature_k, self.config.receiver_gain_db)
        sigma = self.config.sa_noise_db
        if sigma > 0:
            density = density + rng.standard_normal(len(self.grid)) * sigma
        return ScalarTrace(self.grid, density, Unit.DBM_PER_HZ)

    def power_sweep(self, dut: DutModel, frequency_hz: float, pin_dbm: np.ndarray) -> PowerSweep:
        """Swept-power capture at the instrument ports.

        `pin_dbm` are the intended DUT-plane input powers; the source is set
        to them plus the input-fixture loss, and the returned sweep holds the
        source settings and the received powers.
        """
        rng = self._rng()
        idx = self.grid.nearest_index(frequency_hz)
        input_box, output_box = self.error_boxes
        # at the nearest grid frequency
        l_in = -20.0 * np.log10(np.abs(input_box.s21[idx]))
        l_out = -20.0 * np.log10(np.abs(output_box.s21[idx]))
        gain = float(interpolate_knots(dut.gain_db, self.grid.points[idx:idx + 1])[0])
        pin = np.asarray(pin_dbm, dtype=float)
        pout = output_power_dbm(dut.compression, pin, gain) - l_out
        sigma = self.config.vna_noise_db
        if sigma > 0:
            pout = pout + rng.standard_normal(pin.size) * sigma
        return PowerSweep(float(self.grid.points[idx]), pin + l_in, pout)


def virtual_vna_measure(testbed: VirtualTestbed, state: SwitchState, dut: Optional[DutModel] = None) -> TwoPortNetwork:
    return testbed.vna_measure(state, dut)


def virtual_sa_measure(testbed: VirtualTestbed, source: Union[SourceState, str],
                       dut: Optional[DutModel] = None, path: Union[SaPath, str] = SaPath.CHAIN) -> ScalarTrace:
    return testbed.sa_measure(source, path, dut)


def virtual_power_sweep(testbed: VirtualTestbed, dut: DutModel, frequency_hz: float,
                        pin_range=(-80.0, -20.0), step_db: float = 0.5) -> PowerSweep:
    start, stop = pin_range
    count = int(round((stop - start) / step_db)) + 1
    return testbed.power_sweep(dut, frequency_hz, start + step_db * np.arange(count))
