"""
Known-truth quantities of a scenario: the chain's operating point at one
frequency and the reference metrics a Phase 1 control run is judged against.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional


from lna_metrics import P1dbResult, PowerSweep, extract_p1db, gain_at, gain_flatness, peak_gain
from network_core import ScalarTrace, from_db
from uncertainty_budget import OperatingPoint

from .amplifier import output_power_dbm
from .instruments import SourceState, VirtualTestbed
from .scenario import Scenario

logger = logging.getLogger(__name__)


def operating_point(scenario: Scenario, frequency_hz: float, testbed: Optional[VirtualTestbed] = None) -> OperatingPoint:
    """Noise-free chain values and Y at the grid point nearest `frequency_hz`."""
    testbed = testbed or VirtualTestbed(scenario)
    cfg = scenario.testbed
    idx = testbed.grid.nearest_index(frequency_hz)
    l_c = float(from_db(testbed.input_loss_db.values[idx]))
    l_a = float(from_db(cfg.attenuator_db))
    l_out = float(from_db(testbed.output_loss_db.values[idx]))
    t_e_in = float(testbed.input_cable_noise.values[idx])
    t_cable = t_e_in / (l_c - 1.0) if l_c > 1.0 else 0.0
    t_a = cfg.attenuator_temperature_k
    t_hot = float(testbed.source_temperature(SourceState.HOT)[idx])
    t_cold = float(testbed.source_temperature(SourceState.COLD)[idx])
    g = float(from_db(scenario.dut.gain(testbed.grid).values[idx]))
    t_n = float(scenario.dut.noise_temperature(testbed.grid).values[idx])
    t2 = float(testbed.output_cable_noise.values[idx]) + l_out * cfg.receiver_temperature_k

    def t_in(t_s):
        return t_s / (l_a * l_c) + (1.0 - 1.0 / l_c) * t_cable / l_a + (1.0 - 1.0 / l_a) * t_a

    y = (t_in(t_hot) + t_n + t2 / g) / (t_in(t_cold) + t_n + t2 / g)
    return OperatingPoint(
        y=y, t_hot=t_hot, t_cold=t_cold, l_a=l_a, l_cable=l_c, t_cable=t_cable, t_a=t_a,
        g_dut=g, t_second_stage=t2, frequency_hz=float(testbed.grid.points[idx]),
    )


@dataclass(frozen=True, eq=False)
class ReferenceExpectations:
    gain_db: ScalarTrace
    s11_db: ScalarTrace
    s22_db: ScalarTrace
    s12_db: ScalarTrace
    noise_temperature: ScalarTrace
    flatness_db: float
    peak_gain_db: float
    midband_gain_db: float
    p1db: List[P1dbResult] = field(default_factory=list)

    def op1db_by_frequency(self) -> Dict[float, Optional[float]]:
        return {r.frequency_hz: r.op1db_dbm for r in self.p1db}


def reference_expectations(scenario: Scenario) -> ReferenceExpectations:
    """Truth metrics computed with the same band and sweep settings as a measurement."""
    testbed = VirtualTestbed(scenario)
    grid = testbed.grid
    dut = scenario.dut
    s = dut.s_parameters(grid)
    gain = s.s_db(2, 1)
    band = scenario.band
    pin = scenario.sweep.pin_grid()
    p1db = []
    for f_ghz in scenario.sweep.frequencies_ghz:
        idx = grid.nearest_index(f_ghz * 1e9)
        pout = output_power_dbm(dut.compression, pin, gain.values[idx])
        sweep = PowerSweep(float(grid.points[idx]), pin, pout)
        p1db.append(extract_p1db(sweep, tuple(scenario.sweep.fit_window)))
    return ReferenceExpectations(
        gain_db=gain,
        s11_db=s.s_db(1, 1),
        s22_db=s.s_db(2, 2),
        s12_db=s.s_db(1, 2),
        noise_temperature=dut.noise_temperature(grid),
        flatness_db=gain_flatness(gain, band),
        peak_gain_db=peak_gain(gain, band),
        midband_gain_db=gain_at(gain, 0.5 * (band.f_low_hz + band.f_high_hz)),
        p1db=p1db,
    )
