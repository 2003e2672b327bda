"""
Fixture networks of the virtual cryostat: coax runs, cold attenuator,
switched TRL standards and the optional standing-wave ripple.
"""

import logging
from typing import Tuple

import numpy as np

from network_core import (
    DbKind,
    FrequencyGrid,
    ScalarTrace,
    TwoPortNetwork,
    Unit,
    attenuator,
    cascade,
    from_db,
    gamma_from_vswr,
    ideal_thru,
    matched_line,
)
from thermal_model import CableSection, CableThermalSpec, load_material

from .scenario import CablePathConfig, EtalonConfig, StandardsConfig, TestbedConfig

logger = logging.getLogger(__name__)


def cable_thermal_spec(path: CablePathConfig, grid: FrequencyGrid) -> CableThermalSpec:
    sections = [
        CableSection(
            material=load_material(s.material),
            length_m=s.length_m,
            t_hot_k=s.t_hot_k,
            t_cold_k=s.t_cold_k,
            loss=s.loss_trace(grid),
            cold_end_first=path.cold_end_first,
            name=s.name,
        )
        for s in path.sections
    ]
    return CableThermalSpec(sections, path.elements_per_section, path.weighting)


def path_loss_db(path: CablePathConfig, grid: FrequencyGrid) -> ScalarTrace:
    total = sum(s.loss_trace(grid).values for s in path.sections)
    return ScalarTrace(grid, total, Unit.DB)


def cable_network(path: CablePathConfig, grid: FrequencyGrid) -> TwoPortNetwork:
    loss = path_loss_db(path, grid).values
    transmission = from_db(-loss, DbKind.AMPLITUDE) * np.exp(-2j * np.pi * grid.points * path.delay_ns * 1e-9)
    return matched_line(grid, transmission)


def etalon_factor(etalon: EtalonConfig, grid: FrequencyGrid) -> np.ndarray:
    if not etalon.enabled:
        return np.ones(len(grid))
    ripple_db = etalon.amplitude_db * np.sin(2.0 * np.pi * grid.points / etalon.period_hz)
    return from_db(ripple_db, DbKind.AMPLITUDE)


def vna_error_boxes(cfg: TestbedConfig, grid: FrequencyGrid) -> Tuple[TwoPortNetwork, TwoPortNetwork]:
    """Port-1 box (input run + cold attenuator) and port-2 box (output run)."""
    input_run = cable_network(cfg.input_path, grid)
    if cfg.etalon.enabled:
        ripple = etalon_factor(cfg.etalon, grid)
        s = input_run.s.copy()
        s[:, 1, 0] *= ripple
        s[:, 0, 1] *= ripple
        input_run = TwoPortNetwork(grid, s, name="input run")
    input_box = cascade(input_run, attenuator(grid, cfg.attenuator_db))
    output_box = cable_network(cfg.output_path, grid)
    return input_box, output_box


def thru_standard(standards: StandardsConfig, grid: FrequencyGrid) -> TwoPortNetwork:
    if standards.thru_vswr == 1.0:
        return ideal_thru(grid)
    gamma = gamma_from_vswr(standards.thru_vswr)
    # lossless but mismatched
    return TwoPortNetwork.from_parameters(grid, gamma, np.sqrt(1.0 - gamma ** 2), s22=-gamma, name="THRU")


def line_transmission(standards: StandardsConfig, grid: FrequencyGrid) -> np.ndarray:
    loss_db = standards.line_loss_db * np.sqrt(grid.points / (standards.reference_ghz * 1e9))
    phase = -2.0 * np.pi * grid.points * standards.line_delay_ps * 1e-12
    return from_db(-loss_db, DbKind.AMPLITUDE) * np.exp(1j * phase)


def line_standard(standards: StandardsConfig, grid: FrequencyGrid) -> TwoPortNetwork:
    return TwoPortNetwork(grid, matched_line(grid, line_transmission(standards, grid)).s, passive=True, name="LINE")


def reflect_gamma(standards: StandardsConfig, grid: FrequencyGrid) -> np.ndarray:
    # SHORT
    return -standards.reflect_magnitude * np.ones(len(grid), dtype=complex)
