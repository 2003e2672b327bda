"""
Distributed thermal-noise model of cryostat coax runs.

Each cable section is cut into elements, each element gets a steady-state
conduction temperature and a share of the section's insertion loss, and the
whole run is cascaded as a chain of passive attenuators.
"""

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import List, Optional, Sequence, Union

import numpy as np

from network_core import DomainError, FrequencyGrid, ScalarTrace, Unit

from .materials import MaterialProperties

logger = logging.getLogger(__name__)

DEFAULT_ELEMENTS_PER_SECTION = 1000


class LossWeighting(str, Enum):
    SQRT_RHO = "sqrt_rho"
    UNIFORM = "uniform"


class Referred(str, Enum):
    INPUT = "input"
    OUTPUT = "output"


@dataclass(frozen=True, eq=False)
class CableSection:
    material: MaterialProperties
    length_m: float
    t_hot_k: float
    t_cold_k: float
    loss: ScalarTrace
    # signal enters at the cold end (output runs)
    cold_end_first: bool = False
    name: str = ""

    def __post_init__(self):
        if self.length_m <= 0:
            raise DomainError(f"section {self.name!r}: length must be > 0")
        if self.t_hot_k < self.t_cold_k:
            raise DomainError(f"section {self.name!r}: hot-end temperature below cold-end temperature")
        if self.loss.unit is not Unit.DB:
            raise DomainError(f"section {self.name!r}: loss trace must be in dB")
        if np.any(self.loss.values < 0):
            raise DomainError(f"section {self.name!r}: insertion loss must be >= 0 dB")
        self.material.check_range([self.t_cold_k, self.t_hot_k])

    def loss_db_at(self, frequencies: Optional[np.ndarray] = None) -> np.ndarray:
        if frequencies is None:
            return self.loss.values
        f = np.asarray(frequencies, dtype=float)
        grid = self.loss.grid
        if np.any(f < grid.start) or np.any(f > grid.stop):
            raise DomainError(f"section {self.name!r}: loss requested outside its frequency grid")
        return np.interp(f, grid.points, self.loss.values)


@dataclass(frozen=True, eq=False)
class CableThermalSpec:
    sections: Sequence[CableSection]
    elements_per_section: int = DEFAULT_ELEMENTS_PER_SECTION
    weighting: LossWeighting = LossWeighting.SQRT_RHO

    def __post_init__(self):
        if not self.sections:
            raise DomainError("a cable spec needs at least one section")
        if self.elements_per_section < 1:
            raise DomainError("elements_per_section must be >= 1")
        object.__setattr__(self, "sections", tuple(self.sections))

    @property
    def element_count(self) -> int:
        return self.elements_per_section * len(self.sections)

    def total_loss_db(self, frequencies: Optional[np.ndarray] = None) -> np.ndarray:
        return sum(s.loss_db_at(frequencies) for s in self.sections)


@dataclass(frozen=True, eq=False)
class ThermalProfile:
    grid: FrequencyGrid
    temperatures: np.ndarray  # (elements,) K, signal order
    losses: np.ndarray  # (frequencies, elements) linear power loss >= 1

    def __post_init__(self):
        temps = np.array(self.temperatures, dtype=float).ravel()
        losses = np.array(self.losses, dtype=float)
        if losses.shape != (len(self.grid), temps.size):
            raise DomainError(f"losses shape {losses.shape} does not match grid x elements")
        temps.setflags(write=False)
        losses.setflags(write=False)
        object.__setattr__(self, "temperatures", temps)
        object.__setattr__(self, "losses", losses)

    @property
    def total_loss(self) -> ScalarTrace:
        return ScalarTrace(self.grid, np.prod(self.losses, axis=1), Unit.LINEAR)

    def concatenate(self, other: "ThermalProfile") -> "ThermalProfile":
        self.grid.require_same(other.grid, "profiles")
        return ThermalProfile(
            self.grid,
            np.concatenate([self.temperatures, other.temperatures]),
            np.concatenate([self.losses, other.losses], axis=1),
        )


def temperature_at(section: CableSection, fraction) -> np.ndarray:
    """Temperature at fractional positions from the hot end (0) to the cold end (1)."""
    x = np.asarray(fraction, dtype=float)
    if np.any(x < 0) or np.any(x > 1):
        raise DomainError("position fraction must lie in [0, 1]")
    mat = section.material
    theta_hot = mat.conductivity_integral(section.t_hot_k)
    theta_cold = mat.conductivity_integral(section.t_cold_k)
    # constant heat flux: Θ is affine in position
    t = mat.inverse_conductivity_integral(theta_hot + x * (theta_cold - theta_hot))
    t = np.clip(t, section.t_cold_k, section.t_hot_k)
    t = np.where(x == 0, section.t_hot_k, t)
    return np.where(x == 1, section.t_cold_k, t)


def temperature_profile(section: CableSection, n: int = DEFAULT_ELEMENTS_PER_SECTION) -> np.ndarray:
    """Element midpoint temperatures in signal order."""
    if n < 1:
        raise DomainError("n must be >= 1")
    midpoints = (np.arange(n) + 0.5) / n
    temps = temperature_at(section, midpoints)
    return temps[::-1].copy() if section.cold_end_first else temps


def distribute_loss(section: CableSection, temperatures: np.ndarray,
                    frequencies: Optional[np.ndarray] = None,
                    weighting: Union[LossWeighting, str] = LossWeighting.SQRT_RHO) -> np.ndarray:
    """Per-element linear losses, shape (frequencies, elements).

    Element dB loss follows sqrt(rho(T_i)) (surface resistance) or is uniform;
    either way the element dB values add up to the section total.
    """
    temps = np.asarray(temperatures, dtype=float)
    if LossWeighting(weighting) is LossWeighting.SQRT_RHO:
        weights = np.sqrt(section.material.rho(temps))
    else:
        weights = np.ones_like(temps)
    weights = weights / weights.sum()
    total_db = np.atleast_1d(section.loss_db_at(frequencies))
    return np.power(10.0, total_db[:, None] * weights[None, :] / 10.0)


def build_profile(spec: CableThermalSpec, grid: Optional[FrequencyGrid] = None) -> ThermalProfile:
    grid = grid or spec.sections[0].loss.grid
    temps: List[np.ndarray] = []
    losses: List[np.ndarray] = []
    for section in spec.sections:
        t = temperature_profile(section, spec.elements_per_section)
        temps.append(t)
        losses.append(distribute_loss(section, t, grid.points, spec.weighting))
    profile = ThermalProfile(grid, np.concatenate(temps), np.concatenate(losses, axis=1))
    logger.debug(f"Built thermal profile: {spec.element_count} elements x {len(grid)} frequencies")
    return profile


def integrated_cable_noise(profile: ThermalProfile,
                           referred: Union[Referred, str] = Referred.INPUT) -> ScalarTrace:
    """Effective noise temperature of the element cascade.

    Input-referred: T_eff = Σ (l_i − 1)·T_i·Π_{j<i} l_j, elements from the input.
    Output-referred is the same quantity divided by the total loss.
    """
    l = profile.losses
    if np.any(l < 1.0):
        raise DomainError("element loss below 1: an active element in a passive cable")
    prefix = np.ones_like(l)
    prefix[:, 1:] = np.cumprod(l[:, :-1], axis=1)
    t_in = np.sum((l - 1.0) * profile.temperatures[None, :] * prefix, axis=1)
    if Referred(referred) is Referred.OUTPUT:
        t_in = t_in / np.prod(l, axis=1)
    return ScalarTrace(profile.grid, t_in, Unit.KELVIN)


def effective_temperature(profile: ThermalProfile) -> ScalarTrace:
    """Per-frequency lumped temperature T_eff/(L − 1); NaN where the run is lossless."""
    t_eff = integrated_cable_noise(profile).values
    excess = profile.total_loss.values - 1.0
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.where(excess > 0, t_eff / excess, np.nan)
    return ScalarTrace(profile.grid, t, Unit.KELVIN)


def fit_lumped_temperature(t_eff: ScalarTrace, l_cable: ScalarTrace) -> float:
    """Least-squares T_cable with T_eff(f) ≈ (L(f) − 1)·T_cable."""
    t_eff.grid.require_same(l_cable.grid, "T_eff and cable loss")
    excess = l_cable.values - 1.0
    denominator = float(np.sum(excess ** 2))
    if denominator == 0.0:
        raise DomainError("cable is lossless at every frequency, lumped temperature is undefined")
    return float(np.sum(excess * t_eff.values) / denominator)


def t_loss(l_cable, t_cable, l_a, t_a):
    """Single equivalent temperature of cable loss followed by attenuator loss."""
    l_cable = np.asarray(l_cable, dtype=float)
    l_a = np.asarray(l_a, dtype=float)
    if np.any(l_cable < 1) or np.any(l_a < 1):
        raise DomainError("losses must be >= 1 (linear)")
    denominator = l_a * l_cable - 1.0
    if np.any(denominator == 0):
        raise DomainError("combined loss is 1, T_Loss is undefined")
    out = ((l_cable - 1.0) * np.asarray(t_cable, dtype=float)
           + l_cable * (l_a - 1.0) * np.asarray(t_a, dtype=float)) / denominator
    return float(out) if np.ndim(out) == 0 else out
