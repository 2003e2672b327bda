"""
dB conventions and small RF unit helpers.

S-parameter magnitudes are amplitude quantities (20·log10), noise powers and
gains expressed as power ratios use 10·log10.
"""

from enum import Enum
from typing import Union

import numpy as np
from scipy import constants

from .errors import DomainError

ArrayLike = Union[float, np.ndarray]

BOLTZMANN = constants.k
T0_KELVIN = 290.0


class Unit(str, Enum):
    DB = "dB"
    DBM = "dBm"
    DBM_PER_HZ = "dBm_per_Hz"
    KELVIN = "kelvin"
    DEGREES = "degrees"
    LINEAR = "linear"


class DbKind(str, Enum):
    POWER = "power"
    AMPLITUDE = "amplitude"


def _factor(kind: Union[DbKind, str]) -> float:
    return 10.0 if DbKind(kind) is DbKind.POWER else 20.0


def to_db(value: ArrayLike, kind: Union[DbKind, str] = DbKind.POWER) -> ArrayLike:
    """Linear ratio to dB. Non-positive input raises DomainError."""
    arr = np.asarray(value, dtype=float)
    if np.any(~(arr > 0)):
        raise DomainError("dB conversion needs a strictly positive linear value")
    out = _factor(kind) * np.log10(arr)
    return float(out) if np.ndim(out) == 0 else out


def from_db(value_db: ArrayLike, kind: Union[DbKind, str] = DbKind.POWER) -> ArrayLike:
    out = np.power(10.0, np.asarray(value_db, dtype=float) / _factor(kind))
    return float(out) if np.ndim(out) == 0 else out


def dbm_to_watts(p_dbm: ArrayLike) -> ArrayLike:
    return from_db(p_dbm) * 1e-3


def watts_to_dbm(p_w: ArrayLike) -> ArrayLike:
    return to_db(np.asarray(p_w, dtype=float) * 1e3)


def noise_density_dbm_per_hz(temperature_k: ArrayLike, gain_db: ArrayLike = 0.0) -> ArrayLike:
    """k_B·T·G expressed in dBm/Hz."""
    return watts_to_dbm(BOLTZMANN * np.asarray(temperature_k, dtype=float)) + gain_db


def return_loss_db(gamma: ArrayLike) -> ArrayLike:
    """Return loss as a positive number of dB."""
    return -to_db(np.abs(gamma), DbKind.AMPLITUDE)


def vswr_from_gamma(gamma: ArrayLike) -> ArrayLike:
    mag = np.abs(np.asarray(gamma))
    if np.any(mag >= 1):
        raise DomainError("VSWR is undefined for |gamma| >= 1")
    out = (1 + mag) / (1 - mag)
    return float(out) if np.ndim(out) == 0 else out


def gamma_from_vswr(vswr: ArrayLike) -> ArrayLike:
    v = np.asarray(vswr, dtype=float)
    if np.any(v < 1):
        raise DomainError("VSWR must be >= 1")
    out = (v - 1) / (v + 1)
    return float(out) if np.ndim(out) == 0 else out
