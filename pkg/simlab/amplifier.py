"""
Large-signal transfer curves of the synthetic DUT.

Rapp in power form: P_out = G·P / (1 + (G·P/P_sat)^p)^(1/p), p the smoothness.
As p grows it approaches the hard limiter min(P_in + G, P_sat).
"""

from typing import Tuple

import numpy as np

from network_core import DomainError

from .scenario import CompressionConfig, CompressionKind


def output_power_dbm(compression: CompressionConfig, pin_dbm, gain_db) -> np.ndarray:
    linear_out = np.asarray(pin_dbm, dtype=float) + np.asarray(gain_db, dtype=float)
    kind = CompressionKind(compression.model)
    if kind is CompressionKind.NONE:
        return linear_out
    if kind is CompressionKind.HARD:
        return np.minimum(linear_out, compression.psat_dbm)
    p = compression.smoothness
    # ratio G·P/P_sat in dB, kept in log form to avoid overflow for large p
    r_db = linear_out - compression.psat_dbm
    return linear_out - 10.0 / p * np.logaddexp(0.0, p * r_db * np.log(10.0) / 10.0) / np.log(10.0)


def rapp_op1db_dbm(psat_dbm: float, smoothness: float) -> float:
    """Closed-form OP1dB of the Rapp curve."""
    if smoothness <= 0:
        raise DomainError("smoothness must be > 0")
    x = (10.0 ** (0.1 * smoothness) - 1.0) ** (1.0 / smoothness)
    return float(psat_dbm + 10.0 * np.log10(x) - 1.0)


def hard_limiter_p1db(psat_dbm: float, gain_db: float) -> Tuple[float, float]:
    """(IP1dB, OP1dB) of min(P_in + G, P_sat)."""
    return psat_dbm + 1.0 - gain_db, psat_dbm
