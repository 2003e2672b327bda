"""
THRU-REFLECT-LINE solve (8-term, eigenvalue formulation), de-embedding and
calibration verification.

With T_A and T_B the transfer matrices of the port-1 and port-2 error boxes,
the standards read

    M_thru = T_A · T_B
    M_line = T_A · L · T_B,        L = diag(e^{-γl}, e^{+γl})

so M_line·M_thru⁻¹ = T_A·L·T_A⁻¹ and the columns of T_A are its
eigenvectors. Normalizing the first column by its top entry and the second
by its bottom entry leaves one unknown ratio c, which the two reflect
measurements fix up to a sign.

Root choice: the first column is the eigenvector of e^{-γl}, taken as the
eigenvalue of smaller magnitude (the LINE loses more than the THRU). When
the magnitudes tie, the LINE's phase track decides (see
_line_root_is_first).

Reflect sign: of the two roots ±Γ the one closer to -1 is kept, so the
REFLECT is assumed to be a SHORT-like standard.
"""

import logging
from dataclasses import dataclass
from enum import Enum

import numpy as np

from network_core import (
    DegenerateCalibrationError,
    ScalarTrace,
    TwoPortNetwork,
    cascade,
)

from .error_model import ErrorModel, ill_conditioned_mask, line_phase_deg

logger = logging.getLogger(__name__)

DEFAULT_VERIFY_TOLERANCE_DB = 0.05
_DEGENERACY_RTOL = 1e-9
_ROOT_TIE_LOG_RATIO = 1e-9


class ReflectKind(str, Enum):
    SHORT = "SHORT"


@dataclass(frozen=True, eq=False)
class TrlStandardsMeasurement:
    m_thru: TwoPortNetwork
    m_line: TwoPortNetwork
    m_reflect_p1: np.ndarray
    m_reflect_p2: np.ndarray
    reflect_kind: ReflectKind = ReflectKind.SHORT

    def __post_init__(self):
        self.m_thru.grid.require_same(self.m_line.grid, "THRU and LINE")
        n = len(self.m_thru.grid)
        for name in ("m_reflect_p1", "m_reflect_p2"):
            arr = np.array(getattr(self, name), dtype=complex).ravel()
            if arr.size != n:
                raise ValueError(f"{name} has {arr.size} points, grid has {n}")
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @classmethod
    def from_reflect_network(cls, m_thru, m_line, m_reflect: TwoPortNetwork) -> "TrlStandardsMeasurement":
        """Take the port reflections from a two-port REFLECT capture (S11, S22)."""
        m_thru.grid.require_same(m_reflect.grid, "THRU and REFLECT")
        return cls(m_thru, m_line, m_reflect.s11, m_reflect.s22)

    @property
    def grid(self):
        return self.m_thru.grid


def _sqrt_continuous(z: np.ndarray) -> np.ndarray:
    """Square root whose phase follows z continuously across the grid."""
    return np.sqrt(np.abs(z)) * np.exp(0.5j * np.unwrap(np.angle(z)))


def _line_root_is_first(eigvals: np.ndarray, frequencies: np.ndarray) -> np.ndarray:
    """
    True where eigenvalue 0 is e^{-γl}, the LINE's own transmission.

    A lossy LINE has |e^{-γl}| < 1 < |e^{+γl}|, so the smaller eigenvalue wins.
    Where the two magnitudes tie (lossless LINE) the root nearest the LINE's
    phase track is taken: a straight-line delay fit through the decided
    points, or, with fewer than two of those, phase continuity from a start
    on the negative-phase root (e^{-jωτ}, τ > 0).
    """
    log_ratio = np.log(np.abs(eigvals[:, 0])) - np.log(np.abs(eigvals[:, 1]))
    first = log_ratio < 0
    tie = np.abs(log_ratio) <= _ROOT_TIE_LOG_RATIO
    if not tie.any():
        return first

    decided = np.flatnonzero(~tie)
    if decided.size >= 2:
        chosen = np.where(first, eigvals[:, 0], eigvals[:, 1])[decided]
        slope, intercept = np.polyfit(frequencies[decided], np.unwrap(np.angle(chosen)), 1)
        track = np.exp(1j * (slope * frequencies + intercept))
        nearer = np.abs(np.angle(eigvals[:, 0] / track)) <= np.abs(np.angle(eigvals[:, 1] / track))
        return np.where(tie, nearer, first)

    previous = None
    for i in range(len(first)):
        if tie[i] and previous is None:
            first[i] = np.angle(eigvals[i, 0]) <= np.angle(eigvals[i, 1])
        elif tie[i]:
            first[i] = abs(np.angle(eigvals[i, 0] / previous)) <= abs(np.angle(eigvals[i, 1] / previous))
        previous = eigvals[i, 0] if first[i] else eigvals[i, 1]
    return first


def solve_trl(meas: TrlStandardsMeasurement) -> ErrorModel:
    grid = meas.grid
    t_thru = meas.m_thru.t()
    t_line = meas.m_line.t()

    eigvals, eigvecs = np.linalg.eig(t_line @ np.linalg.inv(t_thru))
    separation = np.abs(eigvals[:, 0] - eigvals[:, 1])
    scale = np.maximum(np.abs(eigvals[:, 0]), np.abs(eigvals[:, 1]))
    degenerate = np.flatnonzero(separation <= _DEGENERACY_RTOL * scale)
    if degenerate.size:
        raise DegenerateCalibrationError("LINE and THRU are indistinguishable (degenerate eigenvalues)",
                                         float(grid.points[degenerate[0]]))

    va, vb = eigvecs[:, :, 0], eigvecs[:, :, 1]
    # the first column of T_A belongs to e^{-γl}, the second to e^{+γl}
    first = _line_root_is_first(eigvals, grid.points)
    col1 = np.where(first[:, None], va, vb)
    col2 = np.where(first[:, None], vb, va)
    lam1 = np.where(first, eigvals[:, 0], eigvals[:, 1])

    q1 = col1[:, 1] / col1[:, 0]
    r2 = col2[:, 0] / col2[:, 1]

    g1 = meas.m_reflect_p1
    g2 = meas.m_reflect_p2
    # c·Γ from port 1 and Γ/c from port 2
    w1 = (r2 - g1) / (g1 * q1 - 1.0)

    det_v = 1.0 - r2 * q1
    v_inv = np.empty_like(t_thru)
    v_inv[:, 0, 0] = 1.0
    v_inv[:, 0, 1] = -r2
    v_inv[:, 1, 0] = -q1
    v_inv[:, 1, 1] = 1.0
    v_inv /= det_v[:, None, None]
    w = v_inv @ t_thru
    w2 = (w[:, 1, 0] + g2 * w[:, 1, 1]) / (w[:, 0, 0] + g2 * w[:, 0, 1])

    gamma = np.sqrt(w1 * w2)
    gamma = np.where(np.abs(gamma + 1.0) <= np.abs(gamma - 1.0), gamma, -gamma)
    c = w1 / gamma

    t_a = np.empty_like(t_thru)
    t_a[:, 0, 0] = c
    t_a[:, 0, 1] = r2
    t_a[:, 1, 0] = q1 * c
    t_a[:, 1, 1] = 1.0
    # split the transmission so the port-1 box is reciprocal (det T = 1)
    det_a = t_a[:, 0, 0] * t_a[:, 1, 1] - t_a[:, 0, 1] * t_a[:, 1, 0]
    t_a = t_a / _sqrt_continuous(det_a)[:, None, None]
    t_b = np.linalg.inv(t_a) @ t_thru

    model = ErrorModel(
        input_box=TwoPortNetwork.from_t(grid, t_a, name="port1 error box"),
        output_box=TwoPortNetwork.from_t(grid, t_b, name="port2 error box"),
        line_transmission=lam1,
        reflect_estimate=gamma,
    )

    flagged = ill_conditioned_mask(line_phase_deg(lam1))
    if np.any(flagged):
        logger.warning(
            f"TRL LINE phase within 20 deg of 0/180 at {int(flagged.sum())} of {len(grid)} points "
            f"(first at {grid.points[flagged][0]:.6g} Hz); correction there is ill-conditioned"
        )
    logger.info(f"TRL solved on {len(grid)} points, {grid.start:.4g}-{grid.stop:.4g} Hz")
    return model


def deembed(em: ErrorModel, raw: TwoPortNetwork) -> TwoPortNetwork:
    em.grid.require_same(raw.grid, "error model and raw measurement")
    corrected = cascade(em.input_box.inverse(), raw, em.output_box.inverse())
    return TwoPortNetwork(corrected.grid, corrected.s, name=raw.name)


@dataclass(frozen=True, eq=False)
class VerificationResult:
    residual: ScalarTrace
    tolerance_db: float

    @property
    def max_abs_residual_db(self) -> float:
        return float(np.max(np.abs(self.residual.values)))

    @property
    def passed(self) -> bool:
        return self.max_abs_residual_db <= self.tolerance_db


def verify_cal(em: ErrorModel, m_thru: TwoPortNetwork,
               tolerance_db: float = DEFAULT_VERIFY_TOLERANCE_DB) -> VerificationResult:
    """Re-measured THRU through the correction: |S21| should read 0 dB."""
    residual = deembed(em, m_thru).s_db(2, 1)
    result = VerificationResult(residual, tolerance_db)
    if result.passed:
        logger.info(f"Calibration verified, max THRU residual {result.max_abs_residual_db:.4f} dB")
    else:
        logger.warning(
            f"Calibration verification failed: max THRU residual {result.max_abs_residual_db:.4f} dB "
            f"> {tolerance_db} dB"
        )
    return result
