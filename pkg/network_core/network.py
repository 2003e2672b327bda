"""
Frequency grids, scalar traces and two-port S-parameter networks.

All objects are immutable: arrays are copied on construction and marked
read-only. Cascading goes through transfer (T) parameters with the
convention

    T = 1/S21 * [[-(S11*S22 - S12*S21), S11],
                 [-S22,                 1  ]]

so that the T matrix of "a followed by b" is T_a @ T_b.
"""

import logging
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np

from .errors import DomainError, GridMismatchError, SingularNetworkError
from .units import DbKind, Unit, from_db, to_db

logger = logging.getLogger(__name__)

Z0_DEFAULT = 50.0
PASSIVITY_TOLERANCE = 1e-9


@dataclass(frozen=True, eq=False)
class FrequencyGrid:
    points: np.ndarray

    def __post_init__(self):
        pts = np.array(self.points, dtype=float).ravel()
        if pts.size < 2:
            raise DomainError("a frequency grid needs at least two points")
        if not np.all(np.isfinite(pts)) or np.any(pts <= 0):
            raise DomainError("grid frequencies must be finite and > 0 Hz")
        if np.any(np.diff(pts) <= 0):
            raise DomainError("grid frequencies must be strictly increasing")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    @classmethod
    def linspace(cls, start_hz: float, stop_hz: float, count: int) -> "FrequencyGrid":
        return cls(np.linspace(start_hz, stop_hz, count))

    def __len__(self) -> int:
        return self.points.size

    def __eq__(self, other) -> bool:
        if not isinstance(other, FrequencyGrid):
            return NotImplemented
        return self.points.shape == other.points.shape and bool(np.array_equal(self.points, other.points))

    __hash__ = object.__hash__

    @property
    def start(self) -> float:
        return float(self.points[0])

    @property
    def stop(self) -> float:
        return float(self.points[-1])

    def covers(self, f_low: float, f_high: float) -> bool:
        return self.start <= f_low and f_high <= self.stop

    def band_mask(self, f_low: float, f_high: float) -> np.ndarray:
        # relative slack so band edges given in GHz still hit grid points
        tol = 1e-9 * max(abs(f_low), abs(f_high))
        return (self.points >= f_low - tol) & (self.points <= f_high + tol)

    def nearest_index(self, frequency_hz: float) -> int:
        return int(np.argmin(np.abs(self.points - frequency_hz)))

    def require_same(self, other: "FrequencyGrid", what: str = "operands") -> None:
        if self != other:
            raise GridMismatchError(f"{what} are on different frequency grids; resample explicitly")

    def require_within(self, other: "FrequencyGrid") -> None:
        if other.start < self.start or other.stop > self.stop:
            raise DomainError(
                f"target grid [{other.start:.6g}, {other.stop:.6g}] Hz lies outside "
                f"[{self.start:.6g}, {self.stop:.6g}] Hz; extrapolation is not supported"
            )


@dataclass(frozen=True, eq=False)
class ScalarTrace:
    grid: FrequencyGrid
    values: np.ndarray
    unit: Unit = Unit.LINEAR

    def __post_init__(self):
        vals = np.array(self.values, dtype=float).ravel()
        if vals.size != len(self.grid):
            raise DomainError(f"trace has {vals.size} values for a {len(self.grid)}-point grid")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "unit", Unit(self.unit))

    @classmethod
    def constant(cls, grid: FrequencyGrid, value: float, unit: Unit = Unit.LINEAR) -> "ScalarTrace":
        return cls(grid, np.full(len(grid), float(value)), unit)

    def __len__(self) -> int:
        return self.values.size

    @property
    def frequencies(self) -> np.ndarray:
        return self.grid.points

    def with_values(self, values, unit: Optional[Unit] = None) -> "ScalarTrace":
        return ScalarTrace(self.grid, values, self.unit if unit is None else unit)

    def to_linear(self, kind: DbKind = DbKind.POWER) -> "ScalarTrace":
        if self.unit in (Unit.LINEAR, Unit.KELVIN):
            return self
        return ScalarTrace(self.grid, from_db(self.values, kind), Unit.LINEAR)

    def to_db(self, kind: DbKind = DbKind.POWER, unit: Unit = Unit.DB) -> "ScalarTrace":
        if self.unit in (Unit.DB, Unit.DBM, Unit.DBM_PER_HZ):
            return self
        if self.unit is Unit.KELVIN:
            raise DomainError("kelvin traces have no dB form")
        return ScalarTrace(self.grid, to_db(self.values, kind), unit)

    def band(self, f_low: float, f_high: float) -> "np.ndarray":
        return self.values[self.grid.band_mask(f_low, f_high)]

    def resample(self, grid: FrequencyGrid) -> "ScalarTrace":
        self.grid.require_within(grid)
        return ScalarTrace(grid, np.interp(grid.points, self.grid.points, self.values), self.unit)

    def _binary(self, other, op) -> "ScalarTrace":
        if isinstance(other, ScalarTrace):
            self.grid.require_same(other.grid, "traces")
            other = other.values
        return ScalarTrace(self.grid, op(self.values, other), self.unit)

    def __add__(self, other):
        return self._binary(other, np.add)

    def __sub__(self, other):
        return self._binary(other, np.subtract)

    def __mul__(self, other):
        return self._binary(other, np.multiply)

    __radd__ = __add__
    __rmul__ = __mul__


def s_to_t(s: np.ndarray, grid: Optional[FrequencyGrid] = None) -> np.ndarray:
    """(N,2,2) S to T. S21 == 0 raises SingularNetworkError."""
    s = np.asarray(s, dtype=complex)
    s21 = s[:, 1, 0]
    bad = np.flatnonzero(s21 == 0)
    if bad.size:
        f = None if grid is None else float(grid.points[bad[0]])
        raise SingularNetworkError("S21 = 0, transfer parameters undefined", f)
    det = s[:, 0, 0] * s[:, 1, 1] - s[:, 0, 1] * s[:, 1, 0]
    t = np.empty_like(s)
    t[:, 0, 0] = -det
    t[:, 0, 1] = s[:, 0, 0]
    t[:, 1, 0] = -s[:, 1, 1]
    t[:, 1, 1] = 1.0
    return t / s21[:, None, None]


def t_to_s(t: np.ndarray, grid: Optional[FrequencyGrid] = None) -> np.ndarray:
    t = np.asarray(t, dtype=complex)
    t22 = t[:, 1, 1]
    bad = np.flatnonzero(t22 == 0)
    if bad.size:
        f = None if grid is None else float(grid.points[bad[0]])
        raise SingularNetworkError("T22 = 0, scattering parameters undefined", f)
    det = t[:, 0, 0] * t[:, 1, 1] - t[:, 0, 1] * t[:, 1, 0]
    s = np.empty_like(t)
    s[:, 0, 0] = t[:, 0, 1]
    s[:, 0, 1] = det
    s[:, 1, 0] = 1.0
    s[:, 1, 1] = -t[:, 1, 0]
    return s / t22[:, None, None]


@dataclass(frozen=True, eq=False)
class TwoPortNetwork:
    grid: FrequencyGrid
    s: np.ndarray
    z0: float = Z0_DEFAULT
    passive: bool = False
    name: str = field(default="", compare=False)

    def __post_init__(self):
        s = np.array(self.s, dtype=complex)
        if s.shape != (len(self.grid), 2, 2):
            raise DomainError(f"S array must have shape ({len(self.grid)}, 2, 2), got {s.shape}")
        if not np.all(np.isfinite(s)):
            raise DomainError("S-parameters must be finite")
        if self.z0 != Z0_DEFAULT:
            raise DomainError("only 50 ohm reference impedance is supported")
        s.setflags(write=False)
        object.__setattr__(self, "s", s)
        if self.passive and not self.is_passive():
            raise DomainError("network flagged passive has a singular value above 1")

    @classmethod
    def from_parameters(cls, grid: FrequencyGrid, s11, s21, s12=None, s22=None, **kwargs) -> "TwoPortNetwork":
        n = len(grid)
        s = np.zeros((n, 2, 2), dtype=complex)
        s[:, 0, 0] = np.broadcast_to(s11, n)
        s[:, 1, 0] = np.broadcast_to(s21, n)
        s[:, 0, 1] = np.broadcast_to(s21 if s12 is None else s12, n)
        s[:, 1, 1] = np.broadcast_to(0.0 if s22 is None else s22, n)
        return cls(grid, s, **kwargs)

    @classmethod
    def from_t(cls, grid: FrequencyGrid, t: np.ndarray, **kwargs) -> "TwoPortNetwork":
        return cls(grid, t_to_s(t, grid), **kwargs)

    @property
    def s11(self) -> np.ndarray:
        return self.s[:, 0, 0]

    @property
    def s12(self) -> np.ndarray:
        return self.s[:, 0, 1]

    @property
    def s21(self) -> np.ndarray:
        return self.s[:, 1, 0]

    @property
    def s22(self) -> np.ndarray:
        return self.s[:, 1, 1]

    def t(self) -> np.ndarray:
        return s_to_t(self.s, self.grid)

    def is_passive(self, tolerance: float = PASSIVITY_TOLERANCE) -> bool:
        sv = np.linalg.svd(self.s, compute_uv=False)
        return bool(np.all(sv.max(axis=1) <= 1.0 + tolerance))

    def s_db(self, i: int, j: int) -> ScalarTrace:
        """|S_ij| in dB (20·log10), 1-based port indices."""
        mag = np.abs(self.s[:, i - 1, j - 1])
        return ScalarTrace(self.grid, to_db(mag, DbKind.AMPLITUDE), Unit.DB)

    def flipped(self) -> "TwoPortNetwork":
        return TwoPortNetwork(self.grid, self.s[:, ::-1, ::-1], passive=self.passive, name=self.name)

    def inverse(self) -> "TwoPortNetwork":
        """Network whose T matrix is the inverse of this one's."""
        t = self.t()
        det = t[:, 0, 0] * t[:, 1, 1] - t[:, 0, 1] * t[:, 1, 0]
        bad = np.flatnonzero(np.abs(det) == 0)
        if bad.size:
            raise SingularNetworkError("error box is not invertible", float(self.grid.points[bad[0]]))
        return TwoPortNetwork.from_t(self.grid, np.linalg.inv(t))

    def terminate(self, gamma_load) -> np.ndarray:
        """Reflection seen at port 1 with port 2 loaded by gamma_load."""
        g = np.broadcast_to(np.asarray(gamma_load, dtype=complex), (len(self.grid),))
        return self.s11 + self.s12 * self.s21 * g / (1.0 - self.s22 * g)

    def resample(self, grid: FrequencyGrid) -> "TwoPortNetwork":
        self.grid.require_within(grid)
        out = np.empty((len(grid), 2, 2), dtype=complex)
        for i in range(2):
            for j in range(2):
                entry = self.s[:, i, j]
                out[:, i, j] = (np.interp(grid.points, self.grid.points, entry.real)
                                + 1j * np.interp(grid.points, self.grid.points, entry.imag))
        return TwoPortNetwork(grid, out, name=self.name)

    def allclose(self, other: "TwoPortNetwork", atol: float = 1e-12) -> bool:
        return self.grid == other.grid and bool(np.allclose(self.s, other.s, rtol=0.0, atol=atol))


def cascade(*networks: TwoPortNetwork) -> TwoPortNetwork:
    """Chain networks in signal order: cascade(a, b) models a followed by b."""
    if len(networks) < 2:
        raise ValueError("cascade needs at least two networks")
    grid = networks[0].grid
    t = networks[0].t()
    for net in networks[1:]:
        grid.require_same(net.grid, "cascaded networks")
        t = t @ net.t()
    passive = all(n.passive for n in networks)
    s = t_to_s(t, grid)
    if passive and not TwoPortNetwork(grid, s).is_passive():
        # rounding can push a lossless chain a hair above 1
        passive = False
    return TwoPortNetwork(grid, s, passive=passive)


def ideal_thru(grid: FrequencyGrid) -> TwoPortNetwork:
    return TwoPortNetwork.from_parameters(grid, 0.0, 1.0, name="THRU")


def matched_line(grid: FrequencyGrid, transmission) -> TwoPortNetwork:
    """Reflectionless reciprocal two-port with the given complex transmission."""
    return TwoPortNetwork.from_parameters(grid, 0.0, transmission, passive=bool(np.all(np.abs(transmission) <= 1)))


def attenuator(grid: FrequencyGrid, loss_db: Union[float, Sequence[float], np.ndarray]) -> TwoPortNetwork:
    return matched_line(grid, from_db(-np.asarray(loss_db, dtype=float), DbKind.AMPLITUDE) * np.ones(len(grid)))
