"""
8-term error model produced by a TRL solve, with JSON persistence
"""

import json
import logging
from dataclasses import dataclass
from datetime import datetime
from pathlib import Path
from typing import Any, Dict, List, Union

import numpy as np

from network_core import FrequencyGrid, TwoPortNetwork, cascade, ideal_thru

logger = logging.getLogger(__name__)

ILL_CONDITIONED_MARGIN_DEG = 20.0
_ORDER = ((0, 0), (1, 0), (0, 1), (1, 1))


def _pairs(z: np.ndarray) -> List[List[float]]:
    return [[float(v.real), float(v.imag)] for v in np.ravel(z)]


def _complex(pairs) -> np.ndarray:
    arr = np.asarray(pairs, dtype=float)
    return arr[..., 0] + 1j * arr[..., 1]


def line_phase_deg(line_transmission: np.ndarray) -> np.ndarray:
    """Electrical phase of the LINE folded into [0, 180) degrees."""
    return np.mod(np.degrees(-np.angle(line_transmission)), 180.0)


def ill_conditioned_mask(phase_deg: np.ndarray, margin_deg: float = ILL_CONDITIONED_MARGIN_DEG) -> np.ndarray:
    return np.minimum(phase_deg, 180.0 - phase_deg) < margin_deg


@dataclass(frozen=True, eq=False)
class ErrorModel:
    input_box: TwoPortNetwork
    output_box: TwoPortNetwork
    line_transmission: np.ndarray
    reflect_estimate: np.ndarray

    def __post_init__(self):
        self.input_box.grid.require_same(self.output_box.grid, "error boxes")
        for box in (self.input_box, self.output_box):
            if np.any(box.s21 == 0):
                raise ValueError("error-box S21 must be nonzero at every frequency")
        for name in ("line_transmission", "reflect_estimate"):
            arr = np.array(getattr(self, name), dtype=complex)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @classmethod
    def identity(cls, grid: FrequencyGrid, line_transmission=None) -> "ErrorModel":
        if line_transmission is None:
            line_transmission = np.exp(-0.5j * np.pi) * np.ones(len(grid))
        return cls(ideal_thru(grid), ideal_thru(grid), line_transmission, -np.ones(len(grid), dtype=complex))

    @property
    def grid(self) -> FrequencyGrid:
        return self.input_box.grid

    @property
    def gamma_l(self) -> np.ndarray:
        """Propagation constant times length, gamma*l = -ln(e^{-gamma l})."""
        return -np.log(self.line_transmission)

    @property
    def line_phase_deg(self) -> np.ndarray:
        return line_phase_deg(self.line_transmission)

    @property
    def ill_conditioned(self) -> np.ndarray:
        return ill_conditioned_mask(self.line_phase_deg)

    @property
    def ill_conditioned_frequencies(self) -> List[float]:
        return [float(f) for f in self.grid.points[self.ill_conditioned]]

    def embed(self, dut: TwoPortNetwork) -> TwoPortNetwork:
        """Forward model: what the VNA sees with ``dut`` between the error boxes."""
        return cascade(self.input_box, dut, self.output_box)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "schema": 1,
            "created_at": datetime.now().isoformat(),
            "frequency_hz": [float(f) for f in self.grid.points],
            "input_box": [_pairs(self.input_box.s[:, i, j]) for i, j in _ORDER],
            "output_box": [_pairs(self.output_box.s[:, i, j]) for i, j in _ORDER],
            "line_transmission": _pairs(self.line_transmission),
            "reflect_estimate": _pairs(self.reflect_estimate),
            "line_phase_deg": [float(p) for p in self.line_phase_deg],
            "ill_conditioned_hz": self.ill_conditioned_frequencies,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "ErrorModel":
        grid = FrequencyGrid(np.asarray(data["frequency_hz"], dtype=float))

        def box(entries) -> TwoPortNetwork:
            s = np.empty((len(grid), 2, 2), dtype=complex)
            for (i, j), pairs in zip(_ORDER, entries):
                s[:, i, j] = _complex(pairs)
            return TwoPortNetwork(grid, s)

        return cls(
            input_box=box(data["input_box"]),
            output_box=box(data["output_box"]),
            line_transmission=_complex(data["line_transmission"]),
            reflect_estimate=_complex(data["reflect_estimate"]),
        )

    def save(self, path: Union[str, Path]) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8") as f:
            json.dump(self.to_dict(), f, indent=2, ensure_ascii=False)
        logger.info(f"Error model saved to {path}")
        return path

    @classmethod
    def load(cls, path: Union[str, Path]) -> "ErrorModel":
        with open(path, "r", encoding="utf-8") as f:
            return cls.from_dict(json.load(f))
