"""
Temperature-dependent material properties for coaxial cable conductors.

Tables are interpolated log-log linearly, so between two table points
k(T) = k_i·(T/T_i)^m. The conductivity integral Θ(T) = ∫k dT and its
inverse are evaluated in closed form on each such segment.
"""

import csv
import logging
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path
from typing import Union

import numpy as np

from network_core import MaterialRangeError

logger = logging.getLogger(__name__)

DATA_DIR = Path(__file__).parent / "data"
BUNDLED_MATERIALS = {
    "cu_rrr100": "cu_rrr100.csv",
    "becu": "becu.csv",
}
_LOG_EPS = 1e-12


@dataclass(frozen=True, eq=False)
class MaterialProperties:
    name: str
    temperature_k: np.ndarray
    conductivity: np.ndarray
    resistivity: np.ndarray

    def __post_init__(self):
        arrays = []
        for field_name in ("temperature_k", "conductivity", "resistivity"):
            arr = np.array(getattr(self, field_name), dtype=float).ravel()
            arr.setflags(write=False)
            object.__setattr__(self, field_name, arr)
            arrays.append(arr)
        t, k, rho = arrays
        if not (t.size == k.size == rho.size) or t.size < 2:
            raise ValueError(f"{self.name}: property columns must have equal length >= 2")
        if np.any(t <= 0) or np.any(np.diff(t) <= 0):
            raise ValueError(f"{self.name}: temperatures must be positive and strictly increasing")
        if np.any(k <= 0) or np.any(rho <= 0):
            raise ValueError(f"{self.name}: k(T) and rho(T) must be positive")
        log_t = np.log(t)
        exponents = np.diff(np.log(k)) / np.diff(log_t)
        exponents.setflags(write=False)
        object.__setattr__(self, "_exponents", exponents)
        seg = self._segment_integral(np.arange(t.size - 1), t[1:])
        theta_nodes = np.concatenate([[0.0], np.cumsum(seg)])
        theta_nodes.setflags(write=False)
        object.__setattr__(self, "_theta_nodes", theta_nodes)

    @property
    def t_min(self) -> float:
        return float(self.temperature_k[0])

    @property
    def t_max(self) -> float:
        return float(self.temperature_k[-1])

    def check_range(self, temperature_k) -> None:
        t = np.asarray(temperature_k, dtype=float)
        if np.any(t < self.t_min) or np.any(t > self.t_max):
            raise MaterialRangeError(
                f"{self.name}: temperature outside table range [{self.t_min}, {self.t_max}] K"
            )

    def _segment(self, t: np.ndarray) -> np.ndarray:
        idx = np.searchsorted(self.temperature_k, t, side="right") - 1
        return np.clip(idx, 0, self.temperature_k.size - 2)

    def _interp_loglog(self, t, table: np.ndarray) -> np.ndarray:
        self.check_range(t)
        t = np.asarray(t, dtype=float)
        return np.exp(np.interp(np.log(t), np.log(self.temperature_k), np.log(table)))

    def k(self, temperature_k) -> np.ndarray:
        return self._interp_loglog(temperature_k, self.conductivity)

    def rho(self, temperature_k) -> np.ndarray:
        return self._interp_loglog(temperature_k, self.resistivity)

    def _segment_integral(self, idx: np.ndarray, t: np.ndarray) -> np.ndarray:
        """∫ from T_idx to t of k, with t inside segment idx."""
        t_i = self.temperature_k[idx]
        k_i = self.conductivity[idx]
        m = self._exponents[idx]
        ratio = t / t_i
        with np.errstate(divide="ignore", invalid="ignore"):
            power = k_i * t_i / (m + 1.0) * (np.power(ratio, m + 1.0) - 1.0)
        log_case = k_i * t_i * np.log(ratio)
        return np.where(np.abs(m + 1.0) < _LOG_EPS, log_case, power)

    def conductivity_integral(self, temperature_k) -> np.ndarray:
        """Θ(T) = ∫ k dT from the bottom of the table."""
        self.check_range(temperature_k)
        t = np.asarray(temperature_k, dtype=float)
        idx = self._segment(t)
        return self._theta_nodes[idx] + self._segment_integral(idx, t)

    def inverse_conductivity_integral(self, theta) -> np.ndarray:
        theta = np.asarray(theta, dtype=float)
        if np.any(theta < -1e-12 * self._theta_nodes[-1]) or np.any(theta > self._theta_nodes[-1] * (1 + 1e-12)):
            raise MaterialRangeError(f"{self.name}: conductivity integral outside table range")
        idx = np.clip(np.searchsorted(self._theta_nodes, theta, side="right") - 1, 0, self.temperature_k.size - 2)
        t_i = self.temperature_k[idx]
        k_i = self.conductivity[idx]
        m = self._exponents[idx]
        d = theta - self._theta_nodes[idx]
        with np.errstate(divide="ignore", invalid="ignore"):
            power = t_i * np.power(1.0 + (m + 1.0) * d / (k_i * t_i), 1.0 / (m + 1.0))
        log_case = t_i * np.exp(d / (k_i * t_i))
        return np.where(np.abs(m + 1.0) < _LOG_EPS, log_case, power)


def read_material_csv(path: Union[str, Path], name: str = "") -> MaterialProperties:
    path = Path(path)
    with open(path, "r", encoding="utf-8") as f:
        rows = [line for line in f if line.strip() and not line.lstrip().startswith("#")]
    reader = csv.DictReader(rows)
    t, k, rho = [], [], []
    for row in reader:
        t.append(float(row["temperature_k"]))
        k.append(float(row["k_w_per_m_k"]))
        rho.append(float(row["rho_ohm_m"]))
    return MaterialProperties(name or path.stem, np.asarray(t), np.asarray(k), np.asarray(rho))


@lru_cache(maxsize=None)
def load_material(name: str) -> MaterialProperties:
    """Bundled material by key (``cu_rrr100``, ``becu``) or a CSV path."""
    if name in BUNDLED_MATERIALS:
        return read_material_csv(DATA_DIR / BUNDLED_MATERIALS[name], name)
    path = Path(name)
    if path.exists():
        return read_material_csv(path)
    raise KeyError(f"Unknown material {name!r}; bundled: {sorted(BUNDLED_MATERIALS)}")
