import numpy as np
import pytest

from network_core import FrequencyGrid, TwoPortNetwork
from protocol_runner import RunStore
from simlab import load_preset


@pytest.fixture
def grid():
    return FrequencyGrid.linspace(4e9, 8e9, 41)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_network(grid: FrequencyGrid, rng: np.random.Generator, scale: float = 0.15) -> TwoPortNetwork:
    """Random non-reciprocal two-port with |S21| kept away from zero."""
    n = len(grid)
    s = scale * (rng.standard_normal((n, 2, 2)) + 1j * rng.standard_normal((n, 2, 2)))
    s[:, 1, 0] += 0.8 * np.exp(1j * rng.uniform(-np.pi, np.pi, n))
    return TwoPortNetwork(grid, s)


@pytest.fixture
def random_net(grid, rng):
    return lambda scale=0.15: random_network(grid, rng, scale)


@pytest.fixture
def lna_c():
    return load_preset("lna_c")


@pytest.fixture
def lna_t():
    return load_preset("lna_t")


@pytest.fixture
def store(tmp_path):
    return RunStore(tmp_path / "runs")
