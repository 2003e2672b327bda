import numpy as np
import pytest
from numpy.testing import assert_allclose

from conftest import random_network
from network_core import (
    DegenerateCalibrationError,
    FrequencyGrid,
    GridMismatchError,
    TwoPortNetwork,
    attenuator,
    cascade,
    ideal_thru,
    matched_line,
)
from simlab import Standard, SwitchState, VirtualTestbed
from trl_cal import (
    ErrorModel,
    TrlStandardsMeasurement,
    deembed,
    ill_conditioned_mask,
    line_phase_deg,
    solve_trl,
    verify_cal,
)

LN10 = np.log(10.0)


def line_transmission(grid: FrequencyGrid, delay_s: float = 41.67e-12, loss_db: float = 0.05) -> np.ndarray:
    return 10 ** (-loss_db / 20.0) * np.exp(-2j * np.pi * grid.points * delay_s)


def mismatch_step(grid: FrequencyGrid, gamma: float) -> TwoPortNetwork:
    """Lossless impedance step: reflects gamma on port 1 and -gamma on port 2."""
    return TwoPortNetwork.from_parameters(grid, gamma, np.sqrt(1.0 - gamma ** 2), s22=-gamma)


def cable(grid: FrequencyGrid, delay_s: float, loss_db: float = 0.0) -> TwoPortNetwork:
    return matched_line(grid, line_transmission(grid, delay_s, loss_db))


def random_passive_boxes(grid, rng, outer_gamma: float = 0.1, inner_gamma: float = 0.1):
    """Port-1 box with a 20-40 dB pad and port-2 box, both mismatched at each end."""
    def run():
        return cable(grid, rng.uniform(0.1e-9, 2e-9), rng.uniform(0.0, 3.0))

    box_a = cascade(mismatch_step(grid, rng.uniform(-outer_gamma, outer_gamma)), run(),
                    attenuator(grid, rng.uniform(20.0, 40.0)),
                    mismatch_step(grid, rng.uniform(-inner_gamma, inner_gamma)))
    box_b = cascade(mismatch_step(grid, rng.uniform(-inner_gamma, inner_gamma)), run(),
                    mismatch_step(grid, rng.uniform(-outer_gamma, outer_gamma)))
    return box_a, box_b


def with_trace_noise(s: np.ndarray, rng, sigma_db: float) -> np.ndarray:
    n = rng.standard_normal(s.shape + (2,)) * sigma_db
    return s * np.exp((n[..., 0] + 1j * n[..., 1]) * LN10 / 20.0)


def measure_standards(box_a, box_b, line, gamma=-1.0, rng=None, sigma_db=0.0) -> TrlStandardsMeasurement:
    grid = box_a.grid
    m_thru = cascade(box_a, box_b)
    m_line = cascade(box_a, matched_line(grid, line), box_b)
    r1, r2 = box_a.terminate(gamma), box_b.flipped().terminate(gamma)
    if sigma_db > 0:
        m_thru = TwoPortNetwork(grid, with_trace_noise(m_thru.s, rng, sigma_db))
        m_line = TwoPortNetwork(grid, with_trace_noise(m_line.s, rng, sigma_db))
        r1, r2 = with_trace_noise(r1, rng, sigma_db), with_trace_noise(r2, rng, sigma_db)
    return TrlStandardsMeasurement(m_thru, m_line, r1, r2)


@pytest.fixture
def boxes(grid, rng):
    return random_network(grid, rng, 0.1), random_network(grid, rng, 0.1)


class TestSolve:
    def test_recovers_line_and_reflect(self, grid, boxes):
        line = line_transmission(grid)
        em = solve_trl(measure_standards(*boxes, line, gamma=-0.98))
        assert_allclose(em.line_transmission, line, atol=1e-9)
        assert_allclose(em.reflect_estimate, -0.98, atol=1e-9)

    def test_embedding_reproduces_measurement(self, grid, boxes):
        em = solve_trl(measure_standards(*boxes, line_transmission(grid)))
        assert em.embed(ideal_thru(grid)).allclose(cascade(*boxes), atol=1e-9)

    def test_deembeds_many_duts(self, grid, boxes, rng):
        em = solve_trl(measure_standards(*boxes, line_transmission(grid)))
        worst = 0.0
        for _ in range(500):
            dut = random_network(grid, rng)
            recovered = deembed(em, cascade(boxes[0], dut, boxes[1]))
            worst = max(worst, float(np.max(np.abs(recovered.s - dut.s))))
        assert worst <= 1e-6

    def test_degenerate_line_is_rejected(self, grid, boxes):
        with pytest.raises(DegenerateCalibrationError, match="degenerate"):
            solve_trl(measure_standards(*boxes, np.ones(len(grid), dtype=complex)))

    def test_thru_line_grids_must_match(self, grid, boxes):
        other = FrequencyGrid.linspace(4e9, 8e9, 21)
        with pytest.raises(GridMismatchError):
            TrlStandardsMeasurement(cascade(*boxes), ideal_thru(other), np.zeros(len(grid)), np.zeros(len(grid)))


class TestRootChoice:
    def test_padded_mismatched_input_box(self, grid, rng):
        box_a = cascade(mismatch_step(grid, 0.09), cable(grid, 0.8e-9, 1.0), attenuator(grid, 30.0),
                        mismatch_step(grid, 0.05))
        box_b = cascade(mismatch_step(grid, 0.05), cable(grid, 1.1e-9, 1.5))
        assert box_a.is_passive() and box_b.is_passive()
        line = line_transmission(grid)
        em = solve_trl(measure_standards(box_a, box_b, line))
        assert np.max(np.abs(em.line_transmission - line)) < 1e-6
        assert np.all(em.gamma_l.real >= 0)
        dut = random_network(grid, rng)
        recovered = deembed(em, cascade(box_a, dut, box_b))
        assert np.max(np.abs(recovered.s - dut.s)) < 1e-6

    def test_lossless_line_follows_delay(self, grid, boxes):
        line = line_transmission(grid, loss_db=0.0)
        em = solve_trl(measure_standards(*boxes, line))
        assert_allclose(em.line_transmission, line, atol=1e-9)

    def test_short_is_preferred_reflect_root(self, grid, boxes):
        em = solve_trl(measure_standards(*boxes, line_transmission(grid), gamma=-0.5 + 0.2j))
        assert_allclose(em.reflect_estimate, -0.5 + 0.2j, atol=1e-9)


class TestRandomFixtures:
    @pytest.fixture
    def small_grid(self):
        return FrequencyGrid.linspace(4e9, 8e9, 21)

    def test_noise_free_random_boxes(self, small_grid, rng):
        line = line_transmission(small_grid)
        worst = 0.0
        for _ in range(500):
            box_a, box_b = random_passive_boxes(small_grid, rng)
            em = solve_trl(measure_standards(box_a, box_b, line))
            dut = random_network(small_grid, rng)
            recovered = deembed(em, cascade(box_a, dut, box_b))
            worst = max(worst, float(np.max(np.abs(recovered.s - dut.s))))
        assert worst <= 1e-6

    def test_noisy_thru_residual_per_trial(self, small_grid, rng):
        # mismatch sits at the DUT side; the instrument side of each run is matched
        line = line_transmission(small_grid)
        trials, passed = 100, 0
        for _ in range(trials):
            box_a, box_b = random_passive_boxes(small_grid, rng, outer_gamma=0.0)
            em = solve_trl(measure_standards(box_a, box_b, line, rng=rng, sigma_db=0.01))
            m_thru = cascade(box_a, box_b)
            m_thru = TwoPortNetwork(small_grid, with_trace_noise(m_thru.s, rng, 0.01))
            passed += verify_cal(em, m_thru, tolerance_db=0.05).passed
        assert passed / trials >= 0.95


class TestConditioning:
    def test_phase_margin(self):
        phase = np.array([5.0, 19.9, 20.0, 90.0, 160.0, 170.0])
        assert ill_conditioned_mask(phase).tolist() == [True, True, False, False, False, True]

    def test_phase_folded(self):
        assert_allclose(line_phase_deg(np.exp(-1j * np.radians([30.0, 210.0]))), [30.0, 30.0], atol=1e-9)

    def test_quarter_wave_line_is_well_conditioned(self, grid, boxes):
        em = solve_trl(measure_standards(*boxes, line_transmission(grid)))
        assert not em.ill_conditioned.any()

    def test_short_line_flags_low_frequencies(self):
        grid = FrequencyGrid.linspace(0.5e9, 8e9, 31)
        a, b = (ideal_thru(grid) for _ in range(2))
        em = solve_trl(measure_standards(a, b, line_transmission(grid)))
        flagged = em.ill_conditioned_frequencies
        assert flagged and max(flagged) < 1.4e9


class TestVerification:
    def test_noise_free_residual_is_zero(self, grid, boxes):
        em = solve_trl(measure_standards(*boxes, line_transmission(grid)))
        result = verify_cal(em, cascade(*boxes))
        assert result.passed
        assert result.max_abs_residual_db < 1e-9

    def test_wrong_model_fails(self, grid, boxes):
        em = ErrorModel.identity(grid)
        result = verify_cal(em, cascade(*boxes))
        assert not result.passed

    def test_noisy_testbed_thru(self, lna_c):
        testbed = VirtualTestbed(lna_c)
        em = solve_trl(testbed.measure_standards())
        result = verify_cal(em, testbed.vna_measure(SwitchState.select(Standard.THRU)))
        assert result.passed, result.max_abs_residual_db


class TestPersistence:
    def test_save_and_load(self, tmp_path, grid, boxes):
        em = solve_trl(measure_standards(*boxes, line_transmission(grid)))
        loaded = ErrorModel.load(em.save(tmp_path / "cal" / "error_model.json"))
        assert loaded.input_box.allclose(em.input_box, atol=0)
        assert loaded.output_box.allclose(em.output_box, atol=0)
        assert_allclose(loaded.line_transmission, em.line_transmission, rtol=0)

    def test_gamma_l(self, grid):
        em = ErrorModel.identity(grid, np.exp(-0.2 - 0.5j) * np.ones(len(grid)))
        assert_allclose(em.gamma_l, 0.2 + 0.5j)
