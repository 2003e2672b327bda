import numpy as np
import pytest
from numpy.testing import assert_allclose

from network_core import (
    BOLTZMANN,
    DomainError,
    ScalarTrace,
    Unit,
    from_db,
    watts_to_dbm,
    write_trace_csv,
)
from noise_engine import (
    EnrTable,
    InputModel,
    LossTables,
    build_loss_tables,
    calibrate_receiver,
    chain_noise_temperature,
    dut_noise_temperature,
    extract_noise_temperature,
    hot_temperature,
    input_noise_temperature,
    noise_figure_from_temperature,
    second_stage_correction,
    y_factor,
)
from thermal_model import t_loss

RECEIVER_GAIN = 1e6
T_RECEIVER = 16000.0


def analyzer_reading(grid, t_input):
    """Noise density the analyzer reports for an input temperature, dBm/Hz."""
    watts = BOLTZMANN * RECEIVER_GAIN * (np.asarray(t_input) + T_RECEIVER)
    return ScalarTrace(grid, watts_to_dbm(watts), Unit.DBM_PER_HZ)


class TestYFactor:
    def test_hot_temperature(self, grid):
        enr = EnrTable.flat(grid, 15.0, 296.0)
        assert_allclose(hot_temperature(enr).values, 9466.6, atol=0.5)

    def test_y_from_dbm(self, grid):
        result = y_factor(ScalarTrace.constant(grid, -90.0, Unit.DBM), ScalarTrace.constant(grid, -93.0, Unit.DBM))
        assert_allclose(result.y.values, 1.9953, atol=1e-4)
        assert not result.invalid.any()

    def test_y_below_one_is_invalid(self, grid):
        result = y_factor(ScalarTrace.constant(grid, -93.0, Unit.DBM), ScalarTrace.constant(grid, -90.0, Unit.DBM))
        assert result.invalid.all()
        assert np.all(np.isnan(dut_noise_temperature(result.y.values, 300.0, 4.0)))

    def test_textbook_value(self):
        # T_hot = 300, T_cold = 77, T_DUT = 100 gives Y = 400/177
        assert dut_noise_temperature(400.0 / 177.0, 300.0, 77.0) == pytest.approx(100.0)

    def test_linear_in_cold_temperature(self, rng):
        y = rng.uniform(1.1, 30.0, 1000)
        t_hot = rng.uniform(100.0, 10000.0, 1000)
        t_cold = rng.uniform(2.0, 20.0, 1000)
        delta = 0.01
        shift = dut_noise_temperature(y, t_hot, t_cold + delta) - dut_noise_temperature(y, t_hot, t_cold)
        assert_allclose(shift, -y / (y - 1.0) * delta, rtol=1e-6)

    def test_negative_result_is_kept(self):
        assert dut_noise_temperature(10.0, 100.0, 20.0) < 0

    def test_noise_figure(self):
        assert noise_figure_from_temperature(6.0) == pytest.approx(0.0887, abs=5e-4)
        with pytest.raises(DomainError):
            noise_figure_from_temperature(-1.0)

    def test_enr_from_csv(self, tmp_path, grid):
        path = write_trace_csv(ScalarTrace.constant(grid, 15.2, Unit.DB), tmp_path / "enr.csv")
        enr = EnrTable.from_csv(path, t_off_k=295.0)
        assert_allclose(enr.enr_db, 15.2)
        assert enr.t_off_k == 295.0


class TestInputTemperature:
    def test_hand_example(self):
        t_in = input_noise_temperature(9466.8, 1000.0, 3.2, 2.0, 210.0)
        assert t_in == pytest.approx(8.035, abs=1e-3)
        assert input_noise_temperature(9466.8, 1000.0, 3.2, 2.0, 210.0, InputModel.LUMPED) == pytest.approx(t_in)

    def test_full_and_lumped_agree(self, rng):
        n = 10_000
        t_s = rng.uniform(250.0, 20000.0, n)
        l_a = from_db(rng.uniform(0.0, 40.0, n))
        l_cable = from_db(rng.uniform(0.0, 6.0, n))
        t_cable = rng.uniform(4.0, 300.0, n)
        t_a = rng.uniform(0.01, 10.0, n)
        full = input_noise_temperature(t_s, l_a, t_a, l_cable, t_cable, InputModel.FULL)
        lumped = input_noise_temperature(t_s, l_a, t_a, l_cable, t_cable, InputModel.LUMPED)
        assert_allclose(lumped, full, rtol=1e-12, atol=1e-12)

    def test_lossless_chain_passes_source(self):
        assert input_noise_temperature(300.0, 1.0, 3.2, 1.0, 210.0, InputModel.LUMPED) == pytest.approx(300.0)

    def test_rejects_gain(self):
        with pytest.raises(DomainError, match="losses"):
            input_noise_temperature(300.0, 0.5, 3.2, 2.0, 210.0)

    def test_second_stage(self):
        assert second_stage_correction(10.0, 1000.0, 16000.0) == pytest.approx(-6.0)
        with pytest.raises(DomainError):
            second_stage_correction(10.0, 0.0, 16000.0)


class TestLossTables:
    def test_split(self, grid):
        tables = build_loss_tables(ScalarTrace.constant(grid, 6.0, Unit.DB), 30.0, 3.3, before_fraction=0.25)
        assert_allclose(tables.before.values, 31.5)
        assert_allclose(tables.after.values, 4.5)
        assert tables.t_after is tables.t_loss

    def test_fraction_range(self, grid):
        with pytest.raises(DomainError, match="before_fraction"):
            build_loss_tables(ScalarTrace.constant(grid, 6.0, Unit.DB), 30.0, 3.3, before_fraction=1.5)

    def test_negative_loss(self, grid):
        with pytest.raises(DomainError):
            build_loss_tables(ScalarTrace.constant(grid, -1.0, Unit.DB), 30.0, 3.3)


class TestPipeline:
    """Synthetic lumped-loss world in which the extraction is exact."""

    T_DUT = 2.7
    GAIN_DB = 36.0
    BEFORE_DB = 33.0
    AFTER_DB = 3.0
    T_CABLE = 210.0
    T_AFTER = 150.0

    @pytest.fixture
    def world(self, grid):
        enr = EnrTable.flat(grid, 15.0)
        l_cable = from_db(self.BEFORE_DB - 30.0)
        t_l = t_loss(l_cable, self.T_CABLE, 1000.0, 3.2)
        tables = LossTables(
            before=ScalarTrace.constant(grid, self.BEFORE_DB, Unit.DB),
            after=ScalarTrace.constant(grid, self.AFTER_DB, Unit.DB),
            t_loss=ScalarTrace.constant(grid, t_l, Unit.KELVIN),
            t_after=ScalarTrace.constant(grid, self.T_AFTER, Unit.KELVIN),
        )
        g, l_after = from_db(self.GAIN_DB), from_db(self.AFTER_DB)

        def chain(t_source):
            t_in = input_noise_temperature(t_source, 1000.0, 3.2, l_cable, self.T_CABLE)
            return (g * (t_in + self.T_DUT) + (l_after - 1.0) * self.T_AFTER) / l_after

        t_hot = hot_temperature(enr).values
        receiver = calibrate_receiver(enr, analyzer_reading(grid, t_hot), analyzer_reading(grid, enr.t_off_k))
        return enr, tables, receiver, analyzer_reading(grid, chain(t_hot)), analyzer_reading(grid, chain(enr.t_off_k))

    def test_receiver_calibration(self, world):
        receiver = world[2]
        assert_allclose(receiver.t_receiver.values, T_RECEIVER, rtol=1e-9)
        assert_allclose(receiver.gain.values, BOLTZMANN * RECEIVER_GAIN, rtol=1e-9)

    def test_recovers_dut(self, world):
        enr, tables, receiver, n_hot, n_cold = world
        result = extract_noise_temperature(enr, n_hot, n_cold, tables, receiver)
        assert_allclose(result.t_dut.values, self.T_DUT, atol=1e-6)
        assert_allclose(result.gain_db.values, self.GAIN_DB, atol=1e-9)
        assert not result.invalid.any() and not result.unphysical.any()

    def test_without_receiver_reports_system_temperature(self, world):
        enr, tables, _, n_hot, n_cold = world
        result = extract_noise_temperature(enr, n_hot, n_cold, tables)
        assert result.gain_db is None
        assert np.all(result.t_dut.values > self.T_DUT)
        assert_allclose(result.t_dut.values, result.t_system.values)

    def test_wrong_loss_table_shifts_result(self, world):
        enr, tables, receiver, n_hot, n_cold = world
        wrong = LossTables(
            before=tables.before + 1.0, after=tables.after, t_loss=tables.t_loss, t_after=tables.t_after
        )
        shifted = extract_noise_temperature(enr, n_hot, n_cold, wrong, receiver).t_dut.values
        assert np.all(shifted < self.T_DUT - 1.0)

    def test_chain_noise_temperature(self, grid, world):
        enr, _, receiver, _, _ = world
        loss, t_chain = from_db(3.0), 140.0
        n_hot = analyzer_reading(grid, (hot_temperature(enr).values + t_chain) / loss)
        n_cold = analyzer_reading(grid, (enr.t_off_k + t_chain) / loss)
        assert_allclose(chain_noise_temperature(enr, n_hot, n_cold, receiver).values, t_chain, rtol=1e-9)
