import numpy as np
import pytest
from numpy.testing import assert_allclose

from conftest import random_network
from network_core import (
    DbKind,
    DomainError,
    FrequencyGrid,
    GridMismatchError,
    ParseError,
    ScalarTrace,
    SingularNetworkError,
    TouchstoneParseError,
    TraceParseError,
    TwoPortNetwork,
    Unit,
    UnsupportedParameterError,
    attenuator,
    cascade,
    format_touchstone,
    from_db,
    gamma_from_vswr,
    ideal_thru,
    parse_touchstone,
    parse_trace_csv,
    read_power_sweep_csv,
    read_touchstone,
    return_loss_db,
    s_to_t,
    t_to_s,
    to_db,
    vswr_from_gamma,
    write_power_sweep_csv,
    write_touchstone,
    write_trace_csv,
)


class TestUnits:
    def test_db_kinds(self):
        assert to_db(100.0) == pytest.approx(20.0)
        assert to_db(10.0, DbKind.AMPLITUDE) == pytest.approx(20.0)
        assert from_db(3.0) == pytest.approx(1.9953, abs=1e-4)

    def test_non_positive_rejected(self):
        with pytest.raises(DomainError, match="strictly positive"):
            to_db(0.0)
        with pytest.raises(DomainError):
            to_db(np.array([1.0, -1.0]))

    def test_vswr_and_return_loss(self):
        assert vswr_from_gamma(0.2) == pytest.approx(1.5)
        assert gamma_from_vswr(1.5) == pytest.approx(0.2)
        assert return_loss_db(0.1) == pytest.approx(20.0)
        with pytest.raises(DomainError):
            vswr_from_gamma(1.0)


class TestFrequencyGrid:
    def test_rejects_bad_points(self):
        with pytest.raises(DomainError, match="strictly increasing"):
            FrequencyGrid(np.array([1e9, 1e9, 2e9]))
        with pytest.raises(DomainError):
            FrequencyGrid(np.array([0.0, 1e9]))
        with pytest.raises(DomainError, match="at least two"):
            FrequencyGrid(np.array([1e9]))

    def test_points_are_read_only(self, grid):
        with pytest.raises(ValueError):
            grid.points[0] = 1.0

    def test_band_mask_hits_edges(self, grid):
        assert grid.band_mask(4e9, 8e9).sum() == len(grid)
        assert grid.band_mask(5e9, 6e9).sum() == 11


class TestScalarTrace:
    def test_grid_mismatch(self, grid):
        other = FrequencyGrid.linspace(4e9, 8e9, 21)
        with pytest.raises(GridMismatchError, match="resample explicitly"):
            ScalarTrace.constant(grid, 1.0) + ScalarTrace.constant(other, 1.0)

    def test_resample_refuses_extrapolation(self, grid):
        trace = ScalarTrace(grid, grid.points / 1e9)
        assert_allclose(trace.resample(FrequencyGrid.linspace(5e9, 6e9, 3)).values, [5.0, 5.5, 6.0])
        with pytest.raises(DomainError, match="extrapolation"):
            trace.resample(FrequencyGrid.linspace(3e9, 6e9, 3))

    def test_kelvin_has_no_db_form(self, grid):
        with pytest.raises(DomainError):
            ScalarTrace.constant(grid, 4.0, Unit.KELVIN).to_db()


class TestTwoPortNetwork:
    def test_s_t_inverse_pair(self, grid, rng):
        net = random_network(grid, rng)
        assert_allclose(t_to_s(s_to_t(net.s)), net.s, atol=1e-12)

    def test_zero_s21_is_singular(self, grid):
        net = TwoPortNetwork.from_parameters(grid, 0.1, 0.0, s12=0.1)
        with pytest.raises(SingularNetworkError, match="S21 = 0"):
            net.t()

    def test_cascade_with_thru_is_identity(self, grid, rng):
        net = random_network(grid, rng)
        assert cascade(ideal_thru(grid), net, ideal_thru(grid)).allclose(net, atol=1e-12)

    def test_cascade_is_associative(self, grid, rng):
        a, b, c = (random_network(grid, rng) for _ in range(3))
        assert cascade(cascade(a, b), c).allclose(cascade(a, cascade(b, c)), atol=1e-10)

    def test_inverse_cancels(self, grid, rng):
        net = random_network(grid, rng)
        assert cascade(net, net.inverse()).allclose(ideal_thru(grid), atol=1e-10)

    def test_attenuators_add_in_db(self, grid):
        chain = cascade(attenuator(grid, 3.0), attenuator(grid, 7.0))
        assert_allclose(chain.s_db(2, 1).values, -10.0, atol=1e-12)
        assert chain.passive

    def test_passive_flag_is_checked(self, grid):
        with pytest.raises(DomainError, match="singular value"):
            TwoPortNetwork.from_parameters(grid, 0.0, 2.0, passive=True)

    def test_only_50_ohm(self, grid):
        with pytest.raises(DomainError, match="50 ohm"):
            TwoPortNetwork.from_parameters(grid, 0.0, 1.0, z0=75.0)

    def test_terminate_with_matched_load(self, grid, rng):
        net = random_network(grid, rng)
        assert_allclose(net.terminate(0.0), net.s11)


class TestTouchstone:
    @pytest.mark.parametrize("fmt", ["RI", "MA", "DB"])
    def test_write_then_read(self, tmp_path, grid, rng, fmt):
        net = random_network(grid, rng)
        back = read_touchstone(write_touchstone(net, tmp_path / f"dut_{fmt}.s2p", fmt=fmt))
        assert back.grid == net.grid
        assert_allclose(back.s, net.s, rtol=1e-9, atol=1e-12)

    def test_defaults_to_ghz_ma(self):
        text = "1 0 0 1 0 1 0 0 0\n2 0 0 1 0 1 0 0 0\n"
        net = parse_touchstone(text)
        assert_allclose(net.grid.points, [1e9, 2e9])
        assert_allclose(net.s21, 1.0)

    def test_db_angle_form(self):
        text = "# MHz S DB R 50\n100 -20 0 -3 90 -3 90 -20 0\n200 -20 0 -3 90 -3 90 -20 0\n"
        net = parse_touchstone(text)
        assert_allclose(np.abs(net.s21), from_db(-3.0, DbKind.AMPLITUDE))
        assert_allclose(np.angle(net.s21, deg=True), 90.0)

    def test_rejects_other_parameters(self):
        with pytest.raises(UnsupportedParameterError, match="line 1"):
            parse_touchstone("# GHz Y RI R 50\n1 0 0 0 0 0 0 0 0\n")

    def test_rejects_other_impedance(self):
        with pytest.raises(TouchstoneParseError, match="50 ohm only"):
            parse_touchstone("# GHz S RI R 75\n1 0 0 0 0 0 0 0 0\n2 0 0 0 0 0 0 0 0\n")

    def test_rejects_short_rows(self):
        with pytest.raises(TouchstoneParseError, match="line 2"):
            parse_touchstone("# GHz S RI R 50\n1 0 0 1 0 1 0\n")

    def test_rejects_decreasing_frequency(self):
        with pytest.raises(TouchstoneParseError, match="increasing"):
            parse_touchstone("2 0 0 1 0 1 0 0 0\n1 0 0 1 0 1 0 0 0\n")

    def test_output_is_deterministic(self, grid, rng):
        net = random_network(grid, rng)
        assert format_touchstone(net) == format_touchstone(net)

    def test_matches_scikit_rf(self, tmp_path, grid, rng):
        skrf = pytest.importorskip("skrf")
        a, b = random_network(grid, rng), random_network(grid, rng)
        pa = write_touchstone(a, tmp_path / "a.s2p", fmt="RI")
        pb = write_touchstone(b, tmp_path / "b.s2p", fmt="RI")
        ref_a, ref_b = skrf.Network(str(pa)), skrf.Network(str(pb))
        assert_allclose(ref_a.f, grid.points)
        assert_allclose(ref_a.s, a.s, atol=1e-10)
        assert_allclose((ref_a ** ref_b).s, cascade(a, b).s, atol=1e-9)


class TestTraceCsv:
    def test_trace_file(self, tmp_path, grid):
        trace = ScalarTrace(grid, np.linspace(2.0, 3.0, len(grid)), Unit.KELVIN)
        path = write_trace_csv(trace, tmp_path / "t_dut.csv")
        text = path.read_text(encoding="utf-8")
        assert text.startswith("# unit: kelvin\nfreq_hz,value\n")
        back = parse_trace_csv(text)
        assert back.unit is Unit.KELVIN
        assert_allclose(back.values, trace.values)

    def test_power_sweep_file(self, tmp_path):
        pin = np.arange(-60.0, -20.0, 1.0)
        path = write_power_sweep_csv(6e9, pin, pin + 30.0, tmp_path / "sweep.csv")
        f, pin_back, pout_back = read_power_sweep_csv(path)
        assert f == 6e9
        assert_allclose(pout_back - pin_back, 30.0)

    def test_malformed_trace_rows(self):
        with pytest.raises(TraceParseError, match="line 4: non-numeric row"):
            parse_trace_csv("# unit: kelvin\nfreq_hz,value\n4e9,3.1\n5e9,oops\n")
        with pytest.raises(TraceParseError, match="expected 2 columns"):
            parse_trace_csv("freq_hz,value\n4e9,3.1,7\n")
        with pytest.raises(TraceParseError, match="no data rows"):
            parse_trace_csv("# unit: kelvin\n")

    def test_sweep_without_frequency_header(self, tmp_path):
        path = tmp_path / "sweep.csv"
        path.write_text("pin_dbm,pout_dbm\n-60,-30\n", encoding="utf-8")
        with pytest.raises(TraceParseError, match="frequency_hz") as info:
            read_power_sweep_csv(path)
        assert isinstance(info.value, ParseError)
        assert not isinstance(info.value, TouchstoneParseError)
