import numpy as np
import pytest
from numpy.testing import assert_allclose

from lna_metrics import (
    BandSpec,
    PowerSweep,
    Relation,
    SlopeMode,
    band_compliance,
    extract_p1db,
    gain_at,
    gain_flatness,
    peak_gain,
    repeatability_ci,
)
from network_core import DomainError, FrequencyGrid, ScalarTrace, Unit
from simlab import CompressionConfig, CompressionKind, hard_limiter_p1db, output_power_dbm, rapp_op1db_dbm


def sweep_for(compression: CompressionConfig, gain_db: float, step_db: float = 0.25) -> PowerSweep:
    pin = np.arange(-80.0, 0.0 + step_db / 2, step_db)
    return PowerSweep(6e9, pin, output_power_dbm(compression, pin, gain_db))


@pytest.fixture
def gain(grid):
    # 35 dB with a 1 dB peak-to-peak ripple over 4-8 GHz
    return ScalarTrace(grid, 35.0 + 0.5 * np.sin(2 * np.pi * (grid.points - 4e9) / 4e9), Unit.DB)


class TestBandMetrics:
    def test_flatness_and_peak(self, gain):
        band = BandSpec.ghz(4, 8)
        assert gain_flatness(gain, band) == pytest.approx(1.0, abs=1e-3)
        assert peak_gain(gain, band) == pytest.approx(35.5, abs=1e-3)

    def test_sub_band(self, gain):
        assert gain_flatness(gain, BandSpec.ghz(4, 4.1)) < 0.1

    def test_gain_at(self, gain):
        assert gain_at(gain, 4e9) == pytest.approx(35.0)
        with pytest.raises(DomainError, match="outside"):
            gain_at(gain, 9e9)

    def test_band_outside_grid(self, gain):
        with pytest.raises(DomainError, match="outside the trace grid"):
            gain_flatness(gain, BandSpec.ghz(3, 8))

    def test_band_order(self):
        with pytest.raises(ValueError, match="f_low < f_high"):
            BandSpec.ghz(8, 4)

    def test_compliance_below(self, grid):
        trace = ScalarTrace(grid, np.linspace(4.0, 8.0, len(grid)), Unit.KELVIN)
        result = band_compliance(trace, 6.95, Relation.BELOW, BandSpec.ghz(4, 8))
        assert not result.passed
        assert len(result.violations) == 11
        assert result.min_violation == pytest.approx(0.05)
        assert result.worst_margin == pytest.approx(1.05)

    def test_compliance_above(self, gain):
        assert band_compliance(gain, 34.0, Relation.ABOVE, BandSpec.ghz(4, 8)).passed
        assert not band_compliance(gain, 35.0, "above", BandSpec.ghz(4, 8)).passed

    def test_nan_counts_as_violation(self, grid):
        values = np.full(len(grid), 3.0)
        values[5] = np.nan
        result = band_compliance(ScalarTrace(grid, values, Unit.KELVIN), 8.0, Relation.BELOW, BandSpec.ghz(4, 8))
        assert not result.passed
        assert result.violations == [float(grid.points[5])]
        assert result.min_violation == float("inf")


class TestCompression:
    def test_rapp_population(self, rng):
        worst = 0.0
        for _ in range(100):
            psat = rng.uniform(-5.0, 10.0)
            smoothness = rng.uniform(2.0, 5.0)
            gain_db = rng.uniform(25.0, 40.0)
            result = extract_p1db(sweep_for(CompressionConfig(psat_dbm=psat, smoothness=smoothness), gain_db))
            assert result.found
            worst = max(worst, abs(result.op1db_dbm - rapp_op1db_dbm(psat, smoothness)))
        assert worst <= 0.1

    def test_hard_limiter(self):
        compression = CompressionConfig(model=CompressionKind.HARD, psat_dbm=-5.0)
        result = extract_p1db(sweep_for(compression, 35.0, step_db=0.5))
        ip1db, op1db = hard_limiter_p1db(-5.0, 35.0)
        assert result.ip1db_dbm == pytest.approx(ip1db, abs=0.05)
        assert result.op1db_dbm == pytest.approx(op1db, abs=0.05)
        assert result.small_signal_gain_db == pytest.approx(35.0)

    def test_control_lna_closed_form(self):
        assert rapp_op1db_dbm(-8.0, 2.0) == pytest.approx(-10.165, abs=1e-3)

    def test_free_slope(self):
        result = extract_p1db(sweep_for(CompressionConfig(psat_dbm=0.0), 30.0), slope_mode=SlopeMode.FREE)
        assert result.slope == pytest.approx(1.0, abs=1e-3)
        assert result.op1db_dbm == pytest.approx(rapp_op1db_dbm(0.0, 2.0), abs=0.1)

    def test_linear_device_not_found(self):
        result = extract_p1db(sweep_for(CompressionConfig(model=CompressionKind.NONE), 30.0))
        assert not result.found
        assert result.op1db_dbm is None
        assert result.to_dict()["found"] is False

    def test_expansion_is_flagged(self):
        pin = np.arange(-80.0, 0.25, 0.25)
        pout = output_power_dbm(CompressionConfig(psat_dbm=0.0), pin, 30.0)
        pout = pout + 0.5 * np.exp(-0.5 * ((pin + 50.0) / 2.0) ** 2)
        result = extract_p1db(PowerSweep(6e9, pin, pout))
        assert result.expansion
        assert result.max_expansion_db == pytest.approx(0.5, abs=0.02)

    def test_fit_window_too_sparse(self):
        with pytest.raises(DomainError, match="fit window"):
            extract_p1db(sweep_for(CompressionConfig(), 30.0), fit_window=(-70.0, -69.9))

    def test_sweep_validation(self):
        with pytest.raises(DomainError, match="strictly increasing"):
            PowerSweep(6e9, np.r_[np.arange(10.0), 5.0], np.zeros(11))
        with pytest.raises(DomainError, match="at least"):
            PowerSweep(6e9, np.arange(3.0), np.arange(3.0))

    def test_csv(self, tmp_path):
        sweep = sweep_for(CompressionConfig(), 30.0)
        back = PowerSweep.from_csv(sweep.to_csv(tmp_path / "sweep.csv"))
        assert back.frequency_hz == sweep.frequency_hz
        assert_allclose(back.pout_dbm, sweep.pout_dbm)


class TestRepeatability:
    def test_mean_and_two_sigma(self, grid):
        traces = [ScalarTrace.constant(grid, v, Unit.KELVIN) for v in (1.0, 2.0, 3.0)]
        result = repeatability_ci(traces)
        assert_allclose(result.mean.values, 2.0)
        assert_allclose(result.two_sigma.values, 2.0)
        assert result.count == 3

    def test_scales_with_noise(self, grid, rng):
        def estimate(sigma):
            traces = [ScalarTrace(grid, 3.0 + sigma * rng.standard_normal(len(grid)), Unit.KELVIN)
                      for _ in range(200)]
            return float(np.mean(repeatability_ci(traces).two_sigma.values))

        assert estimate(0.02) / estimate(0.01) == pytest.approx(2.0, rel=0.05)

    def test_needs_two(self, grid):
        with pytest.raises(DomainError):
            repeatability_ci([ScalarTrace.constant(grid, 1.0)])

    def test_grids_must_match(self, grid):
        other = FrequencyGrid.linspace(4e9, 8e9, 11)
        with pytest.raises(ValueError):
            repeatability_ci([ScalarTrace.constant(grid, 1.0), ScalarTrace.constant(other, 1.0)])
