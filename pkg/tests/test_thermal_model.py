import numpy as np
import pytest
from numpy.testing import assert_allclose
from scipy import integrate

from network_core import DomainError, MaterialRangeError, ScalarTrace, Unit, from_db
from simlab import VirtualTestbed
from thermal_model import (
    CableSection,
    CableThermalSpec,
    LossWeighting,
    Referred,
    build_profile,
    distribute_loss,
    effective_temperature,
    fit_lumped_temperature,
    integrated_cable_noise,
    load_material,
    t_loss,
    temperature_at,
    temperature_profile,
)


def section(grid, material="becu", t_hot=296.0, t_cold=50.0, loss_db=1.0, **kwargs) -> CableSection:
    return CableSection(load_material(material), 0.5, t_hot, t_cold,
                        ScalarTrace.constant(grid, loss_db, Unit.DB), **kwargs)


class TestMaterials:
    @pytest.mark.parametrize("name", ["cu_rrr100", "becu"])
    def test_conductivity_integral_matches_quadrature(self, name):
        mat = load_material(name)
        for t in (4.0, 50.0, 296.0):
            expected, _ = integrate.quad(mat.k, mat.t_min, t, limit=200)
            assert mat.conductivity_integral(t) == pytest.approx(expected, rel=1e-6)

    @pytest.mark.parametrize("name", ["cu_rrr100", "becu"])
    def test_inverse_integral(self, name):
        mat = load_material(name)
        t = np.geomspace(mat.t_min, mat.t_max, 50)
        assert_allclose(mat.inverse_conductivity_integral(mat.conductivity_integral(t)), t, rtol=1e-10)

    def test_out_of_table(self):
        mat = load_material("becu")
        with pytest.raises(MaterialRangeError, match="outside table range"):
            mat.k(mat.t_max * 2)

    def test_unknown_material(self):
        with pytest.raises(KeyError, match="bundled"):
            load_material("unobtainium")

    def test_copper_conducts_better_than_becu(self):
        assert load_material("cu_rrr100").k(4.0) > 100 * load_material("becu").k(4.0)


class TestTemperatureProfile:
    def test_endpoints(self, grid):
        sec = section(grid)
        assert_allclose(temperature_at(sec, [0.0, 1.0]), [296.0, 50.0])

    def test_monotonic_and_bounded(self, grid):
        temps = temperature_profile(section(grid), 200)
        assert np.all(np.diff(temps) < 0)
        assert temps.min() > 50.0 and temps.max() < 296.0

    def test_cold_end_first_reverses(self, grid):
        hot_first = temperature_profile(section(grid), 100)
        cold_first = temperature_profile(section(grid, cold_end_first=True), 100)
        assert_allclose(cold_first, hot_first[::-1])

    def test_steeper_near_cold_end_for_rising_conductivity(self, grid):
        # k grows with T, so the hot half carries the heat with a smaller gradient
        t_mid = float(temperature_at(section(grid), 0.5))
        assert t_mid > 0.5 * (296.0 + 50.0)

    def test_rejects_inverted_section(self, grid):
        with pytest.raises(DomainError, match="below cold-end"):
            section(grid, t_hot=50.0, t_cold=296.0)


class TestLossDistribution:
    @pytest.mark.parametrize("weighting", list(LossWeighting))
    def test_elements_add_to_section_loss(self, grid, weighting):
        sec = section(grid, "cu_rrr100", loss_db=1.6)
        losses = distribute_loss(sec, temperature_profile(sec, 500), grid.points, weighting)
        assert losses.shape == (len(grid), 500)
        assert_allclose(10 * np.log10(losses).sum(axis=1), 1.6, rtol=1e-12)

    def test_sqrt_rho_puts_loss_where_warm(self, grid):
        sec = section(grid, "cu_rrr100", t_hot=296.0, t_cold=4.0)
        losses = distribute_loss(sec, temperature_profile(sec, 100), grid.points)
        assert losses[0, 0] > losses[0, -1]


class TestCableNoise:
    def test_isothermal_run(self, grid):
        sec = section(grid, "cu_rrr100", t_hot=296.0, t_cold=296.0, loss_db=2.0)
        profile = build_profile(CableThermalSpec([sec], 1000))
        assert_allclose(integrated_cable_noise(profile).values, (from_db(2.0) - 1) * 296.0, rtol=1e-9)
        assert_allclose(effective_temperature(profile).values, 296.0, rtol=1e-9)

    def test_single_element(self, grid):
        sec = section(grid, loss_db=3.0)
        profile = build_profile(CableThermalSpec([sec], 1))
        t_mid = float(temperature_at(sec, 0.5))
        assert_allclose(integrated_cable_noise(profile).values, (from_db(3.0) - 1) * t_mid, rtol=1e-12)

    def test_output_referred(self, grid):
        profile = build_profile(CableThermalSpec([section(grid)], 100))
        t_in = integrated_cable_noise(profile, Referred.INPUT).values
        t_out = integrated_cable_noise(profile, Referred.OUTPUT).values
        assert_allclose(t_out, t_in / profile.total_loss.values)

    def test_lossless_run_has_no_temperature(self, grid):
        profile = build_profile(CableThermalSpec([section(grid, loss_db=0.0)], 10))
        assert np.all(np.isnan(effective_temperature(profile).values))
        with pytest.raises(DomainError, match="lossless"):
            fit_lumped_temperature(integrated_cable_noise(profile), profile.total_loss)

    def test_fit_recovers_synthetic_temperature(self, grid):
        l_cable = ScalarTrace(grid, np.linspace(1.5, 2.5, len(grid)))
        t_eff = l_cable.with_values((l_cable.values - 1.0) * 187.5, Unit.KELVIN)
        assert fit_lumped_temperature(t_eff, l_cable) == pytest.approx(187.5)

    def test_testbed_input_run(self, lna_c):
        testbed = VirtualTestbed(lna_c)
        profile = testbed.input_profile
        assert profile.temperatures.size == 3000
        t_cable = fit_lumped_temperature(testbed.input_cable_noise, profile.total_loss)
        assert 180.0 <= t_cable <= 240.0

    def test_concatenate_is_one_cascade(self, lna_c):
        testbed = VirtualTestbed(lna_c)
        joined = testbed.input_profile.concatenate(testbed.output_profile)
        expected = (testbed.input_cable_noise.values
                    + testbed.output_cable_noise.values * testbed.input_profile.total_loss.values)
        assert_allclose(integrated_cable_noise(joined).values, expected, rtol=1e-10)


class TestTLoss:
    def test_hand_example(self):
        assert t_loss(2.0, 210.0, 1000.0, 3.2) == pytest.approx(3.3034, abs=1e-4)

    def test_equal_temperatures(self):
        assert t_loss(1.6, 4.0, 10.0, 4.0) == pytest.approx(4.0)

    def test_rejects_gain(self):
        with pytest.raises(DomainError):
            t_loss(0.5, 210.0, 1000.0, 3.2)
