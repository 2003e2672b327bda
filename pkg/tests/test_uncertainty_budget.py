import pytest
from pydantic import ValidationError

from network_core import DomainError
from simlab import interpolate_knots, operating_point
from uncertainty_budget import (
    TERMS,
    Aggregation,
    OperatingPoint,
    UncertaintyBudget,
    analytic_sensitivities,
    finite_difference_sensitivities,
    monte_carlo_tdut,
    propagate_tdut,
    tdut_chain,
)


@pytest.fixture
def control_point(lna_c):
    return operating_point(lna_c, 6e9)


class TestBudget:
    def test_defaults(self):
        budget = UncertaintyBudget()
        assert budget.sigma_t_cable_k == 32.0
        assert budget.sigma_enr_db == 0.18
        assert budget.aggregation is Aggregation.T_EFF

    def test_negative_sigma_rejected(self):
        with pytest.raises(ValidationError):
            UncertaintyBudget(sigma_gain_db=-0.1)

    def test_operating_point_validation(self):
        with pytest.raises(ValidationError, match="hot source temperature"):
            OperatingPoint(y=2.0, t_hot=100.0, t_cold=296.0, l_a=1000.0, l_cable=2.0,
                           t_cable=210.0, t_a=3.2, g_dut=4000.0)
        with pytest.raises(ValidationError):
            OperatingPoint(y=0.9, t_hot=9466.6, t_cold=296.0, l_a=1000.0, l_cable=2.0,
                           t_cable=210.0, t_a=3.2, g_dut=4000.0)


class TestPropagation:
    def test_chain_returns_truth(self, lna_c, control_point):
        truth = interpolate_knots(lna_c.dut.noise_temperature_k, [control_point.frequency_hz])[0]
        assert tdut_chain(control_point) == pytest.approx(truth, abs=1e-9)

    def test_analytic_matches_finite_differences(self, control_point):
        analytic = analytic_sensitivities(control_point)
        numeric = finite_difference_sensitivities(control_point)
        for name in TERMS:
            assert analytic[name] == pytest.approx(numeric[name], rel=1e-4, abs=1e-9), name

    def test_control_point_sigma(self, lna_c, control_point):
        result = propagate_tdut(lna_c.budget, control_point)
        assert 0.120 <= result.sigma_k <= 0.180
        assert result.term("enr").included is False
        assert set(result.totals) == {"t_eff", "enr"}
        assert result.sigma_k == result.totals["t_eff"]

    def test_enr_aggregation(self, lna_c, control_point):
        budget = lna_c.budget.model_copy(update={"aggregation": Aggregation.ENR})
        result = propagate_tdut(budget, control_point)
        assert result.term("t_eff").included is False
        assert result.sigma_k == result.totals["enr"]

    def test_zero_budget(self, control_point):
        assert propagate_tdut(UncertaintyBudget.zero(), control_point).sigma_k == 0.0

    def test_single_term(self, control_point):
        result = propagate_tdut(UncertaintyBudget.zero(sigma_t_a_k=0.005), control_point)
        y = control_point.y
        expected = y / (y - 1.0) * (1.0 - 1.0 / control_point.l_a) * 0.005
        assert result.sigma_k == pytest.approx(expected, rel=1e-12)

    def test_amplitude_gain_convention(self, control_point):
        power = analytic_sensitivities(control_point)["gain"]
        amplitude = analytic_sensitivities(control_point, "amplitude")["gain"]
        assert amplitude == pytest.approx(power / 2.0)

    def test_result_serializes(self, lna_c, control_point):
        data = propagate_tdut(lna_c.budget, control_point).to_dict()
        assert data["aggregation"] == "t_eff"
        assert len(data["terms"]) == len(TERMS)


class TestMonteCarlo:
    def test_agrees_with_analytic(self, lna_c, control_point):
        analytic = propagate_tdut(lna_c.budget, control_point)
        mc = monte_carlo_tdut(lna_c.budget, control_point, n=100_000, seed=7)
        assert mc.sigma_k == pytest.approx(analytic.sigma_k, rel=0.10)
        assert mc.p025_k < mc.p500_k < mc.p975_k

    def test_seeded(self, lna_c, control_point):
        a = monte_carlo_tdut(lna_c.budget, control_point, n=20_000, seed=3)
        b = monte_carlo_tdut(lna_c.budget, control_point, n=20_000, seed=3)
        c = monte_carlo_tdut(lna_c.budget, control_point, n=20_000, seed=4)
        assert a == b
        assert a.sigma_k != c.sigma_k

    def test_enr_aggregation_override(self, lna_c, control_point):
        analytic = propagate_tdut(lna_c.budget, control_point)
        mc = monte_carlo_tdut(lna_c.budget, control_point, n=50_000, seed=11, aggregation=Aggregation.ENR)
        assert mc.aggregation is Aggregation.ENR
        assert mc.sigma_k == pytest.approx(analytic.totals["enr"], rel=0.10)

    def test_minimum_samples(self, lna_c, control_point):
        with pytest.raises(DomainError, match="n >= 10000"):
            monte_carlo_tdut(lna_c.budget, control_point, n=100)
