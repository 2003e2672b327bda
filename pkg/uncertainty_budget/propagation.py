"""
First-order (RSS) propagation of the budget to T_DUT.

The measurement chain being linearised:

    T_in,hot  = T_hot/(L_A·L_c) + (1 − 1/L_c)·T_c/L_A + (1 − 1/L_A)·T_A
    T_in,cold = same with T_cold
    T_sys     = (T_in,hot − Y·T_in,cold)/(Y − 1)
    T_DUT     = T_sys − T_2/G

Y is the measured quantity and stays fixed. The physical temperatures T_c and
T_A enter through the cold state only; in the hot state they are held at
nominal (the hot input temperature is dominated by the excess noise).
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional

import numpy as np

from network_core import DbKind, DomainError

from .budget import Aggregation, OperatingPoint, UncertaintyBudget

logger = logging.getLogger(__name__)

LN10 = np.log(10.0)

# term name -> (budget field, unit)
TERMS = {
    "gain": ("sigma_gain_db", "dB"),
    "cable_loss": ("sigma_cable_loss_db", "dB"),
    "attenuator_loss": ("sigma_attenuator_loss_db", "dB"),
    "t_cable": ("sigma_t_cable_k", "K"),
    "t_a": ("sigma_t_a_k", "K"),
    "enr": ("sigma_enr_db", "dB"),
    "t_eff": ("sigma_t_eff_k", "K"),
}

EXCLUDED = {Aggregation.T_EFF: "enr", Aggregation.ENR: "t_eff"}


def _gain_factor(kind: DbKind) -> float:
    return 10.0 if DbKind(kind) is DbKind.POWER else 20.0


def tdut_chain(op: OperatingPoint, deltas: Optional[Mapping[str, np.ndarray]] = None,
               gain_db_kind: DbKind = DbKind.POWER):
    """T_DUT with parameters displaced by `deltas` (dB for dB terms, K otherwise).

    Vectorised over the delta arrays; no linearisation.
    """
    d = {name: 0.0 for name in TERMS}
    if deltas:
        d.update({k: np.asarray(v, dtype=float) for k, v in deltas.items()})
    l_a = op.l_a * np.power(10.0, d["attenuator_loss"] / 10.0)
    l_c = op.l_cable * np.power(10.0, d["cable_loss"] / 10.0)
    t_hot = op.t_cold + op.enr_linear * 290.0 * np.power(10.0, d["enr"] / 10.0)
    t_c = op.t_cable + d["t_cable"]
    t_a = op.t_a + d["t_a"]
    g = op.g_dut * np.power(10.0, d["gain"] / _gain_factor(gain_db_kind))
    t2 = op.t_second_stage + d["t_eff"]

    cable_weight = (1.0 - 1.0 / l_c) / l_a
    att_weight = 1.0 - 1.0 / l_a
    t_in_hot = t_hot / (l_a * l_c) + cable_weight * op.t_cable + att_weight * op.t_a
    t_in_cold = op.t_cold / (l_a * l_c) + cable_weight * t_c + att_weight * t_a
    t_sys = (t_in_hot - op.y * t_in_cold) / (op.y - 1.0)
    return t_sys - t2 / g


@dataclass(frozen=True)
class UncertaintyTerm:
    name: str
    sigma: float
    unit: str
    # ∂T_DUT/∂θ in K per unit of θ (K/dB for dB terms)
    sensitivity: float
    contribution_k: float
    included: bool

    def to_dict(self) -> dict:
        return dict(self.__dict__)


@dataclass(frozen=True)
class UncertaintyResult:
    sigma_k: float
    aggregation: Aggregation
    t_dut_k: float
    terms: List[UncertaintyTerm]
    totals: Dict[str, float] = field(default_factory=dict)

    def term(self, name: str) -> UncertaintyTerm:
        return next(t for t in self.terms if t.name == name)

    def to_dict(self) -> dict:
        return {
            "sigma_k": self.sigma_k,
            "aggregation": self.aggregation.value,
            "t_dut_k": self.t_dut_k,
            "totals": dict(self.totals),
            "terms": [t.to_dict() for t in self.terms],
        }


def analytic_sensitivities(op: OperatingPoint, gain_db_kind: DbKind = DbKind.POWER) -> Dict[str, float]:
    y, l_a, l_c = op.y, op.l_a, op.l_cable
    big_l = l_a * l_c
    db = LN10 / 10.0
    # d/dL_A and d/dL_c of the two input temperatures, hot physical temperatures at nominal
    dh_dla = -op.t_hot / (l_a * big_l) - (1.0 - 1.0 / l_c) * op.t_cable / l_a ** 2 + op.t_a / l_a ** 2
    dc_dla = -op.t_cold / (l_a * big_l) - (1.0 - 1.0 / l_c) * op.t_cable / l_a ** 2 + op.t_a / l_a ** 2
    dh_dlc = (op.t_cable - op.t_hot) / (l_c * big_l)
    dc_dlc = (op.t_cable - op.t_cold) / (l_c * big_l)
    inv = 1.0 / (y - 1.0)
    return {
        "gain": op.t_second_stage / op.g_dut * LN10 / _gain_factor(gain_db_kind),
        "cable_loss": (dh_dlc - y * dc_dlc) * inv * l_c * db,
        "attenuator_loss": (dh_dla - y * dc_dla) * inv * l_a * db,
        "t_cable": -y * inv * (1.0 - 1.0 / l_c) / l_a,
        "t_a": -y * inv * (1.0 - 1.0 / l_a),
        "enr": (op.t_hot - op.t_cold) / big_l * inv * db,
        "t_eff": -1.0 / op.g_dut,
    }


def finite_difference_sensitivities(op: OperatingPoint, gain_db_kind: DbKind = DbKind.POWER,
                                    step: float = 1e-5) -> Dict[str, float]:
    """Central differences of the exact chain; a self-test for the analytic form."""
    out = {}
    for name in TERMS:
        plus = tdut_chain(op, {name: step}, gain_db_kind)
        minus = tdut_chain(op, {name: -step}, gain_db_kind)
        out[name] = float((plus - minus) / (2.0 * step))
    return out


def _rss(terms: List[UncertaintyTerm], excluded: str) -> float:
    return float(np.sqrt(sum(t.contribution_k ** 2 for t in terms if t.name != excluded)))


def propagate_tdut(budget: UncertaintyBudget, op: OperatingPoint) -> UncertaintyResult:
    if op.y <= 1.0:
        raise DomainError("Y must be > 1 to propagate uncertainty")
    aggregation = Aggregation(budget.aggregation)
    sens = analytic_sensitivities(op, budget.gain_db_kind)
    excluded = EXCLUDED[aggregation]
    terms = []
    for name, (attr, unit) in TERMS.items():
        sigma = float(getattr(budget, attr))
        terms.append(UncertaintyTerm(
            name=name,
            sigma=sigma,
            unit=unit,
            sensitivity=float(sens[name]),
            contribution_k=abs(float(sens[name])) * sigma,
            included=name != excluded,
        ))
    totals = {mode.value: _rss(terms, EXCLUDED[mode]) for mode in Aggregation}
    result = UncertaintyResult(
        sigma_k=totals[aggregation.value],
        aggregation=aggregation,
        t_dut_k=float(tdut_chain(op, None, budget.gain_db_kind)),
        terms=terms,
        totals=totals,
    )
    alternative = EXCLUDED[aggregation]
    logger.info(
        f"σ(T_DUT) = {result.sigma_k * 1e3:.1f} mK ({aggregation.value}), "
        f"{totals[alternative] * 1e3:.1f} mK with {alternative} aggregation"
    )
    return result
