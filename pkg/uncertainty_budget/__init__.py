from .budget import Aggregation, OperatingPoint, UncertaintyBudget
from .monte_carlo import MonteCarloResult, monte_carlo_tdut
from .propagation import (
    TERMS,
    UncertaintyResult,
    UncertaintyTerm,
    analytic_sensitivities,
    finite_difference_sensitivities,
    propagate_tdut,
    tdut_chain,
)
