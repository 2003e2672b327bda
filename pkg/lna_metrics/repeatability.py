import logging
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from network_core import DomainError, ScalarTrace

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class RepeatabilityResult:
    mean: ScalarTrace
    # two sample standard deviations, labelled 2σ (not a t-based interval)
    two_sigma: ScalarTrace
    count: int

    def max_two_sigma(self, f_low: float, f_high: float) -> float:
        return float(np.nanmax(self.two_sigma.band(f_low, f_high)))


def repeatability_ci(traces: Sequence[ScalarTrace]) -> RepeatabilityResult:
    """Per-frequency mean and 2σ (ddof=1) over K repeated traces."""
    if len(traces) < 2:
        raise DomainError("repeatability needs at least two traces")
    grid = traces[0].grid
    for trace in traces[1:]:
        grid.require_same(trace.grid, "repeatability traces")
        if trace.unit is not traces[0].unit:
            raise DomainError("repeatability traces carry different units")
    stack = np.vstack([t.values for t in traces])
    mean = stack.mean(axis=0)
    two_sigma = 2.0 * stack.std(axis=0, ddof=1)
    logger.info(f"Repeatability over {len(traces)} runs: max 2σ {np.nanmax(two_sigma):.4g}")
    unit = traces[0].unit
    return RepeatabilityResult(ScalarTrace(grid, mean, unit), ScalarTrace(grid, two_sigma, unit), len(traces))
