"""
Before/after-DUT loss tables for the analyzer's loss compensation.

The system thru loss (input run + output run, no DUT, no attenuator) is
split between the two tables; the cold attenuator, measured on a previous
cooldown, goes entirely into the before-DUT table.
"""

import logging
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from network_core import DomainError, ScalarTrace, Unit, from_db

logger = logging.getLogger(__name__)

DEFAULT_BEFORE_FRACTION = 0.5


@dataclass(frozen=True, eq=False)
class LossTables:
    before: ScalarTrace
    after: ScalarTrace
    t_loss: ScalarTrace
    # effective temperature of the after-DUT loss; defaults to T_Loss
    t_after: Optional[ScalarTrace] = None

    def __post_init__(self):
        grid = self.before.grid
        for trace in (self.after, self.t_loss):
            grid.require_same(trace.grid, "loss tables")
        if np.any(self.before.values < 0) or np.any(self.after.values < 0):
            raise DomainError("loss tables must be >= 0 dB")
        if self.t_after is None:
            object.__setattr__(self, "t_after", self.t_loss)
        grid.require_same(self.t_after.grid, "loss tables")

    @property
    def grid(self):
        return self.before.grid

    @property
    def before_linear(self) -> np.ndarray:
        return from_db(self.before.values)

    @property
    def after_linear(self) -> np.ndarray:
        return from_db(self.after.values)


def _as_trace(value: Union[float, ScalarTrace], like: ScalarTrace, unit: Unit) -> ScalarTrace:
    if isinstance(value, ScalarTrace):
        like.grid.require_same(value.grid, "loss-table inputs")
        return value
    return ScalarTrace.constant(like.grid, float(value), unit)


def build_loss_tables(system_thru_loss: ScalarTrace, attenuator_loss: Union[float, ScalarTrace],
                      t_loss: Union[float, ScalarTrace], before_fraction: float = DEFAULT_BEFORE_FRACTION,
                      t_after: Union[None, float, ScalarTrace] = None) -> LossTables:
    if not 0.0 <= before_fraction <= 1.0:
        raise DomainError("before_fraction must lie in [0, 1]")
    attenuator = _as_trace(attenuator_loss, system_thru_loss, Unit.DB)
    if np.any(system_thru_loss.values < 0) or np.any(attenuator.values < 0):
        raise DomainError("negative insertion loss in loss-table input")
    before = system_thru_loss.values * before_fraction + attenuator.values
    after = system_thru_loss.values - system_thru_loss.values * before_fraction
    tables = LossTables(
        before=ScalarTrace(system_thru_loss.grid, before, Unit.DB),
        after=ScalarTrace(system_thru_loss.grid, after, Unit.DB),
        t_loss=_as_trace(t_loss, system_thru_loss, Unit.KELVIN),
        t_after=None if t_after is None else _as_trace(t_after, system_thru_loss, Unit.KELVIN),
    )
    logger.info(
        f"Loss tables: before {before.min():.3f}-{before.max():.3f} dB, "
        f"after {after.min():.3f}-{after.max():.3f} dB"
    )
    return tables
