import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

from network_core import DomainError

from .budget import Aggregation, OperatingPoint, UncertaintyBudget
from .propagation import EXCLUDED, TERMS, tdut_chain

logger = logging.getLogger(__name__)

MIN_SAMPLES = 10_000
CHUNK_SIZE = 10_000


@dataclass(frozen=True)
class MonteCarloResult:
    sigma_k: float
    mean_k: float
    nominal_k: float
    p025_k: float
    p500_k: float
    p975_k: float
    n: int
    seed: int
    aggregation: Aggregation

    def to_dict(self) -> dict:
        out = dict(self.__dict__)
        out["aggregation"] = self.aggregation.value
        return out


def _chunk_samples(budget: UncertaintyBudget, op: OperatingPoint, size: int,
                   rng: np.random.Generator, excluded: str) -> np.ndarray:
    # every term is drawn even when its sigma is zero so a chunk's stream does not depend on the budget
    deltas = {}
    for name, (attr, _) in TERMS.items():
        z = rng.standard_normal(size)
        sigma = 0.0 if name == excluded else float(getattr(budget, attr))
        deltas[name] = z * sigma
    return tdut_chain(op, deltas, budget.gain_db_kind)


def monte_carlo_tdut(budget: UncertaintyBudget, op: OperatingPoint, n: int = 100_000, seed: int = 0,
                     chunk_size: int = CHUNK_SIZE, aggregation: Optional[Aggregation] = None) -> MonteCarloResult:
    """Sample spread of T_DUT under independent Gaussian parameter errors.

    Chunk i draws from SeedSequence(seed, spawn_key=(i,)), so the result does
    not depend on how chunks are scheduled.
    """
    if n < MIN_SAMPLES:
        raise DomainError(f"Monte Carlo needs n >= {MIN_SAMPLES}, got {n}")
    if chunk_size < 1:
        raise DomainError("chunk_size must be >= 1")
    aggregation = Aggregation(aggregation or budget.aggregation)
    excluded = EXCLUDED[aggregation]
    chunks = []
    for index, start in enumerate(range(0, n, chunk_size)):
        rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(index,)))
        chunks.append(_chunk_samples(budget, op, min(chunk_size, n - start), rng, excluded))
    samples = np.concatenate(chunks)
    p025, p500, p975 = np.percentile(samples, [2.5, 50.0, 97.5])
    result = MonteCarloResult(
        sigma_k=float(samples.std(ddof=1)),
        mean_k=float(samples.mean()),
        nominal_k=float(tdut_chain(op, None, budget.gain_db_kind)),
        p025_k=float(p025),
        p500_k=float(p500),
        p975_k=float(p975),
        n=n,
        seed=seed,
        aggregation=aggregation,
    )
    logger.info(f"Monte Carlo σ(T_DUT) = {result.sigma_k * 1e3:.1f} mK over {n} samples (seed {seed})")
    return result
