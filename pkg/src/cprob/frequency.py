"""Observable frequencies from complex probabilities.

Only ratios of squared magnitudes are observable. For a finite state space
the frequency of target ``b`` at the query time is::

    sum_{x in b} |v_x|^2 / sum_{x in U} |v_x|^2

with ``v`` the complex probabilities ``(a -> x)`` at that time. The
denominator runs over all of ``U``; nothing is post-selected.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import BadPartition, DegenerateDenominator
from .statespace import (
    MAX_ORACLE_DIM,
    MAX_ORACLE_STEPS,
    KernelChain,
    Proposition,
    enumerate_paths,
    propagate,
)

DENOMINATOR_TOL = 1e-15
PARTITION_SUM_TOL = 1e-12


@dataclass(frozen=True)
class FrequencyResult:
    value: float
    numerator: float
    denominator: float


def _amplitudes_at(init, chain: KernelChain, time_index: int | None) -> np.ndarray:
    t = len(chain) if time_index is None else time_index
    if t > len(chain):
        raise ValueError(f"time index {t} is past the end of a {len(chain)}-step chain")
    return propagate(init, chain[:t])


def _frequency(weights: np.ndarray, mask: np.ndarray, tol: float) -> FrequencyResult:
    den = float(weights.sum())
    if not den > tol:
        raise DegenerateDenominator(f"total squared magnitude {den:.3g} is below {tol:g}")
    num = float(weights[mask].sum())
    return FrequencyResult(min(num / den, 1.0), num, den)


def prob(init, target: Proposition, chain: KernelChain, *, tol: float = DENOMINATOR_TOL) -> FrequencyResult:
    """Predicted frequency that ``target`` holds at its time slot."""
    if target.space != chain.space:
        raise ValueError("target proposition is over a different state space")
    v = _amplitudes_at(init, chain, target.time_index)
    return _frequency(np.abs(v) ** 2, target.mask(), tol)


def distribution(init, partition: Sequence[Proposition], chain: KernelChain, *,
                 tol: float = DENOMINATOR_TOL) -> list[float]:
    """Frequencies of each cell of a partition of ``U`` at one time slot.

    Cells must be pairwise disjoint, cover the space and share a time index;
    propositions at mixed times have no frequency interpretation.
    """
    if not partition:
        raise BadPartition("empty partition")
    space = chain.space
    times = {p.time_index for p in partition}
    if len(times) != 1:
        raise BadPartition(f"cells refer to different times {sorted(map(str, times))}")
    covered = np.zeros(space.dimension, dtype=int)
    for cell in partition:
        if cell.space != space:
            raise BadPartition("cell is over a different state space")
        covered += cell.mask()
    if (covered > 1).any():
        dup = [space.labels[i] for i in np.flatnonzero(covered > 1)]
        raise BadPartition(f"cells overlap on {dup}")
    if (covered == 0).any():
        missing = [space.labels[i] for i in np.flatnonzero(covered == 0)]
        raise BadPartition(f"cells do not cover {missing}")
    weights = np.abs(_amplitudes_at(init, chain, times.pop())) ** 2
    return [_frequency(weights, cell.mask(), tol).value for cell in partition]


def interference_deficit(chain: KernelChain, src: str, dst: str, *,
                         max_steps: int | None = MAX_ORACLE_STEPS,
                         max_dim: int | None = MAX_ORACLE_DIM) -> float:
    """Incoherent minus coherent path weight at one endpoint.

    ``sum |path|^2 - |sum path|^2``: zero when nothing cancels or reinforces,
    positive for destructive and negative for constructive interference.
    """
    vals = np.array([v for _, v in enumerate_paths(chain, src, dst, max_steps=max_steps, max_dim=max_dim)])
    return float(np.sum(np.abs(vals) ** 2) - abs(vals.sum()) ** 2)
