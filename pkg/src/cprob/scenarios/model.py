from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from ..errors import RowSumViolation, SpaceMismatch, UnknownParameter
from ..frequency import DENOMINATOR_TOL, FrequencyResult, interference_deficit, prob
from ..statespace import INIT_SUM_TOL, ROW_SUM_TOL, KernelChain, Proposition, StateSpace, require_valid


@dataclass(eq=False)
class Scenario:
    """An experiment compiled to a kernel chain.

    ``rebuild`` maps a full parameter dict to a fresh scenario; it is what
    makes parameter scans possible for both built-in and file scenarios.
    """

    space: StateSpace
    init: np.ndarray
    chain: KernelChain
    queries: dict[str, Proposition]
    params: dict[str, float] = field(default_factory=dict)
    name: str = ""
    origin: str | None = None
    rebuild: Callable[[dict], "Scenario"] | None = field(default=None, repr=False)
    row_tol: float = field(default=ROW_SUM_TOL, repr=False)

    def __post_init__(self):
        self.init = np.asarray(self.init, dtype=complex)
        self.init.setflags(write=False)
        if self.chain.space != self.space:
            raise SpaceMismatch("chain is over a different state space")
        if self.init.shape != (self.space.dimension,):
            raise ValueError(f"init has shape {self.init.shape}, expected ({self.space.dimension},)")
        total = self.init.sum()
        if abs(total - 1) > INIT_SUM_TOL:
            raise RowSumViolation(f"initial complex probabilities sum to {total:.12g}, expected 1")
        for k in self.chain:
            require_valid(k, self.row_tol)
        for qname, q in self.queries.items():
            if q.space != self.space:
                raise SpaceMismatch(f"query {qname!r} is over a different state space")
            if q.time_index is not None and q.time_index > len(self.chain):
                raise ValueError(f"query {qname!r} refers to time {q.time_index} past the chain end")

    def __eq__(self, other):
        if not isinstance(other, Scenario):
            return NotImplemented
        return (self.space == other.space
                and np.array_equal(self.init, other.init)
                and self.chain == other.chain
                and self.queries == other.queries
                and self.params == other.params)

    __hash__ = None

    def init_label(self) -> str | None:
        """The certain initial state, or ``None`` when ``init`` is a superposition."""
        nz = np.flatnonzero(self.init)
        if len(nz) == 1 and self.init[nz[0]] == 1:
            return self.space.labels[nz[0]]
        return None

    def with_params(self, **updates: float) -> "Scenario":
        for key in updates:
            if key not in self.params:
                raise UnknownParameter(
                    f"scenario {self.name or '<unnamed>'} has no parameter {key!r}"
                    f" (declared: {', '.join(sorted(self.params)) or 'none'})")
        if self.rebuild is None:
            raise UnknownParameter(f"scenario {self.name or '<unnamed>'} cannot be rebuilt with new parameters")
        return self.rebuild({**self.params, **updates})


@dataclass
class ScenarioResult:
    frequencies: dict[str, FrequencyResult]
    deficits: dict[str, float]
    metadata: dict = field(default_factory=dict, compare=False)


def run(s: Scenario, *, tol: float = DENOMINATOR_TOL, max_paths: int = 100_000) -> ScenarioResult:
    """Evaluate every query and, when the path count allows, every endpoint's interference deficit.

    Deficits need a certain initial state; they are keyed by endpoint label
    at the end of the chain.
    """
    started = time.time()
    freqs = {name: prob(s.init, q, s.chain, tol=tol) for name, q in s.queries.items()}
    deficits: dict[str, float] = {}
    src = s.init_label()
    n, d = len(s.chain), s.space.dimension
    if src is not None and n > 0 and d ** (n - 1) <= max_paths:
        for label in s.space.labels:
            deficits[label] = interference_deficit(s.chain, src, label, max_steps=None, max_dim=None)
    meta = {"scenario": s.name, "params": dict(s.params), "started": started,
            "elapsed": time.time() - started}
    return ScenarioResult(freqs, deficits, meta)
