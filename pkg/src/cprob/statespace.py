"""Finite state spaces and one-step complex transition kernels.

A :class:`Kernel` is the complex analogue of a stochastic matrix: entry
``(r, c)`` is the complex probability of going from state ``r`` at time
``t`` to state ``c`` at ``t + step``, and every row sums to one. Kernels are
validated explicitly with :func:`validate_kernel` so that callers (the
scenario parser in particular) can report every bad row at once;
:func:`compose` and :func:`evolve` assume their inputs were validated.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import (
    DimensionMismatch,
    DuplicateLabel,
    EmptySpace,
    InvalidKernel,
    SpaceMismatch,
    StepMismatch,
    TooLarge,
    UnknownLabel,
)

ROW_SUM_TOL = 1e-10
INIT_SUM_TOL = 1e-10
MAX_ORACLE_STEPS = 8
MAX_ORACLE_DIM = 12

#: separator used for labels of product spaces, e.g. ``"m1|h"``
PRODUCT_SEP = "|"


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=complex)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class StateSpace:
    """Ordered set of mutually exclusive state labels."""

    labels: tuple[str, ...]
    _index: dict = field(init=False, repr=False, compare=False, hash=False)

    def __post_init__(self):
        labels = tuple(self.labels)
        object.__setattr__(self, "labels", labels)
        if not labels:
            raise EmptySpace("a state space needs at least one label")
        seen = set()
        for lab in labels:
            if lab in seen:
                raise DuplicateLabel(f"label {lab!r} appears more than once")
            seen.add(lab)
        object.__setattr__(self, "_index", {lab: i for i, lab in enumerate(labels)})

    @property
    def dimension(self) -> int:
        return len(self.labels)

    def __len__(self) -> int:
        return len(self.labels)

    def __contains__(self, label) -> bool:
        return label in self._index

    def index(self, label: str) -> int:
        try:
            return self._index[label]
        except KeyError:
            raise UnknownLabel(f"unknown state {label!r}") from None

    def delta(self, label: str) -> np.ndarray:
        """Vector that is certain of ``label``."""
        v = np.zeros(self.dimension, dtype=complex)
        v[self.index(label)] = 1.0
        return v

    def prop(self, members: Iterable[str] | str, time: int | None = None) -> "Proposition":
        if isinstance(members, str):
            members = [members]
        return Proposition(self, frozenset(members), time)

    def identity(self, step: float = 1.0, name: str = "") -> "Kernel":
        return Kernel(self, np.eye(self.dimension, dtype=complex), step, name)

    def product(self, other: "StateSpace") -> "StateSpace":
        return StateSpace(tuple(f"{a}{PRODUCT_SEP}{b}" for a in self.labels for b in other.labels))


def make_space(labels: Sequence[str]) -> StateSpace:
    return StateSpace(tuple(labels))


@dataclass(frozen=True)
class Proposition:
    """Disjunction of state propositions at one chain slot.

    ``time_index`` counts kernels applied since the chain start; ``None``
    means the end of whatever chain it is evaluated against.
    """

    space: StateSpace
    members: frozenset
    time_index: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "members", frozenset(self.members))
        if not self.members:
            raise ValueError("a proposition needs at least one member state")
        for m in self.members:
            self.space.index(m)
        if self.time_index is not None and self.time_index < 0:
            raise ValueError("time_index must be non-negative")

    def mask(self) -> np.ndarray:
        m = np.zeros(self.space.dimension, dtype=bool)
        for lab in self.members:
            m[self.space.index(lab)] = True
        return m

    def ordered_members(self) -> list[str]:
        return [lab for lab in self.space.labels if lab in self.members]


@dataclass(frozen=True, eq=False)
class Kernel:
    """One-time-step complex transition table over a state space."""

    space: StateSpace
    entries: np.ndarray
    step: float = 1.0
    name: str = ""

    def __post_init__(self):
        a = _frozen(self.entries)
        n = self.space.dimension
        if a.shape != (n, n):
            raise DimensionMismatch(f"kernel table has shape {a.shape}, space has dimension {n}")
        if not self.step > 0:
            raise ValueError(f"kernel step must be positive, got {self.step}")
        object.__setattr__(self, "entries", a)

    @classmethod
    def from_rows(cls, space: StateSpace, rows: Mapping[str, Mapping[str, complex] | str],
                  step: float = 1.0, name: str = "") -> "Kernel":
        """Build from ``{from: {to: value}}``; the string ``"identity"`` marks a stay-put row.

        Rows that are not mentioned are left as zeros (and will fail validation).
        """
        a = np.zeros((space.dimension, space.dimension), dtype=complex)
        for src, row in rows.items():
            i = space.index(src)
            if isinstance(row, str):
                if row != "identity":
                    raise ValueError(f"unknown row shorthand {row!r}")
                a[i, i] = 1.0
                continue
            for dst, val in row.items():
                a[i, space.index(dst)] = val
        return cls(space, a, step, name)

    def __eq__(self, other):
        if not isinstance(other, Kernel):
            return NotImplemented
        return (self.space == other.space and self.step == other.step
                and np.array_equal(self.entries, other.entries))

    __hash__ = None

    def row(self, label: str) -> np.ndarray:
        return self.entries[self.space.index(label)]

    def entry(self, src: str, dst: str) -> complex:
        return complex(self.entries[self.space.index(src), self.space.index(dst)])


@dataclass(frozen=True)
class RowViolation:
    label: str
    row_sum: complex
    deviation: float


@dataclass(frozen=True)
class KernelReport:
    kernel_name: str
    violations: tuple[RowViolation, ...] = ()
    nonfinite_rows: tuple[str, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.violations and not self.nonfinite_rows

    def __str__(self):
        if self.ok:
            return f"kernel {self.kernel_name or '<unnamed>'}: valid"
        parts = [f"row {v.label!r} sums to {v.row_sum:.12g} (deviation {v.deviation:.3g})"
                 for v in self.violations]
        parts += [f"row {lab!r} has non-finite entries" for lab in self.nonfinite_rows]
        return f"kernel {self.kernel_name or '<unnamed>'}: " + "; ".join(parts)


def validate_kernel(k: Kernel, tol: float = ROW_SUM_TOL) -> KernelReport:
    """List every row whose sum deviates from 1 by more than ``tol``."""
    finite = np.isfinite(k.entries).all(axis=1)
    sums = k.entries.sum(axis=1)
    dev = np.abs(sums - 1.0)
    violations = tuple(
        RowViolation(k.space.labels[i], complex(sums[i]), float(dev[i]))
        for i in range(k.space.dimension)
        if finite[i] and dev[i] > tol
    )
    nonfinite = tuple(k.space.labels[i] for i in np.flatnonzero(~finite))
    return KernelReport(k.name, violations, nonfinite)


def require_valid(k: Kernel, tol: float = ROW_SUM_TOL) -> Kernel:
    report = validate_kernel(k, tol)
    if not report.ok:
        raise InvalidKernel(report)
    return k


@dataclass(frozen=True)
class KernelChain:
    """Kernels applied in order, all over ``space``."""

    space: StateSpace
    kernels: tuple[Kernel, ...] = ()
    start_time: float = 0.0

    def __post_init__(self):
        kernels = tuple(self.kernels)
        object.__setattr__(self, "kernels", kernels)
        for k in kernels:
            if k.space != self.space:
                raise SpaceMismatch(f"kernel {k.name or '<unnamed>'} is over a different state space")

    @classmethod
    def of(cls, *kernels: Kernel, start_time: float = 0.0) -> "KernelChain":
        if not kernels:
            raise ValueError("use KernelChain(space) for an empty chain")
        return cls(kernels[0].space, kernels, start_time)

    def __len__(self) -> int:
        return len(self.kernels)

    def __iter__(self):
        return iter(self.kernels)

    def __getitem__(self, item):
        if isinstance(item, slice):
            return KernelChain(self.space, self.kernels[item], self.start_time)
        return self.kernels[item]

    @property
    def times(self) -> list[float]:
        """Absolute time of each slot, ``len(self) + 1`` values."""
        out = [self.start_time]
        for k in self.kernels:
            out.append(out[-1] + k.step)
        return out

    def composed(self) -> Kernel:
        """The whole chain collapsed into one kernel."""
        if not self.kernels:
            return self.space.identity()
        out = self.kernels[0]
        for k in self.kernels[1:]:
            out = compose(out, k)
        return out


def compose(k1: Kernel, k2: Kernel) -> Kernel:
    """Marginalize over the intermediate time: ``(x->z) = sum_y (x->y)(y->z)``."""
    if k1.space != k2.space:
        raise SpaceMismatch("cannot compose kernels over different state spaces")
    name = f"{k1.name}*{k2.name}" if k1.name and k2.name else ""
    return Kernel(k1.space, k1.entries @ k2.entries, k1.step + k2.step, name)


def propagate(init: np.ndarray, chain: KernelChain) -> np.ndarray:
    """Contract ``init`` through the chain without checking its normalization."""
    v = np.asarray(init, dtype=complex)
    if v.shape != (chain.space.dimension,):
        raise DimensionMismatch(
            f"initial vector has shape {v.shape}, space has dimension {chain.space.dimension}")
    for k in chain.kernels:
        v = v @ k.entries
    return v


def evolve(init: np.ndarray, chain: KernelChain, tol: float = INIT_SUM_TOL) -> np.ndarray:
    """Complex probabilities ``(a -> x)`` at the end of the chain.

    ``init`` is itself a row of complex probabilities and must sum to one.
    """
    v = np.asarray(init, dtype=complex)
    if v.shape != (chain.space.dimension,):
        raise DimensionMismatch(
            f"initial vector has shape {v.shape}, space has dimension {chain.space.dimension}")
    if abs(v.sum() - 1) > tol:
        raise ValueError(f"initial vector sums to {v.sum():.12g}, expected 1")
    return propagate(v, chain)


def _check_oracle_caps(chain: KernelChain, max_steps: int | None, max_dim: int | None):
    n, d = len(chain), chain.space.dimension
    if max_steps is not None and n > max_steps:
        raise TooLarge(f"chain has {n} steps, oracle cap is {max_steps}")
    if max_dim is not None and d > max_dim:
        raise TooLarge(f"space has dimension {d}, oracle cap is {max_dim}")


def _path_products(chain: KernelChain, paths: np.ndarray) -> np.ndarray:
    vals = np.ones(paths.shape[0], dtype=complex)
    for t, k in enumerate(chain.kernels):
        vals = vals * k.entries[paths[:, t], paths[:, t + 1]]
    return vals


def enumerate_paths(chain: KernelChain, src: str, dst: str, *,
                    max_steps: int | None = MAX_ORACLE_STEPS,
                    max_dim: int | None = MAX_ORACLE_DIM) -> list[tuple[tuple[str, ...], complex]]:
    """Every intermediate-state assignment from ``src`` to ``dst`` with its path value.

    Brute force: for an ``n``-step chain over ``d`` states there are
    ``d**(n-1)`` paths. This is the independent oracle for :func:`compose`.
    """
    _check_oracle_caps(chain, max_steps, max_dim)
    space = chain.space
    i, j = space.index(src), space.index(dst)
    n, d = len(chain), space.dimension
    if n == 0:
        return [((src,), 1 + 0j if i == j else 0j)]
    mids = np.array(list(itertools.product(range(d), repeat=n - 1)), dtype=np.intp).reshape(d ** (n - 1), n - 1)
    paths = np.empty((mids.shape[0], n + 1), dtype=np.intp)
    paths[:, 0] = i
    paths[:, 1:n] = mids
    paths[:, n] = j
    vals = _path_products(chain, paths)
    labels = space.labels
    return [(tuple(labels[s] for s in p), complex(v)) for p, v in zip(paths.tolist(), vals)]


def path_sum_matrix(chain: KernelChain, *, max_steps: int | None = MAX_ORACLE_STEPS,
                    max_dim: int | None = MAX_ORACLE_DIM) -> np.ndarray:
    """Sum of path values for every (start, end) pair by explicit enumeration."""
    _check_oracle_caps(chain, max_steps, max_dim)
    n, d = len(chain), chain.space.dimension
    if n == 0:
        return np.eye(d, dtype=complex)
    paths = np.indices((d,) * (n + 1)).reshape(n + 1, -1).T
    vals = _path_products(chain, paths)
    out = np.zeros((d, d), dtype=complex)
    np.add.at(out, (paths[:, 0], paths[:, -1]), vals)
    return out


def tensor(ka: Kernel, kb: Kernel) -> Kernel:
    """Kernel of two independent subsystems on the product space.

    ``entry((x,u),(y,v)) = ka(x,y) * kb(u,v)``; product labels are ``"x|u"``.
    """
    if ka.step != kb.step:
        raise StepMismatch(f"steps differ: {ka.step} vs {kb.step}")
    name = f"{ka.name}x{kb.name}" if ka.name and kb.name else ""
    return Kernel(ka.space.product(kb.space), np.kron(ka.entries, kb.entries), ka.step, name)


def marginalize(k: Kernel, first: StateSpace, second: StateSpace, keep: str = "first",
                given: int = 0) -> Kernel:
    """Sum a product-space kernel over the destination states of one factor.

    The source state of the dropped factor is fixed at index ``given``. For a
    kernel built by :func:`tensor` with a valid dropped factor the result is
    the kept factor exactly.
    """
    if k.space != first.product(second):
        raise SpaceMismatch("kernel is not over first x second")
    a = k.entries.reshape(first.dimension, second.dimension, first.dimension, second.dimension)
    if keep == "first":
        return Kernel(first, a[:, given, :, :].sum(axis=2), k.step)
    if keep == "second":
        return Kernel(second, a[given, :, :, :].sum(axis=1), k.step)
    raise ValueError("keep must be 'first' or 'second'")
