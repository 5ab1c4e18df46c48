from __future__ import annotations

import numpy as np
import pytest
from hypothesis import settings

from cprob.statespace import Kernel, StateSpace

settings.register_profile("cprob", max_examples=60, deadline=None)
settings.load_profile("cprob")

A = complex(0.5, -0.5)
B = complex(0.5, 0.5)


def random_kernel(rng, space: StateSpace, name: str = "") -> Kernel:
    d = space.dimension
    e = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    e[:, -1] += 1 - e.sum(axis=1)
    return Kernel(space, e, name=name)


def labels(n: int, prefix: str = "s") -> StateSpace:
    return StateSpace(tuple(f"{prefix}{i}" for i in range(n)))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(RESULTS):
        ok, detail = RESULTS[n]
        terminalreporter.write_line(f"AC{n} {'PASS' if ok else 'FAIL'}: {detail}")
