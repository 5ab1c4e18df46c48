from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cprob.errors import BadPartition, DegenerateDenominator
from cprob.frequency import distribution, interference_deficit, prob
from cprob.scenarios import build_mach_zehnder, build_which_path
from cprob.statespace import Kernel, KernelChain, StateSpace, enumerate_paths

from conftest import A, B, labels, random_kernel


def test_prob_all_of_space_is_one(rng):
    space = labels(4)
    ch = KernelChain.of(random_kernel(rng, space), random_kernel(rng, space))
    r = prob(space.delta("s0"), space.prop(space.labels), ch)
    assert r.value == 1.0
    assert r.numerator == r.denominator


def test_prob_mach_zehnder():
    s = build_mach_zehnder()
    assert prob(s.init, s.space.prop("d1"), s.chain).value == 1.0
    assert prob(s.init, s.space.prop("d2"), s.chain).value == 0.0


def test_prob_which_path_perfect():
    s = build_which_path(1.0)
    r = prob(s.init, s.space.prop(["d2|h", "d2|n"]), s.chain)
    assert abs(r.value - 0.5) <= 1e-12


def test_prob_intermediate_time():
    s = build_mach_zehnder()
    # after the first splitter the particle is at either mirror with equal frequency
    assert prob(s.init, s.space.prop("m1", time=1), s.chain).value == pytest.approx(0.5, abs=1e-15)
    with pytest.raises(ValueError):
        prob(s.init, s.space.prop("m1", time=3), s.chain)


def test_prob_degenerate_denominator():
    two = StateSpace(("x", "y"))
    ch = KernelChain.of(two.identity())
    with pytest.raises(DegenerateDenominator):
        prob(np.zeros(2), two.prop("x"), ch)


def test_distribution_examples():
    two = StateSpace(("x", "y"))
    ch = KernelChain.of(Kernel(two, [[A, B], [0, 1]]))
    assert distribution(two.delta("x"), [two.prop("x"), two.prop("y")], ch) == [0.5, 0.5]

    mz = build_mach_zehnder()
    rest = mz.space.prop(["src", "m1", "m2"])
    fr = distribution(mz.init, [mz.space.prop("d1"), mz.space.prop("d2"), rest], mz.chain)
    assert fr == [1.0, 0.0, 0.0]

    wp = build_which_path(0.5)
    cells = [wp.queries["d1"], wp.queries["d2"],
             wp.space.prop([lab for lab in wp.space.labels if not lab.startswith("d")])]
    fr = distribution(wp.init, cells, wp.chain)
    assert fr[0] == pytest.approx(0.8, abs=1e-12)
    assert fr[1] == pytest.approx(0.2, abs=1e-12)


def test_distribution_rejects_bad_partitions():
    mz = build_mach_zehnder()
    sp = mz.space
    with pytest.raises(BadPartition):
        distribution(mz.init, [sp.prop(["d1", "d2"]), sp.prop("d2"), sp.prop(["src", "m1", "m2"])], mz.chain)
    with pytest.raises(BadPartition):
        distribution(mz.init, [sp.prop("d1"), sp.prop("d2")], mz.chain)
    with pytest.raises(BadPartition):
        distribution(mz.init, [sp.prop(["d1", "d2"], time=1), sp.prop(["src", "m1", "m2"], time=2)], mz.chain)
    with pytest.raises(BadPartition):
        distribution(mz.init, [], mz.chain)


@given(st.integers(2, 6), st.integers(1, 4), st.integers(0, 2**32 - 1))
def test_singleton_partition_sums_to_one(d, n, seed):
    rng = np.random.default_rng(seed)
    space = labels(d)
    ch = KernelChain.of(*(random_kernel(rng, space) for _ in range(n)))
    v = rng.normal(size=d) + 1j * rng.normal(size=d)
    v[-1] = 1 - v[:-1].sum()
    fr = distribution(v, [space.prop(lab) for lab in space.labels], ch)
    assert abs(sum(fr) - 1) <= 1e-12
    assert all(0 <= f <= 1 for f in fr)


@given(st.integers(0, 2**32 - 1), st.complex_numbers(min_magnitude=0.1, max_magnitude=10))
def test_frequency_ignores_overall_scale(seed, c):
    rng = np.random.default_rng(seed)
    space = labels(4)
    ch = KernelChain.of(random_kernel(rng, space))
    target = space.prop(["s0", "s2"])
    v = space.delta("s1")
    assert abs(prob(v, target, ch).value - prob(c * v, target, ch).value) <= 1e-12


def test_deficit_examples():
    mz = build_mach_zehnder()
    assert interference_deficit(mz.chain[:1], "src", "m1") == 0.0
    assert interference_deficit(mz.chain, "src", "d2") == pytest.approx(0.5, abs=1e-15)
    assert interference_deficit(mz.chain, "src", "d1") == pytest.approx(-0.5, abs=1e-15)


@given(st.integers(2, 5), st.integers(1, 4), st.integers(0, 2**32 - 1))
def test_deficit_matches_direct_arithmetic(d, n, seed):
    rng = np.random.default_rng(seed)
    space = labels(d)
    ch = KernelChain.of(*(random_kernel(rng, space) for _ in range(n)))
    vals = np.array([v for _, v in enumerate_paths(ch, "s0", "s1")])
    direct = np.sum(vals.real ** 2 + vals.imag ** 2) - abs(vals.sum()) ** 2
    got = interference_deficit(ch, "s0", "s1")
    assert abs(got - direct) <= 1e-9 * max(1.0, abs(direct))


@pytest.mark.parametrize("eta", [0.0, 0.25, 0.5, 0.75, 1.0])
def test_which_path_closed_form_from_path_values(eta):
    s = build_which_path(eta)
    # endpoint sums from the path oracle rather than from composition
    num = 0.0
    for end in ("d2|h", "d2|n"):
        num += abs(sum(v for _, v in enumerate_paths(s.chain, "src|n", end))) ** 2
    den = sum(abs(sum(v for _, v in enumerate_paths(s.chain, "src|n", end))) ** 2 for end in s.space.labels)
    closed = eta ** 2 / (1 + eta ** 2)
    assert abs(num / den - closed) <= 1e-12
    assert abs(prob(s.init, s.queries["d2"], s.chain).value - closed) <= 1e-12
