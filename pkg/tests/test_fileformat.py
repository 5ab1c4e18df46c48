from __future__ import annotations

from pathlib import Path

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cprob.errors import (
    RowSumViolation,
    ScenarioParseError,
    ScenarioSyntaxError,
    UnknownLabel,
    UnknownParameter,
)
from cprob.scenarios import (
    build_mach_zehnder,
    build_two_slit,
    build_which_path,
    fixture_path,
    load_scenario,
    parse_scenario,
    run,
    serialize,
)
from cprob.scenarios.fileformat import eval_complex, eval_number

FIXTURES = Path(__file__).parent / "fixtures"

MINIMAL = """\
# coin
[space]
heads tails

[init]
heads=0.5,0 tails=0.5,0

[kernel flip]
heads: heads=0.5,-0.5 tails=0.5,0.5
tails: identity

[chain]
flip flip
"""


def issues_of(text):
    with pytest.raises(ScenarioParseError) as info:
        parse_scenario(text)
    return info.value


def test_mach_zehnder_fixture_equals_builder():
    assert load_scenario(fixture_path("mach_zehnder.scn")) == build_mach_zehnder()


def test_which_path_fixture_matches_builder_across_eta():
    s = load_scenario(fixture_path("which_path.scn"))
    assert s.params == {"eta": 1.0}
    for eta in (0.0, 0.3, 0.99, 1.0):
        assert s.with_params(eta=eta) == build_which_path(eta)


def test_two_slit_fixture_is_desk_geometry():
    s = load_scenario(fixture_path("two_slit.scn"))
    assert s == build_two_slit(64, 1.0, 4.0, 32.0, 64.0)
    assert s.origin == "two_slit"


def test_broken_fixture_names_row():
    with pytest.raises(ScenarioParseError) as info:
        load_scenario(FIXTURES / "broken.scn")
    err = info.value
    assert err.kinds() == {RowSumViolation}
    assert err.issues[0].line == 9
    assert "'a'" in str(err) and "0.9" in str(err)


def test_undeclared_label():
    with pytest.raises(ScenarioParseError) as info:
        load_scenario(FIXTURES / "undeclared.scn")
    assert info.value.kinds() == {UnknownLabel}
    assert "d3" in str(info.value)
    assert info.value.issues[0].line == 9


def test_minimal_defaults():
    s = parse_scenario(MINIMAL)
    assert s.name == "coin"
    assert list(s.queries) == ["heads", "tails"]
    assert s.init_label() is None
    r = run(s)
    assert abs(r.frequencies["heads"].value + r.frequencies["tails"].value - 1) <= 1e-12


def test_all_issues_reported_with_lines():
    text = """\
[space]
a b

[init]
a

[kernel K]
a: b=0.5
b: identity
c: identity

[chain]
K L

[query q]
z
"""
    err = issues_of(text)
    kinds = [(type(i), i.line) for i in err.issues]
    assert (RowSumViolation, 8) not in kinds  # rows with unknown labels are not also row-sum checked
    assert (UnknownLabel, 10) in kinds
    assert (UnknownLabel, 13) in kinds
    assert (UnknownLabel, 15) in kinds


@pytest.mark.parametrize("text, kind", [
    ("[space]\na b\n[bogus]\n", ScenarioSyntaxError),
    ("a b\n", ScenarioSyntaxError),
    ("[space]\na\n[init]\na\n[kernel]\n", ScenarioSyntaxError),
    ("[space]\na\n[init]\na\n[kernel K]\na b\n[chain]\nK\n", ScenarioSyntaxError),
    ("[space]\na\n[init]\na\n[kernel K]\na: a=oops\n[chain]\nK\n", ScenarioSyntaxError),
    ("[space]\na\n[init]\na=0.5\n[kernel K]\na: identity\n[chain]\nK\n", RowSumViolation),
    ("[space]\na\n[init]\nb\n[kernel K]\na: identity\n[chain]\nK\n", UnknownLabel),
    ("[space]\na a\n[init]\na\n[kernel K]\na: identity\n[chain]\nK\n", ScenarioSyntaxError),
    ("[space]\na b\n[init]\na\n[kernel K]\na: identity\n[chain]\nK\n", RowSumViolation),
    ("[space]\na\n[init]\na\n[kernel K]\na: identity\n[chain]\nK\n[query q]\na time=5\n", ScenarioSyntaxError),
])
def test_rejections(text, kind):
    assert kind in issues_of(text).kinds()


def test_missing_row_reported_at_kernel_header():
    err = issues_of("[space]\na b\n[init]\na\n[kernel K]\na: identity\n[chain]\nK\n")
    assert err.issues[0].line == 5
    assert "row missing" in str(err)


def test_row_tol_override():
    text = "[space]\na b\n[init]\na\n[kernel K]\na: a=0.9999 b=0.0\nb: identity\n[chain]\nK\n"
    with pytest.raises(ScenarioParseError):
        parse_scenario(text)
    assert parse_scenario(text, row_tol=1e-3).chain[0].entry("a", "a") == 0.9999


def test_query_time_index():
    s = parse_scenario(MINIMAL + "\n[query mid]\nheads time=1\n")
    assert s.queries["mid"].time_index == 1


def test_builder_with_unknown_parameter():
    with pytest.raises(ScenarioParseError):
        parse_scenario("[builder]\nwhich_path\n[param]\neta=0.5 colour=2\n")
    with pytest.raises(ScenarioParseError):
        parse_scenario("[builder]\nnope\n")
    s = parse_scenario("[builder]\nwhich_path\n[param]\neta=0.5\n")
    with pytest.raises(UnknownParameter):
        s.with_params(colour=1)


def test_builder_conflicts_with_explicit_sections():
    with pytest.raises(ScenarioParseError):
        parse_scenario("[builder]\nmach_zehnder\n[space]\na\n")


def test_expressions():
    assert eval_number("(1+eta)/2", {"eta": 0.5}) == 0.75
    assert eval_number("2*pi", {}) == pytest.approx(6.283185307179586)
    assert eval_number("-sqrt(4)", {}) == -2.0
    assert eval_complex("cos(0),-sin(0)", {}) == 1 + 0j
    assert eval_complex("1.5e-3", {}) == 0.0015
    for bad in ("__import__('os')", "eta", "1+", "x.y", "2**1000000"):
        with pytest.raises(ValueError):
            eval_number(bad, {})


@pytest.mark.parametrize("name", ["mach_zehnder.scn", "which_path.scn", "two_slit.scn"])
def test_round_trip_fixtures(name):
    s = load_scenario(fixture_path(name))
    text = serialize(s)
    assert parse_scenario(text) == s
    assert serialize(parse_scenario(text)) == text
    explicit = serialize(s, explicit=True)
    assert parse_scenario(explicit) == s
    assert serialize(parse_scenario(explicit), explicit=True) == explicit


def test_round_trip_minimal_is_idempotent():
    once = serialize(parse_scenario(MINIMAL))
    assert serialize(parse_scenario(once)) == once


@given(st.integers(1, 5), st.integers(1, 3), st.integers(0, 2**32 - 1))
def test_round_trip_random_kernels(d, n, seed):
    from cprob.scenarios import Scenario
    from cprob.statespace import Kernel, KernelChain, StateSpace

    rng = np.random.default_rng(seed)
    space = StateSpace(tuple(f"q{i}" for i in range(d)))
    ks = []
    for t in range(n):
        e = np.round(rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d)), 3)
        e[:, 0] += 1 - e.sum(axis=1)
        ks.append(Kernel(space, e, step=float(t + 1), name=f"K{t}"))
    s = Scenario(space, space.delta("q0"), KernelChain(space, tuple(ks)), {"all": space.prop(space.labels)})
    again = parse_scenario(serialize(s))
    assert again == s
