"""Experiments compiled to kernel chains, plus the scenario file format."""

from .builders import BUILDERS, build_mach_zehnder, build_two_slit, build_which_path, flag_kernel
from .fileformat import fixture_path, load_scenario, parse_scenario, serialize
from .model import Scenario, ScenarioResult, run

__all__ = [
    "BUILDERS",
    "Scenario",
    "ScenarioResult",
    "build_mach_zehnder",
    "build_two_slit",
    "build_which_path",
    "fixture_path",
    "flag_kernel",
    "load_scenario",
    "parse_scenario",
    "run",
    "serialize",
]
