"""Built-in experiments: Mach-Zehnder, which-path and two-slit.

Beam splitters use the balanced pair ``((1-i)/2, (1+i)/2)``: equal
magnitudes, summing to one. The second splitter is oriented so that D1 is
the bright port. Detectors, mirrors and anything not acted on by a step are
identity rows, so all weight ends up in detector states.
"""

from __future__ import annotations

import numpy as np

from ..errors import DegenerateRow, ParameterRange, ScenarioSyntaxError, UnknownParameter
from ..statespace import Kernel, KernelChain, StateSpace, tensor
from .model import Scenario

SPLIT_A = complex(0.5, -0.5)
SPLIT_B = complex(0.5, 0.5)

MZ_LABELS = ("src", "m1", "m2", "d1", "d2")
FLAG_LABELS = ("h", "n")


def _mz_kernels(space: StateSpace) -> tuple[Kernel, Kernel]:
    s1 = Kernel.from_rows(space, {
        "src": {"m1": SPLIT_A, "m2": SPLIT_B},
        "m1": "identity", "m2": "identity", "d1": "identity", "d2": "identity",
    }, name="S1")
    s2 = Kernel.from_rows(space, {
        "src": "identity",
        "m1": {"d1": SPLIT_B, "d2": SPLIT_A},
        "m2": {"d1": SPLIT_A, "d2": SPLIT_B},
        "d1": "identity", "d2": "identity",
    }, name="S2")
    return s1, s2


def build_mach_zehnder() -> Scenario:
    space = StateSpace(MZ_LABELS)
    s1, s2 = _mz_kernels(space)
    return Scenario(
        space=space,
        init=space.delta("src"),
        chain=KernelChain(space, (s1, s2)),
        queries={"d1": space.prop("d1"), "d2": space.prop("d2")},
        name="mach_zehnder",
        origin="mach_zehnder",
        rebuild=lambda params: build_mach_zehnder(),
    )


def flag_kernel(space: StateSpace, eta: float) -> Kernel:
    """Mirror step of the which-path device with efficiency ``eta``.

    A particle at M1 flips the flag from ``n`` to ``h`` with complex
    probability ``(1+eta)/2``; at M2 with ``(1-eta)/2``. At ``eta=1`` the
    flag records the path perfectly, at ``eta=0`` it is independent of it.
    """
    up, down = (1 + eta) / 2, (1 - eta) / 2
    rows: dict = {lab: "identity" for lab in space.labels}
    rows["m1|n"] = {"m1|h": up, "m1|n": down}
    rows["m2|n"] = {"m2|h": down, "m2|n": up}
    return Kernel.from_rows(space, rows, name="M")


def build_which_path(eta: float) -> Scenario:
    """Mach-Zehnder with a hit/no-hit flag attached to the mirrors."""
    eta = float(eta)
    if not 0 <= eta <= 1:
        raise ParameterRange(f"efficiency eta must be in [0, 1], got {eta}")
    spatial = StateSpace(MZ_LABELS)
    flag = StateSpace(FLAG_LABELS)
    s1, s2 = _mz_kernels(spatial)
    s1f = tensor(s1, flag.identity(name="I"))
    s2f = tensor(s2, flag.identity(name="I"))
    space = s1f.space
    s1f = Kernel(space, s1f.entries, name="S1")
    s2f = Kernel(space, s2f.entries, name="S2")
    queries = {det: space.prop([f"{det}|{f}" for f in FLAG_LABELS]) for det in ("d1", "d2")}
    return Scenario(
        space=space,
        init=space.delta("src|n"),
        chain=KernelChain(space, (s1f, flag_kernel(space, eta), s2f)),
        queries=queries,
        params={"eta": eta},
        name="which_path",
        origin="which_path",
        rebuild=lambda params: build_which_path(**params),
    )


def build_two_slit(n_screen: int = 64, wavelength: float = 1.0, separation: float = 4.0,
                   distance: float = 32.0, screen_width: float = 64.0,
                   slit1_open: float = 1.0, slit2_open: float = 1.0) -> Scenario:
    """Two slits feeding a screen of ``n_screen`` points.

    The slit-to-screen row for slit ``k`` is ``exp(i phi_k(x)) / sum_x exp(i phi_k(x))``
    with ``phi_k(x) = 2 pi |slit_k - x| / wavelength``. With ``slit2_open=0``
    the source goes through slit 1 with certainty, and likewise for
    ``slit1_open=0``.
    """
    n_screen = int(n_screen)
    if n_screen < 16:
        raise ParameterRange(f"need at least 16 screen points, got {n_screen}")
    if not (wavelength > 0 and distance > 0 and screen_width > 0 and separation >= 0):
        raise ParameterRange("wavelength, distance and screen_width must be positive")
    for flag, value in (("slit1_open", slit1_open), ("slit2_open", slit2_open)):
        if value not in (0, 1):
            raise ParameterRange(f"{flag} must be 0 or 1, got {value}")
    if not (slit1_open or slit2_open):
        raise ParameterRange("at least one slit must be open")

    width = len(str(n_screen - 1))
    screen = [f"x{j:0{width}d}" for j in range(n_screen)]
    space = StateSpace(("src", "s1", "s2", *screen))
    ys = -screen_width / 2 + (np.arange(n_screen) + 0.5) * screen_width / n_screen

    first = np.zeros((space.dimension, space.dimension), dtype=complex)
    np.fill_diagonal(first, 1.0)
    first[0, 0] = 0.0
    if slit1_open and slit2_open:
        first[0, 1], first[0, 2] = SPLIT_A, SPLIT_B
    elif slit1_open:
        first[0, 1] = 1.0
    else:
        first[0, 2] = 1.0

    second = np.eye(space.dimension, dtype=complex)
    for row, slit_y in ((1, separation / 2), (2, -separation / 2)):
        phase = np.exp(2j * np.pi * np.hypot(distance, ys - slit_y) / wavelength)
        total = phase.sum()
        if abs(total) < 1e-6:
            raise DegenerateRow(f"slit {row} phases sum to {abs(total):.2g}; row cannot be normalized")
        second[row, :] = 0.0
        second[row, 3:] = phase / total

    params = {"n_screen": float(n_screen), "wavelength": float(wavelength),
              "separation": float(separation), "distance": float(distance),
              "screen_width": float(screen_width), "slit1_open": float(slit1_open),
              "slit2_open": float(slit2_open)}
    return Scenario(
        space=space,
        init=space.delta("src"),
        chain=KernelChain(space, (Kernel(space, first, name="SLITS"), Kernel(space, second, name="SCREEN"))),
        queries={lab: space.prop(lab) for lab in screen},
        params=params,
        name="two_slit",
        origin="two_slit",
        rebuild=lambda p: build_two_slit(**p),
    )


BUILDERS = {
    "mach_zehnder": build_mach_zehnder,
    "which_path": build_which_path,
    "two_slit": build_two_slit,
}


def call_builder(name: str, params: dict) -> Scenario:
    try:
        builder = BUILDERS[name]
    except KeyError:
        raise ScenarioSyntaxError(f"unknown builder {name!r}; known: {', '.join(BUILDERS)}") from None
    try:
        return builder(**params)
    except TypeError as exc:
        raise UnknownParameter(f"builder {name!r}: {exc}") from None
