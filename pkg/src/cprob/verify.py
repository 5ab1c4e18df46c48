"""Invariant suites run by ``cprob verify``.

Each group returns a list of :class:`Check`. Library functions are looked
up through their modules at call time, so a patched module attribute is
what gets exercised.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import algebra, frequency, propagator, statespace
from . import scenarios

SEED = 20240611
AXIOM_DRAWS = 10_000
ORACLE_CHAINS = 100
AXIOM_TOL = 1e-12
ORACLE_TOL = 1e-10
WEIGHT_TOL = 1e-8


@dataclass(frozen=True)
class Check:
    name: str
    ok: bool
    detail: str = ""

    def __post_init__(self):
        object.__setattr__(self, "ok", bool(self.ok))


def _rng(offset: int = 0) -> np.random.Generator:
    return np.random.default_rng(SEED + offset)


def random_cvec(rng: np.random.Generator, n: int) -> np.ndarray:
    """Complex vector summing to one."""
    v = rng.normal(size=n) + 1j * rng.normal(size=n)
    v[-1] = 1 - v[:-1].sum()
    return v


def random_kernel(rng: np.random.Generator, space: statespace.StateSpace, sparsity: float = 0.0) -> statespace.Kernel:
    """Random kernel with rows summing to one; ``sparsity`` zeroes a fraction of off-diagonal entries."""
    d = space.dimension
    e = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    if sparsity:
        e[rng.random((d, d)) < sparsity] = 0
    e[np.arange(d), np.arange(d)] += 1 - e.sum(axis=1)
    return statespace.Kernel(space, e)


def _worst(errors) -> float:
    return float(np.max(errors)) if len(errors) else 0.0


# ---- algebra ---------------------------------------------------------------

def check_algebra(draws: int = AXIOM_DRAWS) -> list[Check]:
    """Sum rule, inclusion-exclusion and Bayes consistency on random complex distributions.

    Each draw is a complex distribution over eight states and two random
    propositions ``b``, ``c``; errors are relative to ``max(1, |expected|)``.
    """
    rng = _rng(1)
    neg_err, or_err, bayes_err = [], [], []
    for _ in range(draws):
        v = random_cvec(rng, 8)
        b = rng.random(8) < 0.5
        c = rng.random(8) < 0.5
        pb, pc, pbc, p_or = v[b].sum(), v[c].sum(), v[b & c].sum(), v[b | c].sum()
        pb, pc, pbc, p_or = complex(pb), complex(pc), complex(pbc), complex(p_or)

        nn = algebra.negate(algebra.negate(pb))
        neg_err.append(abs(nn - pb) / max(1.0, abs(pb)))

        got = algebra.or_prob(pb, pc, pbc)
        or_err.append(abs(got - p_or) / max(1.0, abs(p_or)))

        if min(abs(pb), abs(pc)) < 0.1:
            continue
        # (a -> b c) built both ways through the product rule
        c_given_b = pbc / pb
        b_given_c = pbc / pc
        got = algebra.bayes(pb, pc, b_given_c)
        lhs = algebra.chain(pb, got)
        rhs = algebra.chain(pc, b_given_c)
        bayes_err.append(max(abs(got - c_given_b) / max(1.0, abs(c_given_b)),
                             abs(lhs - rhs) / max(1.0, abs(rhs))))
    out = []
    for name, errs in (("double negation", neg_err), ("inclusion-exclusion", or_err),
                       ("bayes chain", bayes_err)):
        w = _worst(errs)
        out.append(Check(name, w <= AXIOM_TOL, f"{len(errs)} draws, worst relative error {w:.2e}"))
    try:
        algebra.bayes(0.0, 1.0, 1.0)
        out.append(Check("zero divisor rejected", False, "bayes accepted a zero divisor"))
    except ZeroDivisionError:
        out.append(Check("zero divisor rejected", True))
    return out


# ---- statespace ------------------------------------------------------------

def check_statespace(chains: int = ORACLE_CHAINS) -> list[Check]:
    rng = _rng(2)
    row_err, oracle_err, assoc_err, tensor_err = [], [], [], []
    for _ in range(chains):
        d = int(rng.integers(2, 7))
        n = int(rng.integers(1, 7))
        space = statespace.StateSpace(tuple(f"s{i}" for i in range(d)))
        ks = [random_kernel(rng, space, sparsity=0.3) for _ in range(n)]
        ch = statespace.KernelChain(space, tuple(ks))

        total = ks[0]
        for k in ks[1:]:
            total = statespace.compose(total, k)
        rep = statespace.validate_kernel(total)
        row_err.append(max((r.deviation for r in rep.violations), default=0.0))
        if not rep.ok:
            row_err[-1] = max(row_err[-1], 1.0)

        paths = statespace.path_sum_matrix(ch)
        oracle_err.append(float(np.abs(paths - total.entries).max()))

        if n >= 3:
            left = statespace.compose(statespace.compose(ks[0], ks[1]), ks[2])
            right = statespace.compose(ks[0], statespace.compose(ks[1], ks[2]))
            assoc_err.append(float(np.abs(left.entries - right.entries).max()))

    for _ in range(20):
        a = statespace.StateSpace(("a0", "a1", "a2"))
        b = statespace.StateSpace(("b0", "b1"))
        t = statespace.tensor(random_kernel(rng, a), random_kernel(rng, b))
        tensor_err.append(float(np.abs(t.entries.sum(axis=1) - 1).max()))

    w_row = _worst(row_err)
    return [
        Check("composition keeps row sums", w_row <= statespace.ROW_SUM_TOL, f"worst deviation {w_row:.2e}"),
        Check("path sum equals composition", _worst(oracle_err) <= ORACLE_TOL,
              f"{chains} chains, worst entry error {_worst(oracle_err):.2e}"),
        Check("composition associative", _worst(assoc_err) <= ORACLE_TOL, f"worst {_worst(assoc_err):.2e}"),
        Check("tensor keeps row sums", _worst(tensor_err) <= statespace.ROW_SUM_TOL,
              f"worst {_worst(tensor_err):.2e}"),
    ]


# ---- frequency -------------------------------------------------------------

def check_frequency() -> list[Check]:
    rng = _rng(3)
    part_err, invariance_err = [], []
    for _ in range(50):
        d = int(rng.integers(2, 7))
        space = statespace.StateSpace(tuple(f"s{i}" for i in range(d)))
        ch = statespace.KernelChain(space, tuple(random_kernel(rng, space) for _ in range(int(rng.integers(1, 4)))))
        init = random_cvec(rng, d)
        cells = [space.prop([lab]) for lab in space.labels]
        fr = frequency.distribution(init, cells, ch)
        part_err.append(abs(sum(fr) - 1))
        # overall scale of the complex probabilities is unobservable
        q = space.prop(space.labels[: max(1, d // 2)])
        p1 = frequency.prob(init, q, ch).value
        p2 = frequency.prob(init * (2 - 3j), q, ch).value
        invariance_err.append(abs(p1 - p2))

    mz = scenarios.build_mach_zehnder()
    res = scenarios.run(mz)
    d1, d2 = res.frequencies["d1"].value, res.frequencies["d2"].value
    dd2 = frequency.interference_deficit(mz.chain, "src", "d2")
    single = [frequency.interference_deficit(mz.chain, "src", lab) for lab in ("m1", "m2")]
    return [
        Check("partition frequencies sum to one", _worst(part_err) <= 1e-12, f"worst {_worst(part_err):.2e}"),
        Check("frequency invariant under rescaling", _worst(invariance_err) <= 1e-12,
              f"worst {_worst(invariance_err):.2e}"),
        Check("Mach-Zehnder detector frequencies", abs(d1 - 1) <= 1e-12 and abs(d2) <= 1e-12,
              f"d1={d1!r} d2={d2!r}"),
        Check("dark-port deficit", abs(dd2 - 0.5) <= 1e-12, f"deficit {dd2!r}"),
        Check("single-path endpoints have no deficit", max(map(abs, single)) <= 1e-12, f"{single}"),
    ]


# ---- propagator ------------------------------------------------------------

def check_propagator() -> list[Check]:
    out = []
    grid = propagator.Grid.from_extent(256, 2.0)
    fields = propagator.Fields(0.0, 0.7, 1 + 1j)
    rt = propagator.moment_round_trip(fields, 1e-3, grid)
    (_, nu0), (nu_in, nu_out), (nu2_in, nu2_out) = rt["nu0"], rt["nu"], rt["nu2"]
    e_nu = float(np.abs(nu_out - nu_in).max() / np.abs(nu_in).max())
    e_nu2 = float(np.abs(nu2_out - nu2_in).max() / np.abs(nu2_in).max())
    out.append(Check("moment round trip", abs(nu0) <= 0.01 and e_nu <= 0.01 and e_nu2 <= 0.01,
                     f"nu0={abs(nu0):.1e} nu rel {e_nu:.1e} nu2 rel {e_nu2:.1e}"))

    rng = _rng(4)
    worst = 0.0
    for _ in range(100):
        n = int(rng.integers(2, 4))
        a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
        nu2 = a @ a.T + n * np.eye(n)
        M, omega, W = propagator.weight_matrix(nu2)
        scale = np.abs(nu2).max()
        worst = max(worst,
                    float(np.abs(M.T @ M - np.eye(n)).max()),
                    float(np.abs(M.T @ nu2 @ M - np.diag(1 / omega)).max() / scale),
                    float(np.abs(W @ nu2 - np.eye(n)).max()))
    out.append(Check("weight table invariants", worst <= WEIGHT_TOL, f"worst {worst:.2e}"))

    g = propagator.Grid.from_extent(256, 20.0)
    f = propagator.Fields.free(1.0, 0.8)
    direct = propagator.gaussian_step_kernel(f, 1.0, g).inner_block()
    errs = [float(np.abs(propagator.refine_and_compose(f, 1.0, n, g).inner_block() - direct).max())
            for n in (1, 2, 4, 8, 16)]
    out.append(Check("refinement matches direct kernel", errs[-1] <= 1e-4, f"errors {[f'{e:.1e}' for e in errs]}"))

    rows = propagator.schrodinger_scan(refinements=(8, 16))
    r8, r16 = rows[0][3], rows[1][3]
    out.append(Check("free packet converges", r16 < 0.02 and r8 / r16 >= 1.5,
                     f"residual {r8:.4f} -> {r16:.4f}"))
    return out


# ---- scenarios -------------------------------------------------------------

def check_scenarios() -> list[Check]:
    out = []
    for name in ("mach_zehnder.scn", "which_path.scn", "two_slit.scn"):
        s = scenarios.load_scenario(scenarios.fixture_path(name))
        again = scenarios.parse_scenario(scenarios.serialize(s))
        explicit = scenarios.parse_scenario(scenarios.serialize(s, explicit=True))
        out.append(Check(f"{name} round trip", again == s and explicit == s))

    wp = scenarios.load_scenario(scenarios.fixture_path("which_path.scn"))
    worst = 0.0
    for eta in np.linspace(0, 1, 21):
        got = scenarios.run(wp.with_params(eta=float(eta))).frequencies["d2"].value
        worst = max(worst, abs(got - eta ** 2 / (1 + eta ** 2)))
    out.append(Check("which-path efficiency curve", worst <= 1e-10, f"worst {worst:.2e}"))

    ts = scenarios.load_scenario(scenarios.fixture_path("two_slit.scn"))
    both = scenarios.run(ts).frequencies
    one = scenarios.run(ts.with_params(slit2_open=0)).frequencies
    drops = sum(one[q].value - both[q].value > 0.01 for q in ts.queries)
    out.append(Check("second slit lowers some frequencies", drops >= 3, f"{drops} screen points"))
    return out


GROUPS: dict[str, Callable[[], list[Check]]] = {
    "algebra": check_algebra,
    "statespace": check_statespace,
    "frequency": check_frequency,
    "propagator": check_propagator,
    "scenarios": check_scenarios,
}


def run_group(name: str) -> list[Check]:
    """Run one group; an exception inside it becomes a failed check."""
    try:
        return GROUPS[name]()
    except Exception as exc:  # noqa: BLE001 - reported, not swallowed
        return [Check("raised", False, f"{type(exc).__name__}: {exc}")]


def run_all(names=None) -> dict[str, list[Check]]:
    return {name: run_group(name) for name in (names or GROUPS)}


def summary_ok(results: dict[str, list[Check]]) -> bool:
    return all(c.ok for checks in results.values() for c in checks)

