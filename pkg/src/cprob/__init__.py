"""Complex-valued probability over Markov state spaces.

Modules
-------
algebra      scalar product/sum rules and their consequences
statespace   state spaces, transition kernels, composition, path oracle
frequency    observable frequencies and interference diagnostics
propagator   lattice propagators on R^d, moments, weight table, Lagrangian
scenarios    interferometer and two-slit experiments, scenario files
"""

from . import algebra, frequency, propagator, statespace
from .algebra import bayes, chain, cprob, negate, or_prob
from .errors import CProbError
from .frequency import FrequencyResult, distribution, interference_deficit, prob
from .statespace import (
    Kernel,
    KernelChain,
    Proposition,
    StateSpace,
    compose,
    enumerate_paths,
    evolve,
    make_space,
    tensor,
    validate_kernel,
)

__version__ = "0.1.0"

__all__ = [
    "CProbError",
    "FrequencyResult",
    "Kernel",
    "KernelChain",
    "Proposition",
    "StateSpace",
    "algebra",
    "bayes",
    "chain",
    "compose",
    "cprob",
    "distribution",
    "enumerate_paths",
    "evolve",
    "frequency",
    "interference_deficit",
    "make_space",
    "negate",
    "or_prob",
    "prob",
    "propagator",
    "statespace",
    "tensor",
    "validate_kernel",
]
