"""Scalar calculus of complex probabilities.

A complex probability ``(a -> b)`` is stored as a plain Python ``complex``.
The functions here are the product rule, the sum rule and the consequences
that follow from them directly. Propositions are positional: callers pass
the already-assigned values, not symbolic propositions.
"""

from __future__ import annotations

import math

from .errors import DivisorZero

CProb = complex

#: magnitudes at or below this are treated as structural zeros by :func:`bayes`
ZERO_DIVISOR_TOL = 1e-12

ONE: CProb = 1 + 0j
ZERO: CProb = 0j


def cprob(re: float, im: float = 0.0) -> CProb:
    """Build a complex probability, rejecting non-finite components."""
    if not (math.isfinite(re) and math.isfinite(im)):
        raise ValueError(f"complex probability must be finite, got ({re!r}, {im!r})")
    return complex(re, im)


def is_finite(p: CProb) -> bool:
    return math.isfinite(p.real) and math.isfinite(p.imag)


def chain(ab: CProb, abc: CProb) -> CProb:
    """Product rule: ``(a -> b and c) = (a -> b)(a and b -> c)``."""
    return ab * abc


def negate(ab: CProb) -> CProb:
    """Sum rule: ``(a -> not b) = 1 - (a -> b)``."""
    return 1 - ab


def or_prob(ab: CProb, ac: CProb, abc: CProb) -> CProb:
    """Inclusion-exclusion: ``(a -> b or c) = (a->b) + (a->c) - (a -> b and c)``."""
    return ab + ac - abc


def bayes(a_to_b: CProb, a_to_c: CProb, ac_to_b: CProb, *, tol: float = ZERO_DIVISOR_TOL) -> CProb:
    """Return ``(a and b -> c)`` from ``(a->b)``, ``(a->c)`` and ``(a and c -> b)``.

    Raises :class:`DivisorZero` when ``|a -> b| <= tol``; the conditional is
    undefined given a proposition of zero complex probability.
    """
    if abs(a_to_b) <= tol:
        raise DivisorZero(f"(a -> b) = {a_to_b!r} is zero within {tol:g}; conditional undefined")
    return a_to_c * ac_to_b / a_to_b
