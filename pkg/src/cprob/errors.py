"""Exception hierarchy.

Every error raised on bad input derives from :class:`CProbError`, which the
CLI maps to exit code 2.
"""

from __future__ import annotations


class CProbError(ValueError):
    """Base class for validation and usage errors."""


# algebra

class DivisorZero(CProbError, ZeroDivisionError):
    """A conditional complex probability was requested given a zero-probability proposition."""


# statespace

class EmptySpace(CProbError):
    pass


class DuplicateLabel(CProbError):
    pass


class UnknownLabel(CProbError):
    def __init__(self, message: str, line: int | None = None):
        super().__init__(message)
        self.line = line


class SpaceMismatch(CProbError):
    pass


class DimensionMismatch(CProbError):
    pass


class StepMismatch(CProbError):
    pass


class TooLarge(CProbError):
    """Path enumeration would exceed the oracle caps."""


class InvalidKernel(CProbError):
    def __init__(self, report):
        self.report = report
        super().__init__(str(report))


# frequency

class DegenerateDenominator(CProbError):
    """Total squared magnitude vanished; no frequency prediction exists."""


class BadPartition(CProbError):
    pass


# propagator

class SingularW(CProbError):
    pass


class UnregulatedW(CProbError):
    """The weight table lacks a positive-definite real part, so lattice sums do not converge."""


class GridTooCoarse(CProbError):
    pass


class SingularMoments(CProbError):
    pass


class BoundaryContamination(CProbError):
    pass


# scenarios

class ScenarioSyntaxError(CProbError):
    def __init__(self, message: str, line: int | None = None):
        super().__init__(message)
        self.line = line


class RowSumViolation(CProbError):
    def __init__(self, message: str, line: int | None = None):
        super().__init__(message)
        self.line = line


class ParameterRange(CProbError):
    pass


class DegenerateRow(CProbError):
    pass


class UnknownParameter(CProbError):
    pass


class ScenarioParseError(CProbError):
    """Collects every issue found in a scenario file.

    ``issues`` holds the individual errors (``ScenarioSyntaxError``,
    ``UnknownLabel``, ``RowSumViolation``), each with a ``line`` attribute.
    """

    def __init__(self, issues, source: str = "<string>"):
        self.issues = list(issues)
        self.source = source
        lines = []
        for issue in self.issues:
            where = f"{source}:{issue.line}" if getattr(issue, "line", None) else source
            lines.append(f"{where}: {type(issue).__name__}: {issue}")
        super().__init__("\n".join(lines))

    def kinds(self) -> set[type]:
        return {type(i) for i in self.issues}
