"""Exception hierarchy. Each class carries the CLI exit code it maps to."""


class ResallocError(Exception):
    exit_code = 1


class ValidationError(ResallocError, ValueError):
    """Bad parameters, malformed files, or violated rule/game invariants."""

    exit_code = 2


class TruncationExceeded(ValidationError):
    """A load count or index fell outside a tabulated rule."""


class NotSubmodular(ValidationError):
    pass


class InfeasibleError(ResallocError):
    exit_code = 3


class UnboundedError(ResallocError):
    exit_code = 3


class DegenerateError(ResallocError):
    """Division by a zero welfare value or a degenerate construction."""

    exit_code = 3


class NonMonotoneSolution(ResallocError):
    """An LP-designed utility rule came out increasing somewhere.

    Usually means the truncation (Y, Z) is too small.
    """

    exit_code = 3

    def __init__(self, message, result=None):
        super().__init__(message)
        self.result = result


class NumericalFailure(ResallocError):
    """The LP solver lost accuracy or hit its iteration limit."""

    exit_code = 3


class TooLarge(ResallocError):
    """An exhaustive scan or enumeration would exceed its cap."""

    exit_code = 4
