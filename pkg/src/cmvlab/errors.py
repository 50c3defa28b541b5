"""Exception types shared across cmvlab.

Each exception carries an ``exit_code`` used by the command-line front end.
"""


class CmvlabError(Exception):
    exit_code = 1


class DomainError(CmvlabError, ValueError):
    """An argument lies outside the domain of the operation."""

    exit_code = 4


class PrecisionExhausted(CmvlabError, ArithmeticError):
    """A floor or interval decision cannot be made at the working precision."""

    exit_code = 3


class WindowTooSmall(CmvlabError, ValueError):
    exit_code = 4


class OutOfWindow(CmvlabError, IndexError):
    exit_code = 4


class InsufficientMargin(CmvlabError, ValueError):
    exit_code = 4


class EigensolveFailure(CmvlabError, RuntimeError):
    exit_code = 2


class TraceOverflow(CmvlabError, OverflowError):
    """Raw matrix entries left the float range; ``step`` is the offending level."""

    exit_code = 2

    def __init__(self, step, message=None):
        self.step = step
        super().__init__(message or f"matrix entries overflowed at step {step}")


class NoRepetitionFound(CmvlabError, RuntimeError):
    exit_code = 2


class RepetitionViolated(CmvlabError, ValueError):
    exit_code = 2


class TraceBoundViolated(CmvlabError, ValueError):
    exit_code = 2


class InvariantViolation(CmvlabError, AssertionError):
    exit_code = 2


class SchemaMismatch(CmvlabError, ValueError):
    exit_code = 4
