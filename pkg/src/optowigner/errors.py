"""Exception types raised by optowigner."""


class OptoWignerError(Exception):
    """Base class for all package errors."""


class DomainError(OptoWignerError, ValueError):
    """An argument lies outside the domain of the operation."""


class PreconditionError(OptoWignerError, ValueError):
    """The inputs are valid individually but violate an operation's precondition."""


class UnsupportedError(OptoWignerError, NotImplementedError):
    """The requested combination of inputs is not implemented."""


class AccuracyError(OptoWignerError, ArithmeticError):
    """A numerical self-check failed (symmetry, branch tracking, realness)."""


class SolverError(OptoWignerError, ArithmeticError):
    """A linear solve failed; ``diagnostics`` carries what is known."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class TruncationError(OptoWignerError, ArithmeticError):
    """The Fock truncation is too small for the requested tolerance."""


class StepSizeError(OptoWignerError, ArithmeticError):
    """The time stepper drifted out of tolerance."""
