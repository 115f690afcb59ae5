"""Exception types shared across the package."""


class MpdesimError(Exception):
    """Base class for all package errors."""


class SingularMatrixError(MpdesimError):
    """A pivot fell below the singularity threshold during factorization."""


class DimensionMismatchError(MpdesimError):
    """Operands have incompatible shapes."""


class DomainError(MpdesimError):
    """Relative-time argument outside [0, 1]."""


class DutyAlignmentError(MpdesimError):
    """Duty cycle does not land on a node of the requested nodal grid."""


class DutyMismatchError(MpdesimError):
    """Basis and circuit were built for different duty cycles."""


class OutOfSpanError(MpdesimError):
    """Evaluation time outside the solved interval."""


class MaxStepsExceededError(MpdesimError):
    """Integrator hit the step budget before reaching the end of the span."""


class StepSizeUnderflowError(MpdesimError):
    """Controller drove the step size below the resolvable limit."""


class GridMismatchError(MpdesimError):
    """Two sampled series do not share the same grid."""


class ZeroReferenceError(MpdesimError):
    """Reference series is identically zero; relative error undefined."""
