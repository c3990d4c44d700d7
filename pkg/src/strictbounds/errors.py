"""Exception hierarchy.

Errors split into two families so callers (and the command line) can tell a
bad input apart from a numerical breakdown.
"""


class PipelineError(Exception):
    """Base class for every error raised by this package."""


class PreconditionError(PipelineError, ValueError):
    """Inputs violate a documented precondition."""


class NumericalError(PipelineError, ArithmeticError):
    """A numerical routine failed on otherwise valid inputs."""


class SchemaError(PreconditionError):
    pass


class RangeViolation(PreconditionError):
    def __init__(self, name, value, lo=None, hi=None):
        self.name = name
        self.value = value
        msg = f"parameter {name!r} = {value!r}"
        if lo is not None:
            msg += f" outside [{lo!r}, {hi!r}]"
        super().__init__(msg)


class NoOverlap(PreconditionError):
    def __init__(self, axis):
        self.axis = axis
        super().__init__(f"grids do not overlap along the {axis} axis")


class UnknownPoint(PreconditionError):
    pass


class StageDependencyError(PreconditionError):
    def __init__(self, artifact):
        self.artifact = artifact
        super().__init__(f"missing upstream artifact: {artifact}")


class ConfigMismatch(PreconditionError):
    pass


class DomainError(NumericalError, ValueError):
    """Argument outside the mathematical domain of an expression."""


class NotPositiveDefinite(NumericalError):
    pass


class FitError(NumericalError):
    def __init__(self, message, diagnostics=None):
        self.diagnostics = list(diagnostics or [])
        super().__init__(message)


class OptError(NumericalError):
    pass


class EstimationError(NumericalError):
    pass
