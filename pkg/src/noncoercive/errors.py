"""Exception types raised across the package."""


class NoncoerciveError(Exception):
    """Base class for all package errors."""


class InvalidArgument(NoncoerciveError, ValueError):
    pass


class DimensionMismatch(NoncoerciveError, ValueError):
    pass


class AssumptionViolation(NoncoerciveError, ValueError):
    """A coefficient bound such as ``alpha <= a <= beta`` failed at a sample point."""


class GrowthAssumptionViolated(AssumptionViolation):
    """The flux exceeded ``C * t**2``; only the entropy formulation applies."""


class ConfigParseError(NoncoerciveError, ValueError):
    def __init__(self, message, field=None, line=None):
        where = []
        if field is not None:
            where.append(f"field {field!r}")
        if line is not None:
            where.append(f"line {line}")
        prefix = f"[{', '.join(where)}] " if where else ""
        super().__init__(prefix + message)
        self.field = field
        self.line = line


class InvalidTestFunction(NoncoerciveError, ValueError):
    pass


class ManufacturedUnsupported(NoncoerciveError, ValueError):
    pass


class InsufficientLevels(NoncoerciveError, ValueError):
    pass


class LinearSolverFailure(NoncoerciveError, RuntimeError):
    def __init__(self, message, residual_history=()):
        super().__init__(message)
        self.residual_history = list(residual_history)


class NonlinearNonconvergence(NoncoerciveError, RuntimeError):
    def __init__(self, message, history=(), result=None):
        super().__init__(message)
        self.history = list(history)
        self.result = result
