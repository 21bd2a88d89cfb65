"""Exception hierarchy shared across barlift modules."""


class BarliftError(Exception):
    """Base class for all barlift errors."""


class NonSkewInput(BarliftError, ValueError):
    pass


class TangencyViolation(BarliftError, ValueError):
    pass


class DegenerateState(BarliftError, ValueError):
    pass


class SingularMassMatrix(BarliftError, ArithmeticError):
    pass


class CableCollapse(BarliftError, ValueError):
    pass


class NonParallelMu(BarliftError, ValueError):
    pass


class DegenerateThrust(BarliftError, ValueError):
    pass


class GimbalDegeneracy(BarliftError, ValueError):
    pass


class SynthesisFailed(BarliftError):
    def __init__(self, message, binding_condition=None):
        super().__init__(message)
        self.binding_condition = binding_condition


class NotContracting(BarliftError):
    pass


class StiffnessInstability(BarliftError):
    pass


class NeverEnters(BarliftError):
    pass


class IntegrationError(BarliftError):
    """Raised when the right-hand side fails mid-run; carries the step index."""

    def __init__(self, step, cause):
        super().__init__(f"integration aborted at step {step}: {cause}")
        self.step = step
        self.cause = cause


class ParseError(BarliftError, ValueError):
    def __init__(self, line, message):
        super().__init__(f"line {line}: {message}")
        self.line = line


class ValidationError(BarliftError, ValueError):
    def __init__(self, key, reason):
        super().__init__(f"{key}: {reason}")
        self.key = key
        self.reason = reason
