"""
Errors - Exception hierarchy shared by every toolkit module
"""


class ToolkitError(Exception):
    """Base class for all toolkit failures."""
    exit_code = 3


class BadInputError(ToolkitError):
    """Input violates a documented precondition."""
    exit_code = 2


class NumericalError(ToolkitError):
    """A numerical routine broke down on otherwise valid input."""
    exit_code = 3


# Bad input (exit code 2)

class DimensionMismatch(BadInputError):
    pass


class NotHermitian(BadInputError):
    pass


class NotPositive(BadInputError):
    pass


class NotNormalized(BadInputError):
    pass


class LambdaOutOfRange(BadInputError):
    pass


class POutOfRange(BadInputError):
    pass


class EpsilonTooLarge(BadInputError):
    pass


class TooManyClasses(BadInputError):
    pass


class RankOutOfRange(BadInputError):
    pass


class ParameterOrder(BadInputError):
    pass


class DimensionTooLarge(BadInputError):
    pass


class BadSpec(BadInputError):
    pass


class GridTooCoarse(BadInputError):
    pass


class PreconditionViolated(BadInputError):
    pass


# Numerical breakdown (exit code 3)

class DecompositionFailure(NumericalError):
    pass


class ConstructionFailure(NumericalError):
    pass


class NonConvergence(NumericalError):
    pass


class NoFeasibleGamma(NumericalError):
    pass
