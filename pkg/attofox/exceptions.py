"""
Exceptions raised by the simulation and analysis layers.

The cli maps these onto exit codes, see attofox.decorators.flow.
"""


class AttofoxError(Exception):
    """
    Base class for every error raised on purpose by this package.
    """
    pass


class ValidationError(AttofoxError, ValueError):
    """
    Parameters, configuration or flags failed a sanity check before anything ran.
    """
    pass


class ContractError(AttofoxError):
    """
    An operation was called outside of its precondition.
    """
    pass


class BracketError(ValidationError):
    """
    The endpoints handed to a bisection do not straddle the target.
    """
    pass


class NumericError(AttofoxError, ArithmeticError):
    """
    A run produced a numerically meaningless result.
    """
    pass


class DegenerateRateError(NumericError):
    """
    The total event flux f(x) + mu(x) y vanished where a ratio of it was needed.
    """
    pass


class NoCycleError(NumericError):
    """
    No limit cycle could be detected.
    """
    pass


class NoMinimumError(NumericError):
    """
    A trajectory showed no local prey minimum within its horizon.
    """
    pass


class BudgetExceededError(NumericError):
    """
    A jump simulation would need more events than the configured budget allows.
    """
    pass
