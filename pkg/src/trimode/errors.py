"""Exception hierarchy shared by every module of the package."""


class TrimodeError(Exception):
    """Base class for all errors raised by trimode."""


class ParameterError(TrimodeError, ValueError):
    """An input violates a documented precondition."""


class BasisError(ParameterError):
    """Covariance matrices in different (or wrong) bases were combined."""


class RegimeError(ParameterError):
    """A branch-specific routine was called outside its regime."""


class NotApplicableError(ParameterError):
    """An analytic prediction was requested outside its domain of validity."""


class UnphysicalStateError(ParameterError):
    """A covariance matrix violates the uncertainty principle."""


class NumericalError(TrimodeError, ArithmeticError):
    """A numerical routine failed or lost too much precision."""


class ConditioningWarning(UserWarning):
    """A closed-form branch is being evaluated in a badly conditioned region."""
