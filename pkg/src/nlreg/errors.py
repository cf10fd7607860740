"""Exception hierarchy shared by all nlreg modules."""


class NlregError(Exception):
    """Base class for every error raised by nlreg."""


class InputError(NlregError, ValueError):
    """Malformed user input (model files, expressions, dimensions)."""


class DomainError(InputError):
    """Non-finite values or arguments outside a function's analytic domain."""


class ParseError(InputError):
    """Syntax error in an expression, with 1-based line/column."""

    def __init__(self, message, line=None, col=None):
        self.line = line
        self.col = col
        if line is not None:
            message = f"{message} (line {line}, column {col})"
        super().__init__(message)


class AffinityError(InputError):
    """The dynamics are not affine in the control input."""


class AssumptionError(InputError):
    """A checkable standing assumption (equilibrium, Q1 >= 0, R1 > 0) fails."""


class ContractError(NlregError, ValueError):
    """An operation was called outside its documented precondition."""


class ResourceCapError(NlregError):
    """A configured size cap would be exceeded."""


class NumericalError(NlregError, ArithmeticError):
    """Generic numerical failure."""


class StabilizabilityError(NumericalError):
    """(F1, G0) is not stabilizable, or no stabilizing seed gain was found."""


class NotHurwitzError(NumericalError):
    """A matrix required to be Hurwitz is not."""


class ConvergenceError(NumericalError):
    """An iteration did not converge within its budget."""


class ConditioningError(NumericalError):
    """A per-order linear system is numerically singular."""


class OrderFailure(NumericalError):
    """The recursion failed at a specific order."""

    def __init__(self, message, order):
        self.order = order
        super().__init__(f"order {order}: {message}")


class StiffnessError(NumericalError):
    """The closed-loop integrator's step size underflowed."""

    def __init__(self, message, t):
        self.t = t
        super().__init__(f"{message} (t = {t:.6g})")
