"""Exception and warning types raised across the package."""


class QccError(Exception):
    """Base class for all package errors."""


class DomainError(QccError, ValueError):
    """An argument lies outside the domain of the operation."""


class NonPositiveInput(DomainError):
    pass


class ParameterError(QccError, ValueError):
    pass


class ConvergenceError(QccError, ArithmeticError):
    """An iterative method did not reach its tolerance."""


class NumericalError(QccError, ArithmeticError):
    pass


class PreconditionError(QccError, ValueError):
    pass


class CoverNotFound(QccError):
    pass


class ConstructionFailed(QccError):
    pass


class SingularKernel(NumericalError):
    pass


class EmptyRegion(QccError, ValueError):
    pass


class DivisionByZero(QccError, ZeroDivisionError):
    pass


class ConfigError(QccError, ValueError):
    pass


class UnknownTable(QccError, KeyError):
    pass


class QuadratureWarning(UserWarning):
    """Integrand varies faster than the quadrature grid resolves."""
