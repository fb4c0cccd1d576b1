"""
Exception hierarchy for the LKMS thermal toolkit
"""

from typing import Optional


class LKMSException(Exception):
    """Base exception for every fault raised by the toolkit"""
    pass


class InvalidInputError(LKMSException, ValueError):
    """A precondition of an operation was violated"""
    pass


class BetaFieldError(LKMSException):
    """The inverse-temperature vector left the open forward cone"""

    def __init__(self, message: str, q=None, beta=None):
        super().__init__(message)
        self.q = q
        self.beta = beta


class DomainError(LKMSException):
    """An evaluation point lies outside the state's domain"""
    pass


class QuadratureError(LKMSException):
    """Adaptive quadrature did not reach the requested tolerance"""

    def __init__(self, message: str, error_estimate: Optional[float] = None):
        super().__init__(message)
        self.error_estimate = error_estimate


class ConfigError(LKMSException):
    """A run configuration could not be parsed or validated"""
    pass
