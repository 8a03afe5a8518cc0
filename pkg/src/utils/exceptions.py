# src/utils/exceptions.py

"""
Custom exception classes for the weighted interpolation inequality toolkit.

Every exception logs itself once when it is constructed, so a failure deep inside a
sweep worker still leaves a structured trace carrying the run's correlation id.

Hierarchy:
- BaseToolkitException
    - ParameterValidationException   (also ValueError) a theorem hypothesis failed
    - DegenerateParametersException  (also ValueError) a closed form has a vanishing denominator
    - DomainArgumentException        (also ValueError) nonpositive argument where positivity is required
    - GridException                  (also ValueError) bad radial grid
    - ConstraintViolationException   profile is off the constraint manifold
    - SolverDivergenceException      non-finite energy or gradient during descent
    - ConfigurationException         bad environment or config file
    - InputFormatException           malformed JSON/CSV input
"""

import logging
import traceback
from typing import Optional, Sequence

logger = logging.getLogger("ckn_toolkit.exceptions")


class BaseToolkitException(Exception):
    """
    Base class for all toolkit exceptions.
    """

    def __init__(self, message: str, details: Optional[str] = None) -> None:
        """
        Args:
            message (str): A human-readable description of the error.
            details (Optional[str]): Additional context about the error.
        """
        super().__init__(message)
        self.message = message
        self.details = details
        self.log_exception()

    def log_exception(self) -> None:
        """
        Logs the exception details; the stack trace goes to DEBUG.
        """
        error_details = f"{self.__class__.__name__}: {self.message}"
        if self.details:
            error_details += f" | Details: {self.details}"
        logger.error(error_details)
        logger.debug("Stack Trace:\n%s", traceback.format_exc())


class ParameterValidationException(BaseToolkitException, ValueError):
    """
    Raised when a parameter tuple fails a hypothesis required by the requested operation.
    """

    def __init__(self, message: str, failed_checks: Optional[Sequence[str]] = None) -> None:
        self.failed_checks = list(failed_checks or [])
        details = f"Failed checks: {', '.join(self.failed_checks)}" if self.failed_checks else None
        super().__init__(message, details)


class DegenerateParametersException(BaseToolkitException, ValueError):
    """
    Raised when a closed-form expression has a vanishing or sign-flipped denominator.
    """

    def __init__(self, message: str, quantity: Optional[str] = None) -> None:
        self.quantity = quantity
        details = f"Quantity: {quantity}" if quantity else None
        super().__init__(message, details)


class DomainArgumentException(BaseToolkitException, ValueError):
    """
    Raised when an argument that must be strictly positive is not.
    """

    def __init__(self, message: str, argument: Optional[str] = None) -> None:
        self.argument = argument
        details = f"Argument: {argument}" if argument else None
        super().__init__(message, details)


class GridException(BaseToolkitException, ValueError):
    """
    Raised for invalid radial grid bounds, node counts or solid angle.
    """

    def __init__(self, message: str, field: Optional[str] = None) -> None:
        self.field = field
        details = f"Grid field: {field}" if field else None
        super().__init__(message, details)


class ConstraintViolationException(BaseToolkitException):
    """
    Raised when a profile is required to lie on the constraint manifold but does not.
    """

    def __init__(self, message: str, r_norm: Optional[float] = None) -> None:
        self.r_norm = r_norm
        details = f"r_norm: {r_norm!r}" if r_norm is not None else None
        super().__init__(message, details)


class SolverDivergenceException(BaseToolkitException):
    """
    Raised when the descent produces a non-finite energy or gradient.
    """

    def __init__(self, message: str, iteration: Optional[int] = None) -> None:
        self.iteration = iteration
        details = f"Iteration: {iteration}" if iteration is not None else None
        super().__init__(message, details)


class ConfigurationException(BaseToolkitException):
    """
    Raised for errors in configuration or environment setup.
    """

    def __init__(self, message: str, config_key: Optional[str] = None) -> None:
        self.config_key = config_key
        details = f"Configuration Key: {config_key}" if config_key else None
        super().__init__(message, details)


class InputFormatException(BaseToolkitException):
    """
    Raised when a JSON or CSV input cannot be parsed into the expected shape.
    """

    def __init__(self, message: str, source: Optional[str] = None) -> None:
        self.source = source
        details = f"Source: {source}" if source else None
        super().__init__(message, details)
