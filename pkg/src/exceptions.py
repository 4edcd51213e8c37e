"""
Exception types shared by the lab modules.
"""


class LabError(Exception):
    """Base class for all lab errors."""


class ValidationError(LabError, ValueError):
    """Input outside an operation's contract."""


class ProfileResolutionError(ValidationError):
    """A measured profile is too coarse for the requested test."""

    def __init__(self, message: str, required_t_min: float):
        super().__init__(f"{message} (required t_min <= {required_t_min:.3e})")
        self.required_t_min = required_t_min


class NumericalInstabilityError(LabError, ArithmeticError):
    """A numerical result failed its own stability or convergence check."""
