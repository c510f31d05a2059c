"""This module contains the exception types raised by chaoslab."""


class ChaosLabError(Exception):
    """Base class of all errors raised deliberately by chaoslab."""


class DomainError(ChaosLabError, ValueError):
    """A state or parameter lies outside the valid domain of a model."""


class NotChaoticError(ChaosLabError, ValueError):
    """A quantity that requires a positive Lyapunov exponent was requested."""


class InsufficientDataError(ChaosLabError, ValueError):
    """A series, library or run is too short for the requested statistic."""


class NonFiniteStateError(ChaosLabError, ArithmeticError):
    """
    A simulation produced a non-finite or overflowing state.

    Attributes:
        step: Index of the iterate or generation at which the state broke down.
    """

    def __init__(self, message: str, step: int):
        super().__init__(f"{message} (at step {step})")
        self.step = step


class BoundaryContactError(ChaosLabError, RuntimeError):
    """A cluster experiment reached the lattice boundary."""
