"""
Exceptions shared across the polyjoin packages.
"""


class ParameterError(ValueError):
    """A user-supplied parameter is out of its valid range."""


class BoundsViolationError(RuntimeError):
    """
    A lower bound exceeded an upper bound beyond tolerance.

    This indicates a bug in bound computation rather than bad input.
    """

    def __init__(self, message: str, pair: tuple = (), lb: float = 0.0, ub: float = 0.0):
        super().__init__(message)
        self.pair = pair
        self.lb = lb
        self.ub = ub
