"""Exception hierarchy shared across the package.

The CLI maps these onto stable exit codes: ``InputError`` -> 2,
``NumericalError`` -> 3.
"""


class RfqPriceError(Exception):
    """Base class for all package errors."""


class InputError(RfqPriceError, ValueError):
    """Malformed or out-of-contract input (bad CSV, invalid model, bad domain)."""


class NumericalError(RfqPriceError, ArithmeticError):
    """A numerical procedure failed (underflow, divergence, non-convergence)."""
