"""Shared exception types."""


class NumericalError(RuntimeError):
    """A numerical routine failed to meet its contract (bracket, convergence)."""
