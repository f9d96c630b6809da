"""Exception hierarchy shared by the numerical modules and the CLI."""


class PhRPAError(Exception):
    """Base class for all package errors."""


class ConfigError(PhRPAError, ValueError):
    """Invalid user input: grid, potential, ladder or option values."""


class NumericalError(PhRPAError, ArithmeticError):
    """A numerical premise failed at runtime (closed gap, PSD violation, ...)."""


class GapClosedError(NumericalError):
    """The HOMO-LUMO gap is not open, so the response is unbounded."""


class KernelError(NumericalError):
    """The interaction kernel is too far from positive semidefinite."""


class ConvergenceError(NumericalError):
    """An iterative solver failed to reach the requested tolerance."""
