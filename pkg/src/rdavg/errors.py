"""Exception hierarchy shared by every module.

Each class maps onto one CLI exit code (see ``rdavg.cli``).
"""


class RdavgError(Exception):
    """Base class for all package errors."""

    exit_code = 1


class ConfigurationError(RdavgError, ValueError):
    """Invalid parameters, shapes, grids or hypothesis violations."""

    exit_code = 2


class DomainError(RdavgError, ValueError):
    """Argument outside the mathematical domain of a function."""

    exit_code = 2


class NumericalError(RdavgError, ArithmeticError):
    """Base class for failures detected while computing."""

    exit_code = 3


class BlowUpError(NumericalError):
    """Non-finite state produced by the integrator."""

    def __init__(self, message, time=None):
        super().__init__(message if time is None else f"{message} (t={time:.6g})")
        self.time = time


class DiagnosticError(NumericalError):
    """A run finished but failed its own adequacy diagnostics."""


class DependencyError(RdavgError):
    """A CLI stage was invoked before the stage producing its inputs."""

    exit_code = 5
