"""
Errors module.
This module defines the exception hierarchy shared by the library, the CLI and the API.
"""
from pydantic import ValidationError

EXIT_OK = 0
EXIT_UNEXPECTED = 1
EXIT_USAGE = 2
EXIT_STATISTICAL = 3


class ReldepError(Exception):
    """Base class for every error raised on purpose by this package."""
    exit_code = EXIT_UNEXPECTED


class InputError(ReldepError):
    """Problems with the data handed to us: files, shapes, values."""
    exit_code = EXIT_USAGE


class DatasetError(InputError):
    """A file could not be read or parsed into a valid sample."""

    def __init__(self, message, path=None, row=None, column=None):
        self.path = path
        self.row = row
        self.column = column
        location = []
        if path is not None:
            location.append(str(path))
        if row is not None:
            location.append(f"row {row}")
        if column is not None:
            location.append(f"column {column}")
        if location:
            message = f"{message} ({', '.join(location)})"
        super().__init__(message)


class AlignmentError(InputError):
    """Samples that should describe the same units have different sizes."""


class ExperimentError(InputError):
    """An experiment was configured with values it cannot run with."""


class StatisticalError(ReldepError):
    """A statistical precondition does not hold for the given data."""
    exit_code = EXIT_STATISTICAL


class SampleSizeError(StatisticalError):
    """Too few observations for the requested estimator or split."""


class DegenerateSampleError(StatisticalError):
    """The sample carries no usable spread (e.g. all points identical)."""


class KernelContractError(StatisticalError):
    """Gram matrices were combined in a way the estimators do not allow."""


class CovarianceError(StatisticalError):
    """A covariance summary is not usable even after clamping."""


def exit_code_for(exc: BaseException) -> int:
    """
    Map an exception to the process exit code used by the CLI.

    Args:
        exc (BaseException): The exception that stopped the command

    Returns:
        int: 2 for usage and I/O problems, 3 for statistical preconditions, 1 otherwise
    """
    if isinstance(exc, ReldepError):
        return exc.exit_code
    if isinstance(exc, (ValidationError, OSError)):
        return EXIT_USAGE
    return EXIT_UNEXPECTED
