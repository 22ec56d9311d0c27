"""Exception hierarchy shared across the toolkit.

The CLI maps these onto exit codes: usage errors exit 1, data and
validation errors exit 2, divergence and benchmark failures exit 3.
"""


class FsiError(Exception):
    """Base class for all toolkit errors. Default exit code 2."""

    exit_code = 2


class UsageError(FsiError):
    """Bad flags, unknown formats, contradictory options."""

    exit_code = 1


class DatasetError(FsiError):
    """Malformed or unreadable dataset files."""


class SamplingError(DatasetError):
    """A few-shot split cannot be drawn (e.g. a class with < k rows)."""


class StoreError(FsiError):
    """Embedding store format violations or store/dataset mismatches."""


class ComparisonError(FsiError):
    """Reference comparison problems (e.g. a missing reference cell)."""


class DivergenceError(FsiError):
    """Training produced a non-finite loss or parameter."""

    exit_code = 3

    def __init__(self, message: str, iteration: int):
        super().__init__(message)
        self.iteration = iteration


class BenchmarkError(FsiError):
    """A benchmark could not produce a valid measurement."""

    exit_code = 3
