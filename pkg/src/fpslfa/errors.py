"""Exception types raised across the package."""


class FpsLfaError(Exception):
    """Base class for all package errors."""


class InvalidArgumentError(FpsLfaError, ValueError):
    pass


class ParseError(FpsLfaError):
    """A dataset file could not be parsed."""

    def __init__(self, message, path=None, line_number=None):
        self.path = path
        self.line_number = line_number
        where = ""
        if path is not None:
            where = f"{path}"
            if line_number is not None:
                where += f":{line_number}"
            where += ": "
        super().__init__(where + message)


class FormatError(FpsLfaError):
    """A model snapshot is corrupt, truncated or of the wrong version."""


class ConfigError(FpsLfaError):
    pass


class NumericalDivergenceError(FpsLfaError):
    """Factors became non-finite or exploded during an update.

    ``report`` is filled in by the training loop with the epochs completed
    before the failure.
    """

    def __init__(self, row, col, epoch=None, report=None):
        self.row = row
        self.col = col
        self.epoch = epoch
        self.report = report
        msg = f"factors diverged at entry (row={row}, col={col})"
        if epoch is not None:
            msg += f" during epoch {epoch}"
        super().__init__(msg)
