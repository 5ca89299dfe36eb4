"""Exception hierarchy for selbias."""


class SelectionError(Exception):
    """Base class for all selbias errors."""


class DomainError(SelectionError, ValueError):
    """An argument lies outside the domain of the operation."""


class CalibrationMismatchError(SelectionError, ValueError):
    """Beta cost parameters are inconsistent with the coverage rate (E[V] != 1 - p)."""


class IngestionError(SelectionError, ValueError):
    """Score samples or input files failed validation."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class ContractError(SelectionError, RuntimeError):
    """A caller-supplied function broke its contract, or an internal cross-check failed."""


class EstimationError(SelectionError, RuntimeError):
    """A Monte Carlo estimate could not be formed (e.g. no selected units)."""
