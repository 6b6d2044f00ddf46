"""Exception hierarchy used across the package."""


class BDSBMError(Exception):
    """Base class for all package errors."""


class InputError(BDSBMError, ValueError):
    """Malformed or inconsistent input data or configuration."""


class SolverError(BDSBMError, RuntimeError):
    """A variational root solve could not be bracketed."""

    def __init__(self, message, event_index=None, diagnostics=None):
        super().__init__(message)
        self.event_index = event_index
        self.diagnostics = diagnostics or {}


class EstimationError(BDSBMError, ValueError):
    """Rate estimation is undefined for the given history."""


class SelectionError(BDSBMError, ValueError):
    """Model selection cannot be carried out on the given data."""


class IngestError(BDSBMError, ValueError):
    """Publication records could not be turned into a temporal network."""
