"""Exception types shared across the package.

The CLI maps these onto exit codes: ConfigError -> 2, DataError and
MeshTopologyError -> 3, ConvergenceError -> 4.
"""


class MeshLabelError(Exception):
    """Base class for all package errors."""


class ConfigError(MeshLabelError):
    """Invalid configuration (bad values, missing required fields)."""


class DataError(MeshLabelError):
    """Invalid or inconsistent data files (bad magic, size mismatch, missing asset)."""


class MeshTopologyError(MeshLabelError):
    """Mesh violates a topological precondition (non-manifold, open, degenerate).

    Carries the offending element indices so callers can report precisely
    what is broken.
    """

    def __init__(self, message: str, indices: list | None = None):
        super().__init__(message)
        self.indices = list(indices) if indices is not None else []


class ConvergenceError(MeshLabelError):
    """Iterative numerical routine failed to converge; message carries diagnostics."""
