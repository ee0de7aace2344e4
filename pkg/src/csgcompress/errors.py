"""Exception hierarchy shared across the pipeline.

The CLI maps these onto process exit codes, so raise the most specific
class available: infeasible/unsatisfiable combinatorics, malformed input
files, and bad parameter choices are different failure modes.
"""


class CsgcError(Exception):
    """Base class for all csgcompress errors."""

    #: pipeline stage name, attached by the orchestrator when known
    stage: str | None = None


class StructuralError(CsgcError):
    """An object violates a structural contract (bad tree, unknown leaf id)."""


class UnsupportedOracleError(CsgcError):
    """The inside/outside oracle cannot answer (e.g. cloud without normals)."""


class InfeasibleInstanceError(CsgcError):
    """A cover instance has universe elements no candidate can cover."""


class UnsatisfiableError(CsgcError):
    """No exact cover exists for a feasible-looking instance."""


class ParameterError(CsgcError):
    """A numeric or configuration parameter violates its contract."""


class FileFormatError(CsgcError):
    """An input file cannot be parsed; message carries file/line context."""
