"""Exception types raised across the package.

Every domain error derives from ClipmapError so callers can catch the
whole family at service boundaries and map it to a transport status.
"""


class ClipmapError(Exception):
    """Base class for all domain errors."""


class InvalidInput(ClipmapError):
    """Input that cannot be processed at all, e.g. text with no tokens."""


class InvalidConcept(ClipmapError):
    """Concept definition violates an invariant, e.g. zero examples."""


class InvalidWeight(ClipmapError):
    """Star rating outside the allowed set {1, 2, 3}."""


class DimensionError(ClipmapError):
    """Vector dimensionality mismatch."""


class DegenerateVector(ClipmapError):
    """Operation undefined on a zero-norm vector."""


class EmptyDocument(ClipmapError):
    """Document contains no content at all."""


class NotFound(ClipmapError):
    """Referenced entity does not exist."""


class AlreadyMember(ClipmapError):
    """Clip is already an example of the concept."""


class ProviderUnavailable(ClipmapError):
    """Embedding provider cannot be reached.

    retry_after carries the suggested backoff in seconds.
    """

    def __init__(self, message: str, retry_after: float = 1.0):
        super().__init__(message)
        self.retry_after = retry_after


class LoadError(ClipmapError):
    """Persisted state is corrupt. Names the offending file and field."""

    def __init__(self, message: str, file: str = "", field: str = ""):
        super().__init__(message)
        self.file = file
        self.field = field
