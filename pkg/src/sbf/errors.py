"""Exception types raised across the package."""


class SbfError(Exception):
    """Base class for all errors raised by this package."""


class OntologyFormatError(SbfError):
    """Ontology source is not well-formed JSON or not the expected shape."""


class OntologyValidationError(SbfError):
    """Ontology content violates an invariant (duplicate id, dangling child)."""


class EmptyUniverseError(SbfError):
    """Restriction filtering removed every class from the tag universe."""


class EmptyCaptionError(SbfError):
    """Caption is empty or whitespace-only."""


class BackendConfigError(SbfError):
    """Embedding backend configuration is inconsistent with its kind."""


class BackendContractError(SbfError):
    """An embedding backend broke its contract (dim mismatch, bad payload)."""


class FixtureLookupError(SbfError):
    """Fixture embedding table has no entry for a requested text."""

    def __init__(self, text: str):
        super().__init__(f"no fixture embedding for text: {text!r}")
        self.text = text


class TransportError(SbfError):
    """Remote embedding service was unreachable or returned an error."""

    def __init__(self, endpoint: str, detail: str):
        super().__init__(f"embedding service at {endpoint}: {detail}")
        self.endpoint = endpoint


class DegenerateVectorError(SbfError):
    """A zero-norm vector where a direction is required."""


class DimensionMismatchError(SbfError):
    """Vectors of different dimensionality were combined."""


class DatasetSchemaError(SbfError):
    """Dataset file is missing a required column/field or has a bad value."""
