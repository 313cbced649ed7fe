"""Exception hierarchy shared across the package."""


class FairgapError(Exception):
    """Base class for all package errors."""


class ValidationError(FairgapError):
    """An input object violates its declared invariants."""


class SchemaError(FairgapError):
    """A file or config does not match the expected schema."""


class DataError(FairgapError):
    """A data value is unusable (unparseable numeric, non-binary group, ...)."""


class EmptyGroupError(FairgapError):
    """A sensitive group has no complete cases; the estimator is undefined."""

    def __init__(self, group: int, message: str | None = None):
        self.group = group
        super().__init__(message or f"sensitive group A={group} has no complete cases")


class DimensionError(FairgapError):
    """Array shapes do not line up with what a fitted model expects."""
