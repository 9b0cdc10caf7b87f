"""Typed error taxonomy shared across the toolkit.

Every validation failure names the offending field or input so callers can
report per-entry errors without aborting batch runs.
"""


class AffectKitError(Exception):
    """Base class for all toolkit errors."""


class MalformedSyntax(AffectKitError):
    """Input is not valid JSON text."""


class SchemaViolation(AffectKitError):
    """A record field is missing, out of range, or has the wrong shape."""

    def __init__(self, field: str, reason: str):
        self.field = field
        self.reason = reason
        super().__init__(f"{field}: {reason}")


class DegenerateImage(AffectKitError):
    """Image too small for the requested operation."""


class NoModels(AffectKitError):
    """Per-model map is empty; nothing to aggregate."""


class NoSources(AffectKitError):
    """No model labels and no human override to resolve."""


class DegenerateInput(AffectKitError):
    """Statistic undefined for this input (too short, or no variation)."""


class ZeroVariance(AffectKitError):
    """One input series is constant; correlation undefined."""

    def __init__(self, series: str):
        self.series = series
        super().__init__(f"series {series!r} has zero variance")


class LengthMismatch(AffectKitError):
    """Paired sequences differ in length."""


class EmptyInput(AffectKitError):
    """Operation requires at least one element."""


class DimensionMismatch(AffectKitError):
    """Vectors have incompatible dimensions."""


class ZeroVector(AffectKitError):
    """A direction is required but the vector has zero norm."""


class WeightOutOfRange(AffectKitError):
    """Supervision weight outside the allowed (0, 1] range."""


class AllAnchorsSkipped(AffectKitError):
    """No anchor in the batch has a positive under the mask."""


class NonFiniteComponent(AffectKitError):
    """A loss component is NaN or infinite."""

    def __init__(self, name: str, value: float):
        self.name = name
        self.value = value
        super().__init__(f"component {name!r} is non-finite ({value})")


class AlreadyFinalized(AffectKitError):
    """Decision submitted for an item that is already finalized."""


class MissingRationale(AffectKitError):
    """A No verdict was submitted without the mandatory rationale."""

    def __init__(self, field: str):
        self.field = field
        super().__init__(f"field {field!r} rejected without a rationale")


class IncompleteDecision(AffectKitError):
    """Decision does not cover every presented field exactly once."""

    def __init__(self, reason: str, field: str = ""):
        self.field = field
        super().__init__(reason)


class UnknownItem(AffectKitError):
    """Stem not present in the review queue."""
