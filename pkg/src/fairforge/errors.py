"""
Exception hierarchy for fairforge.

Every error raised on purpose by the package derives from `ForgeError`, which
carries a short machine-readable `code` so the command line can report failures
as JSON.
"""
from typing import Any, Dict, Optional


class ForgeError(Exception):
    """Base class for all fairforge errors."""

    code: str = "forge_error"

    def to_dict(self) -> Dict[str, Any]:
        """Return the error as a JSON-serializable mapping."""
        return {"error": self.code, "message": str(self)}


class ConfigurationError(ForgeError):
    """A configuration value or range is invalid."""

    code = "configuration_error"


class DimensionError(ForgeError):
    """Array shapes do not match what an operation expects."""

    code = "dimension_error"


class NumericError(ForgeError):
    """A non-finite value appeared during a computation."""

    code = "numeric_error"

    def __init__(self, message: str, layer: Optional[str] = None):
        super().__init__(message if layer is None else f"{message} (layer: {layer})")
        self.layer = layer

    def to_dict(self) -> Dict[str, Any]:
        payload = super().to_dict()
        payload["layer"] = self.layer
        return payload


class DegenerateSampleError(ForgeError):
    """A generated column stayed constant after the resampling budget ran out."""

    code = "degenerate_sample"


class SchemaError(ForgeError):
    """Tabular data does not match its declared schema."""

    code = "schema_error"


class MetricError(ForgeError):
    """A metric is undefined for the given inputs."""

    code = "metric_error"


class FormatError(ForgeError):
    """A persisted artifact has an invalid header or unknown version."""

    code = "format_error"


class TruncatedFileError(FormatError):
    """A persisted artifact is shorter than its header declares."""

    code = "truncated_file"
