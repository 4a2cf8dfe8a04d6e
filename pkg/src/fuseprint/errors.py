"""Exception hierarchy for the fuseprint toolkit.

Every domain failure raises a subclass of :class:`FuseprintError` so the CLI
can map them to exit code 1; configuration/usage mistakes raise
:class:`UsageError` (exit code 2).
"""


class FuseprintError(Exception):
    """Base class for all domain errors raised by this package."""


class InvalidDescriptorError(FuseprintError):
    """Descriptor is missing or does not have exactly 128 components."""


class OutOfBoundsError(FuseprintError):
    """A point coordinate fell outside the raster it refers to."""


class EmptyForegroundError(FuseprintError):
    """Deskew found no foreground pixels below the threshold."""


class InsufficientEdgeError(FuseprintError):
    """Deskew collected fewer than the minimum samples on some edge."""


class MissingReferenceError(FuseprintError):
    """Translation registration requires a reference point on both sides."""


class MissingDpiError(FuseprintError):
    """Scale normalization requires the template's dpi metadata."""


class MissingMetadataError(FuseprintError):
    """Region selection requires landmarks and/or a reference point."""


class IncompatibleTemplateError(FuseprintError):
    """Operation needs descriptor-carrying (compatible) points."""


class TooFewPointsError(FuseprintError):
    """Clustering reduction needs at least three points."""


class DegenerateClusteringError(FuseprintError):
    """Cluster validity is undefined (k < 2 or an empty cluster)."""


class DegenerateGeometryError(FuseprintError):
    """Triangulation input has fewer than 3 points or is all collinear."""


class DegenerateTriangleError(FuseprintError):
    """Triangle feature extraction got collinear or coincident vertices."""


class KindMismatchError(FuseprintError):
    """Mono-modal matching was handed templates of different kinds."""


class AlignmentError(FuseprintError):
    """Alignment failed: fusion got trial sets with different trial counts,
    or deskew estimated a rotation outside the plausible +/-45 degrees."""


class EmptyTrialsError(FuseprintError):
    """Metric sweep needs at least one genuine and one impostor score."""


class ManifestError(FuseprintError):
    """Dataset manifest is inconsistent or references missing files."""


class TemplateFormatError(FuseprintError):
    """A template file is malformed; carries the offending line number."""

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class UnsupportedImageError(FuseprintError):
    """Image file is not a binary (P5) PGM with maxval 255."""


class UsageError(Exception):
    """Bad flags or configuration; the CLI maps this to exit code 2."""
