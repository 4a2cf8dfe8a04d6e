"""Shared domain types and the three point-distance primitives.

A :class:`FeaturePoint` is the unified record for both SIFT keypoints
(x, y, theta, 128-value descriptor) and minutiae (x, y, theta; descriptor
attached later by the compat stage).  A :class:`Template` is the pointset of
one sample plus the registration metadata the pipeline needs (reference
point, landmarks, dpi).  All values are immutable after construction, so
templates can be shared freely between workers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import Enum
from typing import Mapping, Optional, Sequence, Tuple

import numpy as np

from .errors import InvalidDescriptorError

DESCRIPTOR_SIZE = 128

LANDMARK_KEYS = ("leftEye", "rightEye", "noseTip", "mouth")


class Modality(Enum):
    FACE = "FACE"
    FINGER = "FINGER"


class TemplateKind(Enum):
    FACE = "FACE"
    FINGER = "FINGER"
    FUSED = "FUSED"


def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=np.float64)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class FeaturePoint:
    """One feature point: location, local orientation and optional descriptor.

    theta is in degrees, [0, 360).  The descriptor, when present, has exactly
    128 components; raw minutiae carry ``descriptor=None`` until the compat
    stage attaches one.  Coordinates are reals so registration and deskew
    transforms never quantize (they may leave the original image bounds).
    """

    x: float
    y: float
    theta: float
    descriptor: Optional[np.ndarray]
    modality: Modality

    def __post_init__(self) -> None:
        object.__setattr__(self, "x", float(self.x))
        object.__setattr__(self, "y", float(self.y))
        theta = float(self.theta)
        if not 0.0 <= theta < 360.0:
            raise ValueError(f"theta must be in [0, 360), got {theta}")
        object.__setattr__(self, "theta", theta)
        if self.descriptor is not None:
            d = _freeze(np.asarray(self.descriptor))
            if d.ndim != 1 or d.shape[0] != DESCRIPTOR_SIZE:
                raise InvalidDescriptorError(
                    f"descriptor must have {DESCRIPTOR_SIZE} values, got shape {d.shape}"
                )
            object.__setattr__(self, "descriptor", d)

    @property
    def has_descriptor(self) -> bool:
        return self.descriptor is not None


@dataclass(frozen=True)
class Template:
    """A pointset for one sample, plus registration metadata.

    ``kind`` is FACE, FINGER or FUSED; fused templates keep each point's
    modality tag so per-modality retention can be reported after reduction.
    """

    points: Tuple[FeaturePoint, ...]
    kind: TemplateKind
    reference_point: Optional[Tuple[float, float]] = None
    landmarks: Optional[Mapping[str, Tuple[float, float]]] = None
    dpi: Optional[int] = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "points", tuple(self.points))
        if self.reference_point is not None:
            rx, ry = self.reference_point
            object.__setattr__(self, "reference_point", (float(rx), float(ry)))
        if self.landmarks is not None:
            lm = {str(k): (float(v[0]), float(v[1])) for k, v in self.landmarks.items()}
            object.__setattr__(self, "landmarks", lm)
        if self.dpi is not None:
            dpi = int(self.dpi)
            if dpi <= 0:
                raise ValueError(f"dpi must be positive, got {dpi}")
            object.__setattr__(self, "dpi", dpi)

    def __len__(self) -> int:
        return len(self.points)

    def coords(self) -> np.ndarray:
        """Point coordinates as an (n, 2) float64 array."""
        if not self.points:
            return np.empty((0, 2))
        return np.array([(p.x, p.y) for p in self.points])

    def thetas(self) -> np.ndarray:
        return np.array([p.theta for p in self.points])

    def descriptors(self) -> Optional[np.ndarray]:
        """Stacked (n, 128) descriptor matrix, or None if any point lacks one."""
        if not self.points:
            return np.empty((0, DESCRIPTOR_SIZE))
        if any(p.descriptor is None for p in self.points):
            return None
        return np.array([p.descriptor for p in self.points])

    def modalities(self) -> Tuple[Modality, ...]:
        return tuple(p.modality for p in self.points)

    def with_points(self, points: Sequence[FeaturePoint]) -> "Template":
        return replace(self, points=tuple(points))


@dataclass(frozen=True)
class MatchThresholds:
    """Pairing gates for the point matcher: r0 pixels, theta0 degrees, k0
    descriptor-distance units (defaults 4, 3, 6)."""

    r0: float = 4.0
    theta0: float = 3.0
    k0: float = 6.0

    def __post_init__(self) -> None:
        for name in ("r0", "theta0", "k0"):
            v = float(getattr(self, name))
            if v <= 0:
                raise ValueError(f"{name} must be strictly positive, got {v}")
            object.__setattr__(self, name, v)


@dataclass(frozen=True)
class GrayImage:
    """8-bit grayscale raster; ``pixels`` is a read-only (height, width) array."""

    pixels: np.ndarray

    def __post_init__(self) -> None:
        p = np.ascontiguousarray(self.pixels, dtype=np.uint8)
        if p.ndim != 2:
            raise ValueError(f"pixels must be 2-D, got shape {p.shape}")
        p.flags.writeable = False
        object.__setattr__(self, "pixels", p)

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    def as_float(self) -> np.ndarray:
        return self.pixels.astype(np.float64)


def spatial_distance(a: FeaturePoint, b: FeaturePoint) -> float:
    """Euclidean distance between the two point locations, in pixels."""
    return math.hypot(a.x - b.x, a.y - b.y)


def direction_distance(a: float, b: float) -> float:
    """Circular distance between two orientations in degrees.

    Both inputs are expected in [0, 360); the result is in [0, 180].
    """
    d = abs(a - b)
    return min(d, 360.0 - d)


def descriptor_distance(a, b) -> float:
    """Euclidean distance between two 128-value descriptors."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != (DESCRIPTOR_SIZE,) or b.shape != (DESCRIPTOR_SIZE,):
        raise InvalidDescriptorError(
            f"descriptors must both have {DESCRIPTOR_SIZE} values, "
            f"got {a.shape} and {b.shape}"
        )
    return float(np.sqrt(np.sum((a - b) ** 2)))
