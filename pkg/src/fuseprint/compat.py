"""Minutiae/keypoint compatibility stage.

Raw minutiae are bare (x, y, theta) records; keypoints carry a 128-value
local descriptor.  This module closes the gap so both modalities can share
one matcher: fingerprint images are deskewed from their fitted foreground
edges, templates are registered by reference point and dpi, every minutia
gets a Gabor-bank keydescriptor sampled from the image, and descriptors are
min-max normalized into [0, 1].
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Dict, Optional, Sequence, Tuple

import numpy as np

from . import backends
from .errors import (
    AlignmentError,
    EmptyForegroundError,
    InsufficientEdgeError,
    InvalidDescriptorError,
    KindMismatchError,
    MissingDpiError,
    MissingReferenceError,
    OutOfBoundsError,
)
from .model import (
    DESCRIPTOR_SIZE,
    FeaturePoint,
    GrayImage,
    Template,
    TemplateKind,
)

DEFAULT_ORIENTATIONS = (0.0, 22.5, 45.0, 67.5, 90.0, 112.5, 135.0, 157.5)
DEFAULT_PHASES = (0.0, math.pi / 2.0)

# deskew estimates beyond this are treated as segmentation failures
MAX_SKEW_DEG = 45.0
MIN_EDGE_SAMPLES = 10
EDGE_RESIDUAL_PX = 3.0


@dataclass(frozen=True)
class GaborBankSpec:
    """Filter-bank layout: len(orientations) x scale_count x len(phases)
    channels, ordered orientation-major, then scale, then phase.

    Wavelengths form the geometric ladder base * ratio**s for s in
    0..scale_count-1, with kernel sigma = 0.5 * wavelength.  Defaults give
    the 8 x 8 x 2 = 128 structure at 500 dpi.
    """

    orientations: Tuple[float, ...] = DEFAULT_ORIENTATIONS
    scale_count: int = 8
    phases: Tuple[float, ...] = DEFAULT_PHASES
    patch_radius: int = 16
    base_wavelength: float = 4.0
    wavelength_ratio: float = math.sqrt(2.0)

    def __post_init__(self) -> None:
        object.__setattr__(self, "orientations", tuple(float(o) for o in self.orientations))
        object.__setattr__(self, "phases", tuple(float(p) for p in self.phases))
        object.__setattr__(self, "scale_count", int(self.scale_count))
        object.__setattr__(self, "patch_radius", int(self.patch_radius))
        object.__setattr__(self, "base_wavelength", float(self.base_wavelength))
        object.__setattr__(self, "wavelength_ratio", float(self.wavelength_ratio))
        n = len(self.orientations) * self.scale_count * len(self.phases)
        if n != DESCRIPTOR_SIZE:
            raise ValueError(
                f"bank must have {DESCRIPTOR_SIZE} channels, got {n}"
            )
        if self.patch_radius < 1:
            raise ValueError("patch_radius must be >= 1")
        if self.base_wavelength <= 0:
            raise ValueError("base_wavelength must be positive")
        if self.wavelength_ratio <= 1.0:
            raise ValueError("wavelength_ratio must be > 1")

    def wavelengths(self) -> Tuple[float, ...]:
        return tuple(
            self.base_wavelength * self.wavelength_ratio ** s
            for s in range(self.scale_count)
        )


_BANK_CACHE: Dict[GaborBankSpec, np.ndarray] = {}


def gabor_bank(spec: GaborBankSpec) -> np.ndarray:
    """The (128, K, K) stack of zero-mean kernels for `spec` (cached)."""
    bank = _BANK_CACHE.get(spec)
    if bank is not None:
        return bank
    k = 2 * spec.patch_radius + 1
    ax = np.arange(k, dtype=np.float64) - spec.patch_radius
    xx, yy = np.meshgrid(ax, ax)
    bank = np.empty((DESCRIPTOR_SIZE, k, k))
    i = 0
    for od in spec.orientations:
        o = math.radians(od)
        xr = xx * math.cos(o) + yy * math.sin(o)
        yr = -xx * math.sin(o) + yy * math.cos(o)
        for lam in spec.wavelengths():
            sigma = 0.5 * lam
            env = np.exp(-(xr * xr + yr * yr) / (2.0 * sigma * sigma))
            for psi in spec.phases:
                kern = env * np.cos(2.0 * math.pi * xr / lam + psi)
                kern -= kern.mean()
                bank[i] = kern
                i += 1
    bank.flags.writeable = False
    _BANK_CACHE[spec] = bank
    return bank


def _patch_centers(image: GrayImage, xs, ys) -> Tuple[np.ndarray, np.ndarray]:
    xs = np.asarray(xs, dtype=np.float64)
    ys = np.asarray(ys, dtype=np.float64)
    w = image.width
    h = image.height
    bad = (xs < 0) | (xs > w - 1) | (ys < 0) | (ys > h - 1)
    if np.any(bad):
        i = int(np.argmax(bad))
        raise OutOfBoundsError(
            f"point ({xs[i]}, {ys[i]}) outside {w}x{h} image"
        )
    return np.rint(xs).astype(np.int64), np.rint(ys).astype(np.int64)


def gabor_keydescriptor(image: GrayImage, x: float, y: float,
                        spec: GaborBankSpec = GaborBankSpec()) -> np.ndarray:
    """128 filter responses at the patch centered on the pixel nearest (x, y).

    Patches reaching past the border are extended by edge replication.
    """
    cxs, cys = _patch_centers(image, [x], [y])
    out = backends.gabor_responses(image.as_float(), cxs, cys, gabor_bank(spec))
    return out[0]


def min_max_normalize(p: FeaturePoint) -> FeaturePoint:
    """Rescale the point's descriptor to [0, 1] by its own min and max.

    A constant descriptor maps to all zeros.  Location and theta unchanged.
    """
    if p.descriptor is None:
        raise InvalidDescriptorError("point has no descriptor to normalize")
    d = p.descriptor
    lo = float(d.min())
    hi = float(d.max())
    if hi == lo:
        nd = np.zeros(DESCRIPTOR_SIZE)
    else:
        nd = (d - lo) / (hi - lo)
    return FeaturePoint(p.x, p.y, p.theta, nd, p.modality)


def normalize_template(t: Template) -> Template:
    """min_max_normalize applied to every point of the template."""
    return t.with_points([min_max_normalize(p) for p in t.points])


def make_compatible(minutiae: Template, image: GrayImage,
                    spec: GaborBankSpec = GaborBankSpec()) -> Template:
    """Attach a normalized Gabor keydescriptor to every minutia.

    The input must be a FINGER template whose points lie inside the image;
    the output has the same points, metadata and count, each point carrying
    128 values in [0, 1].
    """
    if minutiae.kind is not TemplateKind.FINGER:
        raise KindMismatchError(
            f"make_compatible expects a FINGER template, got {minutiae.kind.name}"
        )
    if not minutiae.points:
        return minutiae
    xs = [p.x for p in minutiae.points]
    ys = [p.y for p in minutiae.points]
    cxs, cys = _patch_centers(image, xs, ys)
    resp = backends.gabor_responses(image.as_float(), cxs, cys, gabor_bank(spec))
    out = []
    for p, d in zip(minutiae.points, resp):
        out.append(min_max_normalize(
            FeaturePoint(p.x, p.y, p.theta, d, p.modality)
        ))
    return minutiae.with_points(out)


def _shift(t: Template, ox: float, oy: float) -> Template:
    pts = [FeaturePoint(p.x + ox, p.y + oy, p.theta, p.descriptor, p.modality)
           for p in t.points]
    ref = t.reference_point
    if ref is not None:
        ref = (ref[0] + ox, ref[1] + oy)
    lm = t.landmarks
    if lm is not None:
        lm = {k: (v[0] + ox, v[1] + oy) for k, v in lm.items()}
    return Template(tuple(pts), t.kind, ref, lm, t.dpi)


def register_translation(db: Template, query: Template) -> Template:
    """Shift the query so its reference point coincides with the db's.

    All coordinates (points, reference point, landmarks) move rigidly;
    theta values and descriptors are untouched.
    """
    if db.reference_point is None:
        raise MissingReferenceError("database template has no reference point")
    if query.reference_point is None:
        raise MissingReferenceError("query template has no reference point")
    ox = db.reference_point[0] - query.reference_point[0]
    oy = db.reference_point[1] - query.reference_point[1]
    return _shift(query, ox, oy)


def scale_normalize(template: Template, target_dpi: int) -> Template:
    """Rescale all coordinates by target_dpi / template.dpi; theta unchanged."""
    if template.dpi is None:
        raise MissingDpiError("template has no dpi to scale from")
    target_dpi = int(target_dpi)
    if target_dpi <= 0:
        raise ValueError("target_dpi must be positive")
    f = target_dpi / template.dpi
    pts = [FeaturePoint(p.x * f, p.y * f, p.theta, p.descriptor, p.modality)
           for p in template.points]
    ref = template.reference_point
    if ref is not None:
        ref = (ref[0] * f, ref[1] * f)
    lm = template.landmarks
    if lm is not None:
        lm = {k: (v[0] * f, v[1] * f) for k, v in lm.items()}
    return Template(tuple(pts), template.kind, ref, lm, target_dpi)


@dataclass(frozen=True)
class DeskewResult:
    """Outcome of foreground-edge skew estimation.

    angle is the estimated content rotation in degrees; `rotated` is the
    input counter-rotated by that angle about `center` (the foreground
    bounding-box center in the original image); bounding_box is the tight
    (x0, y0, x1, y1) inclusive box of the rotated foreground.  The three
    fitted (m, b) line parameters are kept for inspection: left and right
    edges as x = m*y + b, the top edge as y = m*x + b.
    """

    angle: float
    rotated: GrayImage
    bounding_box: Tuple[int, int, int, int]
    center: Tuple[float, float]
    left_line: Tuple[float, float]
    right_line: Tuple[float, float]
    top_line: Tuple[float, float]


def rotate_image(image: GrayImage, angle_deg: float,
                 center: Optional[Tuple[float, float]] = None,
                 fill: int = 255) -> GrayImage:
    """Rotate image content by angle_deg about `center` (default: image
    center), bilinear resampling, out-of-frame samples set to `fill`.

    Positive angles rotate content from the +x axis toward the +y axis
    (clockwise on screen with y pointing down).
    """
    h = image.height
    w = image.width
    if center is None:
        center = ((w - 1) / 2.0, (h - 1) / 2.0)
    cx, cy = float(center[0]), float(center[1])
    a = math.radians(angle_deg)
    ca = math.cos(a)
    sa = math.sin(a)
    xs, ys = np.meshgrid(np.arange(w, dtype=np.float64),
                         np.arange(h, dtype=np.float64))
    dx = xs - cx
    dy = ys - cy
    # inverse map: rotate output coords by -angle to find the source pixel
    sx = cx + ca * dx + sa * dy
    sy = cy - sa * dx + ca * dy
    x0 = np.floor(sx).astype(np.int64)
    y0 = np.floor(sy).astype(np.int64)
    fx = sx - x0
    fy = sy - y0
    src = image.as_float()

    def at(yy, xx):
        inside = (xx >= 0) & (xx <= w - 1) & (yy >= 0) & (yy <= h - 1)
        v = src[np.clip(yy, 0, h - 1), np.clip(xx, 0, w - 1)]
        return np.where(inside, v, float(fill))

    v = (at(y0, x0) * (1 - fx) * (1 - fy)
         + at(y0, x0 + 1) * fx * (1 - fy)
         + at(y0 + 1, x0) * (1 - fx) * fy
         + at(y0 + 1, x0 + 1) * fx * fy)
    out = np.clip(np.rint(v), 0, 255).astype(np.uint8)
    return GrayImage(out)


def transform_point(x: float, y: float, angle_deg: float,
                    center: Tuple[float, float]) -> Tuple[float, float]:
    """Forward map of rotate_image: where content at (x, y) lands after
    rotating by angle_deg about center."""
    a = math.radians(angle_deg)
    ca = math.cos(a)
    sa = math.sin(a)
    dx = x - center[0]
    dy = y - center[1]
    return (center[0] + ca * dx - sa * dy, center[1] + sa * dx + ca * dy)


def _edge_branch(pos: np.ndarray, val: np.ndarray, take_max: bool):
    """Longest monotone branch of an edge trace around its extremum.

    A rotated convex foreground's per-row (or per-column) boundary trace is
    piecewise linear, bending at the extreme corner onto a different edge;
    only the longer branch belongs to the edge being fitted.
    """
    ext = int(np.argmax(val)) if take_max else int(np.argmin(val))
    if ext + 1 >= pos.size - ext:
        return pos[:ext + 1], val[:ext + 1]
    return pos[ext:], val[ext:]


def _fit_edge(pos: np.ndarray, val: np.ndarray, take_max: bool):
    pos, val = _edge_branch(pos, val, take_max)
    if pos.size < MIN_EDGE_SAMPLES:
        raise InsufficientEdgeError(
            f"edge has only {pos.size} usable samples, "
            f"need >= {MIN_EDGE_SAMPLES}"
        )
    p = pos.astype(np.float64)
    v = val.astype(np.float64)
    # the trace ends can still carry a few samples from the adjacent edge
    # (the branch split lands on the quantized extremum, not the true
    # corner), and a least-squares line is defenceless against them; seed
    # with a median-of-paired-slopes estimate, trim, then refit
    h = p.size // 2
    m = float(np.median((v[h:2 * h] - v[:h]) / (p[h:2 * h] - p[:h])))
    b = float(np.median(v - m * p))
    keep = np.abs(v - (m * p + b)) <= EDGE_RESIDUAL_PX
    if int(keep.sum()) >= MIN_EDGE_SAMPLES:
        m, b = np.polyfit(p[keep], v[keep], 1)
    return float(m), float(b)


def deskew(image: GrayImage, foreground_threshold: int = 240) -> DeskewResult:
    """Estimate and remove the global rotation of the dark foreground.

    Foreground pixels are those strictly below the threshold.  Per foreground
    row the first and last columns sample the left/right edges; per column
    the first row samples the top edge.  Least-squares lines through the
    edges (x = m*y + b for left/right, y = m*x + b for top) each give a
    rotation estimate; the result is their mean, and the returned image is
    rotated by its negation about the foreground bounding-box center.
    """
    mask = image.pixels < foreground_threshold
    if not mask.any():
        raise EmptyForegroundError(
            f"no pixels below threshold {foreground_threshold}"
        )
    rows = np.nonzero(mask.any(axis=1))[0]
    cols = np.nonzero(mask.any(axis=0))[0]
    if rows.size < MIN_EDGE_SAMPLES or cols.size < MIN_EDGE_SAMPLES:
        raise InsufficientEdgeError(
            f"need >= {MIN_EDGE_SAMPLES} edge samples, got "
            f"{rows.size} rows / {cols.size} columns"
        )
    left = mask[rows].argmax(axis=1)
    right = mask.shape[1] - 1 - mask[rows, ::-1].argmax(axis=1)
    top = mask[:, cols].argmax(axis=0)

    ml, bl = _fit_edge(rows, left, take_max=False)
    mr, br = _fit_edge(rows, right, take_max=True)
    mt, bt = _fit_edge(cols, top, take_max=False)

    # each edge slope estimates the content rotation: vertical edges tilt to
    # x = m*y + b with m = -tan(angle), the top edge to y = m*x + b with
    # m = +tan(angle); average in angle space
    est = (
        -math.degrees(math.atan(ml))
        - math.degrees(math.atan(mr))
        + math.degrees(math.atan(mt))
    ) / 3.0
    if abs(est) > MAX_SKEW_DEG:
        raise AlignmentError(
            f"estimated skew {est:.2f} deg exceeds {MAX_SKEW_DEG} deg; "
            "treating as segmentation failure"
        )
    x0, x1 = int(cols[0]), int(cols[-1])
    y0, y1 = int(rows[0]), int(rows[-1])
    center = ((x0 + x1) / 2.0, (y0 + y1) / 2.0)
    rotated = rotate_image(image, -est, center=center)
    rmask = rotated.pixels < foreground_threshold
    if not rmask.any():
        raise EmptyForegroundError("foreground lost during deskew rotation")
    rrows = np.nonzero(rmask.any(axis=1))[0]
    rcols = np.nonzero(rmask.any(axis=0))[0]
    box = (int(rcols[0]), int(rrows[0]), int(rcols[-1]), int(rrows[-1]))
    return DeskewResult(
        angle=float(est),
        rotated=rotated,
        bounding_box=box,
        center=center,
        left_line=(float(ml), float(bl)),
        right_line=(float(mr), float(br)),
        top_line=(float(mt), float(bt)),
    )


def apply_deskew(template: Template, result: DeskewResult) -> Template:
    """Carry template coordinates through the deskew rotation.

    Points, the reference point and landmarks follow the same counter
    rotation the image content received; each point's theta is reduced by
    the estimated angle (mod 360).
    """
    ang = -result.angle
    pts = []
    for p in template.points:
        nx, ny = transform_point(p.x, p.y, ang, result.center)
        pts.append(FeaturePoint(nx, ny, (p.theta + ang) % 360.0,
                                p.descriptor, p.modality))
    ref = template.reference_point
    if ref is not None:
        ref = transform_point(ref[0], ref[1], ang, result.center)
    lm = template.landmarks
    if lm is not None:
        lm = {k: transform_point(v[0], v[1], ang, result.center)
              for k, v in lm.items()}
    return Template(tuple(pts), template.kind, ref, lm, template.dpi)
