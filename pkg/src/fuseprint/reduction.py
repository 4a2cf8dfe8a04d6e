"""Pointset fusion and feature-reduction strategies.

Fusion is plain concatenation of the two compatible pointsets.  Three
reductions shrink a template: k-means clustering keeping one centroid per
cluster with the cluster count picked by the PBM validity index, greedy
neighborhood elimination, and region selection around landmarks / the
reference point.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Optional, Tuple

import numpy as np

from . import backends
from .errors import (
    DegenerateClusteringError,
    IncompatibleTemplateError,
    MissingMetadataError,
    TooFewPointsError,
)
from .model import (
    LANDMARK_KEYS,
    FeaturePoint,
    Modality,
    Template,
    TemplateKind,
)

KRANGE_MAX_DEFAULT = 30
KMEANS_MAX_ITER = 100


@dataclass(frozen=True)
class ClusteringQuality:
    """PBM validity-index value and its ingredients for one clustering.

    e1: total distance of points to the global centroid; ek: total distance
    of points to their own cluster centroid; dk: largest inter-centroid
    distance.  pbm = ((1/k) * (e1/ek) * dk)**2, +inf when ek is zero.
    """

    k: int
    pbm: float
    e1: float
    ek: float
    dk: float


@dataclass(frozen=True)
class RegionSpec:
    """Disk radii for region selection (pixels).

    Face points are kept within face_radius of any named landmark; finger
    points within finger_radius of the reference point."""

    face_radius: float = 85.0
    finger_radius: float = 120.0
    face_landmark_keys: Tuple[str, ...] = LANDMARK_KEYS

    def __post_init__(self) -> None:
        object.__setattr__(self, "face_radius", float(self.face_radius))
        object.__setattr__(self, "finger_radius", float(self.finger_radius))
        object.__setattr__(
            self, "face_landmark_keys", tuple(self.face_landmark_keys)
        )
        if self.face_radius <= 0 or self.finger_radius <= 0:
            raise ValueError("region radii must be strictly positive")


def concatenate(face: Template, finger: Template) -> Template:
    """Fuse the two pointsets: face points then finger points, unchanged.

    Both sides must already be compatible (every point carrying a
    descriptor).  The fused template takes the face landmarks and the finger
    reference point so region selection still works after fusion.
    """
    for name, t in (("face", face), ("finger", finger)):
        for p in t.points:
            if p.descriptor is None:
                raise IncompatibleTemplateError(
                    f"{name} template has points without descriptors; "
                    "run the compatibility stage first"
                )
    return Template(
        points=face.points + finger.points,
        kind=TemplateKind.FUSED,
        reference_point=finger.reference_point,
        landmarks=face.landmarks,
        dpi=None,
    )


def pbm_index(points, labels, centroids) -> ClusteringQuality:
    """PBM validity index of a clustering of (x, y, theta) vectors.

    points: (n, d) array-like; labels: n cluster ids in [0, k); centroids:
    (k, d).  Requires k >= 2 and every cluster non-empty.
    """
    pts = np.asarray(points, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    cents = np.asarray(centroids, dtype=np.float64)
    k = cents.shape[0]
    if k < 2:
        raise DegenerateClusteringError(f"PBM needs k >= 2 clusters, got {k}")
    counts = np.bincount(labels, minlength=k)
    if (counts == 0).any():
        empty = int(np.argmax(counts == 0))
        raise DegenerateClusteringError(f"cluster {empty} is empty")
    global_c = pts.mean(axis=0)
    e1 = float(np.sqrt(((pts - global_c) ** 2).sum(axis=1)).sum())
    ek = float(np.sqrt(((pts - cents[labels]) ** 2).sum(axis=1)).sum())
    diff = cents[:, None, :] - cents[None, :, :]
    dk = float(np.sqrt((diff ** 2).sum(axis=2)).max())
    if ek == 0.0:
        pbm = math.inf
    else:
        pbm = ((1.0 / k) * (e1 / ek) * dk) ** 2
    return ClusteringQuality(k=k, pbm=pbm, e1=e1, ek=ek, dk=dk)


def default_krange(n: int) -> range:
    """The default cluster-count sweep 2 .. min(n - 1, 30)."""
    return range(2, min(n - 1, KRANGE_MAX_DEFAULT) + 1)


def kmeans_reduce(fused: Template, k_range: Optional[Iterable[int]] = None,
                  seed: int = 0, theta_weight: float = 1.0) -> Template:
    """Reduce a pointset to one centroid point per cluster.

    k-means runs on the (x, y, theta) vectors (theta in raw degrees scaled
    by theta_weight) for every k in k_range; the k with the highest PBM
    index wins (smallest k on ties; an infinite PBM from zero within-cluster
    scatter wins only when no finite value exists).  Each output point is
    its cluster's centroid, descriptor averaged component-wise, modality set
    to the cluster majority (earliest member breaks ties).
    """
    n = len(fused)
    if n < 3:
        raise TooFewPointsError(f"k-means reduction needs >= 3 points, got {n}")
    for p in fused.points:
        if p.descriptor is None:
            raise IncompatibleTemplateError(
                "k-means reduction needs descriptors on every point"
            )
    if k_range is None:
        k_range = default_krange(n)
    ks = sorted({int(k) for k in k_range if 2 <= int(k) <= n})
    if not ks:
        raise DegenerateClusteringError(
            f"no usable cluster count in k_range for {n} points"
        )
    w = float(theta_weight)
    pts = np.column_stack([
        fused.coords(), fused.thetas() * w
    ])
    best = None          # (pbm, k, labels, centers) with finite pbm
    best_inf = None      # fallback when every pbm is infinite
    for k in ks:
        init = backends.farthest_point_init(pts, k, seed % n)
        labels, centers = backends.kmeans_lloyd(pts, init, KMEANS_MAX_ITER)
        q = pbm_index(pts, labels, centers)
        if math.isinf(q.pbm):
            if best_inf is None:
                best_inf = (k, labels, centers)
        elif best is None or q.pbm > best[0]:
            best = (q.pbm, k, labels, centers)
    if best is not None:
        _, k, labels, centers = best
    else:
        k, labels, centers = best_inf
    desc = np.array([p.descriptor for p in fused.points])
    out = []
    for c in range(k):
        members = np.nonzero(labels == c)[0]
        cd = desc[members].mean(axis=0)
        mods = [fused.points[int(i)].modality for i in members]
        n_face = sum(1 for m in mods if m is Modality.FACE)
        n_fing = len(mods) - n_face
        if n_face > n_fing:
            mod = Modality.FACE
        elif n_fing > n_face:
            mod = Modality.FINGER
        else:
            mod = mods[0]
        theta = centers[c, 2] / w if w != 0 else 0.0
        out.append(FeaturePoint(
            float(centers[c, 0]), float(centers[c, 1]),
            float(theta) % 360.0, cd, mod,
        ))
    return fused.with_points(out)


def neighborhood_eliminate(t: Template, radius: float) -> Template:
    """Greedy thinning: scan points in order, keep one only if no
    already-kept point lies strictly within `radius` pixels."""
    radius = float(radius)
    if radius <= 0:
        raise ValueError(f"radius must be strictly positive, got {radius}")
    r2 = radius * radius
    kept = []
    kept_xy = np.empty((len(t), 2))
    nk = 0
    for p in t.points:
        if nk:
            d2 = ((kept_xy[:nk] - (p.x, p.y)) ** 2).sum(axis=1)
            if float(d2.min()) < r2:
                continue
        kept.append(p)
        kept_xy[nk] = (p.x, p.y)
        nk += 1
    return t.with_points(kept)


def region_select(t: Template, spec: RegionSpec = RegionSpec()) -> Template:
    """Keep only points inside the configured disks.

    Face points must lie within face_radius of at least one landmark;
    finger points within finger_radius of the reference point (both
    inclusive).  Fused templates route each point by its modality tag.
    """
    needs_face = any(p.modality is Modality.FACE for p in t.points)
    needs_finger = any(p.modality is Modality.FINGER for p in t.points)
    anchors = None
    if needs_face:
        lm = t.landmarks or {}
        missing = [k for k in spec.face_landmark_keys if k not in lm]
        if missing:
            raise MissingMetadataError(
                f"template lacks landmarks {missing} needed for region selection"
            )
        anchors = np.array([lm[k] for k in spec.face_landmark_keys])
    if needs_finger and t.reference_point is None:
        raise MissingMetadataError(
            "template lacks the reference point needed for region selection"
        )
    kept = []
    fr2 = spec.face_radius ** 2
    gr2 = spec.finger_radius ** 2
    for p in t.points:
        if p.modality is Modality.FACE:
            d2 = ((anchors - (p.x, p.y)) ** 2).sum(axis=1)
            if float(d2.min()) <= fr2:
                kept.append(p)
        else:
            rx, ry = t.reference_point
            if (p.x - rx) ** 2 + (p.y - ry) ** 2 <= gr2:
                kept.append(p)
    return t.with_points(kept)
