"""Template matchers.

Two routes to a [0, 1] similarity score: point-pattern matching (pairs
points whose spatial, orientation and descriptor distances all sit inside
the thresholds, then counts the one-to-one pairs) and Delaunay matching
(triangulates both pointsets and counts corresponding triangles by their
angle / side / orientation features).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Tuple

import numpy as np

from . import backends
from .errors import (
    DegenerateGeometryError,
    DegenerateTriangleError,
    IncompatibleTemplateError,
    KindMismatchError,
)
from .model import MatchThresholds, Template

DUPLICATE_JITTER = 1e-6
COLLINEAR_EPS = 1e-12


class Matcher(Enum):
    POINT_PATTERN = "POINT_PATTERN"
    DELAUNAY = "DELAUNAY"


@dataclass(frozen=True)
class MatchResult:
    """One-to-one pairing between two templates and its score.

    pairs holds (dbIndex, queryIndex) tuples (triangle indices for the
    Delaunay matcher); degenerate marks a Delaunay comparison that fell back
    to score 0 because one side could not be triangulated.
    """

    pairs: Tuple[Tuple[int, int], ...]
    score: float
    matcher: Matcher
    degenerate: bool = False


@dataclass(frozen=True)
class TriangleThresholds:
    """Correspondence gates for Delaunay matching: angles in degrees,
    longest side in pixels, side ratios unitless."""

    d_alpha: float = 3.0
    d_length: float = 6.0
    d_theta: float = 3.0
    d_ratio: float = 0.05

    def __post_init__(self) -> None:
        for name in ("d_alpha", "d_length", "d_theta", "d_ratio"):
            v = float(getattr(self, name))
            if v <= 0:
                raise ValueError(f"{name} must be strictly positive, got {v}")
            object.__setattr__(self, name, v)


@dataclass(frozen=True)
class TriangleFeature:
    """Similarity-invariant description of one triangle: the two smallest
    interior angles, the longest side, sorted vertex orientations and the
    sorted-side ratios l1/l2 and l2/l3."""

    alpha_min: float
    alpha_med: float
    longest: float
    thetas: Tuple[float, float, float]
    r12: float
    r23: float


def _greedy_pairs(ii: np.ndarray, jj: np.ndarray, dist: np.ndarray,
                  ) -> Tuple[Tuple[int, int], ...]:
    """One-to-one assignment: candidates ascending by (dist, i, j), each
    accepted unless either endpoint is already used."""
    if ii.size == 0:
        return ()
    order = np.lexsort((jj, ii, dist))
    used_i: set = set()
    used_j: set = set()
    pairs = []
    for o in order:
        i = int(ii[o])
        j = int(jj[o])
        if i in used_i or j in used_j:
            continue
        used_i.add(i)
        used_j.add(j)
        pairs.append((i, j))
    return tuple(pairs)


def point_pattern_match(db: Template, q: Template,
                        th: MatchThresholds = MatchThresholds()) -> MatchResult:
    """Match two compatible templates point against point.

    A db/query pair is a candidate when its spatial distance <= r0, its
    circular orientation difference <= theta0 and its descriptor distance
    <= k0; candidates are assigned greedily by ascending descriptor
    distance.  Score is 2 * pairs / (|db| + |q|), so a self-match scores 1.
    """
    if len(db) == 0 or len(q) == 0:
        return MatchResult((), 0.0, Matcher.POINT_PATTERN)
    db_desc = db.descriptors()
    q_desc = q.descriptors()
    if db_desc is None or q_desc is None:
        raise IncompatibleTemplateError(
            "point-pattern matching needs descriptors on every point; "
            "run the compatibility stage first"
        )
    ii, jj, kd = backends.point_candidates(
        db.coords(), db.thetas(), db_desc,
        q.coords(), q.thetas(), q_desc,
        th.r0, th.theta0, th.k0,
    )
    pairs = _greedy_pairs(ii, jj, kd)
    score = 2.0 * len(pairs) / (len(db) + len(q))
    return MatchResult(pairs, min(1.0, max(0.0, score)), Matcher.POINT_PATTERN)


def _dedupe(coords: np.ndarray) -> np.ndarray:
    """Perturb exact duplicate coordinates by a tiny index-keyed jitter so
    triangulation sees distinct points."""
    seen = {}
    out = coords.copy()
    for i in range(out.shape[0]):
        key = (out[i, 0], out[i, 1])
        attempt = 1
        while key in seen:
            a = 2.399963229728653 * (i + attempt)  # golden-angle spiral
            out[i, 0] = coords[i, 0] + DUPLICATE_JITTER * attempt * math.cos(a)
            out[i, 1] = coords[i, 1] + DUPLICATE_JITTER * attempt * math.sin(a)
            key = (out[i, 0], out[i, 1])
            attempt += 1
        seen[key] = i
    return out


def delaunay_triangulate(t: Template) -> np.ndarray:
    """Delaunay triangulation of the template's point coordinates.

    Returns a (t, 3) array of vertex index triples, each row sorted and the
    rows in lexicographic order.  Every triangle's circumcircle contains no
    other input point strictly inside.  Exact duplicate coordinates are
    jittered by ~1e-6 px first; fewer than 3 points or an all-collinear set
    is degenerate.
    """
    n = len(t)
    if n < 3:
        raise DegenerateGeometryError(
            f"triangulation needs >= 3 points, got {n}"
        )
    coords = _dedupe(t.coords())
    d = coords - coords[0]
    far = int(np.argmax((d ** 2).sum(axis=1)))
    dir_x, dir_y = coords[far, 0] - coords[0, 0], coords[far, 1] - coords[0, 1]
    cross = np.abs(dir_x * d[:, 1] - dir_y * d[:, 0])
    scale = max(float((d ** 2).sum(axis=1).max()), 1.0)
    if float(cross.max()) <= COLLINEAR_EPS * scale:
        raise DegenerateGeometryError("points are collinear")
    tris = backends.delaunay_core(coords)
    tris = np.sort(tris, axis=1)
    order = np.lexsort((tris[:, 2], tris[:, 1], tris[:, 0]))
    return tris[order]


def triangle_features(t: Template, tri) -> TriangleFeature:
    """Features of the triangle formed by three template point indices."""
    ia, ib, ic = (int(v) for v in tri)
    pts = t.points
    pa, pb, pc = pts[ia], pts[ib], pts[ic]
    ax, ay = pa.x, pa.y
    bx, by = pb.x, pb.y
    cx, cy = pc.x, pc.y
    cross = (bx - ax) * (cy - ay) - (by - ay) * (cx - ax)
    scale = max(
        (bx - ax) ** 2 + (by - ay) ** 2,
        (cx - ax) ** 2 + (cy - ay) ** 2,
        1.0,
    )
    if abs(cross) <= COLLINEAR_EPS * scale:
        raise DegenerateTriangleError(
            f"vertices {ia}, {ib}, {ic} are collinear"
        )
    la = math.hypot(bx - cx, by - cy)   # side opposite vertex a
    lb = math.hypot(ax - cx, ay - cy)
    lc = math.hypot(ax - bx, ay - by)

    def angle(opp, s1, s2):
        v = (s1 * s1 + s2 * s2 - opp * opp) / (2.0 * s1 * s2)
        return math.degrees(math.acos(min(1.0, max(-1.0, v))))

    angs = sorted((angle(la, lb, lc), angle(lb, la, lc), angle(lc, la, lb)))
    sides = sorted((la, lb, lc))
    thetas = tuple(sorted((pa.theta, pb.theta, pc.theta)))
    return TriangleFeature(
        alpha_min=angs[0],
        alpha_med=angs[1],
        longest=sides[2],
        thetas=thetas,
        r12=sides[0] / sides[1],
        r23=sides[1] / sides[2],
    )


def _feature_rows(t: Template, tris: np.ndarray) -> np.ndarray:
    """(t, 8) matrix of [alphaMin, alphaMed, L, th1, th2, th3, r12, r23]
    rows; triangles degenerate to the collinearity test are skipped."""
    rows = []
    for tri in tris:
        try:
            f = triangle_features(t, tri)
        except DegenerateTriangleError:
            continue
        rows.append((f.alpha_min, f.alpha_med, f.longest,
                     f.thetas[0], f.thetas[1], f.thetas[2], f.r12, f.r23))
    if not rows:
        return np.empty((0, 8))
    return np.array(rows)


def delaunay_match(db: Template, q: Template,
                   th: TriangleThresholds = TriangleThresholds(),
                   db_features: Optional[np.ndarray] = None,
                   q_features: Optional[np.ndarray] = None) -> MatchResult:
    """Match two templates by corresponding Delaunay triangles.

    Two triangles correspond when every feature difference sits inside its
    threshold (angles and sorted vertex orientations circularly, the longest
    side in pixels, both side ratios).  Greedy one-to-one assignment by
    ascending total normalized difference; score is 2 * matched /
    (triangles_db + triangles_q).  A side that cannot be triangulated gives
    score 0 with the degenerate flag set.

    Precomputed feature matrices may be passed to amortize triangulation
    across many matches against the same template.
    """
    try:
        fa = _feature_rows(db, delaunay_triangulate(db)) \
            if db_features is None else db_features
        fb = _feature_rows(q, delaunay_triangulate(q)) \
            if q_features is None else q_features
    except DegenerateGeometryError:
        return MatchResult((), 0.0, Matcher.DELAUNAY, degenerate=True)
    if fa.shape[0] == 0 or fb.shape[0] == 0:
        return MatchResult((), 0.0, Matcher.DELAUNAY, degenerate=True)
    ii, jj, cost = backends.triangle_candidates(
        fa, fb, th.d_alpha, th.d_length, th.d_theta, th.d_ratio
    )
    pairs = _greedy_pairs(ii, jj, cost)
    score = 2.0 * len(pairs) / (fa.shape[0] + fb.shape[0])
    return MatchResult(pairs, min(1.0, max(0.0, score)), Matcher.DELAUNAY)


def monomodal_match(db: Template, q: Template,
                    matcher: Matcher = Matcher.POINT_PATTERN,
                    point_thresholds: Optional[MatchThresholds] = None,
                    triangle_thresholds: Optional[TriangleThresholds] = None,
                    ) -> float:
    """Score two templates of the same kind with the chosen matcher."""
    if db.kind is not q.kind:
        raise KindMismatchError(
            f"cannot match {db.kind.name} against {q.kind.name}"
        )
    if matcher is Matcher.POINT_PATTERN:
        th = point_thresholds if point_thresholds is not None else MatchThresholds()
        return point_pattern_match(db, q, th).score
    tth = (triangle_thresholds if triangle_thresholds is not None
           else TriangleThresholds())
    return delaunay_match(db, q, tth).score
