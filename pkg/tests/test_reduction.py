import math

import numpy as np
import pytest

from fuseprint.errors import (
    DegenerateClusteringError,
    IncompatibleTemplateError,
    MissingMetadataError,
    TooFewPointsError,
)
from fuseprint.model import Modality, Template, TemplateKind
from fuseprint.reduction import (
    RegionSpec,
    concatenate,
    default_krange,
    kmeans_reduce,
    neighborhood_eliminate,
    pbm_index,
    region_select,
)

from _oracles import pbm_reference
from _util import flat_desc, make_point, random_template


def _fused(rng, n_face=6, n_finger=6):
    face = random_template(rng, n_face, TemplateKind.FACE)
    finger = random_template(rng, n_finger, TemplateKind.FINGER)
    return concatenate(face, finger)


class TestConcatenate:
    def test_order_kind_and_metadata(self):
        face = Template(
            (make_point(1, 1, desc=flat_desc(), modality=Modality.FACE),),
            TemplateKind.FACE,
            landmarks={"leftEye": (0, 0)},
        )
        finger = Template(
            (make_point(2, 2, desc=flat_desc(), modality=Modality.FINGER),),
            TemplateKind.FINGER,
            reference_point=(9.0, 9.0),
        )
        fused = concatenate(face, finger)
        assert fused.kind is TemplateKind.FUSED
        assert [p.modality for p in fused.points] \
            == [Modality.FACE, Modality.FINGER]
        assert fused.reference_point == (9.0, 9.0)
        assert fused.landmarks == {"leftEye": (0.0, 0.0)}
        assert fused.dpi is None

    def test_counts_add_up(self):
        rng = np.random.default_rng(19)
        face = random_template(rng, 145, TemplateKind.FACE)
        finger = random_template(rng, 50, TemplateKind.FINGER)
        assert len(concatenate(face, finger)) == 195

    def test_empty_side_passes_through(self):
        rng = np.random.default_rng(20)
        face = Template((), TemplateKind.FACE)
        finger = random_template(rng, 4, TemplateKind.FINGER)
        fused = concatenate(face, finger)
        assert fused.kind is TemplateKind.FUSED
        assert fused.points == finger.points

    def test_requires_descriptors(self):
        face = Template((make_point(1, 1),), TemplateKind.FACE)
        finger = Template((), TemplateKind.FINGER)
        with pytest.raises(IncompatibleTemplateError):
            concatenate(face, finger)


class TestPbmIndex:
    def test_hand_value(self):
        # two tight pairs 10 apart; every term is exact by hand:
        # e1 = 4*sqrt(25.25), ek = 4*0.5, dk = 10, k = 2
        # pbm = ((1/2) * (e1/ek) * dk)^2 = (sqrt(25.25)*10)^2 = 2525
        pts = np.array([[0.0, 0.0], [0.0, 1.0], [10.0, 0.0], [10.0, 1.0]])
        labels = np.array([0, 0, 1, 1])
        cents = np.array([[0.0, 0.5], [10.0, 0.5]])
        q = pbm_index(pts, labels, cents)
        assert q.k == 2
        assert q.ek == pytest.approx(2.0, rel=1e-12)
        assert q.dk == pytest.approx(10.0, rel=1e-12)
        assert q.e1 == pytest.approx(4.0 * math.sqrt(25.25), rel=1e-12)
        assert q.pbm == pytest.approx(2525.0, rel=1e-12)

    def test_zero_scatter_is_infinite(self):
        pts = np.array([[0.0, 0.0], [4.0, 0.0]])
        q = pbm_index(pts, np.array([0, 1]), pts.copy())
        assert math.isinf(q.pbm)

    def test_true_split_beats_oversplit(self):
        # two symmetric blobs: the honest k=2 labeling scores higher than
        # splitting one blob in half
        rng = np.random.default_rng(4)
        pts = np.vstack([rng.normal(0.0, 1.0, (10, 2)),
                         rng.normal(0.0, 1.0, (10, 2)) + [50.0, 0.0]])
        lab2 = np.repeat([0, 1], 10)
        c2 = np.array([pts[lab2 == i].mean(axis=0) for i in range(2)])
        lab3 = lab2.copy()
        lab3[np.argsort(pts[:10, 0])[:5]] = 2
        c3 = np.array([pts[lab3 == i].mean(axis=0) for i in range(3)])
        assert pbm_index(pts, lab2, c2).pbm > pbm_index(pts, lab3, c3).pbm

    def test_matches_reference_on_random_clusterings(self):
        rng = np.random.default_rng(12)
        for _ in range(50):
            n = int(rng.integers(4, 11))
            k = int(rng.integers(2, n))
            pts = rng.normal(size=(n, 3)) * 40.0
            labels = np.concatenate([np.arange(k), rng.integers(0, k, n - k)])
            rng.shuffle(labels)
            cents = np.array([pts[labels == c].mean(axis=0) for c in range(k)])
            got = pbm_index(pts, labels, cents).pbm
            want = pbm_reference(pts, labels, cents)
            assert got == pytest.approx(want, rel=1e-9)


class TestKmeansReduce:
    def test_output_shape_and_determinism(self):
        rng = np.random.default_rng(5)
        fused = _fused(rng, 10, 10)
        a = kmeans_reduce(fused, seed=3)
        b = kmeans_reduce(fused, seed=3)
        assert 2 <= len(a) < len(fused)
        assert a.kind is TemplateKind.FUSED
        for p, q in zip(a.points, b.points):
            assert (p.x, p.y, p.theta) == (q.x, q.y, q.theta)
            assert np.array_equal(p.descriptor, q.descriptor)
            assert p.modality is q.modality

    def test_two_blobs_collapse_to_two_centroids(self):
        # 5 + 5 points in far-apart blobs with k pinned to 2: centroids
        # must sit on the blob means, modality following the members
        pts = []
        rng = np.random.default_rng(9)
        for cx, mod in ((0.0, Modality.FACE), (300.0, Modality.FINGER)):
            for _ in range(5):
                pts.append(make_point(cx + rng.random(), rng.random(),
                                      10.0, flat_desc(0.5), mod))
        fused = Template(tuple(pts), TemplateKind.FUSED)
        out = kmeans_reduce(fused, k_range=[2])
        assert len(out) == 2
        xs = sorted(p.x for p in out.points)
        assert xs[0] == pytest.approx(np.mean([p.x for p in pts[:5]]))
        assert xs[1] == pytest.approx(np.mean([p.x for p in pts[5:]]))
        mods = {p.modality for p in out.points}
        assert mods == {Modality.FACE, Modality.FINGER}

    def test_three_blobs_select_three_centroids(self):
        # tight, well-separated blobs: the validity sweep must land on k=3
        rng = np.random.default_rng(3)
        pts = []
        for cx, cy in ((0.0, 0.0), (200.0, 0.0), (100.0, 180.0)):
            for _ in range(10):
                pts.append(make_point(cx + rng.normal(0, 0.8),
                                      cy + rng.normal(0, 0.8),
                                      0.0, rng.random(128),
                                      Modality.FACE if len(pts) % 2 == 0
                                      else Modality.FINGER))
        fused = Template(tuple(pts), TemplateKind.FUSED)
        out = kmeans_reduce(fused, k_range=range(2, 9))
        assert len(out) == 3
        got = sorted((round(p.x, 6), round(p.y, 6)) for p in out.points)
        want = []
        xy = np.array([[p.x, p.y] for p in pts])
        for lo in (0, 10, 20):
            m = xy[lo:lo + 10].mean(axis=0)
            want.append((round(float(m[0]), 6), round(float(m[1]), 6)))
        assert got == sorted(want)

    def test_k_equal_to_n_returns_the_points(self):
        pts = [make_point(0, 0, 0, flat_desc(0.1)),
               make_point(50, 0, 90, flat_desc(0.5)),
               make_point(0, 50, 180, flat_desc(0.9))]
        out = kmeans_reduce(Template(tuple(pts), TemplateKind.FUSED),
                            k_range=[3])
        assert sorted((p.x, p.y) for p in out.points) \
            == [(0.0, 0.0), (0.0, 50.0), (50.0, 0.0)]

    def test_descriptor_is_cluster_mean(self):
        pts = [
            make_point(0, 0, 0, flat_desc(0.2), Modality.FACE),
            make_point(1, 0, 0, flat_desc(0.4), Modality.FACE),
            make_point(200, 0, 0, flat_desc(1.0), Modality.FINGER),
            make_point(201, 0, 0, flat_desc(0.0), Modality.FINGER),
        ]
        out = kmeans_reduce(Template(tuple(pts), TemplateKind.FUSED),
                            k_range=[2])
        by_x = sorted(out.points, key=lambda p: p.x)
        assert by_x[0].descriptor[0] == pytest.approx(0.3)
        assert by_x[1].descriptor[0] == pytest.approx(0.5)

    def test_too_few_points(self):
        rng = np.random.default_rng(1)
        t = random_template(rng, 2, TemplateKind.FUSED)
        with pytest.raises(TooFewPointsError):
            kmeans_reduce(t)

    def test_unusable_krange(self):
        rng = np.random.default_rng(1)
        t = random_template(rng, 5, TemplateKind.FUSED)
        with pytest.raises(DegenerateClusteringError):
            kmeans_reduce(t, k_range=[17])

    def test_needs_descriptors(self):
        t = Template(
            tuple(make_point(i, i) for i in range(4)), TemplateKind.FUSED
        )
        with pytest.raises(IncompatibleTemplateError):
            kmeans_reduce(t)

    def test_default_krange(self):
        assert list(default_krange(5)) == [2, 3, 4]
        assert default_krange(100).stop == 31    # capped at 30


class TestNeighborhoodEliminate:
    def test_strictly_within_radius_eliminated(self):
        t = Template(
            (make_point(0, 0), make_point(0, 3.999), make_point(0, 4.0)),
            TemplateKind.FINGER,
        )
        out = neighborhood_eliminate(t, 4.0)
        # the middle point is closer than the radius to a kept one, the
        # third sits exactly at the radius and is kept (strict comparison)
        assert [(p.x, p.y) for p in out.points] == [(0.0, 0.0), (0.0, 4.0)]

    def test_scan_order_keeps_first(self):
        t = Template(
            (make_point(0, 0), make_point(1, 0), make_point(2, 0)),
            TemplateKind.FACE,
        )
        out = neighborhood_eliminate(t, 1.5)
        assert [(p.x, p.y) for p in out.points] == [(0.0, 0.0), (2.0, 0.0)]

    def test_radius_validated(self):
        t = Template((), TemplateKind.FACE)
        with pytest.raises(ValueError):
            neighborhood_eliminate(t, 0.0)


class TestRegionSelect:
    def test_face_disk_inclusive(self):
        lm = {"leftEye": (0.0, 0.0), "rightEye": (500.0, 0.0),
              "noseTip": (250.0, 500.0), "mouth": (250.0, 600.0)}
        t = Template(
            (make_point(85.0, 0.0),          # exactly on the boundary
             make_point(85.001, 0.0),        # just outside every disk
             make_point(499.0, 1.0)),        # inside the rightEye disk
            TemplateKind.FACE,
            landmarks=lm,
        )
        out = region_select(t)
        assert [(p.x, p.y) for p in out.points] \
            == [(85.0, 0.0), (499.0, 1.0)]

    def test_finger_disk_inclusive(self):
        t = Template(
            (make_point(120.0, 0.0, modality=Modality.FINGER),
             make_point(120.5, 0.0, modality=Modality.FINGER)),
            TemplateKind.FINGER,
            reference_point=(0.0, 0.0),
        )
        out = region_select(t)
        assert [(p.x, p.y) for p in out.points] == [(120.0, 0.0)]

    def test_fused_routes_by_modality(self):
        lm = {"leftEye": (0.0, 0.0), "rightEye": (10.0, 0.0),
              "noseTip": (5.0, 10.0), "mouth": (5.0, 14.0)}
        t = Template(
            (make_point(3.0, 3.0, desc=flat_desc(), modality=Modality.FACE),
             make_point(400.0, 0.0, desc=flat_desc(), modality=Modality.FINGER)),
            TemplateKind.FUSED,
            reference_point=(395.0, 0.0),
            landmarks=lm,
        )
        out = region_select(t)
        assert len(out) == 2

    def test_missing_metadata(self):
        t = Template((make_point(0, 0),), TemplateKind.FACE)
        with pytest.raises(MissingMetadataError):
            region_select(t)
        t = Template(
            (make_point(0, 0, modality=Modality.FINGER),), TemplateKind.FINGER
        )
        with pytest.raises(MissingMetadataError):
            region_select(t)

    def test_radii_validated(self):
        with pytest.raises(ValueError):
            RegionSpec(face_radius=0.0)
