"""Release gate for the toolkit.

Each test pins one acceptance criterion: oracle equivalence against the
independent reference implementations in _oracles.py, geometric and
statistical invariants, directional accuracy orderings on the default
synthetic benchmark, and end-to-end determinism.  Runtime budgets and
tolerances are asserted inline; the terminal summary prints one PASS/FAIL
line per criterion (see conftest).
"""

import os
import time

import numpy as np
import pytest

from fuseprint.cli import main
from fuseprint.compat import GaborBankSpec, deskew, gabor_keydescriptor, min_max_normalize
from fuseprint.config import PipelineConfig
from fuseprint.evaluation import enumerate_trials, run_sessions
from fuseprint.matching import (
    Matcher,
    delaunay_match,
    delaunay_triangulate,
    point_pattern_match,
)
from fuseprint.model import (
    FeaturePoint,
    MatchThresholds,
    Modality,
    Template,
    TemplateKind,
    descriptor_distance,
    direction_distance,
)
from fuseprint.reduction import pbm_index
from fuseprint.synth import build_dataset

from _oracles import (
    candidate_edges,
    delaunay_invariants,
    max_matching,
    pbm_reference,
)
from _util import grating_image, make_point, random_template, rect_image, shift_template


@pytest.fixture(scope="module")
def benchmark_reports(tmp_path_factory):
    """The default synthetic benchmark (50 subjects x 5 samples) pushed
    through the full session battery, with the wall time it took."""
    root = tmp_path_factory.mktemp("benchmark")
    t0 = time.perf_counter()
    manifest = build_dataset(subjects=50, samples=5, seed=7, out_dir=str(root))
    reports = run_sessions(manifest, PipelineConfig())
    elapsed = time.perf_counter() - t0
    return reports, elapsed


def test_c01_greedy_pairing_matches_assignment_maximum():
    t0 = time.perf_counter()
    th = MatchThresholds()
    rng = np.random.default_rng(101)

    # jittered-copy instances, every perturbation strictly inside its gate:
    # the greedy pair count must equal the assignment maximum
    for _ in range(1000):
        n = int(rng.integers(1, 9))
        db = random_template(rng, n, TemplateKind.FACE, span=40.0)
        moved = []
        for p in db.points:
            dx, dy = rng.uniform(-1.2, 1.2, 2)
            dth = float(rng.uniform(-1.0, 1.0))
            desc = np.clip(p.descriptor + rng.normal(0.0, 0.002, 128), 0.0, 1.0)
            moved.append(FeaturePoint(p.x + dx, p.y + dy,
                                      (p.theta + dth) % 360.0, desc, p.modality))
        q = db.with_points(moved)
        got = len(point_pattern_match(db, q, th).pairs)
        best = max_matching(n, n, candidate_edges(db, q, th.r0, th.theta0, th.k0))
        assert got == best

    # generic instances with no planted correspondence, dense enough that
    # points fight over partners: within one pair of the maximum
    for _ in range(1000):
        n_db = int(rng.integers(1, 9))
        n_q = int(rng.integers(1, 9))
        db = random_template(rng, n_db, TemplateKind.FACE,
                             span=16.0, theta_span=20.0)
        q = random_template(rng, n_q, TemplateKind.FACE,
                            span=16.0, theta_span=20.0)
        got = len(point_pattern_match(db, q, th).pairs)
        best = max_matching(n_db, n_q,
                            candidate_edges(db, q, th.r0, th.theta0, th.k0))
        assert best - 1 <= got <= best

    assert time.perf_counter() - t0 < 30.0


def test_c02_pbm_index_matches_direct_formula():
    rng = np.random.default_rng(102)
    for _ in range(200):
        n = int(rng.integers(3, 11))
        k = int(rng.integers(2, n))
        pts = rng.normal(size=(n, 3)) * 50.0
        labels = np.concatenate([np.arange(k), rng.integers(0, k, n - k)])
        rng.shuffle(labels)
        cents = np.array([pts[labels == c].mean(axis=0) for c in range(k)])
        got = pbm_index(pts, labels, cents).pbm
        want = pbm_reference(pts, labels, cents)
        assert got == pytest.approx(want, rel=1e-9)


def test_c03_triangulation_empty_circumcircle_and_count():
    t0 = time.perf_counter()
    rng = np.random.default_rng(103)
    for _ in range(500):
        n = int(rng.integers(3, 51))
        coords = rng.random((n, 2)) * 500.0
        t = Template(
            tuple(make_point(float(x), float(y)) for x, y in coords),
            TemplateKind.FACE,
        )
        tris = delaunay_triangulate(t)
        circle_ok, count_ok = delaunay_invariants(coords, tris, rel_tol=1e-9)
        assert circle_ok, "a point sits strictly inside a circumcircle"
        assert count_ok, f"{len(tris)} triangles for n={n}"
    assert time.perf_counter() - t0 < 30.0


def test_c04_distance_and_normalization_properties():
    rng = np.random.default_rng(104)

    # descriptor metric: symmetry, identity, triangle inequality
    for _ in range(1000):
        a, b, c = rng.random((3, 128)) * 2.0
        assert descriptor_distance(a, b) == descriptor_distance(b, a)
        assert descriptor_distance(a, a) == 0.0
        assert descriptor_distance(a, c) \
            <= descriptor_distance(a, b) + descriptor_distance(b, c) + 1e-12

    # circular orientation distance: symmetric, zero on self, within [0, 180]
    for _ in range(1000):
        u = float(rng.random() * 360.0)
        v = float(rng.random() * 360.0)
        assert direction_distance(u, v) == direction_distance(v, u)
        assert direction_distance(u, u) == 0.0
        assert 0.0 <= direction_distance(u, v) <= 180.0

    # min-max normalization lands every component in [0, 1]
    for _ in range(1000):
        d = rng.normal(0.0, 10.0, 128)
        out = min_max_normalize(make_point(0, 0, desc=d)).descriptor
        assert float(out.min()) == 0.0 and float(out.max()) == 1.0

    # matching score is invariant under a rigid shift of both templates
    for _ in range(1000):
        n = int(rng.integers(2, 9))
        db = random_template(rng, n, TemplateKind.FACE,
                             span=12.0, theta_span=9.0)
        q = random_template(rng, n, TemplateKind.FACE,
                            span=12.0, theta_span=9.0)
        dx = float(rng.integers(-100, 101))
        dy = float(rng.integers(-100, 101))
        base = point_pattern_match(db, q).score
        moved = point_pattern_match(shift_template(db, dx, dy),
                                    shift_template(q, dx, dy)).score
        assert moved == base


def test_c05_deskew_recovers_known_rotation():
    rng = np.random.default_rng(105)
    hits = 0
    for ang in rng.uniform(-30.0, 30.0, 100):
        est = deskew(rect_image(float(ang))).angle
        if abs(est - float(ang)) <= 1.0:
            hits += 1
    assert hits >= 98, f"only {hits}/100 within 1 degree"


def test_c06_gabor_bank_orientation_selectivity():
    spec = GaborBankSpec()
    per_orientation = spec.scale_count * len(spec.phases)
    for oi, od in enumerate(spec.orientations):
        img = grating_image(od, wavelength=8.0)
        d = gabor_keydescriptor(img, 32.0, 32.0, spec)
        winner = int(np.argmax(np.abs(d))) // per_orientation
        assert winner == oi, f"orientation {od}: channel block {winner}"


def test_c07_protocol_trial_counts():
    genuine, impostor = enumerate_trials(50, 5)
    assert len(genuine) == 200
    assert len(impostor) == 2450
    genuine, impostor = enumerate_trials(100, 4, mode="random", impostor_r=10)
    assert len(genuine) == 300
    assert len(impostor) == 1000


def test_c08_feature_fusion_ordering_on_benchmark(benchmark_reports):
    reports, elapsed = benchmark_reports
    acc = {label: r.accuracy for label, r in reports.items()}
    best_mono = max(acc["A.face"], acc["A.finger"])
    assert acc["B.feature_fusion"] >= acc["B.score_fusion"], acc
    assert acc["B.score_fusion"] >= best_mono - 0.5, acc
    assert acc["B.feature_fusion"] >= best_mono + 1.0, acc
    assert elapsed < 300.0, f"benchmark took {elapsed:.1f}s"


def test_c09_delaunay_fusion_ordering_on_benchmark(benchmark_reports):
    reports, _ = benchmark_reports
    acc = {label: r.accuracy for label, r in reports.items()}
    assert acc["D.feature_fusion"] >= acc["D.score_fusion"], acc
    assert acc["D.region.feature_fusion"] >= acc["D.feature_fusion"] - 0.3, acc


def test_c10_self_match_scores_exactly_one():
    rng = np.random.default_rng(110)
    for i in range(100):
        n = int(rng.integers(5, 41))
        kind = TemplateKind.FACE if i % 2 == 0 else TemplateKind.FINGER
        t = random_template(rng, n, kind)
        assert point_pattern_match(t, t).score == 1.0
        assert delaunay_match(t, t).score == 1.0


def test_c11_end_to_end_byte_determinism(tmp_path, capsys):
    def run(tag):
        out = tmp_path / tag
        rep = tmp_path / f"{tag}_reports"
        assert main(["synth", "--out", str(out), "--subjects", "6",
                     "--samples", "3", "--seed", "11"]) == 0
        assert main(["evaluate", "--manifest", str(out / "manifest.json"),
                     "--out", str(rep)]) == 0
        return rep

    first = run("one")
    second = run("two")
    names = sorted(os.listdir(first))
    assert names == sorted(os.listdir(second))
    assert "report.txt" in names
    for name in names:
        a = (first / name).read_bytes()
        b = (second / name).read_bytes()
        assert a == b, f"report file {name} differs between runs"
