"""Verification protocol: trials, metrics, fusion baselines, sessions.

The protocol enrolls each subject's first sample and scores the remaining
samples against it (genuine trials) plus other subjects' enrollment samples
(impostor trials).  Reports carry FAR/FRR/accuracy at the best swept
threshold and the full ROC point list.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, List, Sequence, Tuple

import numpy as np

from .compat import (
    apply_deskew,
    deskew,
    make_compatible,
    normalize_template,
    register_translation,
    scale_normalize,
)
from .config import PipelineConfig, ReductionStrategy
from .errors import (
    AlignmentError,
    DegenerateGeometryError,
    EmptyTrialsError,
    ManifestError,
)
from .io import Manifest, load_sample
from .matching import (
    Matcher,
    delaunay_match,
    delaunay_triangulate,
    _feature_rows,
    point_pattern_match,
)
from .model import Template, TemplateKind
from .reduction import concatenate, kmeans_reduce, neighborhood_eliminate, region_select

# canonical frame: face templates live in their native 256x256 box; finger
# pointsets are registered so the reference point lands here, keeping the
# two modalities spatially disjoint inside a fused template while staying
# close enough that clustering the union does not collapse into one
# cluster per modality
FINGER_FRAME_REF = (340.0, 160.0)

_TRIAL_SALT = 0xD0E5


@dataclass(frozen=True)
class TrialSet:
    """Genuine and impostor score sequences for one pipeline variant."""

    genuine: Tuple[float, ...]
    impostor: Tuple[float, ...]
    label: str


@dataclass(frozen=True)
class EvalReport:
    """Best-threshold metrics (percent) plus the swept ROC points."""

    far: float
    frr: float
    accuracy: float
    threshold: float
    roc_points: Tuple[Tuple[float, float], ...]


def sweep_metrics(trials: TrialSet, steps: int = 1000) -> EvalReport:
    """Sweep `steps` thresholds uniformly over the pooled score range.

    At each threshold: FAR = percent of impostor scores >= threshold (ties
    accept), FRR = percent of genuine scores < threshold.  The report keeps
    the threshold maximizing accuracy = 100 - (FAR + FRR) / 2, taking the
    lowest such threshold on ties.
    """
    if int(steps) < 2:
        raise ValueError(f"steps must be >= 2, got {steps}")
    gen = np.asarray(trials.genuine, dtype=np.float64)
    imp = np.asarray(trials.impostor, dtype=np.float64)
    if gen.size == 0 or imp.size == 0:
        raise EmptyTrialsError(
            f"trial set {trials.label!r} needs both genuine and impostor scores"
        )
    allsc = np.concatenate([gen, imp])
    taus = np.linspace(float(allsc.min()), float(allsc.max()), int(steps))
    gen_sorted = np.sort(gen)
    imp_sorted = np.sort(imp)
    far = (imp.size - np.searchsorted(imp_sorted, taus, side="left")) \
        * (100.0 / imp.size)
    frr = np.searchsorted(gen_sorted, taus, side="left") * (100.0 / gen.size)
    acc = 100.0 - (far + frr) / 2.0
    best = int(np.argmax(acc))
    return EvalReport(
        far=float(far[best]),
        frr=float(frr[best]),
        accuracy=float(acc[best]),
        threshold=float(taus[best]),
        roc_points=tuple(zip(far.tolist(), frr.tolist())),
    )


def _min_max_pool(gen: np.ndarray, imp: np.ndarray):
    pool = np.concatenate([gen, imp])
    lo = float(pool.min())
    hi = float(pool.max())
    if hi == lo:
        return np.zeros_like(gen), np.zeros_like(imp)
    return (gen - lo) / (hi - lo), (imp - lo) / (hi - lo)


def score_level_fuse(face_scores: TrialSet, finger_scores: TrialSet) -> TrialSet:
    """Sum-rule fusion: min-max normalize each modality's pooled scores,
    then add per trial.  Trial sequences must be aligned."""
    if (len(face_scores.genuine) != len(finger_scores.genuine)
            or len(face_scores.impostor) != len(finger_scores.impostor)):
        raise AlignmentError(
            "score fusion needs aligned trial sets: "
            f"{len(face_scores.genuine)}/{len(face_scores.impostor)} vs "
            f"{len(finger_scores.genuine)}/{len(finger_scores.impostor)}"
        )
    fg = np.asarray(face_scores.genuine, dtype=np.float64)
    fi = np.asarray(face_scores.impostor, dtype=np.float64)
    gg = np.asarray(finger_scores.genuine, dtype=np.float64)
    gi = np.asarray(finger_scores.impostor, dtype=np.float64)
    fgn, fin = _min_max_pool(fg, fi)
    ggn, gin = _min_max_pool(gg, gi)
    return TrialSet(
        genuine=tuple((fgn + ggn).tolist()),
        impostor=tuple((fin + gin).tolist()),
        label="score_fusion",
    )


Pair = Tuple[Tuple[int, int], Tuple[int, int]]


def enumerate_trials(subjects: int, samples: int, mode: str = "exhaustive",
                     impostor_r: int = 10, seed: int = 0,
                     ) -> Tuple[List[Pair], List[Pair]]:
    """Trial index pairs ((db_subject, db_sample), (q_subject, q_sample)).

    Genuine: every non-enrollment sample against its subject's enrollment
    (sample 0), S*(N-1) pairs.  Impostor, exhaustive mode: each enrollment
    against every other subject's enrollment, S*(S-1) pairs; random mode:
    impostor_r seeded random cross-subject picks per subject, S*R pairs.
    """
    if subjects < 2 or samples < 2:
        raise ManifestError(
            f"protocol needs >= 2 subjects and >= 2 samples, "
            f"got {subjects}/{samples}"
        )
    genuine = [((s, 0), (s, i))
               for s in range(subjects) for i in range(1, samples)]
    impostor: List[Pair] = []
    if mode == "exhaustive":
        for s in range(subjects):
            for t in range(subjects):
                if t != s:
                    impostor.append(((s, 0), (t, 0)))
    elif mode == "random":
        rng = np.random.Generator(
            np.random.PCG64(np.random.SeedSequence([seed, _TRIAL_SALT]))
        )
        for s in range(subjects):
            for _ in range(int(impostor_r)):
                t = int(rng.integers(subjects - 1))
                if t >= s:
                    t += 1
                j = int(rng.integers(samples))
                impostor.append(((s, 0), (t, j)))
    else:
        raise ManifestError(f"unknown impostor mode {mode!r}")
    return genuine, impostor


@dataclass
class PreparedSample:
    """One sample after the compatibility stage, before any reduction."""

    face: Template
    finger: Template


def prepare_sample(face: Template, finger: Template, image,
                   config: PipelineConfig) -> PreparedSample:
    """Run the compatibility pipeline on one raw sample.

    Face: descriptor min-max normalization.  Finger: deskew the image and
    carry the minutiae through it, attach Gabor descriptors from the
    deskewed image, rescale to the target dpi, then register the reference
    point onto the canonical frame anchor.
    """
    face = normalize_template(face)
    des = deskew(image, config.deskew_threshold)
    fin = apply_deskew(finger, des)
    fin = make_compatible(fin, des.rotated, config.gabor)
    fin = scale_normalize(fin, config.target_dpi)
    anchor = Template((), TemplateKind.FINGER, reference_point=FINGER_FRAME_REF)
    fin = register_translation(anchor, fin)
    return PreparedSample(face=face, finger=fin)


def prepare_manifest(manifest: Manifest, config: PipelineConfig,
                     ) -> List[List[PreparedSample]]:
    """Prepare every sample of every manifest subject (indexed [s][i])."""
    n_samples = {len(s.samples) for s in manifest.subjects}
    if len(manifest.subjects) < 2:
        raise ManifestError("protocol needs at least 2 subjects")
    if len(n_samples) > 1:
        raise ManifestError(
            f"subjects have differing sample counts: {sorted(n_samples)}"
        )
    if not n_samples or min(n_samples) < 2:
        raise ManifestError("protocol needs at least 2 samples per subject")
    prepared = []
    for s in range(len(manifest.subjects)):
        row = []
        for i in range(len(manifest.subjects[s].samples)):
            face, finger, image = load_sample(manifest, s, i)
            row.append(prepare_sample(face, finger, image, config))
        prepared.append(row)
    return prepared


class _ScoreEngine:
    """Scores template pairs with per-template caching.

    For the Delaunay matcher the triangle feature matrix of each template is
    computed once; templates that cannot be triangulated score 0 against
    everything (the degenerate convention).
    """

    def __init__(self, matcher: Matcher, point_th, triangle_th):
        self.matcher = matcher
        self.point_th = point_th
        self.triangle_th = triangle_th
        self._feats: Dict[int, tuple] = {}

    def _features(self, t: Template):
        key = id(t)
        hit = self._feats.get(key)
        if hit is not None:
            return hit[1]
        try:
            rows = _feature_rows(t, delaunay_triangulate(t))
        except DegenerateGeometryError:
            rows = None
        self._feats[key] = (t, rows)  # keep t alive so id() stays unique
        return rows

    def score(self, db: Template, q: Template) -> float:
        if self.matcher is Matcher.POINT_PATTERN:
            return point_pattern_match(db, q, self.point_th).score
        fa = self._features(db)
        fb = self._features(q)
        if fa is None or fb is None:
            return 0.0
        return delaunay_match(db, q, self.triangle_th,
                              db_features=fa, q_features=fb).score


def _reduce_samples(prepared: List[List[PreparedSample]],
                    config: PipelineConfig,
                    ) -> List[List[Tuple[Template, Template, Template]]]:
    """Apply the configured reduction, returning (face, finger, fused) per
    sample.  Before-fusion reductions shrink the per-modality templates
    (and therefore the monomodal routes too); after-fusion reduction leaves
    them untouched and shrinks only the fused pointset."""
    out = []
    for row in prepared:
        orow = []
        for ps in row:
            face, fin = ps.face, ps.finger
            if config.reduction is ReductionStrategy.NEIGHBORHOOD:
                face = neighborhood_eliminate(face, config.neighborhood_face_radius)
                fin = neighborhood_eliminate(fin, config.neighborhood_finger_radius)
            elif config.reduction is ReductionStrategy.REGION:
                face = region_select(face, config.region)
                fin = region_select(fin, config.region)
            fused = concatenate(face, fin)
            if config.reduction is ReductionStrategy.KMEANS:
                n = len(fused)
                krange = range(config.kmeans_kmin,
                               min(n - 1, config.kmeans_kmax) + 1)
                fused = kmeans_reduce(fused, krange, config.kmeans_seed,
                                      config.kmeans_theta_weight)
            orow.append((face, fin, fused))
        out.append(orow)
    return out


def run_trials(prepared: List[List[PreparedSample]],
               config: PipelineConfig) -> Dict[str, TrialSet]:
    """Score all protocol trials; returns trial sets labelled face, finger,
    score_fusion and feature_fusion."""
    subjects = len(prepared)
    samples = len(prepared[0])
    genuine, impostor = enumerate_trials(
        subjects, samples, config.impostor_mode,
        config.impostor_r, config.protocol_seed,
    )
    reduced = _reduce_samples(prepared, config)
    engine = _ScoreEngine(config.matcher, config.point_thresholds,
                          config.triangle_thresholds)

    def route_scores(route: int, pairs: Sequence[Pair]) -> Tuple[float, ...]:
        vals = []
        for (sd, id_), (sq, iq) in pairs:
            vals.append(engine.score(reduced[sd][id_][route],
                                     reduced[sq][iq][route]))
        return tuple(vals)

    face_ts = TrialSet(route_scores(0, genuine), route_scores(0, impostor), "face")
    finger_ts = TrialSet(route_scores(1, genuine), route_scores(1, impostor), "finger")
    fused_ts = TrialSet(route_scores(2, genuine), route_scores(2, impostor),
                        "feature_fusion")
    return {
        "face": face_ts,
        "finger": finger_ts,
        "score_fusion": score_level_fuse(face_ts, finger_ts),
        "feature_fusion": fused_ts,
    }


def run_protocol(manifest: Manifest, config: PipelineConfig,
                 ) -> Dict[str, EvalReport]:
    """Full protocol under one configuration: face-only, finger-only,
    score-level fusion and feature-level fusion reports."""
    prepared = prepare_manifest(manifest, config)
    trial_sets = run_trials(prepared, config)
    return {label: sweep_metrics(ts, config.sweep_steps)
            for label, ts in trial_sets.items()}


# session battery: the named pipeline variants reported together
_SESSION_CONFIGS = (
    ("A", ReductionStrategy.NONE, Matcher.POINT_PATTERN),
    ("B", ReductionStrategy.KMEANS, Matcher.POINT_PATTERN),
    ("C.neighborhood", ReductionStrategy.NEIGHBORHOOD, Matcher.POINT_PATTERN),
    ("C.region", ReductionStrategy.REGION, Matcher.POINT_PATTERN),
    ("D", ReductionStrategy.NONE, Matcher.DELAUNAY),
    ("D.region", ReductionStrategy.REGION, Matcher.DELAUNAY),
)


def run_sessions(manifest: Manifest, config: PipelineConfig,
                 ) -> Dict[str, EvalReport]:
    """Run the four-session battery on one prepared dataset.

    Session A: monomodal point matching.  Session B: k-means feature fusion
    against score fusion.  Session C: neighborhood and region reduction
    before fusion.  Session D: the Delaunay matcher variants.  Labels are
    `<session>.<route>`; preparation is shared across sessions.
    """
    from dataclasses import replace

    prepared = prepare_manifest(manifest, config)
    reports: Dict[str, EvalReport] = {}
    for name, strategy, matcher in _SESSION_CONFIGS:
        scfg = replace(config, reduction=strategy, reduction_stage=None,
                       matcher=matcher)
        trial_sets = run_trials(prepared, scfg)
        if name == "A":
            wanted = ("face", "finger")
        elif name == "B":
            wanted = ("score_fusion", "feature_fusion")
        elif name == "D":
            wanted = ("face", "finger", "score_fusion", "feature_fusion")
        else:
            wanted = ("feature_fusion",)
        for label in wanted:
            reports[f"{name}.{label}"] = sweep_metrics(
                trial_sets[label], scfg.sweep_steps
            )
    return reports
