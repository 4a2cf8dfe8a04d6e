"""Deterministic synthetic chimeric dataset generator.

Each subject is a cluster-structured prototype: face keypoints form tight
blobs (plus a few points hugging the four landmarks), fingerprint minutiae
form blobs over a rectangular ridge image with a core singularity.  The
blob layout is shared across subjects; identity lives in small per-subject
per-blob offsets of position, orientation and descriptor, so clustering a
pointset suppresses per-sample jitter while preserving identity.  Samples
perturb the anchors (jitter, drops, spurious points) and move the finger
through a random rotation and translation so deskew and reference-point
registration have real work to do.

All randomness comes from numpy's PCG64 generator seeded with explicit
integer sequences, so datasets are bit-reproducible everywhere.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass
from typing import Dict, Tuple

import numpy as np

from .compat import transform_point
from .errors import ManifestError
from .io import (
    Manifest,
    ManifestSample,
    ManifestSubject,
    save_image_pgm,
    save_manifest,
    save_template,
)
from .model import FeaturePoint, GrayImage, Modality, Template, TemplateKind

DEFAULT_SUBJECTS = 50
DEFAULT_SAMPLES = 5
DEFAULT_SEED = 7

FACE_FRAME = 256.0
FACE_LANDMARKS: Dict[str, Tuple[float, float]] = {
    "leftEye": (88.0, 96.0),
    "rightEye": (168.0, 96.0),
    "noseTip": (128.0, 140.0),
    "mouth": (128.0, 180.0),
}

# blob layout: counts chosen so faces carry 145 points and fingers 50;
# few big blobs keep k-means centroids stable against membership churn
FACE_BLOBS = 5
FACE_PER_BLOB = 29
FINGER_BLOBS = 5
FINGER_PER_BLOB = 10

# blob anchors, jittered per prototype; wide separation keeps the PBM
# optimum at the blob count instead of the two modality clouds
FACE_GRID = ((64.0, 64.0), (192.0, 64.0), (128.0, 128.0),
             (64.0, 192.0), (192.0, 192.0))
FINGER_GRID = ((120.0, 100.0), (200.0, 100.0), (160.0, 160.0),
               (120.0, 220.0), (200.0, 220.0))
GRID_JITTER = 10.0

# within-blob coherence (shared by all subjects); dense blobs give raw
# impostor points plenty of near neighbours while cluster centroids keep
# only the per-subject offsets
FACE_SCATTER = 3.2      # px around the blob center
FINGER_SCATTER = 3.2
BLOB_THETA_DEV = 4.0    # deg around the blob base orientation
FINGER_THETA_DEV = 5.0  # deg around the local ridge tangent
DESC_DEV = 0.05         # per-point descriptor deviation
SPURIOUS_SCATTER = 7.0   # px: false alarms pile up around real blobs
SPURIOUS_THETA = 10.0    # deg around the blob base orientation

# per-subject identity strength (per-blob offsets)
FACE_ID_SIGMA = 2.4     # px
FINGER_ID_SIGMA = 2.1
BLOB_THETA_ID = 6.0     # deg
DESC_ID_SIGMA = 0.3

# per-sample rigid acquisition error: the capture rig drifts as a unit, so
# one shared offset moves the face pointset and (through a matching core
# detection error) the registered finger pointset the same way; small
# independent residuals sit on top of it.  Mechanical end stops bound the
# drift, so per-point matching pays for it while cluster centroids, which
# only see the rigid part, stay inside the spatial gate
BAD_SAMPLE_RATE = 0.2     # acquisitions that came out blurry end to end
BAD_JITTER_SCALE = 2.6     # spatial point jitter multiplier on those
BAD_THETA_SCALE = 2.6      # orientation jitter multiplier on those
COMMON_ALIGN_FACTOR = 1.6  # shared offset sigma = factor * spatialSigma
DRIFT_CAP_FACTOR = 1.0    # cap on the shared offset norm, ditto
FACE_ALIGN_FACTOR = 0.2    # face-only residual
CORE_NOISE_FACTOR = 0.2    # core-detection residual

# finger imaging model
IMG_SIZE = 320
RECT = (80.0, 60.0, 240.0, 260.0)   # base foreground box (x0, y0, x1, y1)
CORE_CENTER = (148.0, 132.0)        # upper-center, clear of blob anchors
CORE_JITTER = 5.0                   # subject core offset from CORE_CENTER
LAMBDA_RANGE = (8.5, 10.5)          # subject ridge wavelength, px
RIDGE_MID = 122.5                   # intensity = MID + AMP*cos(...)
RIDGE_AMP = 102.5
BACKGROUND = 255

# per-sample acquisition geometry, derived from the perturbation spec
ROTATION_FACTOR = 4.0   # rotation sigma = factor * thetaSigma, clipped
ROTATION_CLIP = 30.0
SHIFT_FACTOR = 4.0      # translation sigma = factor * spatialSigma, clipped
SHIFT_CLIP = 20.0

_PROTO_SALT = 101
_SUBJECT_SALT = 202
_SAMPLE_SALT = 303


@dataclass(frozen=True)
class PerturbationSpec:
    """Per-sample noise model applied to the subject anchors."""

    spatial_sigma: float = 1.5
    theta_sigma: float = 1.0
    descriptor_sigma: float = 0.02
    drop_rate: float = 0.1
    spurious_rate: float = 0.1

    def __post_init__(self) -> None:
        for name in ("spatial_sigma", "theta_sigma", "descriptor_sigma"):
            v = float(getattr(self, name))
            if v < 0:
                raise ValueError(f"{name} must be >= 0, got {v}")
            object.__setattr__(self, name, v)
        for name in ("drop_rate", "spurious_rate"):
            v = float(getattr(self, name))
            if not 0.0 <= v < 1.0:
                raise ValueError(f"{name} must be in [0, 1), got {v}")
            object.__setattr__(self, name, v)

    def as_dict(self) -> Dict[str, float]:
        return {
            "spatialSigma": self.spatial_sigma,
            "thetaSigma": self.theta_sigma,
            "descriptorSigma": self.descriptor_sigma,
            "dropRate": self.drop_rate,
            "spuriousRate": self.spurious_rate,
        }


@dataclass(frozen=True)
class SubjectModel:
    """Anchor pointsets plus the parameters that draw the finger image.

    face_blobs / finger_blobs hold per-blob (cx, cy, theta) after the
    subject's identity offsets; spurious points scatter around them.
    """

    subject_id: int
    seed: int
    face_anchor: Template
    finger_anchor: Template
    ridge_lambda: float
    core: Tuple[float, float]
    rect: Tuple[float, float, float, float]
    face_blobs: Tuple[Tuple[float, float, float], ...]
    finger_blobs: Tuple[Tuple[float, float, float], ...]


def _rng(*entropy: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(list(entropy))))


def _ridge_theta(x: float, y: float, core: Tuple[float, float]) -> float:
    """Local ridge tangent direction (deg): perpendicular to the radial."""
    return (math.degrees(math.atan2(y - core[1], x - core[0])) + 90.0) % 360.0


def gen_subject(subject_id: int, seed: int = DEFAULT_SEED) -> SubjectModel:
    """Deterministic subject anchors for (subject_id, seed).

    The blob prototype (centers, scatter, base orientations, base
    descriptors) depends only on the seed and is shared by every subject;
    identity enters through per-blob offsets drawn per subject.
    """
    proto = _rng(seed, _PROTO_SALT)
    # --- shared prototype, fixed draw order ---
    f_centers = (np.asarray(FACE_GRID)
                 + proto.uniform(-GRID_JITTER, GRID_JITTER, (FACE_BLOBS, 2)))
    f_theta_base = proto.uniform(0.0, 360.0, FACE_BLOBS)
    f_desc_base = proto.uniform(0.2, 0.8, (FACE_BLOBS, 128))
    f_scatter = proto.normal(0.0, FACE_SCATTER, (FACE_BLOBS, FACE_PER_BLOB, 2))
    f_theta_dev = proto.normal(0.0, BLOB_THETA_DEV, (FACE_BLOBS, FACE_PER_BLOB))
    f_desc_dev = proto.normal(0.0, DESC_DEV, (FACE_BLOBS, FACE_PER_BLOB, 128))
    rx0, ry0, rx1, ry1 = RECT
    g_centers = (np.asarray(FINGER_GRID)
                 + proto.uniform(-GRID_JITTER, GRID_JITTER, (FINGER_BLOBS, 2)))
    g_scatter = proto.normal(0.0, FINGER_SCATTER,
                             (FINGER_BLOBS, FINGER_PER_BLOB, 2))
    g_theta_dev = proto.normal(0.0, FINGER_THETA_DEV,
                               (FINGER_BLOBS, FINGER_PER_BLOB))

    # --- per-subject identity, fixed draw order ---
    ident = _rng(seed, _SUBJECT_SALT, subject_id)
    f_off = ident.normal(0.0, FACE_ID_SIGMA, (FACE_BLOBS, 2))
    f_theta_off = ident.normal(0.0, BLOB_THETA_ID, FACE_BLOBS)
    f_desc_off = ident.normal(0.0, DESC_ID_SIGMA, (FACE_BLOBS, 128))
    g_off = ident.normal(0.0, FINGER_ID_SIGMA, (FINGER_BLOBS, 2))
    g_theta_off = ident.normal(0.0, BLOB_THETA_ID, FINGER_BLOBS)
    lam = float(ident.uniform(*LAMBDA_RANGE))
    core_off = ident.uniform(-CORE_JITTER, CORE_JITTER, 2)

    face_pts = []
    for b in range(FACE_BLOBS):
        for j in range(FACE_PER_BLOB):
            pos = f_centers[b] + f_off[b] + f_scatter[b, j]
            theta = (f_theta_base[b] + f_theta_off[b] + f_theta_dev[b, j]) % 360.0
            desc = f_desc_base[b] + f_desc_off[b] + f_desc_dev[b, j]
            face_pts.append(FeaturePoint(pos[0], pos[1], theta, desc,
                                         Modality.FACE))
    face_anchor = Template(tuple(face_pts), TemplateKind.FACE,
                           landmarks=FACE_LANDMARKS)

    core = (CORE_CENTER[0] + float(core_off[0]),
            CORE_CENTER[1] + float(core_off[1]))
    finger_pts = []
    for b in range(FINGER_BLOBS):
        for j in range(FINGER_PER_BLOB):
            pos = g_centers[b] + g_off[b] + g_scatter[b, j]
            px = float(np.clip(pos[0], rx0 + 4.0, rx1 - 4.0))
            py = float(np.clip(pos[1], ry0 + 4.0, ry1 - 4.0))
            theta = (_ridge_theta(px, py, core)
                     + g_theta_off[b] + g_theta_dev[b, j]) % 360.0
            finger_pts.append(FeaturePoint(px, py, theta, None,
                                           Modality.FINGER))
    finger_anchor = Template(tuple(finger_pts), TemplateKind.FINGER,
                             reference_point=core, dpi=500)
    face_blobs = tuple(
        (float(f_centers[b, 0] + f_off[b, 0]),
         float(f_centers[b, 1] + f_off[b, 1]),
         float((f_theta_base[b] + f_theta_off[b]) % 360.0))
        for b in range(FACE_BLOBS)
    )
    finger_blobs = tuple(
        (float(g_centers[b, 0] + g_off[b, 0]),
         float(g_centers[b, 1] + g_off[b, 1]),
         float((_ridge_theta(g_centers[b, 0] + g_off[b, 0],
                             g_centers[b, 1] + g_off[b, 1], core)
                + g_theta_off[b]) % 360.0))
        for b in range(FINGER_BLOBS)
    )
    return SubjectModel(
        subject_id=int(subject_id),
        seed=int(seed),
        face_anchor=face_anchor,
        finger_anchor=finger_anchor,
        ridge_lambda=lam,
        core=core,
        rect=RECT,
        face_blobs=face_blobs,
        finger_blobs=finger_blobs,
    )


def draw_finger_image(model: SubjectModel, rotation: float,
                      shift: Tuple[float, float]) -> GrayImage:
    """Render the subject's ridge pattern rotated about the image center by
    `rotation` degrees and translated by `shift` (analytic, no resampling)."""
    c = (IMG_SIZE - 1) / 2.0
    a = math.radians(rotation)
    ca, sa = math.cos(a), math.sin(a)
    xs, ys = np.meshgrid(np.arange(IMG_SIZE, dtype=np.float64),
                         np.arange(IMG_SIZE, dtype=np.float64))
    # invert q = c + R(rot)(p - c) + shift to find the base-frame point p
    dx = xs - shift[0] - c
    dy = ys - shift[1] - c
    ux = c + ca * dx + sa * dy
    uy = c - sa * dx + ca * dy
    rx0, ry0, rx1, ry1 = model.rect
    inside = (ux >= rx0) & (ux <= rx1) & (uy >= ry0) & (uy <= ry1)
    r = np.hypot(ux - model.core[0], uy - model.core[1])
    ridge = RIDGE_MID + RIDGE_AMP * np.cos(2.0 * math.pi * r / model.ridge_lambda)
    img = np.where(inside, ridge, float(BACKGROUND))
    return GrayImage(np.clip(np.rint(img), 0, 255).astype(np.uint8))


def _sample_transform(x: float, y: float, rotation: float,
                      shift: Tuple[float, float]) -> Tuple[float, float]:
    if rotation == 0.0 and shift[0] == 0.0 and shift[1] == 0.0:
        return (x, y)   # keep zero-noise samples bit-identical to the anchor
    c = (IMG_SIZE - 1) / 2.0
    nx, ny = transform_point(x, y, rotation, (c, c))
    return (nx + shift[0], ny + shift[1])


def gen_sample(model: SubjectModel, sample_index: int,
               spec: PerturbationSpec = PerturbationSpec(),
               ) -> Tuple[Template, Template, GrayImage]:
    """One perturbed acquisition of the subject.

    Returns (face template, finger template, finger image).  Face points get
    spatial/theta/descriptor jitter, drops and spurious extras.  Finger
    points get spatial/theta jitter, drops and spurious extras in the base
    frame, then ride the sample's rigid motion together with the ridge image
    and the reference point (descriptors stay absent; they come later from
    the image).  Deterministic per (model, sample_index, spec).
    """
    rng = _rng(model.seed, _SAMPLE_SALT, model.subject_id, int(sample_index))
    # an acquisition is occasionally blurry end to end, inflating the point
    # noise of BOTH modalities at once
    bad = rng.random() < BAD_SAMPLE_RATE
    jit_scale = BAD_JITTER_SCALE if bad else 1.0
    th_scale = BAD_THETA_SCALE if bad else 1.0
    # --- face ---
    fa = model.face_anchor
    nf = len(fa)
    f_jit = rng.normal(0.0, jit_scale * spec.spatial_sigma, (nf, 2))
    f_tjit = rng.normal(0.0, th_scale * spec.theta_sigma, nf)
    f_djit = rng.normal(0.0, spec.descriptor_sigma, (nf, 128))
    f_drop = rng.random(nf) < spec.drop_rate
    # spurious points mimic detector false alarms: they pile up around real
    # structure instead of spreading uniformly over the frame
    n_spur = int(rng.binomial(nf, spec.spurious_rate))
    s_blob = rng.integers(0, FACE_BLOBS, n_spur)
    s_pos = rng.normal(0.0, SPURIOUS_SCATTER, (n_spur, 2))
    s_dtheta = rng.normal(0.0, SPURIOUS_THETA, n_spur)
    s_desc = rng.uniform(0.0, 1.0, (n_spur, 128))
    # whole-acquisition drift shared by both modalities, plus a face residual
    common = rng.normal(0.0, COMMON_ALIGN_FACTOR * spec.spatial_sigma, 2)
    cap = DRIFT_CAP_FACTOR * spec.spatial_sigma
    norm = float(np.hypot(common[0], common[1]))
    if norm > cap:
        common *= cap / norm
    f_align = common + rng.normal(0.0, FACE_ALIGN_FACTOR * spec.spatial_sigma, 2)
    face_pts = []
    for i, p in enumerate(fa.points):
        if f_drop[i]:
            continue
        face_pts.append(FeaturePoint(
            p.x + f_jit[i, 0] + f_align[0], p.y + f_jit[i, 1] + f_align[1],
            (p.theta + f_tjit[i]) % 360.0,
            p.descriptor + f_djit[i], Modality.FACE,
        ))
    for s in range(n_spur):
        bx, by, bt = model.face_blobs[int(s_blob[s])]
        face_pts.append(FeaturePoint(bx + s_pos[s, 0] + f_align[0],
                                     by + s_pos[s, 1] + f_align[1],
                                     (bt + s_dtheta[s]) % 360.0,
                                     s_desc[s], Modality.FACE))
    face = Template(tuple(face_pts), TemplateKind.FACE,
                    landmarks=FACE_LANDMARKS)

    # --- finger, in the base frame first ---
    ga = model.finger_anchor
    ng = len(ga)
    g_jit = rng.normal(0.0, jit_scale * spec.spatial_sigma, (ng, 2))
    g_tjit = rng.normal(0.0, th_scale * spec.theta_sigma, ng)
    g_drop = rng.random(ng) < spec.drop_rate
    gn_spur = int(rng.binomial(ng, spec.spurious_rate))
    rx0, ry0, rx1, ry1 = model.rect
    gs_blob = rng.integers(0, FINGER_BLOBS, gn_spur)
    gs_off = rng.normal(0.0, SPURIOUS_SCATTER, (gn_spur, 2))
    # spurious minutiae still sit on ridges, so they follow the tangent field
    gs_tnoise = rng.normal(0.0, 15.0, gn_spur)
    gs_pts = []
    for s in range(gn_spur):
        bx, by, _bt = model.finger_blobs[int(gs_blob[s])]
        px = float(np.clip(bx + gs_off[s, 0], rx0 + 4.0, rx1 - 4.0))
        py = float(np.clip(by + gs_off[s, 1], ry0 + 4.0, ry1 - 4.0))
        gs_pts.append((px, py,
                       (_ridge_theta(px, py, model.core) + gs_tnoise[s])
                       % 360.0))
    rotation = float(np.clip(rng.normal(0.0, ROTATION_FACTOR * spec.theta_sigma),
                             -ROTATION_CLIP, ROTATION_CLIP))
    shift_arr = np.clip(rng.normal(0.0, SHIFT_FACTOR * spec.spatial_sigma, 2),
                        -SHIFT_CLIP, SHIFT_CLIP)
    shift = (float(shift_arr[0]), float(shift_arr[1]))
    # a core detection error of -common shifts the registered pointset by
    # +common, mirroring the face drift in the canonical frame
    core_noise = -common + rng.normal(0.0, CORE_NOISE_FACTOR * spec.spatial_sigma, 2)
    base = []
    for i, p in enumerate(ga.points):
        if g_drop[i]:
            continue
        base.append((p.x + g_jit[i, 0], p.y + g_jit[i, 1],
                     (p.theta + g_tjit[i]) % 360.0))
    base.extend(gs_pts)
    finger_pts = []
    for (bx, by, bt) in base:
        nx, ny = _sample_transform(bx, by, rotation, shift)
        finger_pts.append(FeaturePoint(nx, ny, (bt + rotation) % 360.0,
                                       None, Modality.FINGER))
    true_core = _sample_transform(model.core[0], model.core[1], rotation, shift)
    # the stored reference point is a detection, not ground truth
    core = (true_core[0] + core_noise[0], true_core[1] + core_noise[1])
    finger = Template(tuple(finger_pts), TemplateKind.FINGER,
                      reference_point=core, dpi=500)
    image = draw_finger_image(model, rotation, shift)
    return face, finger, image


def build_dataset(subjects: int = DEFAULT_SUBJECTS,
                  samples: int = DEFAULT_SAMPLES,
                  seed: int = DEFAULT_SEED,
                  spec: PerturbationSpec = PerturbationSpec(),
                  out_dir: str = ".") -> Manifest:
    """Generate and write a full dataset; returns the saved manifest.

    Layout: s<subject>_<sample>_face.tpl / _finger.tpl / _finger.pgm plus
    manifest.json in out_dir.  Bit-identical for identical arguments.
    """
    if subjects < 2 or samples < 2:
        raise ManifestError(
            f"dataset needs >= 2 subjects and >= 2 samples, "
            f"got {subjects}/{samples}"
        )
    os.makedirs(out_dir, exist_ok=True)
    mf_subjects = []
    for sid in range(subjects):
        model = gen_subject(sid, seed)
        recs = []
        for i in range(samples):
            face, finger, image = gen_sample(model, i, spec)
            stem = f"s{sid:03d}_{i:02d}"
            face_path = f"{stem}_face.tpl"
            finger_path = f"{stem}_finger.tpl"
            image_path = f"{stem}_finger.pgm"
            save_template(face, os.path.join(out_dir, face_path))
            save_template(finger, os.path.join(out_dir, finger_path))
            save_image_pgm(image, os.path.join(out_dir, image_path))
            recs.append(ManifestSample(
                face_path=face_path,
                finger_path=finger_path,
                image_path=image_path,
                landmarks=dict(FACE_LANDMARKS),
                reference_point=finger.reference_point,
                dpi=finger.dpi,
            ))
        mf_subjects.append(ManifestSubject(sid, tuple(recs)))
    manifest = Manifest(
        root=os.path.abspath(out_dir),
        subjects=tuple(mf_subjects),
        generator={
            "subjects": int(subjects),
            "samples": int(samples),
            "seed": int(seed),
            **spec.as_dict(),
        },
    )
    save_manifest(manifest, os.path.join(out_dir, "manifest.json"))
    return manifest
