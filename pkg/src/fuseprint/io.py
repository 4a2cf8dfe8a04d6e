"""File formats: templates, PGM images, dataset manifests, report files.

Template files are line-oriented text.  A `kind` header, optional metadata
lines (`dpi`, `refpoint`, `landmark <name> <x> <y>`), then one point per
line: `<modality> <x> <y> <theta>` plus 128 descriptor values when present.
All numbers are written with 17 significant digits so a save/load round
trip is bit exact.  Images are binary PGM (P5, maxval 255).  Manifests are
JSON with sorted keys and relative paths.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from typing import Dict, Optional, Tuple

import numpy as np

from .errors import ManifestError, TemplateFormatError, UnsupportedImageError
from .model import (
    DESCRIPTOR_SIZE,
    FeaturePoint,
    GrayImage,
    Modality,
    Template,
    TemplateKind,
)


def _fmt(v: float) -> str:
    return format(float(v), ".17g")


def save_template(t: Template, path: str) -> None:
    lines = [f"kind {t.kind.value}"]
    if t.dpi is not None:
        lines.append(f"dpi {t.dpi}")
    if t.reference_point is not None:
        rx, ry = t.reference_point
        lines.append(f"refpoint {_fmt(rx)} {_fmt(ry)}")
    if t.landmarks is not None:
        for name in sorted(t.landmarks):
            lx, ly = t.landmarks[name]
            lines.append(f"landmark {name} {_fmt(lx)} {_fmt(ly)}")
    for p in t.points:
        head = f"{p.modality.value} {_fmt(p.x)} {_fmt(p.y)} {_fmt(p.theta)}"
        if p.descriptor is not None:
            head += " " + " ".join(_fmt(v) for v in p.descriptor)
        lines.append(head)
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def _parse_float(tok: str, lineno: int, what: str) -> float:
    try:
        return float(tok)
    except ValueError:
        raise TemplateFormatError(f"bad {what} value {tok!r}", lineno) from None


def load_template(path: str) -> Template:
    kind: Optional[TemplateKind] = None
    dpi: Optional[int] = None
    refpoint: Optional[Tuple[float, float]] = None
    landmarks: Dict[str, Tuple[float, float]] = {}
    points = []
    with open(path, "r", encoding="ascii") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            toks = line.split()
            tag = toks[0]
            if tag == "kind":
                if kind is not None:
                    raise TemplateFormatError("duplicate kind header", lineno)
                if len(toks) != 2 or toks[1] not in TemplateKind.__members__:
                    raise TemplateFormatError(
                        f"kind must be one of FACE, FINGER, FUSED", lineno
                    )
                kind = TemplateKind[toks[1]]
                continue
            if kind is None:
                raise TemplateFormatError(
                    "file must start with a kind header", lineno
                )
            if tag == "dpi":
                if len(toks) != 2 or not toks[1].isdigit():
                    raise TemplateFormatError("dpi needs one integer", lineno)
                dpi = int(toks[1])
            elif tag == "refpoint":
                if len(toks) != 3:
                    raise TemplateFormatError("refpoint needs x y", lineno)
                refpoint = (
                    _parse_float(toks[1], lineno, "refpoint"),
                    _parse_float(toks[2], lineno, "refpoint"),
                )
            elif tag == "landmark":
                if len(toks) != 4:
                    raise TemplateFormatError("landmark needs name x y", lineno)
                landmarks[toks[1]] = (
                    _parse_float(toks[2], lineno, "landmark"),
                    _parse_float(toks[3], lineno, "landmark"),
                )
            elif tag in Modality.__members__:
                if len(toks) not in (4, 4 + DESCRIPTOR_SIZE):
                    raise TemplateFormatError(
                        f"point record has {len(toks) - 4} descriptor values, "
                        f"expected 0 or {DESCRIPTOR_SIZE}", lineno,
                    )
                x = _parse_float(toks[1], lineno, "x")
                y = _parse_float(toks[2], lineno, "y")
                theta = _parse_float(toks[3], lineno, "theta")
                desc = None
                if len(toks) > 4:
                    desc = np.array(
                        [_parse_float(v, lineno, "descriptor") for v in toks[4:]]
                    )
                try:
                    points.append(
                        FeaturePoint(x, y, theta, desc, Modality[tag])
                    )
                except ValueError as e:
                    raise TemplateFormatError(str(e), lineno) from None
            else:
                raise TemplateFormatError(f"unknown record {tag!r}", lineno)
    if kind is None:
        raise TemplateFormatError("file has no kind header", 1)
    return Template(
        points=tuple(points),
        kind=kind,
        reference_point=refpoint,
        landmarks=landmarks if landmarks else None,
        dpi=dpi,
    )


def save_image_pgm(image: GrayImage, path: str) -> None:
    with open(path, "wb") as fh:
        fh.write(f"P5\n{image.width} {image.height}\n255\n".encode("ascii"))
        fh.write(image.pixels.tobytes())


def load_image_pgm(path: str) -> GrayImage:
    with open(path, "rb") as fh:
        data = fh.read()
    if not data.startswith(b"P5"):
        raise UnsupportedImageError(f"{path}: not a binary (P5) PGM file")
    # header: magic, width, height, maxval as whitespace-separated tokens,
    # with '#' comments allowed between them
    pos = 2
    fields = []
    while len(fields) < 3:
        while pos < len(data) and data[pos:pos + 1].isspace():
            pos += 1
        if pos < len(data) and data[pos:pos + 1] == b"#":
            while pos < len(data) and data[pos:pos + 1] != b"\n":
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos:pos + 1].isspace():
            pos += 1
        if start == pos:
            raise UnsupportedImageError(f"{path}: truncated PGM header")
        tok = data[start:pos]
        if not tok.isdigit():
            raise UnsupportedImageError(f"{path}: bad PGM header token {tok!r}")
        fields.append(int(tok))
    width, height, maxval = fields
    if maxval != 255:
        raise UnsupportedImageError(f"{path}: maxval {maxval} unsupported, need 255")
    pos += 1  # single whitespace byte after maxval
    payload = data[pos:pos + width * height]
    if len(payload) != width * height:
        raise UnsupportedImageError(
            f"{path}: truncated pixel payload "
            f"({len(payload)} of {width * height} bytes)"
        )
    pixels = np.frombuffer(payload, dtype=np.uint8).reshape(height, width)
    return GrayImage(pixels)


@dataclass(frozen=True)
class ManifestSample:
    """One sample's file paths (relative to the manifest directory) plus the
    curated registration metadata attached at load time."""

    face_path: str
    finger_path: str
    image_path: str
    landmarks: Optional[Dict[str, Tuple[float, float]]] = None
    reference_point: Optional[Tuple[float, float]] = None
    dpi: Optional[int] = None


@dataclass(frozen=True)
class ManifestSubject:
    subject_id: int
    samples: Tuple[ManifestSample, ...]


@dataclass(frozen=True)
class Manifest:
    root: str
    subjects: Tuple[ManifestSubject, ...]
    generator: Optional[dict] = None

    def resolve(self, rel: str) -> str:
        return os.path.join(self.root, rel)


def save_manifest(manifest: Manifest, path: str) -> None:
    doc = {
        "generator": manifest.generator,
        "subjects": [
            {
                "subjectId": s.subject_id,
                "samples": [
                    {
                        "face": sm.face_path,
                        "finger": sm.finger_path,
                        "fingerImage": sm.image_path,
                        "landmarks": (
                            {k: list(v) for k, v in sorted(sm.landmarks.items())}
                            if sm.landmarks is not None else None
                        ),
                        "referencePoint": (
                            list(sm.reference_point)
                            if sm.reference_point is not None else None
                        ),
                        "dpi": sm.dpi,
                    }
                    for sm in s.samples
                ],
            }
            for s in manifest.subjects
        ],
    }
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        json.dump(doc, fh, indent=1, sort_keys=True)
        fh.write("\n")


def load_manifest(path: str) -> Manifest:
    root = os.path.dirname(os.path.abspath(path))
    try:
        with open(path, "r", encoding="ascii") as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as e:
        raise ManifestError(f"cannot read manifest {path}: {e}") from None
    subjects = []
    seen_ids = set()
    for sub in doc.get("subjects", []):
        sid = sub.get("subjectId")
        if not isinstance(sid, int):
            raise ManifestError(f"manifest subject id {sid!r} is not an integer")
        if sid in seen_ids:
            raise ManifestError(f"duplicate subject id {sid}")
        seen_ids.add(sid)
        samples = []
        for sm in sub.get("samples", []):
            lm = sm.get("landmarks")
            if lm is not None:
                lm = {str(k): (float(v[0]), float(v[1])) for k, v in lm.items()}
            ref = sm.get("referencePoint")
            if ref is not None:
                ref = (float(ref[0]), float(ref[1]))
            dpi = sm.get("dpi")
            rec = ManifestSample(
                face_path=sm["face"],
                finger_path=sm["finger"],
                image_path=sm["fingerImage"],
                landmarks=lm,
                reference_point=ref,
                dpi=int(dpi) if dpi is not None else None,
            )
            for rel in (rec.face_path, rec.finger_path, rec.image_path):
                full = os.path.join(root, rel)
                if not os.path.isfile(full):
                    raise ManifestError(f"manifest references missing file {rel}")
            samples.append(rec)
        subjects.append(ManifestSubject(sid, tuple(samples)))
    return Manifest(
        root=root,
        subjects=tuple(subjects),
        generator=doc.get("generator"),
    )


def load_sample(manifest: Manifest, subject_idx: int, sample_idx: int):
    """Load one sample's (face template, finger template, finger image),
    with the manifest's curated metadata attached over whatever the template
    files carry."""
    from dataclasses import replace

    sm = manifest.subjects[subject_idx].samples[sample_idx]
    face = load_template(manifest.resolve(sm.face_path))
    finger = load_template(manifest.resolve(sm.finger_path))
    image = load_image_pgm(manifest.resolve(sm.image_path))
    if sm.landmarks is not None:
        face = replace(face, landmarks=sm.landmarks)
    if sm.reference_point is not None:
        finger = replace(finger, reference_point=sm.reference_point)
    if sm.dpi is not None:
        finger = replace(finger, dpi=sm.dpi)
    return face, finger, image


def write_reports(reports: dict, out_dir: str) -> None:
    """Write report.txt (one `label far frr accuracy threshold` line per
    label, sorted) and one `<label>.roc` file of `far frr` lines each."""
    os.makedirs(out_dir, exist_ok=True)
    lines = []
    for label in sorted(reports):
        r = reports[label]
        lines.append(
            f"{label} {r.far:.6f} {r.frr:.6f} {r.accuracy:.6f} "
            f"{format(r.threshold, '.17g')}"
        )
        roc_path = os.path.join(out_dir, f"{label}.roc")
        with open(roc_path, "w", encoding="ascii", newline="\n") as fh:
            for far, frr in r.roc_points:
                fh.write(f"{far:.6f} {frr:.6f}\n")
    with open(os.path.join(out_dir, "report.txt"), "w",
              encoding="ascii", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
