import numpy as np
import pytest

from fuseprint.errors import ManifestError, TemplateFormatError, UnsupportedImageError
from fuseprint.io import (
    load_image_pgm,
    load_manifest,
    load_sample,
    load_template,
    save_image_pgm,
    save_template,
    write_reports,
)
from fuseprint.evaluation import EvalReport
from fuseprint.model import GrayImage, Modality, Template, TemplateKind

from _util import make_point, random_template


def test_template_roundtrip_exact(tmp_path):
    rng = np.random.default_rng(3)
    t = Template(
        random_template(rng, 7, TemplateKind.FINGER).points,
        TemplateKind.FINGER,
        reference_point=(rng.random() * 100, rng.random() * 100),
        dpi=500,
    )
    path = str(tmp_path / "t.tpl")
    save_template(t, path)
    back = load_template(path)
    assert back.kind is t.kind
    assert back.reference_point == t.reference_point
    assert back.dpi == 500
    assert len(back) == len(t)
    for p, q in zip(t.points, back.points):
        # 17 significant digits means the round trip is bit exact
        assert (p.x, p.y, p.theta) == (q.x, q.y, q.theta)
        assert np.array_equal(p.descriptor, q.descriptor)
        assert p.modality is q.modality


def test_template_roundtrip_landmarks_and_bare_points(tmp_path):
    t = Template(
        (make_point(1.5, 2.5, 10.0),),
        TemplateKind.FACE,
        landmarks={"leftEye": (10.0, 20.0), "rightEye": (30.0, 20.0),
                   "noseTip": (20.0, 30.0), "mouth": (20.0, 40.0)},
    )
    path = str(tmp_path / "t.tpl")
    save_template(t, path)
    back = load_template(path)
    assert back.landmarks == t.landmarks
    assert back.points[0].descriptor is None


def test_header_only_template(tmp_path):
    path = str(tmp_path / "empty.tpl")
    save_template(Template((), TemplateKind.FUSED), path)
    back = load_template(path)
    assert back.kind is TemplateKind.FUSED and len(back) == 0


@pytest.mark.parametrize("text,lineno", [
    ("FACE 1 2 3\n", 1),                     # points before any header
    ("kind FACE\nkind FACE\n", 2),           # duplicate header
    ("kind WOLF\n", 1),
    ("kind FACE\nFACE 1 2\n", 2),            # short point record
    ("kind FACE\nFACE 1 2 nope\n", 2),
    ("kind FACE\nwhatisthis 1\n", 2),
    ("kind FINGER\ndpi x\n", 2),
    ("kind FACE\nFACE 1 2 361\n", 2),        # theta out of range
])
def test_format_errors_carry_line_numbers(tmp_path, text, lineno):
    path = tmp_path / "bad.tpl"
    path.write_text(text)
    with pytest.raises(TemplateFormatError) as e:
        load_template(str(path))
    assert e.value.line == lineno


def test_missing_kind_header(tmp_path):
    path = tmp_path / "none.tpl"
    path.write_text("\n\n")
    with pytest.raises(TemplateFormatError):
        load_template(str(path))


def test_pgm_roundtrip(tmp_path):
    rng = np.random.default_rng(4)
    img = GrayImage(rng.integers(0, 256, (13, 9), dtype=np.uint8))
    path = str(tmp_path / "i.pgm")
    save_image_pgm(img, path)
    back = load_image_pgm(path)
    assert np.array_equal(back.pixels, img.pixels)


def test_pgm_header_comments(tmp_path):
    path = tmp_path / "c.pgm"
    path.write_bytes(b"P5\n# a comment\n2 2\n255\n" + bytes([0, 1, 2, 3]))
    img = load_image_pgm(str(path))
    assert img.pixels[1, 1] == 3


@pytest.mark.parametrize("data", [
    b"P2\n2 2\n255\n....",                     # ascii variant
    b"P5\n2 2\n65535\n" + bytes(8),            # 16 bit
    b"P5\n4 4\n255\n" + bytes(3),              # truncated payload
    b"P5\n2 x\n255\n" + bytes(4),
])
def test_pgm_rejects_unsupported(tmp_path, data):
    path = tmp_path / "bad.pgm"
    path.write_bytes(data)
    with pytest.raises(UnsupportedImageError):
        load_image_pgm(str(path))


def test_manifest_roundtrip_and_load_sample(small_dataset):
    mf = load_manifest(str(small_dataset.root) + "/manifest.json")
    assert len(mf.subjects) == 6
    assert len(mf.subjects[0].samples) == 3
    face, finger, image = load_sample(mf, 0, 0)
    assert face.kind is TemplateKind.FACE and face.landmarks
    assert finger.kind is TemplateKind.FINGER
    assert finger.reference_point is not None and finger.dpi == 500
    assert image.width > 0
    # curated metadata wins over whatever the template file carries
    sm = mf.subjects[0].samples[0]
    assert face.landmarks == sm.landmarks


def test_manifest_missing_file_fails_at_load(tmp_path):
    (tmp_path / "m.json").write_text(
        '{"subjects": [{"subjectId": 0, "samples": [{"face": "gone.tpl", '
        '"finger": "gone.tpl", "fingerImage": "gone.pgm"}]}]}'
    )
    with pytest.raises(ManifestError, match="missing file"):
        load_manifest(str(tmp_path / "m.json"))


def test_manifest_duplicate_subject_rejected(tmp_path):
    (tmp_path / "m.json").write_text(
        '{"subjects": [{"subjectId": 1, "samples": []}, '
        '{"subjectId": 1, "samples": []}]}'
    )
    with pytest.raises(ManifestError, match="duplicate"):
        load_manifest(str(tmp_path / "m.json"))


def test_write_reports_layout(tmp_path):
    rep = EvalReport(far=1.0, frr=2.0, accuracy=98.5, threshold=0.25,
                     roc_points=((100.0, 0.0), (0.0, 100.0)))
    write_reports({"b": rep, "a": rep}, str(tmp_path))
    lines = (tmp_path / "report.txt").read_text().splitlines()
    assert lines[0].startswith("a ") and lines[1].startswith("b ")
    assert (tmp_path / "a.roc").read_text() == "100.000000 0.000000\n0.000000 100.000000\n"
