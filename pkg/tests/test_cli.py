"""End-to-end command tests driving cli.main in-process."""

import os

import pytest

import fuseprint
from fuseprint.cli import main
from fuseprint.io import load_template
from fuseprint.model import TemplateKind


@pytest.fixture(scope="module")
def cli_dataset(tmp_path_factory):
    out = tmp_path_factory.mktemp("clids")
    rc = main(["synth", "--out", str(out), "--subjects", "3",
               "--samples", "2", "--seed", "5"])
    assert rc == 0
    return out


def test_version(capsys):
    assert main(["version"]) == 0
    assert capsys.readouterr().out == f"fuseprint {fuseprint.__version__}\n"


def test_synth_reports_size(tmp_path, capsys):
    rc = main(["synth", "--out", str(tmp_path), "--subjects", "2",
               "--samples", "2", "--seed", "1"])
    assert rc == 0
    assert "wrote 2 subjects x 2 samples" in capsys.readouterr().out


def test_synth_bad_rate_is_usage_error(tmp_path, capsys):
    rc = main(["synth", "--out", str(tmp_path), "--drop-rate", "1.5"])
    assert rc == 2
    assert "usage error" in capsys.readouterr().err


def test_match_self_scores_one(cli_dataset, capsys):
    tpl = str(cli_dataset / "s000_00_face.tpl")
    assert main(["match", tpl, tpl]) == 0
    assert capsys.readouterr().out == "1.0\n"


def test_match_delaunay_option(cli_dataset, capsys):
    tpl = str(cli_dataset / "s001_01_face.tpl")
    assert main(["match", tpl, tpl, "--matcher", "delaunay"]) == 0
    assert capsys.readouterr().out == "1.0\n"


def test_match_missing_file_is_domain_error(capsys):
    rc = main(["match", "no_such.tpl", "also_missing.tpl"])
    assert rc == 1
    assert "fuseprint: error:" in capsys.readouterr().err


def test_deskew_writes_outputs(cli_dataset, tmp_path, capsys):
    out_img = str(tmp_path / "straight.pgm")
    out_tpl = str(tmp_path / "straight.tpl")
    rc = main(["deskew",
               "--image", str(cli_dataset / "s000_00_finger.pgm"),
               "--out", out_img,
               "--template", str(cli_dataset / "s000_00_finger.tpl"),
               "--template-out", out_tpl])
    assert rc == 0
    assert os.path.isfile(out_img) and os.path.isfile(out_tpl)
    assert capsys.readouterr().out.startswith("angle ")


def test_deskew_template_requires_template_out(cli_dataset, tmp_path, capsys):
    rc = main(["deskew",
               "--image", str(cli_dataset / "s000_00_finger.pgm"),
               "--out", str(tmp_path / "o.pgm"),
               "--template", str(cli_dataset / "s000_00_finger.tpl")])
    assert rc == 2
    assert "usage error" in capsys.readouterr().err


def test_attach_fuse_reduce_match_flow(cli_dataset, tmp_path, capsys):
    straight_img = str(tmp_path / "s.pgm")
    straight_tpl = str(tmp_path / "s.tpl")
    assert main(["deskew",
                 "--image", str(cli_dataset / "s000_00_finger.pgm"),
                 "--out", straight_img,
                 "--template", str(cli_dataset / "s000_00_finger.tpl"),
                 "--template-out", straight_tpl]) == 0
    withdesc = str(tmp_path / "d.tpl")
    assert main(["attach-desc", "--template", straight_tpl,
                 "--image", straight_img, "--out", withdesc]) == 0
    fused = str(tmp_path / "f.tpl")
    assert main(["fuse", "--face", str(cli_dataset / "s000_00_face.tpl"),
                 "--finger", withdesc, "--out", fused]) == 0
    t = load_template(fused)
    assert t.kind is TemplateKind.FUSED
    reduced = str(tmp_path / "r.tpl")
    capsys.readouterr()
    assert main(["reduce", "--template", fused, "--out", reduced,
                 "--strategy", "kmeans"]) == 0
    out = capsys.readouterr().out
    assert out.startswith("kept ") and " of " in out
    assert len(load_template(reduced)) < len(t)
    assert main(["match", reduced, reduced]) == 0


def test_reduce_kmeans_with_before_stage_is_usage_error(cli_dataset, tmp_path,
                                                        capsys):
    fused = str(tmp_path / "f.tpl")
    # stage contradicting the strategy must fail before touching files
    rc = main(["reduce", "--template", fused, "--out",
               str(tmp_path / "r.tpl"), "--strategy", "kmeans",
               "--stage", "before"])
    assert rc == 2
    assert "usage error" in capsys.readouterr().err


def test_reduce_kmeans_rejects_monomodal_input(cli_dataset, tmp_path, capsys):
    rc = main(["reduce", "--template", str(cli_dataset / "s000_00_face.tpl"),
               "--out", str(tmp_path / "r.tpl"), "--strategy", "kmeans"])
    assert rc == 2
    assert "fused" in capsys.readouterr().err


def test_reduce_neighborhood_on_face(cli_dataset, tmp_path, capsys):
    out = str(tmp_path / "n.tpl")
    rc = main(["reduce", "--template", str(cli_dataset / "s000_00_face.tpl"),
               "--out", out, "--strategy", "neighborhood"])
    assert rc == 0
    reduced = load_template(out)
    original = load_template(str(cli_dataset / "s000_00_face.tpl"))
    assert 0 < len(reduced) <= len(original)


def test_evaluate_prints_counts_and_labels(cli_dataset, capsys):
    rc = main(["evaluate", "--manifest", str(cli_dataset / "manifest.json")])
    assert rc == 0
    out = capsys.readouterr().out
    assert "trials genuine=3 impostor=6" in out
    for label in ("face", "finger", "score_fusion", "feature_fusion"):
        assert f"\n{label} far=" in out or out.startswith(f"{label} far=")


def test_evaluate_with_config_and_reports(cli_dataset, tmp_path, capsys):
    cfg = tmp_path / "cfg.txt"
    cfg.write_text("eval.steps = 50\nreduction.strategy = kmeans\n")
    rep = tmp_path / "rep"
    rc = main(["evaluate", "--manifest", str(cli_dataset / "manifest.json"),
               "--config", str(cfg), "--out", str(rep)])
    assert rc == 0
    report = (rep / "report.txt").read_text()
    assert len(report.splitlines()) == 4
    roc = (rep / "face.roc").read_text().splitlines()
    assert len(roc) == 50


def test_evaluate_unknown_config_key(cli_dataset, tmp_path, capsys):
    cfg = tmp_path / "cfg.txt"
    cfg.write_text("eval.strictness = max\n")
    rc = main(["evaluate", "--manifest", str(cli_dataset / "manifest.json"),
               "--config", str(cfg)])
    assert rc == 2
    assert "unknown key" in capsys.readouterr().err


def test_evaluate_missing_manifest_file(tmp_path, capsys):
    rc = main(["evaluate", "--manifest", str(tmp_path / "nope.json")])
    assert rc == 1
    assert "fuseprint: error:" in capsys.readouterr().err


def test_unknown_subcommand_exits_two(capsys):
    assert main(["transmogrify"]) == 2
