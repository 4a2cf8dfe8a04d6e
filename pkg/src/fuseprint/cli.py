"""Command-line interface.

Subcommands cover the whole pipeline: synth (build a dataset), attach-desc
(Gabor descriptors for finger minutiae), deskew, fuse, reduce, match,
evaluate, version.  Exit codes: 0 success, 1 domain error, 2 usage error.
All numeric output uses repr / fixed decimal formats, never the locale.
"""

from __future__ import annotations

import argparse
import dataclasses
import os
import sys
from typing import Optional, Sequence

from . import __version__
from .compat import apply_deskew, deskew, make_compatible
from .config import PipelineConfig, ReductionStage, ReductionStrategy, load_config
from .errors import FuseprintError, UsageError
from .evaluation import enumerate_trials, run_protocol, run_sessions
from .io import (
    load_image_pgm,
    load_manifest,
    load_template,
    save_image_pgm,
    save_template,
    write_reports,
)
from .matching import monomodal_match, Matcher
from .model import TemplateKind
from .reduction import (
    concatenate,
    default_krange,
    kmeans_reduce,
    neighborhood_eliminate,
    region_select,
)
from .synth import DEFAULT_SAMPLES, DEFAULT_SEED, DEFAULT_SUBJECTS, PerturbationSpec, build_dataset

_MATCHERS = {"point": Matcher.POINT_PATTERN, "delaunay": Matcher.DELAUNAY}


def _config_from(args: argparse.Namespace) -> PipelineConfig:
    if getattr(args, "config", None):
        return load_config(args.config)
    return PipelineConfig()


def _cmd_version(args: argparse.Namespace) -> int:
    print(f"fuseprint {__version__}")
    return 0


def _cmd_synth(args: argparse.Namespace) -> int:
    try:
        spec = PerturbationSpec(
            spatial_sigma=args.spatial_sigma,
            theta_sigma=args.theta_sigma,
            descriptor_sigma=args.descriptor_sigma,
            drop_rate=args.drop_rate,
            spurious_rate=args.spurious_rate,
        )
    except ValueError as e:
        raise UsageError(str(e)) from e
    manifest = build_dataset(args.subjects, args.samples, args.seed, spec,
                             args.out)
    print(f"wrote {len(manifest.subjects)} subjects x "
          f"{len(manifest.subjects[0].samples)} samples to {args.out}")
    return 0


def _cmd_attach_desc(args: argparse.Namespace) -> int:
    cfg = _config_from(args)
    template = load_template(args.template)
    image = load_image_pgm(args.image)
    save_template(make_compatible(template, image, cfg.gabor), args.out)
    return 0


def _cmd_deskew(args: argparse.Namespace) -> int:
    cfg = _config_from(args)
    image = load_image_pgm(args.image)
    result = deskew(image, foreground_threshold=cfg.deskew_threshold)
    save_image_pgm(result.rotated, args.out)
    if args.template:
        if not args.template_out:
            raise UsageError("--template requires --template-out")
        template = load_template(args.template)
        save_template(apply_deskew(template, result), args.template_out)
    print(f"angle {result.angle!r}")
    return 0


def _cmd_fuse(args: argparse.Namespace) -> int:
    face = load_template(args.face)
    finger = load_template(args.finger)
    save_template(concatenate(face, finger), args.out)
    return 0


def _cmd_reduce(args: argparse.Namespace) -> int:
    strategy = ReductionStrategy[args.strategy.upper()]
    stage = None
    if args.stage:
        stage = (ReductionStage.BEFORE_FUSION if args.stage == "before"
                 else ReductionStage.AFTER_FUSION)
    cfg = _config_from(args)
    # re-validation raises UsageError when the stage contradicts the strategy
    cfg = dataclasses.replace(cfg, reduction=strategy, reduction_stage=stage)
    template = load_template(args.template)
    if strategy is ReductionStrategy.KMEANS:
        if template.kind is not TemplateKind.FUSED:
            raise UsageError(
                "kmeans reduction runs after fusion; input must be a fused "
                f"template, got {template.kind.name}"
            )
        kmax = min(cfg.kmeans_kmax, len(template) - 1)
        krange = range(cfg.kmeans_kmin, kmax + 1)
        if not krange:
            krange = default_krange(len(template))
        reduced = kmeans_reduce(template, theta_weight=cfg.kmeans_theta_weight,
                                k_range=krange, seed=cfg.kmeans_seed)
    elif strategy is ReductionStrategy.NEIGHBORHOOD:
        if template.kind is TemplateKind.FACE:
            radius = cfg.neighborhood_face_radius
        elif template.kind is TemplateKind.FINGER:
            radius = cfg.neighborhood_finger_radius
        else:
            raise UsageError(
                "neighborhood reduction runs before fusion; input must be a "
                f"face or finger template, got {template.kind.name}"
            )
        reduced = neighborhood_eliminate(template, radius)
    elif strategy is ReductionStrategy.REGION:
        if template.kind not in (TemplateKind.FACE, TemplateKind.FINGER):
            raise UsageError(
                "region reduction runs before fusion; input must be a face "
                f"or finger template, got {template.kind.name}"
            )
        reduced = region_select(template, cfg.region)
    else:
        reduced = template
    save_template(reduced, args.out)
    print(f"kept {len(reduced)} of {len(template)} points")
    return 0


def _cmd_match(args: argparse.Namespace) -> int:
    cfg = _config_from(args)
    matcher = _MATCHERS[args.matcher]
    a = load_template(args.db_template)
    b = load_template(args.query_template)
    score = monomodal_match(
        a, b, matcher,
        point_thresholds=cfg.point_thresholds,
        triangle_thresholds=cfg.triangle_thresholds,
    )
    print(repr(score))
    return 0


def _cmd_evaluate(args: argparse.Namespace) -> int:
    cfg = _config_from(args)
    manifest = load_manifest(args.manifest)
    if args.sessions:
        reports = run_sessions(manifest, cfg)
    else:
        reports = run_protocol(manifest, cfg)
    genuine, impostor = enumerate_trials(
        len(manifest.subjects), len(manifest.subjects[0].samples),
        cfg.impostor_mode, cfg.impostor_r, cfg.protocol_seed,
    )
    print(f"trials genuine={len(genuine)} impostor={len(impostor)}")
    for label in sorted(reports):
        r = reports[label]
        print(f"{label} far={r.far:.6f} frr={r.frr:.6f} "
              f"accuracy={r.accuracy:.6f} threshold={r.threshold:.17g}")
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        write_reports(reports, args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fuseprint",
        description="Face and fingerprint feature-level fusion toolkit.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("version", help="print the package version")
    p.set_defaults(func=_cmd_version)

    p = sub.add_parser("synth", help="generate a synthetic dataset")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--subjects", type=int, default=DEFAULT_SUBJECTS)
    p.add_argument("--samples", type=int, default=DEFAULT_SAMPLES)
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--spatial-sigma", type=float, default=1.5)
    p.add_argument("--theta-sigma", type=float, default=1.0)
    p.add_argument("--descriptor-sigma", type=float, default=0.02)
    p.add_argument("--drop-rate", type=float, default=0.1)
    p.add_argument("--spurious-rate", type=float, default=0.1)
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("attach-desc",
                       help="attach Gabor descriptors to finger minutiae")
    p.add_argument("--template", required=True, help="finger template")
    p.add_argument("--image", required=True, help="finger PGM image")
    p.add_argument("--out", required=True, help="output template path")
    p.add_argument("--config")
    p.set_defaults(func=_cmd_attach_desc)

    p = sub.add_parser("deskew", help="straighten a fingerprint image")
    p.add_argument("--image", required=True, help="input PGM image")
    p.add_argument("--out", required=True, help="deskewed PGM path")
    p.add_argument("--template", help="optional template to rotate along")
    p.add_argument("--template-out", help="output path for the template")
    p.add_argument("--config")
    p.set_defaults(func=_cmd_deskew)

    p = sub.add_parser("fuse", help="concatenate face and finger templates")
    p.add_argument("--face", required=True)
    p.add_argument("--finger", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_fuse)

    p = sub.add_parser("reduce", help="reduce a template's pointset")
    p.add_argument("--template", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--strategy", required=True,
                   choices=["kmeans", "neighborhood", "region"])
    p.add_argument("--stage", choices=["before", "after"])
    p.add_argument("--config")
    p.set_defaults(func=_cmd_reduce)

    p = sub.add_parser("match", help="match two templates, print the score")
    p.add_argument("db_template")
    p.add_argument("query_template")
    p.add_argument("--matcher", choices=sorted(_MATCHERS), default="point")
    p.add_argument("--config")
    p.set_defaults(func=_cmd_match)

    p = sub.add_parser("evaluate", help="run the evaluation protocol")
    p.add_argument("--manifest", required=True)
    p.add_argument("--config")
    p.add_argument("--out", help="directory for report files")
    p.add_argument("--sessions", action="store_true",
                   help="run the full session grid instead of one protocol")
    p.set_defaults(func=_cmd_evaluate)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    try:
        return args.func(args)
    except UsageError as e:
        print(f"fuseprint: usage error: {e}", file=sys.stderr)
        return 2
    except FuseprintError as e:
        print(f"fuseprint: error: {e}", file=sys.stderr)
        return 1
    except OSError as e:
        print(f"fuseprint: error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
