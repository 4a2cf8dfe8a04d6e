"""Pipeline configuration and its flat key=value file format.

The config file is line oriented: `dotted.key = value`, blank lines and
`#` comments ignored.  Unknown keys and malformed values are usage errors
(CLI exit code 2), as is the one structural invariant: k-means reduction
only applies after fusion, neighborhood and region reduction only before.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Optional

from .compat import GaborBankSpec
from .errors import UsageError
from .matching import Matcher, TriangleThresholds
from .model import MatchThresholds
from .reduction import RegionSpec


class ReductionStrategy(Enum):
    NONE = "NONE"
    KMEANS = "KMEANS"
    NEIGHBORHOOD = "NEIGHBORHOOD"
    REGION = "REGION"


class ReductionStage(Enum):
    BEFORE_FUSION = "BEFORE_FUSION"
    AFTER_FUSION = "AFTER_FUSION"


# the stage each strategy is defined for; NONE fits either
_STRATEGY_STAGE = {
    ReductionStrategy.KMEANS: ReductionStage.AFTER_FUSION,
    ReductionStrategy.NEIGHBORHOOD: ReductionStage.BEFORE_FUSION,
    ReductionStrategy.REGION: ReductionStage.BEFORE_FUSION,
}


@dataclass(frozen=True)
class PipelineConfig:
    """Everything the evaluation pipeline needs in one record.

    reduction_stage may be left None to take the stage implied by the
    strategy; stating the wrong stage explicitly is a usage error.
    """

    matcher: Matcher = Matcher.POINT_PATTERN
    reduction: ReductionStrategy = ReductionStrategy.NONE
    reduction_stage: Optional[ReductionStage] = None
    point_thresholds: MatchThresholds = field(default_factory=MatchThresholds)
    triangle_thresholds: TriangleThresholds = field(default_factory=TriangleThresholds)
    gabor: GaborBankSpec = field(default_factory=GaborBankSpec)
    region: RegionSpec = field(default_factory=RegionSpec)
    neighborhood_face_radius: float = 20.0
    neighborhood_finger_radius: float = 15.0
    kmeans_kmin: int = 2
    kmeans_kmax: int = 30
    kmeans_theta_weight: float = 1.0
    kmeans_seed: int = 0
    sweep_steps: int = 1000
    impostor_mode: str = "exhaustive"
    impostor_r: int = 10
    protocol_seed: int = 0
    target_dpi: int = 500
    deskew_threshold: int = 240

    def __post_init__(self) -> None:
        implied = _STRATEGY_STAGE.get(self.reduction)
        if self.reduction_stage is None:
            object.__setattr__(
                self, "reduction_stage",
                implied if implied is not None else ReductionStage.AFTER_FUSION,
            )
        elif implied is not None and self.reduction_stage is not implied:
            raise UsageError(
                f"reduction {self.reduction.name} applies "
                f"{implied.name.replace('_', ' ').lower()} only, "
                f"not {self.reduction_stage.name.replace('_', ' ').lower()}"
            )
        if self.neighborhood_face_radius <= 0 or self.neighborhood_finger_radius <= 0:
            raise UsageError("neighborhood radii must be strictly positive")
        if self.kmeans_kmin < 2 or self.kmeans_kmax < self.kmeans_kmin:
            raise UsageError("k-means range must satisfy 2 <= kmin <= kmax")
        if self.sweep_steps < 2:
            raise UsageError("eval.steps must be >= 2")
        if self.impostor_mode not in ("exhaustive", "random"):
            raise UsageError("eval.impostor_mode must be exhaustive or random")
        if self.impostor_r < 1:
            raise UsageError("eval.impostor_r must be >= 1")
        if self.target_dpi <= 0:
            raise UsageError("eval.target_dpi must be positive")


_MATCHERS = {"point": Matcher.POINT_PATTERN, "delaunay": Matcher.DELAUNAY}
_STRATEGIES = {
    "none": ReductionStrategy.NONE,
    "kmeans": ReductionStrategy.KMEANS,
    "neighborhood": ReductionStrategy.NEIGHBORHOOD,
    "region": ReductionStrategy.REGION,
}
_STAGES = {
    "before": ReductionStage.BEFORE_FUSION,
    "after": ReductionStage.AFTER_FUSION,
}


def _to_float(key: str, raw: str) -> float:
    try:
        v = float(raw)
    except ValueError:
        raise UsageError(f"config key {key}: {raw!r} is not a number") from None
    if not math.isfinite(v):
        raise UsageError(f"config key {key}: value must be finite")
    return v


def _to_int(key: str, raw: str) -> int:
    try:
        return int(raw)
    except ValueError:
        raise UsageError(f"config key {key}: {raw!r} is not an integer") from None


def _choice(key: str, raw: str, table: dict):
    try:
        return table[raw.strip().lower()]
    except KeyError:
        raise UsageError(
            f"config key {key}: {raw!r} is not one of {sorted(table)}"
        ) from None


def parse_config(text: str, base: Optional[PipelineConfig] = None) -> PipelineConfig:
    """Build a PipelineConfig from flat `dotted.key = value` lines."""
    cfg = base if base is not None else PipelineConfig()
    fields: dict = {}
    for lineno, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"config line {lineno}: expected key = value")
        key, raw = (s.strip() for s in line.split("=", 1))
        if key == "matcher":
            fields["matcher"] = _choice(key, raw, _MATCHERS)
        elif key == "reduction.strategy":
            fields["reduction"] = _choice(key, raw, _STRATEGIES)
        elif key == "reduction.stage":
            fields["reduction_stage"] = _choice(key, raw, _STAGES)
        elif key in ("match.r0", "match.theta0", "match.k0"):
            fields.setdefault("_match", {})[key.split(".")[1]] = _to_float(key, raw)
        elif key in ("triangle.d_alpha", "triangle.d_length",
                     "triangle.d_theta", "triangle.d_ratio"):
            fields.setdefault("_triangle", {})[key.split(".")[1]] = _to_float(key, raw)
        elif key == "gabor.patch_radius":
            fields.setdefault("_gabor", {})["patch_radius"] = _to_int(key, raw)
        elif key == "gabor.base_wavelength":
            fields.setdefault("_gabor", {})["base_wavelength"] = _to_float(key, raw)
        elif key == "gabor.wavelength_ratio":
            fields.setdefault("_gabor", {})["wavelength_ratio"] = _to_float(key, raw)
        elif key == "region.face_radius":
            fields.setdefault("_region", {})["face_radius"] = _to_float(key, raw)
        elif key == "region.finger_radius":
            fields.setdefault("_region", {})["finger_radius"] = _to_float(key, raw)
        elif key == "neighborhood.face_radius":
            fields["neighborhood_face_radius"] = _to_float(key, raw)
        elif key == "neighborhood.finger_radius":
            fields["neighborhood_finger_radius"] = _to_float(key, raw)
        elif key == "kmeans.kmin":
            fields["kmeans_kmin"] = _to_int(key, raw)
        elif key == "kmeans.kmax":
            fields["kmeans_kmax"] = _to_int(key, raw)
        elif key == "kmeans.theta_weight":
            fields["kmeans_theta_weight"] = _to_float(key, raw)
        elif key == "kmeans.seed":
            fields["kmeans_seed"] = _to_int(key, raw)
        elif key == "eval.steps":
            fields["sweep_steps"] = _to_int(key, raw)
        elif key == "eval.impostor_mode":
            fields["impostor_mode"] = raw.strip().lower()
        elif key == "eval.impostor_r":
            fields["impostor_r"] = _to_int(key, raw)
        elif key == "eval.seed":
            fields["protocol_seed"] = _to_int(key, raw)
        elif key == "eval.target_dpi":
            fields["target_dpi"] = _to_int(key, raw)
        elif key == "eval.deskew_threshold":
            fields["deskew_threshold"] = _to_int(key, raw)
        else:
            raise UsageError(f"config line {lineno}: unknown key {key!r}")
    try:
        match_kw = fields.pop("_match", None)
        if match_kw:
            fields["point_thresholds"] = replace(cfg.point_thresholds, **match_kw)
        tri_kw = fields.pop("_triangle", None)
        if tri_kw:
            fields["triangle_thresholds"] = replace(cfg.triangle_thresholds, **tri_kw)
        gab_kw = fields.pop("_gabor", None)
        if gab_kw:
            fields["gabor"] = replace(cfg.gabor, **gab_kw)
        reg_kw = fields.pop("_region", None)
        if reg_kw:
            fields["region"] = replace(cfg.region, **reg_kw)
        if "reduction" in fields and "reduction_stage" not in fields:
            # changing the strategy resets an inherited stage to the implied one
            fields["reduction_stage"] = None
        return replace(cfg, **fields)
    except ValueError as e:
        raise UsageError(f"invalid configuration: {e}") from None


def load_config(path: str, base: Optional[PipelineConfig] = None) -> PipelineConfig:
    with open(path, "r", encoding="ascii") as fh:
        return parse_config(fh.read(), base=base)
