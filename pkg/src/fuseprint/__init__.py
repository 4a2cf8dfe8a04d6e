"""Face and fingerprint feature-level fusion toolkit.

Builds multimodal biometric templates by concatenating face keypoints with
fingerprint minutiae in a shared feature space (position, orientation, a
128-value Gabor descriptor), reduces the fused pointset (k-means with PBM
model selection, neighborhood elimination, region cut-offs), and matches
templates with either a point-pattern matcher or a Delaunay-triangle
matcher.  An evaluation harness sweeps thresholds for FAR/FRR/accuracy and
a deterministic synthetic dataset generator drives benchmarks end to end.
"""

from .model import (
    DESCRIPTOR_SIZE,
    FeaturePoint,
    GrayImage,
    MatchThresholds,
    Modality,
    Template,
    TemplateKind,
    descriptor_distance,
    direction_distance,
    spatial_distance,
)
from .compat import (
    DeskewResult,
    GaborBankSpec,
    apply_deskew,
    deskew,
    gabor_bank,
    gabor_keydescriptor,
    make_compatible,
    min_max_normalize,
    normalize_template,
    register_translation,
    rotate_image,
    scale_normalize,
)
from .reduction import (
    ClusteringQuality,
    RegionSpec,
    concatenate,
    default_krange,
    kmeans_reduce,
    neighborhood_eliminate,
    pbm_index,
    region_select,
)
from .matching import (
    Matcher,
    MatchResult,
    TriangleFeature,
    TriangleThresholds,
    delaunay_match,
    delaunay_triangulate,
    monomodal_match,
    point_pattern_match,
    triangle_features,
)
from .evaluation import (
    EvalReport,
    TrialSet,
    enumerate_trials,
    run_protocol,
    run_sessions,
    score_level_fuse,
    sweep_metrics,
)
from .synth import (
    PerturbationSpec,
    SubjectModel,
    build_dataset,
    gen_sample,
    gen_subject,
)
from .config import PipelineConfig, ReductionStage, ReductionStrategy, load_config, parse_config
from .io import (
    Manifest,
    ManifestSample,
    ManifestSubject,
    load_image_pgm,
    load_manifest,
    load_template,
    save_image_pgm,
    save_manifest,
    save_template,
)
from . import errors

__version__ = "0.1.0"

__all__ = [
    "DESCRIPTOR_SIZE",
    "FeaturePoint",
    "GrayImage",
    "MatchThresholds",
    "Modality",
    "Template",
    "TemplateKind",
    "descriptor_distance",
    "direction_distance",
    "spatial_distance",
    "DeskewResult",
    "GaborBankSpec",
    "apply_deskew",
    "deskew",
    "gabor_bank",
    "gabor_keydescriptor",
    "make_compatible",
    "min_max_normalize",
    "normalize_template",
    "register_translation",
    "rotate_image",
    "scale_normalize",
    "ClusteringQuality",
    "RegionSpec",
    "concatenate",
    "default_krange",
    "kmeans_reduce",
    "neighborhood_eliminate",
    "pbm_index",
    "region_select",
    "Matcher",
    "MatchResult",
    "TriangleFeature",
    "TriangleThresholds",
    "delaunay_match",
    "delaunay_triangulate",
    "monomodal_match",
    "point_pattern_match",
    "triangle_features",
    "EvalReport",
    "TrialSet",
    "enumerate_trials",
    "run_protocol",
    "run_sessions",
    "score_level_fuse",
    "sweep_metrics",
    "PerturbationSpec",
    "SubjectModel",
    "build_dataset",
    "gen_sample",
    "gen_subject",
    "PipelineConfig",
    "ReductionStage",
    "ReductionStrategy",
    "load_config",
    "parse_config",
    "Manifest",
    "ManifestSample",
    "ManifestSubject",
    "load_image_pgm",
    "load_manifest",
    "load_template",
    "save_image_pgm",
    "save_manifest",
    "save_template",
    "errors",
    "__version__",
]
