"""Compare representational spaces of networks and brains via RDMs and RSA."""

__version__ = "0.1.0"

from .core import (
    ActivationSet,
    EvaluationResult,
    NoiseCeiling,
    RDM,
    SubjectRDMStack,
    VoxelDataset,
    align_conditions,
    signed_square,
    validate_activation_set,
)
from .rdm import (
    DEFAULT_METRIC,
    METRICS,
    average_rdms,
    compute_rdm,
    flatten_upper,
)
from .stats import (
    PermutationScheme,
    default_scheme,
    fdr_bh,
    paired_difference_test,
    pearson,
    sem,
    sign_flip_test,
    spearman,
)
from .rsa import (
    RsaConfig,
    compare_models,
    evaluate_models,
    noise_ceiling,
    rsa_evaluate,
)
from .wrsa import (
    NnlsFit,
    WrsaConfig,
    WrsaResult,
    condition_folds,
    nnls_fit,
    wrsa_evaluate,
)
from .searchlight import (
    SearchlightConfig,
    SearchlightMap,
    build_spheres,
    searchlight_rsa,
)
from .report import Bar, BarGroup, ReportSpec, render_report

__all__ = [
    "__version__",
    "ActivationSet",
    "EvaluationResult",
    "NoiseCeiling",
    "RDM",
    "SubjectRDMStack",
    "VoxelDataset",
    "align_conditions",
    "signed_square",
    "validate_activation_set",
    "DEFAULT_METRIC",
    "METRICS",
    "average_rdms",
    "compute_rdm",
    "flatten_upper",
    "PermutationScheme",
    "default_scheme",
    "fdr_bh",
    "paired_difference_test",
    "pearson",
    "sem",
    "sign_flip_test",
    "spearman",
    "RsaConfig",
    "compare_models",
    "evaluate_models",
    "noise_ceiling",
    "rsa_evaluate",
    "NnlsFit",
    "WrsaConfig",
    "WrsaResult",
    "condition_folds",
    "nnls_fit",
    "wrsa_evaluate",
    "SearchlightConfig",
    "SearchlightMap",
    "build_spheres",
    "searchlight_rsa",
    "Bar",
    "BarGroup",
    "ReportSpec",
    "render_report",
]
