"""Spectral-component transferability scoring for pre-trained model selection."""

from .classification import (
    AblationScores,
    ClassificationScoreReport,
    ClassStatistics,
    ablation_scores,
    average_confidence,
    class_statistics,
    disco_cls,
    ncc_confidence_score,
    ncc_log_posterior,
    softmax_normalize,
)
from .errors import (
    DegenerateComponent,
    DegenerateSpectrum,
    DiscoError,
    FormatError,
    InsufficientModels,
    InvalidGroupCount,
    InvalidGroupIndex,
    InvalidInput,
    InvalidLabels,
    MissingClass,
    NumericalFailure,
    StageError,
)
from .pipeline import RunConfig
from .ranking import (
    BenchmarkRecord,
    kendall_tau,
    tie_adjusted_tau,
    top_k_hit,
    weighted_kendall_tau,
)
from .regression import (
    DetectionTargets,
    HubScoreTable,
    RegressionScoreReport,
    approx_targets,
    combine_detection,
    disco_reg,
    min_max_normalize,
    pseudo_inverse,
    regression_coefficients,
    regression_score,
)
from .sampling import (
    HardExampleSelection,
    LDAProjection,
    lda_confidence,
    lda_fit,
    lda_posteriors,
    select_hard_examples,
)
from .spectral import (
    SpectralChangeProfile,
    SpectralDecomposition,
    SpectralGrouping,
    component_matrix,
    group_coordinates,
    group_ratios,
    make_grouping,
    relative_frobenius_change,
    singular_value_ratio,
    spectral_change_profile,
    svd,
    topk_ratio,
)

__version__ = "0.1.0"

__all__ = [
    "AblationScores",
    "BenchmarkRecord",
    "ClassStatistics",
    "ClassificationScoreReport",
    "DegenerateComponent",
    "DegenerateSpectrum",
    "DetectionTargets",
    "DiscoError",
    "FormatError",
    "HardExampleSelection",
    "HubScoreTable",
    "InsufficientModels",
    "InvalidGroupCount",
    "InvalidGroupIndex",
    "InvalidInput",
    "InvalidLabels",
    "LDAProjection",
    "MissingClass",
    "NumericalFailure",
    "RegressionScoreReport",
    "RunConfig",
    "SpectralChangeProfile",
    "SpectralDecomposition",
    "SpectralGrouping",
    "StageError",
    "ablation_scores",
    "approx_targets",
    "average_confidence",
    "class_statistics",
    "combine_detection",
    "component_matrix",
    "disco_cls",
    "disco_reg",
    "group_coordinates",
    "group_ratios",
    "kendall_tau",
    "lda_confidence",
    "lda_fit",
    "lda_posteriors",
    "make_grouping",
    "min_max_normalize",
    "ncc_confidence_score",
    "ncc_log_posterior",
    "pseudo_inverse",
    "regression_coefficients",
    "regression_score",
    "relative_frobenius_change",
    "select_hard_examples",
    "singular_value_ratio",
    "softmax_normalize",
    "spectral_change_profile",
    "svd",
    "tie_adjusted_tau",
    "top_k_hit",
    "topk_ratio",
    "weighted_kendall_tau",
]
