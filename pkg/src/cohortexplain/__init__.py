"""Model-free variable importance from observed data alone.

Attributes a target observation's response (prediction, label, or residual)
to its input features by conditioning on cohorts of similar observations:
exact and Monte Carlo cohort Shapley, a scalable integrated-gradient
approximation, kernel-weighted and uniqueness value functions, conditional
insertion/deletion ABC evaluation, and convergence diagnostics.
"""

from .data import (
    AbsoluteRange,
    AbsResidual,
    ColumnKind,
    Dataset,
    Equality,
    Raw,
    RelativeRange,
    Residual,
    SimilaritySpec,
    SquaredResidual,
    dataset_summary,
    feature_ranges,
    load_dataset,
    make_similarity_spec,
    save_dataset,
)
from .diagnostics import (
    ComparisonRecord,
    ConvergenceReport,
    CornerReport,
    corner_convergence,
    cs_vs_igcs,
    heps_mass,
    second_order_weights,
)
from .errors import (
    CategoricalFeatureUnsupported,
    CohortExplainError,
    ComputationError,
    ConfigError,
    DataError,
    DimensionMismatch,
    DimensionTooLarge,
    EmptyDataset,
    EmptyDissimSet,
    EpsOutOfRange,
    MissingColumn,
    MissingValue,
    NonNumericResponse,
    NonNumericValue,
    SingularCovariance,
    TargetOutOfRange,
    ZOutOfRange,
)
from .evaluation import (
    AbcReport,
    RandomBaseline,
    abc_report,
    abc_scores,
    conditional_curves,
    random_ordering_baseline,
    variable_ordering,
)
from .igcs import QuadratureSpec, SoftValue, ig_of_function, igcs_attribution
from .shapley import (
    Attribution,
    ValueFunction,
    exact_shapley,
    exhaustive_permutation_shapley,
    mc_shapley,
)
from .similarity import SimilarityProfile, build_profile, cohort, soft_similarity
from .values import CohortValue, GkwValue, UniquenessValue

__version__ = "0.1.0"

__all__ = [
    "AbcReport",
    "AbsoluteRange",
    "AbsResidual",
    "Attribution",
    "CategoricalFeatureUnsupported",
    "CohortExplainError",
    "CohortValue",
    "ColumnKind",
    "ComparisonRecord",
    "ComputationError",
    "ConfigError",
    "ConvergenceReport",
    "CornerReport",
    "DataError",
    "Dataset",
    "DimensionMismatch",
    "DimensionTooLarge",
    "EmptyDataset",
    "EmptyDissimSet",
    "EpsOutOfRange",
    "Equality",
    "GkwValue",
    "MissingColumn",
    "MissingValue",
    "NonNumericResponse",
    "NonNumericValue",
    "QuadratureSpec",
    "RandomBaseline",
    "Raw",
    "RelativeRange",
    "Residual",
    "SimilarityProfile",
    "SimilaritySpec",
    "SingularCovariance",
    "SoftValue",
    "SquaredResidual",
    "TargetOutOfRange",
    "UniquenessValue",
    "ValueFunction",
    "ZOutOfRange",
    "abc_report",
    "abc_scores",
    "build_profile",
    "cohort",
    "conditional_curves",
    "corner_convergence",
    "cs_vs_igcs",
    "dataset_summary",
    "exact_shapley",
    "exhaustive_permutation_shapley",
    "feature_ranges",
    "heps_mass",
    "ig_of_function",
    "igcs_attribution",
    "load_dataset",
    "make_similarity_spec",
    "mc_shapley",
    "random_ordering_baseline",
    "save_dataset",
    "second_order_weights",
    "soft_similarity",
    "variable_ordering",
]
