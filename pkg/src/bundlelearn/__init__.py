"""Learning-by-consuming toolkit.

Consumers estimate per-good utility weights from bundle-level feedback by
recursive least squares; the information matrix's spectrum says what is
learned fast and what stays confounded. This package provides the estimator,
the spectral analysis, bundle-design rules, a consumer/provider simulator, a
two-period monopolist planner with welfare accounting, and a corpus replay
pipeline, plus a CLI (``bundlelearn``) emitting machine-readable tables.
"""

from .corpus import (
    CorpusRecord,
    ReplayReport,
    TrajectoryTable,
    export_trajectory,
    import_trajectory,
    load_corpus,
    replay,
)
from .design import (
    JointIncreaseRegion,
    companion_good,
    joint_increase_region,
    orthogonal_bundle,
    shifted_orthogonal,
    two_good_orthogonal,
)
from .errors import (
    AnchorParallel,
    BundleLearnError,
    ConfigError,
    DegenerateInteraction,
    DimensionMismatch,
    DuplicateItemInRecord,
    NeverFullRank,
    NotPositiveDefinite,
    NotSymmetric,
    ParseError,
    RankDeficient,
    SignViolation,
    SingularAugmentedZ,
    SinkWriteFailure,
    StateNotFullRank,
    StrategyInfeasible,
    ZeroBias,
)
from .estimator import (
    DEFAULT_RIDGE,
    History,
    NoiseModel,
    PrecisionState,
    UpdateResult,
    as_bundle,
    batch_ols,
    batch_ols_free_intercept,
    estimation_error,
    init_ridge,
    mse_lower_bound,
    numerical_rank,
    predict_utility,
    recursive_update,
)
from .interactions import (
    AugmentedIndex,
    CollinearityReduction,
    PairHistorySpec,
    augment_bundle,
    orthogonal_quadratic,
    reduce_collinearity,
    singleton_pair_info,
    verify_w_sparsity,
    w_sparsity_holds,
)
from .market import (
    MarketConfig,
    PlanMode,
    PricingPlan,
    PriorBelief,
    PriorStance,
    WelfareDecomposition,
    plan_complete_info,
    plan_incomplete_info,
    welfare,
)
from .simulator import (
    ConvergenceDiagnostics,
    RidgeInit,
    Scenario,
    Strategy,
    StrategyKind,
    Trajectory,
    WarmupInit,
    convergence_diagnostics,
    expected_update,
    run,
)
from .spectral import (
    CentralityRow,
    CorrelationPartition,
    KappaForecast,
    SpectralSummary,
    centrality_report,
    condition_number,
    decompose,
    partition_by_correlation,
    predict_kappa_after,
)

__version__ = "0.1.0"

__all__ = [
    "AnchorParallel",
    "AugmentedIndex",
    "BundleLearnError",
    "CentralityRow",
    "CollinearityReduction",
    "ConfigError",
    "ConvergenceDiagnostics",
    "CorpusRecord",
    "CorrelationPartition",
    "DEFAULT_RIDGE",
    "DegenerateInteraction",
    "DimensionMismatch",
    "DuplicateItemInRecord",
    "History",
    "JointIncreaseRegion",
    "KappaForecast",
    "MarketConfig",
    "NeverFullRank",
    "NoiseModel",
    "NotPositiveDefinite",
    "NotSymmetric",
    "PairHistorySpec",
    "ParseError",
    "PlanMode",
    "PrecisionState",
    "PricingPlan",
    "PriorBelief",
    "PriorStance",
    "RankDeficient",
    "ReplayReport",
    "RidgeInit",
    "Scenario",
    "SignViolation",
    "SingularAugmentedZ",
    "SinkWriteFailure",
    "SpectralSummary",
    "StateNotFullRank",
    "Strategy",
    "StrategyInfeasible",
    "StrategyKind",
    "Trajectory",
    "TrajectoryTable",
    "UpdateResult",
    "WarmupInit",
    "WelfareDecomposition",
    "ZeroBias",
    "as_bundle",
    "augment_bundle",
    "batch_ols",
    "batch_ols_free_intercept",
    "centrality_report",
    "companion_good",
    "condition_number",
    "convergence_diagnostics",
    "decompose",
    "estimation_error",
    "expected_update",
    "export_trajectory",
    "import_trajectory",
    "init_ridge",
    "joint_increase_region",
    "load_corpus",
    "mse_lower_bound",
    "numerical_rank",
    "orthogonal_bundle",
    "orthogonal_quadratic",
    "partition_by_correlation",
    "plan_complete_info",
    "plan_incomplete_info",
    "predict_kappa_after",
    "predict_utility",
    "recursive_update",
    "reduce_collinearity",
    "replay",
    "run",
    "shifted_orthogonal",
    "singleton_pair_info",
    "two_good_orthogonal",
    "verify_w_sparsity",
    "w_sparsity_holds",
    "welfare",
]
