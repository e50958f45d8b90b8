"""Exceedance functions for functional data.

Converts noisy discretely observed trajectories into exceedance profiles
(threshold-indexed survival-like curves) and regresses them on Euclidean
covariates in the 2-Wasserstein geometry.
"""

from .errors import (
    ConfigError,
    CsvFormatError,
    DegenerateLocalDesign,
    DeltaOutOfRange,
    EmptyCentralityDomain,
    EmptyTrajectory,
    ExceedanceError,
    ExtrapolationWarning,
    GridMismatch,
    InsufficientData,
    InsufficientLocalData,
    InvalidCount,
    LengthMismatch,
    SingularCovariance,
    SingularLocalDesign,
    ThresholdOutOfRange,
)
from .exceedance import (
    CentralityProfile,
    DensityProfile,
    DistributionProfile,
    ExceedanceChain,
    ExceedanceProfile,
    QuantileProfile,
    ThresholdGrid,
    default_delta,
    distribution_from_exceedance,
    exceedance_chain,
    exceedance_density,
    exceedance_function,
    force_of_centrality,
    make_threshold_grid,
    quantile_from_distribution,
)
from .frechet import (
    ConditionalExceedance,
    GlobalFrechetModel,
    LocalFrechetModel,
    default_local_bandwidth,
    fit_global,
    fit_local,
    global_weights,
    local_weights,
    predict_conditional,
    threshold_exceedance_function,
)
from .kernels import KernelSpec, kernel_families
from .simulation import (
    KLSpec,
    KappaSpec,
    MarginalResult,
    RegressionResult,
    RegressionSimSpec,
    SimConfig,
    TruncatedNormalLaw,
    UniformLaw,
    generate_regression_sample,
    generate_trajectory,
    regression_spec,
    run_marginal_rmse,
    run_rate_check,
    run_regression_rmse,
    setting_one,
    setting_two,
)
from .smoothing import (
    RawTrajectory,
    SmoothedTrajectory,
    SmoothingConfig,
    cv_bandwidth,
    default_bandwidth,
    local_linear_fit,
    smooth_on_grid,
)
from .wasserstein import (
    RawQuantileCandidate,
    pava,
    project_to_quantile_space,
    wasserstein_distance,
    weighted_quantile_mean,
)

__version__ = "0.1.0"
