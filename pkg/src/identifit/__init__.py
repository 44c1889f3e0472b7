"""Parameter-subset identifiability screening and OLS fitting for ODE models.

The pipeline: simulate a parametric ODE model and its per-interval
observations, assemble observation sensitivities by forward integration,
screen parameter subsets by sensitivity-matrix rank and a Fisher-information
uncertainty score, and solve the least-squares inverse problems for the
subsets that survive.
"""

from .data import DataParseError, DataSet, NoiseSpec, generate, read_dataset_csv, write_dataset_csv
from .fitting import (
    DegenerateDof,
    FitConfig,
    FitResult,
    ResidualDiagnostics,
    fit,
    fit_report_dict,
    linearized_estimator,
    objective,
    residual_diagnostics,
    sigma_hat,
    write_fit_report,
    write_residuals_csv,
)
from .linalg import (
    ConvergenceFailure,
    NegativeDiagonal,
    RankDeficient,
    SvdResult,
    UncertaintyScore,
    ZeroParameterValue,
    condition_number,
    covariance,
    fisher,
    numerical_rank,
    rank_tolerance,
    standard_errors,
    svd,
    uncertainty_score,
)
from .models import ModelSystem, ParameterSet, incidence_series, simulate_with_output, state_trajectory
from .ode import (
    IntegrationError,
    IntegratorConfig,
    NonFiniteState,
    StepLimitExceeded,
    TimeGrid,
    Trajectory,
    integrate,
)
from .sensitivity import (
    SensitivityMatrix,
    SubsetUnknownName,
    finite_difference_sensitivities,
    output_sensitivities,
)
from .subsets import (
    CORE,
    POOL,
    InvalidSubsetSize,
    SubsetReport,
    SubsetSpec,
    core_subset,
    enumerate_subsets,
    evaluate_subset,
    feasibility_cut,
    full_rank_filter,
    full_vector_subset,
    score_subsets,
    sweep_subsets,
    write_report_csv,
    write_scatter_csv,
)

__version__ = "0.1.0"
