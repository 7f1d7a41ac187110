"""ratelab: robust nonparametric regression rates, bounds, and simulations."""

from .ep_bounds import (
    BoundInputs,
    EntropyModel,
    FiniteDictionary,
    IntegrabilityError,
    TabulatedEntropy,
    empirical_covering_number,
    exact_covering_number,
    expected_entropy_estimate,
    greedy_cover_certificate,
    mc_sup_ep,
    prop_s3_closed_form,
    tabulate_expected_entropy,
    theorem1_bound,
    theorem2_bound,
)
from .erm import EVAL_STREAM, FitResult, fit, fit_cellwise, l2_error
from .harness import (
    ExperimentPlan,
    PlanError,
    RateFit,
    RunRecord,
    aggregate_errors,
    fit_rate,
    load_plan,
    phase_rows_to_csv,
    plan_from_dict,
    records_from_csv,
    records_to_csv,
    run_plan,
    tail_profile,
)
from .losses import LossConfigError, LossSpec, glm_curvature_bounds, loss_subgradient, loss_value
from .noise import (
    CovariateSpec,
    MomentError,
    NoiseSpec,
    ParameterError,
    sample_covariates,
    sample_noise,
)
from .rates import (
    DomainError,
    InfeasibleError,
    RateInputs,
    RateResult,
    complexity_exponent,
    fixed_point_solve,
    heavy_tail_exponent,
    huber_error_decomposition,
    log_rate_solve,
    nplse_exponent,
    phase_boundary_m,
    phase_diagram,
    quantile_rate,
    set_structured_exponent,
)
from .rng import RngStream
from .sieves import (
    PartitionSieve,
    ReluNet,
    SgdSchedule,
    SieveSpec,
    TargetFunction,
    empirical_risk,
    partition_entropy_model,
    rate_optimal_cells,
    relu_effective_sample_size,
    relu_entropy_model,
    sgd_train,
    truncate,
)

__version__ = "0.1.0"

__all__ = [
    "BoundInputs",
    "CovariateSpec",
    "DomainError",
    "EVAL_STREAM",
    "EntropyModel",
    "ExperimentPlan",
    "FiniteDictionary",
    "FitResult",
    "InfeasibleError",
    "IntegrabilityError",
    "LossConfigError",
    "LossSpec",
    "MomentError",
    "NoiseSpec",
    "ParameterError",
    "PartitionSieve",
    "PlanError",
    "RateFit",
    "RateInputs",
    "RateResult",
    "ReluNet",
    "RngStream",
    "RunRecord",
    "SgdSchedule",
    "SieveSpec",
    "TabulatedEntropy",
    "TargetFunction",
    "aggregate_errors",
    "complexity_exponent",
    "empirical_covering_number",
    "empirical_risk",
    "exact_covering_number",
    "expected_entropy_estimate",
    "fit",
    "fit_cellwise",
    "fit_rate",
    "fixed_point_solve",
    "glm_curvature_bounds",
    "greedy_cover_certificate",
    "heavy_tail_exponent",
    "huber_error_decomposition",
    "l2_error",
    "load_plan",
    "log_rate_solve",
    "loss_subgradient",
    "loss_value",
    "mc_sup_ep",
    "nplse_exponent",
    "partition_entropy_model",
    "phase_boundary_m",
    "phase_diagram",
    "phase_rows_to_csv",
    "plan_from_dict",
    "prop_s3_closed_form",
    "quantile_rate",
    "rate_optimal_cells",
    "records_from_csv",
    "records_to_csv",
    "relu_effective_sample_size",
    "relu_entropy_model",
    "run_plan",
    "sample_covariates",
    "sample_noise",
    "set_structured_exponent",
    "sgd_train",
    "tabulate_expected_entropy",
    "tail_profile",
    "theorem1_bound",
    "theorem2_bound",
    "truncate",
]
