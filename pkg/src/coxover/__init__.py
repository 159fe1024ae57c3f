"""Overfitting in Cox proportional-hazards regression, end to end.

Generates synthetic survival data, fits the Cox model at high precision,
solves the replica-symmetric variational saddle-point equations for the
overfitting order parameters, compares simulation against theory, and
inverts the measured distortion to correct fitted models.
"""

__version__ = "0.1.0"

from ._kern import backend_name
from .coxfit import (
    CoxFitResult,
    StepCumulativeHazard,
    breslow,
    fit_cox,
    map_correlated_fit,
    partial_loglik,
    predict_survival,
)
from .data import (
    HazardKind,
    HazardModel,
    Scaling,
    SurvivalDataset,
    apply_correlation,
    default_amplitude,
    draw_beta_star,
    generate_dataset,
    read_dataset_csv,
    subseed,
    write_dataset_csv,
)
from .harness import (
    ExperimentConfig,
    MeasurementSummary,
    correct_fit,
    figure1_demo,
    fit_loglog_lambda,
    measure_cloud,
    measure_order_params,
    run_experiment,
)
from .rs import (
    SolverOptions,
    VariationalSolution,
    asymptotic_log_g,
    asymptotic_rho,
    compact_rhs,
    energy,
    numeric_log_g,
    solve_compact_at_q,
    solve_for_zeta,
    solve_full_variational,
)
from .special import (
    EULER_GAMMA,
    QuadratureKind,
    QuadratureRule,
    euler_gamma,
    lambert_w0,
    lambert_w0_derivative,
    make_quadrature,
)

__all__ = [
    "EULER_GAMMA",
    "CoxFitResult",
    "ExperimentConfig",
    "HazardKind",
    "HazardModel",
    "MeasurementSummary",
    "QuadratureKind",
    "QuadratureRule",
    "Scaling",
    "SolverOptions",
    "StepCumulativeHazard",
    "SurvivalDataset",
    "VariationalSolution",
    "apply_correlation",
    "asymptotic_log_g",
    "asymptotic_rho",
    "backend_name",
    "breslow",
    "compact_rhs",
    "correct_fit",
    "default_amplitude",
    "draw_beta_star",
    "energy",
    "euler_gamma",
    "figure1_demo",
    "fit_cox",
    "fit_loglog_lambda",
    "generate_dataset",
    "lambert_w0",
    "lambert_w0_derivative",
    "make_quadrature",
    "map_correlated_fit",
    "measure_cloud",
    "measure_order_params",
    "numeric_log_g",
    "partial_loglik",
    "predict_survival",
    "read_dataset_csv",
    "run_experiment",
    "solve_compact_at_q",
    "solve_for_zeta",
    "solve_full_variational",
    "subseed",
    "write_dataset_csv",
]
