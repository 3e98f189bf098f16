//! Joint partial regression.
//!
//! Estimates a sparse precision matrix Ω and the partial-correlation matrix
//! Q = −TΩT (T = diag(τⱼ)) from an n × p data matrix in two stages:
//!
//! 1. each feature is lasso-regressed on the others ([`lasso`]), giving the
//!    residual variances τ̂ⱼ² and a penalty λⱼ per feature;
//! 2. all regressions are re-solved jointly under a spectral constraint
//!    αI ⪯ Ω ⪯ βI with a PD3O primal-dual splitting ([`pd3o`]).
//!
//! [`estimator::fit`] runs both stages. [`synthetic`] and [`metrics`] provide
//! ground-truth models and the benchmark harness.
//!
//! ```no_run
//! use jpr::{fit, load_csv, FitOptions, LambdaRule};
//!
//! let x = load_csv("returns.csv", true)?;
//! let est = fit(&x, &LambdaRule::cross_validation(5, 0), &FitOptions::default())?;
//! for e in est.edges(0.0) {
//!     println!("{} {} {:.3}", e.j, e.k, e.weight);
//! }
//! # Ok::<(), jpr::JprError>(())
//! ```

pub mod data;
pub mod error;
pub mod estimator;
pub mod lasso;
pub mod linalg;
pub mod metrics;
pub mod pd3o;
pub mod synthetic;

pub use data::{load_csv, read_matrix_csv, write_matrix_csv, DataMatrix, SymMatrix};
pub use error::{JprError, Result};
pub use estimator::{
    edges, fit, init_omega, naive_symmetrized, partial_correlation_from, sample_inverse, Edge,
    EstimateDiagnostics, FitOptions, JprEstimate,
};
pub use lasso::{
    fista_lasso, fit_all_features, residual_variance, select_lambda, InfoCriterion, LambdaGrid,
    LambdaRule, LassoConfig, LassoFit,
};
pub use metrics::{
    frobenius_error, operator2_error, run_benchmark, support_metrics, BenchConfig, BenchEstimator,
    BenchRecord,
};
pub use pd3o::{
    grad_f, lipschitz_constant, loss_gradient, pd3o_step, project_spectral_box, prox_g_over_eta,
    solve_jpr, JprProblem, JprSolveResult, Loss, Pd3oState, SolveDiagnostics, SolverConfig,
    StepSizes,
};
pub use synthetic::{
    adjacency_to_precision, gen_adjacency, sample_gaussian, Adjacency, GroundTruth, ModelKind,
    PrecisionModelSpec,
};

pub use nalgebra::{DMatrix, DVector};
