//! End-to-end joint partial regression plus the conversions between
//! regression coefficients, precision matrices and partial correlations.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::data::{DataMatrix, SymMatrix};
use crate::error::{JprError, Result};
use crate::lasso::{fit_all_features, LambdaRule, LassoConfig, LassoFit};
use crate::linalg::{other_index, spd_inverse};
use crate::pd3o::{project_spectral_box, solve_jpr, JprProblem, SolveDiagnostics, SolverConfig};

/// Everything [`fit`] needs besides the data and the λ rule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    pub solver: SolverConfig,
    pub lasso: LassoConfig,
    /// Subtract column means before fitting.
    pub center: bool,
    /// Also scale columns to unit variance (implies centering).
    pub standardize: bool,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            solver: SolverConfig::default(),
            lasso: LassoConfig::default(),
            center: true,
            standardize: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateDiagnostics {
    #[serde(flatten)]
    pub solve: SolveDiagnostics,
    /// max |Ωⱼⱼ − 1/τ̂ⱼ²| of the solver output before the diagonal was reset.
    pub diagonal_deviation: f64,
}

/// A fitted joint partial regression.
#[derive(Debug, Clone)]
pub struct JprEstimate {
    /// Ω̂, with Ω̂ⱼⱼ = 1/τ̂ⱼ² exactly.
    pub omega_hat: SymMatrix,
    /// Q̂ = −T̂Ω̂T̂ with diag(Q̂) = −1.
    pub q_hat: SymMatrix,
    /// τ̂ⱼ (not squared).
    pub tau: Vec<f64>,
    pub lambdas: Vec<f64>,
    pub stage1: Vec<LassoFit>,
    pub diagnostics: EstimateDiagnostics,
    pub feature_names: Option<Vec<String>>,
}

impl JprEstimate {
    pub fn tau_sq(&self) -> Vec<f64> {
        self.stage1.iter().map(|f| f.tau_sq).collect()
    }

    pub fn converged(&self) -> bool {
        self.diagnostics.solve.converged
    }

    pub fn edges(&self, threshold: f64) -> Vec<Edge> {
        edges(&self.q_hat, threshold)
    }
}

/// Applies the centring options once so both stages see identical data.
pub fn prepare_data(x: &DataMatrix, options: &FitOptions) -> Result<DataMatrix> {
    if x.nrows() < 2 || x.ncols() < 2 {
        return Err(JprError::Shape(format!(
            "need at least 2 observations and 2 features, got {}×{}",
            x.nrows(),
            x.ncols()
        )));
    }
    let data = if options.standardize {
        x.standardize_columns()
    } else if options.center {
        x.center_columns()
    } else {
        x.clone()
    };
    if let Some(j) = data.first_degenerate_column() {
        return Err(JprError::DegenerateFeature { feature: j });
    }
    Ok(data)
}

/// The column-wise regression matrix M: Mⱼⱼ = 1/τ̂ⱼ², M₋ⱼ,ⱼ = −θ̂ⱼ/τ̂ⱼ².
/// Not symmetric in general.
pub fn regression_matrix(stage1: &[LassoFit]) -> Result<DMatrix<f64>> {
    let p = stage1.len();
    let mut m = DMatrix::zeros(p, p);
    for (j, fit) in stage1.iter().enumerate() {
        if !(fit.tau_sq.is_finite() && fit.tau_sq > 0.0) {
            return Err(JprError::DegenerateVariance { feature: j });
        }
        if fit.theta.len() + 1 != p {
            return Err(JprError::Shape(format!(
                "feature {j} has {} coefficients, expected {}",
                fit.theta.len(),
                p - 1
            )));
        }
        m[(j, j)] = 1.0 / fit.tau_sq;
        for (k, t) in fit.theta.iter().enumerate() {
            m[(other_index(j, k), j)] = -t / fit.tau_sq;
        }
    }
    Ok(m)
}

/// Initial iterate: the regression matrix projected onto the spectral box.
pub fn init_omega(stage1: &[LassoFit], alpha: f64, beta: f64) -> Result<SymMatrix> {
    project_spectral_box(&regression_matrix(stage1)?, alpha, beta)
}

/// Baseline: (M + Mᵀ)/2 from the first stage alone, without projection.
pub fn naive_from_stage1(stage1: &[LassoFit]) -> Result<SymMatrix> {
    Ok(SymMatrix::symmetric_part(&regression_matrix(stage1)?))
}

/// Runs the first stage and returns the averaged regression matrix.
pub fn naive_symmetrized(
    x: &DataMatrix,
    rule: &LambdaRule,
    options: &FitOptions,
) -> Result<SymMatrix> {
    let data = prepare_data(x, options)?;
    naive_from_stage1(&fit_all_features(&data, rule, &options.lasso)?)
}

/// Inverse of the sample covariance (1/n)XᵀX of the prepared data.
pub fn sample_inverse(x: &DataMatrix, options: &FitOptions) -> Result<SymMatrix> {
    let data = prepare_data(x, options)?;
    if data.nrows() <= data.ncols() {
        return Err(JprError::Shape(format!(
            "sample covariance is singular with n = {} ≤ p = {}",
            data.nrows(),
            data.ncols()
        )));
    }
    Ok(SymMatrix::symmetric_part(&spd_inverse(&data.gram())?))
}

/// Q with Q_jk = −τⱼ τₖ Ω_jk.
pub fn partial_correlation_from(omega: &SymMatrix, tau: &[f64]) -> SymMatrix {
    let p = omega.dim();
    assert_eq!(tau.len(), p, "one scale per feature");
    let m = omega.matrix();
    let q = DMatrix::from_fn(p, p, |j, k| -(tau[j] * tau[k]) * m[(j, k)]);
    SymMatrix::symmetric_part(&q)
}

/// Fits the joint partial regression.
pub fn fit(x: &DataMatrix, rule: &LambdaRule, options: &FitOptions) -> Result<JprEstimate> {
    options.solver.validate()?;
    let data = prepare_data(x, options)?;
    let p = data.ncols();

    let stage1 = fit_all_features(&data, rule, &options.lasso)?;
    let tau_sq: Vec<f64> = stage1.iter().map(|f| f.tau_sq).collect();
    if let Some(j) = tau_sq.iter().position(|t| !(t.is_finite() && *t > 0.0)) {
        return Err(JprError::DegenerateVariance { feature: j });
    }
    let lambdas: Vec<f64> = stage1.iter().map(|f| f.lambda).collect();

    let problem = JprProblem::new(&data, tau_sq.clone(), lambdas.clone())?;
    let omega0 = init_omega(&stage1, options.solver.alpha, options.solver.beta)?;
    let solved = solve_jpr(&problem, &options.solver, Some(omega0))?;

    let mut omega = solved.omega.into_inner();
    // entries soft-thresholded to zero from both sides are zero in Ω̂
    for j in 0..p {
        for k in 0..p {
            if j != k && solved.prox[(j, k)] == 0.0 && solved.prox[(k, j)] == 0.0 {
                omega[(j, k)] = 0.0;
            }
        }
    }
    let mut deviation = 0.0_f64;
    for j in 0..p {
        let target = 1.0 / tau_sq[j];
        deviation = deviation.max((omega[(j, j)] - target).abs());
        omega[(j, j)] = target;
    }
    let omega_hat = SymMatrix::symmetric_part(&omega);
    let tau: Vec<f64> = tau_sq.iter().map(|t| t.sqrt()).collect();
    let mut q = partial_correlation_from(&omega_hat, &tau).into_inner();
    for j in 0..p {
        q[(j, j)] = -1.0;
    }

    Ok(JprEstimate {
        omega_hat,
        q_hat: SymMatrix::symmetric_part(&q),
        tau,
        lambdas,
        stage1,
        diagnostics: EstimateDiagnostics {
            solve: solved.diagnostics,
            diagonal_deviation: deviation,
        },
        feature_names: data.feature_names().map(<[String]>::to_vec),
    })
}

/// An edge of the partial-correlation network, 0-based with `j < k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub j: usize,
    pub k: usize,
    pub weight: f64,
}

/// Pairs with |Q_jk| > threshold, by decreasing |weight| then (j, k).
pub fn edges(q: &SymMatrix, threshold: f64) -> Vec<Edge> {
    let p = q.dim();
    let mut out: Vec<Edge> = (0..p)
        .flat_map(|j| ((j + 1)..p).map(move |k| (j, k)))
        .filter_map(|(j, k)| {
            let weight = q.get(j, k);
            (weight.abs() > threshold).then_some(Edge { j, k, weight })
        })
        .collect();
    out.sort_by(|a, b| {
        b.weight
            .abs()
            .total_cmp(&a.weight.abs())
            .then((a.j, a.k).cmp(&(b.j, b.k)))
    });
    out
}
