//! Second stage: the joint partial-regression program
//!
//! ```text
//! minimise   f(Ω) + g(Ω)   subject to   αI ⪯ Ω ⪯ βI
//! f(Ω) = Σⱼ ℓ(Xⱼ + τ̂ⱼ² X₋ⱼ Ω₋ⱼ,ⱼ)
//! g(Ω) = Σⱼ λⱼ τ̂ⱼ² ‖Ω₋ⱼ,ⱼ‖₁ + ι{Ωⱼⱼ = 1/τ̂ⱼ²}
//! ```
//!
//! solved with the PD3O primal-dual splitting: the spectral box is handled by
//! projection in the primal step, `g` through its proximal operator in the dual
//! step (via the Moreau identity), and `f` by its gradient.
//!
//! `f` reads Ω one column at a time, so it is a function of a general square
//! matrix; the gradient routines accept non-symmetric input.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{DataMatrix, SymMatrix};
use crate::error::{JprError, Result};
use crate::linalg::{column_without, max_eigenvalue, symmetric_eigen, without_index};

/// Per-observation loss of the partial regressions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Loss {
    /// ℓ(z) = ‖z‖² / 2n
    Quadratic,
    /// ℓ(z) = (1/n) Σ φ_ρ(zᵢ)
    Huber { rho: f64 },
}

impl Loss {
    pub const DEFAULT_HUBER_RHO: f64 = 1.345;

    pub fn huber() -> Self {
        Loss::Huber {
            rho: Self::DEFAULT_HUBER_RHO,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub loss: Loss,
    /// Lower eigenvalue bound α.
    pub alpha: f64,
    /// Upper eigenvalue bound β; `f64::INFINITY` for none.
    pub beta: f64,
    /// Primal step γ; defaults to 1/L.
    pub gamma: Option<f64>,
    /// Dual step η; defaults to 1/γ.
    pub eta: Option<f64>,
    /// Stop when max(‖ΔΩ‖_F, ‖ΔU‖_F) ≤ tol.
    pub tol: f64,
    pub max_iter: usize,
    /// Keep the termination residual of every iteration.
    pub record_history: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            loss: Loss::Quadratic,
            alpha: 0.0,
            beta: f64::INFINITY,
            gamma: None,
            eta: None,
            tol: 1e-6,
            max_iter: 10_000,
            record_history: false,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(JprError::InvalidConfig(msg));
        if !(self.alpha.is_finite() && self.alpha >= 0.0) {
            return bad(format!(
                "alpha must be finite and nonnegative, got {}",
                self.alpha
            ));
        }
        if self.beta.is_nan() || self.beta <= self.alpha {
            return bad(format!(
                "beta ({}) must exceed alpha ({})",
                self.beta, self.alpha
            ));
        }
        if !(self.tol.is_finite() && self.tol >= 0.0) {
            return bad(format!("tolerance must be nonnegative, got {}", self.tol));
        }
        if let Loss::Huber { rho } = self.loss {
            if !(rho.is_finite() && rho > 0.0) {
                return bad(format!("huber rho must be positive, got {rho}"));
            }
        }
        for (name, v) in [("gamma", self.gamma), ("eta", self.eta)] {
            if let Some(v) = v {
                if !(v.is_finite() && v > 0.0) {
                    return bad(format!("{name} must be positive, got {v}"));
                }
            }
        }
        Ok(())
    }

    /// Resolves γ and η against the smoothness constant `lipschitz`, checking
    /// γ < 2/L and γη ≤ 1.
    pub fn step_sizes(&self, lipschitz: f64) -> Result<StepSizes> {
        let auto_gamma = if lipschitz > 0.0 {
            1.0 / lipschitz
        } else {
            1.0
        };
        let gamma = self.gamma.unwrap_or(auto_gamma);
        let eta = self.eta.unwrap_or(1.0 / gamma);
        if lipschitz > 0.0 && gamma >= 2.0 / lipschitz {
            return Err(JprError::InvalidConfig(format!(
                "gamma = {gamma} violates gamma < 2/L = {}",
                2.0 / lipschitz
            )));
        }
        if gamma * eta > 1.0 + 1e-12 {
            return Err(JprError::InvalidConfig(format!(
                "gamma * eta = {} exceeds 1",
                gamma * eta
            )));
        }
        Ok(StepSizes {
            gamma,
            eta,
            lipschitz,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepSizes {
    pub gamma: f64,
    pub eta: f64,
    pub lipschitz: f64,
}

/// Euclidean projection onto {Ω symmetric : αI ⪯ Ω ⪯ βI}: the symmetric part
/// of `a` with its eigenvalues clipped to [α, β].
pub fn project_spectral_box(a: &DMatrix<f64>, alpha: f64, beta: f64) -> Result<SymMatrix> {
    // also rejects NaN bounds
    if alpha.partial_cmp(&beta) != Some(std::cmp::Ordering::Less) {
        return Err(JprError::InvalidConfig(format!(
            "empty spectral box [{alpha}, {beta}]"
        )));
    }
    if a.iter().any(|v| !v.is_finite()) {
        return Err(JprError::NonFinite("projection input"));
    }
    let sym = SymMatrix::symmetric_part(a);
    if strictly_inside(sym.matrix(), alpha, beta) {
        return Ok(sym);
    }
    let eig = symmetric_eigen(sym.matrix())?;
    if eig.eigenvalues.iter().all(|&l| l >= alpha && l <= beta) {
        return Ok(sym);
    }
    let clipped = eig.eigenvalues.map(|l| l.clamp(alpha, beta));
    let q = &eig.eigenvectors;
    let mut scaled = q.clone();
    for (mut col, l) in scaled.column_iter_mut().zip(clipped.iter()) {
        col *= *l;
    }
    Ok(SymMatrix::symmetric_part(&(scaled * q.transpose())))
}

/// Cheap interior test: αI ≺ A ≺ βI holds when both shifted matrices admit
/// a Cholesky factorization.
fn strictly_inside(a: &DMatrix<f64>, alpha: f64, beta: f64) -> bool {
    let p = a.nrows();
    let id = DMatrix::<f64>::identity(p, p);
    let lower = alpha == f64::NEG_INFINITY || (a - &id * alpha).cholesky().is_some();
    lower && (beta == f64::INFINITY || (&id * beta - a).cholesky().is_some())
}

/// ∇ℓ(z).
pub fn loss_gradient(z: &DVector<f64>, loss: Loss) -> DVector<f64> {
    let n = z.len() as f64;
    match loss {
        Loss::Quadratic => z / n,
        Loss::Huber { rho } => z.map(|v| huber_psi(v, rho) / n),
    }
}

/// ℓ(z).
pub fn loss_value(z: &DVector<f64>, loss: Loss) -> f64 {
    let n = z.len() as f64;
    match loss {
        Loss::Quadratic => z.norm_squared() / (2.0 * n),
        Loss::Huber { rho } => z.iter().map(|v| huber_phi(*v, rho)).sum::<f64>() / n,
    }
}

#[inline]
fn huber_psi(v: f64, rho: f64) -> f64 {
    if v.abs() <= rho {
        v
    } else {
        rho * v.signum()
    }
}

#[inline]
fn huber_phi(v: f64, rho: f64) -> f64 {
    if v.abs() <= rho {
        0.5 * v * v
    } else {
        rho * (v.abs() - 0.5 * rho)
    }
}

/// ∇f(Ω) evaluated column by column from the data: zero diagonal and
/// ∇f₋ⱼ,ⱼ = τ̂ⱼ² X₋ⱼᵀ ∇ℓ(Xⱼ + τ̂ⱼ² X₋ⱼ Ω₋ⱼ,ⱼ).
pub fn grad_f(omega: &DMatrix<f64>, x: &DataMatrix, tau_sq: &[f64], loss: Loss) -> DMatrix<f64> {
    let p = x.ncols();
    assert_eq!(omega.shape(), (p, p), "omega must be p × p");
    assert_eq!(tau_sq.len(), p, "one residual variance per feature");
    let mut grad = DMatrix::zeros(p, p);
    for j in 0..p {
        let x_rest = x.columns_except(j);
        let z = x.column(j) + (&x_rest * column_without(omega, j)) * tau_sq[j];
        let g = x_rest.tr_mul(&loss_gradient(&z, loss)) * tau_sq[j];
        for (k, v) in g.iter().enumerate() {
            grad[(crate::linalg::other_index(j, k), j)] = *v;
        }
    }
    grad
}

/// L = maxⱼ τ̂ⱼ⁴ λ_max(X₋ⱼᵀX₋ⱼ) / n.
pub fn lipschitz_constant(x: &DataMatrix, tau_sq: &[f64]) -> Result<f64> {
    lipschitz_from_gram(&x.gram(), tau_sq)
}

fn lipschitz_from_gram(gram: &DMatrix<f64>, tau_sq: &[f64]) -> Result<f64> {
    let per_feature = tau_sq
        .par_iter()
        .enumerate()
        .map(|(j, t)| max_eigenvalue(&without_index(gram, j)).map(|top| t * t * top))
        .collect::<Result<Vec<f64>>>()?;
    Ok(per_feature.into_iter().fold(0.0, f64::max))
}

/// Prox of g/η evaluated at V/η: diagonal 1/τ̂ⱼ², off-diagonal entries
/// soft-thresholded, sign(V_kj)(|V_kj| − τ̂ⱼ²λⱼ)₊ / η.
pub fn prox_g_over_eta(
    v: &DMatrix<f64>,
    eta: f64,
    tau_sq: &[f64],
    lambdas: &[f64],
) -> DMatrix<f64> {
    let p = v.ncols();
    let mut out = DMatrix::zeros(p, p);
    for j in 0..p {
        let level = tau_sq[j] * lambdas[j];
        for k in 0..p {
            out[(k, j)] = if k == j {
                1.0 / tau_sq[j]
            } else {
                let vk = v[(k, j)];
                vk.signum() * (vk.abs() - level).max(0.0) / eta
            };
        }
    }
    out
}

/// The data of one stage-2 problem: centred observations, residual variances
/// and per-feature penalties.
#[derive(Debug, Clone)]
pub struct JprProblem {
    x: DMatrix<f64>,
    gram: DMatrix<f64>,
    tau_sq: Vec<f64>,
    lambdas: Vec<f64>,
}

impl JprProblem {
    pub fn new(x: &DataMatrix, tau_sq: Vec<f64>, lambdas: Vec<f64>) -> Result<Self> {
        let p = x.ncols();
        if tau_sq.len() != p || lambdas.len() != p {
            return Err(JprError::Shape(format!(
                "expected {p} residual variances and penalties, got {} and {}",
                tau_sq.len(),
                lambdas.len()
            )));
        }
        if let Some(j) = tau_sq.iter().position(|t| !(t.is_finite() && *t > 0.0)) {
            return Err(JprError::DegenerateVariance { feature: j });
        }
        if let Some(l) = lambdas.iter().find(|l| !(l.is_finite() && **l >= 0.0)) {
            return Err(JprError::InvalidConfig(format!(
                "penalties must be finite and nonnegative, got {l}"
            )));
        }
        Ok(Self {
            x: x.values().clone(),
            gram: x.gram(),
            tau_sq,
            lambdas,
        })
    }

    pub fn dim(&self) -> usize {
        self.tau_sq.len()
    }

    pub fn tau_sq(&self) -> &[f64] {
        &self.tau_sq
    }

    pub fn lambdas(&self) -> &[f64] {
        &self.lambdas
    }

    pub fn lipschitz(&self) -> Result<f64> {
        lipschitz_from_gram(&self.gram, &self.tau_sq)
    }

    /// Column j holds the regression weights (1 on feature j, τ̂ⱼ²Ω_kj on
    /// feature k), so Xⱼ + τ̂ⱼ²X₋ⱼΩ₋ⱼ,ⱼ = X·W[:, j].
    fn weights(&self, omega: &DMatrix<f64>) -> DMatrix<f64> {
        let mut w = omega.clone();
        for (j, mut col) in w.column_iter_mut().enumerate() {
            col *= self.tau_sq[j];
            col[j] = 1.0;
        }
        w
    }

    /// ∇f(Ω). The quadratic loss works from the cached Gram matrix (O(p³));
    /// Huber needs the data (O(np²)).
    pub fn gradient(&self, omega: &DMatrix<f64>, loss: Loss) -> DMatrix<f64> {
        let w = self.weights(omega);
        let mut grad = match loss {
            Loss::Quadratic => &self.gram * &w,
            Loss::Huber { rho } => {
                let n = self.x.nrows() as f64;
                let z = (&self.x * &w).map(|v| huber_psi(v, rho) / n);
                self.x.tr_mul(&z)
            }
        };
        for (j, mut col) in grad.column_iter_mut().enumerate() {
            col *= self.tau_sq[j];
            col[j] = 0.0;
        }
        grad
    }

    /// f(Ω).
    pub fn smooth_loss(&self, omega: &DMatrix<f64>, loss: Loss) -> f64 {
        let w = self.weights(omega);
        match loss {
            Loss::Quadratic => {
                let gw = &self.gram * &w;
                0.5 * w.component_mul(&gw).sum()
            }
            Loss::Huber { .. } => {
                let z = &self.x * &w;
                z.column_iter()
                    .map(|c| loss_value(&c.into_owned(), loss))
                    .sum()
            }
        }
    }

    /// Σⱼ λⱼ τ̂ⱼ² ‖Ω₋ⱼ,ⱼ‖₁.
    pub fn penalty(&self, omega: &DMatrix<f64>) -> f64 {
        omega
            .column_iter()
            .enumerate()
            .map(|(j, col)| {
                let off: f64 = col
                    .iter()
                    .enumerate()
                    .filter(|(k, _)| *k != j)
                    .map(|(_, v)| v.abs())
                    .sum();
                self.lambdas[j] * self.tau_sq[j] * off
            })
            .sum()
    }

    /// f(Ω) + the ℓ1 part of g(Ω). The diagonal does not enter either term.
    pub fn objective(&self, omega: &DMatrix<f64>, loss: Loss) -> f64 {
        self.smooth_loss(omega, loss) + self.penalty(omega)
    }

    /// diag(1/τ̂ⱼ²).
    pub fn diagonal_target(&self) -> SymMatrix {
        SymMatrix::from_diagonal(&self.tau_sq.iter().map(|t| 1.0 / t).collect::<Vec<_>>())
    }
}

/// Primal iterate, dual iterate and the cached gradient at the primal iterate.
#[derive(Debug, Clone)]
pub struct Pd3oState {
    pub omega: SymMatrix,
    pub u: DMatrix<f64>,
    pub grad_cache: DMatrix<f64>,
    pub iteration: usize,
}

impl Pd3oState {
    /// Starts from `omega` with a zero dual iterate.
    pub fn new(problem: &JprProblem, omega: SymMatrix, loss: Loss) -> Self {
        let p = omega.dim();
        let grad_cache = problem.gradient(omega.matrix(), loss);
        Self {
            omega,
            u: DMatrix::zeros(p, p),
            grad_cache,
            iteration: 0,
        }
    }
}

/// One PD3O iteration:
///
/// ```text
/// Ω⁺ = Π(Ω − γU − γ∇f(Ω))
/// V  = U + η(2Ω⁺ − Ω) + γη(∇f(Ω) − ∇f(Ω⁺))
/// U⁺ = V − η·prox_{g/η}(V/η)
/// ```
pub fn pd3o_step(
    state: &Pd3oState,
    problem: &JprProblem,
    config: &SolverConfig,
    steps: StepSizes,
) -> Result<Pd3oState> {
    step_with_prox(state, problem, config, steps).map(|(next, _)| next)
}

/// One PD3O step, also returning the prox point prox_{g/η}(V/η), which
/// carries the exact zeros of the soft threshold.
fn step_with_prox(
    state: &Pd3oState,
    problem: &JprProblem,
    config: &SolverConfig,
    steps: StepSizes,
) -> Result<(Pd3oState, DMatrix<f64>)> {
    let StepSizes { gamma, eta, .. } = steps;
    let omega = state.omega.matrix();

    let forward = omega - (&state.u + &state.grad_cache) * gamma;
    let omega_next = project_spectral_box(&forward, config.alpha, config.beta)?;
    let grad_next = problem.gradient(omega_next.matrix(), config.loss);

    let mut v = &state.u + (omega_next.matrix() * 2.0 - omega) * eta;
    v += (&state.grad_cache - &grad_next) * (gamma * eta);
    let prox = prox_g_over_eta(&v, eta, problem.tau_sq(), problem.lambdas());
    let u_next = v - &prox * eta;

    if !omega_next.matrix().norm().is_finite() || !u_next.norm().is_finite() {
        return Err(JprError::NonFinite("PD3O iterates"));
    }
    let next = Pd3oState {
        omega: omega_next,
        u: u_next,
        grad_cache: grad_next,
        iteration: state.iteration + 1,
    };
    Ok((next, prox))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveDiagnostics {
    pub iterations: usize,
    /// Last value of max(‖ΔΩ‖_F, ‖ΔU‖_F).
    pub residual: f64,
    pub converged: bool,
    pub gamma: f64,
    pub eta: f64,
    pub lipschitz: f64,
    /// Residual per iteration when requested.
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub history: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct JprSolveResult {
    pub omega: SymMatrix,
    pub u: DMatrix<f64>,
    /// Last prox point of g; exactly sparse, equal to `omega` at the fixed
    /// point. Zero-iteration solves report the initial iterate.
    pub prox: DMatrix<f64>,
    pub diagnostics: SolveDiagnostics,
}

/// Runs PD3O from `omega0` (default: the projection of diag(1/τ̂ⱼ²)) and a
/// zero dual iterate until the iterates are stationary within `config.tol`
/// or `config.max_iter` steps have been taken. Non-convergence is reported
/// in the diagnostics, with the last iterate returned.
pub fn solve_jpr(
    problem: &JprProblem,
    config: &SolverConfig,
    omega0: Option<SymMatrix>,
) -> Result<JprSolveResult> {
    config.validate()?;
    let p = problem.dim();
    let omega0 = match omega0 {
        Some(o) if o.dim() != p => {
            return Err(JprError::Shape(format!(
                "initial iterate is {}×{}, expected {p}×{p}",
                o.dim(),
                o.dim()
            )))
        }
        Some(o) => o,
        None => project_spectral_box(
            problem.diagonal_target().matrix(),
            config.alpha,
            config.beta,
        )?,
    };
    let steps = config.step_sizes(problem.lipschitz()?)?;

    let mut state = Pd3oState::new(problem, omega0, config.loss);
    let mut residual = f64::INFINITY;
    let mut converged = false;
    let mut history = Vec::new();
    let mut prox = state.omega.matrix().clone();
    while state.iteration < config.max_iter {
        let (next, z) = step_with_prox(&state, problem, config, steps)?;
        prox = z;
        residual = (next.omega.matrix() - state.omega.matrix())
            .norm()
            .max((&next.u - &state.u).norm());
        state = next;
        if config.record_history {
            history.push(residual);
        }
        if residual <= config.tol {
            converged = true;
            break;
        }
    }

    Ok(JprSolveResult {
        omega: state.omega,
        u: state.u,
        prox,
        diagnostics: SolveDiagnostics {
            iterations: state.iteration,
            residual,
            converged,
            gamma: steps.gamma,
            eta: steps.eta,
            lipschitz: steps.lipschitz,
            history,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn diag(v: &[f64]) -> DMatrix<f64> {
        DMatrix::from_diagonal(&DVector::from_column_slice(v))
    }

    #[test]
    fn projection_examples() {
        let id = DMatrix::identity(3, 3);
        assert_eq!(
            project_spectral_box(&id, 0.0, f64::INFINITY)
                .unwrap()
                .matrix(),
            &id
        );

        let skew = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]);
        let p = project_spectral_box(&skew, 0.0, f64::INFINITY).unwrap();
        assert!(p.matrix().amax() < 1e-15);

        let p = project_spectral_box(&diag(&[3.0, -2.0]), 0.0, 2.0).unwrap();
        assert!((p.matrix() - diag(&[2.0, 0.0])).amax() < 1e-14);

        assert!(project_spectral_box(&id, 1.0, 1.0).is_err());
    }

    #[test]
    fn loss_gradient_examples() {
        let z = DVector::from_vec(vec![2.0, -4.0]);
        assert_eq!(loss_gradient(&z, Loss::Quadratic).as_slice(), &[1.0, -2.0]);

        let z = DVector::from_vec(vec![0.5, 3.0, -3.0]);
        let g = loss_gradient(&z, Loss::Huber { rho: 1.0 });
        for (a, b) in g.iter().zip([1.0 / 6.0, 1.0 / 3.0, -1.0 / 3.0]) {
            assert!((a - b).abs() < 1e-15);
        }

        let z = DVector::from_vec(vec![0.5, 30.0, -7.0, 1e3]);
        assert_eq!(
            loss_gradient(&z, Loss::Huber { rho: f64::INFINITY }),
            loss_gradient(&z, Loss::Quadratic)
        );
    }

    #[test]
    fn prox_examples() {
        let v = DMatrix::from_row_slice(3, 3, &[9.0, 2.0, 0.3, 0.3, 9.0, -2.0, -2.0, 2.0, 9.0]);
        let out = prox_g_over_eta(&v, 1.0, &[1.0; 3], &[0.5; 3]);
        assert_eq!(out[(0, 1)], 1.5);
        assert_eq!(out[(0, 2)], 0.0);
        assert_eq!(out[(2, 0)], -1.5);
        assert_eq!(out[(1, 2)], -1.5);

        let tau = [0.5, 2.0, 4.0];
        let out = prox_g_over_eta(&v, 3.0, &tau, &[0.1, 0.2, 0.3]);
        for j in 0..3 {
            assert_eq!(out[(j, j)], 1.0 / tau[j]);
        }

        let out = prox_g_over_eta(&v, 1.0, &[1.0; 3], &[0.0; 3]);
        for j in 0..3 {
            for k in 0..3 {
                if j != k {
                    assert_eq!(out[(j, k)], v[(j, k)]);
                }
            }
        }
    }

    #[test]
    fn step_size_rules() {
        let cfg = SolverConfig::default();
        let s = cfg.step_sizes(4.0).unwrap();
        assert_eq!((s.gamma, s.eta), (0.25, 4.0));
        let too_big = SolverConfig {
            gamma: Some(0.5),
            ..SolverConfig::default()
        };
        assert!(too_big.step_sizes(4.0).is_err());
        let bad_product = SolverConfig {
            gamma: Some(0.25),
            eta: Some(5.0),
            ..SolverConfig::default()
        };
        assert!(bad_product.step_sizes(4.0).is_err());
    }

    #[test]
    fn config_validation() {
        let mut cfg = SolverConfig {
            beta: 0.0,
            ..SolverConfig::default()
        };
        assert!(cfg.validate().is_err());
        cfg.beta = 1.0;
        assert!(cfg.validate().is_ok());
        cfg.loss = Loss::Huber { rho: 0.0 };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn zero_residual_variance_is_rejected() {
        let x =
            DataMatrix::new(DMatrix::from_row_slice(3, 2, &[1., 2., 0., 1., -1., -3.])).unwrap();
        assert!(matches!(
            JprProblem::new(&x, vec![1.0, 0.0], vec![0.1, 0.1]),
            Err(JprError::DegenerateVariance { feature: 1 })
        ));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        /// Off-diagonal prox output minimises (η/2)(m − V/η)² + τ̂²λ|m| over a fine grid.
        #[test]
        fn prox_minimises_scalar_problem(
            v in -3.0f64..3.0,
            eta in 0.2f64..5.0,
            tau_sq in 0.2f64..3.0,
            lambda in 0.0f64..1.0,
        ) {
            let vm = DMatrix::from_row_slice(2, 2, &[0.0, v, 0.0, 0.0]);
            let m = prox_g_over_eta(&vm, eta, &[1.0, tau_sq], &[1.0, lambda])[(0, 1)];
            let obj = |x: f64| 0.5 * eta * (x - v / eta).powi(2) + tau_sq * lambda * x.abs();
            let centre = v / eta;
            let best = (-40_000..=40_000)
                .map(|i| centre + i as f64 * 1e-4)
                .chain(std::iter::once(0.0))
                .map(obj)
                .fold(f64::INFINITY, f64::min);
            prop_assert!(obj(m) <= best + 1e-6);
        }

        /// Gram-based gradient equals the per-column formula.
        #[test]
        fn cached_gradient_matches_direct(seed in 0u64..1000, huber in proptest::bool::ANY) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let (n, p) = (7, 4);
            let x = DataMatrix::new(DMatrix::from_fn(n, p, |_, _| rng.random_range(-1.0..1.0))).unwrap();
            let omega = DMatrix::from_fn(p, p, |_, _| rng.random_range(-1.0..1.0));
            let tau: Vec<f64> = (0..p).map(|_| rng.random_range(0.3..2.0)).collect();
            let loss = if huber { Loss::Huber { rho: 0.4 } } else { Loss::Quadratic };
            let problem = JprProblem::new(&x, tau.clone(), vec![0.0; p]).unwrap();
            let fast = problem.gradient(&omega, loss);
            let direct = grad_f(&omega, &x, &tau, loss);
            prop_assert!((fast - direct).amax() < 1e-12);
        }
    }
}
