//! First stage: one lasso regression per feature on all the others, the
//! residual variances τ̂ⱼ², and per-feature selection of λⱼ.
//!
//! Coefficient vectors omit the response feature: entry `k` of θ̂ⱼ belongs to
//! feature `k` when `k < j` and to feature `k + 1` otherwise (see
//! [`crate::linalg::other_index`]).

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::DataMatrix;
use crate::error::{JprError, Result};
use crate::linalg::{column_without, max_eigenvalue, without_index};

/// Stopping rule for the per-feature FISTA solves.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LassoConfig {
    /// Stop once ‖θ⁽ᵏ⁺¹⁾ − θ⁽ᵏ⁾‖₂ ≤ tol (and the proximal step from the
    /// extrapolated point is as short).
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for LassoConfig {
    fn default() -> Self {
        Self {
            tol: 1e-6,
            max_iter: 1000,
        }
    }
}

/// Output of one first-stage regression.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LassoFit {
    pub theta: DVector<f64>,
    pub tau_sq: f64,
    pub lambda: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl LassoFit {
    /// Number of nonzero coefficients.
    pub fn support_size(&self) -> usize {
        self.theta.iter().filter(|v| **v != 0.0).count()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FistaSolution {
    pub theta: DVector<f64>,
    pub iterations: usize,
    pub converged: bool,
}

/// Candidate λ values for the data-driven rules.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum LambdaGrid {
    /// `points` log-spaced values from λ_max = ‖X₋ⱼᵀXⱼ/n‖_∞ down to
    /// `min_ratio · λ_max`, computed per feature.
    Relative {
        points: usize,
        min_ratio: f64,
    },
    Explicit(Vec<f64>),
}

impl Default for LambdaGrid {
    fn default() -> Self {
        LambdaGrid::Relative {
            points: 16,
            min_ratio: 0.01,
        }
    }
}

impl LambdaGrid {
    fn validate(&self) -> Result<()> {
        match self {
            LambdaGrid::Relative { points, min_ratio } => {
                if *points == 0 {
                    return Err(JprError::EmptyGrid);
                }
                if !(min_ratio.is_finite() && *min_ratio > 0.0 && *min_ratio <= 1.0) {
                    return Err(JprError::InvalidConfig(format!(
                        "grid min_ratio must lie in (0, 1], got {min_ratio}"
                    )));
                }
            }
            LambdaGrid::Explicit(values) => {
                if values.is_empty() {
                    return Err(JprError::EmptyGrid);
                }
                if let Some(v) = values.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
                    return Err(JprError::InvalidConfig(format!(
                        "grid values must be finite and nonnegative, got {v}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Grid values for a problem whose smallest all-zero λ is `lambda_max`,
    /// in decreasing order for relative grids.
    pub fn values(&self, lambda_max: f64) -> Vec<f64> {
        match self {
            LambdaGrid::Explicit(v) => v.clone(),
            LambdaGrid::Relative { points, min_ratio } => {
                if *points == 1 {
                    return vec![lambda_max];
                }
                let step = min_ratio.ln() / (*points - 1) as f64;
                (0..*points)
                    .map(|i| lambda_max * (step * i as f64).exp())
                    .collect()
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum InfoCriterion {
    Aic,
    Bic,
}

/// How λⱼ is chosen for each feature.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum LambdaRule {
    Fixed(f64),
    /// λ = c·√(log p / n).
    Theory {
        c: f64,
    },
    CrossValidation {
        grid: LambdaGrid,
        folds: usize,
        seed: u64,
    },
    InformationCriterion {
        grid: LambdaGrid,
        criterion: InfoCriterion,
    },
}

impl Default for LambdaRule {
    fn default() -> Self {
        LambdaRule::Theory { c: 1.0 }
    }
}

impl LambdaRule {
    pub fn cross_validation(folds: usize, seed: u64) -> Self {
        LambdaRule::CrossValidation {
            grid: LambdaGrid::default(),
            folds,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            LambdaRule::Fixed(l) if !(l.is_finite() && *l >= 0.0) => Err(JprError::InvalidConfig(
                format!("lambda must be finite and nonnegative, got {l}"),
            )),
            LambdaRule::Theory { c } if !(c.is_finite() && *c >= 0.0) => Err(
                JprError::InvalidConfig(format!("theory constant must be nonnegative, got {c}")),
            ),
            LambdaRule::CrossValidation { grid, folds, .. } => {
                if *folds < 2 {
                    return Err(JprError::InvalidConfig(format!(
                        "cross-validation needs at least 2 folds, got {folds}"
                    )));
                }
                grid.validate()
            }
            LambdaRule::InformationCriterion { grid, .. } => grid.validate(),
            _ => Ok(()),
        }
    }
}

/// c·√(log p / n).
pub fn theory_lambda(c: f64, p: f64, n: f64) -> f64 {
    c * (p.ln() / n).sqrt()
}

fn soft_threshold(v: f64, t: f64) -> f64 {
    if v > t {
        v - t
    } else if v < -t {
        v + t
    } else {
        0.0
    }
}

/// Minimises (1/2n)‖y − Xθ‖² + λ‖θ‖₁ with FISTA, step 1/L where
/// L = λ_max(XᵀX)/n.
pub fn fista_lasso(
    x_rest: &DMatrix<f64>,
    y: &DVector<f64>,
    lambda: f64,
    tol: f64,
    max_iter: usize,
) -> Result<FistaSolution> {
    if x_rest.nrows() != y.len() {
        return Err(JprError::Shape(format!(
            "design has {} rows but response has {}",
            x_rest.nrows(),
            y.len()
        )));
    }
    let n = y.len() as f64;
    let gram = x_rest.tr_mul(x_rest) / n;
    let xty = x_rest.tr_mul(y) / n;
    let lipschitz = max_eigenvalue(&gram)?;
    fista_gram(&gram, &xty, lipschitz, lambda, tol, max_iter)
}

/// FISTA on the Gram form: gradient Gθ − c with G = XᵀX/n, c = Xᵀy/n.
pub(crate) fn fista_gram(
    gram: &DMatrix<f64>,
    xty: &DVector<f64>,
    lipschitz: f64,
    lambda: f64,
    tol: f64,
    max_iter: usize,
) -> Result<FistaSolution> {
    let m = xty.len();
    let mut theta = DVector::zeros(m);
    if lipschitz <= 0.0 {
        // all predictors are zero
        return Ok(FistaSolution {
            theta,
            iterations: 0,
            converged: true,
        });
    }
    let step = 1.0 / lipschitz;
    let threshold = lambda * step;
    let mut z = theta.clone();
    let mut t = 1.0_f64;
    let mut grad = DVector::zeros(m);

    for iter in 1..=max_iter {
        grad.gemv(1.0, gram, &z, 0.0);
        grad -= xty;
        let next = DVector::from_fn(m, |k, _| soft_threshold(z[k] - step * grad[k], threshold));
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        let delta = &next - &theta;
        let change = delta.norm();
        if !change.is_finite() {
            return Err(JprError::NonFinite("lasso iteration"));
        }
        // the prox-gradient step itself must also be small, otherwise momentum
        // can stall the iterates away from a stationary point
        let step_len = (&next - &z).norm();
        z = &next + delta * ((t - 1.0) / t_next);
        theta = next;
        t = t_next;
        if change <= tol && step_len <= tol {
            return Ok(FistaSolution {
                theta,
                iterations: iter,
                converged: true,
            });
        }
    }
    Ok(FistaSolution {
        theta,
        iterations: max_iter,
        converged: false,
    })
}

/// (1/n)‖y − Xθ‖².
pub fn residual_variance(y: &DVector<f64>, x_rest: &DMatrix<f64>, theta: &DVector<f64>) -> f64 {
    let r = y - x_rest * theta;
    r.norm_squared() / y.len() as f64
}

/// Precomputed per-dataset quantities shared by every feature's regression.
struct Stage1Context<'a> {
    x: &'a DataMatrix,
    gram: DMatrix<f64>,
    folds: Vec<Fold>,
}

struct Fold {
    test: DMatrix<f64>,
    train_gram: DMatrix<f64>,
}

impl<'a> Stage1Context<'a> {
    fn new(x: &'a DataMatrix, rule: &LambdaRule) -> Result<Self> {
        rule.validate()?;
        let folds = match rule {
            LambdaRule::CrossValidation { folds, seed, .. } => make_folds(x, *folds, *seed)?,
            _ => Vec::new(),
        };
        Ok(Self {
            x,
            gram: x.gram(),
            folds,
        })
    }

    fn lambda_max(&self, j: usize) -> f64 {
        column_without(&self.gram, j).amax()
    }

    fn select(&self, j: usize, rule: &LambdaRule, cfg: &LassoConfig) -> Result<f64> {
        if self.x.is_degenerate_column(j) {
            return Err(JprError::DegenerateFeature { feature: j });
        }
        let (n, p) = (self.x.nrows() as f64, self.x.ncols() as f64);
        match rule {
            LambdaRule::Fixed(l) => Ok(*l),
            LambdaRule::Theory { c } => Ok(theory_lambda(*c, p, n)),
            LambdaRule::CrossValidation { grid, .. } => {
                let grid = grid.values(self.lambda_max(j));
                let scores = grid
                    .iter()
                    .map(|&l| self.cv_score(j, l, cfg))
                    .collect::<Result<Vec<_>>>()?;
                Ok(argmin_prefer_larger(&grid, &scores))
            }
            LambdaRule::InformationCriterion { grid, criterion } => {
                let grid = grid.values(self.lambda_max(j));
                let penalty = match criterion {
                    InfoCriterion::Aic => 2.0,
                    InfoCriterion::Bic => n.ln(),
                };
                let scores = grid
                    .iter()
                    .map(|&l| {
                        let fit = self.fit(j, l, cfg)?;
                        Ok(n * fit.tau_sq.ln() + penalty * fit.support_size() as f64)
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok(argmin_prefer_larger(&grid, &scores))
            }
        }
    }

    /// Mean over folds of the held-out mean squared prediction error.
    fn cv_score(&self, j: usize, lambda: f64, cfg: &LassoConfig) -> Result<f64> {
        let mut total = 0.0;
        for fold in &self.folds {
            let g = without_index(&fold.train_gram, j);
            let c = column_without(&fold.train_gram, j);
            let lip = max_eigenvalue(&g)?;
            let sol = fista_gram(&g, &c, lip, lambda, cfg.tol, cfg.max_iter)?;
            let y = fold.test.column(j).into_owned();
            let x_rest = fold.test.clone().remove_column(j);
            total += residual_variance(&y, &x_rest, &sol.theta);
        }
        Ok(total / self.folds.len() as f64)
    }

    fn fit(&self, j: usize, lambda: f64, cfg: &LassoConfig) -> Result<LassoFit> {
        let g = without_index(&self.gram, j);
        let c = column_without(&self.gram, j);
        let lip = max_eigenvalue(&g)?;
        let sol = fista_gram(&g, &c, lip, lambda, cfg.tol, cfg.max_iter)?;
        let y = self.x.column(j);
        let x_rest = self.x.columns_except(j);
        let tau_sq = residual_variance(&y, &x_rest, &sol.theta);
        Ok(LassoFit {
            theta: sol.theta,
            tau_sq,
            lambda,
            iterations: sol.iterations,
            converged: sol.converged,
        })
    }
}

/// Seeded permutation of the rows cut into `k` contiguous blocks; the first
/// `n mod k` blocks get one extra row.
pub fn fold_assignment(n: usize, k: usize, seed: u64) -> Vec<Vec<usize>> {
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let (base, extra) = (n / k, n % k);
    let mut start = 0;
    (0..k)
        .map(|f| {
            let len = base + usize::from(f < extra);
            let block = perm[start..start + len].to_vec();
            start += len;
            block
        })
        .collect()
}

fn make_folds(x: &DataMatrix, k: usize, seed: u64) -> Result<Vec<Fold>> {
    let n = x.nrows();
    if k > n {
        return Err(JprError::InvalidConfig(format!(
            "{k} folds requested for {n} observations"
        )));
    }
    let assignment = fold_assignment(n, k, seed);
    Ok(assignment
        .iter()
        .map(|test_rows| {
            let mut in_test = vec![false; n];
            for &r in test_rows {
                in_test[r] = true;
            }
            let train_rows: Vec<usize> = (0..n).filter(|r| !in_test[*r]).collect();
            let train = x.values().select_rows(train_rows.iter());
            let test = x.values().select_rows(test_rows.iter());
            let train_gram = train.tr_mul(&train) / train.nrows() as f64;
            Fold { test, train_gram }
        })
        .collect())
}

/// Index of the smallest score; exact ties go to the larger λ.
fn argmin_prefer_larger(grid: &[f64], scores: &[f64]) -> f64 {
    let mut best = 0;
    for i in 1..grid.len() {
        let better = scores[i] < scores[best]
            || (scores[i] == scores[best] && grid[i] > grid[best])
            || scores[best].is_nan();
        if better {
            best = i;
        }
    }
    grid[best]
}

/// Chooses λⱼ for feature `j` under `rule`.
pub fn select_lambda(
    x: &DataMatrix,
    j: usize,
    rule: &LambdaRule,
    cfg: &LassoConfig,
) -> Result<f64> {
    if j >= x.ncols() {
        return Err(JprError::Shape(format!("feature index {j} out of range")));
    }
    Stage1Context::new(x, rule)?.select(j, rule, cfg)
}

/// Regresses every feature on the rest. Element `j` of the result is the fit
/// for feature `j`. Features are processed in parallel.
pub fn fit_all_features(
    x: &DataMatrix,
    rule: &LambdaRule,
    cfg: &LassoConfig,
) -> Result<Vec<LassoFit>> {
    let ctx = Stage1Context::new(x, rule)?;
    (0..x.ncols())
        .into_par_iter()
        .map(|j| {
            let lambda = ctx.select(j, rule, cfg)?;
            ctx.fit(j, lambda, cfg)
        })
        .enumerate()
        .map(|(j, r)| r.map_err(|e| e.at_feature(j)))
        .collect()
}
