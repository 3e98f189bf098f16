//! Oracles shared by the integration and acceptance suites. Everything here
//! is written from the defining formulas with plain loops and does not call
//! into the solver code it is used to check.

#![allow(dead_code)]

use jpr::{DMatrix, DVector, DataMatrix, ModelKind, PrecisionModelSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Centred Gaussian data from a seeded Erdős–Rényi model.
pub fn er_data(p: usize, n: usize, edge_prob: f64, seed: u64) -> (jpr::GroundTruth, DataMatrix) {
    let spec = PrecisionModelSpec::new(ModelKind::ErdosRenyi { edge_prob }, p, seed);
    let truth = jpr::synthetic::generate(&spec).unwrap();
    let x = jpr::sample_gaussian(&truth.sigma_star, n, seed).unwrap();
    (truth, x.center_columns())
}

pub fn random_matrix(rng: &mut ChaCha8Rng, n: usize, p: usize) -> DMatrix<f64> {
    DMatrix::from_fn(n, p, |_, _| rng.random_range(-1.0..1.0))
}

/// Quadratic or Huber loss value on a residual vector, straight from the
/// definitions: ‖z‖²/2n or (1/n)Σφ_ρ(zᵢ).
pub fn loss(z: &[f64], huber_rho: Option<f64>) -> f64 {
    let n = z.len() as f64;
    match huber_rho {
        None => z.iter().map(|v| v * v).sum::<f64>() / (2.0 * n),
        Some(rho) => {
            z.iter()
                .map(|v| {
                    if v.abs() <= rho {
                        0.5 * v * v
                    } else {
                        rho * (v.abs() - 0.5 * rho)
                    }
                })
                .sum::<f64>()
                / n
        }
    }
}

/// f(Ω) = Σⱼ ℓ(Xⱼ + τⱼ² Σ_{k≠j} X_k Ω_kj), looping over observations.
pub fn smooth_objective(
    x: &DMatrix<f64>,
    tau_sq: &[f64],
    omega: &DMatrix<f64>,
    huber_rho: Option<f64>,
) -> f64 {
    let (n, p) = x.shape();
    (0..p)
        .map(|j| {
            let z: Vec<f64> = (0..n)
                .map(|i| {
                    let mut s = x[(i, j)];
                    for k in 0..p {
                        if k != j {
                            s += tau_sq[j] * x[(i, k)] * omega[(k, j)];
                        }
                    }
                    s
                })
                .collect();
            loss(&z, huber_rho)
        })
        .sum()
}

/// f(Ω) + Σⱼ λⱼτⱼ² Σ_{k≠j} |Ω_kj|.
pub fn full_objective(
    x: &DMatrix<f64>,
    tau_sq: &[f64],
    lambdas: &[f64],
    omega: &DMatrix<f64>,
    huber_rho: Option<f64>,
) -> f64 {
    let p = x.ncols();
    let mut pen = 0.0;
    for j in 0..p {
        for k in 0..p {
            if k != j {
                pen += lambdas[j] * tau_sq[j] * omega[(k, j)].abs();
            }
        }
    }
    smooth_objective(x, tau_sq, omega, huber_rho) + pen
}

/// Central finite differences of f on the off-diagonal coordinates.
pub fn fd_gradient(
    x: &DMatrix<f64>,
    tau_sq: &[f64],
    omega: &DMatrix<f64>,
    huber_rho: Option<f64>,
    h: f64,
) -> DMatrix<f64> {
    let p = x.ncols();
    let mut g = DMatrix::zeros(p, p);
    for j in 0..p {
        for k in 0..p {
            if k == j {
                continue;
            }
            let mut plus = omega.clone();
            plus[(k, j)] += h;
            let mut minus = omega.clone();
            minus[(k, j)] -= h;
            g[(k, j)] = (smooth_objective(x, tau_sq, &plus, huber_rho)
                - smooth_objective(x, tau_sq, &minus, huber_rho))
                / (2.0 * h);
        }
    }
    g
}

/// Largest |eigenvalue| of a symmetric matrix by power iteration.
pub fn power_iteration(m: &DMatrix<f64>, iters: usize) -> f64 {
    let p = m.nrows();
    let mut v = DVector::from_fn(p, |i, _| 1.0 + 0.1 * i as f64);
    v /= v.norm();
    let mut est = 0.0;
    for _ in 0..iters {
        let w = m * &v;
        let norm = w.norm();
        if norm == 0.0 {
            return 0.0;
        }
        // Rayleigh quotient keeps the sign; the magnitude is what we report
        est = v.dot(&w);
        v = w / norm;
    }
    est.abs()
}

/// Cyclic coordinate descent for (1/2n)‖y − Xθ‖² + λ‖θ‖₁.
pub fn coordinate_descent_lasso(
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    lambda: f64,
    sweeps: usize,
) -> DVector<f64> {
    let (n, m) = x.shape();
    let nf = n as f64;
    let mut theta = DVector::zeros(m);
    let mut resid = y.clone();
    let col_sq: Vec<f64> = (0..m).map(|k| x.column(k).norm_squared() / nf).collect();
    for _ in 0..sweeps {
        let mut max_change = 0.0_f64;
        for k in 0..m {
            if col_sq[k] == 0.0 {
                continue;
            }
            let old = theta[k];
            let rho: f64 = (0..n).map(|i| x[(i, k)] * resid[i]).sum::<f64>() / nf + col_sq[k] * old;
            let new = if rho > lambda {
                (rho - lambda) / col_sq[k]
            } else if rho < -lambda {
                (rho + lambda) / col_sq[k]
            } else {
                0.0
            };
            if new != old {
                for i in 0..n {
                    resid[i] -= x[(i, k)] * (new - old);
                }
                theta[k] = new;
                max_change = max_change.max((new - old).abs());
            }
        }
        if max_change < 1e-15 {
            break;
        }
    }
    theta
}

/// Reference solver for the joint problem restricted to symmetric Ω with the
/// diagonal fixed at 1/τⱼ²: plain proximal gradient over the p(p−1)/2 free
/// entries, `iters` iterations. The spectral constraint is not imposed; the
/// caller checks that the result lies strictly inside it.
pub fn reference_solve(
    x: &DMatrix<f64>,
    tau_sq: &[f64],
    lambdas: &[f64],
    iters: usize,
) -> DMatrix<f64> {
    let (n, p) = x.shape();
    let nf = n as f64;
    let mut gram = DMatrix::zeros(p, p);
    for a in 0..p {
        for b in 0..p {
            gram[(a, b)] = (0..n).map(|i| x[(i, a)] * x[(i, b)]).sum::<f64>() / nf;
        }
    }
    // Hessian bound: each free entry feeds two columns
    let top = power_iteration(&gram, 10_000) * 1.01;
    let tau4 = tau_sq.iter().map(|t| t * t).fold(0.0_f64, f64::max);
    let step = 1.0 / (2.0 * tau4 * top);

    let mut omega = DMatrix::zeros(p, p);
    for j in 0..p {
        omega[(j, j)] = 1.0 / tau_sq[j];
    }
    let mut w = DMatrix::zeros(p, p);
    let mut grad = DMatrix::zeros(p, p);
    for _ in 0..iters {
        // regression weights: 1 on the response, τⱼ²Ω_kj elsewhere
        for j in 0..p {
            for k in 0..p {
                w[(k, j)] = if k == j {
                    1.0
                } else {
                    tau_sq[j] * omega[(k, j)]
                };
            }
        }
        for j in 0..p {
            for k in 0..p {
                let mut s = 0.0;
                for l in 0..p {
                    s += gram[(k, l)] * w[(l, j)];
                }
                grad[(k, j)] = tau_sq[j] * s;
            }
        }
        for j in 0..p {
            for k in (j + 1)..p {
                let g = grad[(j, k)] + grad[(k, j)];
                let level = step * (lambdas[j] * tau_sq[j] + lambdas[k] * tau_sq[k]);
                let v = omega[(j, k)] - step * g;
                let next = v.signum() * (v.abs() - level).max(0.0);
                omega[(j, k)] = next;
                omega[(k, j)] = next;
            }
        }
    }
    omega
}
