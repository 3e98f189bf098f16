//! Estimation-error metrics and the seeded benchmark runner.

use std::io::Write;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::SymMatrix;
use crate::error::{JprError, Result};
use crate::estimator::{self, FitOptions};
use crate::lasso::LambdaRule;
use crate::linalg::symmetric_eigenvalues;
use crate::synthetic::{self, Adjacency, GroundTruth, PrecisionModelSpec};

fn check_same_shape(a: &SymMatrix, b: &SymMatrix) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(JprError::Shape(format!(
            "cannot compare {}×{} with {}×{}",
            a.dim(),
            a.dim(),
            b.dim(),
            b.dim()
        )));
    }
    Ok(())
}

/// ‖A − B‖_F.
pub fn frobenius_error(a: &SymMatrix, b: &SymMatrix) -> Result<f64> {
    check_same_shape(a, b)?;
    Ok((a.matrix() - b.matrix()).norm())
}

/// Spectral norm of the symmetric difference: its largest |eigenvalue|.
pub fn operator2_error(a: &SymMatrix, b: &SymMatrix) -> Result<f64> {
    check_same_shape(a, b)?;
    let eig = symmetric_eigenvalues(&(a.matrix() - b.matrix()))?;
    Ok(eig.iter().fold(0.0_f64, |m, v| m.max(v.abs())))
}

/// Edge-recovery precision and recall of the support {|est_jk| > threshold}.
/// Empty predictions give precision 1; an empty truth gives recall 1.
pub fn support_metrics(est: &SymMatrix, truth: &Adjacency, threshold: f64) -> Result<(f64, f64)> {
    let p = est.dim();
    if truth.dim() != p {
        return Err(JprError::Shape(format!(
            "estimate is {p}×{p} but the graph has {} nodes",
            truth.dim()
        )));
    }
    let (mut predicted, mut hits) = (0usize, 0usize);
    for j in 0..p {
        for k in (j + 1)..p {
            if est.get(j, k).abs() > threshold {
                predicted += 1;
                if truth.has_edge(j, k) {
                    hits += 1;
                }
            }
        }
    }
    let actual = truth.edge_count();
    let precision = if predicted == 0 {
        1.0
    } else {
        hits as f64 / predicted as f64
    };
    let recall = if actual == 0 {
        1.0
    } else {
        hits as f64 / actual as f64
    };
    Ok((precision, recall))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BenchEstimator {
    /// Joint partial regression run to the solver tolerance.
    Jpr,
    /// Joint partial regression with a fixed iteration budget and no early stop.
    JprFixedIterations,
    /// First-stage regressions averaged, no projection.
    Naive,
    /// Inverse sample covariance; only defined for n > p.
    SampleInverse,
}

impl BenchEstimator {
    pub const ALL: [BenchEstimator; 4] = [
        BenchEstimator::Jpr,
        BenchEstimator::JprFixedIterations,
        BenchEstimator::Naive,
        BenchEstimator::SampleInverse,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BenchEstimator::Jpr => "jpr",
            BenchEstimator::JprFixedIterations => "jpr-fixed",
            BenchEstimator::Naive => "naive",
            BenchEstimator::SampleInverse => "sample-inverse",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|e| e.name() == name)
    }

    /// Support threshold: sparse estimators carry exact zeros.
    fn support_threshold(self) -> f64 {
        match self {
            BenchEstimator::SampleInverse => 1e-8,
            _ => 0.0,
        }
    }
}

/// One (model, replication, estimator) outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRecord {
    pub model: String,
    pub p: usize,
    pub n: usize,
    pub seed: u64,
    pub estimator: String,
    pub frobenius_err: f64,
    pub operator2_err: f64,
    pub q_frobenius_err: f64,
    pub support_precision: f64,
    pub support_recall: f64,
    pub wall_time_s: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Empty unless the estimator failed on this replication.
    pub error: String,
}

impl BenchRecord {
    pub fn failed(&self) -> bool {
        !self.error.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchConfig {
    pub n: usize,
    pub reps: usize,
    pub estimators: Vec<BenchEstimator>,
    pub rule: LambdaRule,
    pub options: FitOptions,
    /// Iteration budget of [`BenchEstimator::JprFixedIterations`].
    pub fixed_iterations: usize,
    /// Run replications concurrently. Wall times are then subject to contention.
    pub parallel: bool,
}

impl BenchConfig {
    pub fn new(n: usize, reps: usize) -> Self {
        let mut options = FitOptions::default();
        options.solver.tol = 1e-3;
        Self {
            n,
            reps,
            estimators: vec![
                BenchEstimator::Jpr,
                BenchEstimator::Naive,
                BenchEstimator::SampleInverse,
            ],
            rule: LambdaRule::default(),
            options,
            fixed_iterations: 100,
            parallel: false,
        }
    }
}

/// Seed of replication `rep` of a model.
pub fn replication_seed(spec: &PrecisionModelSpec, rep: usize) -> u64 {
    spec.seed.wrapping_add(rep as u64)
}

struct Estimate {
    omega: SymMatrix,
    q: SymMatrix,
    iterations: usize,
    converged: bool,
}

fn run_estimator(
    which: BenchEstimator,
    data: &crate::data::DataMatrix,
    config: &BenchConfig,
) -> Result<Estimate> {
    match which {
        BenchEstimator::Jpr | BenchEstimator::JprFixedIterations => {
            let mut options = config.options.clone();
            if which == BenchEstimator::JprFixedIterations {
                options.solver.tol = 0.0;
                options.solver.max_iter = config.fixed_iterations;
            }
            let est = estimator::fit(data, &config.rule, &options)?;
            Ok(Estimate {
                iterations: est.diagnostics.solve.iterations,
                converged: est.converged(),
                omega: est.omega_hat,
                q: est.q_hat,
            })
        }
        BenchEstimator::Naive => {
            let prepared = estimator::prepare_data(data, &config.options)?;
            let stage1 =
                crate::lasso::fit_all_features(&prepared, &config.rule, &config.options.lasso)?;
            let omega = estimator::naive_from_stage1(&stage1)?;
            let tau: Vec<f64> = stage1.iter().map(|f| f.tau_sq.sqrt()).collect();
            Ok(Estimate {
                q: unit_diagonal_q(&omega, &tau),
                omega,
                iterations: stage1.iter().map(|f| f.iterations).max().unwrap_or(0),
                converged: stage1.iter().all(|f| f.converged),
            })
        }
        BenchEstimator::SampleInverse => {
            let omega = estimator::sample_inverse(data, &config.options)?;
            let tau: Vec<f64> = (0..omega.dim())
                .map(|j| 1.0 / omega.get(j, j).sqrt())
                .collect();
            Ok(Estimate {
                q: unit_diagonal_q(&omega, &tau),
                omega,
                iterations: 0,
                converged: true,
            })
        }
    }
}

fn unit_diagonal_q(omega: &SymMatrix, tau: &[f64]) -> SymMatrix {
    let mut q = estimator::partial_correlation_from(omega, tau).into_inner();
    q.fill_diagonal(-1.0);
    SymMatrix::symmetric_part(&q)
}

fn record(
    spec: &PrecisionModelSpec,
    seed: u64,
    which: BenchEstimator,
    truth: &GroundTruth,
    data: &crate::data::DataMatrix,
    config: &BenchConfig,
) -> BenchRecord {
    let mut rec = BenchRecord {
        model: spec.kind.name().to_string(),
        p: spec.p,
        n: config.n,
        seed,
        estimator: which.name().to_string(),
        frobenius_err: f64::NAN,
        operator2_err: f64::NAN,
        q_frobenius_err: f64::NAN,
        support_precision: f64::NAN,
        support_recall: f64::NAN,
        wall_time_s: f64::NAN,
        iterations: 0,
        converged: false,
        error: String::new(),
    };
    let start = Instant::now();
    let outcome = run_estimator(which, data, config);
    let elapsed = start.elapsed().as_secs_f64();
    let scored = outcome.and_then(|est| {
        let (precision, recall) =
            support_metrics(&est.omega, &truth.adjacency, which.support_threshold())?;
        Ok((
            frobenius_error(&est.omega, &truth.omega_star)?,
            operator2_error(&est.omega, &truth.omega_star)?,
            frobenius_error(&est.q, &truth.q_star)?,
            precision,
            recall,
            est.iterations,
            est.converged,
        ))
    });
    match scored {
        Ok((f, o, q, precision, recall, iterations, converged)) => {
            rec.frobenius_err = f;
            rec.operator2_err = o;
            rec.q_frobenius_err = q;
            rec.support_precision = precision;
            rec.support_recall = recall;
            rec.wall_time_s = elapsed;
            rec.iterations = iterations;
            rec.converged = converged;
        }
        Err(e) => rec.error = e.to_string(),
    }
    rec
}

fn run_replication(
    spec: &PrecisionModelSpec,
    rep: usize,
    config: &BenchConfig,
) -> Vec<BenchRecord> {
    let seed = replication_seed(spec, rep);
    let rep_spec = PrecisionModelSpec {
        seed,
        ..spec.clone()
    };
    let prepared = synthetic::generate(&rep_spec).and_then(|truth| {
        let data = synthetic::sample_gaussian(&truth.sigma_star, config.n, seed)?;
        Ok((truth, data))
    });
    match prepared {
        Ok((truth, data)) => config
            .estimators
            .iter()
            .map(|&which| record(spec, seed, which, &truth, &data, config))
            .collect(),
        Err(e) => config
            .estimators
            .iter()
            .map(|&which| BenchRecord {
                model: spec.kind.name().to_string(),
                p: spec.p,
                n: config.n,
                seed,
                estimator: which.name().to_string(),
                frobenius_err: f64::NAN,
                operator2_err: f64::NAN,
                q_frobenius_err: f64::NAN,
                support_precision: f64::NAN,
                support_recall: f64::NAN,
                wall_time_s: f64::NAN,
                iterations: 0,
                converged: false,
                error: e.to_string(),
            })
            .collect(),
    }
}

/// For every model and replication: draw the truth, sample n observations and
/// score each estimator. Per-estimator failures are kept in the records.
pub fn run_benchmark(
    models: &[PrecisionModelSpec],
    config: &BenchConfig,
) -> Result<Vec<BenchRecord>> {
    if config.reps == 0 {
        return Err(JprError::InvalidConfig(
            "need at least one replication".into(),
        ));
    }
    if config.estimators.is_empty() {
        return Err(JprError::InvalidConfig("no estimators selected".into()));
    }
    for spec in models {
        spec.validate()?;
    }
    config.rule.validate()?;
    config.options.solver.validate()?;

    let jobs: Vec<(usize, usize)> = (0..models.len())
        .flat_map(|m| (0..config.reps).map(move |r| (m, r)))
        .collect();
    let run = |&(m, r): &(usize, usize)| run_replication(&models[m], r, config);
    let nested: Vec<Vec<BenchRecord>> = if config.parallel {
        jobs.par_iter().map(run).collect()
    } else {
        jobs.iter().map(run).collect()
    };
    Ok(nested.into_iter().flatten().collect())
}

/// CSV with a header row of the [`BenchRecord`] field names.
pub fn write_records_csv(records: &[BenchRecord], out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| JprError::Io {
        path: "<benchmark output>".into(),
        source: std::io::Error::other(e),
    };
    if records.is_empty() {
        w.write_record(BENCH_FIELDS).map_err(io)?;
    }
    for r in records {
        w.serialize(r).map_err(io)?;
    }
    w.flush().map_err(|source| JprError::Io {
        path: "<benchmark output>".into(),
        source,
    })
}

/// One JSON object per line.
pub fn write_records_jsonl(records: &[BenchRecord], mut out: impl Write) -> Result<()> {
    let io = |source| JprError::Io {
        path: "<benchmark output>".into(),
        source,
    };
    for r in records {
        let line = serde_json::to_string(r).map_err(|e| io(std::io::Error::other(e)))?;
        writeln!(out, "{line}").map_err(io)?;
    }
    out.flush().map_err(io)
}

pub const BENCH_FIELDS: [&str; 14] = [
    "model",
    "p",
    "n",
    "seed",
    "estimator",
    "frobenius_err",
    "operator2_err",
    "q_frobenius_err",
    "support_precision",
    "support_recall",
    "wall_time_s",
    "iterations",
    "converged",
    "error",
];
