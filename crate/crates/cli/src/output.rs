//! Writers for estimate, diagnostics and edge-list files.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use jpr::data::format_real;
use jpr::{DMatrix, Edge, JprError, JprEstimate, LambdaRule, SolveDiagnostics};
use serde::Serialize;

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> JprError + '_ {
    move |source| JprError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

#[derive(Serialize)]
struct EstimateJson<'a> {
    feature_names: Vec<String>,
    omega: Vec<Vec<f64>>,
    partial_correlation: Vec<Vec<f64>>,
    tau: &'a [f64],
    lambdas: &'a [f64],
}

#[derive(Serialize)]
struct DiagnosticsJson<'a> {
    n: usize,
    p: usize,
    lambda_rule: &'a LambdaRule,
    tau: &'a [f64],
    tau_sq: Vec<f64>,
    lambdas: &'a [f64],
    /// iterations, residual, converged, step sizes
    #[serde(flatten)]
    solve: &'a SolveDiagnostics,
    diagonal_deviation: f64,
}

pub fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<(), JprError> {
    let file = File::create(path).map_err(io_err(path))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| JprError::Io {
        path: path.to_path_buf(),
        source: e.into(),
    })?;
    writeln!(w).map_err(io_err(path))?;
    w.flush().map_err(io_err(path))
}

pub fn write_estimate_json(
    est: &JprEstimate,
    names: &[String],
    path: &Path,
) -> Result<(), JprError> {
    let doc = EstimateJson {
        feature_names: names.to_vec(),
        omega: rows(est.omega_hat.matrix()),
        partial_correlation: rows(est.q_hat.matrix()),
        tau: &est.tau,
        lambdas: &est.lambdas,
    };
    write_json(&doc, path)
}

pub fn write_diagnostics(
    est: &JprEstimate,
    n: usize,
    rule: &LambdaRule,
    path: &Path,
) -> Result<(), JprError> {
    // history is only recorded on request and stays out of the sidecar
    let mut solve = est.diagnostics.solve.clone();
    solve.history.clear();
    let doc = DiagnosticsJson {
        n,
        p: est.tau.len(),
        lambda_rule: rule,
        tau: &est.tau,
        tau_sq: est.tau_sq(),
        lambdas: &est.lambdas,
        solve: &solve,
        diagonal_deviation: est.diagnostics.diagonal_deviation,
    };
    write_json(&doc, path)
}

/// Node labels: the given names, or 1-based indices.
pub fn labels(names: Option<&[String]>, p: usize) -> Vec<String> {
    match names {
        Some(n) => n.to_vec(),
        None => (1..=p).map(|i| i.to_string()).collect(),
    }
}

pub fn write_edges(edges: &[Edge], labels: &[String], out: impl Write) -> std::io::Result<()> {
    let mut w = BufWriter::new(out);
    writeln!(w, "name_j\tname_k\tweight")?;
    for e in edges {
        writeln!(
            w,
            "{}\t{}\t{}",
            labels[e.j],
            labels[e.k],
            format_real(e.weight)
        )?;
    }
    w.flush()
}

pub fn write_edges_file(edges: &[Edge], labels: &[String], path: &Path) -> Result<(), JprError> {
    let file = File::create(path).map_err(io_err(path))?;
    write_edges(edges, labels, file).map_err(io_err(path))
}
