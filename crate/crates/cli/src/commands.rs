use std::fs::{self, File};
use std::io::{self, Write};
use std::path::Path;

use jpr::{
    edges, fit, load_csv, read_matrix_csv, run_benchmark, BenchConfig, JprError, JprEstimate,
    PrecisionModelSpec,
};

use crate::args::{BenchArgs, BenchFormat, EstimateArgs, FitArgs, Format, NetworkArgs, Source};
use crate::output;

/// What a successful command reports back to `main`.
pub enum Outcome {
    Done,
    NotConverged { iterations: usize, residual: f64 },
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> JprError + '_ {
    move |source| JprError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn check_threshold(t: f64) -> Result<(), JprError> {
    if t.is_finite() && t >= 0.0 {
        Ok(())
    } else {
        Err(JprError::InvalidConfig(format!(
            "--threshold must be finite and nonnegative, got {t}"
        )))
    }
}

fn outcome(est: &JprEstimate) -> Outcome {
    let d = &est.diagnostics.solve;
    if d.converged {
        Outcome::Done
    } else {
        Outcome::NotConverged {
            iterations: d.iterations,
            residual: d.residual,
        }
    }
}

fn fit_from_csv(
    path: &Path,
    has_header: bool,
    args: &FitArgs,
) -> Result<(JprEstimate, usize), JprError> {
    // validate flags before touching the file
    let rule = args.rule()?;
    let options = args.options()?;
    let x = load_csv(path, has_header)?;
    let est = fit(&x, &rule, &options)?;
    Ok((est, x.nrows()))
}

pub fn estimate(args: &EstimateArgs) -> Result<Outcome, JprError> {
    check_threshold(args.threshold)?;
    let rule = args.fit.rule()?;
    let (est, n) = fit_from_csv(&args.input, !args.no_header, &args.fit)?;

    let dir = &args.output;
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let names = output::labels(est.feature_names.as_deref(), est.tau.len());
    match args.format {
        Format::MatrixCsv => {
            est.omega_hat.write_csv(dir.join("omega.csv"))?;
            est.q_hat.write_csv(dir.join("partial_correlation.csv"))?;
        }
        Format::Json => output::write_estimate_json(&est, &names, &dir.join("estimate.json"))?,
        Format::EdgeTsv => {
            let omega_edges = edges(&est.omega_hat, args.threshold);
            output::write_edges_file(&omega_edges, &names, &dir.join("omega_edges.tsv"))?;
            let q_edges = est.edges(args.threshold);
            output::write_edges_file(&q_edges, &names, &dir.join("partial_correlation_edges.tsv"))?;
        }
    }
    output::write_diagnostics(&est, n, &rule, &dir.join("diagnostics.json"))?;
    Ok(outcome(&est))
}

pub fn bench(args: &BenchArgs) -> Result<Outcome, JprError> {
    let spec = PrecisionModelSpec::new(args.model_kind()?, args.p, args.fit.seed);
    spec.validate()?;
    if args.reps == 0 {
        return Err(JprError::InvalidConfig("--reps must be at least 1".into()));
    }
    let mut config = BenchConfig::new(args.n, args.reps);
    config.estimators = args.estimator_list()?;
    config.rule = args.fit.rule()?;
    config.options = args.fit.options()?;
    config.fixed_iterations = args.fixed_iterations;

    let records = run_benchmark(&[spec], &config)?;
    let write = |out: &mut dyn Write| match args.format {
        BenchFormat::Csv => jpr::metrics::write_records_csv(&records, out),
        BenchFormat::Json => jpr::metrics::write_records_jsonl(&records, out),
    };
    match &args.output {
        Some(path) => {
            let mut file = File::create(path).map_err(io_err(path))?;
            write(&mut file)?;
        }
        None => write(&mut io::stdout().lock())?,
    }
    for r in records.iter().filter(|r| r.failed()) {
        eprintln!(
            "warning: {} failed on seed {}: {}",
            r.estimator, r.seed, r.error
        );
    }
    Ok(Outcome::Done)
}

pub fn network(args: &NetworkArgs) -> Result<Outcome, JprError> {
    check_threshold(args.threshold)?;
    if args.format != Format::EdgeTsv {
        return Err(JprError::InvalidConfig(
            "network only writes --format edge-tsv".into(),
        ));
    }
    let (q, names, result) = match args.from {
        Source::Matrix => {
            let q = read_matrix_csv(&args.input)?;
            (q, args.names.clone(), Outcome::Done)
        }
        Source::Data => {
            if args.names.is_some() {
                return Err(JprError::InvalidConfig(
                    "--names applies to --from matrix; data files carry their own header".into(),
                ));
            }
            let (est, _) = fit_from_csv(&args.input, !args.no_header, &args.fit)?;
            let result = outcome(&est);
            (est.q_hat.clone(), est.feature_names.clone(), result)
        }
    };
    if let Some(n) = &names {
        if n.len() != q.dim() {
            return Err(JprError::Shape(format!(
                "{} names given for a {}×{} matrix",
                n.len(),
                q.dim(),
                q.dim()
            )));
        }
    }
    let labels = output::labels(names.as_deref(), q.dim());
    let list = edges(&q, args.threshold);
    match &args.output {
        Some(path) => output::write_edges_file(&list, &labels, path)?,
        None => output::write_edges(&list, &labels, io::stdout().lock())
            .map_err(io_err(Path::new("<stdout>")))?,
    }
    Ok(result)
}
