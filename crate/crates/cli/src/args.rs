//! Command-line flags and their translation into core configuration.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use jpr::{
    BenchEstimator, FitOptions, InfoCriterion, JprError, LambdaGrid, LambdaRule, Loss, ModelKind,
    SolverConfig,
};

const AFTER_HELP: &str = "\
Exit codes:
  0  success
  1  input or configuration error (message on stderr prefixed \"error:\")
  2  solver did not converge within --max-iter; outputs are still written

Environment:
  JPR_THREADS  maximum number of worker threads";

#[derive(Debug, Parser)]
#[command(
    name = "jpr",
    version,
    about = "Sparse precision and partial-correlation estimation by joint partial regression"
)]
#[command(after_help = AFTER_HELP, args_override_self = true)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Estimate Ω̂ and the partial-correlation matrix Q̂ from a data CSV.
    #[command(after_help = AFTER_HELP, allow_negative_numbers = true)]
    Estimate(EstimateArgs),
    /// Run estimators on synthetic Gaussian graphical models.
    #[command(after_help = AFTER_HELP, allow_negative_numbers = true)]
    Bench(BenchArgs),
    /// Export the partial-correlation network as an edge list.
    #[command(after_help = AFTER_HELP, allow_negative_numbers = true)]
    Network(NetworkArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RuleKind {
    Fixed,
    Theory,
    Cv,
    Ic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Criterion {
    Aic,
    Bic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LossKind {
    Quadratic,
    Huber,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    MatrixCsv,
    Json,
    EdgeTsv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BenchFormat {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Model {
    Er,
    Ar1,
    Hub,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Source {
    /// A p × p partial-correlation matrix CSV (no header).
    Matrix,
    /// Raw n × p data; the network is estimated first.
    Data,
}

/// λ selection and solver flags shared by all subcommands that fit.
#[derive(Debug, Clone, Args)]
pub struct FitArgs {
    /// How λⱼ is chosen. Defaults to `fixed` when --lambda is given, `theory` otherwise.
    #[arg(long, value_enum)]
    pub lambda_rule: Option<RuleKind>,
    /// λ for the fixed rule.
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Constant c of the theory rule λ = c·sqrt(log p / n).
    #[arg(long, default_value_t = 1.0)]
    pub theory_c: f64,
    #[arg(long, default_value_t = 5)]
    pub cv_folds: usize,
    /// Information criterion of the ic rule.
    #[arg(long, value_enum, default_value_t = Criterion::Bic)]
    pub criterion: Criterion,
    /// Number of log-spaced grid points for cv and ic.
    #[arg(long, default_value_t = 16)]
    pub grid_points: usize,
    #[arg(long, value_enum, default_value_t = LossKind::Quadratic)]
    pub loss: LossKind,
    /// Huber threshold ρ (requires --loss huber).
    #[arg(long)]
    pub huber_rho: Option<f64>,
    /// Lower eigenvalue bound α.
    #[arg(long, default_value_t = 0.0)]
    pub alpha: f64,
    /// Upper eigenvalue bound β; `inf` for none.
    #[arg(long, default_value_t = f64::INFINITY)]
    pub beta: f64,
    /// PD3O stopping tolerance on max(‖ΔΩ‖_F, ‖ΔU‖_F).
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
    #[arg(long, default_value_t = 10_000)]
    pub max_iter: usize,
    /// Seed for CV folds and synthetic data.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Use the data as given instead of centring each column.
    #[arg(long)]
    pub no_center: bool,
}

impl FitArgs {
    pub fn rule(&self) -> Result<LambdaRule, JprError> {
        let kind = self.lambda_rule.unwrap_or(if self.lambda.is_some() {
            RuleKind::Fixed
        } else {
            RuleKind::Theory
        });
        if kind != RuleKind::Fixed && self.lambda.is_some() {
            return Err(JprError::InvalidConfig(
                "--lambda requires --lambda-rule fixed".into(),
            ));
        }
        let grid = LambdaGrid::Relative {
            points: self.grid_points,
            min_ratio: 0.01,
        };
        let rule = match kind {
            RuleKind::Fixed => LambdaRule::Fixed(self.lambda.ok_or_else(|| {
                JprError::InvalidConfig("--lambda-rule fixed needs --lambda".into())
            })?),
            RuleKind::Theory => LambdaRule::Theory { c: self.theory_c },
            RuleKind::Cv => LambdaRule::CrossValidation {
                grid,
                folds: self.cv_folds,
                seed: self.seed,
            },
            RuleKind::Ic => LambdaRule::InformationCriterion {
                grid,
                criterion: match self.criterion {
                    Criterion::Aic => InfoCriterion::Aic,
                    Criterion::Bic => InfoCriterion::Bic,
                },
            },
        };
        rule.validate()?;
        Ok(rule)
    }

    pub fn options(&self) -> Result<FitOptions, JprError> {
        let loss = match (self.loss, self.huber_rho) {
            (LossKind::Quadratic, Some(_)) => {
                return Err(JprError::InvalidConfig(
                    "--huber-rho requires --loss huber".into(),
                ))
            }
            (LossKind::Quadratic, None) => Loss::Quadratic,
            (LossKind::Huber, rho) => Loss::Huber {
                rho: rho.unwrap_or(Loss::DEFAULT_HUBER_RHO),
            },
        };
        let solver = SolverConfig {
            loss,
            alpha: self.alpha,
            beta: self.beta,
            tol: self.tol,
            max_iter: self.max_iter,
            ..SolverConfig::default()
        };
        solver.validate()?;
        Ok(FitOptions {
            solver,
            center: !self.no_center,
            ..FitOptions::default()
        })
    }
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    /// Data CSV, one row per observation.
    #[arg(long)]
    pub input: PathBuf,
    /// Output directory (created if missing).
    #[arg(long)]
    pub output: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::MatrixCsv)]
    pub format: Format,
    /// Edge magnitude threshold for edge-tsv output.
    #[arg(long, default_value_t = 0.0)]
    pub threshold: f64,
    /// The input has no header row.
    #[arg(long)]
    pub no_header: bool,
    #[command(flatten)]
    pub fit: FitArgs,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long, value_enum)]
    pub model: Model,
    #[arg(long)]
    pub p: usize,
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 1)]
    pub reps: usize,
    /// ER edge probability (requires --model er).
    #[arg(long)]
    pub edge_prob: Option<f64>,
    /// Comma-separated estimators: jpr, jpr-fixed, naive, sample-inverse.
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "jpr,naive,sample-inverse"
    )]
    pub estimators: Vec<String>,
    /// Iteration budget of jpr-fixed.
    #[arg(long, default_value_t = 100)]
    pub fixed_iterations: usize,
    /// Output file; standard output when omitted.
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = BenchFormat::Csv)]
    pub format: BenchFormat,
    #[command(flatten)]
    pub fit: FitArgs,
}

impl BenchArgs {
    pub fn model_kind(&self) -> Result<ModelKind, JprError> {
        match (self.model, self.edge_prob) {
            (Model::Er, prob) => Ok(ModelKind::ErdosRenyi {
                edge_prob: prob.unwrap_or(0.05),
            }),
            (_, Some(_)) => Err(JprError::InvalidConfig(
                "--edge-prob requires --model er".into(),
            )),
            (Model::Ar1, None) => Ok(ModelKind::Ar1),
            (Model::Hub, None) => Ok(ModelKind::hub()),
        }
    }

    pub fn estimator_list(&self) -> Result<Vec<BenchEstimator>, JprError> {
        self.estimators
            .iter()
            .map(|name| {
                BenchEstimator::from_name(name.trim())
                    .ok_or_else(|| JprError::InvalidConfig(format!("unknown estimator '{name}'")))
            })
            .collect()
    }
}

#[derive(Debug, Args)]
pub struct NetworkArgs {
    /// Q̂ matrix CSV or data CSV, see --from.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_enum, default_value_t = Source::Matrix)]
    pub from: Source,
    /// Edge TSV path; standard output when omitted.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Keep edges with |Q̂_jk| strictly above this value.
    #[arg(long, default_value_t = 0.0)]
    pub threshold: f64,
    /// Comma-separated node names for matrix input.
    #[arg(long, value_delimiter = ',')]
    pub names: Option<Vec<String>>,
    /// Data input has no header row.
    #[arg(long)]
    pub no_header: bool,
    /// Only edge-tsv is supported here.
    #[arg(long, value_enum, default_value_t = Format::EdgeTsv)]
    pub format: Format,
    #[command(flatten)]
    pub fit: FitArgs,
}
