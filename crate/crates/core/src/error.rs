use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = JprError> = std::result::Result<T, E>;

/// Every failure surfaced by the estimation pipeline.
#[derive(Debug, Error)]
pub enum JprError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// `line` and `column` are 1-based positions in the input file.
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("shape error: {0}")]
    Shape(String),

    #[error("feature {feature} has zero variance")]
    DegenerateFeature { feature: usize },

    #[error("residual variance of feature {feature} is zero or not finite")]
    DegenerateVariance { feature: usize },

    #[error("non-finite values encountered in {0}")]
    NonFinite(&'static str),

    #[error("eigendecomposition did not converge")]
    EigenFailure,

    #[error("matrix is not positive definite")]
    NotPositiveDefinite,

    #[error("lambda grid is empty")]
    EmptyGrid,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("cannot satisfy degree constraints: {0}")]
    InfeasibleDegree(String),

    #[error("feature {feature}: {source}")]
    Feature {
        feature: usize,
        #[source]
        source: Box<JprError>,
    },
}

impl JprError {
    pub(crate) fn at_feature(self, feature: usize) -> Self {
        match self {
            // already annotated by the inner routine
            e @ (JprError::DegenerateFeature { .. } | JprError::DegenerateVariance { .. }) => e,
            e => JprError::Feature {
                feature,
                source: Box::new(e),
            },
        }
    }

    /// Stable category name, shared by the CLI messages and any bindings.
    pub fn category(&self) -> &'static str {
        match self {
            JprError::Io { .. } => "io",
            JprError::Parse { .. } => "parse",
            JprError::Shape(_) => "shape",
            JprError::DegenerateFeature { .. } | JprError::DegenerateVariance { .. } => {
                "degenerate"
            }
            JprError::NonFinite(_) => "non-finite",
            JprError::EigenFailure => "eigen",
            JprError::NotPositiveDefinite => "not-positive-definite",
            JprError::EmptyGrid | JprError::InvalidConfig(_) => "config",
            JprError::InfeasibleDegree(_) => "infeasible-degree",
            JprError::Feature { source, .. } => source.category(),
        }
    }
}
