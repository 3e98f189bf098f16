//! Fixtures shared by the criterion benchmarks.

use jpr::synthetic::generate;
use jpr::{
    fit_all_features, sample_gaussian, DataMatrix, JprProblem, LambdaRule, LassoConfig, ModelKind,
    PrecisionModelSpec,
};

/// Centred ER data with `p` features and `n` samples.
pub fn er_data(p: usize, n: usize, seed: u64) -> DataMatrix {
    let spec = PrecisionModelSpec::new(ModelKind::erdos_renyi(), p, seed);
    let truth = generate(&spec).expect("valid model");
    sample_gaussian(&truth.sigma_star, n, seed)
        .expect("positive definite covariance")
        .center_columns()
}

/// Stage-one output turned into a joint problem, theory-rule λ.
pub fn problem(x: &DataMatrix) -> JprProblem {
    let stage1 =
        fit_all_features(x, &LambdaRule::default(), &LassoConfig::default()).expect("stage one");
    let tau_sq = stage1.iter().map(|f| f.tau_sq).collect();
    let lambdas = stage1.iter().map(|f| f.lambda).collect();
    JprProblem::new(x, tau_sq, lambdas).expect("valid problem")
}
