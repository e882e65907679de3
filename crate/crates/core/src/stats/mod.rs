//! Statistical evidence for the classifier-level inputs: class coverage
//! planning, independence testing and the product rule.

mod ccp;
mod chi2;
mod explain;

use thiserror::Error;

pub use ccp::{
    clopper_pearson_lower, coverage_cdf, expected_draws, expected_draws_exact, expected_draws_extended,
    expected_draws_inclusion_exclusion, expected_draws_quadrature, plan_extension, required_samples,
    runs_for_confidence, simulate_runs, ClassPartition, ExtensionPlan, RunRecord, VerificationRunLog,
    MAX_INCLUSION_EXCLUSION,
};
pub use chi2::{chi2_independence, chi2_sf, gamma_q, ln_gamma, parse_table_csv, table_to_csv, Chi2Result};
pub use explain::{
    explanation_table, format_pairs, parse_pairs, Binning, BitMatrix, ExplanationTable, Feature, MIN_PAIRS,
};

#[derive(Debug, Error, PartialEq)]
pub enum StatsError {
    #[error("invalid partition: {0}")]
    Partition(String),
    #[error("closed form ({closed_form}) and quadrature ({quadrature}) disagree")]
    Disagreement { closed_form: f64, quadrature: f64 },
    #[error("at least one run is required")]
    NoRuns,
    #[error("level {0} is outside (0, 1]")]
    Level(f64),
    #[error("coverage level {tau} is not reached by the log (best {best})")]
    Unattainable { tau: f64, best: f64 },
    #[error("run log line {line}: {message}")]
    LogFormat { line: usize, message: String },
    #[error("contingency table: {0}")]
    Table(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
}

/// `P(X_c = a ∧ X_n = b)` for independent misclassification indicators with
/// `P(X_c) = p_c`, `P(X_n) = p_n`.
pub fn joint_misclassification(p_c: f64, p_n: f64, a: bool, b: bool) -> f64 {
    let fc = if a { p_c } else { 1.0 - p_c };
    let fnn = if b { p_n } else { 1.0 - p_n };
    fc * fnn
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn product_rule() {
        assert!((joint_misclassification(0.04, 0.04, true, true) - 0.0016).abs() < 1e-15);
        assert_eq!(joint_misclassification(0.0, 0.0, false, false), 1.0);
        assert!((joint_misclassification(0.1, 0.2, true, false) - 0.08).abs() < 1e-15);
    }
}
