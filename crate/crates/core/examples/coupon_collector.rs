//! Coverage planning for equivalence classes: expected draws, simulated
//! verification runs, the required sample size and an extension test.

use pra::stats::{self, ClassPartition};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let uniform = ClassPartition::uniform(10)?;
    println!("E[X], 10 uniform classes = {:.6}", stats::expected_draws(&uniform)?);

    let skewed = ClassPartition::new(vec![0.5, 0.3, 0.15, 0.05])?;
    println!("E[X], skewed = {:.6}", stats::expected_draws(&skewed)?);

    let log = stats::simulate_runs(&uniform, 10_000, 7)?;
    println!(
        "mean draws over {} runs = {:.4}",
        log.m(),
        log.mean_draws().unwrap_or(f64::NAN)
    );
    for s in [20, 30, 40, 50] {
        println!("  P(X < {s}) ~ {:.4}", stats::coverage_cdf(&log, s));
    }
    let s_bar = stats::required_samples(&log, 0.95)?;
    println!("S for tau = 0.95: {s_bar}");

    let plan = stats::plan_extension(&uniform, 0.01, 0.95, 5_000, 0.99, 7)?;
    println!("{plan:#?}");
    Ok(())
}
