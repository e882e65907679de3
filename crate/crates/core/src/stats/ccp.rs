//! Coupon-collector planning: how many samples cover every equivalence class.

use std::fmt::Write;

use num_rational::BigRational;
use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use statrs::distribution::{Beta, ContinuousCDF};

use super::StatsError;

/// Slack allowed on `Σ p_i ≤ 1`.
pub const EPS: f64 = 1e-9;
/// Largest class count for the inclusion-exclusion path.
pub const MAX_INCLUSION_EXCLUSION: usize = 20;
const AGREEMENT: f64 = 1e-6;
const QUAD_TOL: f64 = 1e-9;

/// Per-draw probabilities of falling into each class.
#[derive(Clone, Debug, PartialEq)]
pub struct ClassPartition {
    probs: Vec<f64>,
}

impl ClassPartition {
    pub fn new(probs: Vec<f64>) -> Result<Self, StatsError> {
        if probs.is_empty() {
            return Err(StatsError::Partition("at least one class is required".into()));
        }
        if let Some(p) = probs.iter().find(|p| !(**p > 0.0 && **p <= 1.0)) {
            return Err(StatsError::Partition(format!(
                "class probability {p} is outside (0, 1]"
            )));
        }
        let total: f64 = probs.iter().sum();
        if total > 1.0 + EPS {
            return Err(StatsError::Partition(format!("class probabilities sum to {total} > 1")));
        }
        Ok(ClassPartition { probs })
    }

    pub fn uniform(classes: usize) -> Result<Self, StatsError> {
        Self::new(vec![1.0 / classes as f64; classes])
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn classes(&self) -> usize {
        self.probs.len()
    }

    pub fn total(&self) -> f64 {
        self.probs.iter().sum()
    }

    /// Adds an unseen class of probability `p_u`, rescaling the others by `1 - p_u`.
    pub fn extended(&self, p_u: f64) -> Result<Self, StatsError> {
        if !(p_u > 0.0 && p_u < 1.0) {
            return Err(StatsError::Partition(format!("p_u = {p_u} is outside (0, 1)")));
        }
        if (self.total() - 1.0).abs() > EPS {
            return Err(StatsError::Partition(
                "extension needs class probabilities summing to 1".into(),
            ));
        }
        let mut probs: Vec<f64> = self.probs.iter().map(|p| (1.0 - p_u) * p).collect();
        probs.push(p_u);
        Self::new(probs)
    }
}

/// `Σ_{∅≠J} (-1)^{|J|+1} / Σ_{i∈J} p_i`, with compensated summation.
pub fn expected_draws_inclusion_exclusion(p: &ClassPartition) -> Option<f64> {
    let l = p.classes();
    if l > MAX_INCLUSION_EXCLUSION {
        return None;
    }
    let mut sums = vec![0.0f64; 1 << l];
    let (mut acc, mut comp) = (0.0f64, 0.0f64);
    for mask in 1usize..(1 << l) {
        let low = mask.trailing_zeros() as usize;
        sums[mask] = sums[mask & (mask - 1)] + p.probs[low];
        let term = if mask.count_ones() % 2 == 1 { 1.0 } else { -1.0 } / sums[mask];
        // Neumaier summation
        let t = acc + term;
        if acc.abs() >= term.abs() {
            comp += (acc - t) + term;
        } else {
            comp += (term - t) + acc;
        }
        acc = t;
    }
    Some(acc + comp)
}

/// The same sum in exact arithmetic.
pub fn expected_draws_exact(p: &[BigRational]) -> BigRational {
    let l = p.len();
    let mut sums = vec![BigRational::zero(); 1 << l];
    let mut acc = BigRational::zero();
    for mask in 1usize..(1 << l) {
        let low = mask.trailing_zeros() as usize;
        sums[mask] = &sums[mask & (mask - 1)] + &p[low];
        let term = sums[mask].recip();
        if mask.count_ones() % 2 == 1 {
            acc += term;
        } else {
            acc -= term;
        }
    }
    acc
}

/// `E[X] = ∫_0^∞ 1 - Π(1 - e^{-p_i x}) dx` by adaptive Simpson after the
/// substitution `t = e^{-p_min x}`, which maps to `[0, 1]` with a bounded integrand.
pub fn expected_draws_quadrature(p: &ClassPartition) -> f64 {
    let p_min = p.probs.iter().cloned().fold(f64::INFINITY, f64::min);
    let ratios: Vec<f64> = p.probs.iter().map(|q| q / p_min).collect();
    let f = |t: f64| -> f64 {
        if t <= 0.0 {
            // Limit: number of classes with ratio exactly 1.
            return ratios.iter().filter(|r| (**r - 1.0).abs() < 1e-15).count() as f64;
        }
        let ln_t = t.ln();
        let log_prod: f64 = ratios.iter().map(|r| (-(r * ln_t).exp()).ln_1p()).sum();
        -log_prod.exp_m1() / t
    };
    // Terms t^r with large r only matter within about 1/r of t = 1, so the
    // panels shrink geometrically towards 1.
    let mut total = 0.0;
    let mut a = 0.0;
    for k in 1..=53 {
        let b = if k == 53 { 1.0 } else { 1.0 - 0.5f64.powi(k) };
        total += adaptive_simpson(&f, a, b, QUAD_TOL * (b - a));
        a = b;
    }
    total / p_min
}

fn adaptive_simpson(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_step(f, a, b, fa, fm, fb, whole, tol, 60)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step(
    f: &impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson_step(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
        + simpson_step(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
}

/// Expected number of draws until every class has been hit. Both evaluation
/// paths run when the class count allows and must agree.
pub fn expected_draws(p: &ClassPartition) -> Result<f64, StatsError> {
    let quad = expected_draws_quadrature(p);
    if let Some(ie) = expected_draws_inclusion_exclusion(p) {
        let rel = (ie - quad).abs() / ie.abs().max(f64::MIN_POSITIVE);
        if rel > AGREEMENT {
            return Err(StatsError::Disagreement {
                closed_form: ie,
                quadrature: quad,
            });
        }
        return Ok(ie);
    }
    Ok(quad)
}

/// Expected draws after adding an unseen class of probability `p_u`.
pub fn expected_draws_extended(p: &ClassPartition, p_u: f64) -> Result<f64, StatsError> {
    expected_draws(&p.extended(p_u)?)
}

/// One simulated verification run.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RunRecord {
    /// Draws made; for a failed run this includes the draw that missed.
    pub draw_count: u64,
    /// Draw index (1-based) at which each class was first hit.
    pub first_hits: Vec<Option<u64>>,
    /// The run drew outside every known class and was aborted.
    pub failed: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct VerificationRunLog {
    pub classes: usize,
    pub runs: Vec<RunRecord>,
}

const CHUNK: u64 = 4096;

/// Simulates `m` runs that draw classes until all are covered.
pub fn simulate_runs(p: &ClassPartition, m: u64, seed: u64) -> Result<VerificationRunLog, StatsError> {
    if m == 0 {
        return Err(StatsError::NoRuns);
    }
    let mut cumulative = Vec::with_capacity(p.classes());
    let mut acc = 0.0;
    for q in &p.probs {
        acc += q;
        cumulative.push(acc);
    }
    let l = p.classes();
    let chunks = m.div_ceil(CHUNK);
    let runs: Vec<RunRecord> = (0..chunks)
        .into_par_iter()
        .flat_map_iter(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c);
            let n = CHUNK.min(m - c * CHUNK);
            let cumulative = &cumulative;
            (0..n)
                .map(move |_| one_run(cumulative, l, &mut rng))
                .collect::<Vec<_>>()
        })
        .collect();
    Ok(VerificationRunLog { classes: l, runs })
}

fn one_run(cumulative: &[f64], l: usize, rng: &mut ChaCha8Rng) -> RunRecord {
    let mut first_hits = vec![None; l];
    let mut missing = l;
    let mut draws = 0u64;
    let total = *cumulative.last().expect("nonempty partition");
    loop {
        draws += 1;
        let u: f64 = rng.gen();
        if u >= total {
            return RunRecord {
                draw_count: draws,
                first_hits,
                failed: true,
            };
        }
        let i = cumulative.partition_point(|&c| c <= u).min(l - 1);
        if first_hits[i].is_none() {
            first_hits[i] = Some(draws);
            missing -= 1;
            if missing == 0 {
                return RunRecord {
                    draw_count: draws,
                    first_hits,
                    failed: false,
                };
            }
        }
    }
}

impl VerificationRunLog {
    pub fn m(&self) -> usize {
        self.runs.len()
    }

    pub fn completed(&self) -> impl Iterator<Item = &RunRecord> {
        self.runs.iter().filter(|r| !r.failed)
    }

    pub fn failed_runs(&self) -> usize {
        self.runs.iter().filter(|r| r.failed).count()
    }

    pub fn max_draws(&self) -> Option<u64> {
        self.completed().map(|r| r.draw_count).max()
    }

    /// `occ(i)`: completed runs that covered every class after exactly `i` draws.
    pub fn occ(&self, i: u64) -> usize {
        self.completed().filter(|r| r.draw_count == i).count()
    }

    pub fn mean_draws(&self) -> Option<f64> {
        let (n, sum) = self
            .completed()
            .fold((0u64, 0u64), |(n, s), r| (n + 1, s + r.draw_count));
        (n > 0).then(|| sum as f64 / n as f64)
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("ccp-log v1, classes={}, runs={}\n", self.classes, self.m());
        for (id, r) in self.runs.iter().enumerate() {
            let hits: Vec<String> = r
                .first_hits
                .iter()
                .map(|h| h.map_or("-".to_string(), |x| x.to_string()))
                .collect();
            let count = if r.failed {
                format!("failed:{}", r.draw_count)
            } else {
                r.draw_count.to_string()
            };
            let _ = writeln!(out, "{id} {count} {}", hits.join(","));
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self, StatsError> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let bad = |line: usize, msg: &str| StatsError::LogFormat {
            line: line + 1,
            message: msg.to_string(),
        };
        let (_, header) = lines.next().ok_or_else(|| bad(0, "empty log"))?;
        let fields: Vec<&str> = header.split(',').map(str::trim).collect();
        let (classes, runs) = match fields.as_slice() {
            ["ccp-log v1", c, r] => {
                let c = c.strip_prefix("classes=").and_then(|x| x.parse::<usize>().ok());
                let r = r.strip_prefix("runs=").and_then(|x| x.parse::<usize>().ok());
                match (c, r) {
                    (Some(c), Some(r)) if c > 0 => (c, r),
                    _ => return Err(bad(0, "malformed header")),
                }
            }
            _ => return Err(bad(0, "expected `ccp-log v1, classes=L, runs=M` header")),
        };
        let mut records = Vec::with_capacity(runs);
        for (ln, line) in lines {
            let parts: Vec<&str> = line.split_whitespace().collect();
            let [_, count, hits] = parts.as_slice() else {
                return Err(bad(ln, "expected `run_id draw_count hits`"));
            };
            let (failed, count) = match count.strip_prefix("failed:") {
                Some(c) => (true, c),
                None => (false, *count),
            };
            let draw_count: u64 = count.parse().map_err(|_| bad(ln, "bad draw count"))?;
            let first_hits = hits
                .split(',')
                .map(|h| if h == "-" { Ok(None) } else { h.parse().map(Some) })
                .collect::<Result<Vec<Option<u64>>, _>>()
                .map_err(|_| bad(ln, "bad hit index"))?;
            if first_hits.len() != classes {
                return Err(bad(ln, "hit list length differs from class count"));
            }
            if !failed && draw_count < classes as u64 {
                return Err(bad(ln, "complete run with fewer draws than classes"));
            }
            records.push(RunRecord {
                draw_count,
                first_hits,
                failed,
            });
        }
        if records.len() != runs {
            return Err(bad(0, "run count differs from header"));
        }
        Ok(VerificationRunLog { classes, runs: records })
    }
}

/// Estimate of `P(X < S)`: `(1/m) Σ_{i=1}^{S} occ(i)`, with failed runs
/// counted in `m`.
pub fn coverage_cdf(log: &VerificationRunLog, s: u64) -> f64 {
    if log.m() == 0 {
        return 0.0;
    }
    let covered = log.completed().filter(|r| r.draw_count <= s).count();
    covered as f64 / log.m() as f64
}

/// Smallest `S` with `coverage_cdf(log, S) ≥ tau`.
pub fn required_samples(log: &VerificationRunLog, tau: f64) -> Result<u64, StatsError> {
    if log.m() == 0 {
        return Err(StatsError::NoRuns);
    }
    if !(tau > 0.0 && tau <= 1.0) {
        return Err(StatsError::Level(tau));
    }
    let mut counts: Vec<u64> = log.completed().map(|r| r.draw_count).collect();
    counts.sort_unstable();
    let m = log.m() as f64;
    for c in &counts {
        let covered = counts.partition_point(|x| x <= c);
        if covered as f64 / m >= tau {
            return Ok(*c);
        }
    }
    Err(StatsError::Unattainable {
        tau,
        best: counts.len() as f64 / m,
    })
}

/// One-sided lower Clopper-Pearson bound for a binomial proportion.
pub fn clopper_pearson_lower(successes: u64, trials: u64, confidence: f64) -> f64 {
    if successes == 0 || trials == 0 {
        return 0.0;
    }
    let beta = Beta::new(successes as f64, (trials - successes + 1) as f64).expect("positive shapes");
    beta.inverse_cdf(1.0 - confidence)
}

/// Smallest number of runs such that, if every run covers within `S̄`, the
/// one-sided Clopper-Pearson bound on `P(X < S̄)` reaches `tau`.
pub fn runs_for_confidence(tau: f64, confidence: f64) -> Result<u64, StatsError> {
    if !(tau > 0.0 && tau < 1.0) {
        return Err(StatsError::Level(tau));
    }
    if !(confidence > 0.0 && confidence < 1.0) {
        return Err(StatsError::Level(confidence));
    }
    Ok(((1.0 - confidence).ln() / tau.ln()).ceil() as u64)
}

/// Sample-size plan for testing whether a new class exists.
#[derive(Clone, Debug, Serialize)]
pub struct ExtensionPlan {
    pub classes: usize,
    pub p_u: f64,
    pub tau: f64,
    pub confidence: f64,
    /// Expected draws to cover the extended partition.
    pub expected_draws: f64,
    /// Samples per run so that `P(X < S̄_new) ≥ τ` on the simulated log.
    pub s_bar_new: u64,
    pub runs: u64,
    /// Lower confidence bound on `P(X < S̄_new)` from the simulated runs.
    pub coverage_lower_bound: f64,
    /// Runs needed for the bound to reach `τ` if all runs succeed.
    pub runs_needed: u64,
}

/// Plans the extension test by simulating the extended partition.
pub fn plan_extension(
    p: &ClassPartition,
    p_u: f64,
    tau: f64,
    runs: u64,
    confidence: f64,
    seed: u64,
) -> Result<ExtensionPlan, StatsError> {
    let ext = p.extended(p_u)?;
    let expected = expected_draws(&ext)?;
    let log = simulate_runs(&ext, runs, seed)?;
    let s_bar_new = required_samples(&log, tau)?;
    let covered = log.completed().filter(|r| r.draw_count <= s_bar_new).count() as u64;
    Ok(ExtensionPlan {
        classes: ext.classes(),
        p_u,
        tau,
        confidence,
        expected_draws: expected,
        s_bar_new,
        runs,
        coverage_lower_bound: clopper_pearson_lower(covered, runs, confidence),
        runs_needed: runs_for_confidence(tau, confidence)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn harmonic(n: usize) -> f64 {
        (1..=n).map(|k| 1.0 / k as f64).sum()
    }

    #[test]
    fn expected_draws_examples() {
        let one = ClassPartition::new(vec![1.0]).unwrap();
        assert!((expected_draws(&one).unwrap() - 1.0).abs() < 1e-12);
        let two = ClassPartition::uniform(2).unwrap();
        assert!((expected_draws(&two).unwrap() - 3.0).abs() < 1e-12);
        let ten = ClassPartition::uniform(10).unwrap();
        assert!((expected_draws(&ten).unwrap() - 10.0 * harmonic(10)).abs() < 1e-9);
    }

    #[test]
    fn quadrature_beyond_closed_form() {
        let p = ClassPartition::uniform(30).unwrap();
        let e = expected_draws(&p).unwrap();
        assert!((e - 30.0 * harmonic(30)).abs() / e < 1e-6, "{e}");
    }

    #[test]
    fn extension_examples() {
        let one = ClassPartition::new(vec![1.0]).unwrap();
        assert!((expected_draws_extended(&one, 0.5).unwrap() - 3.0).abs() < 1e-9);
        let two = ClassPartition::uniform(2).unwrap();
        let base = expected_draws(&two).unwrap();
        let ext = expected_draws_extended(&two, 0.1).unwrap();
        assert!(ext > base && ext >= 10.0);
        assert!(expected_draws_extended(&two, 1.0).is_err());
    }

    #[test]
    fn invalid_partitions() {
        assert!(ClassPartition::new(vec![]).is_err());
        assert!(ClassPartition::new(vec![0.0, 1.0]).is_err());
        assert!(ClassPartition::new(vec![0.6, 0.6]).is_err());
    }

    #[test]
    fn exact_uniform_is_harmonic() {
        let third = BigRational::new(1.into(), 3.into());
        let e = expected_draws_exact(&[third.clone(), third.clone(), third]);
        assert_eq!(e, BigRational::new(11.into(), 2.into()));
    }

    fn log_from(counts: &[u64], classes: usize) -> VerificationRunLog {
        VerificationRunLog {
            classes,
            runs: counts
                .iter()
                .map(|&c| RunRecord {
                    draw_count: c,
                    first_hits: vec![Some(1); classes],
                    failed: false,
                })
                .collect(),
        }
    }

    #[test]
    fn coverage_and_required_samples() {
        let log = log_from(&[3, 3, 4, 4], 2);
        assert_eq!(coverage_cdf(&log, 4), 1.0);
        assert_eq!(coverage_cdf(&log, 3), 0.5);
        assert_eq!(coverage_cdf(&log, 2), 0.0);
        assert_eq!(required_samples(&log, 0.5).unwrap(), 3);
        assert_eq!(required_samples(&log, 1.0).unwrap(), 4);
    }

    #[test]
    fn single_class_runs() {
        let p = ClassPartition::new(vec![1.0]).unwrap();
        let log = simulate_runs(&p, 100, 3).unwrap();
        assert!(log.runs.iter().all(|r| r.draw_count == 1 && !r.failed));
        assert!(simulate_runs(&p, 0, 3).is_err());
    }

    #[test]
    fn log_round_trip() {
        let p = ClassPartition::new(vec![0.5, 0.4]).unwrap();
        let log = simulate_runs(&p, 50, 11).unwrap();
        assert!(log.failed_runs() > 0);
        assert_eq!(VerificationRunLog::parse(&log.to_text()).unwrap(), log);
    }

    #[test]
    fn clopper_pearson_bounds() {
        assert_eq!(clopper_pearson_lower(0, 10, 0.95), 0.0);
        // All successes: lower bound is (1 - confidence)^(1/n).
        let lb = clopper_pearson_lower(100, 100, 0.95);
        assert!((lb - 0.05f64.powf(0.01)).abs() < 1e-9, "{lb}");
        assert_eq!(runs_for_confidence(0.95, 0.95).unwrap(), 59);
    }
}
