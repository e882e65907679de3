//! Pearson χ² test of independence for contingency tables.

use serde::Serialize;

use super::StatsError;

const EPS: f64 = 1e-15;
const MAX_ITER: usize = 10_000;

/// `ln Γ(x)` for `x > 0` (Lanczos, g = 7).
pub fn ln_gamma(x: f64) -> f64 {
    const COEF: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        // Reflection keeps the approximation in its accurate range.
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut a = COEF[0];
    let t = x + 7.5;
    for (i, c) in COEF.iter().enumerate().skip(1) {
        a += c / (x + i as f64);
    }
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + a.ln()
}

/// Regularized upper incomplete gamma `Q(a, x) = Γ(a, x) / Γ(a)`.
pub fn gamma_q(a: f64, x: f64) -> f64 {
    assert!(a > 0.0, "shape must be positive");
    if x <= 0.0 {
        return 1.0;
    }
    if x < a + 1.0 {
        1.0 - gamma_p_series(a, x)
    } else {
        gamma_q_continued_fraction(a, x)
    }
}

fn gamma_p_series(a: f64, x: f64) -> f64 {
    let mut sum = 1.0 / a;
    let mut term = sum;
    let mut n = a;
    for _ in 0..MAX_ITER {
        n += 1.0;
        term *= x / n;
        sum += term;
        if term.abs() < sum.abs() * EPS {
            break;
        }
    }
    (sum.ln() - x + a * x.ln() - ln_gamma(a)).exp()
}

/// Modified Lentz evaluation of the continued fraction for `Q`.
fn gamma_q_continued_fraction(a: f64, x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..MAX_ITER {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < TINY {
            d = TINY;
        }
        c = b + an / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < EPS {
            break;
        }
    }
    (a * x.ln() - x - ln_gamma(a)).exp() * h
}

/// Upper-tail probability of the χ² distribution.
pub fn chi2_sf(statistic: f64, dof: usize) -> f64 {
    gamma_q(dof as f64 / 2.0, statistic / 2.0)
}

#[derive(Clone, Debug, Serialize)]
pub struct Chi2Result {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
    pub table: Vec<Vec<u64>>,
    pub expected: Vec<Vec<f64>>,
    pub warnings: Vec<String>,
}

impl Chi2Result {
    pub fn rejects(&self, alpha: f64) -> bool {
        self.p_value < alpha
    }
}

/// Tests independence of the row and column variables of `table`.
pub fn chi2_independence(table: &[Vec<u64>]) -> Result<Chi2Result, StatsError> {
    let rows = table.len();
    let cols = table.first().map_or(0, |r| r.len());
    if rows < 2 || cols < 2 {
        return Err(StatsError::Table("at least a 2x2 table is required".into()));
    }
    if table.iter().any(|r| r.len() != cols) {
        return Err(StatsError::Table("rows have different lengths".into()));
    }
    let row_sums: Vec<f64> = table.iter().map(|r| r.iter().sum::<u64>() as f64).collect();
    let col_sums: Vec<f64> = (0..cols)
        .map(|j| table.iter().map(|r| r[j]).sum::<u64>() as f64)
        .collect();
    if let Some(i) = row_sums.iter().position(|s| *s == 0.0) {
        return Err(StatsError::Table(format!("row {i} has a zero marginal")));
    }
    if let Some(j) = col_sums.iter().position(|s| *s == 0.0) {
        return Err(StatsError::Table(format!("column {j} has a zero marginal")));
    }
    let total: f64 = row_sums.iter().sum();
    let mut statistic = 0.0;
    let mut expected = vec![vec![0.0; cols]; rows];
    let mut small = 0;
    for i in 0..rows {
        for j in 0..cols {
            let e = row_sums[i] * col_sums[j] / total;
            expected[i][j] = e;
            if e < 5.0 {
                small += 1;
            }
            let d = table[i][j] as f64 - e;
            statistic += d * d / e;
        }
    }
    let mut warnings = Vec::new();
    if small > 0 {
        warnings.push(format!(
            "{small} cell(s) have expected count below 5; the χ² approximation may be poor"
        ));
    }
    let dof = (rows - 1) * (cols - 1);
    Ok(Chi2Result {
        statistic,
        dof,
        p_value: chi2_sf(statistic, dof),
        table: table.to_vec(),
        expected,
        warnings,
    })
}

/// Parses a CSV contingency table of nonnegative integer counts.
pub fn parse_table_csv(text: &str) -> Result<Vec<Vec<u64>>, StatsError> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|l| {
            l.split(',')
                .map(|c| {
                    c.trim()
                        .parse::<u64>()
                        .map_err(|_| StatsError::Table(format!("bad count `{}`", c.trim())))
                })
                .collect()
        })
        .collect()
}

pub fn table_to_csv(table: &[Vec<u64>]) -> String {
    table
        .iter()
        .map(|r| r.iter().map(u64::to_string).collect::<Vec<_>>().join(","))
        .collect::<Vec<_>>()
        .join("\n")
        + "\n"
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ln_gamma_values() {
        assert!(ln_gamma(1.0).abs() < 1e-14);
        assert!((ln_gamma(5.0) - 24f64.ln()).abs() < 1e-13);
        assert!((ln_gamma(0.5) - std::f64::consts::PI.sqrt().ln()).abs() < 1e-13);
    }

    #[test]
    fn q_boundaries() {
        assert_eq!(gamma_q(0.5, 0.0), 1.0);
        // Q(1, x) = e^{-x}
        for x in [0.1, 1.0, 5.0, 40.0] {
            let q = gamma_q(1.0, x);
            assert!(((q - (-x).exp()) / q).abs() < 1e-12, "{x}");
        }
    }

    #[test]
    fn independent_table() {
        let r = chi2_independence(&[vec![25, 25], vec![25, 25]]).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert_eq!(r.p_value, 1.0);
        assert_eq!(r.dof, 1);
    }

    #[test]
    fn diagonal_table() {
        let r = chi2_independence(&[vec![50, 0], vec![0, 50]]).unwrap();
        assert!((r.statistic - 100.0).abs() < 1e-9);
        assert!(r.p_value < 1e-20 && r.p_value > 0.0, "{}", r.p_value);
    }

    #[test]
    fn zero_marginal() {
        assert!(chi2_independence(&[vec![0, 0], vec![1, 2]]).is_err());
    }

    #[test]
    fn small_counts_warn() {
        let r = chi2_independence(&[vec![1, 2], vec![3, 1]]).unwrap();
        assert_eq!(r.warnings.len(), 1);
    }

    #[test]
    fn csv_round_trip() {
        let t = vec![vec![1, 2, 3], vec![4, 5, 6]];
        assert_eq!(parse_table_csv(&table_to_csv(&t)).unwrap(), t);
    }
}
