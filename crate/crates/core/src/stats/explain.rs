//! Reduction of per-channel explanation maps (bit matrices of essential
//! pixels) to categorical features for the independence test.

use serde::Serialize;

use super::StatsError;

pub const MIN_PAIRS: usize = 30;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BitMatrix {
    pub rows: usize,
    pub cols: usize,
    bits: Vec<bool>,
}

impl BitMatrix {
    pub fn new(rows: usize, cols: usize, bits: Vec<bool>) -> Result<Self, StatsError> {
        if bits.len() != rows * cols {
            return Err(StatsError::Dimension(format!(
                "{} bits for a {rows}x{cols} matrix",
                bits.len()
            )));
        }
        Ok(BitMatrix { rows, cols, bits })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        BitMatrix {
            rows,
            cols,
            bits: vec![false; rows * cols],
        }
    }

    pub fn get(&self, r: usize, c: usize) -> bool {
        self.bits[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: bool) {
        self.bits[r * self.cols + c] = v;
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|b| **b).count()
    }

    pub fn overlap(&self, other: &BitMatrix) -> usize {
        self.bits.iter().zip(&other.bits).filter(|(a, b)| **a && **b).count()
    }

    /// Row-major `0`/`1` string.
    pub fn to_bit_string(&self) -> String {
        self.bits.iter().map(|b| if *b { '1' } else { '0' }).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Feature {
    /// Number of essential pixels in the channel's own map.
    PixelCount,
    /// Share of the channel's essential pixels that the other channel also marks.
    Overlap,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Binning {
    pub feature: Feature,
    pub buckets: usize,
}

impl Default for Binning {
    fn default() -> Self {
        Binning {
            feature: Feature::PixelCount,
            buckets: 3,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ExplanationTable {
    /// Counts indexed by (classical bucket, NN bucket); empty rows and
    /// columns are dropped.
    pub table: Vec<Vec<u64>>,
    pub row_buckets: Vec<usize>,
    pub col_buckets: Vec<usize>,
    /// Fewer than two rows or columns remain, so no test is possible.
    pub degenerate: bool,
}

/// Quantile bucket of each value: thresholds are the order statistics at
/// ranks `k·n/B`, and a value's bucket counts the thresholds it reaches.
fn quantile_buckets(values: &[f64], buckets: usize) -> Vec<usize> {
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let n = sorted.len();
    let thresholds: Vec<f64> = (1..buckets).map(|k| sorted[(k * n / buckets).min(n - 1)]).collect();
    values
        .iter()
        .map(|v| thresholds.iter().filter(|t| v >= t).count())
        .collect()
}

pub fn explanation_table(pairs: &[(BitMatrix, BitMatrix)], binning: Binning) -> Result<ExplanationTable, StatsError> {
    if pairs.is_empty() {
        return Err(StatsError::Table("no explanation pairs".into()));
    }
    if pairs.len() < MIN_PAIRS {
        return Err(StatsError::Table(format!(
            "{} pairs given, at least {MIN_PAIRS} are required",
            pairs.len()
        )));
    }
    if binning.buckets < 1 {
        return Err(StatsError::Table("at least one bucket is required".into()));
    }
    for (i, (c, n)) in pairs.iter().enumerate() {
        if c.rows != n.rows || c.cols != n.cols {
            return Err(StatsError::Dimension(format!(
                "pair {i}: {}x{} vs {}x{}",
                c.rows, c.cols, n.rows, n.cols
            )));
        }
    }
    let feature = |m: &BitMatrix, other: &BitMatrix| -> f64 {
        match binning.feature {
            Feature::PixelCount => m.count() as f64,
            Feature::Overlap => {
                let own = m.count();
                if own == 0 {
                    0.0
                } else {
                    m.overlap(other) as f64 / own as f64
                }
            }
        }
    };
    let fc: Vec<f64> = pairs.iter().map(|(c, n)| feature(c, n)).collect();
    let fn_: Vec<f64> = pairs.iter().map(|(c, n)| feature(n, c)).collect();
    let bc = quantile_buckets(&fc, binning.buckets);
    let bn = quantile_buckets(&fn_, binning.buckets);
    let mut full = vec![vec![0u64; binning.buckets]; binning.buckets];
    for (i, j) in bc.iter().zip(&bn) {
        full[*i][*j] += 1;
    }
    let row_buckets: Vec<usize> = (0..binning.buckets)
        .filter(|&i| full[i].iter().any(|c| *c > 0))
        .collect();
    let col_buckets: Vec<usize> = (0..binning.buckets)
        .filter(|&j| full.iter().any(|r| r[j] > 0))
        .collect();
    let table: Vec<Vec<u64>> = row_buckets
        .iter()
        .map(|&i| col_buckets.iter().map(|&j| full[i][j]).collect())
        .collect();
    Ok(ExplanationTable {
        degenerate: row_buckets.len() < 2 || col_buckets.len() < 2,
        table,
        row_buckets,
        col_buckets,
    })
}

/// Parses explanation pairs, one per line: `ROWSxCOLS c_bits n_bits` with
/// row-major `0`/`1` strings.
pub fn parse_pairs(text: &str) -> Result<Vec<(BitMatrix, BitMatrix)>, StatsError> {
    let mut out = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let bad = |m: &str| StatsError::Dimension(format!("line {}: {m}", ln + 1));
        let parts: Vec<&str> = line.split_whitespace().collect();
        let [dims, c, n] = parts.as_slice() else {
            return Err(bad("expected `ROWSxCOLS c_bits n_bits`"));
        };
        let (r, k) = dims.split_once('x').ok_or_else(|| bad("bad dimensions"))?;
        let rows: usize = r.parse().map_err(|_| bad("bad row count"))?;
        let cols: usize = k.parse().map_err(|_| bad("bad column count"))?;
        let bits = |s: &str| -> Result<Vec<bool>, StatsError> {
            s.chars()
                .map(|ch| match ch {
                    '0' => Ok(false),
                    '1' => Ok(true),
                    _ => Err(bad("bits must be 0 or 1")),
                })
                .collect()
        };
        let mc = BitMatrix::new(rows, cols, bits(c)?).map_err(|_| bad("classical map has the wrong size"))?;
        let mn = BitMatrix::new(rows, cols, bits(n)?).map_err(|_| bad("NN map has the wrong size"))?;
        out.push((mc, mn));
    }
    Ok(out)
}

pub fn format_pairs(pairs: &[(BitMatrix, BitMatrix)]) -> String {
    pairs
        .iter()
        .map(|(c, n)| format!("{}x{} {} {}\n", c.rows, c.cols, c.to_bit_string(), n.to_bit_string()))
        .collect()
}
