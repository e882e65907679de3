//! Test-side oracles and generators, independent of the library internals.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::seq::SliceRandom;
use rand::Rng;

pub fn q(n: i64, d: i64) -> BigRational {
    BigRational::new(n.into(), d.into())
}

/// Rate expressions that stay nonnegative on `[0, 1]^2`.
const CONSTANT_RATES: [&str; 5] = ["1", "2", "1/2", "3/2", "3"];
const PARAM_RATES: [&str; 7] = ["a", "1-a", "b", "1-b", "a*b", "2*a+1", "(a+b)/2"];

pub struct RandomModel {
    pub source: String,
    pub states: usize,
    pub params: Vec<&'static str>,
}

/// A single-module chain over `s:[0..n-1]` with mostly forward jumps, short
/// backward loops and absorbing tail states. The label "goal" marks a few
/// states.
pub fn random_model<R: Rng>(rng: &mut R, n: usize, params: usize) -> RandomModel {
    let names = &["a", "b"][..params];
    let param_share = (8.0 / n as f64).clamp(0.05, 0.4);
    let mut src = String::from("ctmc\n");
    for p in names {
        src.push_str(&format!("param {p};\n"));
    }
    src.push_str(&format!("module m\n  s:[0..{}] init 0;\n", n - 1));
    // Absorbing states are never adjacent, and every other state steps to the
    // next non-absorbing one, so all n states are reachable.
    let mut absorbing = vec![false; n];
    absorbing[n - 1] = true;
    for i in 1..n - 1 {
        absorbing[i] = !absorbing[i - 1] && rng.gen_bool(0.1);
    }
    for i in 0..n {
        if absorbing[i] {
            continue;
        }
        let alts = rng.gen_range(0..=2usize);
        let mut targets = BTreeSet::from([i + 1]);
        if absorbing[i + 1] && i + 2 < n {
            targets.insert(i + 2);
        }
        for _ in 0..alts {
            let j = if i > 0 && rng.gen_bool(0.15) {
                rng.gen_range(i.saturating_sub(3)..i)
            } else {
                rng.gen_range(i + 1..(i + 8).min(n))
            };
            targets.insert(j);
        }
        let parts: Vec<String> = targets
            .iter()
            .map(|j| {
                let rate = if !names.is_empty() && rng.gen_bool(param_share) {
                    let r = *PARAM_RATES.choose(rng).unwrap();
                    if params == 1 {
                        r.replace('b', "a")
                    } else {
                        r.to_string()
                    }
                } else {
                    CONSTANT_RATES.choose(rng).unwrap().to_string()
                };
                format!("{rate}:(s'={j})")
            })
            .collect();
        src.push_str(&format!("  [] s={i} -> {};\n", parts.join(" + ")));
    }
    src.push_str("endmodule\n");
    let goals: BTreeSet<usize> = (0..rng.gen_range(1..=3)).map(|_| rng.gen_range(1..n)).collect();
    let pred: Vec<String> = goals.iter().map(|g| format!("s={g}")).collect();
    src.push_str(&format!("label \"goal\" = {};\n", pred.join(" | ")));
    RandomModel {
        source: src,
        states: n,
        params: names.to_vec(),
    }
}

/// A point strictly inside the unit box, with small denominators.
pub fn interior_point<R: Rng>(rng: &mut R, names: &[&str]) -> BTreeMap<String, BigRational> {
    names
        .iter()
        .map(|n| (n.to_string(), q(rng.gen_range(1..97), 97)))
        .collect()
}

/// `P(F target)` from `start` by dense Gauss-Jordan elimination on the
/// jump-chain equations, over states that can reach the target.
pub fn dense_reach(rows: &[BTreeMap<usize, BigRational>], target: &BTreeSet<usize>, start: usize) -> BigRational {
    let n = rows.len();
    // Backward closure.
    let mut can = vec![false; n];
    for &t in target {
        can[t] = true;
    }
    loop {
        let mut changed = false;
        for s in 0..n {
            if !can[s] && rows[s].keys().any(|t| can[*t]) {
                can[s] = true;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    if !can[start] {
        return BigRational::zero();
    }
    if target.contains(&start) {
        return BigRational::one();
    }
    let unknowns: Vec<usize> = (0..n).filter(|s| can[*s] && !target.contains(s)).collect();
    let index: BTreeMap<usize, usize> = unknowns.iter().enumerate().map(|(i, s)| (*s, i)).collect();
    let m = unknowns.len();
    let mut a = vec![vec![BigRational::zero(); m + 1]; m];
    for (i, s) in unknowns.iter().enumerate() {
        let exit: BigRational = rows[*s].values().fold(BigRational::zero(), |acc, r| acc + r);
        a[i][i] = BigRational::one();
        for (t, r) in &rows[*s] {
            let p = r / &exit;
            if target.contains(t) {
                a[i][m] += p;
            } else if let Some(&j) = index.get(t) {
                a[i][j] -= p;
            }
        }
    }
    for col in 0..m {
        let pivot = (col..m).find(|r| !a[*r][col].is_zero()).expect("nonsingular system");
        a.swap(col, pivot);
        let inv = BigRational::one() / &a[col][col];
        for x in a[col].iter_mut() {
            *x = &*x * &inv;
        }
        for r in 0..m {
            if r != col && !a[r][col].is_zero() {
                let f = a[r][col].clone();
                let pivot_row = a[col].clone();
                for (x, p) in a[r].iter_mut().zip(&pivot_row) {
                    *x = &*x - &f * p;
                }
            }
        }
    }
    a[index[&start]][m].clone()
}

/// Random fault tree over `events` basic events, as tree-file text.
pub fn random_tree<R: Rng>(rng: &mut R, events: usize) -> String {
    let mut lines = Vec::new();
    let mut pool: Vec<String> = Vec::new();
    for i in 0..events {
        let p = q(rng.gen_range(0..=10), 10);
        lines.push(format!("basic e{i} p={p}"));
        pool.push(format!("e{i}"));
    }
    let gates = rng.gen_range(1..=events.max(2));
    for g in 0..gates {
        let k = rng.gen_range(1..=3.min(pool.len()));
        let children: Vec<String> = pool.choose_multiple(rng, k).cloned().collect();
        let kind = if rng.gen_bool(0.5) { "AND" } else { "OR" };
        lines.push(format!("gate g{g} {kind} {}", children.join(",")));
        pool.push(format!("g{g}"));
    }
    lines.push(format!("top g{}", gates - 1));
    lines.join("\n")
}

/// Top-event probability by enumerating all outcomes of the basic events.
pub fn brute_force_top(tree: &pra::fta::FaultTree) -> BigRational {
    let events: Vec<String> = tree.basic_events().iter().map(|s| s.to_string()).collect();
    let probs: Vec<BigRational> = events.iter().map(|e| tree.probability_of(e).unwrap().clone()).collect();
    let mut total = BigRational::zero();
    for mask in 0u32..(1 << events.len()) {
        let mut weight = BigRational::one();
        let mut failed = BTreeSet::new();
        for (i, e) in events.iter().enumerate() {
            if mask & (1 << i) != 0 {
                weight *= &probs[i];
                failed.insert(e.clone());
            } else {
                weight *= BigRational::one() - &probs[i];
            }
        }
        if !weight.is_zero() && tree.occurs(&failed) {
            total += weight;
        }
    }
    total
}

/// Exact `P(X ≤ s)` for the coupon collector by inclusion-exclusion over
/// the classes left uncovered.
pub fn ccp_cdf(p: &[f64], s: u64) -> f64 {
    let l = p.len();
    let mut total = 0.0;
    for mask in 0u32..(1 << l) {
        let missing: f64 = (0..l).filter(|i| mask & (1 << i) != 0).map(|i| p[i]).sum();
        let sign = if mask.count_ones() % 2 == 0 { 1.0 } else { -1.0 };
        total += sign * (1.0 - missing).max(0.0).powi(s as i32);
    }
    total
}

/// Smallest `s` with `P(X ≤ s) ≥ tau`.
pub fn ccp_quantile(p: &[f64], tau: f64) -> u64 {
    (1..).find(|s| ccp_cdf(p, *s) >= tau).unwrap()
}

pub fn harmonic(n: u64) -> BigRational {
    (1..=n).map(|k| q(1, k as i64)).fold(BigRational::zero(), |a, b| a + b)
}
