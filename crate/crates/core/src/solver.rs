//! Unbounded reachability on the embedded jump chain, exact or parametric,
//! plus a stochastic-simulation cross-check.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use statrs::distribution::{ContinuousCDF, Normal};
use thiserror::Error;

use crate::ctmc::{Ctmc, CtmcError, StatePredicate};
use crate::polyrat::{to_decimal, to_f64, Point, PolyError, RationalFunction};

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("unknown label \"{0}\"")]
    UnknownLabel(String),
    #[error(transparent)]
    Ctmc(#[from] CtmcError),
    #[error("singular system while eliminating state {0}")]
    Singular(usize),
    #[error("intermediate state set is empty")]
    EmptyIntermediate,
    #[error("parameters remain after substitution: {0}")]
    UnboundParameters(String),
    #[error("pole at the given parameter point")]
    Pole,
    #[error("at least one simulation run is required")]
    NoRuns,
    #[error("confidence level must lie strictly between 0 and 1")]
    Confidence,
    #[error("start state {0} does not exist")]
    BadStart(usize),
}

impl From<PolyError> for SolverError {
    fn from(_: PolyError) -> Self {
        SolverError::Pole
    }
}

/// Field operations needed by the elimination.
pub trait Scalar: Clone + PartialEq + Send + Sync {
    fn zero() -> Self;
    fn one() -> Self;
    fn is_zero(&self) -> bool;
    fn add(&self, other: &Self) -> Self;
    fn sub(&self, other: &Self) -> Self;
    fn mul(&self, other: &Self) -> Self;
    fn div(&self, other: &Self) -> Option<Self>;
    /// Size measure for pivot choice; smaller is cheaper.
    fn weight(&self) -> u32;
}

impl Scalar for BigRational {
    fn zero() -> Self {
        Zero::zero()
    }
    fn one() -> Self {
        One::one()
    }
    fn is_zero(&self) -> bool {
        Zero::is_zero(self)
    }
    fn add(&self, other: &Self) -> Self {
        self + other
    }
    fn sub(&self, other: &Self) -> Self {
        self - other
    }
    fn mul(&self, other: &Self) -> Self {
        self * other
    }
    fn div(&self, other: &Self) -> Option<Self> {
        (!Zero::is_zero(other)).then(|| self / other)
    }
    fn weight(&self) -> u32 {
        0
    }
}

impl Scalar for RationalFunction {
    fn zero() -> Self {
        RationalFunction::zero()
    }
    fn one() -> Self {
        RationalFunction::one()
    }
    fn is_zero(&self) -> bool {
        RationalFunction::is_zero(self)
    }
    fn add(&self, other: &Self) -> Self {
        RationalFunction::add(self, other)
    }
    fn sub(&self, other: &Self) -> Self {
        RationalFunction::sub(self, other)
    }
    fn mul(&self, other: &Self) -> Self {
        RationalFunction::mul(self, other)
    }
    fn div(&self, other: &Self) -> Option<Self> {
        RationalFunction::div(self, other).ok()
    }
    fn weight(&self) -> u32 {
        self.denominator_degree()
    }
}

/// Target of a reachability query.
#[derive(Clone, Debug)]
pub enum Target {
    Label(String),
    Predicate(StatePredicate),
    States(BTreeSet<usize>),
}

#[derive(Clone, Debug)]
pub struct ReachQuery {
    pub target: Target,
    /// Start state; the initial state when `None`.
    pub from: Option<usize>,
}

impl ReachQuery {
    pub fn label(name: &str) -> Self {
        ReachQuery {
            target: Target::Label(name.to_string()),
            from: None,
        }
    }

    pub fn predicate(pred: StatePredicate) -> Self {
        ReachQuery {
            target: Target::Predicate(pred),
            from: None,
        }
    }

    pub fn describe(&self) -> String {
        let t = match &self.target {
            Target::Label(l) => format!("\"{l}\""),
            Target::Predicate(p) => p.text.clone(),
            Target::States(s) => format!("{s:?}"),
        };
        match self.from {
            Some(f) => format!("P=? [F {t}] from state {f}"),
            None => format!("P=? [F {t}]"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct ParamSolution {
    pub value: RationalFunction,
    pub query: String,
    pub warnings: Vec<String>,
}

impl ParamSolution {
    pub fn evaluate(&self, point: &Point) -> Result<BigRational, PolyError> {
        self.value.evaluate(point)
    }
}

/// Serializable query result.
#[derive(Clone, Debug, Serialize)]
pub struct QueryRecord {
    pub query: String,
    pub function: String,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub grid: Vec<GridPoint>,
}

#[derive(Clone, Debug, Serialize)]
pub struct GridPoint {
    pub point: BTreeMap<String, String>,
    pub value: String,
}

impl QueryRecord {
    pub fn new(solution: &ParamSolution, grid: &[(Point, BigRational)]) -> Self {
        QueryRecord {
            query: solution.query.clone(),
            function: solution.value.to_string(),
            grid: grid
                .iter()
                .map(|(pt, v)| GridPoint {
                    point: pt.iter().map(|(k, x)| (k.clone(), to_decimal(x, 12))).collect(),
                    value: to_decimal(v, 12),
                })
                .collect(),
        }
    }
}

pub fn resolve_target(ctmc: &Ctmc, target: &Target) -> Result<BTreeSet<usize>, SolverError> {
    match target {
        Target::Label(name) => ctmc
            .label(name)
            .cloned()
            .ok_or_else(|| SolverError::UnknownLabel(name.clone())),
        Target::Predicate(p) => Ok(ctmc.states_where(p)?),
        Target::States(s) => Ok(s.clone()),
    }
}

type Rows<S> = Vec<BTreeMap<usize, S>>;

/// Jump probabilities as exact rationals, if no rate depends on a parameter.
fn concrete_rows(ctmc: &Ctmc) -> Option<Rows<BigRational>> {
    let dtmc = ctmc.embedded_dtmc();
    dtmc.probs
        .iter()
        .map(|row| row.iter().map(|(t, p)| Some((*t, p.as_constant()?))).collect())
        .collect()
}

fn predecessors<S>(rows: &Rows<S>) -> Vec<Vec<usize>> {
    let mut pred = vec![Vec::new(); rows.len()];
    for (s, row) in rows.iter().enumerate() {
        for &t in row.keys() {
            if t != s {
                pred[t].push(s);
            }
        }
    }
    pred
}

fn backward_closure(pred: &[Vec<usize>], target: &BTreeSet<usize>) -> Vec<bool> {
    let mut seen = vec![false; pred.len()];
    let mut queue: VecDeque<usize> = target.iter().copied().collect();
    for &t in target {
        seen[t] = true;
    }
    while let Some(s) = queue.pop_front() {
        for &p in &pred[s] {
            if !seen[p] {
                seen[p] = true;
                queue.push_back(p);
            }
        }
    }
    seen
}

fn forward_closure<S>(rows: &Rows<S>, from: usize, stop: &BTreeSet<usize>) -> Vec<bool> {
    let mut seen = vec![false; rows.len()];
    seen[from] = true;
    let mut queue = VecDeque::from([from]);
    while let Some(s) = queue.pop_front() {
        if stop.contains(&s) {
            continue;
        }
        for &t in rows[s].keys() {
            if !seen[t] {
                seen[t] = true;
                queue.push_back(t);
            }
        }
    }
    seen
}

/// Strongly connected components of the subgraph on `nodes`, in reverse
/// topological order (every component precedes the components that reach it).
fn tarjan<S>(rows: &Rows<S>, nodes: &[usize], member: &[bool]) -> Vec<Vec<usize>> {
    const UNSEEN: usize = usize::MAX;
    let n = rows.len();
    let mut index = vec![UNSEEN; n];
    let mut low = vec![0usize; n];
    let mut on_stack = vec![false; n];
    let mut stack = Vec::new();
    let mut out = Vec::new();
    let mut counter = 0;
    for &root in nodes {
        if index[root] != UNSEEN {
            continue;
        }
        let mut call: Vec<(usize, Vec<usize>, usize)> = Vec::new();
        let succ = |v: usize| -> Vec<usize> { rows[v].keys().copied().filter(|&t| t != v && member[t]).collect() };
        index[root] = counter;
        low[root] = counter;
        counter += 1;
        stack.push(root);
        on_stack[root] = true;
        call.push((root, succ(root), 0));
        while let Some((v, succs, i)) = call.last_mut() {
            let v = *v;
            if *i < succs.len() {
                let w = succs[*i];
                *i += 1;
                if index[w] == UNSEEN {
                    index[w] = counter;
                    low[w] = counter;
                    counter += 1;
                    stack.push(w);
                    on_stack[w] = true;
                    call.push((w, succ(w), 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
            } else {
                call.pop();
                if let Some((parent, _, _)) = call.last() {
                    low[*parent] = low[*parent].min(low[v]);
                }
                if low[v] == index[v] {
                    let mut comp = Vec::new();
                    loop {
                        let w = stack.pop().expect("tarjan stack");
                        on_stack[w] = false;
                        comp.push(w);
                        if w == v {
                            break;
                        }
                    }
                    comp.sort_unstable();
                    out.push(comp);
                }
            }
        }
    }
    out
}

/// Solves `x = P x` with `x = 1` on `target` and `x = 0` where the target is
/// unreachable. When `from` is given only states reachable from it are solved
/// and the rest of the result is zero.
pub fn reach_vector<S: Scalar>(
    rows: &Rows<S>,
    target: &BTreeSet<usize>,
    from: Option<usize>,
) -> Result<Vec<S>, SolverError> {
    let n = rows.len();
    let mut x: Vec<S> = vec![S::zero(); n];
    for &t in target {
        x[t] = S::one();
    }
    let can_reach = backward_closure(&predecessors(rows), target);
    let relevant = match from {
        Some(f) => forward_closure(rows, f, target),
        None => vec![true; n],
    };
    let member: Vec<bool> = (0..n)
        .map(|s| can_reach[s] && relevant[s] && !target.contains(&s))
        .collect();
    let nodes: Vec<usize> = (0..n).filter(|&s| member[s]).collect();
    let mut solved = vec![false; n];
    for comp in tarjan(rows, &nodes, &member) {
        solve_component(rows, &comp, &mut x, &member, &solved)?;
        for &s in &comp {
            solved[s] = true;
        }
    }
    Ok(x)
}

fn solve_component<S: Scalar>(
    rows: &Rows<S>,
    comp: &[usize],
    x: &mut [S],
    member: &[bool],
    solved: &[bool],
) -> Result<(), SolverError> {
    let in_comp: BTreeSet<usize> = comp.iter().copied().collect();
    // Each equation: x_s = sum a[s][u] x_u + c[s], u in the component.
    let mut a: BTreeMap<usize, BTreeMap<usize, S>> = BTreeMap::new();
    let mut c: BTreeMap<usize, S> = BTreeMap::new();
    for &s in comp {
        let mut row = BTreeMap::new();
        let mut constant = S::zero();
        for (t, p) in &rows[s] {
            if in_comp.contains(t) {
                row.insert(*t, p.clone());
            } else if !member[*t] || solved[*t] {
                // Targets hold 1, hopeless states 0, earlier components their value.
                if !x[*t].is_zero() {
                    constant = constant.add(&p.mul(&x[*t]));
                }
            }
        }
        a.insert(s, row);
        c.insert(s, constant);
    }
    if comp.len() == 1 {
        let s = comp[0];
        let self_loop = a[&s].get(&s).cloned().unwrap_or_else(S::zero);
        let denom = S::one().sub(&self_loop);
        x[s] = c[&s].div(&denom).ok_or(SolverError::Singular(s))?;
        return Ok(());
    }
    let mut incoming: BTreeMap<usize, BTreeSet<usize>> = comp.iter().map(|&s| (s, BTreeSet::new())).collect();
    for (&s, row) in &a {
        for &u in row.keys() {
            if u != s {
                incoming.get_mut(&u).expect("component member").insert(s);
            }
        }
    }
    let mut remaining: BTreeSet<usize> = in_comp.clone();
    let mut eliminated: Vec<(usize, BTreeMap<usize, S>, S)> = Vec::new();
    while !remaining.is_empty() {
        let k = *remaining
            .iter()
            .min_by_key(|&&s| {
                let w = a[&s].values().map(|v| v.weight()).max().unwrap_or(0);
                (w, incoming[&s].len(), s)
            })
            .expect("nonempty");
        remaining.remove(&k);
        let mut row_k = a.remove(&k).expect("row");
        let c_k = c.remove(&k).expect("constant");
        let self_loop = row_k.remove(&k).unwrap_or_else(S::zero);
        let denom = S::one().sub(&self_loop);
        if denom.is_zero() {
            return Err(SolverError::Singular(k));
        }
        let scale = |v: &S| v.div(&denom).expect("nonzero pivot");
        let row_k: BTreeMap<usize, S> = row_k.iter().map(|(u, v)| (*u, scale(v))).collect();
        let c_k = scale(&c_k);
        for &u in row_k.keys() {
            incoming.get_mut(&u).expect("member").remove(&k);
        }
        let preds: Vec<usize> = incoming.remove(&k).expect("member").into_iter().collect();
        for s in preds {
            let row_s = a.get_mut(&s).expect("predecessor row");
            let Some(a_sk) = row_s.remove(&k) else { continue };
            for (u, v) in &row_k {
                let add = a_sk.mul(v);
                let entry = row_s.entry(*u).or_insert_with(S::zero);
                *entry = entry.add(&add);
                if entry.is_zero() {
                    row_s.remove(u);
                    if *u != s {
                        incoming.get_mut(u).expect("member").remove(&s);
                    }
                } else if *u != s {
                    incoming.get_mut(u).expect("member").insert(s);
                }
            }
            let cs = c.get_mut(&s).expect("constant");
            *cs = cs.add(&a_sk.mul(&c_k));
        }
        eliminated.push((k, row_k, c_k));
    }
    for (k, row, constant) in eliminated.into_iter().rev() {
        let mut v = constant;
        for (u, coef) in &row {
            v = v.add(&coef.mul(&x[*u]));
        }
        x[k] = v;
    }
    Ok(())
}

fn start_state(ctmc: &Ctmc, from: Option<usize>) -> Result<usize, SolverError> {
    let s = from.unwrap_or(ctmc.initial);
    if s >= ctmc.num_states() {
        return Err(SolverError::BadStart(s));
    }
    Ok(s)
}

/// Probability of eventually reaching each state's target, for all states.
fn reach_all(ctmc: &Ctmc, target: &BTreeSet<usize>, from: Option<usize>) -> Result<Vec<RationalFunction>, SolverError> {
    if let Some(rows) = concrete_rows(ctmc) {
        let x = reach_vector(&rows, target, from)?;
        return Ok(x.into_iter().map(RationalFunction::constant).collect());
    }
    let rows = ctmc.embedded_dtmc().probs;
    reach_vector(&rows, target, from)
}

/// `P(F target)` from the query's start state.
pub fn reach_prob(ctmc: &Ctmc, q: &ReachQuery) -> Result<ParamSolution, SolverError> {
    let target = resolve_target(ctmc, &q.target)?;
    let from = start_state(ctmc, q.from)?;
    let mut warnings = Vec::new();
    if target.is_empty() {
        warnings.push(format!("target of {} matches no state", q.describe()));
    }
    let x = reach_all(ctmc, &target, Some(from))?;
    Ok(ParamSolution {
        value: x[from].clone(),
        query: q.describe(),
        warnings,
    })
}

/// `Σ_{s ∈ I} P(F s | s0) · P(F fin | s)` over the intermediate states `I`.
pub fn conditional_fn_prob(ctmc: &Ctmc, intermediate: &Target, fin: &Target) -> Result<ParamSolution, SolverError> {
    let inter = resolve_target(ctmc, intermediate)?;
    if inter.is_empty() {
        return Err(SolverError::EmptyIntermediate);
    }
    let fin_set = resolve_target(ctmc, fin)?;
    let mut warnings = Vec::new();
    if fin_set.is_empty() {
        warnings.push("final state set is empty".to_string());
    }
    let to_fin = reach_all(ctmc, &fin_set, None)?;
    let mut total = RationalFunction::zero();
    let mut overlapping = false;
    for &s in &inter {
        let single = BTreeSet::from([s]);
        let reach_s = reach_all(ctmc, &single, Some(ctmc.initial))?;
        total = total.add(&reach_s[ctmc.initial].mul(&to_fin[s]));
        if !overlapping {
            let fwd = forward_closure(&ctmc.transitions, s, &BTreeSet::new());
            overlapping = inter.iter().any(|&o| o != s && fwd[o]);
        }
    }
    if overlapping {
        warnings.push("intermediate states can reach one another; the sum may count runs more than once".to_string());
    }
    let describe = |t: &Target| match t {
        Target::Label(l) => format!("\"{l}\""),
        Target::Predicate(p) => p.text.clone(),
        Target::States(s) => format!("{s:?}"),
    };
    Ok(ParamSolution {
        value: total,
        query: format!(
            "sum over s in {} of P(F s) * P(F {} | s)",
            describe(intermediate),
            describe(fin)
        ),
        warnings,
    })
}

/// Monte-Carlo estimate with a normal-approximation binomial interval.
#[derive(Clone, Debug, Serialize)]
pub struct SimEstimate {
    pub mean: f64,
    pub half_width: f64,
    pub runs: u64,
    pub hits: u64,
    /// Runs that hit the jump horizon before being decided.
    pub truncated: u64,
    pub confidence: f64,
    pub seed: u64,
}

impl SimEstimate {
    pub fn covers(&self, value: f64) -> bool {
        (value - self.mean).abs() <= self.half_width
    }
}

#[derive(Clone, Debug)]
pub struct SimOptions {
    pub runs: u64,
    pub horizon: u64,
    pub confidence: f64,
    pub seed: u64,
}

impl Default for SimOptions {
    fn default() -> Self {
        SimOptions {
            runs: 100_000,
            horizon: 100_000,
            confidence: 0.99,
            seed: 1,
        }
    }
}

const CHUNK: u64 = 8192;

/// Cumulative jump distribution per state, in floating point.
struct JumpTable {
    rows: Vec<(Vec<usize>, Vec<f64>, f64)>,
}

impl JumpTable {
    fn new(ctmc: &Ctmc, point: &Point) -> Result<Self, SolverError> {
        let inst = ctmc.instantiate(point)?;
        let mut rows = Vec::with_capacity(inst.num_states());
        for row in &inst.transitions {
            let mut targets = Vec::with_capacity(row.len());
            let mut cumulative = Vec::with_capacity(row.len());
            let mut total = 0.0;
            for (t, r) in row {
                let c = r
                    .as_constant()
                    .ok_or_else(|| SolverError::UnboundParameters(r.vars().join(", ")))?;
                total += to_f64(&c);
                targets.push(*t);
                cumulative.push(total);
            }
            rows.push((targets, cumulative, total));
        }
        Ok(JumpTable { rows })
    }

    fn step(&self, s: usize, rng: &mut ChaCha8Rng) -> Option<(usize, f64)> {
        let (targets, cumulative, total) = &self.rows[s];
        if targets.is_empty() {
            return None;
        }
        let dwell = -rng.gen::<f64>().max(f64::MIN_POSITIVE).ln() / total;
        let u = rng.gen::<f64>() * total;
        let i = cumulative.partition_point(|&c| c <= u).min(targets.len() - 1);
        Some((targets[i], dwell))
    }
}

#[derive(Clone, Copy, Default)]
struct Tally {
    hits: u64,
    truncated: u64,
}

fn run_chunks(opts: &SimOptions, run: impl Fn(&mut ChaCha8Rng) -> RunOutcome + Sync) -> Tally {
    let chunks = opts.runs.div_ceil(CHUNK);
    let tallies: Vec<Tally> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
            rng.set_stream(c);
            let n = CHUNK.min(opts.runs - c * CHUNK);
            let mut t = Tally::default();
            for _ in 0..n {
                match run(&mut rng) {
                    RunOutcome::Hit => t.hits += 1,
                    RunOutcome::Miss => {}
                    RunOutcome::Truncated => t.truncated += 1,
                }
            }
            t
        })
        .collect();
    tallies.iter().fold(Tally::default(), |a, b| Tally {
        hits: a.hits + b.hits,
        truncated: a.truncated + b.truncated,
    })
}

enum RunOutcome {
    Hit,
    Miss,
    Truncated,
}

fn check_opts(opts: &SimOptions) -> Result<(), SolverError> {
    if opts.runs == 0 {
        return Err(SolverError::NoRuns);
    }
    if !(opts.confidence > 0.0 && opts.confidence < 1.0) {
        return Err(SolverError::Confidence);
    }
    Ok(())
}

/// Two-sided normal quantile for the given confidence level.
pub fn z_value(confidence: f64) -> f64 {
    Normal::new(0.0, 1.0)
        .expect("standard normal")
        .inverse_cdf(0.5 + confidence / 2.0)
}

fn estimate(tally: Tally, opts: &SimOptions) -> SimEstimate {
    let n = opts.runs as f64;
    let mean = tally.hits as f64 / n;
    let half_width = z_value(opts.confidence) * (mean * (1.0 - mean) / n).sqrt();
    SimEstimate {
        mean,
        half_width,
        runs: opts.runs,
        hits: tally.hits,
        truncated: tally.truncated,
        confidence: opts.confidence,
        seed: opts.seed,
    }
}

/// Estimates `P(F target)` at `point` by jump-chain simulation. Truncated runs
/// count as misses and are reported separately.
pub fn simulate_reach(
    ctmc: &Ctmc,
    q: &ReachQuery,
    point: &Point,
    opts: &SimOptions,
) -> Result<SimEstimate, SolverError> {
    check_opts(opts)?;
    let target = resolve_target(ctmc, &q.target)?;
    let from = start_state(ctmc, q.from)?;
    let table = JumpTable::new(ctmc, point)?;
    let mut is_target = vec![false; ctmc.num_states()];
    for &t in &target {
        is_target[t] = true;
    }
    let tally = run_chunks(opts, |rng| {
        let mut s = from;
        for _ in 0..opts.horizon {
            if is_target[s] {
                return RunOutcome::Hit;
            }
            match table.step(s, rng) {
                Some((t, _dwell)) => s = t,
                None => return RunOutcome::Miss,
            }
        }
        if is_target[s] {
            RunOutcome::Hit
        } else {
            RunOutcome::Truncated
        }
    });
    Ok(estimate(tally, opts))
}

/// Estimates the probability of visiting an intermediate state and reaching
/// `fin` at or after it.
pub fn simulate_conditional(
    ctmc: &Ctmc,
    intermediate: &Target,
    fin: &Target,
    point: &Point,
    opts: &SimOptions,
) -> Result<SimEstimate, SolverError> {
    check_opts(opts)?;
    let inter = resolve_target(ctmc, intermediate)?;
    if inter.is_empty() {
        return Err(SolverError::EmptyIntermediate);
    }
    let fin_set = resolve_target(ctmc, fin)?;
    let table = JumpTable::new(ctmc, point)?;
    let n = ctmc.num_states();
    let mut is_inter = vec![false; n];
    let mut is_fin = vec![false; n];
    inter.iter().for_each(|&s| is_inter[s] = true);
    fin_set.iter().for_each(|&s| is_fin[s] = true);
    let tally = run_chunks(opts, |rng| {
        let mut s = ctmc.initial;
        let mut visited = false;
        for _ in 0..opts.horizon {
            visited |= is_inter[s];
            if visited && is_fin[s] {
                return RunOutcome::Hit;
            }
            match table.step(s, rng) {
                Some((t, _)) => s = t,
                None => return RunOutcome::Miss,
            }
        }
        visited |= is_inter[s];
        if visited && is_fin[s] {
            RunOutcome::Hit
        } else {
            RunOutcome::Truncated
        }
    });
    Ok(estimate(tally, opts))
}
