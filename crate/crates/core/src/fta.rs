//! Static fault trees: minimal cut sets and exact top-event probability
//! under independent basic events.
//!
//! File format, one node per line (`#` starts a comment):
//!
//! ```text
//! basic SP_c p=1/25
//! gate S AND SP_c,SP_n
//! top S
//! ```

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write;

use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::polyrat::parse_rational;

pub const MAX_EXACT_EVENTS: usize = 25;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GateKind {
    And,
    Or,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Node {
    Basic { probability: BigRational },
    Gate { kind: GateKind, children: Vec<String> },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FaultTree {
    /// Nodes in declaration order.
    nodes: Vec<(String, Node)>,
    index: BTreeMap<String, usize>,
    top: String,
}

pub type CutSet = BTreeSet<String>;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum FtaError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("node `{0}` is declared more than once")]
    Duplicate(String),
    #[error("`{parent}` refers to undeclared node `{child}`")]
    UnknownChild { parent: String, child: String },
    #[error("top event `{0}` is not declared")]
    UnknownTop(String),
    #[error("no top event declared")]
    MissingTop,
    #[error("gate `{0}` has no children")]
    EmptyGate(String),
    #[error("cycle through `{0}`")]
    Cycle(String),
    #[error("probability of `{0}` is outside [0, 1]")]
    Probability(String),
    #[error("{count} basic events exceed the exact limit of {MAX_EXACT_EVENTS}; rare-event upper bound is {bound}")]
    TooManyEvents { count: usize, bound: BigRational },
}

impl FaultTree {
    pub fn new(nodes: Vec<(String, Node)>, top: &str) -> Result<Self, FtaError> {
        let mut index = BTreeMap::new();
        for (i, (name, node)) in nodes.iter().enumerate() {
            if index.insert(name.clone(), i).is_some() {
                return Err(FtaError::Duplicate(name.clone()));
            }
            match node {
                Node::Basic { probability } => {
                    if probability.is_negative() || *probability > BigRational::one() {
                        return Err(FtaError::Probability(name.clone()));
                    }
                }
                Node::Gate { children, .. } if children.is_empty() => return Err(FtaError::EmptyGate(name.clone())),
                Node::Gate { .. } => {}
            }
        }
        for (name, node) in &nodes {
            if let Node::Gate { children, .. } = node {
                if let Some(c) = children.iter().find(|c| !index.contains_key(*c)) {
                    return Err(FtaError::UnknownChild {
                        parent: name.clone(),
                        child: c.clone(),
                    });
                }
            }
        }
        if !index.contains_key(top) {
            return Err(FtaError::UnknownTop(top.to_string()));
        }
        let tree = FaultTree {
            nodes,
            index,
            top: top.to_string(),
        };
        tree.check_acyclic()?;
        Ok(tree)
    }

    fn check_acyclic(&self) -> Result<(), FtaError> {
        // 0 = unvisited, 1 = on path, 2 = done
        let mut state = vec![0u8; self.nodes.len()];
        fn visit(t: &FaultTree, i: usize, state: &mut [u8]) -> Result<(), FtaError> {
            match state[i] {
                1 => return Err(FtaError::Cycle(t.nodes[i].0.clone())),
                2 => return Ok(()),
                _ => {}
            }
            state[i] = 1;
            if let Node::Gate { children, .. } = &t.nodes[i].1 {
                for c in children {
                    visit(t, t.index[c], state)?;
                }
            }
            state[i] = 2;
            Ok(())
        }
        for i in 0..self.nodes.len() {
            visit(self, i, &mut state)?;
        }
        Ok(())
    }

    pub fn parse(text: &str) -> Result<Self, FtaError> {
        let mut nodes = Vec::new();
        let mut top = None;
        for (ln, raw) in text.lines().enumerate() {
            let line = ln + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let syntax = |message: &str| FtaError::Syntax {
                line,
                message: message.to_string(),
            };
            let fields: Vec<&str> = content.split_whitespace().collect();
            match fields.as_slice() {
                ["basic", name, prob] => {
                    let p = prob
                        .strip_prefix("p=")
                        .and_then(parse_rational)
                        .ok_or_else(|| syntax("expected p=RATIONAL"))?;
                    nodes.push((name.to_string(), Node::Basic { probability: p }));
                }
                ["gate", name, kind, children] => {
                    let kind = match kind.to_ascii_uppercase().as_str() {
                        "AND" => GateKind::And,
                        "OR" => GateKind::Or,
                        _ => return Err(syntax("gate kind must be AND or OR")),
                    };
                    let children: Vec<String> = children
                        .split(',')
                        .filter(|c| !c.is_empty())
                        .map(str::to_string)
                        .collect();
                    nodes.push((name.to_string(), Node::Gate { kind, children }));
                }
                ["top", name] => {
                    if top.replace(name.to_string()).is_some() {
                        return Err(syntax("top event declared twice"));
                    }
                }
                _ => return Err(syntax("expected `basic`, `gate` or `top` record")),
            }
        }
        let top = top.ok_or(FtaError::MissingTop)?;
        FaultTree::new(nodes, &top)
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for (name, node) in &self.nodes {
            match node {
                Node::Basic { probability } => {
                    let _ = writeln!(out, "basic {name} p={probability}");
                }
                Node::Gate { kind, children } => {
                    let k = match kind {
                        GateKind::And => "AND",
                        GateKind::Or => "OR",
                    };
                    let _ = writeln!(out, "gate {name} {k} {}", children.join(","));
                }
            }
        }
        let _ = writeln!(out, "top {}", self.top);
        out
    }

    pub fn top(&self) -> &str {
        &self.top
    }

    pub fn node(&self, name: &str) -> Option<&Node> {
        self.index.get(name).map(|&i| &self.nodes[i].1)
    }

    /// Basic events below the top event, in declaration order.
    pub fn basic_events(&self) -> Vec<&str> {
        let mut reach = vec![false; self.nodes.len()];
        let mut stack = vec![self.index[&self.top]];
        while let Some(i) = stack.pop() {
            if std::mem::replace(&mut reach[i], true) {
                continue;
            }
            if let Node::Gate { children, .. } = &self.nodes[i].1 {
                stack.extend(children.iter().map(|c| self.index[c]));
            }
        }
        self.nodes
            .iter()
            .enumerate()
            .filter(|(i, (_, n))| reach[*i] && matches!(n, Node::Basic { .. }))
            .map(|(_, (name, _))| name.as_str())
            .collect()
    }

    pub fn probability_of(&self, event: &str) -> Option<&BigRational> {
        match self.node(event)? {
            Node::Basic { probability } => Some(probability),
            Node::Gate { .. } => None,
        }
    }

    /// Returns a copy with a basic event's probability replaced.
    pub fn with_probability(&self, event: &str, p: BigRational) -> Result<Self, FtaError> {
        let mut nodes = self.nodes.clone();
        match nodes.iter_mut().find(|(n, _)| n == event) {
            Some((_, node @ Node::Basic { .. })) => *node = Node::Basic { probability: p },
            _ => return Err(FtaError::UnknownTop(event.to_string())),
        }
        FaultTree::new(nodes, &self.top)
    }

    /// Whether the top event occurs when exactly the events in `failed` occur.
    pub fn occurs(&self, failed: &BTreeSet<String>) -> bool {
        fn eval(t: &FaultTree, name: &str, failed: &BTreeSet<String>) -> bool {
            match t.node(name).expect("validated reference") {
                Node::Basic { .. } => failed.contains(name),
                Node::Gate {
                    kind: GateKind::And,
                    children,
                } => children.iter().all(|c| eval(t, c, failed)),
                Node::Gate {
                    kind: GateKind::Or,
                    children,
                } => children.iter().any(|c| eval(t, c, failed)),
            }
        }
        eval(self, &self.top, failed)
    }

    fn cut_sets_idx(&self) -> Vec<BTreeSet<usize>> {
        let mut memo: HashMap<usize, Vec<BTreeSet<usize>>> = HashMap::new();
        fn expand(t: &FaultTree, i: usize, memo: &mut HashMap<usize, Vec<BTreeSet<usize>>>) -> Vec<BTreeSet<usize>> {
            if let Some(v) = memo.get(&i) {
                return v.clone();
            }
            let out = match &t.nodes[i].1 {
                Node::Basic { .. } => vec![BTreeSet::from([i])],
                Node::Gate {
                    kind: GateKind::Or,
                    children,
                } => {
                    let mut all = Vec::new();
                    for c in children {
                        all.extend(expand(t, t.index[c], memo));
                    }
                    minimize(all)
                }
                Node::Gate {
                    kind: GateKind::And,
                    children,
                } => {
                    let mut acc = vec![BTreeSet::new()];
                    for c in children {
                        let sub = expand(t, t.index[c], memo);
                        let mut next = Vec::with_capacity(acc.len() * sub.len());
                        for a in &acc {
                            for b in &sub {
                                next.push(a.union(b).copied().collect());
                            }
                        }
                        acc = minimize(next);
                    }
                    acc
                }
            };
            memo.insert(i, out.clone());
            out
        }
        expand(self, self.index[&self.top], &mut memo)
    }

    /// Minimal cut sets of the top event, smallest first.
    pub fn minimal_cut_sets(&self) -> Vec<CutSet> {
        self.cut_sets_idx()
            .into_iter()
            .map(|s| s.into_iter().map(|i| self.nodes[i].0.clone()).collect())
            .collect()
    }

    /// Sum over cut sets of the product of their probabilities.
    pub fn rare_event_bound(&self) -> BigRational {
        self.cut_sets_idx()
            .iter()
            .map(|s| s.iter().map(|&i| self.prob(i)).product::<BigRational>())
            .sum()
    }

    fn prob(&self, i: usize) -> BigRational {
        match &self.nodes[i].1 {
            Node::Basic { probability } => probability.clone(),
            Node::Gate { .. } => unreachable!("cut sets hold basic events"),
        }
    }

    /// Exact probability of the top event with independent basic events, by
    /// inclusion-exclusion over the minimal cut sets.
    pub fn top_probability(&self) -> Result<BigRational, FtaError> {
        let count = self.basic_events().len();
        if count > MAX_EXACT_EVENTS {
            return Err(FtaError::TooManyEvents {
                count,
                bound: self.rare_event_bound(),
            });
        }
        // Certain events drop out of cut sets; impossible ones void them.
        let mut family = Vec::new();
        for set in self.cut_sets_idx() {
            if set.iter().any(|&i| self.prob(i).is_zero()) {
                continue;
            }
            family.push(set.into_iter().filter(|&i| !self.prob(i).is_one()).collect());
        }
        let probs: Vec<BigRational> = (0..self.nodes.len())
            .map(|i| match &self.nodes[i].1 {
                Node::Basic { probability } => probability.clone(),
                Node::Gate { .. } => BigRational::zero(),
            })
            .collect();
        let mut memo = HashMap::new();
        Ok(union_probability(minimize(family), &probs, &mut memo))
    }
}

/// Drops supersets and duplicates.
fn minimize(mut sets: Vec<BTreeSet<usize>>) -> Vec<BTreeSet<usize>> {
    sets.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
    let mut out: Vec<BTreeSet<usize>> = Vec::new();
    for s in sets {
        if !out.iter().any(|k| k.is_subset(&s)) {
            out.push(s);
        }
    }
    out
}

/// `P(A_1 ∪ … ∪ A_n)` where `A_i` is "all events of set i occur", using
/// `P(∪_{≤n}) = P(∪_{<n}) + P(A_n) − P(A_n)·P(∪_{<n} (C_i ∖ C_n))`.
fn union_probability(
    family: Vec<BTreeSet<usize>>,
    probs: &[BigRational],
    memo: &mut HashMap<Vec<BTreeSet<usize>>, BigRational>,
) -> BigRational {
    if family.is_empty() {
        return BigRational::zero();
    }
    if family.iter().any(|s| s.is_empty()) {
        return BigRational::one();
    }
    if let Some(v) = memo.get(&family) {
        return v.clone();
    }
    let mut rest = family.clone();
    let last = rest.pop().expect("nonempty");
    let p_last: BigRational = last.iter().map(|&i| probs[i].clone()).product();
    let before = union_probability(rest.clone(), probs, memo);
    let reduced = minimize(rest.iter().map(|s| s.difference(&last).copied().collect()).collect());
    let overlap = union_probability(reduced, probs, memo);
    let value = &before + &p_last - &p_last * overlap;
    memo.insert(family, value.clone());
    value
}

/// The example 2oo2 object-detection tree shipped with the crate.
pub const BUNDLED_TREE: &str = include_str!("../models/od_fault_tree.ft");

pub fn bundled_tree() -> FaultTree {
    FaultTree::parse(BUNDLED_TREE).expect("bundled tree is valid")
}
