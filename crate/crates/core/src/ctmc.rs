//! Explicit continuous-time Markov chains with rational-function rates.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::fmt::Write;
use std::sync::Arc;

use num_traits::{Signed, ToPrimitive};
use thiserror::Error;

use crate::gcl::{self, CoreExpr, EvalError, Expr, ResolvedModel, SourceError, Value};
use crate::polyrat::{rational_sign, Domain, Point, PolyError, RationalFunction, SignCheck};

pub const DEFAULT_STATE_CAP: usize = 1_000_000;

#[derive(Debug, Error)]
pub enum CtmcError {
    #[error("state space exceeds the cap of {0} states")]
    StateCap(usize),
    #[error("negative rate {rate} in state {state} (command at {line}:{column}){witness}")]
    NegativeRate {
        state: String,
        rate: String,
        line: u32,
        column: u32,
        witness: String,
    },
    #[error("cannot evaluate command at {line}:{column} in state {state}: {source}")]
    Eval {
        state: String,
        line: u32,
        column: u32,
        source: EvalError,
    },
    #[error("update sets `{var}` to {value}, outside its range, in state {state}")]
    OutOfRange { var: String, value: String, state: String },
    #[error("invalid predicate: {0}")]
    Predicate(#[from] SourceError),
    #[error("predicate is not boolean in state {0}")]
    PredicateValue(String),
    #[error("cannot instantiate rate: {0}")]
    Instantiate(#[from] PolyError),
}

#[derive(Clone, Debug)]
pub struct BuildOptions {
    pub state_cap: usize,
    /// Parameter box for the rate sign check; unlisted parameters use `[0, 1]`.
    pub domain: Domain,
}

impl Default for BuildOptions {
    fn default() -> Self {
        BuildOptions {
            state_cap: DEFAULT_STATE_CAP,
            domain: Domain::new(),
        }
    }
}

/// A boolean expression over model variables.
#[derive(Clone, Debug)]
pub struct StatePredicate {
    pub text: String,
    expr: Expr,
}

impl StatePredicate {
    pub fn parse(text: &str) -> Result<Self, SourceError> {
        Ok(StatePredicate {
            text: text.to_string(),
            expr: gcl::parse_expression(text)?,
        })
    }

    pub fn always() -> Self {
        Self::parse("true").expect("literal predicate")
    }
}

/// The chain `(S, s0, R, L)`. Rates are per hour.
#[derive(Clone, Debug)]
pub struct Ctmc {
    pub var_names: Vec<String>,
    pub var_bool: Vec<bool>,
    pub states: Vec<Vec<i64>>,
    pub initial: usize,
    /// Row-sparse rate matrix without self-loops or zero entries.
    pub transitions: Vec<BTreeMap<usize, RationalFunction>>,
    pub labels: BTreeMap<String, BTreeSet<usize>>,
    pub parameters: Vec<String>,
    pub warnings: Vec<String>,
    model: Arc<ResolvedModel>,
}

/// Jump chain of a CTMC: `P(s, s') = R(s, s') / E(s)`; absorbing states loop.
#[derive(Clone, Debug)]
pub struct DiscreteChain {
    pub initial: usize,
    pub probs: Vec<BTreeMap<usize, RationalFunction>>,
}

struct Move {
    rate: RationalFunction,
    updates: Vec<(usize, Value)>,
}

struct Builder<'a> {
    model: &'a ResolvedModel,
    options: &'a BuildOptions,
    sign_cache: HashMap<RationalFunction, SignCheck>,
    warnings: BTreeSet<String>,
}

impl Builder<'_> {
    fn describe(&self, state: &[i64]) -> String {
        describe_state(self.model, state)
    }

    fn moves(&mut self, state: &[i64], cmd: &gcl::ResolvedCommand) -> Result<Vec<Move>, CtmcError> {
        let eval_err = |b: &Self, e: EvalError| CtmcError::Eval {
            state: b.describe(state),
            line: cmd.loc.line,
            column: cmd.loc.col,
            source: e,
        };
        if !cmd.guard.eval_bool(state).map_err(|e| eval_err(self, e))? {
            return Ok(Vec::new());
        }
        let mut out = Vec::new();
        for alt in &cmd.alternatives {
            let rate = alt
                .rate
                .eval_rate(state, &self.model.parameters)
                .map_err(|e| eval_err(self, e))?;
            self.check_sign(&rate, state, cmd)?;
            if rate.is_zero() {
                continue;
            }
            let updates = alt
                .updates
                .iter()
                .map(|(v, e)| Ok((*v, e.eval(state)?)))
                .collect::<Result<Vec<_>, EvalError>>()
                .map_err(|e| eval_err(self, e))?;
            out.push(Move { rate, updates });
        }
        Ok(out)
    }

    fn check_sign(
        &mut self,
        rate: &RationalFunction,
        state: &[i64],
        cmd: &gcl::ResolvedCommand,
    ) -> Result<(), CtmcError> {
        if let Some(c) = rate.as_constant() {
            if c.is_negative() {
                return Err(CtmcError::NegativeRate {
                    state: self.describe(state),
                    rate: rate.to_string(),
                    line: cmd.loc.line,
                    column: cmd.loc.col,
                    witness: String::new(),
                });
            }
            return Ok(());
        }
        let check = self
            .sign_cache
            .entry(rate.clone())
            .or_insert_with(|| rational_sign(rate, &self.options.domain))
            .clone();
        match check {
            SignCheck::Nonnegative => Ok(()),
            SignCheck::Negative(point) => Err(CtmcError::NegativeRate {
                state: self.describe(state),
                rate: rate.to_string(),
                line: cmd.loc.line,
                column: cmd.loc.col,
                witness: format!(" at {}", format_point(&point)),
            }),
            SignCheck::Unknown => {
                self.warnings.insert(format!(
                    "could not certify rate {rate} (command at {}:{}) nonnegative on the parameter domain",
                    cmd.loc.line, cmd.loc.col
                ));
                Ok(())
            }
        }
    }

    fn apply(&self, state: &[i64], updates: &[(usize, Value)]) -> Result<Vec<i64>, CtmcError> {
        let mut next = state.to_vec();
        for (v, value) in updates {
            let var = &self.model.variables[*v];
            let x = match value {
                Value::Bool(b) => Some(i64::from(*b)),
                Value::Num(n) if n.is_integer() => n.to_integer().to_i64(),
                Value::Num(_) => None,
            };
            match x {
                Some(x) if x >= var.lo && x <= var.hi => next[*v] = x,
                _ => {
                    return Err(CtmcError::OutOfRange {
                        var: var.name.clone(),
                        value: value.to_string(),
                        state: self.describe(state),
                    })
                }
            }
        }
        Ok(next)
    }
}

fn format_point(point: &Point) -> String {
    point
        .iter()
        .map(|(k, v)| format!("{k}={v}"))
        .collect::<Vec<_>>()
        .join(", ")
}

fn describe_state(model: &ResolvedModel, state: &[i64]) -> String {
    let parts: Vec<String> = model
        .variables
        .iter()
        .zip(state)
        .map(|(v, x)| {
            if v.boolean {
                format!("{}={}", v.name, *x != 0)
            } else {
                format!("{}={x}", v.name)
            }
        })
        .collect();
    format!("({})", parts.join(", "))
}

/// Explores the reachable state space breadth-first from the initial valuation.
pub fn build(model: &ResolvedModel) -> Result<Ctmc, CtmcError> {
    build_with(model, &BuildOptions::default())
}

pub fn build_with(model: &ResolvedModel, options: &BuildOptions) -> Result<Ctmc, CtmcError> {
    let mut builder = Builder {
        model,
        options,
        sign_cache: HashMap::new(),
        warnings: BTreeSet::new(),
    };
    // Action label -> participating modules -> their commands with that label.
    let mut actions: BTreeMap<&str, BTreeMap<usize, Vec<&gcl::ResolvedCommand>>> = BTreeMap::new();
    let mut local: Vec<&gcl::ResolvedCommand> = Vec::new();
    for (m, module) in model.modules.iter().enumerate() {
        for cmd in &module.commands {
            match &cmd.action {
                Some(a) => actions.entry(a).or_default().entry(m).or_default().push(cmd),
                None => local.push(cmd),
            }
        }
    }
    let mut ever_enabled: BTreeSet<&str> = BTreeSet::new();

    let init = model.initial_state();
    let mut index: HashMap<Vec<i64>, usize> = HashMap::new();
    let mut states = vec![init.clone()];
    index.insert(init, 0);
    let mut transitions: Vec<BTreeMap<usize, RationalFunction>> = Vec::new();
    let mut queue = VecDeque::from([0usize]);

    while let Some(s) = queue.pop_front() {
        let state = states[s].clone();
        let mut row: BTreeMap<usize, RationalFunction> = BTreeMap::new();
        let mut moves = Vec::new();
        for cmd in &local {
            moves.extend(builder.moves(&state, cmd)?);
        }
        for (name, parts) in &actions {
            let mut joint: Vec<Move> = vec![Move {
                rate: RationalFunction::one(),
                updates: Vec::new(),
            }];
            for cmds in parts.values() {
                let mut mine = Vec::new();
                for cmd in cmds {
                    mine.extend(builder.moves(&state, cmd)?);
                }
                let mut next = Vec::with_capacity(joint.len() * mine.len());
                for j in &joint {
                    for m in &mine {
                        let mut updates = j.updates.clone();
                        updates.extend(m.updates.iter().cloned());
                        next.push(Move {
                            rate: j.rate.mul(&m.rate),
                            updates,
                        });
                    }
                }
                joint = next;
                if joint.is_empty() {
                    break;
                }
            }
            if !joint.is_empty() {
                ever_enabled.insert(name);
            }
            moves.extend(joint);
        }
        for mv in moves {
            let target = builder.apply(&state, &mv.updates)?;
            if target == state {
                continue;
            }
            let t = match index.get(&target) {
                Some(&t) => t,
                None => {
                    if states.len() >= options.state_cap {
                        return Err(CtmcError::StateCap(options.state_cap));
                    }
                    let t = states.len();
                    index.insert(target.clone(), t);
                    states.push(target);
                    queue.push_back(t);
                    t
                }
            };
            match row.get_mut(&t) {
                Some(r) => *r = r.add(&mv.rate),
                None => {
                    row.insert(t, mv.rate);
                }
            }
        }
        row.retain(|_, r| !r.is_zero());
        transitions.push(row);
    }

    for name in actions.keys() {
        if !ever_enabled.contains(name) {
            builder
                .warnings
                .insert(format!("action `{name}` is never jointly enabled"));
        }
    }

    let mut labels = BTreeMap::new();
    labels.insert("init".to_string(), BTreeSet::from([0usize]));
    for (name, expr) in &model.labels {
        labels.insert(name.clone(), select(model, &states, expr)?);
    }
    Ok(Ctmc {
        var_names: model.variables.iter().map(|v| v.name.clone()).collect(),
        var_bool: model.variables.iter().map(|v| v.boolean).collect(),
        states,
        initial: 0,
        transitions,
        labels,
        parameters: model.parameters.clone(),
        warnings: builder.warnings.into_iter().collect(),
        model: Arc::new(model.clone()),
    })
}

fn select(model: &ResolvedModel, states: &[Vec<i64>], expr: &CoreExpr) -> Result<BTreeSet<usize>, CtmcError> {
    let mut out = BTreeSet::new();
    for (i, s) in states.iter().enumerate() {
        match expr.eval_bool(s) {
            Ok(true) => {
                out.insert(i);
            }
            Ok(false) => {}
            Err(_) => return Err(CtmcError::PredicateValue(describe_state(model, s))),
        }
    }
    Ok(out)
}

/// Parses, resolves and builds a model from source text.
pub fn build_source(text: &str) -> Result<Ctmc, Box<dyn std::error::Error + Send + Sync>> {
    let ast = gcl::parse(text)?;
    let model = gcl::resolve(&ast)?;
    Ok(build(&model)?)
}

impl Ctmc {
    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    pub fn num_transitions(&self) -> usize {
        self.transitions.iter().map(|r| r.len()).sum()
    }

    pub fn model(&self) -> &ResolvedModel {
        &self.model
    }

    pub fn rate(&self, from: usize, to: usize) -> RationalFunction {
        self.transitions[from]
            .get(&to)
            .cloned()
            .unwrap_or_else(RationalFunction::zero)
    }

    pub fn exit_rate(&self, s: usize) -> RationalFunction {
        self.transitions[s]
            .values()
            .fold(RationalFunction::zero(), |acc, r| acc.add(r))
    }

    pub fn describe_state(&self, s: usize) -> String {
        describe_state(&self.model, &self.states[s])
    }

    pub fn label(&self, name: &str) -> Option<&BTreeSet<usize>> {
        self.labels.get(name)
    }

    /// States satisfying `pred`.
    pub fn states_where(&self, pred: &StatePredicate) -> Result<BTreeSet<usize>, CtmcError> {
        let core = self.model.resolve_predicate(&pred.expr)?;
        select(&self.model, &self.states, &core)
    }

    /// Returns a copy with `name` mapped to exactly the states satisfying `pred`.
    pub fn label_states(&self, name: &str, pred: &StatePredicate) -> Result<Ctmc, CtmcError> {
        let set = self.states_where(pred)?;
        let mut out = self.clone();
        out.labels.insert(name.to_string(), set);
        Ok(out)
    }

    pub fn embedded_dtmc(&self) -> DiscreteChain {
        let probs = self
            .transitions
            .iter()
            .enumerate()
            .map(|(s, row)| {
                if row.is_empty() {
                    return BTreeMap::from([(s, RationalFunction::one())]);
                }
                let exit = self.exit_rate(s);
                row.iter()
                    .map(|(t, r)| {
                        let p = r.div(&exit).expect("exit rate of a state with transitions is nonzero");
                        (*t, p)
                    })
                    .collect()
            })
            .collect();
        DiscreteChain {
            initial: self.initial,
            probs,
        }
    }

    /// Substitutes parameter values. Parameters absent from `point` stay
    /// symbolic. Transitions whose rate becomes zero are dropped.
    pub fn instantiate(&self, point: &Point) -> Result<Ctmc, CtmcError> {
        let mut out = self.clone();
        for row in &mut out.transitions {
            let mut next = BTreeMap::new();
            for (t, r) in row.iter() {
                let v = r.substitute(point)?;
                if !v.is_zero() {
                    next.insert(*t, v);
                }
            }
            *row = next;
        }
        out.parameters.retain(|p| !point.contains_key(p));
        Ok(out)
    }

    /// Text export: state table, one `src dst rate` line per transition and
    /// the label table.
    pub fn export(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# states {}", self.num_states());
        for (i, s) in self.states.iter().enumerate() {
            let vals: Vec<String> = self
                .var_names
                .iter()
                .zip(s)
                .zip(&self.var_bool)
                .map(|((n, x), b)| {
                    if *b {
                        format!("{n}={}", *x != 0)
                    } else {
                        format!("{n}={x}")
                    }
                })
                .collect();
            let _ = writeln!(out, "{i} {}", vals.join(" "));
        }
        let _ = writeln!(out, "# transitions {}", self.num_transitions());
        for (i, row) in self.transitions.iter().enumerate() {
            for (t, r) in row {
                let _ = writeln!(out, "{i} {t} {r}");
            }
        }
        let _ = writeln!(out, "# labels {}", self.labels.len());
        for (name, set) in &self.labels {
            let ids: Vec<String> = set.iter().map(|s| s.to_string()).collect();
            let _ = writeln!(out, "\"{name}\" {}", ids.join(" "));
        }
        out
    }
}

impl DiscreteChain {
    pub fn num_states(&self) -> usize {
        self.probs.len()
    }

    pub fn row_sum(&self, s: usize) -> RationalFunction {
        self.probs[s]
            .values()
            .fold(RationalFunction::zero(), |acc, p| acc.add(p))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chain(src: &str) -> Ctmc {
        build_source(src).unwrap()
    }

    #[test]
    fn single_command() {
        let c = chain("ctmc const l = 3; module M x:[0..1] init 0; [] x=0 -> l:(x'=1); endmodule");
        assert_eq!(c.num_states(), 2);
        assert_eq!(c.rate(0, 1), RationalFunction::from_integer(3));
    }

    #[test]
    fn synchronized_product_rate() {
        let c = chain(
            "ctmc param lv;
             module A a:[0..1] init 0; [vote] a=0 -> lv:(a'=1); endmodule
             module B b:[0..1] init 0; [vote] b=0 -> 1:(b'=1); endmodule",
        );
        assert_eq!(c.num_states(), 2);
        assert_eq!(c.rate(0, 1), RationalFunction::var("lv"));
        assert_eq!(c.states[1], vec![1, 1]);
    }

    #[test]
    fn blocked_action_warns() {
        let c = chain(
            "ctmc
             module A a:[0..1] init 0; [go] a=1 -> 1:(a'=0); [] a=0 -> 1:(a'=1); endmodule
             module B b:[0..1] init 0; [go] b=1 -> 1:(b'=0); endmodule",
        );
        assert!(c.warnings.iter().any(|w| w.contains("`go`")));
    }

    #[test]
    fn negative_rate_is_rejected() {
        let err = build_source("ctmc module M x:[0..1] init 0; [] x=0 -> 0-1:(x'=1); endmodule").unwrap_err();
        assert!(err.to_string().contains("negative rate"), "{err}");
        let err = build_source("ctmc param p; module M x:[0..1] init 0; [] x=0 -> p-2:(x'=1); endmodule").unwrap_err();
        assert!(err.to_string().contains("negative rate"), "{err}");
    }

    #[test]
    fn state_cap() {
        let ast = gcl::parse("ctmc module M x:[0..100] init 0; [] x<100 -> 1:(x'=x+1); endmodule").unwrap();
        let model = gcl::resolve(&ast).unwrap();
        let opts = BuildOptions {
            state_cap: 10,
            ..Default::default()
        };
        assert!(matches!(build_with(&model, &opts), Err(CtmcError::StateCap(10))));
    }

    #[test]
    fn labels_and_predicates() {
        let c = chain("ctmc module M x:[0..2] init 0; [] x<2 -> 1:(x'=x+1); endmodule label \"end\" = x=2;");
        assert_eq!(c.label("end").unwrap(), &BTreeSet::from([2]));
        let all = c.label_states("all", &StatePredicate::always()).unwrap();
        assert_eq!(all.label("all").unwrap().len(), 3);
        assert!(c.states_where(&StatePredicate::parse("y=1").unwrap()).is_err());
    }

    #[test]
    fn embedded_chain() {
        let c = chain(
            "ctmc param a; param b;
             module M x:[0..2] init 0; [] x=0 -> a:(x'=1) + b:(x'=2); endmodule",
        );
        let d = c.embedded_dtmc();
        let sum = RationalFunction::var("a").add(&RationalFunction::var("b"));
        assert_eq!(d.probs[0][&1], RationalFunction::var("a").div(&sum).unwrap());
        assert_eq!(d.probs[0][&2], RationalFunction::var("b").div(&sum).unwrap());
        assert!(d.probs[1][&1].is_one());
        for s in 0..d.num_states() {
            assert!(d.row_sum(s).equivalent(&RationalFunction::one()));
        }
    }

    #[test]
    fn export_lists_transitions() {
        let c = chain("ctmc module M x:[0..1] init 0; [] x=0 -> 1/2:(x'=1); endmodule");
        let text = c.export();
        assert!(text.contains("0 1 (1)/(2)"), "{text}");
        assert!(text.contains("0 x=0"));
        assert!(text.contains("\"init\" 0"));
    }
}
