use std::collections::BTreeMap;
use std::fmt;

use num_rational::BigRational;
use num_traits::Zero;
use thiserror::Error;

use super::ast::*;
use super::error::{ErrorKind, SourceError};
use super::validate::{self, build_scope, Scope, Symbol};
use crate::polyrat::RationalFunction;

/// Runtime value of a core expression.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Value {
    Num(BigRational),
    Bool(bool),
}

impl Value {
    pub fn as_num(&self) -> Option<&BigRational> {
        match self {
            Value::Num(n) => Some(n),
            Value::Bool(_) => None,
        }
    }

    pub fn as_bool(&self) -> Option<bool> {
        match self {
            Value::Bool(b) => Some(*b),
            Value::Num(_) => None,
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Num(n) => f.write_str(&super::render::number(n)),
            Value::Bool(b) => write!(f, "{b}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("division by zero")]
    DivisionByZero,
    #[error("expression depends on parameter `{0}` where a concrete value is required")]
    Parameter(String),
    #[error("min/max applied to a parametric expression")]
    ParametricMinMax,
    #[error("ill-typed expression")]
    Type,
}

/// Expression over state variables and parameters only: constants are folded
/// and formulas inlined.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CoreExpr {
    Lit(Value),
    /// State variable by index; `boolean` variables are stored as 0/1.
    Var {
        index: usize,
        boolean: bool,
    },
    Param(usize),
    Unary(UnOp, Box<CoreExpr>),
    Binary(BinOp, Box<CoreExpr>, Box<CoreExpr>),
    Call(Func, Vec<CoreExpr>),
}

fn unary(op: UnOp, v: Value) -> Result<Value, EvalError> {
    match (op, v) {
        (UnOp::Neg, Value::Num(n)) => Ok(Value::Num(-n)),
        (UnOp::Not, Value::Bool(b)) => Ok(Value::Bool(!b)),
        _ => Err(EvalError::Type),
    }
}

fn binary(op: BinOp, a: Value, b: Value) -> Result<Value, EvalError> {
    use Value::*;
    Ok(match (op, a, b) {
        (BinOp::Or, Bool(x), Bool(y)) => Bool(x || y),
        (BinOp::And, Bool(x), Bool(y)) => Bool(x && y),
        (BinOp::Eq, x, y) => Bool(x == y),
        (BinOp::Neq, x, y) => Bool(x != y),
        (BinOp::Lt, Num(x), Num(y)) => Bool(x < y),
        (BinOp::Le, Num(x), Num(y)) => Bool(x <= y),
        (BinOp::Gt, Num(x), Num(y)) => Bool(x > y),
        (BinOp::Ge, Num(x), Num(y)) => Bool(x >= y),
        (BinOp::Add, Num(x), Num(y)) => Num(x + y),
        (BinOp::Sub, Num(x), Num(y)) => Num(x - y),
        (BinOp::Mul, Num(x), Num(y)) => Num(x * y),
        (BinOp::Div, Num(x), Num(y)) => {
            if y.is_zero() {
                return Err(EvalError::DivisionByZero);
            }
            Num(x / y)
        }
        _ => return Err(EvalError::Type),
    })
}

fn call(f: Func, args: Vec<Value>) -> Result<Value, EvalError> {
    let mut nums = args.into_iter().map(|v| match v {
        Value::Num(n) => Ok(n),
        Value::Bool(_) => Err(EvalError::Type),
    });
    let mut best = nums.next().ok_or(EvalError::Type)??;
    for n in nums {
        let n = n?;
        if (f == Func::Min && n < best) || (f == Func::Max && n > best) {
            best = n;
        }
    }
    Ok(Value::Num(best))
}

impl CoreExpr {
    /// Evaluates a parameter-free expression in a state.
    pub fn eval(&self, state: &[i64]) -> Result<Value, EvalError> {
        match self {
            CoreExpr::Lit(v) => Ok(v.clone()),
            CoreExpr::Var { index, boolean } => {
                let x = state[*index];
                Ok(if *boolean {
                    Value::Bool(x != 0)
                } else {
                    Value::Num(BigRational::from_integer(x.into()))
                })
            }
            CoreExpr::Param(i) => Err(EvalError::Parameter(format!("#{i}"))),
            CoreExpr::Unary(op, a) => unary(*op, a.eval(state)?),
            CoreExpr::Binary(op, a, b) => binary(*op, a.eval(state)?, b.eval(state)?),
            CoreExpr::Call(f, args) => call(*f, args.iter().map(|a| a.eval(state)).collect::<Result<_, _>>()?),
        }
    }

    pub fn eval_bool(&self, state: &[i64]) -> Result<bool, EvalError> {
        self.eval(state)?.as_bool().ok_or(EvalError::Type)
    }

    /// Evaluates a numeric expression, keeping parameters symbolic.
    pub fn eval_rate(&self, state: &[i64], params: &[String]) -> Result<RationalFunction, EvalError> {
        if !self.has_params() {
            let v = self.eval(state)?;
            return v
                .as_num()
                .cloned()
                .map(RationalFunction::constant)
                .ok_or(EvalError::Type);
        }
        match self {
            CoreExpr::Param(i) => Ok(RationalFunction::var(&params[*i])),
            CoreExpr::Unary(UnOp::Neg, a) => Ok(a.eval_rate(state, params)?.neg()),
            CoreExpr::Binary(op, a, b) => {
                let x = a.eval_rate(state, params)?;
                let y = b.eval_rate(state, params)?;
                match op {
                    BinOp::Add => Ok(x.add(&y)),
                    BinOp::Sub => Ok(x.sub(&y)),
                    BinOp::Mul => Ok(x.mul(&y)),
                    BinOp::Div => x.div(&y).map_err(|_| EvalError::DivisionByZero),
                    _ => Err(EvalError::Type),
                }
            }
            CoreExpr::Call(..) => Err(EvalError::ParametricMinMax),
            _ => Err(EvalError::Type),
        }
    }

    pub fn has_params(&self) -> bool {
        match self {
            CoreExpr::Param(_) => true,
            CoreExpr::Lit(_) | CoreExpr::Var { .. } => false,
            CoreExpr::Unary(_, a) => a.has_params(),
            CoreExpr::Binary(_, a, b) => a.has_params() || b.has_params(),
            CoreExpr::Call(_, args) => args.iter().any(|a| a.has_params()),
        }
    }

    /// Indices of the state variables read by the expression.
    pub fn variables(&self, out: &mut Vec<usize>) {
        match self {
            CoreExpr::Var { index, .. } => out.push(*index),
            CoreExpr::Lit(_) | CoreExpr::Param(_) => {}
            CoreExpr::Unary(_, a) => a.variables(out),
            CoreExpr::Binary(_, a, b) => {
                a.variables(out);
                b.variables(out);
            }
            CoreExpr::Call(_, args) => args.iter().for_each(|a| a.variables(out)),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ResolvedVar {
    pub name: String,
    pub module: usize,
    pub lo: i64,
    pub hi: i64,
    pub init: i64,
    pub boolean: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ResolvedAlternative {
    pub rate: CoreExpr,
    pub updates: Vec<(usize, CoreExpr)>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ResolvedCommand {
    pub action: Option<String>,
    pub guard: CoreExpr,
    pub alternatives: Vec<ResolvedAlternative>,
    pub loc: Loc,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ResolvedModule {
    pub name: String,
    pub commands: Vec<ResolvedCommand>,
}

/// A model reduced to core expressions, ready for state-space construction.
#[derive(Clone, Debug)]
pub struct ResolvedModel {
    pub variables: Vec<ResolvedVar>,
    pub parameters: Vec<String>,
    pub constants: Vec<(String, BigRational)>,
    pub modules: Vec<ResolvedModule>,
    pub labels: Vec<(String, CoreExpr)>,
    ast: ModelAst,
}

impl ResolvedModel {
    pub fn ast(&self) -> &ModelAst {
        &self.ast
    }

    pub fn initial_state(&self) -> Vec<i64> {
        self.variables.iter().map(|v| v.init).collect()
    }

    /// Resolves a standalone boolean predicate in this model's scope.
    pub fn resolve_predicate(&self, expr: &Expr) -> Result<CoreExpr, SourceError> {
        validate::check_predicate(&self.ast, expr)?;
        let scope = build_scope(&self.ast)?;
        let mut r = Resolver::new(&self.ast, &scope);
        r.expr(expr)
    }
}

struct Resolver<'a> {
    ast: &'a ModelAst,
    scope: &'a Scope,
    var_index: BTreeMap<&'a str, (usize, bool)>,
    param_index: BTreeMap<&'a str, usize>,
    constants: BTreeMap<String, CoreExpr>,
    formulas: BTreeMap<String, CoreExpr>,
    depth: usize,
}

const MAX_DEPTH: usize = 10_000;

impl<'a> Resolver<'a> {
    fn new(ast: &'a ModelAst, scope: &'a Scope) -> Self {
        let mut var_index = BTreeMap::new();
        for m in &ast.modules {
            for v in &m.variables {
                let idx = var_index.len();
                var_index.insert(v.name.as_str(), (idx, v.ty == VarType::Bool));
            }
        }
        let param_index = ast
            .parameters
            .iter()
            .enumerate()
            .map(|(i, p)| (p.name.as_str(), i))
            .collect();
        Resolver {
            ast,
            scope,
            var_index,
            param_index,
            constants: BTreeMap::new(),
            formulas: BTreeMap::new(),
            depth: 0,
        }
    }

    fn fold_error(loc: Loc, e: EvalError) -> SourceError {
        SourceError::new(ErrorKind::Range, loc, format!("constant folding failed: {e}"))
    }

    fn ident(&mut self, name: &str, loc: Loc) -> Result<CoreExpr, SourceError> {
        let Some(sym) = self.scope.symbols.get(name).copied() else {
            return Err(SourceError::new(
                ErrorKind::NameResolution,
                loc,
                format!("undeclared identifier `{name}`"),
            ));
        };
        self.depth += 1;
        if self.depth > MAX_DEPTH {
            return Err(SourceError::new(
                ErrorKind::NameResolution,
                loc,
                format!("`{name}` is defined in terms of itself"),
            ));
        }
        let out = match sym {
            Symbol::Var { .. } => {
                let (index, boolean) = self.var_index[name];
                Ok(CoreExpr::Var { index, boolean })
            }
            Symbol::Param => Ok(CoreExpr::Param(self.param_index[name])),
            Symbol::Const(i) => {
                if let Some(e) = self.constants.get(name) {
                    Ok(e.clone())
                } else {
                    let c = &self.ast.constants[i];
                    let e = self.expr(&c.value)?;
                    if !matches!(e, CoreExpr::Lit(_)) {
                        return Err(SourceError::new(
                            ErrorKind::Type,
                            c.value.loc,
                            format!("constant `{name}` is not a constant expression"),
                        ));
                    }
                    self.constants.insert(name.to_string(), e.clone());
                    Ok(e)
                }
            }
            Symbol::Formula(i) => {
                if let Some(e) = self.formulas.get(name) {
                    Ok(e.clone())
                } else {
                    let e = self.expr(&self.ast.formulas[i].expr)?;
                    self.formulas.insert(name.to_string(), e.clone());
                    Ok(e)
                }
            }
        };
        self.depth -= 1;
        out
    }

    fn expr(&mut self, e: &Expr) -> Result<CoreExpr, SourceError> {
        Ok(match &e.kind {
            ExprKind::Num(n) => CoreExpr::Lit(Value::Num(n.clone())),
            ExprKind::Bool(b) => CoreExpr::Lit(Value::Bool(*b)),
            ExprKind::Ident(name) => self.ident(name, e.loc)?,
            ExprKind::Unary(op, a) => match self.expr(a)? {
                CoreExpr::Lit(v) => CoreExpr::Lit(unary(*op, v).map_err(|x| Self::fold_error(e.loc, x))?),
                a => CoreExpr::Unary(*op, Box::new(a)),
            },
            ExprKind::Binary(op, a, b) => match (self.expr(a)?, self.expr(b)?) {
                (CoreExpr::Lit(x), CoreExpr::Lit(y)) => {
                    CoreExpr::Lit(binary(*op, x, y).map_err(|x| Self::fold_error(e.loc, x))?)
                }
                (x, y) => CoreExpr::Binary(*op, Box::new(x), Box::new(y)),
            },
            ExprKind::Call(f, args) => {
                let args = args.iter().map(|a| self.expr(a)).collect::<Result<Vec<_>, _>>()?;
                if args.iter().all(|a| matches!(a, CoreExpr::Lit(_))) {
                    let vals = args
                        .into_iter()
                        .map(|a| match a {
                            CoreExpr::Lit(v) => v,
                            _ => unreachable!(),
                        })
                        .collect();
                    CoreExpr::Lit(call(*f, vals).map_err(|x| Self::fold_error(e.loc, x))?)
                } else {
                    CoreExpr::Call(*f, args)
                }
            }
        })
    }
}

/// Folds constants, inlines formulas and indexes variables and parameters.
pub fn resolve(ast: &ModelAst) -> Result<ResolvedModel, SourceError> {
    validate::validate(ast)?;
    let scope = build_scope(ast)?;
    let mut r = Resolver::new(ast, &scope);
    let mut constants = Vec::new();
    for c in &ast.constants {
        match r.ident(&c.name, c.loc)? {
            CoreExpr::Lit(Value::Num(n)) => constants.push((c.name.clone(), n)),
            _ => {
                return Err(SourceError::new(
                    ErrorKind::Type,
                    c.loc,
                    format!("constant `{}` must be numeric", c.name),
                ))
            }
        }
    }
    let mut variables = Vec::new();
    for (m, module) in ast.modules.iter().enumerate() {
        for v in &module.variables {
            let (lo, hi, boolean) = match v.ty {
                VarType::Range { lo, hi } => (lo, hi, false),
                VarType::Bool => (0, 1, true),
            };
            let init = match v.init {
                InitValue::Int(i) => i,
                InitValue::Bool(b) => i64::from(b),
            };
            variables.push(ResolvedVar {
                name: v.name.clone(),
                module: m,
                lo,
                hi,
                init,
                boolean,
            });
        }
    }
    let mut modules = Vec::new();
    for module in &ast.modules {
        let mut commands = Vec::new();
        for cmd in &module.commands {
            let guard = r.expr(&cmd.guard)?;
            let mut alternatives = Vec::new();
            for alt in &cmd.alternatives {
                let rate = r.expr(&alt.rate)?;
                let updates = alt
                    .updates
                    .iter()
                    .map(|a| Ok((r.var_index[a.var.as_str()].0, r.expr(&a.value)?)))
                    .collect::<Result<Vec<_>, SourceError>>()?;
                alternatives.push(ResolvedAlternative { rate, updates });
            }
            commands.push(ResolvedCommand {
                action: cmd.action.clone(),
                guard,
                alternatives,
                loc: cmd.loc,
            });
        }
        modules.push(ResolvedModule {
            name: module.name.clone(),
            commands,
        });
    }
    let labels = ast
        .labels
        .iter()
        .map(|l| Ok((l.name.clone(), r.expr(&l.expr)?)))
        .collect::<Result<Vec<_>, SourceError>>()?;
    Ok(ResolvedModel {
        variables,
        parameters: ast.parameters.iter().map(|p| p.name.clone()).collect(),
        constants,
        modules,
        labels,
        ast: ast.clone(),
    })
}
