//! Semantic checks run after parsing: name resolution, definition cycles and
//! typing. Checks run in that order and the first error wins.

use std::collections::{BTreeMap, BTreeSet};

use super::ast::*;
use super::error::{ErrorKind, SourceError};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Ty {
    Int,
    Bool,
}

impl Ty {
    fn name(self) -> &'static str {
        match self {
            Ty::Int => "numeric",
            Ty::Bool => "boolean",
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub(crate) enum Symbol {
    Const(usize),
    Param,
    Formula(usize),
    Var { module: usize, ty: Ty },
}

pub(crate) struct Scope {
    pub symbols: BTreeMap<String, Symbol>,
}

fn err(kind: ErrorKind, loc: Loc, msg: impl Into<String>) -> SourceError {
    SourceError::new(kind, loc, msg)
}

pub(crate) fn build_scope(ast: &ModelAst) -> Result<Scope, SourceError> {
    let mut decls: Vec<(&str, Loc, Symbol)> = Vec::new();
    for (i, c) in ast.constants.iter().enumerate() {
        decls.push((&c.name, c.loc, Symbol::Const(i)));
    }
    for p in &ast.parameters {
        decls.push((&p.name, p.loc, Symbol::Param));
    }
    for (i, f) in ast.formulas.iter().enumerate() {
        decls.push((&f.name, f.loc, Symbol::Formula(i)));
    }
    for (m, module) in ast.modules.iter().enumerate() {
        for v in &module.variables {
            let ty = match v.ty {
                VarType::Bool => Ty::Bool,
                VarType::Range { .. } => Ty::Int,
            };
            decls.push((&v.name, v.loc, Symbol::Var { module: m, ty }));
        }
    }
    decls.sort_by_key(|d| d.1.pos());
    let mut symbols = BTreeMap::new();
    for (name, loc, sym) in decls {
        if symbols.insert(name.to_string(), sym).is_some() {
            return Err(err(
                ErrorKind::NameResolution,
                loc,
                format!("`{name}` is declared more than once"),
            ));
        }
    }
    let mut module_names = BTreeSet::new();
    for m in &ast.modules {
        if !module_names.insert(&m.name) {
            return Err(err(
                ErrorKind::NameResolution,
                m.loc,
                format!("module `{}` is defined more than once", m.name),
            ));
        }
    }
    let mut label_names = BTreeSet::new();
    for l in &ast.labels {
        if !label_names.insert(&l.name) {
            return Err(err(
                ErrorKind::NameResolution,
                l.loc,
                format!("label \"{}\" is defined more than once", l.name),
            ));
        }
    }
    Ok(Scope { symbols })
}

fn check_names(expr: &Expr, scope: &Scope) -> Result<(), SourceError> {
    for (name, loc) in expr.identifiers() {
        if !scope.symbols.contains_key(name) {
            return Err(err(
                ErrorKind::NameResolution,
                loc,
                format!("undeclared identifier `{name}`"),
            ));
        }
    }
    Ok(())
}

fn check_all_names(ast: &ModelAst, scope: &Scope) -> Result<(), SourceError> {
    for c in &ast.constants {
        check_names(&c.value, scope)?;
    }
    for f in &ast.formulas {
        check_names(&f.expr, scope)?;
    }
    for (m, module) in ast.modules.iter().enumerate() {
        for cmd in &module.commands {
            check_names(&cmd.guard, scope)?;
            for alt in &cmd.alternatives {
                check_names(&alt.rate, scope)?;
                let mut assigned = BTreeSet::new();
                for a in &alt.updates {
                    match scope.symbols.get(&a.var) {
                        Some(Symbol::Var { module, .. }) if *module == m => {}
                        Some(Symbol::Var { module, .. }) => {
                            return Err(err(
                                ErrorKind::NameResolution,
                                a.loc,
                                format!(
                                    "`{}` belongs to module `{}`, not `{}`",
                                    a.var,
                                    ast.modules[*module].name,
                                    module_name(ast, m)
                                ),
                            ))
                        }
                        Some(_) => {
                            return Err(err(
                                ErrorKind::NameResolution,
                                a.loc,
                                format!("`{}` is not a variable", a.var),
                            ))
                        }
                        None => {
                            return Err(err(
                                ErrorKind::NameResolution,
                                a.loc,
                                format!("undeclared variable `{}`", a.var),
                            ))
                        }
                    }
                    if !assigned.insert(&a.var) {
                        return Err(err(
                            ErrorKind::NameResolution,
                            a.loc,
                            format!("`{}` is assigned twice in one update", a.var),
                        ));
                    }
                    check_names(&a.value, scope)?;
                }
            }
        }
    }
    for l in &ast.labels {
        check_names(&l.expr, scope)?;
    }
    Ok(())
}

fn module_name(ast: &ModelAst, m: usize) -> &str {
    &ast.modules[m].name
}

/// Rejects cyclic definitions among constants and formulas, reporting the
/// first declaration on a cycle.
fn check_cycles(ast: &ModelAst, scope: &Scope) -> Result<(), SourceError> {
    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        Fresh,
        Active,
        Done,
    }
    // Nodes: constants first, then formulas.
    let nc = ast.constants.len();
    let n = nc + ast.formulas.len();
    let node_of = |name: &str| match scope.symbols.get(name) {
        Some(Symbol::Const(i)) => Some(*i),
        Some(Symbol::Formula(i)) => Some(nc + *i),
        _ => None,
    };
    let deps: Vec<Vec<usize>> = (0..n)
        .map(|i| {
            let e = if i < nc {
                &ast.constants[i].value
            } else {
                &ast.formulas[i - nc].expr
            };
            e.identifiers()
                .into_iter()
                .filter_map(|(name, _)| node_of(name))
                .collect()
        })
        .collect();
    let decl = |i: usize| -> (&str, Loc) {
        if i < nc {
            (&ast.constants[i].name, ast.constants[i].loc)
        } else {
            (&ast.formulas[i - nc].name, ast.formulas[i - nc].loc)
        }
    };
    let mut mark = vec![Mark::Fresh; n];
    for root in 0..n {
        if mark[root] != Mark::Fresh {
            continue;
        }
        let mut stack = vec![(root, 0usize)];
        mark[root] = Mark::Active;
        while let Some(&mut (node, ref mut next)) = stack.last_mut() {
            if *next < deps[node].len() {
                let d = deps[node][*next];
                *next += 1;
                match mark[d] {
                    Mark::Fresh => {
                        mark[d] = Mark::Active;
                        stack.push((d, 0));
                    }
                    Mark::Active => {
                        let (name, loc) = decl(d);
                        return Err(err(
                            ErrorKind::NameResolution,
                            loc,
                            format!("`{name}` is defined in terms of itself"),
                        ));
                    }
                    Mark::Done => {}
                }
            } else {
                mark[node] = Mark::Done;
                stack.pop();
            }
        }
    }
    Ok(())
}

/// Type of an expression plus whether it depends on a parameter or on a
/// state variable.
#[derive(Clone, Copy, Debug)]
struct Typed {
    ty: Ty,
    param: bool,
    state: bool,
}

struct Typer<'a> {
    ast: &'a ModelAst,
    scope: &'a Scope,
    cache: BTreeMap<String, Typed>,
}

impl Typer<'_> {
    fn ident(&mut self, name: &str) -> Result<Typed, SourceError> {
        if let Some(t) = self.cache.get(name) {
            return Ok(*t);
        }
        let t = match self.scope.symbols[name] {
            Symbol::Param => Typed {
                ty: Ty::Int,
                param: true,
                state: false,
            },
            Symbol::Var { ty, .. } => Typed {
                ty,
                param: false,
                state: true,
            },
            Symbol::Const(i) => {
                let c = &self.ast.constants[i];
                let t = self.expr(&c.value)?;
                if t.param || t.state {
                    return Err(err(
                        ErrorKind::Type,
                        c.value.loc,
                        format!("constant `{}` must not depend on parameters or variables", c.name),
                    ));
                }
                t
            }
            Symbol::Formula(i) => self.expr(&self.ast.formulas[i].expr)?,
        };
        self.cache.insert(name.to_string(), t);
        Ok(t)
    }

    fn expect(&mut self, e: &Expr, ty: Ty) -> Result<Typed, SourceError> {
        let t = self.expr(e)?;
        if t.ty != ty {
            return Err(err(
                ErrorKind::Type,
                e.loc,
                format!("expected a {} expression, found a {} one", ty.name(), t.ty.name()),
            ));
        }
        Ok(t)
    }

    fn expr(&mut self, e: &Expr) -> Result<Typed, SourceError> {
        let join = |ty: Ty, parts: &[Typed]| Typed {
            ty,
            param: parts.iter().any(|p| p.param),
            state: parts.iter().any(|p| p.state),
        };
        match &e.kind {
            ExprKind::Num(_) => Ok(Typed {
                ty: Ty::Int,
                param: false,
                state: false,
            }),
            ExprKind::Bool(_) => Ok(Typed {
                ty: Ty::Bool,
                param: false,
                state: false,
            }),
            ExprKind::Ident(name) => self.ident(name),
            ExprKind::Unary(UnOp::Neg, a) => Ok(join(Ty::Int, &[self.expect(a, Ty::Int)?])),
            ExprKind::Unary(UnOp::Not, a) => Ok(join(Ty::Bool, &[self.expect(a, Ty::Bool)?])),
            ExprKind::Binary(op, a, b) => match op {
                BinOp::And | BinOp::Or => {
                    let ta = self.expect(a, Ty::Bool)?;
                    let tb = self.expect(b, Ty::Bool)?;
                    Ok(join(Ty::Bool, &[ta, tb]))
                }
                BinOp::Eq | BinOp::Neq => {
                    let ta = self.expr(a)?;
                    let tb = self.expect(b, ta.ty)?;
                    Ok(join(Ty::Bool, &[ta, tb]))
                }
                BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => {
                    let ta = self.expect(a, Ty::Int)?;
                    let tb = self.expect(b, Ty::Int)?;
                    Ok(join(Ty::Bool, &[ta, tb]))
                }
                BinOp::Add | BinOp::Sub | BinOp::Mul | BinOp::Div => {
                    let ta = self.expect(a, Ty::Int)?;
                    let tb = self.expect(b, Ty::Int)?;
                    Ok(join(Ty::Int, &[ta, tb]))
                }
            },
            ExprKind::Call(_, args) => {
                let parts = args
                    .iter()
                    .map(|a| self.expect(a, Ty::Int))
                    .collect::<Result<Vec<_>, _>>()?;
                Ok(join(Ty::Int, &parts))
            }
        }
    }

    fn non_parametric(&mut self, e: &Expr, ty: Ty, what: &str) -> Result<(), SourceError> {
        let t = self.expect(e, ty)?;
        if t.param {
            return Err(err(
                ErrorKind::Type,
                e.loc,
                format!("{what} must not depend on parameters"),
            ));
        }
        Ok(())
    }
}

fn check_types(ast: &ModelAst, scope: &Scope) -> Result<(), SourceError> {
    let mut typer = Typer {
        ast,
        scope,
        cache: BTreeMap::new(),
    };
    for c in &ast.constants {
        typer.ident(&c.name)?;
    }
    for f in &ast.formulas {
        typer.ident(&f.name)?;
    }
    for module in &ast.modules {
        for cmd in &module.commands {
            typer.non_parametric(&cmd.guard, Ty::Bool, "a guard")?;
            for alt in &cmd.alternatives {
                typer.expect(&alt.rate, Ty::Int)?;
                for a in &alt.updates {
                    let ty = match scope.symbols[&a.var] {
                        Symbol::Var { ty, .. } => ty,
                        _ => unreachable!("checked during name resolution"),
                    };
                    typer.non_parametric(&a.value, ty, "an update")?;
                }
            }
        }
    }
    for l in &ast.labels {
        typer.non_parametric(&l.expr, Ty::Bool, "a label")?;
    }
    Ok(())
}

pub(crate) fn validate(ast: &ModelAst) -> Result<(), SourceError> {
    let scope = build_scope(ast)?;
    check_all_names(ast, &scope)?;
    check_cycles(ast, &scope)?;
    check_types(ast, &scope)
}

/// Checks a standalone predicate against a model's declarations: it must be
/// boolean and free of parameters.
pub(crate) fn check_predicate(ast: &ModelAst, expr: &Expr) -> Result<(), SourceError> {
    let scope = build_scope(ast)?;
    check_names(expr, &scope)?;
    let mut typer = Typer {
        ast,
        scope: &scope,
        cache: BTreeMap::new(),
    };
    typer.non_parametric(expr, Ty::Bool, "a state predicate")
}
