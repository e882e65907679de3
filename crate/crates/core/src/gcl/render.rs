use std::fmt::Write;

use num_bigint::BigInt;
use num_rational::BigRational;

use super::ast::*;

const PREC_NOT: u8 = 3;
const PREC_NEG: u8 = 7;
const PREC_ATOM: u8 = 8;

fn precedence(e: &Expr) -> u8 {
    match &e.kind {
        ExprKind::Binary(op, _, _) => op.precedence(),
        ExprKind::Unary(UnOp::Not, _) => PREC_NOT,
        ExprKind::Unary(UnOp::Neg, _) => PREC_NEG,
        _ => PREC_ATOM,
    }
}

/// Exact literal text: integers and terminating decimals print as decimals,
/// anything else as an unspaced `n/d` literal.
pub fn number(value: &BigRational) -> String {
    if value.is_integer() {
        return value.numer().to_string();
    }
    if is_terminating_decimal(value) {
        let mut scale = 0usize;
        let mut scaled = value.clone();
        let ten = BigRational::from_integer(BigInt::from(10));
        while !scaled.is_integer() {
            scaled *= &ten;
            scale += 1;
        }
        let digits = scaled.numer().to_string();
        let (sign, digits) = match digits.strip_prefix('-') {
            Some(d) => ("-", d.to_string()),
            None => ("", digits),
        };
        let padded = format!("{digits:0>width$}", width = scale + 1);
        let (int, frac) = padded.split_at(padded.len() - scale);
        return format!("{sign}{int}.{frac}");
    }
    format!("{}/{}", value.numer(), value.denom())
}

fn wrap(out: &mut String, e: &Expr, parens: bool) {
    if parens {
        out.push('(');
        write_expr(out, e);
        out.push(')');
    } else {
        write_expr(out, e);
    }
}

fn write_expr(out: &mut String, e: &Expr) {
    match &e.kind {
        ExprKind::Num(n) => out.push_str(&number(n)),
        ExprKind::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        ExprKind::Ident(name) => out.push_str(name),
        ExprKind::Unary(op, a) => {
            let (sym, prec) = match op {
                UnOp::Neg => ('-', PREC_NEG),
                UnOp::Not => ('!', PREC_NOT),
            };
            out.push(sym);
            wrap(out, a, precedence(a) < prec);
        }
        ExprKind::Binary(op, a, b) => {
            let p = op.precedence();
            let left_parens = if op.is_comparison() {
                precedence(a) <= p
            } else {
                precedence(a) < p
            };
            wrap(out, a, left_parens);
            let _ = write!(out, " {} ", op.symbol());
            wrap(out, b, precedence(b) <= p);
        }
        ExprKind::Call(f, args) => {
            out.push_str(match f {
                Func::Min => "min(",
                Func::Max => "max(",
            });
            for (i, a) in args.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                write_expr(out, a);
            }
            out.push(')');
        }
    }
}

pub fn render_expr(e: &Expr) -> String {
    let mut out = String::new();
    write_expr(&mut out, e);
    out
}

/// Canonical source text; parsing it yields a structurally equal AST.
pub fn render(ast: &ModelAst) -> String {
    let mut out = String::from("ctmc\n");
    if !ast.constants.is_empty() || !ast.parameters.is_empty() || !ast.formulas.is_empty() {
        out.push('\n');
    }
    for c in &ast.constants {
        let _ = writeln!(out, "const {} = {};", c.name, render_expr(&c.value));
    }
    for p in &ast.parameters {
        let _ = writeln!(out, "param {};", p.name);
    }
    for f in &ast.formulas {
        let _ = writeln!(out, "formula {} = {};", f.name, render_expr(&f.expr));
    }
    for m in &ast.modules {
        let _ = writeln!(out, "\nmodule {}", m.name);
        for v in &m.variables {
            let ty = match v.ty {
                VarType::Bool => "bool".to_string(),
                VarType::Range { lo, hi } => format!("[{lo}..{hi}]"),
            };
            let init = match v.init {
                InitValue::Int(i) => i.to_string(),
                InitValue::Bool(b) => b.to_string(),
            };
            let _ = writeln!(out, "  {}:{ty} init {init};", v.name);
        }
        for c in &m.commands {
            let _ = write!(
                out,
                "  [{}] {} -> ",
                c.action.as_deref().unwrap_or(""),
                render_expr(&c.guard)
            );
            for (i, alt) in c.alternatives.iter().enumerate() {
                if i > 0 {
                    out.push_str(" + ");
                }
                let _ = write!(out, "{}:", render_expr(&alt.rate));
                for (j, a) in alt.updates.iter().enumerate() {
                    if j > 0 {
                        out.push_str(" & ");
                    }
                    let _ = write!(out, "({}'={})", a.var, render_expr(&a.value));
                }
            }
            out.push_str(";\n");
        }
        out.push_str("endmodule\n");
    }
    if !ast.labels.is_empty() {
        out.push('\n');
    }
    for l in &ast.labels {
        let _ = writeln!(out, "label \"{}\" = {};", l.name, render_expr(&l.expr));
    }
    out
}
