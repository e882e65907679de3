//! Guarded-command modeling language for parametric CTMCs.
//!
//! ```text
//! ctmc
//! const lod = 2/24;
//! param pn;
//! module M
//!   x:[0..1] init 0;
//!   [] x=0 -> pn*lod:(x'=1) + (1-pn)*lod:(x'=0);
//! endmodule
//! label "done" = x=1;
//! ```

pub mod ast;
mod error;
mod lexer;
mod parser;
mod render;
mod resolve;
mod validate;

pub use ast::*;
pub use error::{ErrorKind, SourceError};
pub use parser::{parse, parse_expression};
pub use render::{number as render_number, render, render_expr};
pub use resolve::{
    resolve, CoreExpr, EvalError, ResolvedAlternative, ResolvedCommand, ResolvedModel, ResolvedModule, ResolvedVar,
    Value,
};

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::BigRational;

    const MINIMAL: &str = "ctmc module M x:[0..1] init 0; [] x=0 -> 1.0:(x'=1); endmodule";

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn minimal_model() {
        let ast = parse(MINIMAL).unwrap();
        assert_eq!(ast.modules.len(), 1);
        let m = &ast.modules[0];
        assert_eq!(m.variables.len(), 1);
        assert_eq!(m.commands.len(), 1);
        assert_eq!(m.commands[0].alternatives.len(), 1);
        assert_eq!(parse(&render(&ast)).unwrap(), ast);
    }

    #[test]
    fn parametric_rate_references() {
        let src = "ctmc const lpn = 1; param pn;
            module M x:[0..1] init 0; [] x=0 -> pn*lpn:(x'=1); endmodule";
        let ast = parse(src).unwrap();
        let rate = &ast.modules[0].commands[0].alternatives[0].rate;
        let names: Vec<&str> = rate.identifiers().into_iter().map(|(n, _)| n).collect();
        assert_eq!(names, ["pn", "lpn"]);
    }

    #[test]
    fn init_out_of_range() {
        let src = "ctmc module M\n  x:[0..1] init 2;\nendmodule";
        let err = parse(src).unwrap_err();
        assert_eq!(err.kind, ErrorKind::Range);
        assert_eq!(err.position(), (2, 17));
    }

    #[test]
    fn shared_action_renders_in_both_modules() {
        let src = "ctmc
            module A a:[0..1] init 0; [vote] a=0 -> 1:(a'=1); endmodule
            module B b:[0..1] init 0; [vote] b=0 -> 1:(b'=1); endmodule";
        let text = render(&parse(src).unwrap());
        assert_eq!(text.matches("[vote]").count(), 2);
    }

    #[test]
    fn boolean_variable_renders() {
        let src = "ctmc module M f:bool init false; [] !f -> 1:(f'=true); endmodule";
        let text = render(&parse(src).unwrap());
        assert!(text.contains("f:bool init false;"), "{text}");
    }

    #[test]
    fn constants_fold_and_formulas_inline() {
        let src = "ctmc const lod = 2/24; formula fin = x=1;
            module M x:[0..1] init 0; [] x=0 -> lod:(x'=1); endmodule
            label \"fin\" = fin;";
        let r = resolve(&parse(src).unwrap()).unwrap();
        assert_eq!(r.constants, vec![("lod".to_string(), q(1, 12))]);
        let rate = &r.modules[0].commands[0].alternatives[0].rate;
        assert_eq!(*rate, CoreExpr::Lit(Value::Num(q(1, 12))));
        let (_, fin) = &r.labels[0];
        assert!(fin.eval_bool(&[1]).unwrap());
        assert!(!fin.eval_bool(&[0]).unwrap());
    }

    #[test]
    fn resolve_without_constants_is_identity() {
        let r = resolve(&parse(MINIMAL).unwrap()).unwrap();
        let cmd = &r.modules[0].commands[0];
        assert_eq!(cmd.alternatives[0].rate, CoreExpr::Lit(Value::Num(q(1, 1))));
        assert_eq!(cmd.alternatives[0].updates[0].0, 0);
    }

    #[test]
    fn folding_division_by_zero() {
        let src = "ctmc const z = 1/(1-1); module M x:[0..1] init 0; endmodule";
        let ast = parse(src).unwrap();
        assert!(resolve(&ast).is_err());
    }

    fn error_kind(src: &str) -> ErrorKind {
        parse(src).unwrap_err().kind
    }

    #[test]
    fn error_kinds() {
        assert_eq!(
            error_kind("ctmc module M x:[0..1] init 0; x:bool init true; endmodule"),
            ErrorKind::NameResolution
        );
        assert_eq!(
            error_kind("ctmc module M x:[0..1] init 0; [] y=0 -> 1:(x'=1); endmodule"),
            ErrorKind::NameResolution
        );
        assert_eq!(
            error_kind("ctmc formula a = b; formula b = a; module M x:[0..1] init 0; endmodule"),
            ErrorKind::NameResolution
        );
        assert_eq!(
            error_kind("ctmc module M x:[0..1] init 0; [] x -> 1:(x'=1); endmodule"),
            ErrorKind::Type
        );
        assert_eq!(
            error_kind("ctmc param p; module M x:[0..1] init 0; [] p>0 -> 1:(x'=1); endmodule"),
            ErrorKind::Type
        );
        assert_eq!(error_kind("ctmc module M x:[0..1] init 0 endmodule"), ErrorKind::Parse);
        assert_eq!(error_kind("ctmc module M x:[0..1] init 0; # endmodule"), ErrorKind::Lex);
        assert_eq!(error_kind("ctmc module M x:[2..1] init 0; endmodule"), ErrorKind::Range);
    }

    #[test]
    fn foreign_assignment_is_rejected() {
        let src = "ctmc module A a:[0..1] init 0; endmodule
            module B b:[0..1] init 0; [] b=0 -> 1:(a'=1); endmodule";
        assert_eq!(error_kind(src), ErrorKind::NameResolution);
        let src = "ctmc module A a:[0..1] init 0; [] a=0 -> 1:(a'=1)&(a'=0); endmodule";
        assert_eq!(error_kind(src), ErrorKind::NameResolution);
    }

    #[test]
    fn precedence_round_trips() {
        let src = "ctmc param p;
            module M x:[0..3] init 0; b:bool init false;
            [] !(b | x=1) & -x < 2 - (1 - x) -> p/(2*(1-p)):(x'=min(x+1, 3)) + 1/3 / 2:(b'=!!b);
            endmodule";
        let ast = parse(src).unwrap();
        let text = render(&ast);
        assert_eq!(parse(&text).unwrap(), ast, "{text}");
    }

    #[test]
    fn predicate_parsing() {
        let r = resolve(&parse(MINIMAL).unwrap()).unwrap();
        let e = parse_expression("x = 1 | x = 0").unwrap();
        let p = r.resolve_predicate(&e).unwrap();
        assert!(p.eval_bool(&[0]).unwrap());
        assert!(r.resolve_predicate(&parse_expression("y = 1").unwrap()).is_err());
    }
}
