use proptest::prelude::*;

use pra::gcl::{self, CoreExpr};

/// Integer-valued expressions over the variables `x`, `y` and constant `k`.
fn int_expr() -> impl Strategy<Value = String> {
    let leaf = prop_oneof![
        (0u32..20).prop_map(|n| n.to_string()),
        Just("x".to_string()),
        Just("y".to_string()),
        Just("k".to_string()),
    ];
    leaf.prop_recursive(3, 16, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone(), prop::sample::select(vec!["+", "-", "*"]))
                .prop_map(|(a, b, op)| format!("({a} {op} {b})")),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("min({a}, {b})")),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("max({a}, {b})")),
            inner.prop_map(|a| format!("-{a}")),
        ]
    })
}

fn bool_expr() -> impl Strategy<Value = String> {
    let leaf = prop_oneof![
        (
            int_expr(),
            int_expr(),
            prop::sample::select(vec!["=", "!=", "<", "<=", ">", ">="])
        )
            .prop_map(|(a, b, op)| format!("{a} {op} {b}")),
        Just("f".to_string()),
        Just("true".to_string()),
        Just("ready".to_string()),
    ];
    leaf.prop_recursive(2, 8, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a}) & ({b})")),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a}) | ({b})")),
            inner.prop_map(|a| format!("!({a})")),
        ]
    })
}

/// Nonnegative rate expressions over constants and the parameter `p`.
fn rate_expr() -> impl Strategy<Value = String> {
    prop_oneof![
        (1u32..10).prop_map(|n| n.to_string()),
        (1u32..9).prop_map(|n| format!("0.{n}")),
        (1u32..5, 2u32..7).prop_map(|(a, b)| format!("{a}/{b}")),
        Just("p".to_string()),
        Just("(1-p)*lam".to_string()),
        Just("p*p + lam".to_string()),
    ]
}

fn command() -> impl Strategy<Value = String> {
    let alt = (rate_expr(), int_expr(), prop::bool::ANY, bool_expr()).prop_map(|(r, e, with_f, b)| {
        if with_f {
            format!("{r}:(x'={e}) & (f'={b})")
        } else {
            format!("{r}:(x'={e})")
        }
    });
    (
        prop::option::of(prop::sample::select(vec!["go", "sync"])),
        bool_expr(),
        prop::collection::vec(alt, 1..3),
    )
        .prop_map(|(act, guard, alts)| format!("  [{}] {guard} -> {};", act.unwrap_or(""), alts.join(" + ")))
}

fn model() -> impl Strategy<Value = String> {
    (
        0u32..5,
        prop::collection::vec(command(), 1..4),
        prop::collection::vec((int_expr(), 0u32..3), 0..2),
        bool_expr(),
    )
        .prop_map(|(k, cmds, others, label)| {
            let mut s = format!("ctmc\nconst k = {k};\nconst lam = 2/24;\nparam p;\nformula ready = x >= k;\n");
            s.push_str("module A\n  x:[0..9] init 0;\n  f:bool init false;\n");
            s.push_str(&cmds.join("\n"));
            s.push_str("\nendmodule\nmodule B\n  y:[-2..2] init 1;\n");
            for (e, v) in others {
                s.push_str(&format!("  [sync] y < 2 -> 1:(y'=min(max({e}, -2), {v}));\n"));
            }
            s.push_str("endmodule\n");
            s.push_str(&format!("label \"l\" = {label};\n"));
            s
        })
}

fn check_indices(e: &CoreExpr, vars: usize, params: usize) {
    match e {
        CoreExpr::Lit(_) => {}
        CoreExpr::Var { index, .. } => assert!(*index < vars),
        CoreExpr::Param(i) => assert!(*i < params),
        CoreExpr::Unary(_, a) => check_indices(a, vars, params),
        CoreExpr::Binary(_, a, b) => {
            check_indices(a, vars, params);
            check_indices(b, vars, params);
        }
        CoreExpr::Call(_, args) => args.iter().for_each(|a| check_indices(a, vars, params)),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn render_round_trips(src in model()) {
        let ast = gcl::parse(&src).unwrap_or_else(|e| panic!("{e}\n{src}"));
        let text = gcl::render(&ast);
        let again = gcl::parse(&text).unwrap_or_else(|e| panic!("{e}\n{text}"));
        prop_assert_eq!(&again, &ast);
        prop_assert_eq!(gcl::render(&again), text);
    }

    #[test]
    fn resolved_models_reference_declared_symbols(src in model()) {
        let ast = gcl::parse(&src).unwrap();
        let m = gcl::resolve(&ast).unwrap();
        let (v, p) = (m.variables.len(), m.parameters.len());
        for module in &m.modules {
            for c in &module.commands {
                check_indices(&c.guard, v, p);
                for alt in &c.alternatives {
                    check_indices(&alt.rate, v, p);
                    for (var, e) in &alt.updates {
                        prop_assert!(*var < v);
                        check_indices(e, v, p);
                    }
                }
            }
        }
        for (_, e) in &m.labels {
            check_indices(e, v, p);
        }
    }
}

/// Token start positions (1-based line and column) and byte spans.
fn tokens(src: &str) -> Vec<(u32, u32, usize, usize)> {
    let bytes = src.as_bytes();
    let (mut i, mut line, mut col) = (0usize, 1u32, 1u32);
    let mut out = Vec::new();
    while i < bytes.len() {
        let c = bytes[i];
        if c == b'\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_ascii_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if src[i..].starts_with("//") {
            while i < bytes.len() && bytes[i] != b'\n' {
                i += 1;
            }
            continue;
        }
        let start = i;
        if c.is_ascii_alphabetic() || c == b'_' {
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
        } else if c.is_ascii_digit() {
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
            if src[i..].starts_with('.') && !src[i..].starts_with("..") {
                i += 1;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
            }
        } else if c == b'"' {
            i += 1;
            while i < bytes.len() && bytes[i] != b'"' {
                i += 1;
            }
            i += 1;
        } else if ["->", "..", "!=", "<=", ">="].iter().any(|op| src[i..].starts_with(op)) {
            i += 2;
        } else {
            i += src[i..].chars().next().unwrap().len_utf8();
        }
        out.push((line, col, start, i));
        col += src[start..i].chars().count() as u32;
    }
    out
}

#[test]
fn single_token_deletions_report_at_or_after_the_deletion() {
    let corpus = [
        pra::odrisk::BUNDLED_MODEL,
        include_str!("../examples/race.gcl"),
        "ctmc const k = 2; param p; formula g = x < k;
         module M x:[0..3] init 0; b:bool init false;
           [a] g & !b -> p:(x'=x+1) + (1-p):(b'=true);
         endmodule
         module N y:[0..1] init 0; [a] y=0 -> 1:(y'=1); endmodule
         label \"end\" = x=3 | b;",
    ];
    let mut checked = 0;
    for src in corpus {
        gcl::parse(src)
            .and_then(|a| gcl::resolve(&a))
            .expect("corpus entries are valid");
        for (line, col, start, end) in tokens(src) {
            // Blank the token so later columns are unchanged.
            let mutated = format!("{}{}{}", &src[..start], " ".repeat(end - start), &src[end..]);
            let result = gcl::parse(&mutated).and_then(|a| gcl::resolve(&a).map(|_| ()));
            if let Err(e) = result {
                assert!(
                    e.position() >= (line, col),
                    "deleting `{}` at {line}:{col} reported {e}",
                    &src[start..end]
                );
                checked += 1;
            }
        }
    }
    assert!(checked > 100, "only {checked} deletions were rejected");
}
