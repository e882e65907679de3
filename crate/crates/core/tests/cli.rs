use std::fs;
use std::path::PathBuf;

use pra::cli::run;

const MANIFEST: &str = env!("CARGO_MANIFEST_DIR");

fn example(name: &str) -> String {
    PathBuf::from(MANIFEST)
        .join("examples")
        .join(name)
        .display()
        .to_string()
}

fn pra(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("pra").chain(args.iter().copied());
    let code = run(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

#[test]
fn help_and_usage_errors() {
    assert_eq!(pra(&["--help"]).0, 0);
    assert_eq!(pra(&[]).0, 2);
    assert_eq!(pra(&["frobnicate"]).0, 2);
    assert_eq!(pra(&["ccp", "--uniform", "ten"]).0, 2);
}

#[test]
fn parse_reports_position_of_syntax_error() {
    let (code, _, err) = pra(&["parse", &example("broken.gcl")]);
    assert_eq!(code, 2);
    assert!(err.contains("7:17"), "{err}");
    let (code, out, _) = pra(&["parse", &example("race.gcl")]);
    assert_eq!(code, 0);
    assert!(out.contains("module"));
}

#[test]
fn missing_file_is_an_error() {
    let (code, _, err) = pra(&["check", "/nonexistent/model.gcl", "--label", "x"]);
    assert_eq!(code, 2);
    assert!(err.starts_with("error:"));
}

#[test]
fn check_race() {
    let model = example("race.gcl");
    let (code, out, _) = pra(&["check", &model, "--label", "win", "--set", "a=0.3", "--set", "b=0.6"]);
    assert_eq!(code, 0);
    assert!(out.contains("1/3"), "{out}");
    // Unbound parameters and out-of-range values are rejected.
    assert_eq!(pra(&["check", &model, "--label", "win"]).0, 2);
    assert_eq!(
        pra(&["check", &model, "--label", "win", "--set", "a=2", "--set", "b=0.5"]).0,
        2
    );
    assert_eq!(
        pra(&["check", &model, "--label", "nope", "--set", "a=0.1", "--set", "b=0.5"]).0,
        2
    );
}

#[test]
fn param_check_grid_csv() {
    let (code, out, _) = pra(&[
        "param-check",
        &example("race.gcl"),
        "--label",
        "win",
        "--grid",
        "a=0.1:0.9:3,b=0.5",
        "--format",
        "csv",
    ]);
    assert_eq!(code, 0, "{out}");
    assert_eq!(
        out,
        "a,b,value\n0.1,0.5,0.166666666667\n0.5,0.5,0.5\n0.9,0.5,0.642857142857\n"
    );
}

#[test]
fn odrisk_fixed_point_passes() {
    let (code, out, _) = pra(&["odrisk", "--pn", "0.04", "--pc", "0.04", "--format", "json"]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    let hr: f64 = v["hr_value"].as_str().unwrap().parse().unwrap();
    assert!((hr - 3.413333e-10).abs() / 3.413333e-10 < 1e-4, "{out}");
    assert_eq!(v["p_fn"], "(1)/(625)");
    assert_eq!(v["verdict"]["kind"], "pass");
    assert_eq!(v["module_rate_check"]["ok"], true);
}

#[test]
fn odrisk_failing_point_exits_one() {
    let (code, out, _) = pra(&["odrisk", "--pn", "1", "--pc", "1"]);
    assert_eq!(code, 1, "{out}");
    assert_eq!(pra(&["odrisk", "--pn", "1.5"]).0, 2);
}

#[test]
fn odrisk_text_hazard_rate() {
    let (code, out, _) = pra(&["odrisk", "--pn", "0.04", "--pc", "0.04"]);
    assert_eq!(code, 0);
    assert!(out.contains("3.41333333333e-10"), "{out}");
}

#[test]
fn odrisk_emitted_model_parses() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("od.gcl");
    let (code, _, _) = pra(&["odrisk", "--pv", "0.01", "--emit-model", path.to_str().unwrap()]);
    assert_eq!(code, 0);
    let (code, _, err) = pra(&["parse", path.to_str().unwrap()]);
    assert_eq!(code, 0, "{err}");
}

#[test]
fn fault_tree_bundled() {
    let (code, out, _) = pra(&["ft"]);
    assert_eq!(code, 0);
    assert!(out.contains("1/625"), "{out}");
    assert!(out.contains("{SP_c SP_n}"));
}

#[test]
fn ccp_expected_draws() {
    let (code, out, _) = pra(&["ccp", "--uniform", "10", "--expected"]);
    assert_eq!(code, 0);
    assert!(out.contains("29.2896825397"), "{out}");
}

#[test]
fn ccp_log_round_trip_and_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let log = dir.path().join("runs.log");
    let log = log.to_str().unwrap();
    let args = [
        "ccp",
        "--uniform",
        "6",
        "--simulate",
        "500",
        "--seed",
        "7",
        "--tau",
        "0.9",
        "--save-log",
        log,
    ];
    let (code, first, _) = pra(&args);
    assert_eq!(code, 0, "{first}");
    let saved = fs::read_to_string(log).unwrap();
    let (_, second, _) = pra(&args);
    assert_eq!(first, second);
    assert_eq!(saved, fs::read_to_string(log).unwrap());
    let (code, out, err) = pra(&["ccp", "--uniform", "6", "--log", log, "--tau", "0.9"]);
    assert_eq!(code, 0, "{err}");
    assert!(out.contains("required samples at tau=0.9"), "{out}");
}

#[test]
fn chi2_table() {
    let dir = tempfile::tempdir().unwrap();
    let independent = dir.path().join("ind.csv");
    fs::write(&independent, "30,20\n25,25\n").unwrap();
    let (code, out, _) = pra(&["chi2", "--table", independent.to_str().unwrap(), "--expect-independent"]);
    assert_eq!(code, 0, "{out}");
    let dependent = dir.path().join("dep.csv");
    fs::write(&dependent, "90,10\n10,90\n").unwrap();
    let (code, _, _) = pra(&["chi2", "--table", dependent.to_str().unwrap(), "--expect-independent"]);
    assert_eq!(code, 1);
    let (code, _, _) = pra(&["chi2", "--table", dependent.to_str().unwrap()]);
    assert_eq!(code, 0);
    let degenerate = dir.path().join("deg.csv");
    fs::write(&degenerate, "10,20\n").unwrap();
    assert_eq!(pra(&["chi2", "--table", degenerate.to_str().unwrap()]).0, 2);
}

#[test]
fn simulate_is_reproducible_and_covers() {
    let model = example("race.gcl");
    let args = [
        "simulate",
        &model,
        "--label",
        "win",
        "--set",
        "a=0.3",
        "--set",
        "b=0.6",
        "--runs",
        "20000",
        "--seed",
        "3",
        "--compare",
    ];
    let (code, first, _) = pra(&args);
    assert_eq!(code, 0, "{first}");
    assert!(first.contains("inside the interval"), "{first}");
    assert_eq!(first, pra(&args).1);
}

#[test]
fn output_file_matches_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("ft.json");
    let (_, stdout, _) = pra(&["ft", "--format", "json"]);
    let (code, _, _) = pra(&["ft", "--format", "json", "--output", path.to_str().unwrap()]);
    assert_eq!(code, 0);
    assert_eq!(fs::read_to_string(path).unwrap(), stdout);
}
