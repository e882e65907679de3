//! Command-line front end. Exit status: 0 on success, 1 when an analysis
//! fails its criterion, 2 on input errors.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::ctmc::{self, Ctmc, StatePredicate};
use crate::fta::{self, FaultTree, FtaError};
use crate::gcl;
use crate::odrisk::{self, GridAxis, OdParameters, Prob, Verdict};
use crate::polyrat::{parse_rational, to_decimal, to_f64, Point};
use crate::solver::{self, QueryRecord, ReachQuery, SimOptions, Target};
use crate::stats::{self, Binning, ClassPartition, Feature, VerificationRunLog};

const DIGITS: usize = 12;

#[derive(Parser, Debug)]
#[command(
    name = "pra",
    version,
    about = "Probabilistic risk assessment for redundant perception"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Check a model file and print its canonical form.
    Parse(ParseArgs),
    /// Reachability probability on a concrete (or fully bound) model.
    Check(CheckArgs),
    /// Symbolic reachability probability, optionally evaluated on a grid.
    ParamCheck(ParamCheckArgs),
    /// Assessment of the bundled 2oo2 object-detection model.
    Odrisk(OdriskArgs),
    /// Minimal cut sets and top-event probability of a fault tree.
    Ft(FtArgs),
    /// Coupon-collector coverage planning.
    Ccp(CcpArgs),
    /// χ² independence test on a table or on explanation matrices.
    Chi2(Chi2Args),
    /// Stochastic simulation cross-check of a reachability probability.
    Simulate(SimulateArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Csv,
    Json,
}

#[derive(Args, Debug)]
pub struct ParseArgs {
    pub model: PathBuf,
    /// Print only diagnostics, not the canonical source.
    #[arg(long)]
    pub quiet: bool,
}

#[derive(Args, Debug)]
pub struct TargetArgs {
    /// Target label declared in the model.
    #[arg(long, conflicts_with = "predicate")]
    pub label: Option<String>,
    /// Target predicate over model variables.
    #[arg(long)]
    pub predicate: Option<String>,
}

#[derive(Args, Debug)]
pub struct CheckArgs {
    pub model: PathBuf,
    #[command(flatten)]
    pub target: TargetArgs,
    /// Parameter binding `name=value`; repeatable.
    #[arg(long = "set", value_name = "NAME=VALUE")]
    pub set: Vec<String>,
    /// Write the explicit chain to this file.
    #[arg(long)]
    pub export: Option<PathBuf>,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct ParamCheckArgs {
    pub model: PathBuf,
    #[command(flatten)]
    pub target: TargetArgs,
    /// Grid such as `pn=0.02:0.1:9,pc=0.02:0.1:9`.
    #[arg(long)]
    pub grid: Option<String>,
    #[arg(long, value_enum, default_value = "text")]
    pub format: Format,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct OdriskArgs {
    /// NN misclassification probability, or `sym`.
    #[arg(long)]
    pub pn: Option<String>,
    /// Classical misclassification probability, or `sym`.
    #[arg(long)]
    pub pc: Option<String>,
    #[arg(long)]
    pub pv: Option<String>,
    #[arg(long = "ps-c")]
    pub ps_c: Option<String>,
    #[arg(long = "ps-n")]
    pub ps_n: Option<String>,
    #[arg(long = "q-obs")]
    pub q_obs: Option<String>,
    /// Demand rate per hour.
    #[arg(long)]
    pub lod: Option<String>,
    #[arg(long)]
    pub lsc: Option<String>,
    #[arg(long)]
    pub lsn: Option<String>,
    #[arg(long)]
    pub lpc: Option<String>,
    #[arg(long)]
    pub lpn: Option<String>,
    #[arg(long)]
    pub lv: Option<String>,
    /// Stop after the single-module probability.
    #[arg(long)]
    pub two_out_of_two: bool,
    /// Grid over pn and pc, e.g. `pn=0.02:0.1:9,pc=0.02:0.1:9`.
    #[arg(long)]
    pub grid: Option<String>,
    /// Write the instantiated model source to this file.
    #[arg(long)]
    pub emit_model: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "text")]
    pub format: Format,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct FtArgs {
    /// Tree file; the bundled OD tree when omitted.
    pub tree: Option<PathBuf>,
    /// Override a basic-event probability, `NAME=p`; repeatable.
    #[arg(long = "set", value_name = "NAME=P")]
    pub set: Vec<String>,
    #[arg(long, value_enum, default_value = "text")]
    pub format: Format,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct CcpArgs {
    /// Uniform partition with this many classes.
    #[arg(long, conflicts_with = "probs")]
    pub uniform: Option<usize>,
    /// Comma-separated class probabilities.
    #[arg(long)]
    pub probs: Option<String>,
    /// Print the expected number of draws.
    #[arg(long)]
    pub expected: bool,
    /// Simulate this many verification runs.
    #[arg(long)]
    pub simulate: Option<u64>,
    /// Read a verification run log instead of simulating.
    #[arg(long, conflicts_with = "simulate")]
    pub log: Option<PathBuf>,
    /// Write the simulated run log here.
    #[arg(long)]
    pub save_log: Option<PathBuf>,
    /// Coverage level for the required sample size.
    #[arg(long)]
    pub tau: Option<f64>,
    /// Plan an extension test for an undiscovered class of this probability.
    #[arg(long)]
    pub extend: Option<f64>,
    #[arg(long, default_value_t = 0.99)]
    pub confidence: f64,
    /// Runs simulated when planning an extension.
    #[arg(long, default_value_t = 10_000)]
    pub runs: u64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, value_enum, default_value = "text")]
    pub format: Format,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum FeatureArg {
    Count,
    Overlap,
}

#[derive(Args, Debug)]
pub struct Chi2Args {
    /// Contingency table as CSV.
    #[arg(long, conflicts_with = "pairs")]
    pub table: Option<PathBuf>,
    /// Explanation matrix pairs, one `ROWSxCOLS c_bits n_bits` per line.
    #[arg(long)]
    pub pairs: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "count")]
    pub feature: FeatureArg,
    #[arg(long, default_value_t = 3)]
    pub buckets: usize,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    /// Exit with status 1 if independence is rejected.
    #[arg(long)]
    pub expect_independent: bool,
    #[arg(long, value_enum, default_value = "text")]
    pub format: Format,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    pub model: PathBuf,
    #[command(flatten)]
    pub target: TargetArgs,
    /// Estimate the conditional form: visit this predicate, then reach the target.
    #[arg(long)]
    pub via: Option<String>,
    #[arg(long = "set", value_name = "NAME=VALUE")]
    pub set: Vec<String>,
    #[arg(long, default_value_t = 100_000)]
    pub runs: u64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value_t = 0.99)]
    pub confidence: f64,
    /// Jump limit per run.
    #[arg(long, default_value_t = 100_000)]
    pub horizon: u64,
    /// Also solve exactly and report whether the interval covers the value.
    #[arg(long)]
    pub compare: bool,
    #[arg(long, value_enum, default_value = "text")]
    pub format: Format,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

/// What a successful command found.
enum Outcome {
    Ok,
    /// The analysis ran but its criterion failed.
    Failed,
}

type CmdResult = Result<Outcome, String>;

/// Runs the tool on `args` (including the program name) and returns the
/// exit status.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 {
                out.write_all(text.as_bytes())
            } else {
                err.write_all(text.as_bytes())
            };
            return code;
        }
    };
    let result = match &cli.command {
        Command::Parse(a) => cmd_parse(a, out),
        Command::Check(a) => cmd_check(a, out),
        Command::ParamCheck(a) => cmd_param_check(a, out),
        Command::Odrisk(a) => cmd_odrisk(a, out),
        Command::Ft(a) => cmd_ft(a, out),
        Command::Ccp(a) => cmd_ccp(a, out),
        Command::Chi2(a) => cmd_chi2(a, out),
        Command::Simulate(a) => cmd_simulate(a, out),
    };
    match result {
        Ok(Outcome::Ok) => 0,
        Ok(Outcome::Failed) => 1,
        Err(msg) => {
            let _ = writeln!(err, "error: {msg}");
            2
        }
    }
}

fn read(path: &Path) -> Result<String, String> {
    std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))
}

fn emit(path: Option<&Path>, text: &str, out: &mut dyn Write) -> Result<(), String> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| format!("{}: {e}", p.display())),
        None => out.write_all(text.as_bytes()).map_err(|e| e.to_string()),
    }
}

fn json<T: serde::Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("serializable record") + "\n"
}

fn load_model(path: &Path) -> Result<gcl::ResolvedModel, String> {
    let text = read(path)?;
    let ast = gcl::parse(&text).map_err(|e| format!("{}:{e}", path.display()))?;
    gcl::resolve(&ast).map_err(|e| format!("{}:{e}", path.display()))
}

fn build(path: &Path) -> Result<Ctmc, String> {
    let model = load_model(path)?;
    ctmc::build(&model).map_err(|e| e.to_string())
}

fn target(args: &TargetArgs) -> Result<Target, String> {
    match (&args.label, &args.predicate) {
        (Some(l), None) => Ok(Target::Label(l.clone())),
        (None, Some(p)) => StatePredicate::parse(p)
            .map(Target::Predicate)
            .map_err(|e| format!("predicate {e}")),
        _ => Err("exactly one of --label and --predicate is required".into()),
    }
}

/// Parses `name=value` bindings of model parameters, which are probabilities.
fn bindings(items: &[String], ctmc: &Ctmc) -> Result<Point, String> {
    let mut point = Point::new();
    for item in items {
        let (name, value) = item
            .split_once('=')
            .ok_or_else(|| format!("binding `{item}` is not of the form name=value"))?;
        let name = name.trim();
        if !ctmc.parameters.iter().any(|p| p == name) {
            return Err(format!("`{name}` is not a parameter of the model"));
        }
        let v = parse_rational(value).ok_or_else(|| format!("`{value}` is not a number"))?;
        if v < BigRational::zero() || v > BigRational::one() {
            return Err(format!("{name} = {value} is outside [0, 1]"));
        }
        point.insert(name.to_string(), v);
    }
    Ok(point)
}

/// Parses `name=lo:hi:steps` (or `name=value`) entries joined by commas.
fn parse_grid(spec: &str) -> Result<Vec<(String, GridAxis)>, String> {
    let mut axes: Vec<(String, GridAxis)> = Vec::new();
    for part in spec.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let (name, range) = part
            .split_once('=')
            .ok_or_else(|| format!("grid entry `{part}` is not of the form name=lo:hi:steps"))?;
        let num = |s: &str| parse_rational(s).ok_or_else(|| format!("`{s}` is not a number in grid entry `{part}`"));
        let fields: Vec<&str> = range.split(':').collect();
        let axis = match fields.as_slice() {
            [v] => GridAxis::single(num(v)?),
            [lo, hi, steps] => {
                let steps: usize = steps
                    .trim()
                    .parse()
                    .map_err(|_| format!("bad step count in grid entry `{part}`"))?;
                if steps == 0 {
                    return Err(format!("grid entry `{part}` needs at least one step"));
                }
                GridAxis::new(num(lo)?, num(hi)?, steps)
            }
            _ => return Err(format!("grid entry `{part}` is not of the form name=lo:hi:steps")),
        };
        if axes.iter().any(|(n, _)| n == name.trim()) {
            return Err(format!("`{}` appears twice in the grid", name.trim()));
        }
        axes.push((name.trim().to_string(), axis));
    }
    if axes.is_empty() {
        return Err("empty grid".into());
    }
    Ok(axes)
}

fn grid_points(axes: &[(String, GridAxis)]) -> Vec<Point> {
    let mut points = vec![Point::new()];
    for (name, axis) in axes {
        let values = axis.values();
        points = points
            .into_iter()
            .flat_map(|p| {
                values.iter().map(move |v| {
                    let mut q = p.clone();
                    q.insert(name.clone(), v.clone());
                    q
                })
            })
            .collect();
    }
    points
}

fn cmd_parse(a: &ParseArgs, out: &mut dyn Write) -> CmdResult {
    let text = read(&a.model)?;
    let ast = gcl::parse(&text).map_err(|e| format!("{}:{e}", a.model.display()))?;
    gcl::resolve(&ast).map_err(|e| format!("{}:{e}", a.model.display()))?;
    if !a.quiet {
        emit(None, &gcl::render(&ast), out)?;
    }
    Ok(Outcome::Ok)
}

fn cmd_check(a: &CheckArgs, out: &mut dyn Write) -> CmdResult {
    let chain = build(&a.model)?;
    let point = bindings(&a.set, &chain)?;
    let chain = chain.instantiate(&point).map_err(|e| e.to_string())?;
    if !chain.parameters.is_empty() {
        let unbound: Vec<&str> = chain
            .parameters
            .iter()
            .filter(|p| !point.contains_key(*p))
            .map(String::as_str)
            .collect();
        if !unbound.is_empty() {
            return Err(format!(
                "unbound parameters: {} (use --set or param-check)",
                unbound.join(", ")
            ));
        }
    }
    if let Some(path) = &a.export {
        emit(Some(path), &chain.export(), out)?;
    }
    let query = ReachQuery {
        target: target(&a.target)?,
        from: None,
    };
    let sol = solver::reach_prob(&chain, &query).map_err(|e| e.to_string())?;
    let value = sol.value.as_constant().ok_or("result is not a constant")?;
    let mut text = String::new();
    let _ = writeln!(text, "states      {}", chain.num_states());
    let _ = writeln!(text, "transitions {}", chain.num_transitions());
    let _ = writeln!(text, "{} = {} ~ {}", sol.query, value, to_decimal(&value, DIGITS));
    for w in chain.warnings.iter().chain(&sol.warnings) {
        let _ = writeln!(text, "warning: {w}");
    }
    emit(a.output.as_deref(), &text, out)?;
    Ok(Outcome::Ok)
}

fn cmd_param_check(a: &ParamCheckArgs, out: &mut dyn Write) -> CmdResult {
    let chain = build(&a.model)?;
    let query = ReachQuery {
        target: target(&a.target)?,
        from: None,
    };
    let sol = solver::reach_prob(&chain, &query).map_err(|e| e.to_string())?;
    let mut grid = Vec::new();
    let mut axes = Vec::new();
    if let Some(spec) = &a.grid {
        axes = parse_grid(spec)?;
        for (name, _) in &axes {
            if !chain.parameters.contains(name) {
                return Err(format!("`{name}` is not a parameter of the model"));
            }
        }
        for point in grid_points(&axes) {
            let v = sol
                .evaluate(&point)
                .map_err(|e| format!("at {}: {e}", describe_point(&point)))?;
            grid.push((point, v));
        }
    }
    let text = match a.format {
        Format::Json => json(&QueryRecord::new(&sol, &grid)),
        Format::Csv => {
            let mut t = axes.iter().map(|(n, _)| n.as_str()).collect::<Vec<_>>().join(",");
            t.push_str(if axes.is_empty() { "value\n" } else { ",value\n" });
            for (point, v) in &grid {
                for (name, _) in &axes {
                    let _ = write!(t, "{},", to_decimal(&point[name], DIGITS));
                }
                let _ = writeln!(t, "{}", to_decimal(v, DIGITS));
            }
            if grid.is_empty() {
                let _ = writeln!(t, "{}", sol.value);
            }
            t
        }
        Format::Text => {
            let mut t = format!("{} = {}\n", sol.query, sol.value);
            for (point, v) in &grid {
                let _ = writeln!(t, "  {} -> {}", describe_point(point), to_decimal(v, DIGITS));
            }
            for w in chain.warnings.iter().chain(&sol.warnings) {
                let _ = writeln!(t, "warning: {w}");
            }
            t
        }
    };
    emit(a.output.as_deref(), &text, out)?;
    Ok(Outcome::Ok)
}

fn describe_point(point: &Point) -> String {
    point
        .iter()
        .map(|(k, v)| format!("{k}={}", to_decimal(v, DIGITS)))
        .collect::<Vec<_>>()
        .join(" ")
}

fn prob_arg(name: &str, value: &Option<String>, default: Prob) -> Result<Prob, String> {
    match value.as_deref() {
        None => Ok(default),
        Some("sym" | "symbolic") => Ok(Prob::Symbolic),
        Some(v) => parse_rational(v)
            .map(Prob::Fixed)
            .ok_or_else(|| format!("--{name}: `{v}` is not a number")),
    }
}

fn rate_arg(name: &str, value: &Option<String>, default: BigRational) -> Result<BigRational, String> {
    match value.as_deref() {
        None => Ok(default),
        Some(v) => parse_rational(v).ok_or_else(|| format!("--{name}: `{v}` is not a number")),
    }
}

fn od_parameters(a: &OdriskArgs) -> Result<OdParameters, String> {
    let d = OdParameters::default();
    let params = OdParameters {
        pn: prob_arg("pn", &a.pn, d.pn)?,
        pc: prob_arg("pc", &a.pc, d.pc)?,
        pv: prob_arg("pv", &a.pv, d.pv)?,
        ps_c: prob_arg("ps-c", &a.ps_c, d.ps_c)?,
        ps_n: prob_arg("ps-n", &a.ps_n, d.ps_n)?,
        q_obs: prob_arg("q-obs", &a.q_obs, d.q_obs)?,
        lsc: rate_arg("lsc", &a.lsc, d.lsc)?,
        lsn: rate_arg("lsn", &a.lsn, d.lsn)?,
        lpc: rate_arg("lpc", &a.lpc, d.lpc)?,
        lpn: rate_arg("lpn", &a.lpn, d.lpn)?,
        lv: rate_arg("lv", &a.lv, d.lv)?,
        lod: rate_arg("lod", &a.lod, d.lod)?,
    };
    params.validate().map_err(|e| e.to_string())?;
    Ok(params)
}

fn cmd_odrisk(a: &OdriskArgs, out: &mut dyn Write) -> CmdResult {
    let params = od_parameters(a)?;
    if let Some(path) = &a.emit_model {
        let source = params.model_source().map_err(|e| e.to_string())?;
        emit(Some(path), &source, out)?;
    }
    if let Some(spec) = &a.grid {
        let axes = parse_grid(spec)?;
        let axis = |name: &str, fixed: &Prob| -> Result<GridAxis, String> {
            match (axes.iter().find(|(n, _)| n == name), fixed) {
                (Some((_, ax)), _) => Ok(ax.clone()),
                (None, Prob::Fixed(v)) => Ok(GridAxis::single(v.clone())),
                (None, Prob::Symbolic) => Err(format!("the grid needs a range or a fixed value for {name}")),
            }
        };
        if let Some((n, _)) = axes.iter().find(|(n, _)| n != "pn" && n != "pc") {
            return Err(format!("grid parameter `{n}` is not one of pn, pc"));
        }
        let g = odrisk::grid(&params, &axis("pn", &params.pn)?, &axis("pc", &params.pc)?).map_err(|e| e.to_string())?;
        let text = match a.format {
            Format::Csv | Format::Text => g.to_csv(),
            Format::Json => {
                let rows: Vec<serde_json::Value> = g
                    .rows
                    .iter()
                    .map(|r| match &r.values {
                        Ok((p, h)) => serde_json::json!({
                            "pn": to_decimal(&r.pn, DIGITS),
                            "pc": to_decimal(&r.pc, DIGITS),
                            "pfn": to_decimal(p, DIGITS),
                            "hr": to_decimal(h, DIGITS),
                        }),
                        Err(e) => serde_json::json!({
                            "pn": to_decimal(&r.pn, DIGITS),
                            "pc": to_decimal(&r.pc, DIGITS),
                            "error": e.to_string(),
                        }),
                    })
                    .collect();
                json(&serde_json::json!({ "p_fn": g.p_fn.value.to_string(), "grid": rows }))
            }
        };
        emit(a.output.as_deref(), &text, out)?;
        return Ok(Outcome::Ok);
    }
    if a.two_out_of_two {
        let sol = odrisk::assess_2oo2(&params).map_err(|e| e.to_string())?;
        let value = sol.value.as_constant();
        let text = match a.format {
            Format::Json => json(&serde_json::json!({
                "p_fn": sol.value.to_string(),
                "p_fn_value": value.as_ref().map(|v| to_decimal(v, DIGITS)),
            })),
            Format::Csv => format!(
                "pfn\n{}\n",
                value.as_ref().map_or(sol.value.to_string(), |v| to_decimal(v, DIGITS))
            ),
            Format::Text => {
                let mut t = format!("P[FN] = {}\n", sol.value);
                if let Some(v) = &value {
                    let _ = writeln!(t, "      ~ {}", to_decimal(v, DIGITS));
                }
                t
            }
        };
        emit(a.output.as_deref(), &text, out)?;
        return Ok(Outcome::Ok);
    }
    let assessment = odrisk::assess_3oo3(&params).map_err(|e| e.to_string())?;
    let text = match a.format {
        Format::Json => json(&assessment.record()),
        Format::Csv => {
            let r = assessment.record();
            format!(
                "pfn,hr,thr,verdict\n{},{},{},{}\n",
                r.p_fn_value.unwrap_or(r.p_fn),
                r.hr_value.unwrap_or(r.hr),
                r.thr,
                match r.verdict {
                    Verdict::Pass => "pass",
                    Verdict::Fail => "fail",
                    Verdict::Parametric(_) => "parametric",
                }
            )
        }
        Format::Text => assessment.to_text(),
    };
    emit(a.output.as_deref(), &text, out)?;
    Ok(match assessment.verdict {
        Verdict::Fail => Outcome::Failed,
        _ => Outcome::Ok,
    })
}

fn cmd_ft(a: &FtArgs, out: &mut dyn Write) -> CmdResult {
    let mut tree = match &a.tree {
        Some(p) => FaultTree::parse(&read(p)?).map_err(|e| format!("{}: {e}", p.display()))?,
        None => fta::bundled_tree(),
    };
    for item in &a.set {
        let (name, value) = item
            .split_once('=')
            .ok_or_else(|| format!("`{item}` is not of the form NAME=p"))?;
        let p = parse_rational(value).ok_or_else(|| format!("`{value}` is not a number"))?;
        tree = tree.with_probability(name.trim(), p).map_err(|e| e.to_string())?;
    }
    let cuts = tree.minimal_cut_sets();
    let (probability, exact) = match tree.top_probability() {
        Ok(p) => (p, true),
        Err(FtaError::TooManyEvents { bound, .. }) => (bound, false),
        Err(e) => return Err(e.to_string()),
    };
    let cut_text = |c: &fta::CutSet| c.iter().cloned().collect::<Vec<_>>().join(" ");
    let text = match a.format {
        Format::Json => json(&serde_json::json!({
            "top": tree.top(),
            "cut_sets": cuts.iter().map(|c| c.iter().collect::<Vec<_>>()).collect::<Vec<_>>(),
            "probability": probability.to_string(),
            "probability_value": to_decimal(&probability, DIGITS),
            "exact": exact,
        })),
        Format::Csv => {
            let mut t = String::from("cut_set,probability\n");
            for c in &cuts {
                let p = c.iter().fold(BigRational::one(), |acc, e| {
                    acc * tree.probability_of(e).cloned().unwrap_or_default()
                });
                let _ = writeln!(t, "{},{}", cut_text(c), to_decimal(&p, DIGITS));
            }
            t
        }
        Format::Text => {
            let mut t = format!("top event {}\nminimal cut sets ({}):\n", tree.top(), cuts.len());
            for c in &cuts {
                let _ = writeln!(t, "  {{{}}}", cut_text(c));
            }
            let kind = if exact { "probability" } else { "rare-event upper bound" };
            let _ = writeln!(t, "{kind} = {} ~ {}", probability, to_decimal(&probability, DIGITS));
            t
        }
    };
    emit(a.output.as_deref(), &text, out)?;
    Ok(Outcome::Ok)
}

fn partition(a: &CcpArgs) -> Result<Option<ClassPartition>, String> {
    let p = match (&a.uniform, &a.probs) {
        (Some(l), None) => ClassPartition::uniform(*l),
        (None, Some(list)) => {
            let probs = list
                .split(',')
                .map(|s| s.trim().parse::<f64>().map_err(|_| format!("`{s}` is not a number")))
                .collect::<Result<Vec<_>, _>>()?;
            ClassPartition::new(probs)
        }
        _ => return Ok(None),
    };
    p.map(Some).map_err(|e| e.to_string())
}

fn cmd_ccp(a: &CcpArgs, out: &mut dyn Write) -> CmdResult {
    let p = partition(a)?;
    let need = || {
        p.as_ref()
            .ok_or("a partition is required (--uniform or --probs)".to_string())
    };
    let mut record = serde_json::Map::new();
    let mut text = String::new();
    let nothing_requested = a.simulate.is_none() && a.log.is_none() && a.tau.is_none() && a.extend.is_none();
    if a.expected || nothing_requested {
        let p = need()?;
        let e = stats::expected_draws(p).map_err(|e| e.to_string())?;
        let _ = writeln!(text, "expected draws = {e:.10}");
        record.insert("expected_draws".into(), e.into());
    }
    let log = match (&a.log, a.simulate) {
        (Some(path), _) => {
            Some(VerificationRunLog::parse(&read(path)?).map_err(|e| format!("{}: {e}", path.display()))?)
        }
        (None, Some(m)) => Some(stats::simulate_runs(need()?, m, a.seed).map_err(|e| e.to_string())?),
        (None, None) => None,
    };
    if let Some(log) = &log {
        if let Some(path) = &a.save_log {
            emit(Some(path), &log.to_text(), out)?;
        }
        let mean = log.mean_draws();
        let _ = writeln!(
            text,
            "runs = {} (failed {}), mean draws = {}",
            log.m(),
            log.failed_runs(),
            mean.map_or("n/a".into(), |m| format!("{m:.6}"))
        );
        record.insert("runs".into(), log.m().into());
        record.insert("failed_runs".into(), log.failed_runs().into());
        record.insert("mean_draws".into(), mean.into());
    }
    if let Some(tau) = a.tau {
        let log = log.as_ref().ok_or("--tau needs --simulate or --log")?;
        let s = stats::required_samples(log, tau).map_err(|e| e.to_string())?;
        let _ = writeln!(text, "required samples at tau={tau}: {s}");
        record.insert("tau".into(), tau.into());
        record.insert("required_samples".into(), s.into());
    }
    if let Some(p_u) = a.extend {
        let p = need()?;
        let tau = a.tau.unwrap_or(0.95);
        let plan = stats::plan_extension(p, p_u, tau, a.runs, a.confidence, a.seed).map_err(|e| e.to_string())?;
        let _ = writeln!(
            text,
            "extension p_u={}: {} classes, expected draws {:.6}, S_new = {}, lower bound on P(X < S_new) = {:.6} at {} confidence from {} runs; {} all-covering runs needed",
            plan.p_u,
            plan.classes,
            plan.expected_draws,
            plan.s_bar_new,
            plan.coverage_lower_bound,
            plan.confidence,
            plan.runs,
            plan.runs_needed
        );
        record.insert(
            "extension".into(),
            serde_json::to_value(&plan).expect("serializable plan"),
        );
    }
    let text = match a.format {
        Format::Json => json(&record),
        Format::Csv => {
            let keys: Vec<&String> = record.keys().filter(|k| *k != "extension").collect();
            let values: Vec<String> = keys.iter().map(|k| record[*k].to_string()).collect();
            format!(
                "{}\n{}\n",
                keys.iter().map(|k| k.as_str()).collect::<Vec<_>>().join(","),
                values.join(",")
            )
        }
        Format::Text => text,
    };
    emit(a.output.as_deref(), &text, out)?;
    Ok(Outcome::Ok)
}

fn cmd_chi2(a: &Chi2Args, out: &mut dyn Write) -> CmdResult {
    if !(a.alpha > 0.0 && a.alpha < 1.0) {
        return Err(format!("--alpha {} is outside (0, 1)", a.alpha));
    }
    let table = match (&a.table, &a.pairs) {
        (Some(path), None) => stats::parse_table_csv(&read(path)?).map_err(|e| format!("{}: {e}", path.display()))?,
        (None, Some(path)) => {
            let pairs = stats::parse_pairs(&read(path)?).map_err(|e| format!("{}: {e}", path.display()))?;
            let binning = Binning {
                feature: match a.feature {
                    FeatureArg::Count => Feature::PixelCount,
                    FeatureArg::Overlap => Feature::Overlap,
                },
                buckets: a.buckets,
            };
            let t = stats::explanation_table(&pairs, binning).map_err(|e| e.to_string())?;
            if t.degenerate {
                return Err(format!(
                    "binned table is degenerate ({}x{}); no test is possible",
                    t.table.len(),
                    t.table.first().map_or(0, Vec::len)
                ));
            }
            t.table
        }
        _ => return Err("exactly one of --table and --pairs is required".into()),
    };
    let r = stats::chi2_independence(&table).map_err(|e| e.to_string())?;
    let rejects = r.rejects(a.alpha);
    let text = match a.format {
        Format::Json => json(&serde_json::json!({
            "result": r,
            "alpha": a.alpha,
            "rejects_independence": rejects,
        })),
        Format::Csv => format!(
            "statistic,dof,p_value,rejects\n{},{},{:e},{}\n",
            r.statistic, r.dof, r.p_value, rejects
        ),
        Format::Text => {
            let mut t = format!(
                "chi2 = {:.6}, dof = {}, p = {:.6e}\n{} independence at alpha = {}\n",
                r.statistic,
                r.dof,
                r.p_value,
                if rejects { "rejects" } else { "does not reject" },
                a.alpha
            );
            for w in &r.warnings {
                let _ = writeln!(t, "warning: {w}");
            }
            t
        }
    };
    emit(a.output.as_deref(), &text, out)?;
    Ok(if rejects && a.expect_independent {
        Outcome::Failed
    } else {
        Outcome::Ok
    })
}

fn cmd_simulate(a: &SimulateArgs, out: &mut dyn Write) -> CmdResult {
    let chain = build(&a.model)?;
    let point = bindings(&a.set, &chain)?;
    let opts = SimOptions {
        runs: a.runs,
        horizon: a.horizon,
        confidence: a.confidence,
        seed: a.seed,
    };
    let tgt = target(&a.target)?;
    let via = a
        .via
        .as_deref()
        .map(|v| {
            StatePredicate::parse(v)
                .map(Target::Predicate)
                .map_err(|e| format!("predicate {e}"))
        })
        .transpose()?;
    let (est, exact) = match &via {
        Some(via) => {
            let est = solver::simulate_conditional(&chain, via, &tgt, &point, &opts).map_err(|e| e.to_string())?;
            let exact = if a.compare {
                Some(
                    solver::conditional_fn_prob(&chain, via, &tgt)
                        .and_then(|s| Ok(s.evaluate(&point)?))
                        .map_err(|e| e.to_string())?,
                )
            } else {
                None
            };
            (est, exact)
        }
        None => {
            let q = ReachQuery {
                target: tgt,
                from: None,
            };
            let est = solver::simulate_reach(&chain, &q, &point, &opts).map_err(|e| e.to_string())?;
            let exact = if a.compare {
                Some(
                    solver::reach_prob(&chain, &q)
                        .and_then(|s| Ok(s.evaluate(&point)?))
                        .map_err(|e| e.to_string())?,
                )
            } else {
                None
            };
            (est, exact)
        }
    };
    let covers = exact.as_ref().map(|v| est.covers(to_f64(v)));
    let text = match a.format {
        Format::Json => json(&serde_json::json!({
            "estimate": est,
            "exact": exact.as_ref().map(|v| to_decimal(v, DIGITS)),
            "covers": covers,
        })),
        Format::Csv => format!(
            "mean,half_width,runs,hits,truncated,exact\n{},{},{},{},{},{}\n",
            est.mean,
            est.half_width,
            est.runs,
            est.hits,
            est.truncated,
            exact.as_ref().map_or(String::new(), |v| to_decimal(v, DIGITS))
        ),
        Format::Text => {
            let mut t = format!(
                "estimate {:.6} +/- {:.6} ({}% interval, {} runs, {} hits, seed {})\n",
                est.mean,
                est.half_width,
                est.confidence * 100.0,
                est.runs,
                est.hits,
                est.seed
            );
            if est.truncated > 0 {
                let _ = writeln!(t, "warning: {} runs hit the jump horizon", est.truncated);
            }
            if let (Some(v), Some(c)) = (&exact, covers) {
                let _ = writeln!(
                    t,
                    "exact {} is {} the interval",
                    to_decimal(v, DIGITS),
                    if c { "inside" } else { "outside" }
                );
            }
            t
        }
    };
    emit(a.output.as_deref(), &text, out)?;
    Ok(Outcome::Ok)
}
