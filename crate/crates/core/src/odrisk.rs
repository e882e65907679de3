//! End-to-end risk assessment of a 2oo2 object-detection module and of the
//! 3oo3 system built from three such modules.

use std::fmt::Write;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::ctmc::{self, Ctmc, CtmcError, StatePredicate};
use crate::gcl::{self, SourceError};
use crate::polyrat::{to_decimal, to_f64, Point, PolyError, RationalFunction};
use crate::solver::{conditional_fn_prob, ParamSolution, SolverError, Target};

pub const BUNDLED_MODEL: &str = include_str!("../models/od_2oo2.gcl");

/// Intermediate states: both channels have just received the demand.
pub const OD_PREDICATE: &str = "s_c=s_n & s_c=1 & (d=1 | d=2)";
/// Final states with a muted flag and a wrong or split verdict.
pub const FIN_PREDICATE: &str = "s_c=s_n & s_c=5 & !f & (com_c!=com_n | (com_c=com_n & r!=d))";

/// Digits used for decimal output.
pub const DIGITS: usize = 12;

#[derive(Debug, Error)]
pub enum OdError {
    #[error("parameter {name} = {value} is outside {range}")]
    Range {
        name: &'static str,
        value: String,
        range: &'static str,
    },
    #[error("bundled model: {0}")]
    Model(#[from] SourceError),
    #[error(transparent)]
    Ctmc(#[from] CtmcError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Poly(#[from] PolyError),
    #[error("grid range {lo}..{hi} is not inside [0, 1]")]
    GridRange { lo: String, hi: String },
    #[error("a grid axis needs at least one step")]
    GridSteps,
}

/// A probability that is either kept symbolic or fixed to a value.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Prob {
    Symbolic,
    Fixed(BigRational),
}

impl Prob {
    pub fn fixed(n: i64, d: i64) -> Self {
        Prob::Fixed(BigRational::new(n.into(), d.into()))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OdParameters {
    pub pn: Prob,
    pub pc: Prob,
    pub pv: Prob,
    pub ps_c: Prob,
    pub ps_n: Prob,
    pub q_obs: Prob,
    pub lsc: BigRational,
    pub lsn: BigRational,
    pub lpc: BigRational,
    pub lpn: BigRational,
    pub lv: BigRational,
    /// Demand rate per hour.
    pub lod: BigRational,
}

impl Default for OdParameters {
    fn default() -> Self {
        let one = BigRational::one();
        OdParameters {
            pn: Prob::Symbolic,
            pc: Prob::Symbolic,
            pv: Prob::Fixed(BigRational::zero()),
            ps_c: Prob::Fixed(BigRational::zero()),
            ps_n: Prob::Fixed(BigRational::zero()),
            q_obs: Prob::fixed(1, 2),
            lsc: one.clone(),
            lsn: one.clone(),
            lpc: one.clone(),
            lpn: one.clone(),
            lv: one,
            lod: BigRational::new(2.into(), 24.into()),
        }
    }
}

impl OdParameters {
    /// Default parameters with both misclassification probabilities fixed.
    pub fn at(pn: BigRational, pc: BigRational) -> Self {
        OdParameters {
            pn: Prob::Fixed(pn),
            pc: Prob::Fixed(pc),
            ..Self::default()
        }
    }

    fn probabilities(&self) -> [(&'static str, &Prob); 6] {
        [
            ("pn", &self.pn),
            ("pc", &self.pc),
            ("pv", &self.pv),
            ("ps_c", &self.ps_c),
            ("ps_n", &self.ps_n),
            ("q_obs", &self.q_obs),
        ]
    }

    fn rates(&self) -> [(&'static str, &BigRational); 6] {
        [
            ("lsc", &self.lsc),
            ("lsn", &self.lsn),
            ("lpc", &self.lpc),
            ("lpn", &self.lpn),
            ("lv", &self.lv),
            ("lod", &self.lod),
        ]
    }

    pub fn validate(&self) -> Result<(), OdError> {
        for (name, p) in self.probabilities() {
            if let Prob::Fixed(v) = p {
                if v < &BigRational::zero() || v > &BigRational::one() {
                    return Err(OdError::Range {
                        name,
                        value: v.to_string(),
                        range: "[0, 1]",
                    });
                }
            }
        }
        for (name, r) in self.rates() {
            if r <= &BigRational::zero() {
                return Err(OdError::Range {
                    name,
                    value: r.to_string(),
                    range: "(0, inf)",
                });
            }
        }
        Ok(())
    }

    /// Names of the probabilities kept symbolic.
    pub fn symbolic(&self) -> Vec<&'static str> {
        self.probabilities()
            .into_iter()
            .filter(|(_, p)| **p == Prob::Symbolic)
            .map(|(n, _)| n)
            .collect()
    }

    /// The bundled model source with these parameters substituted.
    pub fn model_source(&self) -> Result<String, OdError> {
        self.validate()?;
        let mut ast = gcl::parse(BUNDLED_MODEL)?;
        for (name, p) in self.probabilities() {
            match p {
                Prob::Symbolic => ast.set_parameter(name),
                Prob::Fixed(v) => ast.set_constant(name, v.clone()),
            }
        }
        for (name, r) in self.rates() {
            ast.set_constant(name, r.clone());
        }
        Ok(gcl::render(&ast))
    }
}

/// Builds the chain of the bundled model under `params`.
pub fn build_od_model(params: &OdParameters) -> Result<Ctmc, OdError> {
    let source = params.model_source()?;
    let ast = gcl::parse(&source)?;
    let model = gcl::resolve(&ast)?;
    let ctmc = ctmc::build(&model)?;
    let od = StatePredicate::parse(OD_PREDICATE)?;
    let fin = StatePredicate::parse(FIN_PREDICATE)?;
    Ok(ctmc.label_states("od", &od)?.label_states("fin", &fin)?)
}

/// Probability of a false negative on demand for one 2oo2 module.
pub fn assess_2oo2(params: &OdParameters) -> Result<ParamSolution, OdError> {
    let ctmc = build_od_model(params)?;
    fn_probability(&ctmc)
}

fn fn_probability(ctmc: &Ctmc) -> Result<ParamSolution, OdError> {
    Ok(conditional_fn_prob(
        ctmc,
        &Target::Label("od".into()),
        &Target::Label("fin".into()),
    )?)
}

/// Tolerable hazard rate per hour.
pub fn thr() -> BigRational {
    BigRational::new(1.into(), BigInt::from(10u64.pow(7)))
}

/// Upper bound on a single module's failure rate per hour.
pub fn module_rate_limit() -> BigRational {
    BigRational::new(2.into(), BigInt::from(10u64.pow(4)))
}

/// Hazard rate of three independent, identically bounded modules.
pub fn hazard_rate(lod: &BigRational, p_fn: &RationalFunction) -> RationalFunction {
    RationalFunction::constant(lod.clone()).mul(&p_fn.pow(3))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PassRegion {
    /// Parameters sampled, each over `[0, 1]`.
    pub parameters: Vec<String>,
    pub samples: usize,
    pub passing: usize,
    /// Largest `t` (to 1e-12) such that the rate stays within the limit with
    /// every symbolic parameter equal to `t`, if the diagonal is monotone.
    pub diagonal_bound: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
    Parametric(PassRegion),
}

#[derive(Clone, Debug, Serialize)]
pub struct ModuleRateCheck {
    pub rate: Option<String>,
    pub limit: String,
    /// `None` while the rate is symbolic.
    pub ok: Option<bool>,
}

#[derive(Clone, Debug)]
pub struct OdAssessment {
    pub p_fn: ParamSolution,
    pub hr: RationalFunction,
    pub lod: BigRational,
    pub thr: BigRational,
    pub verdict: Verdict,
    pub module_rate: Option<BigRational>,
}

/// Serializable assessment record.
#[derive(Clone, Debug, Serialize)]
pub struct OdRecord {
    pub p_fn: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p_fn_value: Option<String>,
    pub hr: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hr_value: Option<String>,
    pub thr: String,
    pub verdict: Verdict,
    pub module_rate_check: ModuleRateCheck,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

const SAMPLES_PER_AXIS: usize = 21;
const RANDOM_SAMPLES: usize = 4096;

impl OdAssessment {
    pub fn p_fn_value(&self) -> Option<BigRational> {
        self.p_fn.value.as_constant()
    }

    pub fn hr_value(&self) -> Option<BigRational> {
        self.hr.as_constant()
    }

    /// Verdict at a point assigning every symbolic parameter.
    pub fn verdict_at(&self, point: &Point) -> Result<Verdict, OdError> {
        let v = self.hr.evaluate(point)?;
        Ok(if v <= self.thr { Verdict::Pass } else { Verdict::Fail })
    }

    pub fn record(&self) -> OdRecord {
        let limit = module_rate_limit();
        OdRecord {
            p_fn: self.p_fn.value.to_string(),
            p_fn_value: self.p_fn_value().map(|v| to_decimal(&v, DIGITS)),
            hr: self.hr.to_string(),
            hr_value: self.hr_value().map(|v| to_decimal(&v, DIGITS)),
            thr: "1e-7".into(),
            verdict: self.verdict.clone(),
            module_rate_check: ModuleRateCheck {
                rate: self.module_rate.as_ref().map(|r| to_decimal(r, DIGITS)),
                limit: "2e-4".into(),
                ok: self.module_rate.as_ref().map(|r| r < &limit),
            },
            warnings: self.p_fn.warnings.clone(),
        }
    }

    pub fn to_text(&self) -> String {
        let r = self.record();
        let mut out = String::new();
        let _ = writeln!(out, "P[FN]   = {}", r.p_fn);
        if let Some(v) = &r.p_fn_value {
            let _ = writeln!(out, "        ~ {v}");
        }
        let _ = writeln!(out, "HR      = {} /h", r.hr);
        if let Some(v) = &r.hr_value {
            let _ = writeln!(out, "        ~ {v} /h");
        }
        let _ = writeln!(out, "THR     = {} /h", r.thr);
        let verdict = match &r.verdict {
            Verdict::Pass => "pass".to_string(),
            Verdict::Fail => "fail".to_string(),
            Verdict::Parametric(region) => {
                let mut s = format!(
                    "parametric: {} of {} sampled points over [0,1]^{} pass",
                    region.passing,
                    region.samples,
                    region.parameters.len()
                );
                if let Some(t) = region.diagonal_bound {
                    let _ = write!(
                        s,
                        "; passes on the diagonal for {} <= {t:.6}",
                        region.parameters.join(" = ")
                    );
                }
                s
            }
        };
        let _ = writeln!(out, "verdict = {verdict}");
        let check = &r.module_rate_check;
        match (&check.rate, check.ok) {
            (Some(rate), Some(ok)) => {
                let _ = writeln!(
                    out,
                    "module failure rate {rate} /h {} {} /h",
                    if ok { "<" } else { ">=" },
                    check.limit
                );
            }
            _ => {
                let _ = writeln!(out, "module failure rate is symbolic (limit {} /h)", check.limit);
            }
        }
        for w in &r.warnings {
            let _ = writeln!(out, "warning: {w}");
        }
        out
    }
}

/// Hazard-rate assessment of three modules against the tolerable rate.
pub fn assess_3oo3(params: &OdParameters) -> Result<OdAssessment, OdError> {
    let p_fn = assess_2oo2(params)?;
    Ok(assess_solution(p_fn, params.lod.clone()))
}

fn assess_solution(p_fn: ParamSolution, lod: BigRational) -> OdAssessment {
    let hr = hazard_rate(&lod, &p_fn.value);
    let thr = thr();
    let verdict = match hr.as_constant() {
        Some(v) if v <= thr => Verdict::Pass,
        Some(_) => Verdict::Fail,
        None => Verdict::Parametric(pass_region(&hr, &thr)),
    };
    let module_rate = p_fn.value.as_constant().map(|p| &lod * p);
    OdAssessment {
        p_fn,
        hr,
        lod,
        thr,
        verdict,
        module_rate,
    }
}

fn pass_region(hr: &RationalFunction, thr: &BigRational) -> PassRegion {
    let params = hr.vars();
    let thr_f = to_f64(thr);
    let eval = |values: &[f64]| -> Option<f64> {
        let point: Point = params
            .iter()
            .zip(values)
            .map(|(n, v)| (n.clone(), BigRational::from_float(*v).unwrap_or_else(BigRational::zero)))
            .collect();
        hr.evaluate(&point).ok().map(|v| to_f64(&v))
    };
    let samples: Vec<Vec<f64>> = if params.len() <= 2 {
        let axis: Vec<f64> = (0..SAMPLES_PER_AXIS)
            .map(|i| i as f64 / (SAMPLES_PER_AXIS - 1) as f64)
            .collect();
        let mut pts = vec![vec![]];
        for _ in 0..params.len() {
            pts = pts
                .into_iter()
                .flat_map(|p| {
                    axis.iter().map(move |a| {
                        let mut q = p.clone();
                        q.push(*a);
                        q
                    })
                })
                .collect();
        }
        pts
    } else {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0);
        (0..RANDOM_SAMPLES)
            .map(|_| (0..params.len()).map(|_| rng.gen::<f64>()).collect())
            .collect()
    };
    let passing = samples
        .par_iter()
        .filter(|v| eval(v).is_some_and(|h| h <= thr_f))
        .count();
    PassRegion {
        parameters: params.clone(),
        samples: samples.len(),
        passing,
        diagonal_bound: diagonal_bound(&eval, params.len(), thr_f),
    }
}

/// Bisection for the pass boundary along the diagonal.
fn diagonal_bound(eval: &dyn Fn(&[f64]) -> Option<f64>, dims: usize, thr: f64) -> Option<f64> {
    let at = |t: f64| eval(&vec![t; dims]);
    if at(0.0)? > thr {
        return None;
    }
    if at(1.0)? <= thr {
        return Some(1.0);
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    while hi - lo > 1e-12 {
        let mid = 0.5 * (lo + hi);
        if at(mid)? <= thr {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(lo)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GridAxis {
    pub lo: BigRational,
    pub hi: BigRational,
    pub steps: usize,
}

impl GridAxis {
    pub fn new(lo: BigRational, hi: BigRational, steps: usize) -> Self {
        GridAxis { lo, hi, steps }
    }

    pub fn single(v: BigRational) -> Self {
        GridAxis::new(v.clone(), v, 1)
    }

    /// Evenly spaced values; a zero-width range yields one value.
    pub fn values(&self) -> Vec<BigRational> {
        if self.lo == self.hi || self.steps == 1 {
            return vec![self.lo.clone()];
        }
        let n = BigRational::from_integer(((self.steps - 1) as i64).into());
        let width = &self.hi - &self.lo;
        (0..self.steps)
            .map(|k| &self.lo + &width * BigRational::from_integer((k as i64).into()) / &n)
            .collect()
    }

    fn check(&self) -> Result<(), OdError> {
        if self.steps == 0 {
            return Err(OdError::GridSteps);
        }
        let unit = |v: &BigRational| v >= &BigRational::zero() && v <= &BigRational::one();
        if !unit(&self.lo) || !unit(&self.hi) || self.lo > self.hi {
            return Err(OdError::GridRange {
                lo: self.lo.to_string(),
                hi: self.hi.to_string(),
            });
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct GridRow {
    pub pn: BigRational,
    pub pc: BigRational,
    /// Exact `(p_fn, hr)`, or the evaluation error at this point.
    pub values: Result<(BigRational, BigRational), PolyError>,
}

#[derive(Clone, Debug)]
pub struct Grid {
    pub p_fn: ParamSolution,
    pub rows: Vec<GridRow>,
}

impl Grid {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("pn,pc,pfn,hr\n");
        for row in &self.rows {
            let (pfn, hr) = match &row.values {
                Ok((p, h)) => (to_decimal(p, DIGITS), to_decimal(h, DIGITS)),
                Err(e) => (format!("error: {e}"), String::new()),
            };
            let _ = writeln!(
                out,
                "{},{},{pfn},{hr}",
                to_decimal(&row.pn, DIGITS),
                to_decimal(&row.pc, DIGITS)
            );
        }
        out
    }
}

/// Evaluates `p_fn` and the hazard rate over a `pn × pc` grid. `pn` and `pc`
/// are made symbolic; other parameters keep their settings.
pub fn grid(params: &OdParameters, pn: &GridAxis, pc: &GridAxis) -> Result<Grid, OdError> {
    pn.check()?;
    pc.check()?;
    let symbolic = OdParameters {
        pn: Prob::Symbolic,
        pc: Prob::Symbolic,
        ..params.clone()
    };
    let p_fn = assess_2oo2(&symbolic)?;
    let hr = hazard_rate(&params.lod, &p_fn.value);
    let pcs = pc.values();
    let points: Vec<(BigRational, BigRational)> = pn
        .values()
        .into_iter()
        .flat_map(|a| pcs.iter().map(move |b| (a.clone(), b.clone())))
        .collect();
    let rows = points
        .into_par_iter()
        .map(|(a, b)| {
            let point = Point::from([("pn".to_string(), a.clone()), ("pc".to_string(), b.clone())]);
            let values = p_fn.value.evaluate(&point).and_then(|p| Ok((p, hr.evaluate(&point)?)));
            GridRow { pn: a, pc: b, values }
        })
        .collect();
    Ok(Grid { p_fn, rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    fn product() -> RationalFunction {
        RationalFunction::var("pn").mul(&RationalFunction::var("pc"))
    }

    #[test]
    fn bundled_model_parses() {
        let ast = gcl::parse(BUNDLED_MODEL).unwrap();
        assert_eq!(ast.modules.len(), 4);
        assert!(ast.labels.iter().any(|l| l.name == "fin"));
    }

    #[test]
    fn default_chain_is_polynomial_in_two_parameters() {
        let c = build_od_model(&OdParameters::default()).unwrap();
        assert_eq!(c.parameters, ["pn", "pc"]);
        for row in &c.transitions {
            for r in row.values() {
                assert!(r.is_polynomial());
                assert!(r.vars().iter().all(|v| v == "pn" || v == "pc"));
            }
        }
        assert_eq!(c.label("od").unwrap().len(), 2);
    }

    #[test]
    fn product_law() {
        let p = assess_2oo2(&OdParameters::default()).unwrap();
        assert!(p.value.equivalent(&product()), "{}", p.value);
    }

    #[test]
    fn anchored_point() {
        let p = assess_2oo2(&OdParameters::at(q(1, 25), q(1, 25))).unwrap();
        assert_eq!(p.value.as_constant(), Some(q(16, 10000)));
    }

    #[test]
    fn fault_free_is_zero() {
        let p = assess_2oo2(&OdParameters::at(q(0, 1), q(0, 1))).unwrap();
        assert!(p.value.is_zero());
    }

    #[test]
    fn only_obstacles() {
        let params = OdParameters {
            q_obs: Prob::fixed(1, 1),
            ..OdParameters::default()
        };
        let c = build_od_model(&params).unwrap();
        let degraded = c.states_where(&StatePredicate::parse("d=2").unwrap()).unwrap();
        assert!(degraded.is_empty());
    }

    #[test]
    fn three_out_of_three() {
        let a = assess_3oo3(&OdParameters::at(q(1, 25), q(1, 25))).unwrap();
        let expected = q(1, 12) * q(16, 10000) * q(16, 10000) * q(16, 10000);
        assert_eq!(a.hr_value(), Some(expected));
        assert_eq!(a.verdict, Verdict::Pass);
        assert_eq!(a.record().module_rate_check.ok, Some(true));

        let a = assess_3oo3(&OdParameters::at(q(1, 1), q(1, 1))).unwrap();
        assert_eq!(a.hr_value(), Some(q(1, 12)));
        assert_eq!(a.verdict, Verdict::Fail);
    }

    #[test]
    fn parametric_region() {
        let a = assess_3oo3(&OdParameters::default()).unwrap();
        let Verdict::Parametric(region) = &a.verdict else {
            panic!("expected a parametric verdict");
        };
        assert_eq!(region.samples, SAMPLES_PER_AXIS * SAMPLES_PER_AXIS);
        // t^6 / 12 = 1e-7
        let t = (1.2e-6f64).powf(1.0 / 6.0);
        assert!((region.diagonal_bound.unwrap() - t).abs() < 1e-9);
        assert_eq!(a.module_rate, None);
    }

    #[test]
    fn voter_fault_alone() {
        let params = OdParameters {
            pv: Prob::fixed(1, 10),
            ..OdParameters::at(q(0, 1), q(0, 1))
        };
        let p = assess_2oo2(&params).unwrap();
        // The faulty voter caps degraded verdicts to "present".
        assert_eq!(p.value.as_constant(), Some(q(1, 20)));
    }

    #[test]
    fn range_errors() {
        let params = OdParameters {
            pv: Prob::fixed(3, 2),
            ..OdParameters::default()
        };
        assert!(matches!(
            build_od_model(&params),
            Err(OdError::Range { name: "pv", .. })
        ));
        let params = OdParameters {
            lod: q(0, 1),
            ..OdParameters::default()
        };
        assert!(matches!(
            build_od_model(&params),
            Err(OdError::Range { name: "lod", .. })
        ));
    }

    #[test]
    fn grid_corners() {
        let axis = GridAxis::new(q(1, 50), q(1, 10), 5);
        let g = grid(&OdParameters::default(), &axis, &axis).unwrap();
        assert_eq!(g.rows.len(), 25);
        let first = g.rows.first().unwrap().values.as_ref().unwrap();
        let last = g.rows.last().unwrap().values.as_ref().unwrap();
        assert_eq!(first.0, q(4, 10000));
        assert_eq!(last.0, q(1, 100));
        let csv = g.to_csv();
        assert!(csv.starts_with("pn,pc,pfn,hr\n0.02,0.02,0.0004,"));
        let single = grid(
            &OdParameters::default(),
            &GridAxis::single(q(1, 25)),
            &GridAxis::single(q(1, 25)),
        )
        .unwrap();
        assert_eq!(single.rows.len(), 1);
        assert_eq!(single.rows[0].values.as_ref().unwrap().0, q(16, 10000));
        let zero_width = GridAxis::new(q(1, 25), q(1, 25), 7);
        assert_eq!(zero_width.values().len(), 1);
        assert!(grid(&OdParameters::default(), &GridAxis::new(q(1, 2), q(3, 2), 2), &axis).is_err());
    }
}
