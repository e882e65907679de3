//! Cross-check an exact result by simulation on the OD model.

use num_rational::BigRational;
use pra::ctmc::StatePredicate;
use pra::odrisk::{build_od_model, OdParameters, Prob, FIN_PREDICATE, OD_PREDICATE};
use pra::polyrat::{to_f64, Point};
use pra::solver::{conditional_fn_prob, simulate_conditional, SimOptions, Target};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let params = OdParameters {
        pv: Prob::fixed(1, 20),
        ..OdParameters::default()
    };
    let chain = build_od_model(&params)?;
    let od = Target::Predicate(StatePredicate::parse(OD_PREDICATE)?);
    let fin = Target::Predicate(StatePredicate::parse(FIN_PREDICATE)?);
    let exact = conditional_fn_prob(&chain, &od, &fin)?;
    println!("P[FN] = {}", exact.value);

    let point = Point::from([
        ("pn".to_string(), BigRational::new(1.into(), 5.into())),
        ("pc".to_string(), BigRational::new(1.into(), 4.into())),
    ]);
    let value = to_f64(&exact.evaluate(&point)?);
    let est = simulate_conditional(&chain, &od, &fin, &point, &SimOptions::default())?;
    println!(
        "exact {value:.6}, simulated {:.6} +/- {:.6}, covered: {}",
        est.mean,
        est.half_width,
        est.covers(value)
    );
    Ok(())
}
