//! The bundled 2oo2 object-detection model: symbolic false-negative
//! probability, the 3oo3 hazard rate and its verdict.

use num_rational::BigRational;
use pra::odrisk::{self, GridAxis, OdParameters, Prob};

fn q(n: i64, d: i64) -> BigRational {
    BigRational::new(n.into(), d.into())
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let symbolic = odrisk::assess_3oo3(&OdParameters::default())?;
    print!("{}", symbolic.to_text());

    println!();
    let point = odrisk::assess_3oo3(&OdParameters::at(q(1, 25), q(1, 25)))?;
    print!("{}", point.to_text());

    // A transient voter fault alone already produces false negatives.
    let voter = OdParameters {
        pv: Prob::fixed(1, 100),
        ..OdParameters::at(q(0, 1), q(0, 1))
    };
    println!("\nvoter fault only: P[FN] = {}", odrisk::assess_2oo2(&voter)?.value);

    let axis = GridAxis::new(q(1, 50), q(1, 10), 5);
    let grid = odrisk::grid(&OdParameters::default(), &axis, &axis)?;
    print!("\n{}", grid.to_csv());
    Ok(())
}
