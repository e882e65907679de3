//! Symbolic reachability: the result is a rational function of the model
//! parameters, evaluated exactly afterwards.

use num_rational::BigRational;
use pra::ctmc::build_source;
use pra::polyrat::{to_decimal, Point};
use pra::solver::{reach_prob, ReachQuery};

const MODEL: &str = r#"
ctmc
param p;
param q;
module m
  s:[0..3] init 0;
  [] s=0 -> p:(s'=1) + (1-p):(s'=2);
  [] s=1 -> q:(s'=3) + (1-q):(s'=0);
endmodule
label "hit" = s=3;
"#;

fn main() -> Result<(), Box<dyn std::error::Error + Send + Sync>> {
    let chain = build_source(MODEL)?;
    let sol = reach_prob(&chain, &ReachQuery::label("hit"))?;
    println!("P[F hit] = {}", sol.value);

    for (p, q) in [(1, 2), (1, 4), (9, 5)] {
        let point = Point::from([
            ("p".to_string(), BigRational::new(p.into(), 10.into())),
            ("q".to_string(), BigRational::new(q.into(), 10.into())),
        ]);
        let v = sol.evaluate(&point)?;
        println!("  p=0.{p} q=0.{q}: {v} ~ {}", to_decimal(&v, 8));
    }
    Ok(())
}
