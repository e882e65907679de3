//! Build a concrete chain and compute an exact reachability probability.

use pra::ctmc::build_source;
use pra::solver::{reach_prob, ReachQuery};

const MODEL: &str = r#"
ctmc
const p = 1/10;
module retry
  s:[0..3] init 0;
  [] s=0 -> 2:(s'=1);
  [] s=1 -> (1-p)*3:(s'=2) + p*3:(s'=0);   // occasional retry
  [] s=2 -> 1/2:(s'=3) + 1/2:(s'=0);
endmodule
label "done" = s=3;
"#;

fn main() -> Result<(), Box<dyn std::error::Error + Send + Sync>> {
    let chain = build_source(MODEL)?;
    println!("{} states, {} transitions", chain.num_states(), chain.num_transitions());
    print!("{}", chain.export());

    let sol = reach_prob(&chain, &ReachQuery::label("done"))?;
    println!("{} = {}", sol.query, sol.value);
    Ok(())
}
