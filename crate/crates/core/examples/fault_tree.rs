//! Minimal cut sets and exact top-event probability of the bundled OD tree,
//! then of a small tree given inline.

use num_rational::BigRational;
use pra::fta::{bundled_tree, FaultTree};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let tree = bundled_tree();
    for cut in tree.minimal_cut_sets() {
        println!("{cut:?}");
    }
    println!("P[{}] = {}", tree.top(), tree.top_probability()?);

    let tree = tree.with_probability("V_r", BigRational::new(1.into(), 1000.into()))?;
    println!("with V_r = 1/1000: {}", tree.top_probability()?);
    println!("rare-event bound: {}", tree.rare_event_bound());

    let small = FaultTree::parse(
        "basic a p=1/2
         basic b p=1/2
         basic c p=1/10
         gate g1 AND a,b
         gate top OR g1,c
         top top",
    )?;
    println!("\n{}P = {}", small.render(), small.top_probability()?);
    Ok(())
}
