//! Independence of the two channels' explanations: bin bit matrices into a
//! contingency table and run the χ² test.

use pra::stats::{self, Binning, BitMatrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_map(rng: &mut ChaCha8Rng, density: f64) -> BitMatrix {
    let bits = (0..64).map(|_| rng.gen_bool(density)).collect();
    BitMatrix::new(8, 8, bits).expect("8x8")
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let independent: Vec<_> = (0..600)
        .map(|_| {
            let dc = rng.gen_range(0.1..0.6);
            let dn = rng.gen_range(0.1..0.6);
            (random_map(&mut rng, dc), random_map(&mut rng, dn))
        })
        .collect();
    let t = stats::explanation_table(&independent, Binning::default())?;
    let r = stats::chi2_independence(&t.table)?;
    println!(
        "independent: chi2 = {:.3}, dof = {}, p = {:.4}",
        r.statistic, r.dof, r.p_value
    );

    // Identical explanations: the table concentrates on the diagonal.
    let shared: Vec<_> = independent.iter().map(|(c, _)| (c.clone(), c.clone())).collect();
    let t = stats::explanation_table(&shared, Binning::default())?;
    let r = stats::chi2_independence(&t.table)?;
    println!(
        "shared:      chi2 = {:.3}, dof = {}, p = {:.3e}",
        r.statistic, r.dof, r.p_value
    );

    let r = stats::chi2_independence(&[vec![50, 0], vec![0, 50]])?;
    println!("[[50,0],[0,50]]: chi2 = {}, p = {:.3e}", r.statistic, r.p_value);

    println!(
        "P(both misclassify) = {}",
        stats::joint_misclassification(0.04, 0.04, true, true)
    );
    Ok(())
}
