mod common;

use std::collections::BTreeSet;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::{dense_reach, interior_point, q, random_model};
use pra::ctmc::build_source;
use pra::polyrat::{to_f64, Point};
use pra::solver::{self, ReachQuery, SimOptions};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn parametric_equals_concrete_and_the_dense_oracle(seed in any::<u64>(), n in 3usize..30, params in 0usize..=2) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let model = random_model(&mut rng, n, params);
        let chain = build_source(&model.source).unwrap();
        let query = ReachQuery::label("goal");
        let symbolic = solver::reach_prob(&chain, &query).unwrap();
        let goal: BTreeSet<usize> = chain.label("goal").unwrap().clone();
        for _ in 0..3 {
            let point = interior_point(&mut rng, &model.params);
            let v = symbolic.evaluate(&point).unwrap();
            prop_assert!(v >= q(0, 1) && v <= q(1, 1));
            let inst = chain.instantiate(&point).unwrap();
            let concrete = solver::reach_prob(&inst, &query).unwrap().value.as_constant().unwrap();
            prop_assert_eq!(&v, &concrete);
            let rows: Vec<_> = inst
                .transitions
                .iter()
                .map(|r| r.iter().map(|(t, x)| (*t, x.as_constant().unwrap())).collect())
                .collect();
            prop_assert_eq!(dense_reach(&rows, &goal, inst.initial), concrete);
        }
    }
}

#[test]
fn two_exit_race() {
    let chain = build_source(include_str!("../examples/race.gcl")).unwrap();
    let p = solver::reach_prob(&chain, &ReachQuery::label("win")).unwrap();
    let point = Point::from([("a".to_string(), q(1, 1)), ("b".to_string(), q(3, 1))]);
    assert_eq!(p.evaluate(&point).unwrap(), q(1, 4));
}

#[test]
fn target_at_start_and_unreachable_target() {
    let chain = build_source(
        "ctmc module m s:[0..2] init 0; [] s=0 -> 1:(s'=1); endmodule
         label \"start\" = s=0; label \"never\" = s=2;",
    )
    .unwrap();
    assert!(solver::reach_prob(&chain, &ReachQuery::label("start"))
        .unwrap()
        .value
        .is_one());
    assert!(solver::reach_prob(&chain, &ReachQuery::label("never"))
        .unwrap()
        .value
        .is_zero());
    assert!(solver::reach_prob(&chain, &ReachQuery::label("missing")).is_err());
}

#[test]
fn simulation_is_calibrated_and_reproducible() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut covered = 0;
    let cases = 30;
    for k in 0..cases {
        let model = random_model(&mut rng, 12, 1);
        let chain = build_source(&model.source).unwrap();
        let query = ReachQuery::label("goal");
        let point = interior_point(&mut rng, &model.params);
        let exact = to_f64(&solver::reach_prob(&chain, &query).unwrap().evaluate(&point).unwrap());
        let opts = SimOptions {
            runs: 20_000,
            seed: k,
            ..SimOptions::default()
        };
        let a = solver::simulate_reach(&chain, &query, &point, &opts).unwrap();
        let b = solver::simulate_reach(&chain, &query, &point, &opts).unwrap();
        assert_eq!((a.hits, a.truncated), (b.hits, b.truncated));
        covered += a.covers(exact) as u32;
    }
    assert!(covered >= cases as u32 - 3, "{covered} of {cases} intervals cover");
}

#[test]
fn conditional_probability_sums_over_intermediate_states() {
    // Two paths to "mid" states, each continuing to "end" with its own chance.
    let src = "ctmc param p;
        module m
          s:[0..5] init 0;
          [] s=0 -> p:(s'=1) + (1-p):(s'=2);
          [] s=1 -> 1:(s'=3) + 1:(s'=5);
          [] s=2 -> 3:(s'=3) + 1:(s'=5);
          [] s=3 -> 1:(s'=4);
        endmodule
        label \"mid\" = s=1 | s=2; label \"end\" = s=4;";
    let chain = build_source(src).unwrap();
    let p = solver::conditional_fn_prob(
        &chain,
        &solver::Target::Label("mid".into()),
        &solver::Target::Label("end".into()),
    )
    .unwrap();
    let point = Point::from([("p".to_string(), q(1, 2))]);
    // 1/2 * 1/2 + 1/2 * 3/4
    assert_eq!(p.evaluate(&point).unwrap(), q(5, 8));
    assert!(p.warnings.is_empty());
}
