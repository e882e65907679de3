mod common;

use num_rational::BigRational;
use num_traits::Zero;

use common::q;
use pra::ctmc::StatePredicate;
use pra::odrisk::{self, GridAxis, OdParameters, Prob, Verdict, FIN_PREDICATE, OD_PREDICATE};
use pra::polyrat::{to_f64, Point, RationalFunction};
use pra::solver::{self, SimOptions, Target};

fn point(pn: &BigRational, pc: &BigRational) -> Point {
    Point::from([("pn".to_string(), pn.clone()), ("pc".to_string(), pc.clone())])
}

#[test]
fn eq5_identity_and_monotonicity_on_a_grid() {
    let axis = GridAxis::new(q(0, 1), q(1, 1), 11);
    let g = odrisk::grid(&OdParameters::default(), &axis, &axis).unwrap();
    let lod = q(1, 12);
    for row in &g.rows {
        let (p, hr) = row.values.as_ref().unwrap();
        assert_eq!(*hr, &lod * p * p * p);
    }
    for w in g.rows.windows(2) {
        if w[0].pn == w[1].pn {
            assert!(w[0].values.as_ref().unwrap().0 <= w[1].values.as_ref().unwrap().0);
        }
    }
    // Along pn with pc fixed.
    let values = axis.values();
    for pc in &values {
        let col: Vec<_> = g.rows.iter().filter(|r| &r.pc == pc).collect();
        for w in col.windows(2) {
            assert!(w[0].values.as_ref().unwrap().0 <= w[1].values.as_ref().unwrap().0);
        }
    }
}

#[test]
fn hazard_rate_is_lod_times_cube_symbolically() {
    let a = odrisk::assess_3oo3(&OdParameters::default()).unwrap();
    let expected = RationalFunction::constant(q(1, 12)).mul(&a.p_fn.value.pow(3));
    assert!(a.hr.equivalent(&expected));
    assert!(matches!(a.verdict, Verdict::Parametric(_)));
    assert_eq!(a.verdict_at(&point(&q(1, 25), &q(1, 25))).unwrap(), Verdict::Pass);
    assert_eq!(a.verdict_at(&point(&q(1, 2), &q(1, 2))).unwrap(), Verdict::Fail);
}

#[test]
fn insensitive_to_obstacle_share() {
    let reference = odrisk::assess_2oo2(&OdParameters::default()).unwrap().value;
    for (n, d) in [(0, 1), (1, 10), (1, 3), (9, 10), (1, 1)] {
        let params = OdParameters {
            q_obs: Prob::fixed(n, d),
            ..OdParameters::default()
        };
        let p = odrisk::assess_2oo2(&params).unwrap();
        assert!(p.value.equivalent(&reference), "q_obs = {n}/{d}: {}", p.value);
    }
    // Symbolic q_obs cancels as well.
    let params = OdParameters {
        q_obs: Prob::Symbolic,
        ..OdParameters::default()
    };
    assert!(odrisk::assess_2oo2(&params).unwrap().value.equivalent(&reference));
}

#[test]
fn voter_safety() {
    for (pn, pc) in [(1, 0), (0, 1)] {
        let p = odrisk::assess_2oo2(&OdParameters::at(q(pn, 1), q(pc, 1))).unwrap();
        assert!(p.value.is_zero());
    }
}

#[test]
fn voter_fault_contribution() {
    let params = OdParameters {
        pv: Prob::Symbolic,
        ..OdParameters::at(q(0, 1), q(0, 1))
    };
    let p = odrisk::assess_2oo2(&params).unwrap();
    // pv times the degraded share 1 - q_obs.
    let expected = RationalFunction::var("pv").mul(&RationalFunction::constant(q(1, 2)));
    assert!(p.value.equivalent(&expected), "{}", p.value);
}

#[test]
fn sensor_faults_raise_the_probability() {
    let base = odrisk::assess_2oo2(&OdParameters::at(q(1, 25), q(1, 25))).unwrap();
    let params = OdParameters {
        ps_c: Prob::fixed(1, 10),
        ps_n: Prob::fixed(1, 10),
        ..OdParameters::at(q(1, 25), q(1, 25))
    };
    let with = odrisk::assess_2oo2(&params).unwrap();
    assert!(with.value.as_constant().unwrap() > base.value.as_constant().unwrap());
}

#[test]
fn simulation_reproduces_the_symbolic_result() {
    let params = OdParameters {
        pv: Prob::fixed(1, 20),
        ps_c: Prob::fixed(1, 50),
        ..OdParameters::default()
    };
    let chain = odrisk::build_od_model(&params).unwrap();
    let od = Target::Predicate(StatePredicate::parse(OD_PREDICATE).unwrap());
    let fin = Target::Predicate(StatePredicate::parse(FIN_PREDICATE).unwrap());
    let exact = solver::conditional_fn_prob(&chain, &od, &fin).unwrap();
    let pt = point(&q(3, 10), &q(1, 5));
    let value = to_f64(&exact.evaluate(&pt).unwrap());
    let opts = SimOptions {
        runs: 1_000_000,
        seed: 5,
        ..SimOptions::default()
    };
    let est = solver::simulate_conditional(&chain, &od, &fin, &pt, &opts).unwrap();
    assert!(
        est.covers(value),
        "exact {value}, estimate {} +/- {}",
        est.mean,
        est.half_width
    );
    assert_eq!(est.truncated, 0);
}

#[test]
fn emitted_source_is_a_valid_model() {
    let params = OdParameters::at(q(1, 25), q(1, 50));
    let src = params.model_source().unwrap();
    let ast = pra::gcl::parse(&src).unwrap();
    assert!(ast.parameters.is_empty());
    assert_eq!(pra::gcl::render(&ast), src);
    let chain = pra::ctmc::build_source(&src).unwrap();
    let p = solver::reach_prob(&chain, &solver::ReachQuery::label("fin")).unwrap();
    assert_eq!(p.value.as_constant(), Some(q(1, 25) * q(1, 50)));
}

#[test]
fn fault_free_reachability_is_zero() {
    let chain = odrisk::build_od_model(&OdParameters::at(BigRational::zero(), BigRational::zero())).unwrap();
    let p = solver::reach_prob(&chain, &solver::ReachQuery::label("fin")).unwrap();
    assert!(p.value.is_zero());
}
