use cpas_core::dynamics::{estimate_beta_c, survival_estimate, BetaCSearch, BetaDirection};
use cpas_core::{Error, InitialCondition, LatticeGeometry, Params};

#[test]
fn isolated_infection_dies_out() {
    let p = Params::new(0.0, 0.0, 1.0).unwrap();
    let geo = LatticeGeometry::new(1, 5).unwrap();
    let e = survival_estimate(&p, geo, InitialCondition::SingleAsymptomatic, 30.0, 500, 1).unwrap();
    assert_eq!(e.survived, 0);
    assert!(e.probability.hi < 0.01);
}

#[test]
fn supercritical_rates_survive() {
    let p = Params::new(5.0, 5.0, 1.0).unwrap();
    let geo = LatticeGeometry::new(1, 200).unwrap();
    let e = survival_estimate(&p, geo, InitialCondition::SingleAsymptomatic, 100.0, 200, 2).unwrap();
    assert!(e.probability.value > 0.1, "{:?}", e.probability);
    assert!(e.probability.lo <= e.probability.value && e.probability.value <= e.probability.hi);
    assert!((0.0..=1.0).contains(&e.density.lo) && (0.0..=1.0).contains(&e.density.hi));
}

#[test]
fn estimates_are_reproducible() {
    let p = Params::new(3.0, 4.0, 0.5).unwrap();
    let geo = LatticeGeometry::new(1, 50).unwrap();
    let a = survival_estimate(&p, geo, InitialCondition::SingleAsymptomatic, 20.0, 64, 9).unwrap();
    let b = survival_estimate(&p, geo, InitialCondition::SingleAsymptomatic, 20.0, 64, 9).unwrap();
    assert_eq!(a, b);
}

#[test]
fn bracket_on_one_side_is_an_error() {
    let base = Params::new(0.0, 0.0, 0.0).unwrap();
    let geo = LatticeGeometry::new(1, 100).unwrap();
    let mut s = BetaCSearch::new(BetaDirection::Beta1, base, geo, (5.0, 6.0));
    s.t_max = 30.0;
    s.replicas = 100;
    s.threshold = 0.2;
    assert!(matches!(estimate_beta_c(&s), Err(Error::Bracket(_))));
}

#[test]
fn monotonicity_is_flagged_only_where_proved() {
    let geo = LatticeGeometry::new(1, 10).unwrap();
    let g0 = BetaCSearch::new(BetaDirection::Beta1, Params::new(0.0, 0.0, 0.0).unwrap(), geo, (1.0, 6.0));
    assert!(g0.monotonicity_proved());
    let above = BetaCSearch::new(BetaDirection::Beta1, Params::new(0.0, 2.0, 0.5).unwrap(), geo, (1.0, 6.0));
    assert!(!above.monotonicity_proved());
    let below = BetaCSearch::new(BetaDirection::Beta1, Params::new(0.0, 8.0, 0.5).unwrap(), geo, (1.0, 6.0));
    assert!(below.monotonicity_proved());
}

fn bracket_mid(direction: BetaDirection, base: Params) -> f64 {
    let geo = LatticeGeometry::new(1, 400).unwrap();
    let mut s = BetaCSearch::new(direction, base, geo, (2.5, 5.0));
    s.replicas = 600;
    s.seed = 17;
    let b = estimate_beta_c(&s).unwrap();
    assert!(b.hi - b.lo <= s.tolerance);
    0.5 * (b.lo + b.hi)
}

/// Large gamma turns every infection symptomatic almost at once, so the
/// search along beta2 with beta1 = 0 lands near the gamma = 0 search along beta1.
#[test]
fn large_gamma_matches_basic_contact_threshold() {
    let along_beta1 = bracket_mid(BetaDirection::Beta1, Params::new(0.0, 0.0, 0.0).unwrap());
    let along_beta2 = bracket_mid(BetaDirection::Beta2, Params::new(0.0, 0.0, 1e3).unwrap());
    assert!((along_beta1 - along_beta2).abs() < 0.3, "{along_beta1} vs {along_beta2}");
}
