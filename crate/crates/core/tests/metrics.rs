mod common;

use approx::assert_abs_diff_eq;
use stoclear::clearing::clear;
use stoclear::fixtures;
use stoclear::formulations::FormulationKind;
use stoclear::metrics::{
    cost_recovery, metrics_report, mv_conditions, realized_values, relationship_checks, revenue_adequacy, CheckMode,
    MetricsReport,
};
use stoclear::pricing::{payments, Mechanism};
use stoclear::verify::{verify_instance, VerifyOptions};
use stoclear::Error;

fn report(inst: &stoclear::model::Instance, kind: FormulationKind) -> MetricsReport {
    let cl = clear(inst, kind).unwrap();
    let pay = payments(inst, &cl.dispatch, &cl.duals);
    metrics_report(inst, &cl.dispatch, &cl.duals, &pay).unwrap()
}

#[test]
fn micro1_settlement_totals() {
    // ρ_G = 10·40 = 400 in the low scenario and 400 + 11·40 = 840 in the high
    // one, so the expected cost is 620
    let inst = fixtures::micro1();
    let rc = report(&inst, FormulationKind::Canonical);
    let rm = report(&inst, FormulationKind::MeanVector);
    let rs = report(&inst, FormulationKind::StateVector);
    for r in [&rc, &rs] {
        assert_abs_diff_eq!(r.cost, 620.0, epsilon = 1e-7);
        assert_abs_diff_eq!(r.expected_adequacy.net_income, 0.0, epsilon = 1e-7);
    }
    assert_abs_diff_eq!(rm.expected_adequacy.net_income, -160.0, epsilon = 1e-7);
    assert!(!rm.expected_adequacy.adequate);
    let cond = rm.mv_conditions.as_ref().unwrap();
    assert_abs_diff_eq!(cond.aggregate, 160.0, epsilon = 1e-7);
    assert!(!cond.adequacy_guaranteed);
    assert!(rc.mv_conditions.is_none());
}

#[test]
fn micro1_generator_recovers_costs_under_every_mechanism() {
    let inst = fixtures::micro1();
    for kind in [FormulationKind::Canonical, FormulationKind::MeanVector, FormulationKind::StateVector] {
        let r = report(&inst, kind);
        assert!(r.covered_by_guarantee);
        assert!(r.generators.iter().all(|g| g.expected_recovery), "{kind:?}");
    }
    let rs = report(&inst, FormulationKind::StateVector);
    assert!(rs.generators.iter().all(|g| g.scenario_recovery));
}

#[test]
fn revenue_adequacy_modes_differ() {
    let inst = fixtures::micro1();
    let c = clear(&inst, FormulationKind::Canonical).unwrap();
    let pay = payments(&inst, &c.dispatch, &c.duals);
    let exp = revenue_adequacy(&pay, CheckMode::Expectation);
    let scen = revenue_adequacy(&pay, CheckMode::Scenario);
    assert!(exp.adequate);
    // scenario income can only be lower than its expectation
    assert!(scen.net_income <= exp.net_income + 1e-9);
}

#[test]
fn cost_recovery_rejects_mismatched_inputs() {
    let inst = fixtures::micro1();
    let c = clear(&inst, FormulationKind::Canonical).unwrap();
    let pay = payments(&inst, &c.dispatch, &c.duals);
    let mut real = realized_values(&inst, &c.dispatch);
    real.pop();
    assert!(matches!(cost_recovery(&inst, &pay, &real, CheckMode::Scenario), Err(Error::Input(_))));
}

#[test]
fn mean_vector_conditions_need_mean_vector_duals() {
    let inst = fixtures::micro1();
    let c = clear(&inst, FormulationKind::Canonical).unwrap();
    assert!(matches!(mv_conditions(&inst, &c.duals, &c.dispatch), Err(Error::Input(_))));
}

#[test]
fn clairvoyant_prices_are_revenue_adequate() {
    for seed in 0..10 {
        let inst = stoclear::synth::random_instance(seed, &Default::default());
        for s in 0..inst.num_scenarios() {
            let cv = clear(&inst, FormulationKind::Clairvoyant { scenario: s }).unwrap();
            let pay = payments(&inst, &cv.dispatch, &cv.duals);
            assert!(revenue_adequacy(&pay, CheckMode::Scenario).adequate, "seed {seed} scenario {s}");
        }
    }
}

#[test]
fn relationship_checks_hold_on_micro1() {
    let inst = fixtures::micro1();
    let c = clear(&inst, FormulationKind::Canonical).unwrap();
    let mv = clear(&inst, FormulationKind::MeanVector).unwrap();
    let sv = clear(&inst, FormulationKind::StateVector).unwrap();
    let rep = relationship_checks(&inst, &c, &mv, &sv, 1e-5).unwrap();
    assert!(rep.pass, "{rep:?}");
    assert!(rep.mapped_dual_kkt.pass);
}

#[test]
fn relationship_checks_hold_for_a_single_scenario() {
    let mut inst = fixtures::micro1();
    inst.scenarios.scenarios.truncate(1);
    inst.scenarios.scenarios[0].prob = 1.0;
    let c = clear(&inst, FormulationKind::Canonical).unwrap();
    let mv = clear(&inst, FormulationKind::MeanVector).unwrap();
    let sv = clear(&inst, FormulationKind::StateVector).unwrap();
    let rep = relationship_checks(&inst, &c, &mv, &sv, 1e-5).unwrap();
    assert!(rep.pass, "{rep:?}");
}

#[test]
fn relationship_checks_reject_swapped_arguments() {
    let inst = fixtures::micro1();
    let c = clear(&inst, FormulationKind::Canonical).unwrap();
    let mv = clear(&inst, FormulationKind::MeanVector).unwrap();
    assert!(relationship_checks(&inst, &mv, &c, &mv, 1e-5).is_err());
}

#[test]
fn micro1_verify_suite() {
    let rep = verify_instance(&fixtures::micro1(), &VerifyOptions::default()).unwrap();
    for name in [
        "kkt",
        "formulation_equivalence",
        "expected_sigma_zero",
        "price_relationships",
        "rs_scenario_cost_recovery",
        "rs_expected_revenue_adequacy",
        "rc_expected_cost_recovery",
        "rc_expected_revenue_adequacy",
        "clairvoyant_cost_recovery",
        "clairvoyant_revenue_adequacy",
    ] {
        let c = rep.check(name).unwrap_or_else(|| panic!("missing check {name}"));
        assert!(c.covered && c.holds, "{name}: {}", c.detail);
    }
    // the aggregate condition is positive, so no guarantee applies
    assert!(!rep.check("rm_conditional_revenue_adequacy").unwrap().covered);
}

#[test]
fn counterexample_breaks_distortion_bounds_only() {
    let rep = verify_instance(&common::at_bound_counterexample(), &VerifyOptions::default()).unwrap();
    let failed: Vec<&str> = rep.violations().map(|c| c.name).collect();
    assert_eq!(failed, ["rs_distortion_bound", "rm_distortion_bound", "rc_expected_distortion_bound"]);
    let rs = rep.check("rs_distortion_bound").unwrap();
    assert_abs_diff_eq!(rs.worst, 4.9, epsilon = 1e-9);
    assert!(rs.detail.contains("G1"), "{}", rs.detail);
}

#[test]
fn mechanism_follows_formulation() {
    assert_eq!(Mechanism::for_kind(FormulationKind::Canonical), Mechanism::Rc);
    assert_eq!(Mechanism::for_kind(FormulationKind::Clairvoyant { scenario: 0 }), Mechanism::Rc);
    assert_eq!(Mechanism::for_kind(FormulationKind::MeanVector), Mechanism::Rm);
    assert_eq!(Mechanism::for_kind(FormulationKind::StateVector), Mechanism::Rs);
}
