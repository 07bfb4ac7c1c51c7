use std::collections::BTreeMap;

use approx::assert_abs_diff_eq;
use stoclear::fixtures;
use stoclear::model::{product_scenarios, realized_value, social_surplus, validate_instance, ScenarioError};

fn has_error(errors: &[String], needle: &str) -> bool {
    errors.iter().any(|e| e.contains(needle))
}

#[test]
fn micro1_validates_cleanly() {
    let rep = validate_instance(&fixtures::micro1());
    assert!(rep.errors.is_empty(), "{:?}", rep.errors);
}

#[test]
fn embedded_instances_validate() {
    for name in fixtures::NAMES {
        let inst = fixtures::load(name).unwrap();
        let rep = validate_instance(&inst);
        assert!(rep.errors.is_empty(), "{name}: {:?}", rep.errors);
    }
}

#[test]
fn probabilities_not_summing_to_one_are_reported() {
    let mut inst = fixtures::micro1();
    inst.scenarios.scenarios[0].prob = 0.5;
    inst.scenarios.scenarios[1].prob = 0.4;
    let rep = validate_instance(&inst);
    assert!(has_error(&rep.errors, "probabilities sum to 0.9"), "{:?}", rep.errors);
}

#[test]
fn bound_inversion_is_reported() {
    let mut inst = fixtures::micro1();
    inst.participants[0].x_min = 50.0;
    inst.participants[0].x_max = 40.0;
    let rep = validate_instance(&inst);
    assert!(has_error(&rep.errors, "bound inversion"), "{:?}", rep.errors);
}

#[test]
fn dangling_bus_reference_is_reported() {
    let mut inst = fixtures::micro1();
    inst.participants[1].bus = 7;
    let rep = validate_instance(&inst);
    assert!(has_error(&rep.errors, "missing bus"), "{:?}", rep.errors);
}

#[test]
fn negative_generator_margin_is_a_warning() {
    let mut inst = fixtures::micro1();
    inst.participants[0].delta_minus = 12.0;
    let rep = validate_instance(&inst);
    assert!(rep.errors.is_empty());
    assert!(rep.warnings.iter().any(|w| w.contains("c - delta_minus")), "{:?}", rep.warnings);
}

#[test]
fn product_of_two_five_outcome_units_has_25_equal_scenarios() {
    let mut outcomes = BTreeMap::new();
    outcomes.insert("Wind1".to_string(), vec![30.0, 50.0, 60.0, 70.0, 90.0]);
    outcomes.insert("Wind2".to_string(), vec![30.0, 50.0, 60.0, 70.0, 90.0]);
    let set = product_scenarios(&outcomes).unwrap();
    assert_eq!(set.len(), 25);
    for s in &set.scenarios {
        assert_abs_diff_eq!(s.prob, 0.04, epsilon = 1e-15);
    }
    assert_abs_diff_eq!(set.probs().iter().sum::<f64>(), 1.0, epsilon = 1e-12);
    // first id varies slowest
    assert_eq!(set.scenarios[1].avail["Wind1"], 30.0);
    assert_eq!(set.scenarios[1].avail["Wind2"], 50.0);
    assert_eq!(set.scenarios[5].avail["Wind1"], 50.0);
}

#[test]
fn product_of_one_unit() {
    let mut outcomes = BTreeMap::new();
    outcomes.insert("Wind".to_string(), vec![10.0, 20.0, 60.0, 70.0, 90.0]);
    let set = product_scenarios(&outcomes).unwrap();
    assert_eq!(set.len(), 5);
    assert!(set.scenarios.iter().all(|s| s.prob == 0.2));

    let mut single = BTreeMap::new();
    single.insert("Wind".to_string(), vec![42.0]);
    let set = product_scenarios(&single).unwrap();
    assert_eq!(set.len(), 1);
    assert_eq!(set.scenarios[0].prob, 1.0);
}

#[test]
fn empty_outcome_list_is_an_error() {
    let mut outcomes = BTreeMap::new();
    outcomes.insert("Wind".to_string(), vec![]);
    assert_eq!(product_scenarios(&outcomes).unwrap_err(), ScenarioError::EmptyOutcomes("Wind".into()));
}

#[test]
fn realized_value_examples() {
    let inst = fixtures::micro1();
    let g = &inst.participants[0];
    let d = &inst.participants[1];
    assert_eq!(realized_value(g, 40.0, 40.0), -400.0);
    assert_eq!(realized_value(g, 40.0, 80.0), -840.0);
    assert_eq!(realized_value(d, -40.0, -40.0), 2000.0);
}

#[test]
fn social_surplus_examples() {
    let inst = fixtures::micro1();
    assert_eq!(social_surplus(&inst, &[40.0, -40.0], &[40.0, -40.0]), 1600.0);
    assert_eq!(social_surplus(&inst, &[0.0, 0.0], &[0.0, 0.0]), 0.0);
}
