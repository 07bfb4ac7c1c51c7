mod common;

use stoclear::fixtures;
use stoclear::io::{attach_scenarios, parse_instance, parse_instance_str, parse_scenarios_csv_str, print_instance};
use stoclear::Error;

fn input_error(r: Result<impl std::fmt::Debug, Error>) -> String {
    match r {
        Err(Error::Input(msg)) => msg,
        other => panic!("expected an input error, got {other:?}"),
    }
}

#[test]
fn embedded_instances_round_trip() {
    for name in fixtures::NAMES {
        let inst = fixtures::load(name).unwrap();
        let text = print_instance(&inst);
        assert_eq!(parse_instance_str(&text).unwrap(), inst, "{name}");
        assert_eq!(print_instance(&parse_instance_str(&text).unwrap()), text, "{name}");
    }
}

#[test]
fn counterexample_round_trips() {
    let inst = common::at_bound_counterexample();
    assert_eq!(parse_instance_str(&print_instance(&inst)).unwrap(), inst);
}

#[test]
fn unknown_field_is_named() {
    let text = common::AT_BOUND_COUNTEREXAMPLE.replacen("\"name\": \"at-bound\",", "\"name\": \"at-bound\", \"colour\": 3,", 1);
    let msg = input_error(parse_instance_str(&text));
    assert!(msg.contains("colour"), "{msg}");
}

#[test]
fn malformed_json_reports_position() {
    let msg = input_error(parse_instance_str("{\n  \"name\": \n}"));
    assert!(msg.contains("line 3"), "{msg}");
}

#[test]
fn invalid_instance_is_rejected_with_every_error() {
    let text = common::AT_BOUND_COUNTEREXAMPLE.replace("\"x_min_mw\": 0, \"x_max_mw\": 50", "\"x_min_mw\": 60, \"x_max_mw\": 50");
    match parse_instance_str(&text) {
        Err(Error::Validation(errors)) => assert!(errors.iter().any(|e| e.contains("bound inversion")), "{errors:?}"),
        other => panic!("expected validation errors, got {other:?}"),
    }
}

#[test]
fn missing_file_is_an_io_error() {
    assert!(matches!(parse_instance(std::path::Path::new("/nonexistent/instance.json")), Err(Error::Io(_))));
}

#[test]
fn pzp6_shape() {
    let inst = fixtures::load("pzp6").unwrap();
    assert_eq!(inst.buses.len(), 6);
    assert_eq!(inst.participants.iter().filter(|p| p.is_generator()).count(), 6);
    assert_eq!(inst.participants.iter().filter(|p| !p.is_generator()).count(), 1);
    let l16 = inst.lines.iter().find(|l| l.name == "l16").expect("line l16");
    assert_eq!(l16.f_max, 150.0);
    assert_eq!(l16.f_min, -150.0);
}

#[test]
fn scenario_csv_with_probabilities() {
    let inst = fixtures::micro1();
    let set = parse_scenarios_csv_str("scenario,prob,D\nlow,0.25,40\nhigh,0.75,80\n", &inst).unwrap();
    assert_eq!(set.len(), 2);
    assert_eq!(set.scenarios[1].name, "high");
    assert_eq!(set.scenarios[1].prob, 0.75);
    assert_eq!(set.scenarios[1].avail["D"], 80.0);
    let inst = attach_scenarios(&inst, set).unwrap();
    assert_eq!(inst.num_scenarios(), 2);
}

#[test]
fn scenario_csv_probabilities_must_sum_to_one() {
    let msg = input_error(parse_scenarios_csv_str("prob,D\n0.5,40\n0.48,80\n", &fixtures::micro1()));
    assert!(msg.contains("0.98"), "{msg}");
}

#[test]
fn scenario_csv_single_row_is_certain() {
    let set = parse_scenarios_csv_str("D\n55\n", &fixtures::micro1()).unwrap();
    assert_eq!(set.len(), 1);
    assert_eq!(set.scenarios[0].prob, 1.0);
}

#[test]
fn scenario_csv_without_probabilities_is_uniform() {
    let set = parse_scenarios_csv_str("D\n10\n20\n30\n40\n", &fixtures::micro1()).unwrap();
    assert!(set.scenarios.iter().all(|s| s.prob == 0.25));
}

#[test]
fn scenario_csv_rejects_unknown_columns_and_bad_values() {
    let inst = fixtures::micro1();
    assert!(input_error(parse_scenarios_csv_str("E\n10\n", &inst)).contains("unknown participant column E"));
    assert!(input_error(parse_scenarios_csv_str("D\n-5\n", &inst)).contains("negative availability for D"));
    assert!(input_error(parse_scenarios_csv_str("D\nlots\n", &inst)).contains("line 2"));
    assert!(input_error(parse_scenarios_csv_str("D\n", &inst)).contains("no rows"));
}
