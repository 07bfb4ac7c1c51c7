use approx::assert_abs_diff_eq;
use stoclear::clearing::clear;
use stoclear::fixtures;
use stoclear::formulations::{build, FormulationKind};
use stoclear::lp::{check_kkt, solve_lp, write_lp_format, LpModel, LpStatus, RowSense};

#[test]
fn one_variable_lp() {
    let mut m = LpModel::new();
    let x = m.add_var("x", f64::NEG_INFINITY, f64::INFINITY, 1.0);
    let r = m.add_row("lb", &[(x, 1.0)], RowSense::Ge, 3.0);
    let sol = solve_lp(&m).unwrap();
    assert_eq!(sol.status, LpStatus::Optimal);
    assert_abs_diff_eq!(sol.value(x), 3.0, epsilon = 1e-12);
    assert_abs_diff_eq!(sol.dual(r), 1.0, epsilon = 1e-12);
    assert_abs_diff_eq!(sol.objective, 3.0, epsilon = 1e-12);
    assert!(check_kkt(&m, &sol, 1e-9).pass);
}

#[test]
fn infeasible_pair_is_detected() {
    let mut m = LpModel::new();
    let x = m.add_var("x", f64::NEG_INFINITY, f64::INFINITY, 0.0);
    m.add_row("le", &[(x, 1.0)], RowSense::Le, 0.0);
    m.add_row("ge", &[(x, 1.0)], RowSense::Ge, 1.0);
    assert_eq!(solve_lp(&m).unwrap().status, LpStatus::Infeasible);
}

#[test]
fn unbounded_lp_is_detected() {
    let mut m = LpModel::new();
    let x = m.add_var("x", 0.0, f64::INFINITY, -1.0);
    m.add_row("ge", &[(x, 1.0)], RowSense::Ge, 1.0);
    assert_eq!(solve_lp(&m).unwrap().status, LpStatus::Unbounded);
}

#[test]
fn nan_coefficients_are_rejected() {
    let mut m = LpModel::new();
    let x = m.add_var("x", 0.0, 1.0, f64::NAN);
    m.add_row("r", &[(x, 1.0)], RowSense::Le, 1.0);
    assert!(solve_lp(&m).is_err());
}

#[test]
fn micro1_solution_passes_kkt() {
    for kind in [
        FormulationKind::Canonical,
        FormulationKind::MeanVector,
        FormulationKind::StateVector,
        FormulationKind::Clairvoyant { scenario: 1 },
    ] {
        let cl = clear(&fixtures::micro1(), kind).unwrap();
        assert!(cl.kkt.pass, "{kind:?}: {:?}", cl.kkt);
    }
}

#[test]
fn perturbed_primal_fails_with_named_row() {
    let (model, _) = build(&fixtures::micro1(), FormulationKind::Canonical).unwrap();
    let mut sol = solve_lp(&model).unwrap();
    sol.primal[0] += 1e-3;
    let rep = check_kkt(&model, &sol, 1e-7);
    assert!(!rep.pass);
    assert!(rep.primal_residual >= 1e-3 - 1e-12);
    assert!(rep.worst_primal.as_deref().is_some_and(|r| r.starts_with("row ")), "{:?}", rep.worst_primal);
}

#[test]
fn infinite_tolerance_always_passes() {
    let (model, _) = build(&fixtures::micro1(), FormulationKind::Canonical).unwrap();
    let mut sol = solve_lp(&model).unwrap();
    sol.primal[0] += 1e3;
    assert!(check_kkt(&model, &sol, f64::INFINITY).pass);
}

#[test]
fn solve_is_deterministic() {
    let inst = stoclear::synth::random_instance(11, &Default::default());
    let (model, _) = build(&inst, FormulationKind::StateVector).unwrap();
    let a = solve_lp(&model).unwrap();
    let b = solve_lp(&model).unwrap();
    assert_eq!(a.objective.to_bits(), b.objective.to_bits());
    assert_eq!(a.primal, b.primal);
    assert_eq!(a.duals, b.duals);
}

#[test]
fn lp_export_prints_twelve_significant_digits() {
    let mut m = LpModel::new();
    let x = m.add_var("x", 0.0, 1.0, 1.0 / 3.0);
    m.add_row("r", &[(x, 2.5)], RowSense::Le, 1234.5);
    let text = write_lp_format(&m);
    assert!(text.contains("0.333333333333 x"), "{text}");
    assert!(text.contains("2.5 x <= 1234.5"), "{text}");
}

#[test]
fn lp_export_lists_every_row() {
    let (model, _) = build(&fixtures::micro1(), FormulationKind::Canonical).unwrap();
    let text = write_lp_format(&model);
    assert!(text.contains("\nMinimize\n") && text.contains("\nSubject To\n") && text.ends_with("End\n"));
    for row in &model.constraints {
        assert!(text.contains(&format!(" {}:", row.name)), "missing row {}", row.name);
    }
}
