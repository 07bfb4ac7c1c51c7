use stoclear::clearing::clear;
use stoclear::fixtures;
use stoclear::formulations::FormulationKind;
use stoclear::ph::{breakpoints, solve_progressive_hedging, PhParams, PhStatus};
use stoclear::Error;

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / (1.0 + b.abs())
}

#[test]
fn micro1_converges_to_extensive_solution() {
    let res = solve_progressive_hedging(&fixtures::micro1(), &PhParams::default()).unwrap();
    assert_eq!(res.status, PhStatus::Converged);
    assert!((res.dispatch.x_bar[0] - 40.0).abs() <= 1e-3, "{:?}", res.dispatch.x_bar);
    assert!((res.dispatch.x_bar[1] + 40.0).abs() <= 1e-3, "{:?}", res.dispatch.x_bar);
    assert!(rel(res.dispatch.objective, -2320.0) <= 1e-4, "{}", res.dispatch.objective);
}

#[test]
fn single_scenario_needs_no_multipliers() {
    let mut inst = fixtures::micro1();
    inst.scenarios.scenarios.truncate(1);
    inst.scenarios.scenarios[0].prob = 1.0;
    let res = solve_progressive_hedging(&inst, &PhParams::default()).unwrap();
    assert_eq!(res.status, PhStatus::Converged);
    assert!(res.w_x.iter().chain(&res.w_f).flatten().all(|w| *w == 0.0));
    let cv = clear(&inst, FormulationKind::Clairvoyant { scenario: 0 }).unwrap();
    assert!(rel(res.dispatch.objective, cv.solution.objective) <= 1e-9);
}

#[test]
fn multipliers_have_zero_mean() {
    let inst = stoclear::synth::random_instance(2, &Default::default());
    let res = solve_progressive_hedging(&inst, &PhParams::default()).unwrap();
    let probs = inst.probs();
    for rows in [&res.w_x, &res.w_f] {
        let width = rows.first().map(Vec::len).unwrap_or(0);
        for j in 0..width {
            let mean: f64 = rows.iter().zip(&probs).map(|(r, p)| p * r[j]).sum();
            assert!(mean.abs() <= 1e-10, "E[w] = {mean}");
        }
    }
}

#[test]
fn random_instances_match_extensive_form() {
    for seed in 0..5 {
        let inst = stoclear::synth::random_instance(seed, &Default::default());
        let ext = clear(&inst, FormulationKind::MeanVector).unwrap();
        let res = solve_progressive_hedging(&inst, &PhParams::default()).unwrap();
        assert_eq!(res.status, PhStatus::Converged, "seed {seed}");
        assert!(
            rel(res.dispatch.objective, ext.solution.objective) <= 1e-4,
            "seed {seed}: {} vs {}",
            res.dispatch.objective,
            ext.solution.objective
        );
        // the PH objective is evaluated at an implementable decision, so it
        // cannot beat the extensive optimum
        assert!(res.dispatch.objective >= ext.solution.objective - 1e-7 * (1.0 + ext.solution.objective.abs()));
    }
}

#[test]
fn iteration_limit_is_reported() {
    let params = PhParams {
        max_iters: 1,
        ..Default::default()
    };
    let res = solve_progressive_hedging(&fixtures::micro1(), &params).unwrap();
    assert_eq!(res.status, PhStatus::IterationLimit);
    assert_eq!(res.trace.iterations.len(), 1);
}

#[test]
fn bad_parameters_are_rejected() {
    for params in [
        PhParams { rho: 0.0, ..Default::default() },
        PhParams { breakpoints: 4, ..Default::default() },
        PhParams { grid_ratio: 0.5, ..Default::default() },
        PhParams { max_iters: 0, ..Default::default() },
    ] {
        assert!(matches!(solve_progressive_hedging(&fixtures::micro1(), &params), Err(Error::Input(_))));
    }
}

#[test]
fn breakpoint_grid_is_geometric() {
    let g = breakpoints(15.0, 4, 2.0);
    assert_eq!(g, vec![0.0, 1.0, 3.0, 7.0, 15.0]);
    let u = breakpoints(10.0, 5, 1.0);
    assert_eq!(u.len(), 6);
    assert!((u[1] - 2.0).abs() < 1e-12 && u[5] == 10.0);
}
