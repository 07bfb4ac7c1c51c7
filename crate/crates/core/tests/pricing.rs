mod common;

use approx::assert_abs_diff_eq;
use stoclear::clearing::{clear, clear_with};
use stoclear::fixtures;
use stoclear::formulations::{FormulationKind, Injections};
use stoclear::lp::{check_kkt, LpSolution, LpStatus};
use stoclear::metrics::distortion_check;
use stoclear::pricing::{derive_sigma_from_mu, payments, price_distortion, raw_row_duals};

#[test]
fn sigma_from_constant_mu_is_zero() {
    let sigma = derive_sigma_from_mu(&[vec![5.0], vec![5.0], vec![5.0]], &[0.2, 0.3, 0.5]);
    assert!(sigma.iter().all(|r| r[0] == 0.0));
}

#[test]
fn sigma_from_two_point_mu() {
    let sigma = derive_sigma_from_mu(&[vec![3.0], vec![-1.0]], &[0.5, 0.5]);
    assert_eq!(sigma, vec![vec![2.0], vec![-2.0]]);
}

#[test]
fn micro1_canonical_prices() {
    // G is marginal day-ahead at 10; in real time it is marginal downward at
    // 10 − 1 when demand is low and upward at 10 + 1 when demand is high
    let cl = clear(&fixtures::micro1(), FormulationKind::Canonical).unwrap();
    assert_abs_diff_eq!(cl.duals.pi[0][0], 10.0, epsilon = 1e-9);
    assert_abs_diff_eq!(cl.duals.big_pi[0][0], 9.0, epsilon = 1e-9);
    assert_abs_diff_eq!(cl.duals.big_pi[1][0], 11.0, epsilon = 1e-9);
}

#[test]
fn micro1_copies_reproduce_canonical_prices() {
    let c = clear(&fixtures::micro1(), FormulationKind::Canonical).unwrap();
    for kind in [FormulationKind::MeanVector, FormulationKind::StateVector] {
        let cl = clear(&fixtures::micro1(), kind).unwrap();
        for s in 0..2 {
            assert_abs_diff_eq!(cl.duals.pi_at(s, 0), c.duals.pi[0][0], epsilon = 1e-9);
            assert_abs_diff_eq!(cl.duals.big_pi[s][0], c.duals.big_pi[s][0], epsilon = 1e-9);
        }
    }
}

#[test]
fn state_vector_sigma_has_zero_mean() {
    for seed in 0..20 {
        let inst = stoclear::synth::random_instance(seed, &Default::default());
        let sv = clear(&inst, FormulationKind::StateVector).unwrap();
        let probs = inst.probs();
        for rows in [&sv.duals.sigma_x, &sv.duals.sigma_f] {
            let width = rows.first().map(Vec::len).unwrap_or(0);
            for j in 0..width {
                let mean: f64 = rows.iter().zip(&probs).map(|(r, p)| p * r[j]).sum();
                assert!(mean.abs() <= 1e-7, "seed {seed}: E[sigma] = {mean}");
            }
        }
    }
}

#[test]
fn gauge_fixed_duals_stay_optimal() {
    for seed in 0..10 {
        let inst = stoclear::synth::random_instance(seed, &Default::default());
        for kind in [FormulationKind::MeanVector, FormulationKind::StateVector] {
            let cl = clear(&inst, kind).unwrap();
            for s in 1..cl.duals.pi.len() {
                assert_eq!(cl.duals.pi[s], cl.duals.pi[0], "day-ahead prices differ across copies");
            }
            let y = raw_row_duals(&cl.solution, &cl.map, &cl.duals);
            let candidate = LpSolution {
                status: LpStatus::Optimal,
                primal: cl.solution.primal.clone(),
                reduced_costs: cl.model.reduced_costs(&y),
                duals: y,
                objective: cl.solution.objective,
                iterations: 0,
            };
            let rep = check_kkt(&cl.model, &candidate, 1e-7);
            assert!(rep.pass, "seed {seed} {kind:?}: {rep:?}");
        }
    }
}

#[test]
fn micro1_state_vector_distortion_within_bounds() {
    let inst = fixtures::micro1();
    let sv = clear(&inst, FormulationKind::StateVector).unwrap();
    let check = distortion_check(&inst, &sv.dispatch, &sv.duals);
    assert!(check.holds, "{:?}", check.violations);
}

#[test]
fn single_scenario_state_vector_matches_canonical() {
    let mut inst = fixtures::micro1();
    inst.scenarios.scenarios.truncate(1);
    inst.scenarios.scenarios[0].prob = 1.0;
    let c = clear(&inst, FormulationKind::Canonical).unwrap();
    let sv = clear(&inst, FormulationKind::StateVector).unwrap();
    assert!(sv.duals.sigma_x[0].iter().all(|s| s.abs() <= 1e-9));
    let rc = payments(&inst, &c.dispatch, &c.duals);
    let rs = payments(&inst, &sv.dispatch, &sv.duals);
    for (a, b) in rc.rho[0].iter().zip(&rs.rho[0]) {
        assert_abs_diff_eq!(a, b, epsilon = 1e-9);
    }
}

#[test]
fn payment_identities() {
    let inst = stoclear::synth::random_instance(4, &Default::default());
    let c = clear(&inst, FormulationKind::Canonical).unwrap();
    let table = payments(&inst, &c.dispatch, &c.duals);
    let probs = inst.probs();
    for (i, p) in inst.participants.iter().enumerate() {
        let mean: f64 = table.rho.iter().zip(&probs).map(|(r, q)| q * r[i]).sum();
        assert_abs_diff_eq!(table.expected_rho[i], mean, epsilon = 1e-9);
        for s in 0..probs.len() {
            let (x, big_x) = (c.dispatch.x[0][i], c.dispatch.big_x[s][i]);
            let pi = c.duals.pi[0][p.bus];
            let big_pi = c.duals.big_pi[s][p.bus];
            assert_abs_diff_eq!(table.rho[s][i], pi * x + big_pi * (big_x - x), epsilon = 1e-9);
        }
    }
}

#[test]
fn participant_without_day_ahead_position_is_paid_real_time_price() {
    let mut inst = fixtures::micro1();
    // G may not trade day-ahead, so D's day-ahead purchase is zero as well
    inst.participants[0].x_max = 0.0;
    let c = clear(&inst, FormulationKind::Canonical).unwrap();
    let table = payments(&inst, &c.dispatch, &c.duals);
    for s in 0..2 {
        assert_abs_diff_eq!(c.dispatch.x[0][0], 0.0, epsilon = 1e-12);
        let expected = c.duals.big_pi[s][0] * c.dispatch.big_x[s][0];
        assert_abs_diff_eq!(table.rho[s][0], expected, epsilon = 1e-9);
    }
}

/// Objective change per MW injected at the bus, from central differences in
/// the day-ahead and real-time balance rows, plus the largest gap between the
/// one-sided differences.
fn finite_difference_prices(inst: &stoclear::model::Instance, h: f64) -> (f64, f64, f64) {
    let solve = |da: f64, rt: f64| {
        let inj = Injections {
            day_ahead: vec![da],
            real_time: vec![vec![rt]],
        };
        clear_with(inst, FormulationKind::Canonical, Some(&inj)).unwrap().solution.objective
    };
    let base = solve(0.0, 0.0);
    let (da_up, da_dn) = (solve(h, 0.0), solve(-h, 0.0));
    let (rt_up, rt_dn) = (solve(0.0, h), solve(0.0, -h));
    let da = (da_dn - da_up) / (2.0 * h);
    let rt = (rt_dn - rt_up) / (2.0 * h);
    let gap = [
        ((base - da_up) / h - (da_dn - base) / h).abs(),
        ((base - rt_up) / h - (rt_dn - base) / h).abs(),
    ];
    (da, rt, gap[0].max(gap[1]))
}

#[test]
fn at_bound_counterexample_has_unique_prices_and_large_distortion() {
    let inst = common::at_bound_counterexample();
    let c = clear(&inst, FormulationKind::Canonical).unwrap();
    assert_abs_diff_eq!(c.solution.objective, -7047.0, epsilon = 1e-9);
    assert_abs_diff_eq!(c.dispatch.x[0][0], 50.0, epsilon = 1e-9);
    assert_abs_diff_eq!(c.dispatch.x[0][1], 30.0, epsilon = 1e-9);
    assert_abs_diff_eq!(c.dispatch.big_x[0][0], 80.0, epsilon = 1e-9);
    assert_abs_diff_eq!(c.dispatch.big_x[0][1], 0.0, epsilon = 1e-9);
    assert_abs_diff_eq!(c.duals.pi[0][0], 15.1, epsilon = 1e-9);
    assert_abs_diff_eq!(c.duals.big_pi[0][0], 10.1, epsilon = 1e-9);

    // one-sided differences agree, so no other optimal dual exists
    let (da, rt, gap) = finite_difference_prices(&inst, 1e-3);
    assert_abs_diff_eq!(da, 15.1, epsilon = 1e-6);
    assert_abs_diff_eq!(rt, 10.1, epsilon = 1e-6);
    assert!(gap <= 1e-6, "one-sided differences differ by {gap}");

    for kind in [FormulationKind::Canonical, FormulationKind::MeanVector, FormulationKind::StateVector] {
        let cl = clear(&inst, kind).unwrap();
        let table = price_distortion(&inst, &cl.duals);
        assert_abs_diff_eq!(table.expected_m[0], 5.0, epsilon = 1e-9);
        let check = distortion_check(&inst, &cl.dispatch, &cl.duals);
        assert!(!check.holds, "{kind:?}");
        assert!(check.violations.iter().all(|v| v.at_day_ahead_bound || v.key == "1"), "{:?}", check.violations);
    }
}
