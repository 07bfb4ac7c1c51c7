//! The full property and guarantee suite for one instance.

use serde::Serialize;

use crate::clearing::{clear, clear_with, Cleared};
use crate::error::Error;
use crate::formulations::FormulationKind;
use crate::metrics::{
    cost_recovery, distortion_check, guarantees_covered, money_tol, mv_conditions, realized_values,
    relationship_checks, revenue_adequacy, CheckMode, DistortionCheck, RelationshipReport,
};
use crate::model::Instance;
use crate::perturb::Perturbation;
use crate::pricing::payments;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VerifyOptions {
    pub perturb_seed: u64,
    pub relationship_tol: f64,
    pub sigma_tol: f64,
    pub equivalence_tol: f64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            perturb_seed: 0,
            relationship_tol: 1e-5,
            sigma_tol: 1e-7,
            equivalence_tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckResult {
    pub name: &'static str,
    pub holds: bool,
    /// false when the instance falls outside the hypotheses of the claim;
    /// such checks never count as violations
    pub covered: bool,
    /// worst value of the checked quantity (sign depends on the check)
    pub worst: f64,
    pub detail: String,
}

impl CheckResult {
    pub fn violated(&self) -> bool {
        self.covered && !self.holds
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub instance: String,
    pub checks: Vec<CheckResult>,
    pub relationships: RelationshipReport,
    /// full distortion results keyed by check name
    pub distortions: Vec<(&'static str, DistortionCheck)>,
}

impl VerifyReport {
    pub fn check(&self, name: &str) -> Option<&CheckResult> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn distortion(&self, name: &str) -> Option<&DistortionCheck> {
        self.distortions.iter().find(|(n, _)| *n == name).map(|(_, d)| d)
    }

    pub fn violations(&self) -> impl Iterator<Item = &CheckResult> {
        self.checks.iter().filter(|c| c.violated())
    }

    pub fn all_hold(&self) -> bool {
        self.violations().next().is_none()
    }
}

fn check(name: &'static str, holds: bool, covered: bool, worst: f64, detail: String) -> CheckResult {
    CheckResult {
        name,
        holds,
        covered,
        worst,
        detail,
    }
}

fn distortion_result(name: &'static str, d: &DistortionCheck) -> CheckResult {
    let at_bound = d.violations.iter().filter(|v| v.at_day_ahead_bound).count();
    let detail = match d.violations.first() {
        None => "all within bounds".to_string(),
        Some(v) => format!(
            "{} violations ({} at a day-ahead bound); first {}{}: {:.6} outside [{:.6}, {:.6}]",
            d.violations.len(),
            at_bound,
            v.key,
            v.scenario.map(|s| format!(" scenario {}", s + 1)).unwrap_or_default(),
            v.value,
            v.lower,
            v.upper
        ),
    };
    check(name, d.holds, true, d.max_excess, detail)
}

pub fn verify_instance(inst: &Instance, opts: &VerifyOptions) -> Result<VerifyReport, Error> {
    let covered = guarantees_covered(inst);
    let c = clear(inst, FormulationKind::Canonical)?;
    let mv = clear(inst, FormulationKind::MeanVector)?;
    let sv = clear(inst, FormulationKind::StateVector)?;
    let mut checks = Vec::new();
    let mut distortions = Vec::new();

    let solves: [&Cleared; 3] = [&c, &mv, &sv];
    let worst_kkt = solves
        .iter()
        .map(|s| s.kkt.primal_residual.max(s.kkt.dual_residual).max(s.kkt.complementarity).max(s.kkt.duality_gap))
        .fold(0.0, f64::max);
    checks.push(check(
        "kkt",
        solves.iter().all(|s| s.kkt.pass),
        true,
        worst_kkt,
        format!("worst KKT residual {worst_kkt:.3e}"),
    ));

    let obj = c.solution.objective;
    let spread = [mv.solution.objective, sv.solution.objective]
        .iter()
        .map(|o| (o - obj).abs() / (1.0 + obj.abs()))
        .fold(0.0, f64::max);
    checks.push(check(
        "formulation_equivalence",
        spread <= opts.equivalence_tol,
        true,
        spread,
        format!("objectives {:.6} / {:.6} / {:.6}", obj, mv.solution.objective, sv.solution.objective),
    ));

    let probs = inst.probs();
    let e_sigma = sv
        .duals
        .sigma_x
        .first()
        .map(|r| r.len())
        .into_iter()
        .flat_map(|w| 0..w)
        .map(|i| sv.duals.sigma_x.iter().zip(&probs).map(|(r, p)| p * r[i]).sum::<f64>().abs())
        .chain(
            (0..inst.lines.len())
                .map(|l| sv.duals.sigma_f.iter().zip(&probs).map(|(r, p)| p * r[l]).sum::<f64>().abs()),
        )
        .fold(0.0, f64::max);
    checks.push(check(
        "expected_sigma_zero",
        e_sigma <= opts.sigma_tol,
        true,
        e_sigma,
        format!("max |E[sigma]| {e_sigma:.3e}"),
    ));

    let pert = Perturbation::new(opts.perturb_seed);
    let pinst = pert.jitter_costs(inst);
    let inj = pert.injections(inst);
    let pc = clear_with(&pinst, FormulationKind::Canonical, Some(&inj))?;
    let pmv = clear_with(&pinst, FormulationKind::MeanVector, Some(&inj))?;
    let psv = clear_with(&pinst, FormulationKind::StateVector, Some(&inj))?;
    let relationships = relationship_checks(&pinst, &pc, &pmv, &psv, opts.relationship_tol)?;
    checks.push(check(
        "price_relationships",
        relationships.pass,
        true,
        [
            relationships.pi_mean_vector,
            relationships.pi_state_vector,
            relationships.expected_sigma,
            relationships.sigma_vs_mu,
            relationships.big_pi_mean_vector,
            relationships.big_pi_state_vector,
        ]
        .into_iter()
        .fold(0.0, f64::max),
        format!(
            "pi {:.2e}/{:.2e}, E[sigma] {:.2e}, sigma-mu {:.2e} (interior {:.2e}), Pi {:.2e}/{:.2e}, mapped duals optimal: {}",
            relationships.pi_mean_vector,
            relationships.pi_state_vector,
            relationships.expected_sigma,
            relationships.sigma_vs_mu,
            relationships.sigma_vs_mu_interior,
            relationships.big_pi_mean_vector,
            relationships.big_pi_state_vector,
            relationships.mapped_dual_kkt.pass
        ),
    ));

    // state-vector pricing
    let pay_s = payments(inst, &sv.dispatch, &sv.duals);
    let real_s = realized_values(inst, &sv.dispatch);
    let cr = cost_recovery(inst, &pay_s, &real_s, CheckMode::Scenario)?;
    let worst = cr.iter().map(|v| v.profit).fold(f64::INFINITY, f64::min);
    checks.push(check(
        "rs_scenario_cost_recovery",
        cr.iter().all(|v| v.recovered),
        covered,
        worst,
        format!("worst scenario generator profit {worst:.6}"),
    ));
    let ra = revenue_adequacy(&pay_s, CheckMode::Expectation);
    checks.push(check(
        "rs_expected_revenue_adequacy",
        ra.adequate,
        covered,
        ra.net_income,
        format!("expected net income {:.6}", ra.net_income),
    ));
    let d = distortion_check(inst, &sv.dispatch, &sv.duals);
    checks.push(distortion_result("rs_distortion_bound", &d));
    distortions.push(("rs_distortion_bound", d));

    // mean-vector pricing
    let pay_m = payments(inst, &mv.dispatch, &mv.duals);
    let real_m = realized_values(inst, &mv.dispatch);
    let cond = mv_conditions(inst, &mv.duals, &mv.dispatch)?;
    let ra = revenue_adequacy(&pay_m, CheckMode::Expectation);
    checks.push(check(
        "rm_conditional_revenue_adequacy",
        ra.adequate,
        covered && cond.adequacy_guaranteed,
        ra.net_income,
        format!("condition {:.6}, expected net income {:.6}", cond.aggregate, ra.net_income),
    ));
    let cr = cost_recovery(inst, &pay_m, &real_m, CheckMode::Expectation)?;
    let guarded: Vec<_> = cr
        .iter()
        .zip(&cond.per_generator)
        .filter(|(_, (_, e_mu))| *e_mu >= 0.0)
        .map(|(v, _)| v)
        .collect();
    let worst = guarded.iter().map(|v| v.profit).fold(f64::INFINITY, f64::min);
    checks.push(check(
        "rm_conditional_cost_recovery",
        guarded.iter().all(|v| v.recovered),
        covered && !guarded.is_empty(),
        worst,
        format!("{} generators with E[mu] >= 0, worst expected profit {worst:.6}", guarded.len()),
    ));
    let d = distortion_check(inst, &mv.dispatch, &mv.duals);
    checks.push(distortion_result("rm_distortion_bound", &d));
    distortions.push(("rm_distortion_bound", d));

    // canonical pricing
    let pay_c = payments(inst, &c.dispatch, &c.duals);
    let real_c = realized_values(inst, &c.dispatch);
    let cr = cost_recovery(inst, &pay_c, &real_c, CheckMode::Expectation)?;
    let worst = cr.iter().map(|v| v.profit).fold(f64::INFINITY, f64::min);
    checks.push(check(
        "rc_expected_cost_recovery",
        cr.iter().all(|v| v.recovered),
        covered,
        worst,
        format!("worst expected generator profit {worst:.6}"),
    ));
    let ra = revenue_adequacy(&pay_c, CheckMode::Expectation);
    checks.push(check(
        "rc_expected_revenue_adequacy",
        ra.adequate,
        covered,
        ra.net_income,
        format!("expected net income {:.6}", ra.net_income),
    ));
    let d = distortion_check(inst, &c.dispatch, &c.duals);
    checks.push(distortion_result("rc_expected_distortion_bound", &d));
    distortions.push(("rc_expected_distortion_bound", d));

    // clairvoyant pricing, scenario by scenario
    let mut worst_profit = f64::INFINITY;
    let mut worst_income = f64::INFINITY;
    let (mut cr_ok, mut ra_ok) = (true, true);
    for s in 0..inst.num_scenarios() {
        let cv = clear(inst, FormulationKind::Clairvoyant { scenario: s })?;
        let pay = payments(inst, &cv.dispatch, &cv.duals);
        let real = realized_values(inst, &cv.dispatch);
        for (p, (rho, phi)) in inst.participants.iter().zip(pay.rho[0].iter().zip(&real[0])) {
            if p.is_generator() {
                let profit = rho + phi;
                worst_profit = worst_profit.min(profit);
                cr_ok &= profit >= -money_tol(rho.abs().max(phi.abs()));
            }
        }
        let ra = revenue_adequacy(&pay, CheckMode::Scenario);
        worst_income = worst_income.min(ra.net_income);
        ra_ok &= ra.adequate;
    }
    checks.push(check(
        "clairvoyant_cost_recovery",
        cr_ok,
        covered,
        worst_profit,
        format!("worst generator profit {worst_profit:.6}"),
    ));
    checks.push(check(
        "clairvoyant_revenue_adequacy",
        ra_ok,
        covered,
        worst_income,
        format!("worst net income {worst_income:.6}"),
    ));

    Ok(VerifyReport {
        instance: inst.name.clone(),
        checks,
        relationships,
        distortions,
    })
}
