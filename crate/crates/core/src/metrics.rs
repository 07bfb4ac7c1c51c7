//! Market metrics and guarantee verdicts.
//!
//! Money checks use an absolute tolerance of 1e-6, scaled by `1 + |v|` once
//! the magnitude of the operands exceeds 1e3. Price checks use 1e-6 absolute.

use serde::Serialize;

use crate::clearing::Cleared;
use crate::error::Error;
use crate::formulations::{DispatchSolution, FormulationKind};
use crate::lp::{check_kkt, KktReport, LpSolution, LpStatus, RowId};
use crate::model::{realized_value, Instance};
use crate::pricing::{
    derive_sigma_from_mu, price_distortion, raw_row_duals, DistortionKey, DualSolution, Mechanism, PaymentTable,
};

pub const MONEY_TOL: f64 = 1e-6;
pub const PRICE_TOL: f64 = 1e-6;

/// Tolerance for a money quantity whose operands have magnitude `scale`.
pub fn money_tol(scale: f64) -> f64 {
    if scale.abs() > 1e3 {
        MONEY_TOL * (1.0 + scale.abs())
    } else {
        MONEY_TOL
    }
}

/// Guarantees for cost recovery assume generators can produce
/// nothing in both stages; other instances are reported as not covered.
pub fn guarantees_covered(inst: &Instance) -> bool {
    inst.participants
        .iter()
        .filter(|p| p.is_generator())
        .all(|p| p.x_min == 0.0 && p.rt_min == 0.0)
}

/// φ_i(ω) per slot and participant.
pub fn realized_values(inst: &Instance, dispatch: &DispatchSolution) -> Vec<Vec<f64>> {
    (0..dispatch.num_slots())
        .map(|s| {
            inst.participants
                .iter()
                .enumerate()
                .map(|(i, p)| realized_value(p, dispatch.x[s][i], dispatch.big_x[s][i]))
                .collect()
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CheckMode {
    Scenario,
    Expectation,
}

#[derive(Debug, Clone, Serialize)]
pub struct CostRecovery {
    pub participant: String,
    pub mode: CheckMode,
    /// worst scenario profit, or expected profit
    pub profit: f64,
    pub recovered: bool,
}

/// Generator cost-recovery verdicts: profit ρ + φ ≥ −tol per scenario or in
/// expectation.
pub fn cost_recovery(
    inst: &Instance,
    payments: &PaymentTable,
    realized: &[Vec<f64>],
    mode: CheckMode,
) -> Result<Vec<CostRecovery>, Error> {
    let np = inst.participants.len();
    if realized.len() != payments.rho.len()
        || realized.iter().chain(&payments.rho).any(|r| r.len() != np)
    {
        return Err(Error::Input("payments and realized values cover different participants or scenarios".into()));
    }
    let probs = &payments.probs;
    Ok(inst
        .participants
        .iter()
        .enumerate()
        .filter(|(_, p)| p.is_generator())
        .map(|(i, p)| {
            let (profit, recovered) = match mode {
                CheckMode::Scenario => {
                    let mut worst = f64::INFINITY;
                    let mut ok = true;
                    for (rho, phi) in payments.rho.iter().zip(realized) {
                        let v = rho[i] + phi[i];
                        worst = worst.min(v);
                        ok &= v >= -money_tol(rho[i].abs().max(phi[i].abs()));
                    }
                    (worst, ok)
                }
                CheckMode::Expectation => {
                    let rho: f64 = payments.rho.iter().zip(probs).map(|(r, q)| q * r[i]).sum();
                    let phi: f64 = realized.iter().zip(probs).map(|(r, q)| q * r[i]).sum();
                    (rho + phi, rho + phi >= -money_tol(rho.abs().max(phi.abs())))
                }
            };
            CostRecovery {
                participant: p.id.clone(),
                mode,
                profit,
                recovered,
            }
        })
        .collect())
}

#[derive(Debug, Clone, Serialize)]
pub struct RevenueAdequacy {
    pub mode: CheckMode,
    /// expected net income, or the worst scenario's
    pub net_income: f64,
    pub adequate: bool,
}

/// ISO net income N = −Σ_i ρ_i, in expectation or per scenario.
pub fn revenue_adequacy(payments: &PaymentTable, mode: CheckMode) -> RevenueAdequacy {
    let scale = |row: &[f64]| row.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    match mode {
        CheckMode::Expectation => {
            let n = -payments.expected_total();
            RevenueAdequacy {
                mode,
                net_income: n,
                adequate: n >= -money_tol(scale(&payments.expected_rho)),
            }
        }
        CheckMode::Scenario => {
            let mut worst = f64::INFINITY;
            let mut ok = true;
            for row in &payments.rho {
                let n = -row.iter().sum::<f64>();
                worst = worst.min(n);
                ok &= n >= -money_tol(scale(row));
            }
            RevenueAdequacy {
                mode,
                net_income: worst,
                adequate: ok,
            }
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct MvConditions {
    /// Σ_i E[μ_i]E[x_i]
    pub aggregate: f64,
    /// (generator id, E[μ_i])
    pub per_generator: Vec<(String, f64)>,
    pub adequacy_guaranteed: bool,
}

pub fn mv_conditions(inst: &Instance, duals: &DualSolution, dispatch: &DispatchSolution) -> Result<MvConditions, Error> {
    if duals.kind != FormulationKind::MeanVector {
        return Err(Error::Input("mean-vector conditions need mean-vector duals".into()));
    }
    let probs = &duals.probs;
    let e_mu = |i: usize| -> f64 { duals.mu_x.iter().zip(probs).map(|(r, p)| p * r[i]).sum() };
    let e_x = |i: usize| -> f64 { dispatch.x.iter().zip(probs).map(|(r, p)| p * r[i]).sum() };
    let aggregate = (0..inst.participants.len()).map(|i| e_mu(i) * e_x(i)).sum();
    let per_generator = inst
        .participants
        .iter()
        .enumerate()
        .filter(|(_, p)| p.is_generator())
        .map(|(i, p)| (p.id.clone(), e_mu(i)))
        .collect();
    Ok(MvConditions {
        aggregate,
        per_generator,
        adequacy_guaranteed: aggregate <= 0.0,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct DistortionViolation {
    /// bus id or participant id
    pub key: String,
    /// None for expectation checks
    pub scenario: Option<usize>,
    pub value: f64,
    pub lower: f64,
    pub upper: f64,
    /// day-ahead quantity of the participant sits at one of its bounds
    pub at_day_ahead_bound: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct DistortionCheck {
    pub mechanism: Mechanism,
    pub violations: Vec<DistortionViolation>,
    pub max_excess: f64,
    pub holds: bool,
}

fn at_bound(inst: &Instance, dispatch: &DispatchSolution, i: usize) -> bool {
    let p = &inst.participants[i];
    let x = dispatch.x_bar[i];
    x <= p.x_min + 1e-7 || x >= p.x_max - 1e-7
}

/// Distortion bounds: R^s per participant and scenario in [−δ⁺, δ⁻];
/// R^m the same after removing p(ω)μ(ω); R^c the expected bus distortion
/// within [max −δ⁺, min δ⁻] over the bus's participants.
pub fn distortion_check(inst: &Instance, dispatch: &DispatchSolution, duals: &DualSolution) -> DistortionCheck {
    let table = price_distortion(inst, duals);
    let mut violations = Vec::new();
    let mut max_excess: f64 = 0.0;
    let mut check = |key: String, scenario: Option<usize>, value: f64, lower: f64, upper: f64, bound: bool| {
        let excess = (lower - value).max(value - upper);
        if excess > PRICE_TOL {
            max_excess = max_excess.max(excess);
            violations.push(DistortionViolation {
                key,
                scenario,
                value,
                lower,
                upper,
                at_day_ahead_bound: bound,
            });
        }
    };
    match table.keyed_by {
        DistortionKey::Bus => {
            for (n, bus) in inst.buses.iter().enumerate() {
                let members: Vec<usize> = inst.participants_at(n).collect();
                if members.is_empty() {
                    continue;
                }
                let lower = members
                    .iter()
                    .map(|&i| -inst.participants[i].delta_plus)
                    .fold(f64::NEG_INFINITY, f64::max);
                let upper = members
                    .iter()
                    .map(|&i| inst.participants[i].delta_minus)
                    .fold(f64::INFINITY, f64::min);
                let bound = members.iter().any(|&i| at_bound(inst, dispatch, i));
                check(bus.id.to_string(), None, table.expected_m[n], lower, upper, bound);
            }
        }
        DistortionKey::Participant => {
            for s in 0..duals.num_slots() {
                for (i, p) in inst.participants.iter().enumerate() {
                    let shift = match duals.kind {
                        FormulationKind::MeanVector => duals.probs[s] * duals.mu_x[s][i],
                        _ => 0.0,
                    };
                    let bound = at_bound(inst, dispatch, i);
                    check(
                        p.id.clone(),
                        Some(dispatch.scenarios[s]),
                        table.m[s][i] - shift,
                        -p.delta_plus,
                        p.delta_minus,
                        bound,
                    );
                }
            }
        }
    }
    DistortionCheck {
        mechanism: table.mechanism,
        holds: violations.is_empty(),
        violations,
        max_excess,
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct GeneratorMetrics {
    pub participant: String,
    /// ρ + φ per scenario slot
    pub profit: Vec<f64>,
    pub expected_profit: f64,
    pub scenario_recovery: bool,
    pub expected_recovery: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct MetricsReport {
    pub mechanism: Mechanism,
    pub covered_by_guarantee: bool,
    pub generators: Vec<GeneratorMetrics>,
    /// expected payments to generators
    pub cost: f64,
    /// expected payments collected from loads
    pub revenue: f64,
    pub expected_adequacy: RevenueAdequacy,
    pub scenario_adequacy: RevenueAdequacy,
    pub distortion: DistortionCheck,
    pub mv_conditions: Option<MvConditions>,
}

pub fn metrics_report(
    inst: &Instance,
    dispatch: &DispatchSolution,
    duals: &DualSolution,
    payments: &PaymentTable,
) -> Result<MetricsReport, Error> {
    let realized = realized_values(inst, dispatch);
    let scen = cost_recovery(inst, payments, &realized, CheckMode::Scenario)?;
    let exp = cost_recovery(inst, payments, &realized, CheckMode::Expectation)?;
    let generators = inst
        .participants
        .iter()
        .enumerate()
        .filter(|(_, p)| p.is_generator())
        .zip(scen.iter().zip(&exp))
        .map(|((i, p), (s, e))| GeneratorMetrics {
            participant: p.id.clone(),
            profit: payments.rho.iter().zip(&realized).map(|(r, f)| r[i] + f[i]).collect(),
            expected_profit: e.profit,
            scenario_recovery: s.recovered,
            expected_recovery: e.recovered,
        })
        .collect();
    let (mut cost, mut revenue) = (0.0, 0.0);
    for (p, r) in inst.participants.iter().zip(&payments.expected_rho) {
        if p.is_generator() {
            cost += r;
        } else {
            revenue -= r;
        }
    }
    let mv = match duals.kind {
        FormulationKind::MeanVector => Some(mv_conditions(inst, duals, dispatch)?),
        _ => None,
    };
    Ok(MetricsReport {
        mechanism: payments.mechanism,
        covered_by_guarantee: guarantees_covered(inst),
        generators,
        cost,
        revenue,
        expected_adequacy: revenue_adequacy(payments, CheckMode::Expectation),
        scenario_adequacy: revenue_adequacy(payments, CheckMode::Scenario),
        distortion: distortion_check(inst, dispatch, duals),
        mv_conditions: mv,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct RelationshipReport {
    pub tol: f64,
    /// max_n |π^c − E[π^m]|
    pub pi_mean_vector: f64,
    /// max_n |π^c − E[π^s]|
    pub pi_state_vector: f64,
    /// max over participants and lines of |E[σ]|
    pub expected_sigma: f64,
    /// max |σ(ω) − (μ(ω) − E[μ])|
    pub sigma_vs_mu: f64,
    /// same comparison on π + σ against π + μ − E[μ], restricted to
    /// participants whose day-ahead quantity is strictly inside its bounds
    pub sigma_vs_mu_interior: f64,
    /// max |Π^c − Π^m|
    pub big_pi_mean_vector: f64,
    /// max |Π^c − Π^s|
    pub big_pi_state_vector: f64,
    /// max relative objective difference across the three forms
    pub objective_spread: f64,
    /// KKT check of the mean-vector duals mapped onto the state-vector model
    pub mapped_dual_kkt: KktReport,
    pub pass: bool,
    pub dual_multiplicity_suspected: bool,
}

fn same_shape(a: &Cleared, b: &Cleared) -> bool {
    a.map.scenarios == b.map.scenarios && a.map.big_x.first().map(Vec::len) == b.map.big_x.first().map(Vec::len)
}

/// Cross-formulation relationships between canonical, mean-vector and
/// state-vector solutions of one instance.
pub fn relationship_checks(
    inst: &Instance,
    c: &Cleared,
    mv: &Cleared,
    sv: &Cleared,
    tol: f64,
) -> Result<RelationshipReport, Error> {
    if c.map.kind != FormulationKind::Canonical
        || mv.map.kind != FormulationKind::MeanVector
        || sv.map.kind != FormulationKind::StateVector
    {
        return Err(Error::Input("relationship checks need canonical, mean-vector and state-vector results".into()));
    }
    if !same_shape(c, mv) || !same_shape(c, sv) || c.map.big_x[0].len() != inst.participants.len() {
        return Err(Error::Input("formulation results come from different instances".into()));
    }
    let ns = c.map.num_slots();
    let nb = inst.buses.len();
    let probs = &c.map.probs;
    let (cy, my, sy) = (&c.duals, &mv.duals, &sv.duals);

    let ep_m = my.expected_pi();
    let ep_s = sy.expected_pi();
    let max_diff = |f: &dyn Fn(usize) -> f64, n: usize| (0..n).map(f).fold(0.0f64, f64::max);
    let pi_mean_vector = max_diff(&|b| (cy.pi[0][b] - ep_m[b]).abs(), nb);
    let pi_state_vector = max_diff(&|b| (cy.pi[0][b] - ep_s[b]).abs(), nb);

    let mean_abs = |rows: &[Vec<f64>]| -> f64 {
        let w = rows.first().map(Vec::len).unwrap_or(0);
        (0..w)
            .map(|j| rows.iter().zip(probs).map(|(r, p)| p * r[j]).sum::<f64>().abs())
            .fold(0.0, f64::max)
    };
    let expected_sigma = mean_abs(&sy.sigma_x).max(mean_abs(&sy.sigma_f));

    let sig_x = derive_sigma_from_mu(&my.mu_x, probs);
    let sig_f = derive_sigma_from_mu(&my.mu_f, probs);
    let mut sigma_vs_mu: f64 = 0.0;
    let mut sigma_vs_mu_interior: f64 = 0.0;
    for s in 0..ns {
        for (i, p) in inst.participants.iter().enumerate() {
            sigma_vs_mu = sigma_vs_mu.max((sy.sigma_x[s][i] - sig_x[s][i]).abs());
            let x = sv.dispatch.x_bar[i];
            if x > p.x_min + 1e-7 && x < p.x_max - 1e-7 {
                let a = sy.pi_at(s, p.bus) + sy.sigma_x[s][i];
                let b = my.pi_at(s, p.bus) + sig_x[s][i];
                sigma_vs_mu_interior = sigma_vs_mu_interior.max((a - b).abs());
            }
        }
        for l in 0..inst.lines.len() {
            sigma_vs_mu = sigma_vs_mu.max((sy.sigma_f[s][l] - sig_f[s][l]).abs());
        }
    }

    let mut big_pi_mean_vector: f64 = 0.0;
    let mut big_pi_state_vector: f64 = 0.0;
    for s in 0..ns {
        for b in 0..nb {
            big_pi_mean_vector = big_pi_mean_vector.max((cy.big_pi[s][b] - my.big_pi[s][b]).abs());
            big_pi_state_vector = big_pi_state_vector.max((cy.big_pi[s][b] - sy.big_pi[s][b]).abs());
        }
    }

    let obj = c.solution.objective;
    let objective_spread = [mv.solution.objective, sv.solution.objective]
        .iter()
        .map(|o| (o - obj).abs() / (1.0 + obj.abs()))
        .fold(0.0, f64::max);

    let mapped_dual_kkt = mapped_dual_certificate(mv, sv);
    let literal = [
        pi_mean_vector,
        pi_state_vector,
        expected_sigma,
        sigma_vs_mu,
        big_pi_mean_vector,
        big_pi_state_vector,
    ];
    let pass = literal.iter().all(|&r| r <= tol) && objective_spread <= tol;
    Ok(RelationshipReport {
        tol,
        pi_mean_vector,
        pi_state_vector,
        expected_sigma,
        sigma_vs_mu,
        sigma_vs_mu_interior,
        big_pi_mean_vector,
        big_pi_state_vector,
        objective_spread,
        dual_multiplicity_suspected: !pass && mapped_dual_kkt.pass,
        mapped_dual_kkt,
        pass,
    })
}

/// Maps mean-vector duals onto the state-vector model (same balance, flow and
/// split multipliers; σ = μ − E[μ] on the state rows) and checks them against
/// the state-vector primal optimum. Passing shows the mapped point is an
/// optimal state-vector dual.
pub fn mapped_dual_certificate(mv: &Cleared, sv: &Cleared) -> KktReport {
    let probs = &mv.map.probs;
    let mapped = DualSolution {
        kind: FormulationKind::StateVector,
        probs: probs.clone(),
        pi: mv.duals.pi.clone(),
        big_pi: mv.duals.big_pi.clone(),
        mu_x: Vec::new(),
        mu_f: Vec::new(),
        sigma_x: derive_sigma_from_mu(&mv.duals.mu_x, probs),
        sigma_f: derive_sigma_from_mu(&mv.duals.mu_f, probs),
    };
    let mut y = raw_row_duals(&sv.solution, &sv.map, &mapped);
    let copy_rows = |y: &mut Vec<f64>, from: &[Vec<RowId>], to: &[Vec<RowId>]| {
        for (fr, tr) in from.iter().zip(to) {
            for (a, b) in fr.iter().zip(tr) {
                y[b.0] = mv.solution.dual(*a);
            }
        }
    };
    copy_rows(&mut y, &mv.map.da_flow, &sv.map.da_flow);
    copy_rows(&mut y, &mv.map.rt_flow, &sv.map.rt_flow);
    copy_rows(&mut y, &mv.map.split, &sv.map.split);
    let candidate = LpSolution {
        status: LpStatus::Optimal,
        primal: sv.solution.primal.clone(),
        reduced_costs: sv.model.reduced_costs(&y),
        duals: y,
        objective: sv.solution.objective,
        iterations: 0,
    };
    check_kkt(&sv.model, &candidate, 1e-6)
}
