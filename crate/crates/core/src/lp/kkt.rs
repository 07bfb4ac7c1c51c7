use serde::Serialize;

use super::{LpModel, LpSolution, RowSense};

/// Optimality certificate residuals. `worst_*` name the offending row/variable.
#[derive(Debug, Clone, Serialize)]
pub struct KktReport {
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub complementarity: f64,
    pub duality_gap: f64,
    pub worst_primal: Option<String>,
    pub worst_dual: Option<String>,
    pub worst_complementarity: Option<String>,
    pub pass: bool,
}

fn bump(slot: &mut f64, name: &mut Option<String>, value: f64, label: impl FnOnce() -> String) {
    if value > *slot {
        *slot = value;
        *name = Some(label());
    }
}

/// Checks primal feasibility, dual feasibility, complementary slackness and the
/// duality gap (relative to `1 + |objective|`) of `sol` against `model`.
pub fn check_kkt(model: &LpModel, sol: &LpSolution, tol: f64) -> KktReport {
    let x = &sol.primal;
    let y = &sol.duals;
    let mut rep = KktReport {
        primal_residual: 0.0,
        dual_residual: 0.0,
        complementarity: 0.0,
        duality_gap: 0.0,
        worst_primal: None,
        worst_dual: None,
        worst_complementarity: None,
        pass: false,
    };

    let activity = model.row_activity(x);
    let mut dual_obj = 0.0;
    for ((row, &ax), &yi) in model.constraints.iter().zip(&activity).zip(y) {
        let slack = ax - row.rhs;
        let viol = match row.sense {
            RowSense::Eq => slack.abs(),
            RowSense::Le => slack.max(0.0),
            RowSense::Ge => (-slack).max(0.0),
        };
        bump(&mut rep.primal_residual, &mut rep.worst_primal, viol, || format!("row {}", row.name));
        let dual_viol = match row.sense {
            RowSense::Eq => 0.0,
            RowSense::Le => yi.max(0.0),
            RowSense::Ge => (-yi).max(0.0),
        };
        bump(&mut rep.dual_residual, &mut rep.worst_dual, dual_viol, || format!("row {}", row.name));
        if row.sense != RowSense::Eq {
            bump(&mut rep.complementarity, &mut rep.worst_complementarity, (yi * slack).abs(), || {
                format!("row {}", row.name)
            });
        }
        dual_obj += yi * row.rhs;
    }

    let d = model.reduced_costs(y);
    for ((var, &xj), &dj) in model.variables.iter().zip(x).zip(&d) {
        let viol = (var.lower - xj).max(xj - var.upper).max(0.0);
        bump(&mut rep.primal_residual, &mut rep.worst_primal, viol, || format!("variable {}", var.name));
        if dj > 0.0 {
            if var.lower.is_finite() {
                dual_obj += dj * var.lower;
                bump(&mut rep.complementarity, &mut rep.worst_complementarity, dj * (xj - var.lower).abs(), || {
                    format!("variable {}", var.name)
                });
            } else {
                bump(&mut rep.dual_residual, &mut rep.worst_dual, dj, || format!("variable {}", var.name));
            }
        } else if dj < 0.0 {
            if var.upper.is_finite() {
                dual_obj += dj * var.upper;
                bump(&mut rep.complementarity, &mut rep.worst_complementarity, -dj * (var.upper - xj).abs(), || {
                    format!("variable {}", var.name)
                });
            } else {
                bump(&mut rep.dual_residual, &mut rep.worst_dual, -dj, || format!("variable {}", var.name));
            }
        }
    }
    let primal_obj = model.objective_value(x);
    rep.duality_gap = (primal_obj - dual_obj).abs() / (1.0 + primal_obj.abs());
    let ok = |v: f64| v <= tol || tol.is_infinite();
    rep.pass = ok(rep.primal_residual) && ok(rep.dual_residual) && ok(rep.complementarity) && ok(rep.duality_gap);
    rep
}
