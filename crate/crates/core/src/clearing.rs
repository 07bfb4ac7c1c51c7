//! Build, solve and extract in one step. Multi-copy duals are reported with
//! scenario-constant day-ahead prices (see [`fix_price_gauge`]).

use crate::error::Error;
use crate::formulations::{build_with, extract_dispatch, DispatchSolution, FormulationKind, IndexMap, Injections};
use crate::lp::{check_kkt, solve_lp, KktReport, LpModel, LpSolution};
use crate::model::Instance;
use crate::pricing::{extract_duals, fix_price_gauge, DualSolution};

/// KKT tolerance applied to every market solve.
pub const KKT_TOL: f64 = 1e-7;

#[derive(Debug, Clone)]
pub struct Cleared {
    pub model: LpModel,
    pub map: IndexMap,
    pub solution: LpSolution,
    pub kkt: KktReport,
    pub dispatch: DispatchSolution,
    pub duals: DualSolution,
}

pub fn clear(inst: &Instance, kind: FormulationKind) -> Result<Cleared, Error> {
    clear_with(inst, kind, None)
}

pub fn clear_with(inst: &Instance, kind: FormulationKind, injections: Option<&Injections>) -> Result<Cleared, Error> {
    let (model, map) = build_with(inst, kind, injections)?;
    let solution = solve_lp(&model)?;
    let dispatch = extract_dispatch(&solution, &map)?;
    let mut duals = extract_duals(&solution, &map)?;
    fix_price_gauge(inst, &mut duals);
    let kkt = check_kkt(&model, &solution, KKT_TOL);
    if !kkt.pass {
        log::warn!(
            "{} solve of {} misses KKT tolerance: primal {:.2e}, dual {:.2e}, gap {:.2e}",
            kind.label(),
            inst.name,
            kkt.primal_residual,
            kkt.dual_residual,
            kkt.duality_gap
        );
    }
    Ok(Cleared {
        model,
        map,
        solution,
        kkt,
        dispatch,
        duals,
    })
}
