//! Progressive hedging over scenario subproblems.
//!
//! The proximal term (ρ/2)(x − x̄)² is replaced by its secant interpolant on a
//! symmetric breakpoint grid so every subproblem stays an LP. The interpolant
//! has a kink at x̄ whose slope bounds how far a PH fixed point can be from
//! stationary, so breakpoint gaps grow geometrically away from x̄: the
//! innermost gap is tiny while the grid still spans the item's range.

use serde::Serialize;

use crate::error::Error;
use crate::formulations::{build_clairvoyant, DispatchSolution, FormulationKind, IndexMap};
use crate::lp::{solve_lp, LpModel, LpSolution, RowId, RowSense, VarId};
use crate::model::Instance;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhParams {
    /// penalty ρ, $/MWh²
    pub rho: f64,
    pub max_iters: usize,
    /// bound on max |x(ω) − x̄|
    pub primal_tol: f64,
    /// bound on max |w_k − w_{k−1}| and on ρ·max |x̄_k − x̄_{k−1}|
    pub dual_tol: f64,
    /// odd number of grid points, 0 included
    pub breakpoints: usize,
    /// ratio between consecutive breakpoint gaps; 1 gives a uniform grid
    pub grid_ratio: f64,
}

impl Default for PhParams {
    fn default() -> Self {
        Self {
            rho: 1.0,
            max_iters: 2000,
            primal_tol: 1e-6,
            dual_tol: 1e-6,
            breakpoints: 21,
            grid_ratio: 4.0,
        }
    }
}

impl PhParams {
    pub fn validate(&self) -> Result<(), Error> {
        let positive = [self.rho, self.primal_tol, self.dual_tol];
        if positive.iter().any(|v| !(*v > 0.0)) || self.max_iters == 0 {
            return Err(Error::Input("progressive hedging parameters must be positive".into()));
        }
        if self.breakpoints < 3 || self.breakpoints % 2 == 0 {
            return Err(Error::Input("breakpoint count must be odd and at least 3".into()));
        }
        if !(self.grid_ratio >= 1.0) {
            return Err(Error::Input("grid ratio must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PhIteration {
    pub iteration: usize,
    /// max ‖x(ω) − x̄‖∞ after the subproblem solves
    pub spread: f64,
    /// Σ_ω p(ω)·(subproblem objective without PH terms)
    pub objective_estimate: f64,
    /// max |w|
    pub multiplier_norm: f64,
    /// max(|w_k − w_{k−1}|, ρ|x̄_k − x̄_{k−1}|)
    pub drift: f64,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct PhTrace {
    pub iterations: Vec<PhIteration>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PhStatus {
    Converged,
    IterationLimit,
}

#[derive(Debug, Clone, Serialize)]
pub struct PhResult {
    pub status: PhStatus,
    /// scenario dispatch with every day-ahead copy fixed at x̄; objective is the
    /// expected cost of that implementable decision
    pub dispatch: DispatchSolution,
    /// [slot][participant]
    pub w_x: Vec<Vec<f64>>,
    /// [slot][line]
    pub w_f: Vec<Vec<f64>>,
    pub trace: PhTrace,
}

/// One first-stage item (participant quantity or line flow) in a subproblem.
struct Prox {
    var: VarId,
    base_cost: f64,
    row: RowId,
    up: Vec<VarId>,
    down: Vec<VarId>,
    span: f64,
}

struct Subproblem {
    model: LpModel,
    map: IndexMap,
    items: Vec<Prox>,
}

/// Nonnegative half of the grid: 0 = g_0 < … < g_n = span with gaps growing
/// by `ratio`.
pub fn breakpoints(span: f64, n: usize, ratio: f64) -> Vec<f64> {
    let total: f64 = (0..n).map(|k| ratio.powi(k as i32)).sum();
    let mut out = Vec::with_capacity(n + 1);
    let mut acc = 0.0;
    out.push(0.0);
    for k in 0..n {
        acc += ratio.powi(k as i32);
        out.push(if k + 1 == n { span } else { span * acc / total });
    }
    out
}

fn item_spans(inst: &Instance) -> Vec<f64> {
    let fallback: f64 = inst
        .participants
        .iter()
        .map(|p| p.x_max - p.x_min)
        .filter(|v| v.is_finite())
        .sum::<f64>()
        .max(1.0);
    let mut spans: Vec<f64> = inst.participants.iter().map(|p| p.x_max - p.x_min).collect();
    for l in &inst.lines {
        let angle = l.beta * (inst.theta_max - inst.theta_min);
        spans.push((l.f_max - l.f_min).min(angle));
    }
    spans
        .into_iter()
        .map(|s| if s.is_finite() && s > 0.0 { s } else { fallback })
        .collect()
}

impl Subproblem {
    fn new(inst: &Instance, s: usize, segments: usize) -> Result<Self, Error> {
        let (mut model, map) = build_clairvoyant(inst, s)?;
        let spans = item_spans(inst);
        let vars: Vec<VarId> = map.x[0].iter().chain(&map.f[0]).copied().collect();
        let mut items = Vec::with_capacity(vars.len());
        for (j, (&var, span)) in vars.iter().zip(spans).enumerate() {
            let base_cost = model.objective[var.0];
            let mut up = Vec::with_capacity(segments);
            let mut down = Vec::with_capacity(segments);
            for k in 0..segments {
                up.push(model.add_var(format!("ph_up_{j}_{k}"), 0.0, 0.0, 0.0));
                down.push(model.add_var(format!("ph_dn_{j}_{k}"), 0.0, 0.0, 0.0));
            }
            let mut coeffs = vec![(var, 1.0)];
            coeffs.extend(up.iter().map(|&v| (v, -1.0)));
            coeffs.extend(down.iter().map(|&v| (v, 1.0)));
            let row = model.add_row(format!("ph_{j}"), &coeffs, RowSense::Eq, 0.0);
            items.push(Prox {
                var,
                base_cost,
                row,
                up,
                down,
                span,
            });
        }
        Ok(Self { model, map, items })
    }

    /// Sets the penalty grid, the multipliers and the consensus point.
    /// `active = false` drops the proximal term and frees x.
    fn configure(&mut self, rho: f64, ratio: f64, w: &[f64], x_bar: &[f64], active: bool) {
        for (j, it) in self.items.iter().enumerate() {
            self.model.objective[it.var.0] = it.base_cost + w[j];
            self.model.constraints[it.row.0].rhs = x_bar[j];
            let grid = breakpoints(it.span, it.up.len(), ratio);
            let n = it.up.len();
            for k in 0..n {
                let (a, b) = (grid[k], grid[k + 1]);
                // secant slope of (ρ/2)d² on [a, b]
                let slope = if active { 0.5 * rho * (a + b) } else { 0.0 };
                let width = if !active || k + 1 == n { f64::INFINITY } else { b - a };
                for &v in [it.up[k], it.down[k]].iter() {
                    self.model.objective[v.0] = slope;
                    self.model.variables[v.0].upper = width;
                }
            }
        }
    }

    fn solve(&self) -> Result<LpSolution, Error> {
        let sol = solve_lp(&self.model)?;
        if !sol.is_optimal() {
            return Err(Error::NotOptimal(sol.status));
        }
        Ok(sol)
    }

    /// Objective of the scenario without the PH terms.
    fn base_objective(&self, sol: &LpSolution) -> f64 {
        let mut obj = sol.objective;
        for it in &self.items {
            let x = sol.primal[it.var.0];
            obj -= (self.model.objective[it.var.0] - it.base_cost) * x;
            for &v in it.up.iter().chain(&it.down) {
                obj -= self.model.objective[v.0] * sol.primal[v.0];
            }
        }
        obj
    }
}

pub fn solve_progressive_hedging(inst: &Instance, params: &PhParams) -> Result<PhResult, Error> {
    params.validate()?;
    let ns = inst.num_scenarios();
    if ns == 0 {
        return Err(Error::Input("instance has no scenarios".into()));
    }
    let probs = inst.probs();
    let np = inst.participants.len();
    let segments = (params.breakpoints - 1) / 2;
    let mut subs = (0..ns)
        .map(|s| Subproblem::new(inst, s, segments))
        .collect::<Result<Vec<_>, _>>()?;
    let width = subs[0].items.len();

    let mut w = vec![vec![0.0; width]; ns];
    let mut x_bar = vec![0.0; width];
    let mut xs = vec![vec![0.0; width]; ns];
    let mut trace = PhTrace::default();
    let mut status = PhStatus::IterationLimit;

    for iteration in 0..params.max_iters {
        let active = iteration > 0;
        let mut objective_estimate = 0.0;
        for (s, sub) in subs.iter_mut().enumerate() {
            sub.configure(params.rho, params.grid_ratio, &w[s], &x_bar, active);
            let sol = sub.solve()?;
            for (j, it) in sub.items.iter().enumerate() {
                xs[s][j] = sol.primal[it.var.0];
            }
            objective_estimate += probs[s] * sub.base_objective(&sol);
        }
        let mut drift: f64 = 0.0;
        for j in 0..width {
            let next: f64 = (0..ns).map(|s| probs[s] * xs[s][j]).sum();
            if active {
                drift = drift.max(params.rho * (next - x_bar[j]).abs());
            }
            x_bar[j] = next;
        }
        let mut spread: f64 = 0.0;
        for s in 0..ns {
            for j in 0..width {
                let d = xs[s][j] - x_bar[j];
                spread = spread.max(d.abs());
                drift = drift.max((params.rho * d).abs());
                w[s][j] += params.rho * d;
            }
        }
        let multiplier_norm = w.iter().flatten().fold(0.0f64, |a, v| a.max(v.abs()));
        trace.iterations.push(PhIteration {
            iteration,
            spread,
            objective_estimate,
            multiplier_norm,
            drift,
        });
        log::debug!("ph iter {iteration}: spread {spread:.3e} drift {drift:.3e} obj {objective_estimate:.6}");
        if spread <= params.primal_tol && drift <= params.dual_tol {
            status = PhStatus::Converged;
            break;
        }
    }

    let dispatch = evaluate_fixed(inst, &mut subs, &x_bar, np)?;
    let (w_x, w_f) = w.iter().map(|r| (r[..np].to_vec(), r[np..].to_vec())).unzip();
    Ok(PhResult {
        status,
        dispatch,
        w_x,
        w_f,
        trace,
    })
}

/// Solves each scenario with the day-ahead decision pinned at x̄.
fn evaluate_fixed(inst: &Instance, subs: &mut [Subproblem], x_bar: &[f64], np: usize) -> Result<DispatchSolution, Error> {
    let ns = subs.len();
    let probs = inst.probs();
    let zeros = vec![0.0; x_bar.len()];
    let mut out = DispatchSolution {
        kind: FormulationKind::MeanVector,
        scenarios: (0..ns).collect(),
        probs: probs.clone(),
        x: Vec::with_capacity(ns),
        big_x: Vec::with_capacity(ns),
        u: Vec::with_capacity(ns),
        v: Vec::with_capacity(ns),
        f: Vec::with_capacity(ns),
        big_f: Vec::with_capacity(ns),
        x_bar: x_bar[..np].to_vec(),
        f_bar: x_bar[np..].to_vec(),
        objective: 0.0,
    };
    for (s, sub) in subs.iter_mut().enumerate() {
        sub.configure(1.0, 1.0, &zeros, x_bar, false);
        for (j, it) in sub.items.iter().enumerate() {
            for &v in it.up.iter().chain(&it.down) {
                sub.model.variables[v.0].upper = 0.0;
            }
            let var = &mut sub.model.variables[it.var.0];
            // clamp rounding outside the bounds of the copy
            let value = x_bar[j].clamp(var.lower, var.upper);
            sub.model.constraints[it.row.0].rhs = value;
        }
        let sol = sub.solve()?;
        let vals = |ids: &[VarId]| ids.iter().map(|v| sol.value(*v)).collect::<Vec<f64>>();
        out.x.push(vals(&sub.map.x[0]));
        out.f.push(vals(&sub.map.f[0]));
        out.big_x.push(vals(&sub.map.big_x[0]));
        out.u.push(vals(&sub.map.u[0]));
        out.v.push(vals(&sub.map.v[0]));
        out.big_f.push(vals(&sub.map.big_f[0]));
        out.objective += probs[s] * sol.objective;
    }
    Ok(out)
}
