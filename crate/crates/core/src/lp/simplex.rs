//! Bounded-variable primal simplex on a dense tableau.
//!
//! Phase 1 minimizes the sum of artificials; phase 2 the model objective.
//! Pricing is Dantzig with a Harris two-pass ratio test, falling back to
//! Bland's rule after a run of degenerate pivots. The final basis is
//! refactored with a dense LU so the reported primal and dual values are
//! exact basic solutions rather than accumulated tableau values.

use log::debug;

use super::lu::DenseLu;
use super::{LpError, LpModel, LpSolution, LpStatus, RowSense};

#[derive(Debug, Clone, Copy)]
pub struct SimplexOptions {
    pub feas_tol: f64,
    pub opt_tol: f64,
    pub pivot_tol: f64,
    pub max_iter: Option<usize>,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        Self {
            feas_tol: 1e-9,
            opt_tol: 1e-9,
            pivot_tol: 1e-9,
            max_iter: None,
        }
    }
}

pub fn solve_lp(model: &LpModel) -> Result<LpSolution, LpError> {
    solve_lp_with(model, &SimplexOptions::default())
}

pub fn solve_lp_with(model: &LpModel, opts: &SimplexOptions) -> Result<LpSolution, LpError> {
    model.validate()?;
    let mut t = Tableau::new(model, opts);
    let max_iter = opts.max_iter.unwrap_or(200_000 + 50 * (t.m + t.ncol));

    t.set_phase_one_costs();
    match t.iterate(max_iter)? {
        PhaseEnd::Optimal => {}
        PhaseEnd::Unbounded => {
            return Err(LpError::Numerical("phase one reported an unbounded ray".into()));
        }
    }
    let infeasibility: f64 = t.basis.iter().enumerate().filter(|(_, &c)| c >= t.ncol).map(|(i, _)| t.xb[i].abs()).sum();
    let bscale = model.constraints.iter().fold(1.0f64, |m, r| m.max(r.rhs.abs()));
    if infeasibility > 1e-7 * bscale {
        debug!("phase one ended with infeasibility {infeasibility:e}");
        return Ok(t.terminal(model, LpStatus::Infeasible));
    }
    t.fix_artificials();
    t.set_phase_two_costs(model);

    for round in 0..6 {
        match t.iterate(max_iter)? {
            PhaseEnd::Unbounded => return Ok(t.terminal(model, LpStatus::Unbounded)),
            PhaseEnd::Optimal => {}
        }
        let lu = t.factor_basis()?;
        let refined = t.refine(&lu, model);
        if refined.primal_violation > 1e-7 * bscale {
            return Err(LpError::Numerical(format!(
                "basis refactorization left primal violation {:e}",
                refined.primal_violation
            )));
        }
        if refined.dual_violation <= opts.opt_tol * 10.0 {
            return Ok(t.finish(model, &refined));
        }
        debug!(
            "round {round}: dual violation {:e} after refactorization, rebuilding tableau",
            refined.dual_violation
        );
        t.rebuild(&lu, &refined);
    }
    Err(LpError::Numerical("no stable optimal basis after repeated refactorization".into()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum NonBasic {
    Lower,
    Upper,
    Free,
}

enum PhaseEnd {
    Optimal,
    Unbounded,
}

struct Refined {
    xb: Vec<f64>,
    y: Vec<f64>,
    d: Vec<f64>,
    primal_violation: f64,
    dual_violation: f64,
}

struct Tableau {
    m: usize,
    /// structural + slack columns; artificials are implicit columns `ncol + i`.
    ncol: usize,
    nstruct: usize,
    tab: Vec<f64>,
    rhs: Vec<f64>,
    /// sparse columns of `[A | S | art]` in original row space
    cols: Vec<Vec<(usize, f64)>>,
    lb: Vec<f64>,
    ub: Vec<f64>,
    x: Vec<f64>,
    nb: Vec<NonBasic>,
    basis: Vec<usize>,
    pos: Vec<usize>,
    xb: Vec<f64>,
    cost: Vec<f64>,
    d: Vec<f64>,
    opts: SimplexOptions,
    iterations: usize,
}

const NOT_BASIC: usize = usize::MAX;

impl Tableau {
    fn new(model: &LpModel, opts: &SimplexOptions) -> Self {
        let m = model.num_rows();
        let nstruct = model.num_vars();
        let mut cols: Vec<Vec<(usize, f64)>> = vec![Vec::new(); nstruct];
        for (i, row) in model.constraints.iter().enumerate() {
            for &(j, a) in &row.coeffs {
                cols[j].push((i, a));
            }
        }
        let mut lb: Vec<f64> = model.variables.iter().map(|v| v.lower).collect();
        let mut ub: Vec<f64> = model.variables.iter().map(|v| v.upper).collect();
        let mut slack_of_row = vec![NOT_BASIC; m];
        for (i, row) in model.constraints.iter().enumerate() {
            let sign = match row.sense {
                RowSense::Eq => continue,
                RowSense::Le => 1.0,
                RowSense::Ge => -1.0,
            };
            slack_of_row[i] = cols.len();
            cols.push(vec![(i, sign)]);
            lb.push(0.0);
            ub.push(f64::INFINITY);
        }
        let ncol = cols.len();

        let mut x = vec![0.0; ncol + m];
        let mut nb = vec![NonBasic::Free; ncol + m];
        for j in 0..ncol {
            if lb[j].is_finite() {
                x[j] = lb[j];
                nb[j] = NonBasic::Lower;
            } else if ub[j].is_finite() {
                x[j] = ub[j];
                nb[j] = NonBasic::Upper;
            }
        }
        let mut resid: Vec<f64> = model.constraints.iter().map(|r| r.rhs).collect();
        for (j, col) in cols.iter().enumerate() {
            if x[j] != 0.0 {
                for &(i, a) in col {
                    resid[i] -= a * x[j];
                }
            }
        }

        let mut tab = vec![0.0; m * ncol];
        let mut basis = vec![0; m];
        let mut pos = vec![NOT_BASIC; ncol + m];
        let mut xb = vec![0.0; m];
        let mut art_sign = vec![1.0; m];
        for i in 0..m {
            let s = slack_of_row[i];
            let slack_fits = s != NOT_BASIC && cols[s][0].1 * resid[i] >= 0.0;
            art_sign[i] = if resid[i] >= 0.0 { 1.0 } else { -1.0 };
            let (col, sign, value) = if slack_fits {
                let sign = cols[s][0].1;
                (s, sign, resid[i] * sign)
            } else {
                (ncol + i, art_sign[i], resid[i].abs())
            };
            basis[i] = col;
            pos[col] = i;
            xb[i] = value;
            x[col] = value;
            let row = &mut tab[i * ncol..(i + 1) * ncol];
            for &(j, a) in &model.constraints[i].coeffs {
                row[j] = sign * a;
            }
            if s != NOT_BASIC {
                row[s] = sign * cols[s][0].1;
            }
        }
        for i in 0..m {
            cols.push(vec![(i, art_sign[i])]);
            lb.push(0.0);
            ub.push(f64::INFINITY);
            if basis[i] != ncol + i {
                nb[ncol + i] = NonBasic::Lower;
            }
        }
        let rhs = model.constraints.iter().map(|r| r.rhs).collect();
        Self {
            m,
            ncol,
            nstruct,
            tab,
            rhs,
            cols,
            lb,
            ub,
            x,
            nb,
            basis,
            pos,
            xb,
            cost: vec![0.0; ncol + m],
            d: vec![0.0; ncol],
            opts: *opts,
            iterations: 0,
        }
    }

    fn recompute_reduced_costs(&mut self) {
        let ncol = self.ncol;
        self.d.copy_from_slice(&self.cost[..ncol]);
        for i in 0..self.m {
            let cb = self.cost[self.basis[i]];
            if cb != 0.0 {
                let row = &self.tab[i * ncol..(i + 1) * ncol];
                for (dj, a) in self.d.iter_mut().zip(row) {
                    *dj -= cb * a;
                }
            }
        }
        for i in 0..self.m {
            if self.basis[i] < ncol {
                self.d[self.basis[i]] = 0.0;
            }
        }
    }

    fn set_phase_one_costs(&mut self) {
        self.cost.iter_mut().for_each(|c| *c = 0.0);
        for i in 0..self.m {
            self.cost[self.ncol + i] = 1.0;
        }
        self.recompute_reduced_costs();
    }

    fn set_phase_two_costs(&mut self, model: &LpModel) {
        self.cost.iter_mut().for_each(|c| *c = 0.0);
        self.cost[..self.nstruct].copy_from_slice(&model.objective);
        self.recompute_reduced_costs();
    }

    fn fix_artificials(&mut self) {
        for i in 0..self.m {
            let a = self.ncol + i;
            self.ub[a] = 0.0;
        }
    }

    fn entering_direction(&self, j: usize) -> Option<f64> {
        if self.pos[j] != NOT_BASIC || self.lb[j] == self.ub[j] {
            return None;
        }
        let dj = self.d[j];
        let tol = self.opts.opt_tol;
        match self.nb[j] {
            NonBasic::Lower if dj < -tol => Some(1.0),
            NonBasic::Upper if dj > tol => Some(-1.0),
            NonBasic::Free if dj.abs() > tol => Some(-dj.signum()),
            _ => None,
        }
    }

    fn iterate(&mut self, max_iter: usize) -> Result<PhaseEnd, LpError> {
        let mut degenerate_run = 0usize;
        let mut bland = false;
        loop {
            if self.iterations >= max_iter {
                return Err(LpError::Numerical(format!("iteration limit {max_iter} reached")));
            }
            let mut q = NOT_BASIC;
            let mut dir = 0.0;
            let mut best = 0.0;
            for j in 0..self.ncol {
                if let Some(s) = self.entering_direction(j) {
                    if bland {
                        q = j;
                        dir = s;
                        break;
                    }
                    if self.d[j].abs() > best {
                        best = self.d[j].abs();
                        q = j;
                        dir = s;
                    }
                }
            }
            if q == NOT_BASIC {
                return Ok(PhaseEnd::Optimal);
            }
            self.iterations += 1;

            let step = match self.ratio_test(q, dir, bland) {
                None => return Ok(PhaseEnd::Unbounded),
                Some(Step::Flip(step)) => {
                    self.apply_step(q, dir, step);
                    self.nb[q] = if dir > 0.0 { NonBasic::Upper } else { NonBasic::Lower };
                    self.x[q] = if dir > 0.0 { self.ub[q] } else { self.lb[q] };
                    step
                }
                Some(Step::Pivot { row, step, to_upper }) => {
                    self.apply_step(q, dir, step);
                    let leaving = self.basis[row];
                    let bound = if to_upper { self.ub[leaving] } else { self.lb[leaving] };
                    self.x[leaving] = bound;
                    self.nb[leaving] = if to_upper { NonBasic::Upper } else { NonBasic::Lower };
                    self.pos[leaving] = NOT_BASIC;
                    self.xb[row] = self.x[q];
                    self.basis[row] = q;
                    self.pos[q] = row;
                    self.pivot(row, q);
                    step
                }
            };
            if step.abs() <= 1e-12 {
                degenerate_run += 1;
                if degenerate_run > 50 {
                    bland = true;
                }
            } else {
                degenerate_run = 0;
                bland = false;
            }
        }
    }

    fn apply_step(&mut self, q: usize, dir: f64, step: f64) {
        if step == 0.0 {
            return;
        }
        let ncol = self.ncol;
        self.x[q] += dir * step;
        for i in 0..self.m {
            let a = self.tab[i * ncol + q];
            if a != 0.0 {
                self.xb[i] -= dir * step * a;
                self.x[self.basis[i]] = self.xb[i];
            }
        }
    }

    fn ratio_test(&self, q: usize, dir: f64, bland: bool) -> Option<Step> {
        let ncol = self.ncol;
        let ftol = self.opts.feas_tol;
        let ptol = self.opts.pivot_tol;
        let flip = self.ub[q] - self.lb[q];

        // rate at which basic i decreases per unit step
        let rate = |i: usize| self.tab[i * ncol + q] * dir;
        let limit = |i: usize, relax: f64| -> Option<(f64, bool)> {
            let r = rate(i);
            let b = self.basis[i];
            if r > ptol && self.lb[b].is_finite() {
                Some((((self.xb[i] - self.lb[b]) + relax) / r, false))
            } else if r < -ptol && self.ub[b].is_finite() {
                Some((((self.ub[b] - self.xb[i]) + relax) / -r, true))
            } else {
                None
            }
        };

        if bland {
            let mut best: Option<(usize, f64, bool)> = None;
            for i in 0..self.m {
                if let Some((ratio, up)) = limit(i, 0.0) {
                    let ratio = ratio.max(0.0);
                    let better = match best {
                        None => true,
                        Some((bi, br, _)) => {
                            ratio < br - 1e-12 || (ratio <= br + 1e-12 && self.basis[i] < self.basis[bi])
                        }
                    };
                    if better {
                        best = Some((i, ratio, up));
                    }
                }
            }
            return match best {
                Some((row, step, to_upper)) if step < flip => Some(Step::Pivot { row, step, to_upper }),
                _ if flip.is_finite() => Some(Step::Flip(flip)),
                _ => None,
            };
        }

        let mut theta_max = f64::INFINITY;
        for i in 0..self.m {
            if let Some((ratio, _)) = limit(i, ftol) {
                theta_max = theta_max.min(ratio);
            }
        }
        if flip <= theta_max {
            return if flip.is_finite() { Some(Step::Flip(flip)) } else { None };
        }
        let mut chosen: Option<(usize, f64, bool)> = None;
        let mut best_rate = 0.0;
        for i in 0..self.m {
            if let Some((ratio, up)) = limit(i, 0.0) {
                if ratio <= theta_max && rate(i).abs() > best_rate {
                    best_rate = rate(i).abs();
                    chosen = Some((i, ratio.max(0.0), up));
                }
            }
        }
        chosen.map(|(row, step, to_upper)| Step::Pivot { row, step, to_upper })
    }

    fn pivot(&mut self, r: usize, q: usize) {
        let ncol = self.ncol;
        let piv = self.tab[r * ncol + q];
        {
            let row = &mut self.tab[r * ncol..(r + 1) * ncol];
            let inv = 1.0 / piv;
            row.iter_mut().for_each(|v| *v *= inv);
            row[q] = 1.0;
        }
        let (before, rest) = self.tab.split_at_mut(r * ncol);
        let (pivot_row, after) = rest.split_at_mut(ncol);
        let eliminate = |chunk: &mut [f64]| {
            for row in chunk.chunks_exact_mut(ncol) {
                let f = row[q];
                if f != 0.0 {
                    for (v, p) in row.iter_mut().zip(pivot_row.iter()) {
                        *v -= f * p;
                    }
                    row[q] = 0.0;
                }
            }
        };
        eliminate(before);
        eliminate(after);
        let dq = self.d[q];
        if dq != 0.0 {
            for (dj, p) in self.d.iter_mut().zip(pivot_row.iter()) {
                *dj -= dq * p;
            }
        }
        self.d[q] = 0.0;
    }

    fn basis_matrix(&self) -> Vec<f64> {
        let m = self.m;
        let mut b = vec![0.0; m * m];
        for (k, &col) in self.basis.iter().enumerate() {
            for &(i, a) in &self.cols[col] {
                b[i * m + k] = a;
            }
        }
        b
    }

    fn factor_basis(&self) -> Result<DenseLu, LpError> {
        DenseLu::factor(self.m, self.basis_matrix(), 1e-13)
            .ok_or_else(|| LpError::Numerical("optimal basis is numerically singular".into()))
    }

    fn refine(&self, lu: &DenseLu, model: &LpModel) -> Refined {
        let m = self.m;
        let mut bn = self.rhs.clone();
        for (j, col) in self.cols.iter().enumerate() {
            if self.pos[j] == NOT_BASIC && self.x[j] != 0.0 {
                for &(i, a) in col {
                    bn[i] -= a * self.x[j];
                }
            }
        }
        let mut xb = bn;
        if m > 0 {
            lu.solve(&mut xb);
        }
        let mut y: Vec<f64> = self.basis.iter().map(|&c| if c < self.nstruct { model.objective[c] } else { 0.0 }).collect();
        if m > 0 {
            lu.solve_transpose(&mut y);
        }
        let mut d = vec![0.0; self.ncol];
        for j in 0..self.ncol {
            let c = if j < self.nstruct { model.objective[j] } else { 0.0 };
            d[j] = c - self.cols[j].iter().map(|&(i, a)| a * y[i]).sum::<f64>();
        }
        let mut primal_violation: f64 = 0.0;
        for (i, &c) in self.basis.iter().enumerate() {
            let v = xb[i];
            primal_violation = primal_violation.max(self.lb[c] - v).max(v - self.ub[c]);
        }
        let mut dual_violation: f64 = 0.0;
        for j in 0..self.ncol {
            if self.pos[j] != NOT_BASIC || self.lb[j] == self.ub[j] {
                continue;
            }
            let v = match self.nb[j] {
                NonBasic::Lower => -d[j],
                NonBasic::Upper => d[j],
                NonBasic::Free => d[j].abs(),
            };
            dual_violation = dual_violation.max(v);
        }
        Refined {
            xb,
            y,
            d,
            primal_violation,
            dual_violation,
        }
    }

    fn rebuild(&mut self, lu: &DenseLu, refined: &Refined) {
        let (m, ncol) = (self.m, self.ncol);
        let mut col = vec![0.0; m];
        for j in 0..ncol {
            col.iter_mut().for_each(|v| *v = 0.0);
            for &(i, a) in &self.cols[j] {
                col[i] = a;
            }
            lu.solve(&mut col);
            for i in 0..m {
                let v = col[i];
                self.tab[i * ncol + j] = if v.abs() < 1e-14 { 0.0 } else { v };
            }
        }
        for (i, &c) in self.basis.iter().enumerate() {
            let v = refined.xb[i].clamp(self.lb[c], self.ub[c]);
            self.xb[i] = v;
            self.x[c] = v;
        }
        self.d.copy_from_slice(&refined.d);
        for &c in &self.basis {
            if c < ncol {
                self.d[c] = 0.0;
            }
        }
    }

    fn finish(&self, model: &LpModel, refined: &Refined) -> LpSolution {
        let mut x = self.x.clone();
        for (i, &c) in self.basis.iter().enumerate() {
            x[c] = refined.xb[i];
        }
        x.truncate(self.nstruct);
        let reduced_costs = model.reduced_costs(&refined.y);
        LpSolution {
            status: LpStatus::Optimal,
            objective: model.objective_value(&x),
            primal: x,
            duals: refined.y.clone(),
            reduced_costs,
            iterations: self.iterations,
        }
    }

    fn terminal(&self, model: &LpModel, status: LpStatus) -> LpSolution {
        let mut x = self.x.clone();
        x.truncate(self.nstruct);
        LpSolution {
            status,
            objective: match status {
                LpStatus::Unbounded => f64::NEG_INFINITY,
                _ => f64::INFINITY,
            },
            primal: x,
            duals: vec![0.0; model.num_rows()],
            reduced_costs: vec![0.0; model.num_vars()],
            iterations: self.iterations,
        }
    }
}

enum Step {
    Flip(f64),
    Pivot { row: usize, step: f64, to_upper: bool },
}
