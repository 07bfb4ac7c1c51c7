//! Sparse linear programs and the solve contract used by every formulation.
//!
//! Duals follow the convention `y = ∂objective/∂rhs` for a minimization, so a
//! `≤` row has `y ≤ 0` and a `≥` row has `y ≥ 0`. Reduced costs are
//! `c_j − Σ_i a_ij y_i`.

mod export;
mod kkt;
mod lu;
mod simplex;

pub use export::write_lp_format;
pub use kkt::{check_kkt, KktReport};
pub use simplex::{solve_lp, solve_lp_with, SimplexOptions};

use serde::Serialize;

#[derive(Debug, thiserror::Error)]
pub enum LpError {
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum RowSense {
    Eq,
    Le,
    Ge,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct VarId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct RowId(pub usize);

#[derive(Debug, Clone, PartialEq)]
pub struct Variable {
    pub name: String,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub name: String,
    pub coeffs: Vec<(usize, f64)>,
    pub sense: RowSense,
    pub rhs: f64,
}

/// A minimization LP: `min c·x` subject to rows and variable bounds.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LpModel {
    pub variables: Vec<Variable>,
    pub constraints: Vec<Constraint>,
    pub objective: Vec<f64>,
}

impl LpModel {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_var(&mut self, name: impl Into<String>, lower: f64, upper: f64, cost: f64) -> VarId {
        self.variables.push(Variable {
            name: name.into(),
            lower,
            upper,
        });
        self.objective.push(cost);
        VarId(self.variables.len() - 1)
    }

    pub fn add_cost(&mut self, var: VarId, cost: f64) {
        self.objective[var.0] += cost;
    }

    /// Adds a row. Duplicate column entries are merged and exact zeros dropped.
    pub fn add_row(
        &mut self,
        name: impl Into<String>,
        coeffs: &[(VarId, f64)],
        sense: RowSense,
        rhs: f64,
    ) -> RowId {
        let mut merged: Vec<(usize, f64)> = coeffs.iter().map(|&(v, a)| (v.0, a)).collect();
        merged.sort_by_key(|&(j, _)| j);
        let mut out: Vec<(usize, f64)> = Vec::with_capacity(merged.len());
        for (j, a) in merged {
            match out.last_mut() {
                Some(last) if last.0 == j => last.1 += a,
                _ => out.push((j, a)),
            }
        }
        out.retain(|&(_, a)| a != 0.0);
        self.constraints.push(Constraint {
            name: name.into(),
            coeffs: out,
            sense,
            rhs,
        });
        RowId(self.constraints.len() - 1)
    }

    pub fn num_vars(&self) -> usize {
        self.variables.len()
    }

    pub fn num_rows(&self) -> usize {
        self.constraints.len()
    }

    pub fn validate(&self) -> Result<(), LpError> {
        let n = self.variables.len();
        if self.objective.len() != n {
            return Err(LpError::InvalidModel(format!(
                "objective has {} entries for {} variables",
                self.objective.len(),
                n
            )));
        }
        for (v, c) in self.variables.iter().zip(&self.objective) {
            if v.lower.is_nan() || v.upper.is_nan() || !c.is_finite() {
                return Err(LpError::InvalidModel(format!("NaN or infinite data on variable {}", v.name)));
            }
            if v.lower > v.upper {
                return Err(LpError::InvalidModel(format!(
                    "variable {} has lower bound {} above upper bound {}",
                    v.name, v.lower, v.upper
                )));
            }
            if v.lower == f64::INFINITY || v.upper == f64::NEG_INFINITY {
                return Err(LpError::InvalidModel(format!("variable {} has an unattainable bound", v.name)));
            }
        }
        for row in &self.constraints {
            if !row.rhs.is_finite() {
                return Err(LpError::InvalidModel(format!("row {} has non-finite rhs", row.name)));
            }
            for &(j, a) in &row.coeffs {
                if j >= n {
                    return Err(LpError::InvalidModel(format!(
                        "row {} references column {} of {}",
                        row.name, j, n
                    )));
                }
                if !a.is_finite() {
                    return Err(LpError::InvalidModel(format!("row {} has a non-finite coefficient", row.name)));
                }
            }
        }
        Ok(())
    }

    /// Row activity `a_i·x` for every row.
    pub fn row_activity(&self, x: &[f64]) -> Vec<f64> {
        self.constraints
            .iter()
            .map(|r| r.coeffs.iter().map(|&(j, a)| a * x[j]).sum())
            .collect()
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective.iter().zip(x).map(|(c, v)| c * v).sum()
    }

    /// `c_j − Σ_i a_ij y_i` for every column.
    pub fn reduced_costs(&self, y: &[f64]) -> Vec<f64> {
        let mut d = self.objective.clone();
        for (row, &yi) in self.constraints.iter().zip(y) {
            if yi != 0.0 {
                for &(j, a) in &row.coeffs {
                    d[j] -= a * yi;
                }
            }
        }
        d
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub status: LpStatus,
    pub primal: Vec<f64>,
    pub duals: Vec<f64>,
    pub reduced_costs: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
}

impl LpSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }

    pub fn value(&self, v: VarId) -> f64 {
        self.primal[v.0]
    }

    pub fn dual(&self, r: RowId) -> f64 {
        self.duals[r.0]
    }
}
