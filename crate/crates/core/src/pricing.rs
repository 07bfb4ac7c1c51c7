//! Dual extraction, settlements under R^c / R^m / R^s, and price distortion.

use serde::Serialize;

use crate::error::Error;
use crate::formulations::{DispatchSolution, FormulationKind, IndexMap};
use crate::lp::{LpSolution, LpStatus};
use crate::model::Instance;

/// Probability-rescaled multipliers. Day-ahead prices `pi` hold one row for
/// single-copy formulations (π^c is not rescaled) and one row per scenario
/// slot otherwise. `mu_*` are filled for the mean-vector form and `sigma_*`
/// for the state-vector form; both are empty elsewhere.
#[derive(Debug, Clone, Serialize)]
pub struct DualSolution {
    pub kind: FormulationKind,
    pub probs: Vec<f64>,
    pub pi: Vec<Vec<f64>>,
    pub big_pi: Vec<Vec<f64>>,
    pub mu_x: Vec<Vec<f64>>,
    pub mu_f: Vec<Vec<f64>>,
    pub sigma_x: Vec<Vec<f64>>,
    pub sigma_f: Vec<Vec<f64>>,
}

impl DualSolution {
    pub fn num_slots(&self) -> usize {
        self.probs.len()
    }

    /// Day-ahead price at bus `n` seen by scenario slot `s`.
    pub fn pi_at(&self, s: usize, n: usize) -> f64 {
        if self.pi.len() == 1 {
            self.pi[0][n]
        } else {
            self.pi[s][n]
        }
    }

    /// Probability-weighted day-ahead price per bus.
    pub fn expected_pi(&self) -> Vec<f64> {
        let nb = self.big_pi.first().map(|r| r.len()).unwrap_or(0);
        (0..nb)
            .map(|n| (0..self.num_slots()).map(|s| self.probs[s] * self.pi_at(s, n)).sum())
            .collect()
    }

    /// Nonanticipativity multiplier of participant `i` in slot `s` for the
    /// mechanism's formulation (μ for mean-vector, σ for state-vector, else 0).
    pub fn na_x(&self, s: usize, i: usize) -> f64 {
        match self.kind {
            FormulationKind::MeanVector => self.mu_x[s][i],
            FormulationKind::StateVector => self.sigma_x[s][i],
            _ => 0.0,
        }
    }
}

pub fn extract_duals(sol: &LpSolution, map: &IndexMap) -> Result<DualSolution, Error> {
    if sol.status != LpStatus::Optimal {
        return Err(Error::NotOptimal(sol.status));
    }
    let probs = map.probs.clone();
    let copies = map.x.len();
    let scaled = |rows: &Vec<Vec<crate::lp::RowId>>| -> Vec<Vec<f64>> {
        rows.iter()
            .enumerate()
            .map(|(s, r)| r.iter().map(|&id| sol.dual(id) / probs[s]).collect())
            .collect()
    };
    let pi = if copies == 1 {
        vec![map.da_balance[0].iter().map(|&id| sol.dual(id)).collect()]
    } else {
        scaled(&map.da_balance)
    };
    let big_pi = scaled(&map.rt_balance);
    let (mu_x, mu_f, sigma_x, sigma_f) = match map.kind {
        FormulationKind::MeanVector => (scaled(&map.na_x), scaled(&map.na_f), Vec::new(), Vec::new()),
        FormulationKind::StateVector => (Vec::new(), Vec::new(), scaled(&map.na_x), scaled(&map.na_f)),
        _ => (Vec::new(), Vec::new(), Vec::new(), Vec::new()),
    };
    Ok(DualSolution {
        kind: map.kind,
        probs,
        pi,
        big_pi,
        mu_x,
        mu_f,
        sigma_x,
        sigma_f,
    })
}

/// Picks the representative of a mean-vector or state-vector dual whose
/// day-ahead prices are scenario-constant.
///
/// In both forms the day-ahead balance rows and the nonanticipativity rows are
/// linearly dependent, so (π_n(ω) + a_n(ω), μ_i(ω) − a_n(i)(ω),
/// μ_l(ω) − a_to(ω) + a_from(ω)) is optimal for every a with E[a] = 0 (σ
/// likewise). Taking a = E[π] − π removes that freedom; payments and
/// distortions are unchanged because they only involve π + μ and π + σ.
pub fn fix_price_gauge(inst: &Instance, duals: &mut DualSolution) {
    if duals.pi.len() <= 1 {
        return;
    }
    let mean = duals.expected_pi();
    let shift: Vec<Vec<f64>> = duals
        .pi
        .iter()
        .map(|row| row.iter().zip(&mean).map(|(p, m)| m - p).collect())
        .collect();
    let (nx, nf) = match duals.kind {
        FormulationKind::MeanVector => (&mut duals.mu_x, &mut duals.mu_f),
        FormulationKind::StateVector => (&mut duals.sigma_x, &mut duals.sigma_f),
        _ => return,
    };
    for (s, a) in shift.iter().enumerate() {
        for (i, p) in inst.participants.iter().enumerate() {
            nx[s][i] -= a[p.bus];
        }
        for (l, line) in inst.lines.iter().enumerate() {
            nf[s][l] -= a[line.to] - a[line.from];
        }
    }
    for row in duals.pi.iter_mut() {
        row.copy_from_slice(&mean);
    }
}

/// Raw row multipliers implied by `duals`: balance and nonanticipativity rows
/// are rebuilt from the rescaled values, every other row is taken from `sol`.
pub fn raw_row_duals(sol: &LpSolution, map: &IndexMap, duals: &DualSolution) -> Vec<f64> {
    let mut y = sol.duals.clone();
    let single = map.da_balance.len() == 1;
    for (k, rows) in map.da_balance.iter().enumerate() {
        let scale = if single { 1.0 } else { map.probs[k] };
        for (n, r) in rows.iter().enumerate() {
            y[r.0] = scale * duals.pi[k][n];
        }
    }
    for (s, rows) in map.rt_balance.iter().enumerate() {
        for (n, r) in rows.iter().enumerate() {
            y[r.0] = map.probs[s] * duals.big_pi[s][n];
        }
    }
    let (nx, nf) = match map.kind {
        FormulationKind::MeanVector => (&duals.mu_x, &duals.mu_f),
        FormulationKind::StateVector => (&duals.sigma_x, &duals.sigma_f),
        _ => return y,
    };
    for s in 0..map.num_slots() {
        for (i, r) in map.na_x[s].iter().enumerate() {
            y[r.0] = map.probs[s] * nx[s][i];
        }
        for (l, r) in map.na_f[s].iter().enumerate() {
            y[r.0] = map.probs[s] * nf[s][l];
        }
    }
    y
}

/// σ_i(ω) = μ_i(ω) − Σ_ω' p(ω')μ_i(ω').
pub fn derive_sigma_from_mu(mu: &[Vec<f64>], probs: &[f64]) -> Vec<Vec<f64>> {
    let width = mu.first().map(|r| r.len()).unwrap_or(0);
    let mean: Vec<f64> = (0..width).map(|i| mu.iter().zip(probs).map(|(r, p)| p * r[i]).sum()).collect();
    mu.iter().map(|r| r.iter().zip(&mean).map(|(m, e)| m - e).collect()).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Mechanism {
    Rc,
    Rm,
    Rs,
}

impl Mechanism {
    pub fn for_kind(kind: FormulationKind) -> Mechanism {
        match kind {
            FormulationKind::MeanVector => Mechanism::Rm,
            FormulationKind::StateVector => Mechanism::Rs,
            _ => Mechanism::Rc,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Mechanism::Rc => "rc",
            Mechanism::Rm => "rm",
            Mechanism::Rs => "rs",
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PaymentTable {
    pub mechanism: Mechanism,
    pub probs: Vec<f64>,
    /// [slot][participant], positive to the participant
    pub rho: Vec<Vec<f64>>,
    pub expected_rho: Vec<f64>,
}

impl PaymentTable {
    pub fn expected_total(&self) -> f64 {
        self.expected_rho.iter().sum()
    }
}

fn expectation(rows: &[Vec<f64>], probs: &[f64]) -> Vec<f64> {
    let width = rows.first().map(|r| r.len()).unwrap_or(0);
    (0..width).map(|i| rows.iter().zip(probs).map(|(r, p)| p * r[i]).sum()).collect()
}

/// ρ_i(ω) = (π_n(ω) + a_i(ω))·x_i(ω) + Π_n(ω)(X_i(ω) − x_i(ω)), where the
/// adjustment a is 0, μ or σ depending on the formulation that produced `duals`.
pub fn payments(inst: &Instance, dispatch: &DispatchSolution, duals: &DualSolution) -> PaymentTable {
    let ns = dispatch.num_slots();
    let rho: Vec<Vec<f64>> = (0..ns)
        .map(|s| {
            inst.participants
                .iter()
                .enumerate()
                .map(|(i, p)| {
                    let x = dispatch.x[s][i];
                    let big_x = dispatch.big_x[s][i];
                    (duals.pi_at(s, p.bus) + duals.na_x(s, i)) * x + duals.big_pi[s][p.bus] * (big_x - x)
                })
                .collect()
        })
        .collect();
    let expected_rho = expectation(&rho, &dispatch.probs);
    PaymentTable {
        mechanism: Mechanism::for_kind(duals.kind),
        probs: dispatch.probs.clone(),
        rho,
        expected_rho,
    }
}

pub fn payments_canonical(inst: &Instance, dispatch: &DispatchSolution, duals: &DualSolution) -> PaymentTable {
    payments(inst, dispatch, duals)
}

pub fn payments_mean_vector(inst: &Instance, dispatch: &DispatchSolution, duals: &DualSolution) -> PaymentTable {
    payments(inst, dispatch, duals)
}

pub fn payments_state_vector(inst: &Instance, dispatch: &DispatchSolution, duals: &DualSolution) -> PaymentTable {
    payments(inst, dispatch, duals)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum DistortionKey {
    Bus,
    Participant,
}

#[derive(Debug, Clone, Serialize)]
pub struct DistortionTable {
    pub mechanism: Mechanism,
    pub keyed_by: DistortionKey,
    /// [slot][bus or participant]
    pub m: Vec<Vec<f64>>,
    pub expected_m: Vec<f64>,
}

/// R^c: M_n(ω) = π_n − Π_n(ω) per bus. R^m / R^s: M_i(ω) = π_n(ω) + (μ|σ)_i(ω) − Π_n(ω).
pub fn price_distortion(inst: &Instance, duals: &DualSolution) -> DistortionTable {
    let ns = duals.num_slots();
    let mechanism = Mechanism::for_kind(duals.kind);
    let (keyed_by, m): (DistortionKey, Vec<Vec<f64>>) = match mechanism {
        Mechanism::Rc => (
            DistortionKey::Bus,
            (0..ns)
                .map(|s| (0..inst.buses.len()).map(|n| duals.pi_at(s, n) - duals.big_pi[s][n]).collect())
                .collect(),
        ),
        _ => (
            DistortionKey::Participant,
            (0..ns)
                .map(|s| {
                    inst.participants
                        .iter()
                        .enumerate()
                        .map(|(i, p)| duals.pi_at(s, p.bus) + duals.na_x(s, i) - duals.big_pi[s][p.bus])
                        .collect()
                })
                .collect(),
        ),
    };
    let expected_m = expectation(&m, &duals.probs);
    DistortionTable {
        mechanism,
        keyed_by,
        m,
        expected_m,
    }
}
