//! Extensive-form LPs: clairvoyant, canonical, mean-vector and state-vector.
//!
//! Scenario terms of the objective carry the scenario probability; balance and
//! nonanticipativity rows are unweighted.

use serde::Serialize;

use crate::error::Error;
use crate::lp::{LpModel, LpSolution, LpStatus, RowId, RowSense, VarId};
use crate::model::Instance;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum FormulationKind {
    Clairvoyant { scenario: usize },
    Canonical,
    MeanVector,
    StateVector,
}

impl FormulationKind {
    pub fn label(&self) -> String {
        match self {
            FormulationKind::Clairvoyant { scenario } => format!("clairvoyant:{}", scenario + 1),
            FormulationKind::Canonical => "canonical".into(),
            FormulationKind::MeanVector => "mean_vector".into(),
            FormulationKind::StateVector => "state_vector".into(),
        }
    }

    fn has_copies(&self) -> bool {
        matches!(self, FormulationKind::MeanVector | FormulationKind::StateVector)
    }
}

/// Variable and row handles for one built formulation. Outer vectors of the
/// day-ahead entries are indexed by copy (one copy for clairvoyant and
/// canonical, one per scenario otherwise); real-time entries by scenario slot.
#[derive(Debug, Clone)]
pub struct IndexMap {
    pub kind: FormulationKind,
    /// instance scenario index of each slot
    pub scenarios: Vec<usize>,
    /// weight of each slot in the objective
    pub probs: Vec<f64>,
    pub x: Vec<Vec<VarId>>,
    pub f: Vec<Vec<VarId>>,
    pub theta: Vec<Vec<VarId>>,
    pub big_x: Vec<Vec<VarId>>,
    pub u: Vec<Vec<VarId>>,
    pub v: Vec<Vec<VarId>>,
    pub big_f: Vec<Vec<VarId>>,
    pub big_theta: Vec<Vec<VarId>>,
    pub da_balance: Vec<Vec<RowId>>,
    pub da_flow: Vec<Vec<RowId>>,
    pub rt_balance: Vec<Vec<RowId>>,
    pub rt_flow: Vec<Vec<RowId>>,
    pub split: Vec<Vec<RowId>>,
    pub na_x: Vec<Vec<RowId>>,
    pub na_f: Vec<Vec<RowId>>,
    pub chi_x: Vec<VarId>,
    pub chi_f: Vec<VarId>,
}

impl IndexMap {
    pub fn num_slots(&self) -> usize {
        self.scenarios.len()
    }

    /// Day-ahead copy used by scenario slot `s`.
    pub fn copy(&self, s: usize) -> usize {
        if self.x.len() == 1 {
            0
        } else {
            s
        }
    }
}

/// Fixed MW injected at each bus: day-ahead per bus, real-time per scenario
/// and bus (incremental over the day-ahead injection).
#[derive(Debug, Clone, PartialEq)]
pub struct Injections {
    pub day_ahead: Vec<f64>,
    pub real_time: Vec<Vec<f64>>,
}

fn tag(s: &str) -> String {
    s.chars().map(|c| if c.is_ascii_alphanumeric() { c } else { '_' }).collect()
}

/// Builds the requested extensive form.
pub fn build(inst: &Instance, kind: FormulationKind) -> Result<(LpModel, IndexMap), Error> {
    build_with(inst, kind, None)
}

/// Like [`build`], with optional exogenous injections on the balance rows.
pub fn build_with(
    inst: &Instance,
    kind: FormulationKind,
    injections: Option<&Injections>,
) -> Result<(LpModel, IndexMap), Error> {
    let (slots, probs): (Vec<usize>, Vec<f64>) = match kind {
        FormulationKind::Clairvoyant { scenario } => {
            if scenario >= inst.num_scenarios() {
                return Err(Error::Input(format!(
                    "unknown scenario {} (instance has {})",
                    scenario + 1,
                    inst.num_scenarios()
                )));
            }
            (vec![scenario], vec![1.0])
        }
        _ => ((0..inst.num_scenarios()).collect(), inst.probs()),
    };
    let ns = slots.len();
    let copies = if kind.has_copies() { ns } else { 1 };
    let np = inst.participants.len();
    let nl = inst.lines.len();
    let nb = inst.buses.len();
    let mut m = LpModel::new();
    let mut map = IndexMap {
        kind,
        scenarios: slots.clone(),
        probs: probs.clone(),
        x: Vec::new(),
        f: Vec::new(),
        theta: Vec::new(),
        big_x: Vec::new(),
        u: Vec::new(),
        v: Vec::new(),
        big_f: Vec::new(),
        big_theta: Vec::new(),
        da_balance: Vec::new(),
        da_flow: Vec::new(),
        rt_balance: Vec::new(),
        rt_flow: Vec::new(),
        split: Vec::new(),
        na_x: Vec::new(),
        na_f: Vec::new(),
        chi_x: Vec::new(),
        chi_f: Vec::new(),
    };

    let angle_bounds = |b: usize| {
        if b == inst.reference_bus {
            (0.0, 0.0)
        } else {
            (inst.theta_min, inst.theta_max)
        }
    };

    for k in 0..copies {
        let suffix = if copies == 1 { String::new() } else { format!("_s{}", slots[k] + 1) };
        let w = if copies == 1 { 1.0 } else { probs[k] };
        let x: Vec<VarId> = inst
            .participants
            .iter()
            .map(|p| m.add_var(format!("x_{}{}", tag(&p.id), suffix), p.x_min, p.x_max, w * p.c))
            .collect();
        let f: Vec<VarId> = inst
            .lines
            .iter()
            .map(|l| m.add_var(format!("f_{}{}", tag(&l.name), suffix), l.f_min, l.f_max, 0.0))
            .collect();
        let theta: Vec<VarId> = (0..nb)
            .map(|b| {
                let (lo, hi) = angle_bounds(b);
                m.add_var(format!("theta_{}{}", inst.buses[b].id, suffix), lo, hi, 0.0)
            })
            .collect();
        let flow_rows = inst
            .lines
            .iter()
            .enumerate()
            .map(|(l, line)| {
                m.add_row(
                    format!("daflow_{}{}", tag(&line.name), suffix),
                    &[(f[l], 1.0), (theta[line.from], -line.beta), (theta[line.to], line.beta)],
                    RowSense::Eq,
                    0.0,
                )
            })
            .collect();
        let balance = (0..nb)
            .map(|b| {
                let mut coeffs = Vec::new();
                for (l, line) in inst.lines.iter().enumerate() {
                    if line.to == b {
                        coeffs.push((f[l], 1.0));
                    }
                    if line.from == b {
                        coeffs.push((f[l], -1.0));
                    }
                }
                for i in inst.participants_at(b) {
                    coeffs.push((x[i], 1.0));
                }
                let rhs = injections.map_or(0.0, |e| -e.day_ahead[b]);
                m.add_row(format!("dabal_{}{}", inst.buses[b].id, suffix), &coeffs, RowSense::Eq, rhs)
            })
            .collect();
        map.x.push(x);
        map.f.push(f);
        map.theta.push(theta);
        map.da_flow.push(flow_rows);
        map.da_balance.push(balance);
    }

    for (k, &s) in slots.iter().enumerate() {
        let p = probs[k];
        let c = if copies == 1 { 0 } else { k };
        let suffix = format!("_s{}", s + 1);
        let mut bx = Vec::with_capacity(np);
        let mut bu = Vec::with_capacity(np);
        let mut bv = Vec::with_capacity(np);
        for (i, part) in inst.participants.iter().enumerate() {
            let (lo, hi) = inst.rt_bounds(i, s);
            if lo > hi {
                return Err(Error::Input(format!(
                    "participant {} has empty real-time range [{lo}, {hi}] in scenario {}",
                    part.id,
                    s + 1
                )));
            }
            bx.push(m.add_var(format!("X_{}{}", tag(&part.id), suffix), lo, hi, 0.0));
            bu.push(m.add_var(
                format!("u_{}{}", tag(&part.id), suffix),
                0.0,
                f64::INFINITY,
                p * (part.c + part.delta_plus),
            ));
            bv.push(m.add_var(
                format!("v_{}{}", tag(&part.id), suffix),
                0.0,
                f64::INFINITY,
                p * (part.delta_minus - part.c),
            ));
        }
        let bf: Vec<VarId> = inst
            .lines
            .iter()
            .map(|l| m.add_var(format!("F_{}{}", tag(&l.name), suffix), l.rt_min, l.rt_max, 0.0))
            .collect();
        let bt: Vec<VarId> = (0..nb)
            .map(|b| {
                let (lo, hi) = angle_bounds(b);
                m.add_var(format!("Theta_{}{}", inst.buses[b].id, suffix), lo, hi, 0.0)
            })
            .collect();
        let flow_rows = inst
            .lines
            .iter()
            .enumerate()
            .map(|(l, line)| {
                m.add_row(
                    format!("rtflow_{}{}", tag(&line.name), suffix),
                    &[(bf[l], 1.0), (bt[line.from], -line.beta), (bt[line.to], line.beta)],
                    RowSense::Eq,
                    0.0,
                )
            })
            .collect();
        let balance = (0..nb)
            .map(|b| {
                let mut coeffs = Vec::new();
                for (l, line) in inst.lines.iter().enumerate() {
                    let sign = if line.to == b {
                        1.0
                    } else if line.from == b {
                        -1.0
                    } else {
                        continue;
                    };
                    coeffs.push((bf[l], sign));
                    coeffs.push((map.f[c][l], -sign));
                }
                for i in inst.participants_at(b) {
                    coeffs.push((bx[i], 1.0));
                    coeffs.push((map.x[c][i], -1.0));
                }
                let rhs = injections.map_or(0.0, |e| -e.real_time[s][b]);
                m.add_row(format!("rtbal_{}{}", inst.buses[b].id, suffix), &coeffs, RowSense::Eq, rhs)
            })
            .collect();
        let split = inst
            .participants
            .iter()
            .enumerate()
            .map(|(i, part)| {
                m.add_row(
                    format!("split_{}{}", tag(&part.id), suffix),
                    &[(bx[i], 1.0), (map.x[c][i], -1.0), (bu[i], -1.0), (bv[i], 1.0)],
                    RowSense::Eq,
                    0.0,
                )
            })
            .collect();
        map.big_x.push(bx);
        map.u.push(bu);
        map.v.push(bv);
        map.big_f.push(bf);
        map.big_theta.push(bt);
        map.rt_flow.push(flow_rows);
        map.rt_balance.push(balance);
        map.split.push(split);
    }

    match kind {
        FormulationKind::MeanVector => {
            for k in 0..ns {
                let suffix = format!("_s{}", slots[k] + 1);
                let na_x = (0..np)
                    .map(|i| {
                        let mut coeffs = vec![(map.x[k][i], 1.0)];
                        coeffs.extend((0..ns).map(|q| (map.x[q][i], -probs[q])));
                        m.add_row(
                            format!("nax_{}{}", tag(&inst.participants[i].id), suffix),
                            &coeffs,
                            RowSense::Eq,
                            0.0,
                        )
                    })
                    .collect();
                let na_f = (0..nl)
                    .map(|l| {
                        let mut coeffs = vec![(map.f[k][l], 1.0)];
                        coeffs.extend((0..ns).map(|q| (map.f[q][l], -probs[q])));
                        m.add_row(format!("naf_{}{}", tag(&inst.lines[l].name), suffix), &coeffs, RowSense::Eq, 0.0)
                    })
                    .collect();
                map.na_x.push(na_x);
                map.na_f.push(na_f);
            }
        }
        FormulationKind::StateVector => {
            map.chi_x = inst
                .participants
                .iter()
                .map(|p| m.add_var(format!("chix_{}", tag(&p.id)), f64::NEG_INFINITY, f64::INFINITY, 0.0))
                .collect();
            map.chi_f = inst
                .lines
                .iter()
                .map(|l| m.add_var(format!("chif_{}", tag(&l.name)), f64::NEG_INFINITY, f64::INFINITY, 0.0))
                .collect();
            for k in 0..ns {
                let suffix = format!("_s{}", slots[k] + 1);
                let na_x = (0..np)
                    .map(|i| {
                        m.add_row(
                            format!("svx_{}{}", tag(&inst.participants[i].id), suffix),
                            &[(map.x[k][i], 1.0), (map.chi_x[i], -1.0)],
                            RowSense::Eq,
                            0.0,
                        )
                    })
                    .collect();
                let na_f = (0..nl)
                    .map(|l| {
                        m.add_row(
                            format!("svf_{}{}", tag(&inst.lines[l].name), suffix),
                            &[(map.f[k][l], 1.0), (map.chi_f[l], -1.0)],
                            RowSense::Eq,
                            0.0,
                        )
                    })
                    .collect();
                map.na_x.push(na_x);
                map.na_f.push(na_f);
            }
        }
        _ => {}
    }
    Ok((m, map))
}

pub fn build_clairvoyant(inst: &Instance, scenario: usize) -> Result<(LpModel, IndexMap), Error> {
    build(inst, FormulationKind::Clairvoyant { scenario })
}

pub fn build_canonical(inst: &Instance) -> Result<(LpModel, IndexMap), Error> {
    build(inst, FormulationKind::Canonical)
}

pub fn build_mean_vector(inst: &Instance) -> Result<(LpModel, IndexMap), Error> {
    build(inst, FormulationKind::MeanVector)
}

pub fn build_state_vector(inst: &Instance) -> Result<(LpModel, IndexMap), Error> {
    build(inst, FormulationKind::StateVector)
}

/// Cleared quantities. Day-ahead entries are replicated per scenario slot for
/// single-copy formulations so every consumer can index `[slot][item]`.
#[derive(Debug, Clone, Serialize)]
pub struct DispatchSolution {
    pub kind: FormulationKind,
    pub scenarios: Vec<usize>,
    pub probs: Vec<f64>,
    pub x: Vec<Vec<f64>>,
    pub big_x: Vec<Vec<f64>>,
    pub u: Vec<Vec<f64>>,
    pub v: Vec<Vec<f64>>,
    pub f: Vec<Vec<f64>>,
    pub big_f: Vec<Vec<f64>>,
    /// implementable day-ahead vector: the single copy, or the probability mean
    pub x_bar: Vec<f64>,
    pub f_bar: Vec<f64>,
    pub objective: f64,
}

impl DispatchSolution {
    pub fn num_slots(&self) -> usize {
        self.scenarios.len()
    }

    /// max over items and slots of |x_i(ω) − x̄_i|, flows included
    pub fn nonanticipativity_spread(&self) -> f64 {
        let mut spread: f64 = 0.0;
        for (xs, fs) in self.x.iter().zip(&self.f) {
            for (a, b) in xs.iter().zip(&self.x_bar) {
                spread = spread.max((a - b).abs());
            }
            for (a, b) in fs.iter().zip(&self.f_bar) {
                spread = spread.max((a - b).abs());
            }
        }
        spread
    }
}

pub fn extract_dispatch(sol: &LpSolution, map: &IndexMap) -> Result<DispatchSolution, Error> {
    if sol.status != LpStatus::Optimal {
        return Err(Error::NotOptimal(sol.status));
    }
    let ns = map.num_slots();
    let vals = |ids: &Vec<VarId>| ids.iter().map(|&v| sol.value(v)).collect::<Vec<f64>>();
    let x: Vec<Vec<f64>> = (0..ns).map(|s| vals(&map.x[map.copy(s)])).collect();
    let f: Vec<Vec<f64>> = (0..ns).map(|s| vals(&map.f[map.copy(s)])).collect();
    let mean = |rows: &Vec<Vec<f64>>| {
        let width = rows.first().map(|r| r.len()).unwrap_or(0);
        (0..width)
            .map(|j| rows.iter().zip(&map.probs).map(|(r, p)| p * r[j]).sum::<f64>())
            .collect::<Vec<f64>>()
    };
    let (x_bar, f_bar) = if map.kind.has_copies() {
        (mean(&x), mean(&f))
    } else {
        (x[0].clone(), f[0].clone())
    };
    Ok(DispatchSolution {
        kind: map.kind,
        scenarios: map.scenarios.clone(),
        probs: map.probs.clone(),
        big_x: map.big_x.iter().map(vals).collect(),
        u: map.u.iter().map(vals).collect(),
        v: map.v.iter().map(vals).collect(),
        big_f: map.big_f.iter().map(vals).collect(),
        x,
        f,
        x_bar,
        f_bar,
        objective: sol.objective,
    })
}
