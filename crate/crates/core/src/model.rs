//! Market data: buses, lines, participants and scenario sets.

use std::collections::{BTreeMap, VecDeque};

use serde::Serialize;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Bus {
    pub id: u32,
    pub name: String,
}

/// DC line. `from`/`to` are bus positions in `Instance::buses`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Line {
    pub name: String,
    pub from: usize,
    pub to: usize,
    pub f_min: f64,
    pub f_max: f64,
    pub rt_min: f64,
    pub rt_max: f64,
    /// MW per radian
    pub beta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ParticipantKind {
    Generator,
    Load,
}

/// A market participant. Quantities are injections: generators are
/// nonnegative, loads nonpositive. `x_*` bound the day-ahead position and
/// `rt_*` the real-time position.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Participant {
    pub id: String,
    pub kind: ParticipantKind,
    pub bus: usize,
    pub c: f64,
    pub delta_plus: f64,
    pub delta_minus: f64,
    pub x_min: f64,
    pub x_max: f64,
    pub rt_min: f64,
    pub rt_max: f64,
    pub is_stochastic: bool,
}

impl Participant {
    pub fn is_generator(&self) -> bool {
        self.kind == ParticipantKind::Generator
    }

    /// Real-time bounds given the observed availability (∞ when not stochastic).
    pub fn rt_bounds(&self, avail: f64) -> (f64, f64) {
        (self.rt_min.max(-avail), self.rt_max.min(avail))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Scenario {
    pub name: String,
    pub prob: f64,
    /// observed availability per stochastic participant id, MW
    pub avail: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct ScenarioSet {
    pub scenarios: Vec<Scenario>,
}

impl ScenarioSet {
    pub fn len(&self) -> usize {
        self.scenarios.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scenarios.is_empty()
    }

    pub fn probs(&self) -> Vec<f64> {
        self.scenarios.iter().map(|s| s.prob).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Instance {
    pub name: String,
    pub buses: Vec<Bus>,
    pub lines: Vec<Line>,
    pub participants: Vec<Participant>,
    pub scenarios: ScenarioSet,
    pub theta_min: f64,
    pub theta_max: f64,
    pub reference_bus: usize,
    /// true when every number in the instance is taken from the source system
    pub fixture_complete: bool,
}

impl Instance {
    pub fn num_scenarios(&self) -> usize {
        self.scenarios.len()
    }

    pub fn probs(&self) -> Vec<f64> {
        self.scenarios.probs()
    }

    /// Availability of participant `i` in scenario `s`; +∞ for non-stochastic participants.
    pub fn avail(&self, i: usize, s: usize) -> f64 {
        let p = &self.participants[i];
        if !p.is_stochastic {
            return f64::INFINITY;
        }
        self.scenarios.scenarios[s].avail.get(&p.id).copied().unwrap_or(f64::INFINITY)
    }

    pub fn rt_bounds(&self, i: usize, s: usize) -> (f64, f64) {
        self.participants[i].rt_bounds(self.avail(i, s))
    }

    pub fn participants_at(&self, bus: usize) -> impl Iterator<Item = usize> + '_ {
        self.participants.iter().enumerate().filter(move |(_, p)| p.bus == bus).map(|(i, _)| i)
    }

    pub fn participant_index(&self, id: &str) -> Option<usize> {
        self.participants.iter().position(|p| p.id == id)
    }

    /// Instance restricted to one scenario, carried with probability 1.
    pub fn single_scenario(&self, s: usize) -> Instance {
        let mut out = self.clone();
        let mut sc = self.scenarios.scenarios[s].clone();
        sc.prob = 1.0;
        out.scenarios = ScenarioSet { scenarios: vec![sc] };
        out
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ValidationReport {
    pub errors: Vec<String>,
    pub warnings: Vec<String>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.errors.is_empty()
    }
}

pub fn validate_instance(inst: &Instance) -> ValidationReport {
    let mut rep = ValidationReport::default();
    let nb = inst.buses.len();
    if nb == 0 {
        rep.errors.push("instance has no buses".into());
        return rep;
    }
    let mut ids: Vec<u32> = inst.buses.iter().map(|b| b.id).collect();
    ids.sort_unstable();
    if ids.windows(2).any(|w| w[0] == w[1]) {
        rep.errors.push("duplicate bus id".into());
    }
    if inst.reference_bus >= nb {
        rep.errors.push("reference bus does not exist".into());
    }
    if !(inst.theta_min <= 0.0 && 0.0 <= inst.theta_max) {
        rep.errors.push(format!(
            "angle bounds [{}, {}] must contain 0",
            inst.theta_min, inst.theta_max
        ));
    }

    for l in &inst.lines {
        if l.from >= nb || l.to >= nb {
            rep.errors.push(format!("line {} references a missing bus", l.name));
            continue;
        }
        if l.from == l.to {
            rep.errors.push(format!("line {} connects bus {} to itself", l.name, inst.buses[l.from].id));
        }
        if l.f_min > l.f_max || l.rt_min > l.rt_max {
            rep.errors.push(format!("line {}: bound inversion", l.name));
        }
        if !(l.beta > 0.0) {
            rep.errors.push(format!("line {}: beta must be positive", l.name));
        }
        if l.f_min > 0.0 || l.f_max < 0.0 || l.rt_min > 0.0 || l.rt_max < 0.0 {
            rep.warnings.push(format!("line {}: zero flow is outside its bounds", l.name));
        }
    }

    let mut seen = std::collections::BTreeSet::new();
    for p in &inst.participants {
        if !seen.insert(p.id.as_str()) {
            rep.errors.push(format!("duplicate participant id {}", p.id));
        }
        if p.bus >= nb {
            rep.errors.push(format!("participant {} references a missing bus", p.id));
        }
        if p.x_min > p.x_max || p.rt_min > p.rt_max {
            rep.errors.push(format!("participant {}: bound inversion", p.id));
        }
        if !(p.delta_plus > 0.0 && p.delta_minus > 0.0) {
            rep.errors.push(format!("participant {}: deviation premiums must be positive", p.id));
        }
        match p.kind {
            ParticipantKind::Generator => {
                if p.x_min < 0.0 || p.rt_min < 0.0 {
                    rep.errors.push(format!("generator {}: negative minimum output", p.id));
                }
                if p.c - p.delta_minus < 0.0 {
                    rep.warnings.push(format!(
                        "generator {}: c - delta_minus = {} is negative",
                        p.id,
                        p.c - p.delta_minus
                    ));
                }
            }
            ParticipantKind::Load => {
                if p.x_max > 0.0 || p.rt_max > 0.0 {
                    rep.errors.push(format!("load {}: positive maximum injection", p.id));
                }
            }
        }
    }
    if !inst.participants.iter().any(|p| p.kind == ParticipantKind::Generator) {
        rep.errors.push("instance has no generator".into());
    }
    if !inst.participants.iter().any(|p| p.kind == ParticipantKind::Load) {
        rep.errors.push("instance has no load".into());
    }

    if inst.scenarios.is_empty() {
        rep.errors.push("scenario set is empty".into());
    } else {
        let total: f64 = inst.scenarios.scenarios.iter().map(|s| s.prob).sum();
        if (total - 1.0).abs() > 1e-12 {
            rep.errors.push(format!("probabilities sum to {}", round_sig(total)));
        }
        for s in &inst.scenarios.scenarios {
            if !(s.prob > 0.0 && s.prob <= 1.0) {
                rep.errors.push(format!("scenario {}: probability {} outside (0, 1]", s.name, s.prob));
            }
            for (id, &v) in &s.avail {
                if !(v >= 0.0) {
                    rep.errors.push(format!("scenario {}: negative availability for {}", s.name, id));
                }
                if !inst.participants.iter().any(|p| &p.id == id) {
                    rep.errors.push(format!("scenario {}: unknown participant {}", s.name, id));
                }
            }
            for p in inst.participants.iter().filter(|p| p.is_stochastic) {
                if !s.avail.contains_key(&p.id) {
                    rep.errors.push(format!("scenario {}: no availability for stochastic participant {}", s.name, p.id));
                }
            }
        }
    }

    if nb > 0 && inst.lines.iter().all(|l| l.from < nb && l.to < nb) && !is_connected(nb, &inst.lines) {
        rep.errors.push("network is not connected".into());
    }
    rep
}

fn round_sig(v: f64) -> f64 {
    (v * 1e9).round() / 1e9
}

fn is_connected(nb: usize, lines: &[Line]) -> bool {
    let mut adj = vec![Vec::new(); nb];
    for l in lines {
        adj[l.from].push(l.to);
        adj[l.to].push(l.from);
    }
    let mut seen = vec![false; nb];
    let mut queue = VecDeque::from([0usize]);
    seen[0] = true;
    while let Some(b) = queue.pop_front() {
        for &n in &adj[b] {
            if !seen[n] {
                seen[n] = true;
                queue.push_back(n);
            }
        }
    }
    seen.into_iter().all(|s| s)
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum ScenarioError {
    #[error("participant {0} has an empty outcome list")]
    EmptyOutcomes(String),
    #[error("no outcome lists given")]
    NoOutcomes,
}

/// Cartesian product of per-participant outcome lists with equal weights.
/// Ordering is lexicographic in participant id, the first id varying slowest.
pub fn product_scenarios(outcomes: &BTreeMap<String, Vec<f64>>) -> Result<ScenarioSet, ScenarioError> {
    if outcomes.is_empty() {
        return Err(ScenarioError::NoOutcomes);
    }
    for (id, vals) in outcomes {
        if vals.is_empty() {
            return Err(ScenarioError::EmptyOutcomes(id.clone()));
        }
    }
    let lists: Vec<(&String, &Vec<f64>)> = outcomes.iter().collect();
    let total: usize = lists.iter().map(|(_, v)| v.len()).product();
    let prob = 1.0 / total as f64;
    let mut scenarios = Vec::with_capacity(total);
    let mut idx = vec![0usize; lists.len()];
    for k in 0..total {
        let avail = lists.iter().zip(&idx).map(|((id, v), &i)| ((*id).clone(), v[i])).collect();
        scenarios.push(Scenario {
            name: format!("s{}", k + 1),
            prob,
            avail,
        });
        for d in (0..idx.len()).rev() {
            idx[d] += 1;
            if idx[d] < lists[d].1.len() {
                break;
            }
            idx[d] = 0;
        }
    }
    Ok(ScenarioSet { scenarios })
}

/// Realized value of a participant clearing `x` day-ahead and `big_x` in real time.
pub fn realized_value(p: &Participant, x: f64, big_x: f64) -> f64 {
    let dev = big_x - x;
    let pos = dev.max(0.0);
    let neg = (-dev).max(0.0);
    -p.c * x - (p.c + p.delta_plus) * pos + (p.c - p.delta_minus) * neg
}

/// Σ_i φ_i for one scenario given per-participant day-ahead and real-time quantities.
pub fn social_surplus(inst: &Instance, x: &[f64], big_x: &[f64]) -> f64 {
    inst.participants
        .iter()
        .zip(x.iter().zip(big_x))
        .map(|(p, (&xi, &xr))| realized_value(p, xi, xr))
        .sum()
}
