//! Instance files (JSON) and scenario availability tables (CSV).

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::model::{
    product_scenarios, validate_instance, Bus, Instance, Line, Participant, ParticipantKind, Scenario, ScenarioSet,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BusRecord {
    pub id: u32,
    #[serde(default)]
    pub name: String,
}

/// Flow bounds of `null` mean unbounded.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LineRecord {
    pub name: String,
    pub from_bus: u32,
    pub to_bus: u32,
    pub f_min_mw: Option<f64>,
    pub f_max_mw: Option<f64>,
    pub rt_min_mw: Option<f64>,
    pub rt_max_mw: Option<f64>,
    pub beta_mw_per_rad: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParticipantRecord {
    pub id: String,
    pub kind: ParticipantKind,
    pub bus: u32,
    pub bid_usd_per_mwh: f64,
    pub delta_plus_usd_per_mwh: f64,
    pub delta_minus_usd_per_mwh: f64,
    pub x_min_mw: f64,
    pub x_max_mw: f64,
    pub rt_min_mw: f64,
    pub rt_max_mw: f64,
    #[serde(default)]
    pub stochastic: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioRecord {
    pub name: String,
    pub prob: f64,
    #[serde(default)]
    pub avail_mw: BTreeMap<String, f64>,
}

/// On-disk instance. Scenarios come from an explicit list or from the
/// cartesian product of `scenario_outcomes_mw`; a scenario CSV can replace
/// either after loading.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    pub name: String,
    #[serde(default)]
    pub fixture_complete: bool,
    /// fields whose values are not taken from the source system
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub reconstructed: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
    pub theta_min_rad: f64,
    pub theta_max_rad: f64,
    pub reference_bus: u32,
    pub buses: Vec<BusRecord>,
    #[serde(default)]
    pub lines: Vec<LineRecord>,
    pub participants: Vec<ParticipantRecord>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub scenarios: Vec<ScenarioRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scenario_outcomes_mw: Option<BTreeMap<String, Vec<f64>>>,
}

fn bound(v: Option<f64>, default: f64) -> f64 {
    v.unwrap_or(default)
}

fn finite(v: f64) -> Option<f64> {
    v.is_finite().then_some(v)
}

impl InstanceFile {
    /// Converts to the in-memory model without validating it.
    pub fn into_instance(self) -> Result<Instance, Error> {
        let index: BTreeMap<u32, usize> = self.buses.iter().enumerate().map(|(k, b)| (b.id, k)).collect();
        let bus = |id: u32, what: &str| {
            index
                .get(&id)
                .copied()
                .ok_or_else(|| Error::Input(format!("{what} refers to unknown bus {id}")))
        };
        let lines = self
            .lines
            .iter()
            .map(|l| {
                Ok(Line {
                    name: l.name.clone(),
                    from: bus(l.from_bus, &format!("line {}", l.name))?,
                    to: bus(l.to_bus, &format!("line {}", l.name))?,
                    f_min: bound(l.f_min_mw, f64::NEG_INFINITY),
                    f_max: bound(l.f_max_mw, f64::INFINITY),
                    rt_min: bound(l.rt_min_mw, f64::NEG_INFINITY),
                    rt_max: bound(l.rt_max_mw, f64::INFINITY),
                    beta: l.beta_mw_per_rad,
                })
            })
            .collect::<Result<Vec<_>, Error>>()?;
        let participants = self
            .participants
            .iter()
            .map(|p| {
                Ok(Participant {
                    id: p.id.clone(),
                    kind: p.kind,
                    bus: bus(p.bus, &format!("participant {}", p.id))?,
                    c: p.bid_usd_per_mwh,
                    delta_plus: p.delta_plus_usd_per_mwh,
                    delta_minus: p.delta_minus_usd_per_mwh,
                    x_min: p.x_min_mw,
                    x_max: p.x_max_mw,
                    rt_min: p.rt_min_mw,
                    rt_max: p.rt_max_mw,
                    is_stochastic: p.stochastic,
                })
            })
            .collect::<Result<Vec<_>, Error>>()?;
        let scenarios = match (&self.scenario_outcomes_mw, self.scenarios.is_empty()) {
            (Some(_), false) => {
                return Err(Error::Input("give either scenarios or scenario_outcomes_mw, not both".into()));
            }
            (Some(outcomes), true) => product_scenarios(outcomes).map_err(|e| Error::Input(e.to_string()))?,
            (None, _) => ScenarioSet {
                scenarios: self
                    .scenarios
                    .iter()
                    .map(|s| Scenario {
                        name: s.name.clone(),
                        prob: s.prob,
                        avail: s.avail_mw.clone(),
                    })
                    .collect(),
            },
        };
        Ok(Instance {
            name: self.name,
            buses: self
                .buses
                .into_iter()
                .map(|b| Bus { id: b.id, name: b.name })
                .collect(),
            lines,
            participants,
            scenarios,
            theta_min: self.theta_min_rad,
            theta_max: self.theta_max_rad,
            reference_bus: bus(self.reference_bus, "reference_bus")?,
            fixture_complete: self.fixture_complete,
        })
    }

    pub fn from_instance(inst: &Instance) -> Self {
        let id = |k: usize| inst.buses[k].id;
        InstanceFile {
            name: inst.name.clone(),
            fixture_complete: inst.fixture_complete,
            reconstructed: Vec::new(),
            notes: Vec::new(),
            theta_min_rad: inst.theta_min,
            theta_max_rad: inst.theta_max,
            reference_bus: id(inst.reference_bus),
            buses: inst
                .buses
                .iter()
                .map(|b| BusRecord {
                    id: b.id,
                    name: b.name.clone(),
                })
                .collect(),
            lines: inst
                .lines
                .iter()
                .map(|l| LineRecord {
                    name: l.name.clone(),
                    from_bus: id(l.from),
                    to_bus: id(l.to),
                    f_min_mw: finite(l.f_min),
                    f_max_mw: finite(l.f_max),
                    rt_min_mw: finite(l.rt_min),
                    rt_max_mw: finite(l.rt_max),
                    beta_mw_per_rad: l.beta,
                })
                .collect(),
            participants: inst
                .participants
                .iter()
                .map(|p| ParticipantRecord {
                    id: p.id.clone(),
                    kind: p.kind,
                    bus: id(p.bus),
                    bid_usd_per_mwh: p.c,
                    delta_plus_usd_per_mwh: p.delta_plus,
                    delta_minus_usd_per_mwh: p.delta_minus,
                    x_min_mw: p.x_min,
                    x_max_mw: p.x_max,
                    rt_min_mw: p.rt_min,
                    rt_max_mw: p.rt_max,
                    stochastic: p.is_stochastic,
                })
                .collect(),
            scenarios: inst
                .scenarios
                .scenarios
                .iter()
                .map(|s| ScenarioRecord {
                    name: s.name.clone(),
                    prob: s.prob,
                    avail_mw: s.avail.clone(),
                })
                .collect(),
            scenario_outcomes_mw: None,
        }
    }
}

fn reject_invalid(inst: Instance) -> Result<Instance, Error> {
    let report = validate_instance(&inst);
    for w in &report.warnings {
        log::warn!("{}: {w}", inst.name);
    }
    if report.is_ok() {
        Ok(inst)
    } else {
        Err(Error::Validation(report.errors))
    }
}

/// Parses and validates an instance document. Parse errors carry the line and
/// column; unknown fields are rejected by name.
pub fn parse_instance_str(text: &str) -> Result<Instance, Error> {
    let file: InstanceFile = serde_json::from_str(text).map_err(|e| Error::Input(format!("instance: {e}")))?;
    reject_invalid(file.into_instance()?)
}

pub fn parse_instance(path: &Path) -> Result<Instance, Error> {
    let text = std::fs::read_to_string(path)?;
    parse_instance_str(&text).map_err(|e| match e {
        Error::Input(msg) => Error::Input(format!("{}: {msg}", path.display())),
        other => other,
    })
}

/// Pretty JSON; `parse_instance_str(&print_instance(i))` reproduces `i`.
pub fn print_instance(inst: &Instance) -> String {
    let mut text = serde_json::to_string_pretty(&InstanceFile::from_instance(inst)).expect("instance serializes");
    text.push('\n');
    text
}

/// Reads an availability table. Columns are participant ids plus optional
/// `scenario` (name) and `prob` columns; without `prob` the rows are equally
/// likely. Probabilities must sum to one within 1e-9.
pub fn parse_scenarios_csv_str(text: &str, inst: &Instance) -> Result<ScenarioSet, Error> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let headers = reader.headers().map_err(|e| Error::Input(format!("scenario csv: {e}")))?.clone();
    let mut name_col = None;
    let mut prob_col = None;
    let mut ids = Vec::new();
    for (k, h) in headers.iter().enumerate() {
        match h {
            "scenario" => name_col = Some(k),
            "prob" => prob_col = Some(k),
            id => {
                if inst.participant_index(id).is_none() {
                    return Err(Error::Input(format!("scenario csv: unknown participant column {id}")));
                }
                ids.push((k, id.to_string()));
            }
        }
    }
    let mut rows = Vec::new();
    for (r, rec) in reader.records().enumerate() {
        let line = r + 2;
        let rec = rec.map_err(|e| Error::Input(format!("scenario csv line {line}: {e}")))?;
        let num = |k: usize, what: &str| -> Result<f64, Error> {
            rec.get(k)
                .unwrap_or("")
                .parse::<f64>()
                .map_err(|_| Error::Input(format!("scenario csv line {line}: {what} is not a number")))
        };
        let mut avail = BTreeMap::new();
        for (k, id) in &ids {
            let v = num(*k, id)?;
            if !(v >= 0.0) {
                return Err(Error::Input(format!("scenario csv line {line}: negative availability for {id}")));
            }
            avail.insert(id.clone(), v);
        }
        let prob = prob_col.map(|k| num(k, "prob")).transpose()?;
        let name = name_col
            .and_then(|k| rec.get(k))
            .map(str::to_string)
            .unwrap_or_else(|| format!("s{}", r + 1));
        rows.push((name, prob, avail));
    }
    if rows.is_empty() {
        return Err(Error::Input("scenario csv has no rows".into()));
    }
    let n = rows.len() as f64;
    let scenarios: Vec<Scenario> = rows
        .into_iter()
        .map(|(name, prob, avail)| Scenario {
            name,
            prob: prob.unwrap_or(1.0 / n),
            avail,
        })
        .collect();
    if prob_col.is_some() {
        let total: f64 = scenarios.iter().map(|s| s.prob).sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::Input(format!("scenario csv: probabilities sum to {}", (total * 1e9).round() / 1e9)));
        }
    }
    Ok(ScenarioSet { scenarios })
}

pub fn parse_scenarios_csv(path: &Path, inst: &Instance) -> Result<ScenarioSet, Error> {
    let text = std::fs::read_to_string(path)?;
    parse_scenarios_csv_str(&text, inst)
}

/// Replaces the instance's scenarios and re-validates.
pub fn attach_scenarios(inst: &Instance, scenarios: ScenarioSet) -> Result<Instance, Error> {
    let mut out = inst.clone();
    out.scenarios = scenarios;
    reject_invalid(out)
}
