//! Experiment runner and artifact emission.
//!
//! Every artifact is rendered in memory first and written only after all
//! solves succeed. A failed write removes whatever was already written.
//!
//! Tables (comma separated, header row, fixed column order):
//!
//! | file | columns |
//! |---|---|
//! | `dispatch.csv` | formulation, scenario, participant, x_mw, rt_mw, up_mw, down_mw |
//! | `flows.csv` | formulation, scenario, line, f_mw, rt_f_mw |
//! | `duals.csv` | formulation, scenario, row, key, value |
//! | `payments.csv` | mechanism, scenario, participant, payment_usd, realized_value_usd, profit_usd |
//! | `distortion.csv` | mechanism, scenario, key, distortion, lower, upper |
//! | `metrics.csv` | mechanism, participant, expected_profit_usd, worst_profit_usd, expected_recovery, scenario_recovery |
//! | `relationships.csv` | quantity, residual, tol, pass |
//! | `settlement.csv` | mechanism, condition, cost_usd, revenue_usd, net_income_usd |
//! | `multipliers.csv` | scenario, item, w |
//! | `ph_trace.csv` | iteration, spread, objective_estimate, multiplier_norm, drift |
//!
//! `scenario` is 1-based, or `E` for expectation rows. Money has 2 decimals,
//! prices and distortions 6, quantities 4.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Serialize;

use crate::clearing::{clear_with, Cleared};
use crate::error::Error;
use crate::fixtures;
use crate::formulations::{DispatchSolution, FormulationKind, Injections};
use crate::io::{attach_scenarios, parse_instance, parse_scenarios_csv};
use crate::metrics::{metrics_report, realized_values, relationship_checks, MetricsReport, RelationshipReport};
use crate::model::Instance;
use crate::perturb::Perturbation;
use crate::ph::{solve_progressive_hedging, PhParams, PhResult, PhStatus};
use crate::pricing::{payments, price_distortion, DistortionKey, DualSolution, Mechanism, PaymentTable};
use crate::verify::VerifyOptions;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum FormulationChoice {
    /// 0-based scenario index
    Clairvoyant(usize),
    Canonical,
    MeanVector,
    StateVector,
    All,
}

impl FormulationChoice {
    fn kinds(&self) -> Vec<FormulationKind> {
        match *self {
            FormulationChoice::Clairvoyant(s) => vec![FormulationKind::Clairvoyant { scenario: s }],
            FormulationChoice::Canonical => vec![FormulationKind::Canonical],
            FormulationChoice::MeanVector => vec![FormulationKind::MeanVector],
            FormulationChoice::StateVector => vec![FormulationKind::StateVector],
            FormulationChoice::All => vec![
                FormulationKind::Canonical,
                FormulationKind::MeanVector,
                FormulationKind::StateVector,
            ],
        }
    }
}

impl FromStr for FormulationChoice {
    type Err = String;

    /// `clairvoyant:N` takes a 1-based scenario number.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "canonical" => Ok(FormulationChoice::Canonical),
            "mean_vector" => Ok(FormulationChoice::MeanVector),
            "state_vector" => Ok(FormulationChoice::StateVector),
            "all" => Ok(FormulationChoice::All),
            _ => {
                let n = s
                    .strip_prefix("clairvoyant:")
                    .and_then(|n| n.parse::<usize>().ok())
                    .filter(|&n| n >= 1)
                    .ok_or_else(|| {
                        format!(
                            "unknown formulation {s:?} (expected clairvoyant:N, canonical, mean_vector, state_vector or all)"
                        )
                    })?;
                Ok(FormulationChoice::Clairvoyant(n - 1))
            }
        }
    }
}

impl fmt::Display for FormulationChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FormulationChoice::Clairvoyant(s) => write!(f, "clairvoyant:{}", s + 1),
            FormulationChoice::Canonical => f.write_str("canonical"),
            FormulationChoice::MeanVector => f.write_str("mean_vector"),
            FormulationChoice::StateVector => f.write_str("state_vector"),
            FormulationChoice::All => f.write_str("all"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverChoice {
    Extensive,
    Ph,
}

impl FromStr for SolverChoice {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "extensive" => Ok(SolverChoice::Extensive),
            "ph" => Ok(SolverChoice::Ph),
            _ => Err(format!("unknown solver {s:?} (expected extensive or ph)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MechanismChoice {
    Rc,
    Rm,
    Rs,
    All,
}

impl MechanismChoice {
    fn admits(&self, m: Mechanism) -> bool {
        matches!(
            (self, m),
            (MechanismChoice::All, _)
                | (MechanismChoice::Rc, Mechanism::Rc)
                | (MechanismChoice::Rm, Mechanism::Rm)
                | (MechanismChoice::Rs, Mechanism::Rs)
        )
    }
}

impl FromStr for MechanismChoice {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "rc" => Ok(MechanismChoice::Rc),
            "rm" => Ok(MechanismChoice::Rm),
            "rs" => Ok(MechanismChoice::Rs),
            "all" => Ok(MechanismChoice::All),
            _ => Err(format!("unknown mechanism {s:?} (expected rc, rm, rs or all)")),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentConfig {
    /// embedded instance name or path to an instance file
    pub instance: String,
    /// optional scenario availability CSV replacing the instance's scenarios
    pub scenarios: Option<PathBuf>,
    pub formulation: FormulationChoice,
    pub solver: SolverChoice,
    pub mechanism: MechanismChoice,
    pub perturb: bool,
    pub seed: u64,
    pub tolerances: VerifyOptions,
    pub ph: PhParams,
    pub out: PathBuf,
}

impl ExperimentConfig {
    pub fn new(instance: impl Into<String>, formulation: FormulationChoice, out: impl Into<PathBuf>) -> Self {
        Self {
            instance: instance.into(),
            scenarios: None,
            formulation,
            solver: SolverChoice::Extensive,
            mechanism: MechanismChoice::All,
            perturb: false,
            seed: 0,
            tolerances: VerifyOptions::default(),
            ph: PhParams::default(),
            out: out.into(),
        }
    }

    pub fn validate(&self) -> Result<(), Error> {
        if self.solver == SolverChoice::Ph
            && !matches!(self.formulation, FormulationChoice::MeanVector | FormulationChoice::StateVector)
        {
            return Err(Error::Input(format!(
                "the ph solver needs a mean_vector or state_vector formulation, got {}",
                self.formulation
            )));
        }
        if self.solver == SolverChoice::Ph {
            self.ph.validate()?;
        }
        let settled = self
            .formulation
            .kinds()
            .into_iter()
            .any(|k| self.mechanism.admits(Mechanism::for_kind(k)));
        if !settled {
            return Err(Error::Input(format!(
                "mechanism {:?} does not settle formulation {}",
                self.mechanism, self.formulation
            )));
        }
        Ok(())
    }
}

/// Loads an embedded instance by name, otherwise reads the path.
pub fn load_instance(spec: &str) -> Result<Instance, Error> {
    if fixtures::source(spec).is_some() {
        return fixtures::load(spec);
    }
    let path = Path::new(spec);
    if !path.exists() {
        return Err(Error::Input(format!(
            "{spec}: no such file and no embedded instance of that name (embedded: {})",
            fixtures::NAMES.join(", ")
        )));
    }
    parse_instance(path)
}

/// [`load_instance`] followed by an optional scenario CSV.
pub fn load_with_scenarios(spec: &str, scenarios: Option<&Path>) -> Result<Instance, Error> {
    let inst = load_instance(spec)?;
    match scenarios {
        None => Ok(inst),
        Some(path) => {
            let set = parse_scenarios_csv(path, &inst)?;
            attach_scenarios(&inst, set)
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct FormulationSummary {
    pub formulation: String,
    pub objective: f64,
    pub kkt_pass: bool,
    pub nonanticipativity_spread: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SettlementRow {
    pub mechanism: Mechanism,
    /// Σ E[μ]E[x] for the mean-vector mechanism
    pub condition: Option<f64>,
    pub cost: f64,
    pub revenue: f64,
    pub net_income: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct PhSummary {
    pub status: PhStatus,
    pub iterations: usize,
    pub objective: f64,
    pub spread: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub instance: String,
    pub fixture_complete: bool,
    pub config: ExperimentConfig,
    pub formulations: Vec<FormulationSummary>,
    pub metrics: Vec<MetricsReport>,
    pub settlement: Vec<SettlementRow>,
    pub relationships: Option<RelationshipReport>,
    pub ph: Option<PhSummary>,
}

/// Rendered artifacts, file name to content, in write order.
#[derive(Debug, Clone)]
pub struct RunArtifacts {
    pub summary: RunSummary,
    pub files: Vec<(String, String)>,
}

impl RunArtifacts {
    pub fn file(&self, name: &str) -> Option<&str> {
        self.files.iter().find(|(n, _)| n == name).map(|(_, c)| c.as_str())
    }
}

fn fixed(v: f64, decimals: usize) -> String {
    let s = format!("{v:.decimals$}");
    if s.starts_with('-') && s[1..].chars().all(|c| c == '0' || c == '.') {
        s[1..].to_string()
    } else {
        s
    }
}

pub fn money(v: f64) -> String {
    fixed(v, 2)
}

fn price(v: f64) -> String {
    fixed(v, 6)
}

fn qty(v: f64) -> String {
    fixed(v, 4)
}

struct Table {
    w: csv::Writer<Vec<u8>>,
}

impl Table {
    fn new(header: &[&str]) -> Result<Self, Error> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(header).map_err(csv_err)?;
        Ok(Self { w })
    }

    fn row<I, S>(&mut self, fields: I) -> Result<(), Error>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        self.w.write_record(fields).map_err(csv_err)
    }

    fn finish(self) -> Result<String, Error> {
        let bytes = self.w.into_inner().map_err(|e| Error::Input(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::Input(e.to_string()))
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Input(format!("csv: {e}"))
}

fn scenario_label(dispatch: &DispatchSolution, slot: usize) -> String {
    (dispatch.scenarios[slot] + 1).to_string()
}

fn dispatch_rows(t: &mut Table, inst: &Instance, label: &str, d: &DispatchSolution) -> Result<(), Error> {
    for s in 0..d.num_slots() {
        for (i, p) in inst.participants.iter().enumerate() {
            t.row([
                label.to_string(),
                scenario_label(d, s),
                p.id.clone(),
                qty(d.x[s][i]),
                qty(d.big_x[s][i]),
                qty(d.u[s][i]),
                qty(d.v[s][i]),
            ])?;
        }
    }
    Ok(())
}

fn flow_rows(t: &mut Table, inst: &Instance, label: &str, d: &DispatchSolution) -> Result<(), Error> {
    for s in 0..d.num_slots() {
        for (l, line) in inst.lines.iter().enumerate() {
            t.row([
                label.to_string(),
                scenario_label(d, s),
                line.name.clone(),
                qty(d.f[s][l]),
                qty(d.big_f[s][l]),
            ])?;
        }
    }
    Ok(())
}

fn dual_rows(t: &mut Table, inst: &Instance, label: &str, d: &DispatchSolution, y: &DualSolution) -> Result<(), Error> {
    let (na_name, na_x, na_f) = match y.kind {
        FormulationKind::MeanVector => ("mu", &y.mu_x, &y.mu_f),
        FormulationKind::StateVector => ("sigma", &y.sigma_x, &y.sigma_f),
        _ => ("", &y.mu_x, &y.mu_f),
    };
    for s in 0..y.num_slots() {
        let sc = scenario_label(d, s);
        for (n, bus) in inst.buses.iter().enumerate() {
            t.row([label, &sc, "da_balance", &bus.id.to_string(), &price(y.pi_at(s, n))])?;
        }
        for (n, bus) in inst.buses.iter().enumerate() {
            t.row([label, &sc, "rt_balance", &bus.id.to_string(), &price(y.big_pi[s][n])])?;
        }
        if !na_name.is_empty() {
            for (i, p) in inst.participants.iter().enumerate() {
                t.row([label, &sc, na_name, &p.id, &price(na_x[s][i])])?;
            }
            for (l, line) in inst.lines.iter().enumerate() {
                t.row([label, &sc, na_name, &line.name, &price(na_f[s][l])])?;
            }
        }
    }
    Ok(())
}

fn payment_rows(t: &mut Table, inst: &Instance, d: &DispatchSolution, pay: &PaymentTable) -> Result<(), Error> {
    let realized = realized_values(inst, d);
    let m = pay.mechanism.label();
    for s in 0..d.num_slots() {
        for (i, p) in inst.participants.iter().enumerate() {
            let rho = pay.rho[s][i];
            let phi = realized[s][i];
            t.row([m.to_string(), scenario_label(d, s), p.id.clone(), money(rho), money(phi), money(rho + phi)])?;
        }
    }
    for (i, p) in inst.participants.iter().enumerate() {
        let phi: f64 = realized.iter().zip(&pay.probs).map(|(r, q)| q * r[i]).sum();
        let rho = pay.expected_rho[i];
        t.row([m.to_string(), "E".into(), p.id.clone(), money(rho), money(phi), money(rho + phi)])?;
    }
    Ok(())
}

fn distortion_rows(t: &mut Table, inst: &Instance, d: &DispatchSolution, y: &DualSolution) -> Result<(), Error> {
    let table = price_distortion(inst, y);
    let m = table.mechanism.label();
    let bounds: Vec<(String, f64, f64)> = match table.keyed_by {
        DistortionKey::Bus => inst
            .buses
            .iter()
            .enumerate()
            .map(|(n, bus)| {
                let at: Vec<usize> = inst.participants_at(n).collect();
                let lo = at.iter().map(|&i| -inst.participants[i].delta_plus).fold(f64::NEG_INFINITY, f64::max);
                let hi = at.iter().map(|&i| inst.participants[i].delta_minus).fold(f64::INFINITY, f64::min);
                (bus.id.to_string(), lo, hi)
            })
            .collect(),
        DistortionKey::Participant => inst
            .participants
            .iter()
            .map(|p| (p.id.clone(), -p.delta_plus, p.delta_minus))
            .collect(),
    };
    let bound = |v: f64| if v.is_finite() { price(v) } else { String::new() };
    for s in 0..table.m.len() {
        for (k, (key, lo, hi)) in bounds.iter().enumerate() {
            t.row([m.to_string(), scenario_label(d, s), key.clone(), price(table.m[s][k]), bound(*lo), bound(*hi)])?;
        }
    }
    for (k, (key, lo, hi)) in bounds.iter().enumerate() {
        t.row([m.to_string(), "E".into(), key.clone(), price(table.expected_m[k]), bound(*lo), bound(*hi)])?;
    }
    Ok(())
}

fn metrics_rows(t: &mut Table, report: &MetricsReport) -> Result<(), Error> {
    for g in &report.generators {
        let worst = g.profit.iter().cloned().fold(f64::INFINITY, f64::min);
        t.row([
            report.mechanism.label().to_string(),
            g.participant.clone(),
            money(g.expected_profit),
            money(worst),
            g.expected_recovery.to_string(),
            g.scenario_recovery.to_string(),
        ])?;
    }
    Ok(())
}

fn render_relationships(p: &RelationshipReport) -> Result<String, Error> {
    let mut t = Table::new(&["quantity", "residual", "tol", "pass"])?;
    let rows = [
        ("pi_canonical_vs_mean_vector", p.pi_mean_vector),
        ("pi_canonical_vs_state_vector", p.pi_state_vector),
        ("expected_sigma", p.expected_sigma),
        ("sigma_vs_mu", p.sigma_vs_mu),
        ("big_pi_canonical_vs_mean_vector", p.big_pi_mean_vector),
        ("big_pi_canonical_vs_state_vector", p.big_pi_state_vector),
        ("objective_spread", p.objective_spread),
    ];
    for (name, r) in rows {
        t.row([name.to_string(), format!("{r:.3e}"), format!("{:.0e}", p.tol), (r <= p.tol).to_string()])?;
    }
    t.row([
        "sigma_vs_mu_interior".to_string(),
        format!("{:.3e}", p.sigma_vs_mu_interior),
        format!("{:.0e}", p.tol),
        (p.sigma_vs_mu_interior <= p.tol).to_string(),
    ])?;
    t.row([
        "mapped_dual_kkt".to_string(),
        format!(
            "{:.3e}",
            p.mapped_dual_kkt
                .primal_residual
                .max(p.mapped_dual_kkt.dual_residual)
                .max(p.mapped_dual_kkt.complementarity)
        ),
        "1e-6".to_string(),
        p.mapped_dual_kkt.pass.to_string(),
    ])?;
    t.finish()
}

fn settlement_row(report: &MetricsReport) -> SettlementRow {
    SettlementRow {
        mechanism: report.mechanism,
        condition: report.mv_conditions.as_ref().map(|c| c.aggregate),
        cost: report.cost,
        revenue: report.revenue,
        net_income: report.expected_adequacy.net_income,
    }
}

fn render_settlement(rows: &[SettlementRow]) -> Result<String, Error> {
    let mut t = Table::new(&["mechanism", "condition", "cost_usd", "revenue_usd", "net_income_usd"])?;
    for r in rows {
        t.row([
            r.mechanism.label().to_string(),
            r.condition.map(money).unwrap_or_default(),
            money(r.cost),
            money(r.revenue),
            money(r.net_income),
        ])?;
    }
    t.finish()
}

fn render_ph(inst: &Instance, ph: &PhResult) -> Result<(String, String), Error> {
    let mut m = Table::new(&["scenario", "item", "w"])?;
    for (s, (wx, wf)) in ph.w_x.iter().zip(&ph.w_f).enumerate() {
        let sc = scenario_label(&ph.dispatch, s);
        for (p, w) in inst.participants.iter().zip(wx) {
            m.row([sc.clone(), p.id.clone(), price(*w)])?;
        }
        for (l, w) in inst.lines.iter().zip(wf) {
            m.row([sc.clone(), l.name.clone(), price(*w)])?;
        }
    }
    let mut t = Table::new(&["iteration", "spread", "objective_estimate", "multiplier_norm", "drift"])?;
    for it in &ph.trace.iterations {
        t.row([
            it.iteration.to_string(),
            format!("{:.6e}", it.spread),
            money(it.objective_estimate),
            price(it.multiplier_norm),
            format!("{:.6e}", it.drift),
        ])?;
    }
    Ok((m.finish()?, t.finish()?))
}

/// Solves, settles and renders everything the config asks for, without
/// touching the file system.
pub fn build_artifacts(config: &ExperimentConfig) -> Result<RunArtifacts, Error> {
    config.validate()?;
    let base = load_with_scenarios(&config.instance, config.scenarios.as_deref())?;
    if let FormulationChoice::Clairvoyant(s) = config.formulation {
        if s >= base.num_scenarios() {
            return Err(Error::Input(format!(
                "clairvoyant:{} requested but the instance has {} scenarios",
                s + 1,
                base.num_scenarios()
            )));
        }
    }
    let (inst, injections): (Instance, Option<Injections>) = if config.perturb {
        let p = Perturbation::new(config.seed);
        (p.jitter_costs(&base), Some(p.injections(&base)))
    } else {
        (base.clone(), None)
    };

    let mut dispatch_t = Table::new(&["formulation", "scenario", "participant", "x_mw", "rt_mw", "up_mw", "down_mw"])?;
    let mut flows_t = Table::new(&["formulation", "scenario", "line", "f_mw", "rt_f_mw"])?;
    let mut summary = RunSummary {
        instance: inst.name.clone(),
        fixture_complete: inst.fixture_complete,
        config: config.clone(),
        formulations: Vec::new(),
        metrics: Vec::new(),
        settlement: Vec::new(),
        relationships: None,
        ph: None,
    };
    let mut files = Vec::new();

    if config.solver == SolverChoice::Ph {
        let ph = solve_progressive_hedging(&inst, &config.ph)?;
        let label = format!("{}_ph", config.formulation);
        dispatch_rows(&mut dispatch_t, &inst, &label, &ph.dispatch)?;
        flow_rows(&mut flows_t, &inst, &label, &ph.dispatch)?;
        let (mult, trace) = render_ph(&inst, &ph)?;
        summary.formulations.push(FormulationSummary {
            formulation: label,
            objective: ph.dispatch.objective,
            kkt_pass: false,
            nonanticipativity_spread: ph.dispatch.nonanticipativity_spread(),
        });
        summary.ph = Some(PhSummary {
            status: ph.status,
            iterations: ph.trace.iterations.len(),
            objective: ph.dispatch.objective,
            spread: ph.trace.iterations.last().map(|i| i.spread).unwrap_or(0.0),
        });
        files.push(("dispatch.csv".to_string(), dispatch_t.finish()?));
        files.push(("flows.csv".to_string(), flows_t.finish()?));
        files.push(("multipliers.csv".to_string(), mult));
        files.push(("ph_trace.csv".to_string(), trace));
    } else {
        let mut duals_t = Table::new(&["formulation", "scenario", "row", "key", "value"])?;
        let mut pay_t = Table::new(&[
            "mechanism",
            "scenario",
            "participant",
            "payment_usd",
            "realized_value_usd",
            "profit_usd",
        ])?;
        let mut dist_t = Table::new(&["mechanism", "scenario", "key", "distortion", "lower", "upper"])?;
        let mut metrics_t = Table::new(&[
            "mechanism",
            "participant",
            "expected_profit_usd",
            "worst_profit_usd",
            "expected_recovery",
            "scenario_recovery",
        ])?;
        let mut solved: Vec<Cleared> = Vec::new();
        for kind in config.formulation.kinds() {
            let cl = clear_with(&inst, kind, injections.as_ref())?;
            let label = kind.label();
            dispatch_rows(&mut dispatch_t, &inst, &label, &cl.dispatch)?;
            flow_rows(&mut flows_t, &inst, &label, &cl.dispatch)?;
            dual_rows(&mut duals_t, &inst, &label, &cl.dispatch, &cl.duals)?;
            summary.formulations.push(FormulationSummary {
                formulation: label,
                objective: cl.solution.objective,
                kkt_pass: cl.kkt.pass,
                nonanticipativity_spread: cl.dispatch.nonanticipativity_spread(),
            });
            let mechanism = Mechanism::for_kind(kind);
            if config.mechanism.admits(mechanism) {
                let pay = payments(&inst, &cl.dispatch, &cl.duals);
                payment_rows(&mut pay_t, &inst, &cl.dispatch, &pay)?;
                distortion_rows(&mut dist_t, &inst, &cl.dispatch, &cl.duals)?;
                let report = metrics_report(&inst, &cl.dispatch, &cl.duals, &pay)?;
                metrics_rows(&mut metrics_t, &report)?;
                summary.settlement.push(settlement_row(&report));
                summary.metrics.push(report);
            }
            solved.push(cl);
        }
        files.push(("dispatch.csv".to_string(), dispatch_t.finish()?));
        files.push(("flows.csv".to_string(), flows_t.finish()?));
        files.push(("duals.csv".to_string(), duals_t.finish()?));
        files.push(("payments.csv".to_string(), pay_t.finish()?));
        files.push(("distortion.csv".to_string(), dist_t.finish()?));
        files.push(("metrics.csv".to_string(), metrics_t.finish()?));
        if config.formulation == FormulationChoice::All {
            let relationships = relationship_checks(&inst, &solved[0], &solved[1], &solved[2], config.tolerances.relationship_tol)?;
            files.push(("relationships.csv".to_string(), render_relationships(&relationships)?));
            files.push(("settlement.csv".to_string(), render_settlement(&summary.settlement)?));
            summary.relationships = Some(relationships);
        }
    }

    let json = serde_json::to_string_pretty(&summary).map_err(|e| Error::Input(format!("summary: {e}")))?;
    files.push(("summary.json".to_string(), json + "\n"));
    Ok(RunArtifacts { summary, files })
}

fn write_all(out: &Path, files: &[(String, String)], written: &mut Vec<PathBuf>) -> Result<(), Error> {
    for (name, content) in files {
        let path = out.join(name);
        fs::write(&path, content)?;
        written.push(path);
    }
    Ok(())
}

/// Runs the experiment and writes its artifacts to `config.out`.
pub fn run_experiment(config: &ExperimentConfig) -> Result<RunArtifacts, Error> {
    let artifacts = build_artifacts(config)?;
    let created = !config.out.exists();
    fs::create_dir_all(&config.out)?;
    let mut written = Vec::new();
    if let Err(e) = write_all(&config.out, &artifacts.files, &mut written) {
        for p in &written {
            let _ = fs::remove_file(p);
        }
        if created {
            let _ = fs::remove_dir(&config.out);
        }
        return Err(e);
    }
    log::info!("wrote {} artifacts to {}", written.len(), config.out.display());
    Ok(artifacts)
}
