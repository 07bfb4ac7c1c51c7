use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};

use stoclear::model::validate_instance;
use stoclear::ph::PhParams;
use stoclear::runner::{
    load_with_scenarios, money, run_experiment, ExperimentConfig, FormulationChoice, MechanismChoice, SolverChoice,
};
use stoclear::verify::{verify_instance, VerifyOptions};
use stoclear::Error;

const EXIT_VIOLATION: u8 = 1;
const EXIT_INPUT: u8 = 2;
const EXIT_SOLVER: u8 = 3;

#[derive(Parser)]
#[command(name = "stoclear", version, about = "Stochastic two-settlement market clearing and settlement checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct InstanceArgs {
    /// instance file, or the name of an embedded instance (micro1, pzp6, zkab6)
    #[arg(long)]
    instance: String,
    /// scenario availability CSV replacing the instance's scenarios
    #[arg(long)]
    scenarios: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Clear the market and write dispatch, price, settlement and metric tables
    Run {
        #[command(flatten)]
        input: InstanceArgs,
        /// clairvoyant:N, canonical, mean_vector, state_vector or all
        #[arg(long, default_value = "all")]
        formulation: FormulationChoice,
        /// extensive or ph
        #[arg(long, default_value = "extensive")]
        solver: SolverChoice,
        /// rc, rm, rs or all
        #[arg(long, default_value = "all")]
        mechanism: MechanismChoice,
        /// solve a slightly perturbed instance so duals are unique
        #[arg(long)]
        perturb: bool,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// progressive hedging penalty
        #[arg(long, default_value_t = PhParams::default().rho)]
        ph_rho: f64,
        #[arg(long, default_value_t = PhParams::default().max_iters)]
        ph_max_iters: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Check an instance file against the schema and the model rules
    Validate {
        #[command(flatten)]
        input: InstanceArgs,
    },
    /// Run the property and guarantee suite; exits 1 on any violation
    Verify {
        #[command(flatten)]
        input: InstanceArgs,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn exit_code(e: &anyhow::Error) -> u8 {
    match e.downcast_ref::<Error>() {
        Some(Error::Lp(_) | Error::NotOptimal(_) | Error::NotConverged { .. }) => EXIT_SOLVER,
        _ => EXIT_INPUT,
    }
}

fn report(e: &anyhow::Error) {
    match e.downcast_ref::<Error>() {
        Some(Error::Validation(errors)) => {
            eprintln!("error: {}", e.chain().next().map(ToString::to_string).unwrap_or_default());
            for msg in errors {
                eprintln!("error: {msg}");
            }
        }
        _ => eprintln!("error: {e:#}"),
    }
}

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    match cli.command {
        Command::Run {
            input,
            formulation,
            solver,
            mechanism,
            perturb,
            seed,
            ph_rho,
            ph_max_iters,
            out,
        } => {
            let mut config = ExperimentConfig::new(input.instance, formulation, out);
            config.scenarios = input.scenarios;
            config.solver = solver;
            config.mechanism = mechanism;
            config.perturb = perturb;
            config.seed = seed;
            config.ph.rho = ph_rho;
            config.ph.max_iters = ph_max_iters;
            let artifacts =
                run_experiment(&config).with_context(|| format!("run on {} failed", config.instance))?;
            for f in &artifacts.summary.formulations {
                println!("{}: objective {:.6}", f.formulation, f.objective);
            }
            for r in &artifacts.summary.settlement {
                println!(
                    "{}: cost {}, revenue {}, net income {}",
                    r.mechanism.label(),
                    money(r.cost),
                    money(r.revenue),
                    money(r.net_income)
                );
            }
            println!("wrote {} files to {}", artifacts.files.len(), config.out.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Validate { input } => {
            let inst = load_with_scenarios(&input.instance, input.scenarios.as_deref())
                .with_context(|| format!("{} is not a valid instance", input.instance))?;
            let report = validate_instance(&inst);
            for w in &report.warnings {
                println!("warning: {w}");
            }
            println!(
                "{}: valid ({} buses, {} lines, {} participants, {} scenarios)",
                inst.name,
                inst.buses.len(),
                inst.lines.len(),
                inst.participants.len(),
                inst.num_scenarios()
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Verify { input, seed } => {
            let inst = load_with_scenarios(&input.instance, input.scenarios.as_deref())
                .with_context(|| format!("{} is not a valid instance", input.instance))?;
            let opts = VerifyOptions {
                perturb_seed: seed,
                ..Default::default()
            };
            let report = verify_instance(&inst, &opts).with_context(|| format!("verifying {} failed", inst.name))?;
            for c in &report.checks {
                let verdict = match (c.covered, c.holds) {
                    (false, _) => "n/a ",
                    (true, true) => "ok  ",
                    (true, false) => "FAIL",
                };
                println!("{verdict} {:<34} {}", c.name, c.detail);
            }
            Ok(if report.all_hold() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(EXIT_VIOLATION)
            })
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            report(&e);
            ExitCode::from(exit_code(&e))
        }
    }
}
