//! teamplan: plan, evaluate, and inspect legible and fair subtask
//! allocations for a human-robot team. Every flag can also be set through an
//! environment variable with the `TEAMPLAN_` prefix (e.g. `TEAMPLAN_SEED`).
//!
//! Exit codes: 0 success, 2 unreadable or invalid input, 3 infeasible
//! planning problem.

mod format;
mod report;
mod svg;

use clap::{Args, Parser, Subcommand, ValueEnum};
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use teamplan_core::{
    plan, posterior, Error, FairnessKind, Objective, ObserverConfig, PlannerConfig, Result,
    Scenario, SnapshotProtocol,
};

#[derive(Parser)]
#[command(name = "teamplan", version, about, disable_help_subcommand = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Plan one scenario; writes a text report and an SVG render.
    Plan(PlanArgs),
    /// Run the planner matrix over a scenario directory; writes a CSV.
    Evaluate(EvaluateArgs),
    /// Posterior trace of the observer over a recorded trajectory.
    Posterior(PosteriorArgs),
    /// Write the bundled scenario files into a directory.
    Scenarios(ScenariosArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ObjectiveFlag {
    Efficient,
    LegibleWatch,
    LegiblePlay,
    FairLegibleWatch,
    FairLegiblePlay,
}

const ALL_OBJECTIVES: [ObjectiveFlag; 5] = [
    ObjectiveFlag::Efficient,
    ObjectiveFlag::LegibleWatch,
    ObjectiveFlag::LegiblePlay,
    ObjectiveFlag::FairLegibleWatch,
    ObjectiveFlag::FairLegiblePlay,
];

#[derive(Clone, Copy, ValueEnum)]
enum FairnessFlag {
    Allocation,
    Effort,
}

impl From<FairnessFlag> for FairnessKind {
    fn from(f: FairnessFlag) -> Self {
        match f {
            FairnessFlag::Allocation => FairnessKind::AllocationEquality,
            FairnessFlag::Effort => FairnessKind::EffortEquality,
        }
    }
}

#[derive(Args)]
struct CommonArgs {
    /// Boltzmann rationality of the simulated observer.
    #[arg(long, env = "TEAMPLAN_BETA", default_value_t = 1.0)]
    beta: f64,
    /// Discount used by the efficiency value V = gamma^steps.
    #[arg(long, env = "TEAMPLAN_GAMMA", default_value_t = 0.9)]
    gamma: f64,
    /// Seed for sampled allocation selection; all randomness flows from it.
    #[arg(long, env = "TEAMPLAN_SEED", default_value_t = 0)]
    seed: u64,
    /// Score the mean posterior over all prefixes instead of the endpoint.
    #[arg(long, env = "TEAMPLAN_PREFIX_WEIGHTED")]
    prefix_weighted: bool,
}

impl CommonArgs {
    fn planner_config(&self) -> Result<PlannerConfig<f64>> {
        let config = PlannerConfig {
            observer: ObserverConfig {
                beta: self.beta,
                gamma: self.gamma,
                ..ObserverConfig::default()
            },
            prefix_weighted: self.prefix_weighted,
            ..PlannerConfig::default()
        };
        config.observer.validate()?;
        Ok(config)
    }
}

#[derive(Args)]
struct ObjectiveArgs {
    /// Planning objective.
    #[arg(long, value_enum, env = "TEAMPLAN_OBJECTIVE", default_value = "legible-watch")]
    objective: ObjectiveFlag,
    /// Fairness notion for the fair-legible objectives.
    #[arg(long, value_enum, env = "TEAMPLAN_FAIRNESS", default_value = "allocation")]
    fairness: FairnessFlag,
    /// Fairness weight for the fair-legible objectives.
    #[arg(long, env = "TEAMPLAN_LAMBDA", default_value_t = 0.5)]
    lambda: f64,
}

fn build_objective(flag: ObjectiveFlag, fairness: FairnessFlag, lambda: f64) -> Objective<f64> {
    match flag {
        ObjectiveFlag::Efficient => Objective::Efficient,
        ObjectiveFlag::LegibleWatch => Objective::LegibleWatch,
        ObjectiveFlag::LegiblePlay => Objective::LegiblePlay,
        ObjectiveFlag::FairLegibleWatch => Objective::FairLegibleWatch {
            fairness: fairness.into(),
            lambda,
        },
        ObjectiveFlag::FairLegiblePlay => Objective::FairLegiblePlay {
            fairness: fairness.into(),
            lambda,
        },
    }
}

#[derive(Args)]
struct PlanArgs {
    /// Scenario file (TOML).
    scenario: PathBuf,
    #[command(flatten)]
    objective: ObjectiveArgs,
    #[command(flatten)]
    common: CommonArgs,
    /// Report path; the SVG render lands next to it.
    #[arg(long, env = "TEAMPLAN_OUT", default_value = "plan.txt")]
    out: PathBuf,
}

#[derive(Args)]
struct EvaluateArgs {
    /// Directory of scenario files.
    suite: PathBuf,
    /// Objectives to run; repeat to select several. Defaults to all five.
    #[arg(long = "objective", value_enum, env = "TEAMPLAN_OBJECTIVE")]
    objectives: Vec<ObjectiveFlag>,
    /// Fairness notion for the fair-legible objectives.
    #[arg(long, value_enum, env = "TEAMPLAN_FAIRNESS", default_value = "allocation")]
    fairness: FairnessFlag,
    /// Fairness weight for the fair-legible objectives.
    #[arg(long, env = "TEAMPLAN_LAMBDA", default_value_t = 0.5)]
    lambda: f64,
    #[command(flatten)]
    common: CommonArgs,
    /// CSV output path.
    #[arg(long, env = "TEAMPLAN_OUT", default_value = "evaluation.csv")]
    out: PathBuf,
}

#[derive(Args)]
struct PosteriorArgs {
    /// Scenario file (TOML).
    scenario: PathBuf,
    /// Trajectory file (TOML, per-step joint actions).
    trajectory: PathBuf,
    #[command(flatten)]
    common: CommonArgs,
    /// CSV output path.
    #[arg(long, env = "TEAMPLAN_OUT", default_value = "posterior.csv")]
    out: PathBuf,
}

#[derive(Args)]
struct ScenariosArgs {
    /// Directory to fill with the bundled scenarios.
    #[arg(default_value = "scenarios")]
    out_dir: PathBuf,
}

fn read_file(path: &Path) -> Result<String> {
    fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents)
        .map_err(|e| Error::Config(format!("cannot write {}: {e}", path.display())))
}

/// Prefix the file path onto input errors without stacking Display prefixes.
fn with_path(path: &Path, e: Error) -> Error {
    match e {
        Error::Scenario(m) => Error::Scenario(format!("{}: {m}", path.display())),
        Error::Structural(m) => Error::Structural(format!("{}: {m}", path.display())),
        other => other,
    }
}

fn load_scenario(path: &Path) -> Result<Scenario<f64>> {
    let text = read_file(path)?;
    format::parse_scenario(&text).map_err(|e| with_path(path, e))
}

fn cmd_plan(args: &PlanArgs) -> Result<()> {
    let scenario = load_scenario(&args.scenario)?;
    let objective = build_objective(
        args.objective.objective,
        args.objective.fairness,
        args.objective.lambda,
    );
    objective.validate()?;
    let config = args.common.planner_config()?;
    let result = plan(&scenario, &objective, &config, args.common.seed)?;
    let report = report::plan_report(&scenario, &objective, &result);
    write_file(&args.out, &report)?;
    write_file(&args.out.with_extension("svg"), &svg::render(&scenario, &result))?;
    write_file(
        &args.out.with_extension("trajectory.toml"),
        &format::emit_trajectory(&result.trajectory),
    )?;
    print!("{report}");
    Ok(())
}

fn cmd_evaluate(args: &EvaluateArgs) -> Result<()> {
    let mut paths: Vec<PathBuf> = fs::read_dir(&args.suite)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", args.suite.display())))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "toml"))
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(Error::Config(format!(
            "no scenario files (*.toml) in {}",
            args.suite.display()
        )));
    }

    let mut scenarios = Vec::new();
    let mut broken = 0usize;
    for path in &paths {
        match load_scenario(path) {
            Ok(s) => scenarios.push(s),
            Err(e) => {
                broken += 1;
                eprintln!("skipping: {e}");
            }
        }
    }
    if scenarios.is_empty() {
        return Err(Error::Config("every scenario file failed to parse".into()));
    }

    let flags = if args.objectives.is_empty() {
        ALL_OBJECTIVES.to_vec()
    } else {
        args.objectives.clone()
    };
    let objectives: Vec<Objective<f64>> = flags
        .iter()
        .map(|f| build_objective(*f, args.fairness, args.lambda))
        .collect();
    for o in &objectives {
        o.validate()?;
    }

    let config = args.common.planner_config()?;
    let outcome = teamplan_core::run_suite(
        &scenarios,
        &objectives,
        &SnapshotProtocol::default(),
        &config,
        args.common.seed,
    )?;
    for (id, err) in &outcome.failures {
        eprintln!("failed: {id}: {err}");
    }
    if outcome.reports.is_empty() {
        return Err(Error::Config("no scenario could be evaluated".into()));
    }
    write_file(&args.out, &report::evaluation_csv(&outcome))?;
    println!(
        "evaluated {} scenarios x {} planners ({} skipped) -> {}",
        outcome.reports.len(),
        objectives.len(),
        broken + outcome.failures.len(),
        args.out.display()
    );
    Ok(())
}

fn cmd_posterior(args: &PosteriorArgs) -> Result<()> {
    let scenario = load_scenario(&args.scenario)?;
    let text = read_file(&args.trajectory)?;
    let xi = format::parse_trajectory(&scenario, &text)
        .map_err(|e| with_path(&args.trajectory, e))?;
    let thetas = scenario.allocations()?;
    let cfg = ObserverConfig {
        beta: args.common.beta,
        gamma: args.common.gamma,
        ..ObserverConfig::default()
    };
    cfg.validate()?;
    let trace = posterior(&scenario, &thetas, &xi, &cfg)?;
    write_file(&args.out, &report::posterior_csv(&trace))?;
    println!(
        "wrote {} prefix rows x {} allocations -> {}",
        trace.len(),
        thetas.len(),
        args.out.display()
    );
    Ok(())
}

fn cmd_scenarios(args: &ScenariosArgs) -> Result<()> {
    fs::create_dir_all(&args.out_dir)
        .map_err(|e| Error::Config(format!("cannot create {}: {e}", args.out_dir.display())))?;
    let bundle = teamplan_core::evaluation::suite::bundled();
    for scenario in &bundle {
        let path = args.out_dir.join(format!("{}.toml", scenario.id()));
        write_file(&path, &format::emit_scenario(scenario))?;
    }
    println!("wrote {} scenarios -> {}", bundle.len(), args.out_dir.display());
    Ok(())
}

fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Plan(args) => cmd_plan(args),
        Command::Evaluate(args) => cmd_evaluate(args),
        Command::Posterior(args) => cmd_posterior(args),
        Command::Scenarios(args) => cmd_scenarios(args),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_infeasible() {
                ExitCode::from(3)
            } else {
                ExitCode::from(2)
            }
        }
    }
}
