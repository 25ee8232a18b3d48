use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use gaugewalk::experiment::{run, CurvatureField, Experiment, ExperimentConfig};
use gaugewalk::Error;

/// Discrete-time quantum walks with exact lattice gauge invariance.
#[derive(Debug, Parser)]
#[command(name = "gaugewalk", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Evolve a Gaussian packet and record its mean position and norm.
    Evolve(Overrides),
    /// Walk against the Dirac reference over a sweep of lattice steps.
    Convergence(Overrides),
    /// Walk mean position against the classical colored particle.
    Trajectory(Overrides),
    /// Randomized gauge invariance and unitarity checks.
    GaugeCheck(Overrides),
    /// Plaquette holonomy against the continuum field strength.
    CurvatureCheck(Overrides),
}

#[derive(Debug, Args)]
struct Overrides {
    /// JSON config file; flags below override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    epsilon: Option<f64>,
    /// Comma-separated, strictly decreasing sweep.
    #[arg(long, value_delimiter = ',')]
    epsilons: Option<Vec<f64>>,
    #[arg(long = "e-ym", allow_negative_numbers = true)]
    e_ym: Option<f64>,
    #[arg(long)]
    mass: Option<f64>,
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    k0: Option<f64>,
    #[arg(long = "t-max")]
    t_max: Option<f64>,
    #[arg(long = "x-max")]
    x_max: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    g: Option<f64>,
    /// Internal dimension N.
    #[arg(long = "n")]
    dim: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long, value_parser = parse_field)]
    field: Option<CurvatureField>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_field(s: &str) -> Result<CurvatureField, String> {
    serde_json::from_value(serde_json::Value::String(s.into())).map_err(|_| format!("unknown field {s:?}"))
}

impl Overrides {
    fn resolve(self, experiment: Experiment) -> Result<ExperimentConfig, Error> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::load(path)?,
            None => ExperimentConfig::default(),
        };
        cfg.experiment = experiment;
        macro_rules! set {
            ($($flag:ident => $field:ident),*) => {
                $(if let Some(v) = self.$flag { cfg.$field = v; })*
            };
        }
        set!(epsilon => epsilon, epsilons => epsilons, e_ym => e_ym, mass => mass, sigma => sigma,
             k0 => k0, t_max => t_max, x_max => x_max, g => g, dim => dim, seed => seed,
             trials => trials, steps => steps, field => curvature_field, out => output_dir);
        Ok(cfg)
    }
}

/// Drops long arrays so the summary stays readable; they are in the artifacts.
fn summarize(v: serde_json::Value) -> serde_json::Value {
    use serde_json::Value;
    match v {
        Value::Object(map) => Value::Object(
            map.into_iter()
                .filter(|(_, v)| !matches!(v, Value::Array(a) if a.len() > 16))
                .map(|(k, v)| (k, summarize(v)))
                .collect(),
        ),
        other => other,
    }
}

fn execute(cli: Cli) -> Result<(), Error> {
    let (experiment, overrides) = match cli.command {
        Command::Evolve(o) => (Experiment::Evolve, o),
        Command::Convergence(o) => (Experiment::Convergence, o),
        Command::Trajectory(o) => (Experiment::Trajectory, o),
        Command::GaugeCheck(o) => (Experiment::GaugeCheck, o),
        Command::CurvatureCheck(o) => (Experiment::CurvatureCheck, o),
    };
    let cfg = overrides.resolve(experiment)?;
    let outcome = run(&cfg)?;
    let summary = serde_json::json!({
        "experiment": experiment.name(),
        "output_dir": cfg.output_dir,
        "artifacts": outcome.manifest.artifacts.len(),
        "report": summarize(outcome.report),
    });
    println!("{}", serde_json::to_string_pretty(&summary)?);
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("gaugewalk: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
