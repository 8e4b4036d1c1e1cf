use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use shotlab::allocation::Strategy;
use shotlab::experiment::{
    energy_distribution, load_summary, recompute_summary, run_trials, DistributionConfig, ExperimentConfig,
    StrategySummary, CHEMICAL_ACCURACY,
};
use shotlab::sim::{Molecule, NoiseConfig};
use shotlab::vqe::ShotAccounting;

#[derive(Parser)]
#[command(name = "shotlab", version, about = "Shot-budgeted VQE experiments", args_override_self = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Repeated VQE trials per strategy; writes traces and a summary.
    Run(RunArgs),
    /// Repeated single-evaluation estimates at fixed parameters.
    Dist(DistArgs),
    /// Recomputes aggregates from the trace files of a `run` output directory.
    Summarize {
        #[arg(long = "in")]
        input: PathBuf,
    },
}

#[derive(Args)]
struct NoiseArgs {
    /// Error probability shared by all enabled channels.
    #[arg(long, default_value_t = 0.0)]
    noise_p: f64,
    /// `all`, `none`, or a comma list of gate,reset,phase,measurement.
    #[arg(long, default_value = "all")]
    noise_channels: String,
    /// Shots per noisy circuit execution, or `all` for one execution per clique evaluation.
    #[arg(long, default_value = "1")]
    shots_per_execution: String,
}

impl NoiseArgs {
    fn resolve(&self) -> shotlab::Result<NoiseConfig> {
        let batch = match self.shots_per_execution.trim() {
            "all" => None,
            n => Some(n.parse::<u64>().map_err(|_| {
                shotlab::Error::InvalidConfig(format!("invalid shots per execution `{n}`"))
            })?),
        };
        NoiseConfig::new(self.noise_p, &NoiseConfig::parse_channels(&self.noise_channels)?)?.with_shots_per_execution(batch)
    }
}

#[derive(Args)]
struct RunArgs {
    #[arg(long, default_value = "h2")]
    molecule: String,
    /// A strategy name, a comma list, or `all`.
    #[arg(long, default_value = "all")]
    strategy: String,
    #[arg(long)]
    budget: Option<u64>,
    #[arg(long)]
    probe_shots: Option<u64>,
    #[arg(long)]
    iterations: Option<usize>,
    #[arg(long, default_value_t = 1)]
    trials: usize,
    /// Comma-separated initial parameters.
    #[arg(long, allow_hyphen_values = true)]
    theta0: Option<String>,
    #[command(flatten)]
    noise: NoiseArgs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// `objective` or `all`.
    #[arg(long, default_value = "objective")]
    accounting: String,
    #[arg(long, default_value_t = CHEMICAL_ACCURACY)]
    tolerance: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct DistArgs {
    #[arg(long, default_value = "h2")]
    molecule: String,
    /// Comma-separated parameters; defaults to the molecule's initial point.
    #[arg(long, allow_hyphen_values = true)]
    theta: Option<String>,
    #[arg(long, default_value = "uniform,vpsr")]
    strategy: String,
    /// Probe sizes swept for variance-based strategies.
    #[arg(long)]
    probe_shots: Option<String>,
    #[arg(long)]
    budget: Option<u64>,
    #[arg(long, default_value_t = 10_000)]
    reps: usize,
    #[arg(long, default_value_t = 50)]
    bins: usize,
    #[command(flatten)]
    noise: NoiseArgs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Writes `distribution.json` here instead of printing it.
    #[arg(long)]
    out: Option<PathBuf>,
}

enum Failure {
    Config(String),
    Runtime(String),
}

impl From<shotlab::Error> for Failure {
    fn from(e: shotlab::Error) -> Self {
        Failure::Runtime(e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Runtime(e.to_string())
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::Runtime(e.to_string())
    }
}

fn config<T>(r: shotlab::Result<T>) -> Result<T, Failure> {
    r.map_err(|e| Failure::Config(e.to_string()))
}

fn parse_floats(text: &str) -> Result<Vec<f64>, Failure> {
    text.split(',')
        .map(|s| s.trim().parse::<f64>().map_err(|_| Failure::Config(format!("invalid number `{s}`"))))
        .collect()
}

fn parse_strategies(text: &str) -> Result<Vec<Strategy>, Failure> {
    if text.trim() == "all" {
        return Ok(Strategy::ALL.to_vec());
    }
    config(text.split(',').map(str::parse).collect())
}

fn print_summary(rows: &[StrategySummary]) {
    println!(
        "{:<8} {:>6} {:>9} {:>14} {:>14} {:>14}",
        "strategy", "trials", "converged", "mean_shots", "median_shots", "final_energy"
    );
    for s in rows {
        let (mean, median) = s
            .shots_to_convergence
            .as_ref()
            .map_or(("-".to_string(), "-".to_string()), |a| {
                (format!("{:.4e}", a.mean), format!("{:.4e}", a.median))
            });
        println!(
            "{:<8} {:>6} {:>9} {:>14} {:>14} {:>14.6}",
            s.strategy, s.trials, s.converged, mean, median, s.mean_final_energy
        );
    }
}

fn run(args: RunArgs) -> Result<(), Failure> {
    let molecule: Molecule = config(args.molecule.parse())?;
    let defaults = ExperimentConfig::new(molecule);
    let cfg = ExperimentConfig {
        strategies: parse_strategies(&args.strategy)?,
        budget: args.budget.unwrap_or(defaults.budget),
        probe_shots: args.probe_shots.unwrap_or(defaults.probe_shots),
        iterations: args.iterations.unwrap_or(defaults.iterations),
        trials: args.trials,
        theta0: match &args.theta0 {
            Some(t) => parse_floats(t)?,
            None => defaults.theta0.clone(),
        },
        noise: config(args.noise.resolve())?,
        seed_base: args.seed,
        tolerance: args.tolerance,
        accounting: config(args.accounting.parse::<ShotAccounting>())?,
        ..defaults
    };
    config(cfg.validate())?;
    for &s in &cfg.strategies {
        let m = molecule.hamiltonian().cliques().len() as u64;
        let required = if s.uses_probe() { m * cfg.probe_shots.max(1) } else { m };
        if cfg.budget < required {
            return Err(Failure::Config(format!(
                "budget {} is below the {required} shots {s} needs",
                cfg.budget
            )));
        }
    }
    let result = run_trials(&cfg)?;
    result.write(&args.out)?;
    println!("ground energy {:.9}", result.ground_energy);
    print_summary(&result.summary()?.strategies);
    println!("wrote {}", args.out.display());
    Ok(())
}

fn dist(args: DistArgs) -> Result<(), Failure> {
    let molecule: Molecule = config(args.molecule.parse())?;
    let theta = match &args.theta {
        Some(t) => parse_floats(t)?,
        None => molecule.default_theta0(),
    };
    if theta.len() != molecule.parameter_count() {
        return Err(Failure::Config(format!(
            "{molecule} takes {} parameters, got {}",
            molecule.parameter_count(),
            theta.len()
        )));
    }
    let probes: Vec<u64> = match &args.probe_shots {
        Some(list) => list
            .split(',')
            .map(|s| s.trim().parse().map_err(|_| Failure::Config(format!("invalid probe size `{s}`"))))
            .collect::<Result<_, _>>()?,
        None => vec![molecule.default_probe_shots()],
    };
    let mut cases = Vec::new();
    for s in parse_strategies(&args.strategy)? {
        if s.uses_probe() {
            cases.extend(probes.iter().map(|&k| (s, k)));
        } else {
            cases.push((s, 0));
        }
    }
    if args.reps == 0 {
        return Err(Failure::Config("reps must be at least 1".into()));
    }
    let cfg = DistributionConfig {
        budget: args.budget.unwrap_or(molecule.default_budget()),
        reps: args.reps,
        cases,
        noise: config(args.noise.resolve())?,
        seed: args.seed,
        bins: args.bins,
        ..DistributionConfig::new(molecule, theta)
    };
    let reports = energy_distribution(&cfg).map_err(|e| match e {
        shotlab::Error::BudgetTooSmall { .. } => Failure::Config(e.to_string()),
        other => Failure::Runtime(other.to_string()),
    })?;
    for r in &reports {
        eprintln!(
            "{:<8} k={:<4} mean={:.6} std={:.6} mean_shots={:.1} exact={:.6}",
            r.strategy, r.probe_shots, r.mean, r.std, r.mean_shots, r.exact_energy
        );
    }
    let json = serde_json::to_string_pretty(&serde_json::json!({ "config": cfg, "reports": reports }))?;
    match args.out {
        Some(dir) => {
            fs::create_dir_all(&dir)?;
            fs::write(dir.join("distribution.json"), json + "\n")?;
        }
        None => println!("{json}"),
    }
    Ok(())
}

fn summarize(input: PathBuf) -> Result<(), Failure> {
    let stored = load_summary(&input)?;
    let recomputed = recompute_summary(&input)?;
    println!("ground energy {:.9}", recomputed.ground_energy);
    print_summary(&recomputed.strategies);
    if stored.strategies != recomputed.strategies {
        return Err(Failure::Runtime("summary.json disagrees with the trace files".into()));
    }
    Ok(())
}

fn main() -> ExitCode {
    let outcome = match Cli::parse().command {
        Command::Run(a) => run(a),
        Command::Dist(a) => dist(a),
        Command::Summarize { input } => summarize(input),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
