//! Repeated-trial harness, fixed-θ distribution studies and result files.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::allocation::Strategy;
use crate::error::{Error, Result};
use crate::hamiltonian::exact_ground_energy;
use crate::measurement::{empirical_stats, Estimator};
use crate::sim::{exact_expectation, Molecule, NoiseConfig, SimRng};
use crate::vqe::{run_vqe_with, Evaluator, Objective, ShotAccounting, VqeConfig, VqeTrace};

/// 1 kcal/mol in Hartree, rounded.
pub const CHEMICAL_ACCURACY: f64 = 1.6e-3;

pub const SUMMARY_FILE: &str = "summary.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub molecule: Molecule,
    pub strategies: Vec<Strategy>,
    pub budget: u64,
    pub probe_shots: u64,
    pub iterations: usize,
    pub trials: usize,
    pub theta0: Vec<f64>,
    pub noise: NoiseConfig,
    pub seed_base: u64,
    pub tolerance: f64,
    pub accounting: ShotAccounting,
}

impl ExperimentConfig {
    pub fn new(molecule: Molecule) -> Self {
        Self {
            molecule,
            strategies: Strategy::ALL.to_vec(),
            budget: molecule.default_budget(),
            probe_shots: molecule.default_probe_shots(),
            iterations: molecule.default_iterations(),
            trials: 1,
            theta0: molecule.default_theta0(),
            noise: NoiseConfig::none(),
            seed_base: 0,
            tolerance: CHEMICAL_ACCURACY,
            accounting: ShotAccounting::ObjectiveOnly,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::InvalidConfig("trials must be at least 1".into()));
        }
        if self.tolerance.is_nan() || self.tolerance <= 0.0 {
            return Err(Error::InvalidConfig("tolerance must be positive".into()));
        }
        if self.strategies.is_empty() {
            return Err(Error::InvalidConfig("no strategies selected".into()));
        }
        self.vqe_config(self.strategies[0], 0).validate()
    }

    /// Engine configuration for one trial.
    pub fn vqe_config(&self, strategy: Strategy, trial: usize) -> VqeConfig {
        VqeConfig {
            budget: self.budget,
            probe_shots: self.probe_shots,
            iterations: self.iterations,
            theta0: self.theta0.clone(),
            noise: self.noise,
            seed: self.seed_base + trial as u64,
            accounting: self.accounting,
            objective: Objective::Sampled,
            ..VqeConfig::new(self.molecule, strategy)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialSummary {
    pub strategy: Strategy,
    pub trial: usize,
    pub converged_iteration: Option<usize>,
    pub shots_to_convergence: Option<u64>,
    pub total_shots: u64,
    pub final_exact_energy: f64,
}

impl TrialSummary {
    pub fn from_trace(strategy: Strategy, trial: usize, trace: &VqeTrace, ground: f64, tolerance: f64) -> Self {
        let hit = trace.first_converged(ground, tolerance);
        let last = trace.final_record();
        Self {
            strategy,
            trial,
            converged_iteration: hit.map(|r| r.iteration),
            shots_to_convergence: hit.map(|r| r.shots_cumulative),
            total_shots: last.map_or(0, |r| r.shots_cumulative),
            final_exact_energy: last.map_or(f64::NAN, |r| r.exact_energy),
        }
    }
}

/// All trials of one strategy, ordered by trial index.
#[derive(Debug, Clone, PartialEq)]
pub struct StrategyRun {
    pub strategy: Strategy,
    pub traces: Vec<VqeTrace>,
    pub summaries: Vec<TrialSummary>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    pub config: ExperimentConfig,
    pub ground_energy: f64,
    pub runs: Vec<StrategyRun>,
}

impl ExperimentResult {
    pub fn run(&self, strategy: Strategy) -> Option<&StrategyRun> {
        self.runs.iter().find(|r| r.strategy == strategy)
    }
}

/// Runs every (strategy, trial) pair in parallel; trial `i` uses seed `seed_base + i`.
pub fn run_trials(config: &ExperimentConfig) -> Result<ExperimentResult> {
    config.validate()?;
    let estimator = Estimator::for_molecule(config.molecule);
    let ground = exact_ground_energy(estimator.hamiltonian())?;
    let jobs: Vec<(Strategy, usize)> = config
        .strategies
        .iter()
        .flat_map(|&s| (0..config.trials).map(move |t| (s, t)))
        .collect();
    let traces = jobs
        .par_iter()
        .map(|&(s, t)| run_vqe_with(&config.vqe_config(s, t), &estimator))
        .collect::<Result<Vec<_>>>()?;
    let mut traces = traces.into_iter();
    let runs = config
        .strategies
        .iter()
        .map(|&strategy| {
            let traces: Vec<VqeTrace> = traces.by_ref().take(config.trials).collect();
            let summaries = traces
                .iter()
                .enumerate()
                .map(|(i, tr)| TrialSummary::from_trace(strategy, i, tr, ground, config.tolerance))
                .collect();
            StrategyRun {
                strategy,
                traces,
                summaries,
            }
        })
        .collect();
    Ok(ExperimentResult {
        config: config.clone(),
        ground_energy: ground,
        runs,
    })
}

/// Five-number summary with moments and Tukey outliers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub count: usize,
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
    pub mean: f64,
    pub std: f64,
    pub outliers: Vec<f64>,
}

/// Quartiles interpolate linearly between order statistics; `std` uses `n − 1`.
pub fn summarize(values: &[f64]) -> Result<Aggregate> {
    if values.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let q = |p: f64| {
        let pos = p * (sorted.len() - 1) as f64;
        let lo = pos.floor() as usize;
        let hi = pos.ceil() as usize;
        sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
    };
    let (q1, median, q3) = (q(0.25), q(0.5), q(0.75));
    let iqr = q3 - q1;
    let stats = empirical_stats(values)?;
    Ok(Aggregate {
        count: values.len(),
        min: sorted[0],
        q1,
        median,
        q3,
        max: sorted[sorted.len() - 1],
        mean: stats.mean,
        std: stats.std.unwrap_or(0.0),
        outliers: sorted
            .iter()
            .copied()
            .filter(|&x| x < q1 - 1.5 * iqr || x > q3 + 1.5 * iqr)
            .collect(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategySummary {
    pub strategy: Strategy,
    pub trials: usize,
    pub converged: usize,
    /// Over converged trials only.
    pub shots_to_convergence: Option<Aggregate>,
    pub mean_total_shots: f64,
    pub mean_final_energy: f64,
}

pub fn summarize_strategy(strategy: Strategy, trials: &[TrialSummary]) -> Result<StrategySummary> {
    if trials.is_empty() {
        return Err(Error::EmptyInput);
    }
    let shots: Vec<f64> = trials.iter().filter_map(|t| t.shots_to_convergence).map(|s| s as f64).collect();
    let n = trials.len() as f64;
    Ok(StrategySummary {
        strategy,
        trials: trials.len(),
        converged: shots.len(),
        shots_to_convergence: if shots.is_empty() { None } else { Some(summarize(&shots)?) },
        mean_total_shots: trials.iter().map(|t| t.total_shots as f64).sum::<f64>() / n,
        mean_final_energy: trials.iter().map(|t| t.final_exact_energy).sum::<f64>() / n,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryDocument {
    pub config: ExperimentConfig,
    pub ground_energy: f64,
    pub strategies: Vec<StrategySummary>,
    pub trials: Vec<TrialSummary>,
}

impl ExperimentResult {
    pub fn summary(&self) -> Result<SummaryDocument> {
        Ok(SummaryDocument {
            config: self.config.clone(),
            ground_energy: self.ground_energy,
            strategies: self
                .runs
                .iter()
                .map(|r| summarize_strategy(r.strategy, &r.summaries))
                .collect::<Result<_>>()?,
            trials: self.runs.iter().flat_map(|r| r.summaries.iter().cloned()).collect(),
        })
    }

    /// Writes `traces_<strategy>.csv` per strategy and `summary.json`.
    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        fs::create_dir_all(dir)?;
        let mut written = Vec::new();
        for run in &self.runs {
            let path = dir.join(trace_file_name(run.strategy));
            write_traces(&path, &run.traces)?;
            written.push(path);
        }
        let path = dir.join(SUMMARY_FILE);
        fs::write(&path, serde_json::to_string_pretty(&self.summary()?)? + "\n")?;
        written.push(path);
        Ok(written)
    }
}

pub fn trace_file_name(strategy: Strategy) -> String {
    format!("traces_{}.csv", strategy.name())
}

const FIXED_COLUMNS: [&str; 7] = [
    "trial",
    "iteration",
    "energy_estimate",
    "exact_energy",
    "lr",
    "shots_iteration",
    "shots_cumulative",
];

pub fn write_traces(path: &Path, traces: &[VqeTrace]) -> Result<()> {
    let cliques = traces
        .iter()
        .flat_map(|t| t.records.first())
        .map(|r| r.per_clique.len())
        .next()
        .unwrap_or(0);
    let mut w = csv::Writer::from_path(path)?;
    let header: Vec<String> = FIXED_COLUMNS
        .iter()
        .map(|s| s.to_string())
        .chain((0..cliques).map(|i| format!("alloc_clique_{i}")))
        .collect();
    w.write_record(&header)?;
    for (trial, trace) in traces.iter().enumerate() {
        for r in &trace.records {
            let mut row = vec![
                trial.to_string(),
                r.iteration.to_string(),
                format!("{:?}", r.energy_estimate),
                format!("{:?}", r.exact_energy),
                format!("{:?}", r.lr),
                r.shots_iteration.to_string(),
                r.shots_cumulative.to_string(),
            ];
            row.extend(r.per_clique.iter().map(u64::to_string));
            w.write_record(&row)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// One parsed trace CSV row.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub trial: usize,
    pub iteration: usize,
    pub energy_estimate: f64,
    pub exact_energy: f64,
    pub lr: f64,
    pub shots_iteration: u64,
    pub shots_cumulative: u64,
    pub per_clique: Vec<u64>,
}

pub fn read_traces(path: &Path) -> Result<Vec<TraceRow>> {
    let mut r = csv::Reader::from_path(path)?;
    let header = r.headers()?.clone();
    if header.len() < FIXED_COLUMNS.len() || FIXED_COLUMNS.iter().zip(header.iter()).any(|(a, b)| *a != b) {
        return Err(Error::InvalidConfig(format!("unexpected trace header in {}", path.display())));
    }
    let bad = |field: &str| Error::InvalidConfig(format!("malformed `{field}` in {}", path.display()));
    let mut rows = Vec::new();
    for record in r.records() {
        let rec = record?;
        let get = |i: usize| rec.get(i).unwrap_or("");
        rows.push(TraceRow {
            trial: get(0).parse().map_err(|_| bad("trial"))?,
            iteration: get(1).parse().map_err(|_| bad("iteration"))?,
            energy_estimate: get(2).parse().map_err(|_| bad("energy_estimate"))?,
            exact_energy: get(3).parse().map_err(|_| bad("exact_energy"))?,
            lr: get(4).parse().map_err(|_| bad("lr"))?,
            shots_iteration: get(5).parse().map_err(|_| bad("shots_iteration"))?,
            shots_cumulative: get(6).parse().map_err(|_| bad("shots_cumulative"))?,
            per_clique: (FIXED_COLUMNS.len()..rec.len())
                .map(|i| get(i).parse().map_err(|_| bad("alloc_clique")))
                .collect::<Result<_>>()?,
        });
    }
    Ok(rows)
}

pub fn load_summary(dir: &Path) -> Result<SummaryDocument> {
    Ok(serde_json::from_str(&fs::read_to_string(dir.join(SUMMARY_FILE))?)?)
}

/// Rebuilds the per-strategy aggregates from the trace files in `dir`.
///
/// Ground energy, tolerance and strategy list come from `summary.json`.
pub fn recompute_summary(dir: &Path) -> Result<SummaryDocument> {
    let stored = load_summary(dir)?;
    let mut strategies = Vec::new();
    let mut all_trials = Vec::new();
    for s in &stored.config.strategies {
        let rows = read_traces(&dir.join(trace_file_name(*s)))?;
        let mut by_trial: BTreeMap<usize, Vec<&TraceRow>> = BTreeMap::new();
        for row in &rows {
            if row.per_clique.iter().sum::<u64>() != row.shots_iteration
                && stored.config.accounting == ShotAccounting::ObjectiveOnly
            {
                return Err(Error::InvalidConfig(format!(
                    "trial {} iteration {}: allocations do not sum to iteration shots",
                    row.trial, row.iteration
                )));
            }
            by_trial.entry(row.trial).or_default().push(row);
        }
        let trials: Vec<TrialSummary> = by_trial
            .into_iter()
            .map(|(trial, rows)| {
                let hit = rows
                    .iter()
                    .find(|r| r.exact_energy <= stored.ground_energy + stored.config.tolerance);
                let last = rows.last().expect("grouped rows are non-empty");
                TrialSummary {
                    strategy: *s,
                    trial,
                    converged_iteration: hit.map(|r| r.iteration),
                    shots_to_convergence: hit.map(|r| r.shots_cumulative),
                    total_shots: last.shots_cumulative,
                    final_exact_energy: last.exact_energy,
                }
            })
            .collect();
        strategies.push(summarize_strategy(*s, &trials)?);
        all_trials.extend(trials);
    }
    Ok(SummaryDocument {
        config: stored.config,
        ground_energy: stored.ground_energy,
        strategies,
        trials: all_trials,
    })
}

/// A fixed-θ repeated-estimate study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistributionConfig {
    pub molecule: Molecule,
    pub theta: Vec<f64>,
    pub budget: u64,
    pub reps: usize,
    /// `(strategy, probe shots)` pairs.
    pub cases: Vec<(Strategy, u64)>,
    pub noise: NoiseConfig,
    pub seed: u64,
    pub bins: usize,
}

impl DistributionConfig {
    pub fn new(molecule: Molecule, theta: Vec<f64>) -> Self {
        Self {
            molecule,
            theta,
            budget: molecule.default_budget(),
            reps: 10_000,
            cases: vec![
                (Strategy::Uniform, 0),
                (Strategy::Vpsr, molecule.default_probe_shots()),
            ],
            noise: NoiseConfig::none(),
            seed: 0,
            bins: 50,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    /// `bins + 1` ascending edges; the last bin is closed.
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
}

impl Histogram {
    pub fn new(values: &[f64], bins: usize) -> Self {
        let bins = bins.max(1);
        let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let (lo, hi) = if values.is_empty() {
            (0.0, 1.0)
        } else if hi > lo {
            (lo, hi)
        } else {
            (lo - 0.5, hi + 0.5)
        };
        let width = (hi - lo) / bins as f64;
        let mut counts = vec![0; bins];
        for v in values {
            let i = (((v - lo) / width) as usize).min(bins - 1);
            counts[i] += 1;
        }
        Self {
            edges: (0..=bins).map(|i| lo + width * i as f64).collect(),
            counts,
        }
    }

    pub fn mass(&self) -> u64 {
        self.counts.iter().sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistributionReport {
    pub strategy: Strategy,
    pub probe_shots: u64,
    pub reps: usize,
    pub exact_energy: f64,
    pub mean: f64,
    pub std: f64,
    pub mean_shots: f64,
    pub histogram: Histogram,
}

/// Case `i` uses seed `seed + i`; estimates within a case share one stream.
pub fn energy_distribution(config: &DistributionConfig) -> Result<Vec<DistributionReport>> {
    if config.reps == 0 {
        return Err(Error::InvalidConfig("reps must be at least 1".into()));
    }
    let estimator = Estimator::for_molecule(config.molecule);
    let exact = exact_expectation(&config.theta, config.molecule, estimator.hamiltonian())?;
    config
        .cases
        .par_iter()
        .enumerate()
        .map(|(i, &(strategy, k))| {
            let evaluator = Evaluator::new(&estimator, strategy, config.budget, k, config.noise)?;
            let mut rng = SimRng::seed_from_u64(config.seed + i as u64);
            let mut values = Vec::with_capacity(config.reps);
            let mut shots = 0u64;
            for _ in 0..config.reps {
                let e = evaluator.evaluate(&config.theta, &mut rng)?;
                values.push(e.estimate.value);
                shots += e.estimate.total_shots;
            }
            let stats = empirical_stats(&values)?;
            Ok(DistributionReport {
                strategy,
                probe_shots: if strategy.uses_probe() { k } else { 0 },
                reps: config.reps,
                exact_energy: exact,
                mean: stats.mean,
                std: stats.std.unwrap_or(0.0),
                mean_shots: shots as f64 / config.reps as f64,
                histogram: Histogram::new(&values, config.bins),
            })
        })
        .collect()
}
