//! Shot-budgeted VQE loop: probe, allocate, estimate, differentiate, update.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::allocation::{allocate, allocate_uniform, AllocationInputs, ShotAllocation, Strategy};
use crate::error::{Error, Result};
use crate::measurement::{stats_from_counts, EnergyEstimate, Estimator};
use crate::sim::{exact_expectation, Molecule, NoiseConfig, SimRng};

pub const DEFAULT_LR: f64 = 0.1;
pub const DEFAULT_FD_STEP: f64 = 0.02;

/// `lr₀ · ½(cos(πt/T) + 1)`.
pub fn cosine_lr(t: usize, total: usize, lr0: f64) -> f64 {
    if total == 0 {
        return lr0;
    }
    lr0 * 0.5 * ((PI * t as f64 / total as f64).cos() + 1.0)
}

/// Central differences `(f(θ + h·e_j) − f(θ − h·e_j)) / 2h`, evaluated `+` then `−` per component.
pub fn fd_gradient<F>(mut objective: F, theta: &[f64], h: f64) -> Result<Vec<f64>>
where
    F: FnMut(&[f64]) -> Result<f64>,
{
    if h.is_nan() || h <= 0.0 {
        return Err(Error::InvalidConfig(format!("finite-difference step must be positive, got {h}")));
    }
    let mut probe = theta.to_vec();
    let mut grad = Vec::with_capacity(theta.len());
    for j in 0..theta.len() {
        probe[j] = theta[j] + h;
        let plus = objective(&probe)?;
        probe[j] = theta[j] - h;
        let minus = objective(&probe)?;
        probe[j] = theta[j];
        grad.push((plus - minus) / (2.0 * h));
    }
    Ok(grad)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub t: u64,
}

impl AdamState {
    pub fn new(dim: usize) -> Self {
        Self {
            m: vec![0.0; dim],
            v: vec![0.0; dim],
            t: 0,
        }
    }
}

/// One bias-corrected Adam update; returns the new state and `Δθ`.
pub fn adam_step(state: &AdamState, grad: &[f64], lr: f64, cfg: &AdamConfig) -> Result<(AdamState, Vec<f64>)> {
    if grad.len() != state.m.len() {
        return Err(Error::DimensionMismatch {
            expected: state.m.len(),
            actual: grad.len(),
        });
    }
    let t = state.t + 1;
    let c1 = 1.0 - cfg.beta1.powi(t as i32);
    let c2 = 1.0 - cfg.beta2.powi(t as i32);
    let mut next = AdamState {
        m: Vec::with_capacity(grad.len()),
        v: Vec::with_capacity(grad.len()),
        t,
    };
    let mut delta = Vec::with_capacity(grad.len());
    for ((&g, &m), &v) in grad.iter().zip(&state.m).zip(&state.v) {
        let m = cfg.beta1 * m + (1.0 - cfg.beta1) * g;
        let v = cfg.beta2 * v + (1.0 - cfg.beta2) * g * g;
        delta.push(-lr * (m / c1) / ((v / c2).sqrt() + cfg.epsilon));
        next.m.push(m);
        next.v.push(v);
    }
    Ok((next, delta))
}

/// What the optimizer sees as the energy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Objective {
    /// Shot-sampled estimate under the configured strategy.
    Sampled,
    /// Infinite-shot, noise-free expectation.
    Exact,
}

/// Which evaluations contribute to the shot counters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShotAccounting {
    ObjectiveOnly,
    AllEvaluations,
}

impl fmt::Display for ShotAccounting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ShotAccounting::ObjectiveOnly => "objective_only",
            ShotAccounting::AllEvaluations => "all_evaluations",
        })
    }
}

impl FromStr for ShotAccounting {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "objective" | "objective_only" => Ok(ShotAccounting::ObjectiveOnly),
            "all" | "all_evaluations" => Ok(ShotAccounting::AllEvaluations),
            _ => Err(Error::InvalidConfig(format!("unknown shot accounting mode `{s}`"))),
        }
    }
}

/// One energy evaluation with its allocation.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub estimate: EnergyEstimate,
    pub allocation: ShotAllocation,
    /// Probe standard deviations, for strategies that take a probe.
    pub probe_stds: Option<Vec<f64>>,
}

/// Runs the probe/allocate/sample cycle for a fixed strategy and budget.
pub struct Evaluator<'a> {
    estimator: &'a Estimator,
    strategy: Strategy,
    budget: u64,
    probe_shots: u64,
    noise: NoiseConfig,
    amplitudes: Vec<f64>,
}

impl<'a> Evaluator<'a> {
    pub fn new(estimator: &'a Estimator, strategy: Strategy, budget: u64, probe_shots: u64, noise: NoiseConfig) -> Result<Self> {
        let m = estimator.clique_count() as u64;
        let required = if strategy.uses_probe() { m * probe_shots.max(1) } else { m };
        if budget < required {
            return Err(Error::BudgetTooSmall { budget, required });
        }
        Ok(Self {
            estimator,
            strategy,
            budget,
            probe_shots,
            noise,
            amplitudes: estimator.hamiltonian().clique_amplitudes(),
        })
    }

    pub fn strategy(&self) -> Strategy {
        self.strategy
    }

    /// Probe samples are pooled into the clique means.
    pub fn evaluate<R: Rng + ?Sized>(&self, theta: &[f64], rng: &mut R) -> Result<Evaluation> {
        let m = self.estimator.clique_count();
        let prepared = self.estimator.prepare(theta, &self.noise, rng)?;
        let (allocation, mut counts, probe_stds) = if self.strategy.uses_probe() {
            let probes = (0..m)
                .map(|i| self.estimator.sample(&prepared, i, self.probe_shots, &self.noise, rng))
                .collect::<Result<Vec<_>>>()?;
            let stds = probes
                .iter()
                .enumerate()
                .map(|(i, c)| Ok(stats_from_counts(self.estimator.outcome_energies(i), c)?.std.unwrap_or(0.0)))
                .collect::<Result<Vec<_>>>()?;
            let inputs = AllocationInputs::new(self.budget, self.probe_shots, stds.clone(), self.amplitudes.clone());
            (allocate(self.strategy, &inputs)?, probes, Some(stds))
        } else {
            let allocation = match self.strategy {
                Strategy::Uniform => allocate_uniform(self.budget, m)?,
                _ => allocate(
                    self.strategy,
                    &AllocationInputs::new(self.budget, 0, Vec::new(), self.amplitudes.clone()),
                )?,
            };
            let empty = (0..m)
                .map(|_| crate::sim::ShotCounts::empty(self.estimator.hamiltonian().qubits()))
                .collect();
            (allocation, empty, None)
        };
        for (i, c) in counts.iter_mut().enumerate() {
            let extra = allocation.per_clique[i].saturating_sub(c.total());
            let drawn = self.estimator.sample(&prepared, i, extra, &self.noise, rng)?;
            c.merge(&drawn);
        }
        let estimate = self.estimator.combine(&counts)?;
        Ok(Evaluation {
            estimate,
            allocation,
            probe_stds,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VqeConfig {
    pub molecule: Molecule,
    pub strategy: Strategy,
    pub budget: u64,
    pub probe_shots: u64,
    pub iterations: usize,
    pub theta0: Vec<f64>,
    pub lr0: f64,
    pub fd_step: f64,
    pub adam: AdamConfig,
    pub noise: NoiseConfig,
    pub seed: u64,
    pub accounting: ShotAccounting,
    pub objective: Objective,
}

impl VqeConfig {
    /// Molecule defaults for budget, probe size, iterations and `θ₀`.
    pub fn new(molecule: Molecule, strategy: Strategy) -> Self {
        Self {
            molecule,
            strategy,
            budget: molecule.default_budget(),
            probe_shots: molecule.default_probe_shots(),
            iterations: molecule.default_iterations(),
            theta0: molecule.default_theta0(),
            lr0: DEFAULT_LR,
            fd_step: DEFAULT_FD_STEP,
            adam: AdamConfig::default(),
            noise: NoiseConfig::none(),
            seed: 0,
            accounting: ShotAccounting::ObjectiveOnly,
            objective: Objective::Sampled,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::InvalidConfig("iterations must be at least 1".into()));
        }
        if self.fd_step.is_nan() || self.fd_step <= 0.0 {
            return Err(Error::InvalidConfig("finite-difference step must be positive".into()));
        }
        if self.theta0.len() != self.molecule.parameter_count() {
            return Err(Error::WrongParameterCount {
                expected: self.molecule.parameter_count(),
                actual: self.theta0.len(),
            });
        }
        if !self.lr0.is_finite() || self.lr0 < 0.0 {
            return Err(Error::InvalidConfig("learning rate must be finite and non-negative".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub theta: Vec<f64>,
    pub energy_estimate: f64,
    pub exact_energy: f64,
    pub lr: f64,
    pub per_clique: Vec<u64>,
    pub shots_iteration: u64,
    pub shots_cumulative: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VqeTrace {
    pub records: Vec<IterationRecord>,
    pub final_theta: Vec<f64>,
}

impl VqeTrace {
    pub fn final_record(&self) -> Option<&IterationRecord> {
        self.records.last()
    }

    /// First record whose exact energy is within `tolerance` of `ground`.
    pub fn first_converged(&self, ground: f64, tolerance: f64) -> Option<&IterationRecord> {
        self.records.iter().find(|r| r.exact_energy <= ground + tolerance)
    }
}

/// Runs against the molecule's built-in Hamiltonian.
pub fn run_vqe(config: &VqeConfig) -> Result<VqeTrace> {
    let estimator = Estimator::for_molecule(config.molecule);
    run_vqe_with(config, &estimator)
}

pub fn run_vqe_with(config: &VqeConfig, estimator: &Estimator) -> Result<VqeTrace> {
    config.validate()?;
    let mut rng = SimRng::seed_from_u64(config.seed);
    let evaluator = match config.objective {
        Objective::Sampled => Some(Evaluator::new(
            estimator,
            config.strategy,
            config.budget,
            config.probe_shots,
            config.noise,
        )?),
        Objective::Exact => None,
    };
    let h = estimator.hamiltonian();
    let exact = |theta: &[f64]| exact_expectation(theta, config.molecule, h);
    let m = estimator.clique_count();
    let total = config.iterations;

    let mut theta = config.theta0.clone();
    let mut adam = AdamState::new(theta.len());
    let mut cumulative = 0u64;
    let mut records = Vec::with_capacity(total);
    for t in 1..=total {
        let exact_energy = exact(&theta)?;
        let (energy_estimate, per_clique, mut shots) = match &evaluator {
            Some(ev) => {
                let e = ev.evaluate(&theta, &mut rng)?;
                (e.estimate.value, e.allocation.per_clique, e.estimate.total_shots)
            }
            None => (exact_energy, vec![0; m], 0),
        };
        let mut gradient_shots = 0u64;
        let grad = match &evaluator {
            Some(ev) => fd_gradient(
                |p| {
                    let e = ev.evaluate(p, &mut rng)?;
                    gradient_shots += e.estimate.total_shots;
                    Ok(e.estimate.value)
                },
                &theta,
                config.fd_step,
            )?,
            None => fd_gradient(exact, &theta, config.fd_step)?,
        };
        if config.accounting == ShotAccounting::AllEvaluations {
            shots += gradient_shots;
        }
        cumulative += shots;
        let lr = cosine_lr(t, total, config.lr0);
        records.push(IterationRecord {
            iteration: t,
            theta: theta.clone(),
            energy_estimate,
            exact_energy,
            lr,
            per_clique,
            shots_iteration: shots,
            shots_cumulative: cumulative,
        });
        let (next, delta) = adam_step(&adam, &grad, lr, &config.adam)?;
        adam = next;
        for (p, d) in theta.iter_mut().zip(delta) {
            *p += d;
        }
    }
    Ok(VqeTrace {
        records,
        final_theta: theta,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::exact_ground_energy;
    use approx::assert_abs_diff_eq;

    #[test]
    fn cosine_schedule_examples() {
        assert_eq!(cosine_lr(0, 300, 0.1), 0.1);
        assert_abs_diff_eq!(cosine_lr(300, 300, 0.1), 0.0, epsilon = 1e-17);
        assert_abs_diff_eq!(cosine_lr(150, 300, 0.1), 0.05, epsilon = 1e-15);
    }

    #[test]
    fn fd_gradient_examples() {
        let g = fd_gradient(|t| Ok(t[0] * t[0]), &[1.0], 0.02).unwrap();
        assert_abs_diff_eq!(g[0], 2.0, epsilon = 1e-12);
        let g = fd_gradient(|_| Ok(3.5), &[0.1, -0.4, 2.0], 0.02).unwrap();
        assert_eq!(g, vec![0.0; 3]);
        let g = fd_gradient(|t| Ok(t[0].sin()), &[0.0], 0.02).unwrap();
        assert_abs_diff_eq!(g[0], 0.999933334666654, epsilon = 1e-14);
        assert!(fd_gradient(|_| Ok(0.0), &[0.0], 0.0).is_err());
    }

    #[test]
    fn fd_gradient_matches_fine_difference() {
        for m in [Molecule::H2, Molecule::LiH] {
            let h = m.hamiltonian();
            let f = |t: &[f64]| exact_expectation(t, m, &h);
            for i in 0..10 {
                let theta: Vec<f64> = (0..m.parameter_count())
                    .map(|j| ((i * 31 + j * 17) as f64 * 0.37).sin() * 2.5)
                    .collect();
                let coarse = fd_gradient(f, &theta, 0.02).unwrap();
                let fine = fd_gradient(f, &theta, 1e-6).unwrap();
                for (a, b) in coarse.iter().zip(&fine) {
                    assert!((a - b).abs() < 5e-4, "{a} vs {b}");
                }
            }
        }
    }

    #[test]
    fn adam_examples() {
        let cfg = AdamConfig::default();
        let (s, d) = adam_step(&AdamState::new(1), &[1.0], 0.1, &cfg).unwrap();
        assert_abs_diff_eq!(d[0], -0.1 / (1.0 + 1e-8), epsilon = 1e-15);
        assert_eq!(s.t, 1);
        let (_, d) = adam_step(&AdamState::new(3), &[0.0; 3], 0.1, &cfg).unwrap();
        assert_eq!(d, vec![0.0; 3]);
        let g = [0.3, -2.0];
        let (_, a) = adam_step(&AdamState::new(2), &g, 0.05, &cfg).unwrap();
        let (_, b) = adam_step(&AdamState::new(2), &g.map(|x| -x), 0.05, &cfg).unwrap();
        assert_eq!(a, b.iter().map(|x| -x).collect::<Vec<_>>());
        assert!(adam_step(&AdamState::new(2), &[1.0], 0.1, &cfg).is_err());
    }

    #[test]
    fn adam_second_moment_nonnegative() {
        let cfg = AdamConfig::default();
        let mut s = AdamState::new(2);
        for i in 0..50 {
            let g = [(i as f64).sin(), -(i as f64 * 0.3).cos()];
            s = adam_step(&s, &g, 0.1, &cfg).unwrap().0;
            assert!(s.v.iter().all(|v| *v >= 0.0));
        }
    }

    #[test]
    fn exact_objective_reaches_h2_ground_state() {
        let mut cfg = VqeConfig::new(Molecule::H2, Strategy::Uniform);
        cfg.objective = Objective::Exact;
        let trace = run_vqe(&cfg).unwrap();
        let e0 = exact_ground_energy(&Molecule::H2.hamiltonian()).unwrap();
        assert!(trace.final_record().unwrap().exact_energy - e0 < 1.6e-3);
        assert!((trace.final_theta[0] - 0.91).abs() < 0.05);
    }

    #[test]
    fn uniform_accounting_is_budget_per_iteration() {
        let mut cfg = VqeConfig::new(Molecule::H2, Strategy::Uniform);
        cfg.iterations = 40;
        cfg.seed = 5;
        let trace = run_vqe(&cfg).unwrap();
        for r in &trace.records {
            assert_eq!(r.shots_cumulative, 600 * r.iteration as u64);
            assert_eq!(r.per_clique.iter().sum::<u64>(), r.shots_iteration);
        }
        cfg.accounting = ShotAccounting::AllEvaluations;
        let trace = run_vqe(&cfg).unwrap();
        assert_eq!(trace.records[0].shots_iteration, 3 * 600);
    }

    #[test]
    fn per_iteration_shot_bounds() {
        let e0 = exact_ground_energy(&Molecule::H2.hamiltonian()).unwrap();
        for strategy in Strategy::ALL {
            let mut cfg = VqeConfig::new(Molecule::H2, strategy);
            cfg.iterations = 30;
            cfg.seed = 17;
            cfg.noise = NoiseConfig::all(0.001).unwrap();
            let trace = run_vqe(&cfg).unwrap();
            assert_eq!(trace.records.len(), 30);
            for r in &trace.records {
                match strategy {
                    Strategy::Vpsr => assert!(r.shots_iteration <= 600),
                    _ => assert_eq!(r.shots_iteration, 600),
                }
                if strategy.uses_probe() {
                    assert!(r.per_clique.iter().all(|&n| n >= 50));
                }
                assert!(r.exact_energy >= e0 - 1e-9);
            }
        }
    }

    #[test]
    fn lih_vpsr_respects_budget() {
        let mut cfg = VqeConfig::new(Molecule::LiH, Strategy::Vpsr);
        cfg.iterations = 5;
        cfg.noise = NoiseConfig::all(0.0001).unwrap();
        let trace = run_vqe(&cfg).unwrap();
        assert!(trace.records.iter().all(|r| r.shots_iteration <= 18_000));
    }

    #[test]
    fn runs_are_deterministic() {
        let mut cfg = VqeConfig::new(Molecule::H2, Strategy::Vpsr);
        cfg.iterations = 25;
        cfg.seed = 99;
        cfg.noise = NoiseConfig::all(0.01).unwrap();
        assert_eq!(run_vqe(&cfg).unwrap(), run_vqe(&cfg).unwrap());
        let mut other = cfg.clone();
        other.seed = 100;
        assert_ne!(run_vqe(&cfg).unwrap(), run_vqe(&other).unwrap());
    }

    #[test]
    fn invalid_configs_rejected() {
        let mut cfg = VqeConfig::new(Molecule::H2, Strategy::Vmsa);
        cfg.iterations = 0;
        assert!(run_vqe(&cfg).is_err());
        let mut cfg = VqeConfig::new(Molecule::H2, Strategy::Vmsa);
        cfg.theta0 = vec![0.0; 2];
        assert!(matches!(run_vqe(&cfg), Err(Error::WrongParameterCount { .. })));
        let mut cfg = VqeConfig::new(Molecule::H2, Strategy::Vmsa);
        cfg.budget = 100;
        assert!(matches!(run_vqe(&cfg), Err(Error::BudgetTooSmall { .. })));
    }
}
