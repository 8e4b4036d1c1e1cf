//! Clique sampling and the Monte-Carlo energy estimator.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hamiltonian::QubitHamiltonian;
use crate::pauli::{basis_rotation, Clique};
use crate::allocation::ShotAllocation;
use crate::sim::{
    build_ansatz, outcome_probabilities, prepare_faulty_state, prepare_state, sample_shots, Circuit, Gate, Molecule,
    NoiseConfig, ShotCounts, Statevector,
};
use rand_distr::{Binomial, Distribution};

/// Empirical mean and (unbiased) standard deviation of clique samples.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CliqueStats {
    pub mean: f64,
    /// `None` with fewer than two samples.
    pub std: Option<f64>,
    pub samples_used: u64,
}

/// Mean and `k − 1` standard deviation of a sample list.
pub fn empirical_stats(samples: &[f64]) -> Result<CliqueStats> {
    if samples.is_empty() {
        return Err(Error::EmptySamples);
    }
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let std = (samples.len() >= 2).then(|| {
        let ss: f64 = samples.iter().map(|x| (x - mean) * (x - mean)).sum();
        (ss / (n - 1.0)).sqrt()
    });
    Ok(CliqueStats {
        mean,
        std,
        samples_used: samples.len() as u64,
    })
}

/// Same as [`empirical_stats`] for samples given as an outcome histogram.
pub fn stats_from_counts(outcome_energies: &[f64], counts: &ShotCounts) -> Result<CliqueStats> {
    let n = counts.total();
    if n == 0 {
        return Err(Error::EmptySamples);
    }
    let nf = n as f64;
    let pairs = || {
        counts
            .counts()
            .iter()
            .zip(outcome_energies)
            .filter(|(c, _)| **c > 0)
            .map(|(c, e)| (*c as f64, *e))
    };
    let mean = pairs().map(|(c, e)| c * e).sum::<f64>() / nf;
    let std = (n >= 2).then(|| {
        let ss: f64 = pairs().map(|(c, e)| c * (e - mean) * (e - mean)).sum();
        (ss / (nf - 1.0)).sqrt()
    });
    Ok(CliqueStats {
        mean,
        std,
        samples_used: n,
    })
}

/// Draws one outcome from rotated-basis `probs` and returns the clique energy.
pub fn clique_sample<R: Rng + ?Sized>(probs: &[f64], clique: &Clique, rng: &mut R) -> f64 {
    let outcome = crate::sim::sample_one(probs, rng);
    clique.outcome_energy(outcome)
}

/// Exact per-shot mean and standard deviation of a clique under `probs`.
pub fn exact_clique_moments(probs: &[f64], outcome_energies: &[f64]) -> (f64, f64) {
    let mean: f64 = probs.iter().zip(outcome_energies).map(|(p, e)| p * e).sum();
    let second: f64 = probs.iter().zip(outcome_energies).map(|(p, e)| p * e * e).sum();
    (mean, (second - mean * mean).max(0.0).sqrt())
}

/// `Σ σ_i² / N_i`.
pub fn estimator_variance(stds: &[f64], shots: &[u64]) -> Result<f64> {
    if stds.len() != shots.len() {
        return Err(Error::AllocationMismatch {
            expected: stds.len(),
            actual: shots.len(),
        });
    }
    stds.iter()
        .zip(shots)
        .map(|(s, &n)| {
            if n == 0 {
                Err(Error::ZeroShots)
            } else {
                Ok(s * s / n as f64)
            }
        })
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CliqueEstimate {
    pub clique: usize,
    pub mean: f64,
    pub shots: u64,
}

/// `Ē(θ) = g₀ + Σ Ē_i(θ)` with its shot accounting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyEstimate {
    pub value: f64,
    pub per_clique: Vec<CliqueEstimate>,
    pub total_shots: u64,
}

struct CliqueCircuit {
    rotation: Vec<Gate>,
    energies: Vec<f64>,
}

/// Binds a molecule's ansatz to a Hamiltonian and its measurement circuits.
pub struct Estimator {
    molecule: Molecule,
    hamiltonian: QubitHamiltonian,
    cliques: Vec<CliqueCircuit>,
}

/// Rotated-basis outcome distributions for one evaluation.
///
/// Holds one noisy execution per clique, or the noise-free distribution plus
/// the clique circuits when executions are re-run per shot batch.
#[derive(Debug, Clone)]
pub struct PreparedCliques {
    probs: Vec<Vec<f64>>,
    batched: Option<Vec<Circuit>>,
}

impl PreparedCliques {
    pub fn probabilities(&self, clique: usize) -> &[f64] {
        &self.probs[clique]
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }
}

impl Estimator {
    pub fn new(molecule: Molecule, hamiltonian: QubitHamiltonian) -> Result<Self> {
        if hamiltonian.qubits() != molecule.qubits() {
            return Err(Error::DimensionMismatch {
                expected: molecule.qubits(),
                actual: hamiltonian.qubits(),
            });
        }
        let cliques = hamiltonian
            .cliques()
            .iter()
            .map(|c| CliqueCircuit {
                rotation: basis_rotation(c),
                energies: c.outcome_energies(),
            })
            .collect();
        Ok(Self {
            molecule,
            hamiltonian,
            cliques,
        })
    }

    /// Estimator for a built-in molecule and its pinned Hamiltonian.
    pub fn for_molecule(molecule: Molecule) -> Self {
        Self::new(molecule, molecule.hamiltonian()).expect("built-in molecule")
    }

    pub fn molecule(&self) -> Molecule {
        self.molecule
    }

    pub fn hamiltonian(&self) -> &QubitHamiltonian {
        &self.hamiltonian
    }

    pub fn clique_count(&self) -> usize {
        self.cliques.len()
    }

    pub fn outcome_energies(&self, clique: usize) -> &[f64] {
        &self.cliques[clique].energies
    }

    /// Executes the ansatz plus each clique's rotation.
    ///
    /// When `noise` leaves the state untouched the ansatz runs a single time and
    /// no random numbers are consumed. With batched executions the noisy runs
    /// are deferred to [`Estimator::sample`].
    pub fn prepare<R: Rng + ?Sized>(&self, theta: &[f64], noise: &NoiseConfig, rng: &mut R) -> Result<PreparedCliques> {
        let ansatz = build_ansatz(self.molecule, theta)?;
        let batched = if noise.affects_state() && noise.shots_per_execution.is_some() {
            Some(
                self.cliques
                    .iter()
                    .map(|c| {
                        let mut circuit = ansatz.clone();
                        circuit.extend(c.rotation.iter().copied())?;
                        Ok(circuit)
                    })
                    .collect::<Result<Vec<_>>>()?,
            )
        } else {
            None
        };
        let probs = if noise.affects_state() && batched.is_none() {
            self.cliques
                .iter()
                .map(|c| {
                    let mut circuit = ansatz.clone();
                    circuit.extend(c.rotation.iter().copied())?;
                    Ok(prepare_state(&circuit, noise, rng)?.probabilities())
                })
                .collect::<Result<Vec<_>>>()?
        } else {
            let state = ideal(&ansatz)?;
            self.cliques
                .iter()
                .map(|c| outcome_probabilities(&state, &c.rotation))
                .collect::<Result<Vec<_>>>()?
        };
        Ok(PreparedCliques { probs, batched })
    }

    /// Samples `shots` from clique `clique` of a prepared evaluation.
    ///
    /// With batched executions, error-free batches are drawn together from the
    /// noise-free distribution and every faulty batch gets its own trajectory,
    /// conditioned on at least one error.
    pub fn sample<R: Rng + ?Sized>(
        &self,
        prepared: &PreparedCliques,
        clique: usize,
        shots: u64,
        noise: &NoiseConfig,
        rng: &mut R,
    ) -> Result<ShotCounts> {
        let ideal = prepared.probabilities(clique);
        let (Some(circuits), Some(batch)) = (&prepared.batched, noise.shots_per_execution) else {
            return sample_shots(ideal, shots, noise, rng);
        };
        if shots == 0 {
            return sample_shots(ideal, 0, noise, rng);
        }
        let circuit = &circuits[clique];
        let clean = noise.clean_probability(circuit);
        let (full, partial) = (shots / batch, shots % batch);
        let draw = |n: u64, rng: &mut R| -> u64 {
            if n == 0 || clean >= 1.0 {
                n
            } else if clean <= 0.0 {
                0
            } else {
                Binomial::new(n, clean).expect("probability in (0, 1)").sample(rng)
            }
        };
        let full_clean = draw(full, rng);
        let partial_clean = draw(u64::from(partial > 0), rng);
        let mut counts = sample_shots(ideal, full_clean * batch + partial_clean * partial, noise, rng)?;
        let faulty = (0..full - full_clean)
            .map(|_| batch)
            .chain((partial_clean == 0 && partial > 0).then_some(partial));
        for size in faulty {
            let state = prepare_faulty_state(circuit, noise, rng)?;
            counts.merge(&sample_shots(&state.probabilities(), size, noise, rng)?);
        }
        Ok(counts)
    }

    /// Assembles `Ē` from one histogram per clique.
    pub fn combine(&self, counts: &[ShotCounts]) -> Result<EnergyEstimate> {
        if counts.len() != self.cliques.len() {
            return Err(Error::AllocationMismatch {
                expected: self.cliques.len(),
                actual: counts.len(),
            });
        }
        let mut value = self.hamiltonian.identity_offset();
        let mut per_clique = Vec::with_capacity(counts.len());
        let mut total_shots = 0;
        for (i, (c, circuit)) in counts.iter().zip(&self.cliques).enumerate() {
            if c.total() == 0 {
                return Err(Error::ZeroShots);
            }
            let stats = stats_from_counts(&circuit.energies, c)?;
            value += stats.mean;
            total_shots += c.total();
            per_clique.push(CliqueEstimate {
                clique: i,
                mean: stats.mean,
                shots: c.total(),
            });
        }
        Ok(EnergyEstimate {
            value,
            per_clique,
            total_shots,
        })
    }

    /// Draws `allocation.per_clique[i]` shots for every clique and sums the means.
    pub fn estimate_energy<R: Rng + ?Sized>(
        &self,
        theta: &[f64],
        allocation: &ShotAllocation,
        noise: &NoiseConfig,
        rng: &mut R,
    ) -> Result<EnergyEstimate> {
        if allocation.per_clique.len() != self.cliques.len() {
            return Err(Error::AllocationMismatch {
                expected: self.cliques.len(),
                actual: allocation.per_clique.len(),
            });
        }
        if allocation.per_clique.contains(&0) {
            return Err(Error::ZeroShots);
        }
        let prepared = self.prepare(theta, noise, rng)?;
        let counts = allocation
            .per_clique
            .iter()
            .enumerate()
            .map(|(i, &n)| self.sample(&prepared, i, n, noise, rng))
            .collect::<Result<Vec<_>>>()?;
        self.combine(&counts)
    }

    /// Exact per-clique `(mean, σ)` for a noise-free state.
    pub fn exact_moments(&self, theta: &[f64]) -> Result<Vec<(f64, f64)>> {
        let state = ideal(&build_ansatz(self.molecule, theta)?)?;
        self.cliques
            .iter()
            .map(|c| Ok(exact_clique_moments(&outcome_probabilities(&state, &c.rotation)?, &c.energies)))
            .collect()
    }
}

fn ideal(circuit: &Circuit) -> Result<Statevector> {
    let mut state = Statevector::zero(circuit.qubits());
    state.apply_gates(circuit.gates())?;
    Ok(state)
}
