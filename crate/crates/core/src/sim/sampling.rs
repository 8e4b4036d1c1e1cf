use std::collections::BTreeMap;

use rand::Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use super::{Gate, NoiseConfig, Statevector};
use crate::error::Result;
use crate::pauli::format_outcome;

/// Outcome histogram of a batch of shots, indexed by outcome.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShotCounts {
    qubits: usize,
    counts: Vec<u64>,
    total: u64,
}

impl ShotCounts {
    pub fn empty(qubits: usize) -> Self {
        Self {
            qubits,
            counts: vec![0; 1 << qubits],
            total: 0,
        }
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn count(&self, outcome: usize) -> u64 {
        self.counts[outcome]
    }

    /// Dense per-outcome counts.
    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    /// Non-zero entries keyed by bitstring.
    pub fn to_map(&self) -> BTreeMap<String, u64> {
        self.counts
            .iter()
            .enumerate()
            .filter(|(_, c)| **c > 0)
            .map(|(b, c)| (format_outcome(b, self.qubits), *c))
            .collect()
    }

    /// Adds another batch over the same register.
    pub fn merge(&mut self, other: &ShotCounts) {
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        self.total += other.total;
    }
}

/// Rotates a copy of `state` by `rotation` (noise-free) and returns `|amplitude|²`.
pub fn outcome_probabilities(state: &Statevector, rotation: &[Gate]) -> Result<Vec<f64>> {
    let mut rotated = state.clone();
    rotated.apply_gates(rotation)?;
    Ok(rotated.probabilities())
}

/// Draws `n` shots from `probs`, applying readout flips when enabled.
///
/// The multinomial is sampled as a chain of conditional binomials, so the cost
/// is `O(2^K)` regardless of `n`.
pub fn sample_shots<R: Rng + ?Sized>(probs: &[f64], n: u64, noise: &NoiseConfig, rng: &mut R) -> Result<ShotCounts> {
    let qubits = probs.len().trailing_zeros() as usize;
    let mut out = ShotCounts::empty(qubits);
    if n == 0 {
        return Ok(out);
    }
    let probs = noise.readout_distribution(probs);
    let mut remaining = n;
    let mut mass: f64 = probs.iter().sum();
    let last = probs.len() - 1;
    for (b, &p) in probs.iter().enumerate() {
        if remaining == 0 {
            break;
        }
        let drawn = if b == last {
            remaining
        } else {
            let q = if mass > 0.0 { (p / mass).clamp(0.0, 1.0) } else { 0.0 };
            if q >= 1.0 {
                remaining
            } else if q <= 0.0 {
                0
            } else {
                Binomial::new(remaining, q)
                    .expect("probability clamped to [0, 1]")
                    .sample(rng)
            }
        };
        out.counts[b] = drawn;
        remaining -= drawn;
        mass -= p;
    }
    out.total = n;
    Ok(out)
}

/// Draws a single outcome index from `probs` by inverse CDF.
pub(crate) fn sample_one<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> usize {
    let total: f64 = probs.iter().sum();
    let u = rng.random::<f64>() * total;
    let mut acc = 0.0;
    for (b, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return b;
        }
    }
    probs.iter().rposition(|p| *p > 0.0).unwrap_or(probs.len() - 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::SimRng;
    use num_complex::Complex64;
    use rand::SeedableRng;
    use std::f64::consts::FRAC_1_SQRT_2;

    #[test]
    fn basis_state_probabilities() {
        let p = outcome_probabilities(&Statevector::basis(2, 1), &[]).unwrap();
        assert_eq!(p, vec![0.0, 1.0, 0.0, 0.0]);
    }

    #[test]
    fn bell_state_probabilities() {
        let z = Complex64::new(0.0, 0.0);
        let h = Complex64::new(FRAC_1_SQRT_2, 0.0);
        let bell = Statevector::from_amplitudes(vec![h, z, z, h]).unwrap();
        let p = outcome_probabilities(&bell, &[]).unwrap();
        for (a, b) in p.iter().zip([0.5, 0.0, 0.0, 0.5]) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn rotation_applied_before_readout() {
        let p = outcome_probabilities(&Statevector::zero(1), &[Gate::H(0)]).unwrap();
        assert!((p[0] - 0.5).abs() < 1e-15 && (p[1] - 0.5).abs() < 1e-15);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn deterministic_distribution() {
        let mut rng = SimRng::seed_from_u64(0);
        let c = sample_shots(&[1.0, 0.0, 0.0, 0.0], 100, &NoiseConfig::none(), &mut rng).unwrap();
        assert_eq!(c.to_map(), BTreeMap::from([("00".to_string(), 100)]));
    }

    #[test]
    fn zero_shots_is_empty() {
        let mut rng = SimRng::seed_from_u64(0);
        let c = sample_shots(&[0.5, 0.5], 0, &NoiseConfig::none(), &mut rng).unwrap();
        assert!(c.to_map().is_empty());
        assert_eq!(c.total(), 0);
    }

    #[test]
    fn fair_coin_frequency() {
        // 3σ of a binomial proportion at n = 10⁶ is 0.0015.
        let mut rng = SimRng::seed_from_u64(2024);
        let c = sample_shots(&[0.5, 0.5], 1_000_000, &NoiseConfig::none(), &mut rng).unwrap();
        let f = c.count(0) as f64 / 1e6;
        assert!((f - 0.5).abs() < 0.002, "frequency {f}");
    }

    #[test]
    fn single_draws_follow_distribution() {
        let mut rng = SimRng::seed_from_u64(5);
        let probs = [0.1, 0.0, 0.6, 0.3];
        let mut hist = [0u32; 4];
        for _ in 0..100_000 {
            hist[sample_one(&probs, &mut rng)] += 1;
        }
        assert_eq!(hist[1], 0);
        for (h, p) in hist.iter().zip(probs) {
            assert!((*h as f64 / 1e5 - p).abs() < 0.006);
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn counts_sum_to_total(
                raw in proptest::collection::vec(0.0f64..1.0, 8),
                n in 0u64..5000,
                seed in any::<u64>(),
                p in 0.0f64..0.5,
            ) {
                let s: f64 = raw.iter().sum::<f64>() + 1e-12;
                let probs: Vec<f64> = raw.iter().map(|x| x / s).collect();
                let noise = NoiseConfig::all(p).unwrap();
                let c = sample_shots(&probs, n, &noise, &mut SimRng::seed_from_u64(seed)).unwrap();
                prop_assert_eq!(c.counts().iter().sum::<u64>(), n);
                prop_assert_eq!(c.total(), n);
            }
        }
    }
}
