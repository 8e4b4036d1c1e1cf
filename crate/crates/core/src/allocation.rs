//! Shot-allocation strategies across measurement cliques.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default lower clamp applied to estimated standard deviations.
pub const SIGMA_FLOOR: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    Uniform,
    Vmsa,
    Vpsr,
    Absa,
}

impl Strategy {
    pub const ALL: [Strategy; 4] = [Strategy::Uniform, Strategy::Vmsa, Strategy::Vpsr, Strategy::Absa];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::Uniform => "uniform",
            Strategy::Vmsa => "vmsa",
            Strategy::Vpsr => "vpsr",
            Strategy::Absa => "absa",
        }
    }

    /// Whether the strategy needs per-clique variance probes.
    pub fn uses_probe(self) -> bool {
        matches!(self, Strategy::Vmsa | Strategy::Vpsr)
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "uniform" => Ok(Strategy::Uniform),
            "vmsa" => Ok(Strategy::Vmsa),
            "vpsr" => Ok(Strategy::Vpsr),
            "absa" => Ok(Strategy::Absa),
            _ => Err(Error::UnknownStrategy(s.to_string())),
        }
    }
}

/// Integer shots per clique for one energy evaluation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShotAllocation {
    pub per_clique: Vec<u64>,
    /// Probe shots per clique already contained in `per_clique`.
    pub sampling_shots: u64,
    pub strategy: Strategy,
}

impl ShotAllocation {
    /// A hand-picked allocation, labelled uniform with no probe.
    pub fn fixed(per_clique: Vec<u64>) -> Self {
        Self {
            per_clique,
            sampling_shots: 0,
            strategy: Strategy::Uniform,
        }
    }

    pub fn total(&self) -> u64 {
        self.per_clique.iter().sum()
    }

    pub fn cliques(&self) -> usize {
        self.per_clique.len()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AllocationInputs {
    pub budget: u64,
    pub probe_shots: u64,
    pub stds: Vec<f64>,
    pub amplitudes: Vec<f64>,
    /// Clamp for `stds`; `0.0` disables it.
    pub sigma_floor: f64,
}

impl AllocationInputs {
    pub fn new(budget: u64, probe_shots: u64, stds: Vec<f64>, amplitudes: Vec<f64>) -> Self {
        Self {
            budget,
            probe_shots,
            stds,
            amplitudes,
            sigma_floor: SIGMA_FLOOR,
        }
    }

    pub fn with_sigma_floor(mut self, floor: f64) -> Self {
        self.sigma_floor = floor;
        self
    }

    fn floored_stds(&self) -> Vec<f64> {
        self.stds.iter().map(|s| s.max(self.sigma_floor)).collect()
    }

    fn spare(&self) -> Result<u64> {
        let m = self.stds.len() as u64;
        if m == 0 {
            return Err(Error::EmptyInput);
        }
        let required = m * self.probe_shots;
        if self.budget < required {
            return Err(Error::BudgetTooSmall {
                budget: self.budget,
                required,
            });
        }
        Ok(self.budget - required)
    }
}

/// Floor division with the remainder handed out one per clique from index 0.
pub fn allocate_uniform(budget: u64, cliques: usize) -> Result<ShotAllocation> {
    if cliques == 0 {
        return Err(Error::EmptyInput);
    }
    let m = cliques as u64;
    if budget < m {
        return Err(Error::BudgetTooSmall { budget, required: m });
    }
    let (q, r) = (budget / m, budget % m);
    Ok(ShotAllocation {
        per_clique: (0..m).map(|i| q + u64::from(i < r)).collect(),
        sampling_shots: 0,
        strategy: Strategy::Uniform,
    })
}

/// `η = (Σσ)² / (m·Σσ²)`.
pub fn vpsr_eta(stds: &[f64]) -> Result<f64> {
    let sum: f64 = stds.iter().sum();
    let sq: f64 = stds.iter().map(|s| s * s).sum();
    if stds.is_empty() {
        return Err(Error::EmptyInput);
    }
    if sq <= 0.0 {
        return Err(Error::ZeroDeviation);
    }
    Ok(sum * sum / (stds.len() as f64 * sq))
}

/// Smallest total shot count reaching variance `delta`: `(Σσ)² / δ`.
pub fn vpsr_min_total(stds: &[f64], delta: f64) -> Result<f64> {
    if delta.is_nan() || delta <= 0.0 {
        return Err(Error::NonPositiveThreshold(delta));
    }
    let sum: f64 = stds.iter().sum();
    Ok(sum * sum / delta)
}

/// `k + (σ_i/Σσ)(N − mk)` per clique, before rounding.
pub fn vmsa_targets(inputs: &AllocationInputs) -> Result<Vec<f64>> {
    proportional_targets(inputs, 1.0)
}

/// `k + η(σ_i/Σσ)(N − mk)` per clique, before rounding.
pub fn vpsr_targets(inputs: &AllocationInputs) -> Result<Vec<f64>> {
    let eta = vpsr_eta(&inputs.floored_stds())?;
    proportional_targets(inputs, eta)
}

/// `N·(g′_i)^{2/3} / Σ(g′)^{2/3}` per clique.
pub fn absa_targets(budget: u64, amplitudes: &[f64]) -> Result<Vec<f64>> {
    if amplitudes.is_empty() {
        return Err(Error::EmptyInput);
    }
    let weights: Vec<f64> = amplitudes.iter().map(|g| g.abs().powf(2.0 / 3.0)).collect();
    let total: f64 = weights.iter().sum();
    if total <= 0.0 {
        return Err(Error::ZeroAmplitudes);
    }
    Ok(weights.iter().map(|w| budget as f64 * w / total).collect())
}

fn proportional_targets(inputs: &AllocationInputs, scale: f64) -> Result<Vec<f64>> {
    let spare = inputs.spare()? as f64;
    let stds = inputs.floored_stds();
    let sum: f64 = stds.iter().sum();
    if sum <= 0.0 {
        return Err(Error::ZeroDeviation);
    }
    let k = inputs.probe_shots as f64;
    Ok(stds.iter().map(|s| k + scale * s / sum * spare).collect())
}

pub fn allocate_vmsa(inputs: &AllocationInputs) -> Result<ShotAllocation> {
    let targets = vmsa_targets(inputs)?;
    Ok(ShotAllocation {
        per_clique: integerize(&targets, Some(inputs.budget)),
        sampling_shots: inputs.probe_shots,
        strategy: Strategy::Vmsa,
    })
}

/// Total never exceeds the budget; unused shots are not redistributed.
pub fn allocate_vpsr(inputs: &AllocationInputs) -> Result<ShotAllocation> {
    let targets = vpsr_targets(inputs)?;
    let cap = (targets.iter().sum::<f64>().round() as u64).min(inputs.budget);
    Ok(ShotAllocation {
        per_clique: integerize(&targets, Some(cap)),
        sampling_shots: inputs.probe_shots,
        strategy: Strategy::Vpsr,
    })
}

/// Amplitude-proportional split; takes no probe shots.
pub fn allocate_absa(inputs: &AllocationInputs) -> Result<ShotAllocation> {
    let targets = absa_targets(inputs.budget, &inputs.amplitudes)?;
    Ok(ShotAllocation {
        per_clique: integerize(&targets, Some(inputs.budget)),
        sampling_shots: 0,
        strategy: Strategy::Absa,
    })
}

/// Dispatches on `strategy`; uniform uses `stds.len()` as the clique count.
pub fn allocate(strategy: Strategy, inputs: &AllocationInputs) -> Result<ShotAllocation> {
    match strategy {
        Strategy::Uniform => allocate_uniform(inputs.budget, inputs.stds.len().max(inputs.amplitudes.len())),
        Strategy::Vmsa => allocate_vmsa(inputs),
        Strategy::Vpsr => allocate_vpsr(inputs),
        Strategy::Absa => allocate_absa(inputs),
    }
}

/// Largest-remainder rounding.
///
/// Sums to `cap` (default: the rounded fractional sum). Every positive share
/// receives at least one shot while the cap allows; ties go to the lower index.
pub fn integerize(fractional: &[f64], cap: Option<u64>) -> Vec<u64> {
    let total = cap.unwrap_or_else(|| fractional.iter().map(|f| f.max(0.0)).sum::<f64>().round() as u64);
    let mut out: Vec<u64> = fractional.iter().map(|f| f.max(0.0).floor() as u64).collect();
    for (o, f) in out.iter_mut().zip(fractional) {
        if *o == 0 && *f > 0.0 {
            *o = 1;
        }
    }
    let assigned: u64 = out.iter().sum();
    let remainder = |i: usize| fractional[i].max(0.0) - fractional[i].max(0.0).floor();
    if assigned < total {
        let mut order: Vec<usize> = (0..out.len()).collect();
        // Stable sort keeps lower indices first among equal remainders.
        order.sort_by(|&a, &b| remainder(b).total_cmp(&remainder(a)));
        let mut left = total - assigned;
        while left > 0 && !order.is_empty() {
            for &i in &order {
                if left == 0 {
                    break;
                }
                out[i] += 1;
                left -= 1;
            }
        }
    } else if assigned > total {
        let mut excess = assigned - total;
        while excess > 0 {
            // Take from the largest entry, highest index first among ties.
            let Some(i) = (0..out.len()).rev().max_by_key(|&i| out[i]).filter(|&i| out[i] > 0) else {
                break;
            };
            out[i] -= 1;
            excess -= 1;
        }
    }
    out
}
