//! Trajectory-style error injection.
//!
//! Every channel is a stochastic unitary insertion, so the statevector stays
//! pure and normalized. With `p == 0` or every flag off, no random numbers are
//! drawn and results are bit-identical to the noise-free path.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{Circuit, GateQubits, Statevector};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseChannel {
    Gate,
    Reset,
    Phase,
    Measurement,
}

impl NoiseChannel {
    pub const ALL: [NoiseChannel; 4] = [
        NoiseChannel::Gate,
        NoiseChannel::Reset,
        NoiseChannel::Phase,
        NoiseChannel::Measurement,
    ];

    pub fn name(self) -> &'static str {
        match self {
            NoiseChannel::Gate => "gate",
            NoiseChannel::Reset => "reset",
            NoiseChannel::Phase => "phase",
            NoiseChannel::Measurement => "measurement",
        }
    }
}

impl fmt::Display for NoiseChannel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for NoiseChannel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "gate" => Ok(NoiseChannel::Gate),
            "reset" => Ok(NoiseChannel::Reset),
            "phase" => Ok(NoiseChannel::Phase),
            "measurement" | "meas" | "readout" => Ok(NoiseChannel::Measurement),
            _ => Err(Error::UnknownChannel(s.to_string())),
        }
    }
}

/// Error probability `p` shared by all enabled channels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseConfig {
    pub p: f64,
    pub gate_error: bool,
    pub reset_error: bool,
    pub phase_error: bool,
    pub measurement_error: bool,
    /// Shots sharing one noisy circuit execution; `None` means every shot of a
    /// clique evaluation shares a single execution.
    #[serde(default = "default_shots_per_execution")]
    pub shots_per_execution: Option<u64>,
}

fn default_shots_per_execution() -> Option<u64> {
    Some(1)
}

/// Sequential Bernoulli error sites of one trajectory, optionally with the
/// first firing site fixed in advance.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct ErrorSites {
    first: Option<usize>,
    next: usize,
}

impl ErrorSites {
    pub(crate) fn free() -> Self {
        Self::default()
    }

    fn fires<R: Rng + ?Sized>(&mut self, p: f64, rng: &mut R) -> bool {
        let i = self.next;
        self.next += 1;
        match self.first {
            Some(f) if i < f => false,
            Some(f) if i == f => true,
            _ => rng.random::<f64>() < p,
        }
    }
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self::none()
    }
}

impl NoiseConfig {
    pub fn none() -> Self {
        Self {
            p: 0.0,
            gate_error: false,
            reset_error: false,
            phase_error: false,
            measurement_error: false,
            shots_per_execution: default_shots_per_execution(),
        }
    }

    pub fn new(p: f64, channels: &[NoiseChannel]) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidProbability(p));
        }
        let has = |c| channels.contains(&c);
        Ok(Self {
            p,
            gate_error: has(NoiseChannel::Gate),
            reset_error: has(NoiseChannel::Reset),
            phase_error: has(NoiseChannel::Phase),
            measurement_error: has(NoiseChannel::Measurement),
            shots_per_execution: default_shots_per_execution(),
        })
    }

    /// Sets how many shots share one noisy execution (`None`: all of them).
    pub fn with_shots_per_execution(mut self, shots: Option<u64>) -> Result<Self> {
        if shots == Some(0) {
            return Err(Error::InvalidConfig("shots per execution must be at least 1".into()));
        }
        self.shots_per_execution = shots;
        Ok(self)
    }

    /// All four channels at probability `p`.
    pub fn all(p: f64) -> Result<Self> {
        Self::new(p, &NoiseChannel::ALL)
    }

    /// Parses a comma-separated channel list; `all` and `none` are accepted.
    pub fn parse_channels(list: &str) -> Result<Vec<NoiseChannel>> {
        match list.trim() {
            "" | "none" => Ok(Vec::new()),
            "all" => Ok(NoiseChannel::ALL.to_vec()),
            other => other.split(',').map(str::parse).collect(),
        }
    }

    pub fn channels(&self) -> Vec<NoiseChannel> {
        NoiseChannel::ALL
            .into_iter()
            .filter(|c| match c {
                NoiseChannel::Gate => self.gate_error,
                NoiseChannel::Reset => self.reset_error,
                NoiseChannel::Phase => self.phase_error,
                NoiseChannel::Measurement => self.measurement_error,
            })
            .collect()
    }

    /// True when state preparation is stochastic (gate, reset or phase errors).
    pub fn affects_state(&self) -> bool {
        self.p > 0.0 && (self.gate_error || self.reset_error || self.phase_error)
    }

    pub fn affects_readout(&self) -> bool {
        self.p > 0.0 && self.measurement_error
    }

    /// Number of Bernoulli error sites in one execution of `circuit`.
    pub fn error_sites(&self, circuit: &Circuit) -> usize {
        if !self.affects_state() {
            return 0;
        }
        let reset = if self.reset_error { circuit.qubits() } else { 0 };
        let per_qubit = usize::from(self.gate_error) + usize::from(self.phase_error);
        let touched: usize = circuit.gates().iter().map(|g| g.qubits().iter().count()).sum();
        reset + per_qubit * touched
    }

    /// Probability that an execution of `circuit` is error-free.
    pub fn clean_probability(&self, circuit: &Circuit) -> f64 {
        (1.0 - self.p).powi(self.error_sites(circuit) as i32)
    }

    /// Sites for a trajectory conditioned on at least one error among `sites`.
    pub(crate) fn faulty_sites<R: Rng + ?Sized>(&self, sites: usize, rng: &mut R) -> ErrorSites {
        let keep = 1.0 - self.p;
        let miss = keep.powi(sites as i32);
        let u: f64 = rng.random();
        let first = if keep <= 0.0 {
            0
        } else {
            // Inverse CDF of the truncated geometric first-error index.
            ((1.0 - u * (1.0 - miss)).ln() / keep.ln()).floor() as usize
        };
        ErrorSites {
            first: Some(first.min(sites.saturating_sub(1))),
            next: 0,
        }
    }

    pub(crate) fn at_reset<R: Rng + ?Sized>(&self, state: &mut Statevector, sites: &mut ErrorSites, rng: &mut R) {
        if !(self.reset_error && self.p > 0.0) {
            return;
        }
        for q in 0..state.qubits() {
            if sites.fires(self.p, rng) {
                state.apply_x(q);
            }
        }
    }

    pub(crate) fn after_gate<R: Rng + ?Sized>(
        &self,
        state: &mut Statevector,
        touched: GateQubits,
        sites: &mut ErrorSites,
        rng: &mut R,
    ) {
        if self.p <= 0.0 {
            return;
        }
        if self.gate_error {
            for q in touched.iter() {
                if sites.fires(self.p, rng) {
                    match rng.random_range(0..3u8) {
                        0 => state.apply_x(q),
                        1 => state.apply_y(q),
                        _ => state.apply_z(q),
                    }
                }
            }
        }
        if self.phase_error {
            for q in touched.iter() {
                if sites.fires(self.p, rng) {
                    state.apply_z(q);
                }
            }
        }
    }

    /// Outcome distribution after independent per-bit readout flips.
    ///
    /// Sampling from this distribution is equivalent to flipping each measured
    /// bit of each shot with probability `p`.
    pub(crate) fn readout_distribution(&self, probs: &[f64]) -> Vec<f64> {
        let mut out = probs.to_vec();
        if !self.affects_readout() {
            return out;
        }
        let qubits = probs.len().trailing_zeros() as usize;
        for q in 0..qubits {
            let m = 1usize << q;
            for b in 0..out.len() {
                if b & m == 0 {
                    let (a0, a1) = (out[b], out[b | m]);
                    out[b] = (1.0 - self.p) * a0 + self.p * a1;
                    out[b | m] = (1.0 - self.p) * a1 + self.p * a0;
                }
            }
        }
        out
    }
}
