//! Dense statevector simulation for small registers.

mod ansatz;
mod noise;
mod sampling;

pub use ansatz::{build_ansatz, exact_expectation, Molecule};
pub use noise::{NoiseChannel, NoiseConfig};
use noise::ErrorSites;
pub use sampling::{outcome_probabilities, sample_shots, ShotCounts};
pub(crate) use sampling::sample_one;

use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Reproducible random stream threaded through every stochastic operation.
pub type SimRng = ChaCha8Rng;

/// Gates supported by the simulator. Angles are in radians.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Gate {
    H(usize),
    X(usize),
    Sdg(usize),
    Rx(usize, f64),
    Ry(usize, f64),
    Rz(usize, f64),
    Cnot { control: usize, target: usize },
}

impl Gate {
    /// Qubits the gate acts on, in (control, target) order for CNOT.
    pub fn qubits(&self) -> GateQubits {
        match *self {
            Gate::H(q) | Gate::X(q) | Gate::Sdg(q) | Gate::Rx(q, _) | Gate::Ry(q, _) | Gate::Rz(q, _) => {
                GateQubits::One(q)
            }
            Gate::Cnot { control, target } => GateQubits::Two(control, target),
        }
    }

    fn validate(&self, qubits: usize) -> Result<()> {
        let check = |q: usize| {
            if q < qubits {
                Ok(())
            } else {
                Err(Error::QubitOutOfRange { index: q, qubits })
            }
        };
        match self.qubits() {
            GateQubits::One(q) => check(q),
            GateQubits::Two(c, t) => {
                check(c)?;
                check(t)?;
                if c == t {
                    return Err(Error::CnotSameQubit(c));
                }
                Ok(())
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GateQubits {
    One(usize),
    Two(usize, usize),
}

impl GateQubits {
    pub fn iter(self) -> impl Iterator<Item = usize> {
        let (a, b) = match self {
            GateQubits::One(q) => (q, None),
            GateQubits::Two(c, t) => (c, Some(t)),
        };
        std::iter::once(a).chain(b)
    }
}

/// An ordered gate list over a fixed register.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Circuit {
    qubits: usize,
    gates: Vec<Gate>,
}

impl Circuit {
    pub fn new(qubits: usize) -> Self {
        Self {
            qubits,
            gates: Vec::new(),
        }
    }

    pub fn from_gates(qubits: usize, gates: Vec<Gate>) -> Result<Self> {
        let mut c = Self::new(qubits);
        c.extend(gates)?;
        Ok(c)
    }

    pub fn push(&mut self, gate: Gate) -> Result<()> {
        gate.validate(self.qubits)?;
        self.gates.push(gate);
        Ok(())
    }

    pub fn extend(&mut self, gates: impl IntoIterator<Item = Gate>) -> Result<()> {
        for g in gates {
            self.push(g)?;
        }
        Ok(())
    }

    pub fn qubits(&self) -> usize {
        self.qubits
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }
}

/// Normalized amplitude vector of length `2^K`; bit `j` of an index is qubit `j`.
#[derive(Debug, Clone, PartialEq)]
pub struct Statevector {
    qubits: usize,
    amplitudes: Vec<Complex64>,
}

impl Statevector {
    /// `|0…0⟩`.
    pub fn zero(qubits: usize) -> Self {
        Self::basis(qubits, 0)
    }

    pub fn basis(qubits: usize, index: usize) -> Self {
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); 1 << qubits];
        amplitudes[index] = Complex64::new(1.0, 0.0);
        Self { qubits, amplitudes }
    }

    pub fn from_amplitudes(amplitudes: Vec<Complex64>) -> Result<Self> {
        let len = amplitudes.len();
        if !len.is_power_of_two() {
            return Err(Error::DimensionMismatch {
                expected: len.next_power_of_two(),
                actual: len,
            });
        }
        Ok(Self {
            qubits: len.trailing_zeros() as usize,
            amplitudes,
        })
    }

    pub fn qubits(&self) -> usize {
        self.qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(Complex64::norm_sqr).sum()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amplitudes.iter().map(Complex64::norm_sqr).collect()
    }

    pub fn apply_gate(&mut self, gate: &Gate) -> Result<()> {
        gate.validate(self.qubits)?;
        match *gate {
            Gate::H(q) => {
                let s = Complex64::new(FRAC_1_SQRT_2, 0.0);
                self.apply_single(q, [[s, s], [s, -s]]);
            }
            Gate::X(q) => self.apply_x(q),
            Gate::Sdg(q) => self.apply_phase(q, -Complex64::i()),
            Gate::Rx(q, angle) => {
                let (c, s) = half_angle(angle);
                let c = Complex64::new(c, 0.0);
                let mis = Complex64::new(0.0, -s);
                self.apply_single(q, [[c, mis], [mis, c]]);
            }
            Gate::Ry(q, angle) => {
                let (c, s) = half_angle(angle);
                let (c, s) = (Complex64::new(c, 0.0), Complex64::new(s, 0.0));
                self.apply_single(q, [[c, -s], [s, c]]);
            }
            Gate::Rz(q, angle) => {
                let zero = Complex64::new(0.0, 0.0);
                let lo = Complex64::from_polar(1.0, -0.5 * angle);
                let hi = Complex64::from_polar(1.0, 0.5 * angle);
                self.apply_single(q, [[lo, zero], [zero, hi]]);
            }
            Gate::Cnot { control, target } => {
                let (cm, tm) = (1usize << control, 1usize << target);
                for b in 0..self.amplitudes.len() {
                    if b & cm != 0 && b & tm == 0 {
                        self.amplitudes.swap(b, b | tm);
                    }
                }
            }
        }
        Ok(())
    }

    /// Applies `gates` noise-free.
    pub fn apply_gates<'a>(&mut self, gates: impl IntoIterator<Item = &'a Gate>) -> Result<()> {
        for g in gates {
            self.apply_gate(g)?;
        }
        Ok(())
    }

    /// Applies the circuit, inserting stochastic Pauli errors after each gate
    /// according to `noise`.
    pub fn apply_circuit<R: Rng + ?Sized>(&mut self, circuit: &Circuit, noise: &NoiseConfig, rng: &mut R) -> Result<()> {
        self.apply_circuit_with(circuit, noise, &mut ErrorSites::free(), rng)
    }

    fn apply_circuit_with<R: Rng + ?Sized>(
        &mut self,
        circuit: &Circuit,
        noise: &NoiseConfig,
        sites: &mut ErrorSites,
        rng: &mut R,
    ) -> Result<()> {
        if circuit.qubits() != self.qubits {
            return Err(Error::DimensionMismatch {
                expected: self.qubits,
                actual: circuit.qubits(),
            });
        }
        for gate in circuit.gates() {
            self.apply_gate(gate)?;
            noise.after_gate(self, gate.qubits(), sites, rng);
        }
        Ok(())
    }

    pub(crate) fn apply_x(&mut self, q: usize) {
        let m = 1usize << q;
        for b in 0..self.amplitudes.len() {
            if b & m == 0 {
                self.amplitudes.swap(b, b | m);
            }
        }
    }

    pub(crate) fn apply_y(&mut self, q: usize) {
        let m = 1usize << q;
        for b in 0..self.amplitudes.len() {
            if b & m == 0 {
                let a0 = self.amplitudes[b];
                let a1 = self.amplitudes[b | m];
                // Y|0⟩ = i|1⟩, Y|1⟩ = −i|0⟩
                self.amplitudes[b] = -Complex64::i() * a1;
                self.amplitudes[b | m] = Complex64::i() * a0;
            }
        }
    }

    pub(crate) fn apply_z(&mut self, q: usize) {
        self.apply_phase(q, Complex64::new(-1.0, 0.0));
    }

    fn apply_phase(&mut self, q: usize, phase: Complex64) {
        let m = 1usize << q;
        for (b, amp) in self.amplitudes.iter_mut().enumerate() {
            if b & m != 0 {
                *amp *= phase;
            }
        }
    }

    fn apply_single(&mut self, q: usize, u: [[Complex64; 2]; 2]) {
        let m = 1usize << q;
        for b in 0..self.amplitudes.len() {
            if b & m == 0 {
                let a0 = self.amplitudes[b];
                let a1 = self.amplitudes[b | m];
                self.amplitudes[b] = u[0][0] * a0 + u[0][1] * a1;
                self.amplitudes[b | m] = u[1][0] * a0 + u[1][1] * a1;
            }
        }
    }
}

fn half_angle(angle: f64) -> (f64, f64) {
    let half = 0.5 * angle;
    (half.cos(), half.sin())
}

/// Applies `circuit` to `state` and returns the result.
pub fn apply_circuit<R: Rng + ?Sized>(
    state: &Statevector,
    circuit: &Circuit,
    noise: &NoiseConfig,
    rng: &mut R,
) -> Result<Statevector> {
    let mut out = state.clone();
    out.apply_circuit(circuit, noise, rng)?;
    Ok(out)
}

/// Runs `circuit` from `|0…0⟩`, with reset errors at preparation when enabled.
pub fn prepare_state<R: Rng + ?Sized>(circuit: &Circuit, noise: &NoiseConfig, rng: &mut R) -> Result<Statevector> {
    run_from_zero(circuit, noise, ErrorSites::free(), rng)
}

/// Like [`prepare_state`], conditioned on at least one error firing.
///
/// With no error sites this is the noise-free state.
pub fn prepare_faulty_state<R: Rng + ?Sized>(circuit: &Circuit, noise: &NoiseConfig, rng: &mut R) -> Result<Statevector> {
    let sites = noise.error_sites(circuit);
    if sites == 0 {
        return run_from_zero(circuit, &NoiseConfig::none(), ErrorSites::free(), rng);
    }
    let forced = noise.faulty_sites(sites, rng);
    run_from_zero(circuit, noise, forced, rng)
}

fn run_from_zero<R: Rng + ?Sized>(
    circuit: &Circuit,
    noise: &NoiseConfig,
    mut sites: ErrorSites,
    rng: &mut R,
) -> Result<Statevector> {
    let mut state = Statevector::zero(circuit.qubits());
    noise.at_reset(&mut state, &mut sites, rng);
    state.apply_circuit_with(circuit, noise, &mut sites, rng)?;
    Ok(state)
}
