//! Parameterized circuits for the built-in molecules.

use std::f64::consts::FRAC_PI_2;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{Circuit, Gate, Statevector};
use crate::error::{Error, Result};
use crate::hamiltonian::QubitHamiltonian;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Molecule {
    H2,
    #[serde(rename = "lih")]
    LiH,
}

impl Molecule {
    pub fn name(self) -> &'static str {
        match self {
            Molecule::H2 => "h2",
            Molecule::LiH => "lih",
        }
    }

    pub fn qubits(self) -> usize {
        match self {
            Molecule::H2 => 2,
            Molecule::LiH => 4,
        }
    }

    pub fn parameter_count(self) -> usize {
        match self {
            Molecule::H2 => 1,
            Molecule::LiH => 8,
        }
    }

    pub fn hamiltonian(self) -> QubitHamiltonian {
        QubitHamiltonian::builtin(self.name()).expect("built-in molecule")
    }

    /// Default iteration count for a VQE run.
    pub fn default_iterations(self) -> usize {
        match self {
            Molecule::H2 => 300,
            Molecule::LiH => 1600,
        }
    }

    pub fn default_theta0(self) -> Vec<f64> {
        match self {
            Molecule::H2 => vec![-2.0],
            Molecule::LiH => vec![0.0; 8],
        }
    }

    pub fn default_budget(self) -> u64 {
        match self {
            Molecule::H2 => 600,
            Molecule::LiH => 18_000,
        }
    }

    pub fn default_probe_shots(self) -> u64 {
        match self {
            Molecule::H2 => 50,
            Molecule::LiH => 100,
        }
    }
}

impl fmt::Display for Molecule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Molecule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "h2" => Ok(Molecule::H2),
            "lih" => Ok(Molecule::LiH),
            _ => Err(Error::UnknownMolecule(s.to_string())),
        }
    }
}

/// Ansatz circuit including reference-state preparation.
///
/// H₂: `|01⟩` followed by `exp(−i(θ/2)·X₁Y₀)`, compiled as a basis change
/// (H on qubit 1, Rx(π/2) on qubit 0), the CNOT–Rz(θ)–CNOT ladder, and the
/// inverse basis change. The minimum sits at θ ≈ 0.94.
///
/// LiH: `|0000⟩` followed by two layers of `Ry(θ)` on every qubit and a
/// CNOT chain 0→1→2→3.
pub fn build_ansatz(molecule: Molecule, theta: &[f64]) -> Result<Circuit> {
    let expected = molecule.parameter_count();
    if theta.len() != expected {
        return Err(Error::WrongParameterCount {
            expected,
            actual: theta.len(),
        });
    }
    let mut c = Circuit::new(molecule.qubits());
    match molecule {
        Molecule::H2 => {
            let ladder = Gate::Cnot { control: 1, target: 0 };
            c.extend([
                Gate::X(0),
                Gate::H(1),
                Gate::Rx(0, FRAC_PI_2),
                ladder,
                Gate::Rz(0, theta[0]),
                ladder,
                Gate::H(1),
                Gate::Rx(0, -FRAC_PI_2),
            ])?;
        }
        Molecule::LiH => {
            for layer in theta.chunks(4) {
                for (q, &angle) in layer.iter().enumerate() {
                    c.push(Gate::Ry(q, angle))?;
                }
                for q in 0..3 {
                    c.push(Gate::Cnot { control: q, target: q + 1 })?;
                }
            }
        }
    }
    Ok(c)
}

/// Noise-free ansatz state.
pub(crate) fn ideal_state(molecule: Molecule, theta: &[f64]) -> Result<Statevector> {
    let circuit = build_ansatz(molecule, theta)?;
    let mut state = Statevector::zero(circuit.qubits());
    state.apply_gates(circuit.gates())?;
    Ok(state)
}

/// Infinite-shot, noise-free `⟨ψ(θ)|H|ψ(θ)⟩`.
pub fn exact_expectation(theta: &[f64], molecule: Molecule, h: &QubitHamiltonian) -> Result<f64> {
    let state = ideal_state(molecule, theta)?;
    if h.qubits() != state.qubits() {
        return Err(Error::DimensionMismatch {
            expected: state.qubits(),
            actual: h.qubits(),
        });
    }
    h.expectation(state.amplitudes())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::exact_ground_energy;
    use approx::assert_abs_diff_eq;
    use num_complex::Complex64;

    #[test]
    fn h2_reference_preserved_at_zero() {
        let s = ideal_state(Molecule::H2, &[0.0]).unwrap();
        let expected = Statevector::basis(2, 0b01);
        for (a, b) in s.amplitudes().iter().zip(expected.amplitudes()) {
            assert_abs_diff_eq!((a - b).norm(), 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn h2_energy_at_reference() {
        // ⟨Z₀⟩ = −1, ⟨Z₁⟩ = +1 on |01⟩: g₀ − g₁ + g₂ − g₃.
        let h = Molecule::H2.hamiltonian();
        let e = exact_expectation(&[0.0], Molecule::H2, &h).unwrap();
        assert_abs_diff_eq!(e, -0.5597 - 0.1615 - 0.0166 - 0.4148, epsilon = 1e-12);
        assert_abs_diff_eq!(e, -1.1526, epsilon = 1e-12);
    }

    #[test]
    fn h2_near_ground_at_published_angle() {
        let h = Molecule::H2.hamiltonian();
        let e0 = exact_ground_energy(&h).unwrap();
        let e = exact_expectation(&[0.91], Molecule::H2, &h).unwrap();
        assert!(e - e0 < 1.6e-3, "gap {}", e - e0);
    }

    #[test]
    fn h2_circuit_is_the_xy_exponential() {
        // Compare against cos(θ/2)|01⟩ − i·sin(θ/2)·X₁Y₀|01⟩ = cos|01⟩ − sin|10⟩.
        for theta in [-2.0, -0.3, 0.5, 1.7] {
            let s = ideal_state(Molecule::H2, &[theta]).unwrap();
            let (c, sn) = ((theta / 2.0_f64).cos(), (theta / 2.0_f64).sin());
            let expected = [0.0, c, -sn, 0.0];
            for (a, b) in s.amplitudes().iter().zip(expected) {
                assert_abs_diff_eq!((a - Complex64::new(b, 0.0)).norm(), 0.0, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn lih_reference_energy() {
        // |0000⟩ gives g₀ plus every Z-type coefficient.
        let h = Molecule::LiH.hamiltonian();
        let expected = h.identity_offset()
            + h.terms()
                .filter(|t| t.string.is_diagonal())
                .map(|t| t.coefficient)
                .sum::<f64>();
        let e = exact_expectation(&[0.0; 8], Molecule::LiH, &h).unwrap();
        assert_abs_diff_eq!(e, expected, epsilon = 1e-12);
        assert_abs_diff_eq!(e, -6.7698132, epsilon = 1e-9);
    }

    #[test]
    fn wrong_parameter_count() {
        assert!(matches!(
            build_ansatz(Molecule::LiH, &[0.0; 3]),
            Err(Error::WrongParameterCount { expected: 8, actual: 3 })
        ));
        assert!(build_ansatz(Molecule::H2, &[]).is_err());
    }

    #[test]
    fn variational_floor_holds() {
        for m in [Molecule::H2, Molecule::LiH] {
            let h = m.hamiltonian();
            let e0 = exact_ground_energy(&h).unwrap();
            for i in 0..50 {
                let theta: Vec<f64> = (0..m.parameter_count())
                    .map(|j| ((i * 7 + j * 13) as f64 * 0.61).sin() * 3.0)
                    .collect();
                assert!(exact_expectation(&theta, m, &h).unwrap() >= e0 - 1e-12);
            }
        }
    }
}
