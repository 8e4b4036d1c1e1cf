//! Shot-budgeted variational eigensolver experiments on small molecular Hamiltonians.
//!
//! Pauli terms are grouped into qubit-wise commuting cliques, each clique is
//! measured on a statevector simulator, and the per-evaluation shot budget is
//! split across cliques by one of four allocation strategies.

pub mod allocation;
pub mod error;
pub mod experiment;
pub mod hamiltonian;
pub mod measurement;
pub mod pauli;
pub mod sim;
pub mod vqe;

pub use allocation::{AllocationInputs, ShotAllocation, Strategy};
pub use error::{Error, Result};
pub use hamiltonian::{exact_ground_energy, QubitHamiltonian};
pub use measurement::{EnergyEstimate, Estimator};
pub use pauli::{Clique, Pauli, PauliString, WeightedPauli};
pub use sim::{Molecule, NoiseChannel, NoiseConfig, SimRng};
pub use vqe::{run_vqe, VqeConfig, VqeTrace};
pub use experiment::{run_trials, ExperimentConfig};
