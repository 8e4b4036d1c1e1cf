//! Pauli strings, qubit-wise commutativity and clique grouping.
//!
//! Qubit `j` is factor `j` of a [`PauliString`], the least-significant bit of
//! an outcome index, and the rightmost character of the text form. So
//! `"ZI"` is `Z₁ ⊗ I₀` and outcome index `1` renders as `"01"`.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sim::Gate;

/// Single-qubit Pauli factor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub fn as_char(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }

    pub fn from_char(c: char) -> Result<Self> {
        match c {
            'I' => Ok(Pauli::I),
            'X' => Ok(Pauli::X),
            'Y' => Ok(Pauli::Y),
            'Z' => Ok(Pauli::Z),
            other => Err(Error::InvalidPauliChar(other)),
        }
    }

    pub fn is_identity(self) -> bool {
        self == Pauli::I
    }
}

/// Tensor product of single-qubit Paulis; `factors[j]` acts on qubit `j`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PauliString {
    factors: Vec<Pauli>,
}

impl PauliString {
    /// Builds a string from factors indexed by qubit (qubit 0 first).
    pub fn from_factors(factors: Vec<Pauli>) -> Self {
        Self { factors }
    }

    pub fn identity(qubits: usize) -> Self {
        Self {
            factors: vec![Pauli::I; qubits],
        }
    }

    pub fn qubits(&self) -> usize {
        self.factors.len()
    }

    pub fn factor(&self, qubit: usize) -> Pauli {
        self.factors[qubit]
    }

    pub fn factors(&self) -> &[Pauli] {
        &self.factors
    }

    pub fn is_identity(&self) -> bool {
        self.factors.iter().all(|p| p.is_identity())
    }

    /// Bit mask of the qubits carrying a non-identity factor.
    pub fn support_mask(&self) -> usize {
        self.factors
            .iter()
            .enumerate()
            .filter(|(_, p)| !p.is_identity())
            .fold(0, |mask, (j, _)| mask | (1 << j))
    }

    /// True when every factor is `I` or `Z`.
    pub fn is_diagonal(&self) -> bool {
        self.factors.iter().all(|p| matches!(p, Pauli::I | Pauli::Z))
    }

    /// Action on a computational basis state: `P|b⟩ = phase · |b'⟩`.
    pub fn apply_to_basis(&self, outcome: usize) -> (usize, Complex64) {
        let mut target = outcome;
        let mut phase = Complex64::new(1.0, 0.0);
        for (j, p) in self.factors.iter().enumerate() {
            let bit = (outcome >> j) & 1;
            match p {
                Pauli::I => {}
                Pauli::X => target ^= 1 << j,
                Pauli::Y => {
                    target ^= 1 << j;
                    phase *= if bit == 0 { Complex64::i() } else { -Complex64::i() };
                }
                Pauli::Z => {
                    if bit == 1 {
                        phase = -phase;
                    }
                }
            }
        }
        (target, phase)
    }

    /// The string obtained after rotating every non-identity factor to `Z`.
    pub fn z_pattern(&self) -> PauliString {
        PauliString {
            factors: self
                .factors
                .iter()
                .map(|p| if p.is_identity() { Pauli::I } else { Pauli::Z })
                .collect(),
        }
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for p in self.factors.iter().rev() {
            write!(f, "{}", p.as_char())?;
        }
        Ok(())
    }
}

impl FromStr for PauliString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut factors = s.chars().map(Pauli::from_char).collect::<Result<Vec<_>>>()?;
        factors.reverse();
        Ok(Self { factors })
    }
}

impl Serialize for PauliString {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for PauliString {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Parses a bitstring such as `"01"` into an outcome index (rightmost char is qubit 0).
pub fn parse_outcome(bits: &str) -> Result<usize> {
    if bits.is_empty() || bits.len() > usize::BITS as usize {
        return Err(Error::MalformedOutcome(bits.to_string()));
    }
    bits.chars().try_fold(0usize, |acc, c| match c {
        '0' => Ok(acc << 1),
        '1' => Ok((acc << 1) | 1),
        _ => Err(Error::MalformedOutcome(bits.to_string())),
    })
}

/// Renders an outcome index as a `qubits`-wide bitstring.
pub fn format_outcome(outcome: usize, qubits: usize) -> String {
    format!("{outcome:0qubits$b}")
}

/// Eigenvalue of a diagonal (`I`/`Z`) string on a computational-basis outcome.
pub fn pauli_eigenvalue(p: &PauliString, outcome: usize) -> Result<i8> {
    if !p.is_diagonal() {
        return Err(Error::UnrotatedPauli(p.to_string()));
    }
    Ok(parity_sign(p.support_mask() & outcome))
}

#[inline]
pub(crate) fn parity_sign(bits: usize) -> i8 {
    if bits.count_ones().is_multiple_of(2) {
        1
    } else {
        -1
    }
}

/// True iff at every position the factors are equal or one of them is `I`.
pub fn qubitwise_commute(a: &PauliString, b: &PauliString) -> Result<bool> {
    if a.qubits() != b.qubits() {
        return Err(Error::LengthMismatch {
            left: a.qubits(),
            right: b.qubits(),
        });
    }
    Ok(a
        .factors
        .iter()
        .zip(&b.factors)
        .all(|(x, y)| x == y || x.is_identity() || y.is_identity()))
}

/// A Pauli string with its real coefficient (Hartree).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedPauli {
    pub string: PauliString,
    pub coefficient: f64,
}

impl WeightedPauli {
    pub fn new(string: PauliString, coefficient: f64) -> Result<Self> {
        if !coefficient.is_finite() {
            return Err(Error::NonFiniteCoefficient(coefficient));
        }
        Ok(Self { string, coefficient })
    }

    pub fn parse(text: &str, coefficient: f64) -> Result<Self> {
        Self::new(text.parse()?, coefficient)
    }
}

/// Terms that share one measurement basis and one shot pool.
#[derive(Debug, Clone, PartialEq)]
pub struct Clique {
    members: Vec<WeightedPauli>,
    measured_basis: PauliString,
}

impl Clique {
    /// Validates pairwise qubit-wise commutativity and derives the measured basis.
    pub fn new(members: Vec<WeightedPauli>) -> Result<Self> {
        let first = members.first().ok_or(Error::EmptyClique)?;
        let qubits = first.string.qubits();
        let mut basis = vec![Pauli::I; qubits];
        for (i, a) in members.iter().enumerate() {
            if a.string.is_identity() {
                return Err(Error::IdentityInClique);
            }
            for b in &members[i + 1..] {
                if !qubitwise_commute(&a.string, &b.string)? {
                    return Err(Error::NotQubitwiseCommuting(
                        a.string.to_string(),
                        b.string.to_string(),
                    ));
                }
            }
            for (j, p) in a.string.factors().iter().enumerate() {
                if !p.is_identity() {
                    basis[j] = *p;
                }
            }
        }
        Ok(Self {
            members,
            measured_basis: PauliString::from_factors(basis),
        })
    }

    pub fn members(&self) -> &[WeightedPauli] {
        &self.members
    }

    pub fn measured_basis(&self) -> &PauliString {
        &self.measured_basis
    }

    pub fn qubits(&self) -> usize {
        self.measured_basis.qubits()
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// g′: the sum of absolute member coefficients.
    pub fn amplitude(&self) -> f64 {
        self.members.iter().map(|m| m.coefficient.abs()).sum()
    }

    /// Single-shot clique energy for a rotated-basis outcome.
    pub fn outcome_energy(&self, outcome: usize) -> f64 {
        self.members
            .iter()
            .map(|m| m.coefficient * f64::from(parity_sign(m.string.support_mask() & outcome)))
            .sum()
    }

    /// [`Clique::outcome_energy`] tabulated over all `2^K` outcomes.
    pub fn outcome_energies(&self) -> Vec<f64> {
        (0..1usize << self.qubits())
            .map(|b| self.outcome_energy(b))
            .collect()
    }

    fn accepts(&self, candidate: &PauliString) -> Result<bool> {
        for m in &self.members {
            if !qubitwise_commute(&m.string, candidate)? {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

/// Greedy first-fit partition into qubit-wise commuting cliques, in input order.
///
/// Identity-only terms must be removed by the caller.
pub fn group_into_cliques(terms: &[WeightedPauli]) -> Result<Vec<Clique>> {
    let mut cliques: Vec<Clique> = Vec::new();
    for term in terms {
        let mut placed = false;
        for clique in cliques.iter_mut() {
            if clique.accepts(&term.string)? {
                let mut members = clique.members.clone();
                members.push(term.clone());
                *clique = Clique::new(members)?;
                placed = true;
                break;
            }
        }
        if !placed {
            cliques.push(Clique::new(vec![term.clone()])?);
        }
    }
    Ok(cliques)
}

/// Gates that map the clique's measured basis onto the computational basis.
///
/// `X` needs `H`; `Y` needs `S†` followed by `H`. Qubits are visited from the
/// highest index down, matching the left-to-right reading of the text form.
pub fn basis_rotation(clique: &Clique) -> Vec<Gate> {
    let basis = clique.measured_basis();
    let mut gates = Vec::new();
    for q in (0..basis.qubits()).rev() {
        match basis.factor(q) {
            Pauli::X => gates.push(Gate::H(q)),
            Pauli::Y => {
                gates.push(Gate::Sdg(q));
                gates.push(Gate::H(q));
            }
            Pauli::Z | Pauli::I => {}
        }
    }
    gates
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ps(s: &str) -> PauliString {
        s.parse().unwrap()
    }

    #[test]
    fn text_form_puts_qubit_zero_last() {
        let p = ps("ZI");
        assert_eq!(p.factor(1), Pauli::Z);
        assert_eq!(p.factor(0), Pauli::I);
        assert_eq!(p.to_string(), "ZI");
        assert_eq!(parse_outcome("01").unwrap(), 1);
        assert_eq!(format_outcome(2, 2), "10");
        assert!("ZQ".parse::<PauliString>().is_err());
        assert!(parse_outcome("012").is_err());
    }

    #[test]
    fn eigenvalues_follow_z_parity() {
        let zz = ps("ZZ");
        assert_eq!(pauli_eigenvalue(&zz, parse_outcome("01").unwrap()).unwrap(), -1);
        assert_eq!(pauli_eigenvalue(&ps("IZ"), parse_outcome("10").unwrap()).unwrap(), 1);
        assert_eq!(pauli_eigenvalue(&zz, parse_outcome("11").unwrap()).unwrap(), 1);
    }

    #[test]
    fn eigenvalue_rejects_unrotated_strings() {
        assert!(matches!(
            pauli_eigenvalue(&ps("XZ"), 0),
            Err(Error::UnrotatedPauli(_))
        ));
    }

    #[test]
    fn qubitwise_commutation_examples() {
        assert!(qubitwise_commute(&ps("ZI"), &ps("ZZ")).unwrap());
        assert!(!qubitwise_commute(&ps("XX"), &ps("ZZ")).unwrap());
        assert!(qubitwise_commute(&ps("II"), &ps("YX")).unwrap());
        assert!(qubitwise_commute(&ps("Z"), &ps("ZZ")).is_err());
    }

    #[test]
    fn clique_rejects_conflicting_members() {
        let r = Clique::new(vec![
            WeightedPauli::parse("XI", 1.0).unwrap(),
            WeightedPauli::parse("ZI", 1.0).unwrap(),
        ]);
        assert!(matches!(r, Err(Error::NotQubitwiseCommuting(_, _))));
        assert!(matches!(Clique::new(vec![]), Err(Error::EmptyClique)));
        assert!(WeightedPauli::parse("Z", f64::NAN).is_err());
    }

    #[test]
    fn measured_basis_collects_factors() {
        let c = Clique::new(vec![
            WeightedPauli::parse("IZX", 1.0).unwrap(),
            WeightedPauli::parse("YZI", 1.0).unwrap(),
        ])
        .unwrap();
        assert_eq!(c.measured_basis().to_string(), "YZX");
    }

    #[test]
    fn h2_terms_group_into_three_cliques() {
        let terms: Vec<_> = [("IZ", 0.1615), ("ZI", -0.0166), ("ZZ", 0.4148), ("YY", 0.1226), ("XX", 0.1226)]
            .iter()
            .map(|(s, g)| WeightedPauli::parse(s, *g).unwrap())
            .collect();
        let cliques = group_into_cliques(&terms).unwrap();
        let rendered: Vec<Vec<String>> = cliques
            .iter()
            .map(|c| c.members().iter().map(|m| m.string.to_string()).collect())
            .collect();
        assert_eq!(rendered, vec![vec!["IZ", "ZI", "ZZ"], vec!["YY"], vec!["XX"]]);
    }

    #[test]
    fn single_term_is_singleton_clique() {
        let cliques = group_into_cliques(&[WeightedPauli::parse("XYZ", 0.3).unwrap()]).unwrap();
        assert_eq!(cliques.len(), 1);
        assert_eq!(cliques[0].len(), 1);
    }

    #[test]
    fn rotation_sequences_match_table() {
        let yy = Clique::new(vec![WeightedPauli::parse("YY", 1.0).unwrap()]).unwrap();
        assert_eq!(
            basis_rotation(&yy),
            vec![Gate::Sdg(1), Gate::H(1), Gate::Sdg(0), Gate::H(0)]
        );
        let z = Clique::new(vec![
            WeightedPauli::parse("ZZ", 1.0).unwrap(),
            WeightedPauli::parse("IZ", 1.0).unwrap(),
        ])
        .unwrap();
        assert!(basis_rotation(&z).is_empty());
        let mixed = Clique::new(vec![WeightedPauli::parse("XXYY", 1.0).unwrap()]).unwrap();
        assert_eq!(
            basis_rotation(&mixed),
            vec![
                Gate::H(3),
                Gate::H(2),
                Gate::Sdg(1),
                Gate::H(1),
                Gate::Sdg(0),
                Gate::H(0)
            ]
        );
    }

    #[test]
    fn outcome_energy_sums_weighted_eigenvalues() {
        let c = Clique::new(vec![WeightedPauli::parse("ZZ", 1.0).unwrap()]).unwrap();
        assert_eq!(c.outcome_energy(0b11), 1.0);
        let c = Clique::new(vec![WeightedPauli::parse("IZ", 0.5).unwrap()]).unwrap();
        assert_eq!(c.outcome_energy(0b10), 0.5);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn pauli_string(len: usize) -> impl Strategy<Value = PauliString> {
            proptest::collection::vec(
                prop_oneof![Just(Pauli::I), Just(Pauli::X), Just(Pauli::Y), Just(Pauli::Z)],
                len,
            )
            .prop_map(PauliString::from_factors)
        }

        fn diag_string(len: usize) -> impl Strategy<Value = PauliString> {
            proptest::collection::vec(prop_oneof![Just(Pauli::I), Just(Pauli::Z)], len)
                .prop_map(PauliString::from_factors)
        }

        proptest! {
            #[test]
            fn text_round_trip(p in (1usize..8).prop_flat_map(pauli_string)) {
                let back: PauliString = p.to_string().parse().unwrap();
                prop_assert_eq!(back, p);
            }

            #[test]
            fn commute_symmetric_and_reflexive((a, b) in (1usize..6).prop_flat_map(|k| (pauli_string(k), pauli_string(k)))) {
                prop_assert!(qubitwise_commute(&a, &a).unwrap());
                prop_assert_eq!(qubitwise_commute(&a, &b).unwrap(), qubitwise_commute(&b, &a).unwrap());
            }

            #[test]
            fn eigenvalue_parity_is_additive(
                (p, q, outcome) in (1usize..6).prop_flat_map(|k| (diag_string(k), diag_string(k), 0usize..(1 << k)))
            ) {
                let product = PauliString::from_factors(
                    p.factors().iter().zip(q.factors())
                        .map(|(a, b)| if a == b { Pauli::I } else { Pauli::Z })
                        .collect(),
                );
                prop_assert_eq!(
                    pauli_eigenvalue(&p, outcome).unwrap() * pauli_eigenvalue(&q, outcome).unwrap(),
                    pauli_eigenvalue(&product, outcome).unwrap()
                );
            }

            #[test]
            fn grouping_is_a_valid_partition(strings in (1usize..5).prop_flat_map(|k| proptest::collection::vec(pauli_string(k), 1..12))) {
                let terms: Vec<_> = strings
                    .into_iter()
                    .filter(|s| !s.is_identity())
                    .enumerate()
                    .map(|(i, s)| WeightedPauli::new(s, i as f64 + 1.0).unwrap())
                    .collect();
                let cliques = group_into_cliques(&terms).unwrap();
                let mut seen: Vec<f64> = cliques
                    .iter()
                    .flat_map(|c| c.members().iter().map(|m| m.coefficient))
                    .collect();
                seen.sort_by(f64::total_cmp);
                let expected: Vec<f64> = (1..=terms.len()).map(|i| i as f64).collect();
                prop_assert_eq!(seen, expected);
                for c in &cliques {
                    for a in c.members() {
                        for b in c.members() {
                            prop_assert!(qubitwise_commute(&a.string, &b.string).unwrap());
                        }
                    }
                }
            }
        }
    }
}
