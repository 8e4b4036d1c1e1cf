//! Qubit Hamiltonians as an identity offset plus measured cliques.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pauli::{group_into_cliques, Clique, PauliString, WeightedPauli};

/// Largest register for which a dense matrix is assembled.
pub const MAX_DENSE_QUBITS: usize = 12;

/// `H = g₀·I + Σ_cliques Σ_members g·P`.
#[derive(Debug, Clone, PartialEq)]
pub struct QubitHamiltonian {
    name: String,
    qubits: usize,
    identity_offset: f64,
    cliques: Vec<Clique>,
}

/// JSON form: `{"name", "qubits", "terms": [{"p", "g"}], "cliques": [[term index]]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HamiltonianDocument {
    pub name: String,
    pub qubits: usize,
    pub terms: Vec<TermDocument>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cliques: Option<Vec<Vec<usize>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TermDocument {
    pub p: String,
    pub g: f64,
}

impl QubitHamiltonian {
    /// Assembles a Hamiltonian from an already-partitioned clique list.
    pub fn new(name: impl Into<String>, qubits: usize, identity_offset: f64, cliques: Vec<Clique>) -> Result<Self> {
        if !identity_offset.is_finite() {
            return Err(Error::NonFiniteCoefficient(identity_offset));
        }
        for clique in &cliques {
            if clique.qubits() != qubits {
                return Err(Error::LengthMismatch {
                    left: qubits,
                    right: clique.qubits(),
                });
            }
        }
        Ok(Self {
            name: name.into(),
            qubits,
            identity_offset,
            cliques,
        })
    }

    /// One of the built-in molecules: `"h2"` or `"lih"`.
    pub fn builtin(name: &str) -> Result<Self> {
        match name.to_ascii_lowercase().as_str() {
            "h2" => Self::from_table("h2", 2, H2_TERMS, H2_CLIQUES),
            "lih" => Self::from_table("lih", 4, LIH_TERMS, LIH_CLIQUES),
            _ => Err(Error::UnknownMolecule(name.to_string())),
        }
    }

    fn from_table(name: &str, qubits: usize, terms: &[(&str, f64)], cliques: &[&[usize]]) -> Result<Self> {
        let doc = HamiltonianDocument {
            name: name.to_string(),
            qubits,
            terms: terms
                .iter()
                .map(|(p, g)| TermDocument {
                    p: p.to_string(),
                    g: *g,
                })
                .collect(),
            cliques: Some(cliques.iter().map(|c| c.to_vec()).collect()),
        };
        Self::from_document(&doc)
    }

    /// Parses a JSON document (see [`HamiltonianDocument`]).
    pub fn load(json: &str) -> Result<Self> {
        let doc: HamiltonianDocument = serde_json::from_str(json)?;
        Self::from_document(&doc)
    }

    pub fn from_document(doc: &HamiltonianDocument) -> Result<Self> {
        let mut offset = 0.0;
        let mut terms: Vec<Option<WeightedPauli>> = Vec::with_capacity(doc.terms.len());
        for t in &doc.terms {
            let term = WeightedPauli::parse(&t.p, t.g)?;
            if term.string.qubits() != doc.qubits {
                return Err(Error::LengthMismatch {
                    left: doc.qubits,
                    right: term.string.qubits(),
                });
            }
            if term.string.is_identity() {
                offset += term.coefficient;
                terms.push(None);
            } else {
                terms.push(Some(term));
            }
        }

        let cliques = match &doc.cliques {
            None => {
                let measured: Vec<WeightedPauli> = terms.into_iter().flatten().collect();
                group_into_cliques(&measured)?
            }
            Some(groups) => {
                let mut used = vec![false; terms.len()];
                let mut cliques = Vec::with_capacity(groups.len());
                for group in groups {
                    let mut members = Vec::with_capacity(group.len());
                    for &idx in group {
                        let term = terms.get(idx).ok_or_else(|| {
                            Error::InvalidCliqueAssignment(format!("term index {idx} out of range"))
                        })?;
                        let term = term.as_ref().ok_or(Error::IdentityInClique)?;
                        if std::mem::replace(&mut used[idx], true) {
                            return Err(Error::InvalidCliqueAssignment(format!(
                                "term index {idx} assigned twice"
                            )));
                        }
                        members.push(term.clone());
                    }
                    cliques.push(Clique::new(members)?);
                }
                if let Some(missing) = terms
                    .iter()
                    .zip(&used)
                    .position(|(t, u)| t.is_some() && !u)
                {
                    return Err(Error::InvalidCliqueAssignment(format!(
                        "term index {missing} not assigned to any clique"
                    )));
                }
                cliques
            }
        };
        Self::new(doc.name.clone(), doc.qubits, offset, cliques)
    }

    /// Serializes with the identity term first and explicit clique indices.
    pub fn to_document(&self) -> HamiltonianDocument {
        let mut terms = vec![TermDocument {
            p: PauliString::identity(self.qubits).to_string(),
            g: self.identity_offset,
        }];
        let mut groups = Vec::with_capacity(self.cliques.len());
        for clique in &self.cliques {
            let mut group = Vec::with_capacity(clique.len());
            for m in clique.members() {
                group.push(terms.len());
                terms.push(TermDocument {
                    p: m.string.to_string(),
                    g: m.coefficient,
                });
            }
            groups.push(group);
        }
        HamiltonianDocument {
            name: self.name.clone(),
            qubits: self.qubits,
            terms,
            cliques: Some(groups),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.to_document())?)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn qubits(&self) -> usize {
        self.qubits
    }

    pub fn identity_offset(&self) -> f64 {
        self.identity_offset
    }

    pub fn cliques(&self) -> &[Clique] {
        &self.cliques
    }

    /// Total number of terms M, including the identity term.
    pub fn term_count(&self) -> usize {
        1 + self.cliques.iter().map(Clique::len).sum::<usize>()
    }

    pub fn terms(&self) -> impl Iterator<Item = &WeightedPauli> {
        self.cliques.iter().flat_map(|c| c.members().iter())
    }

    /// g′ per clique.
    pub fn clique_amplitudes(&self) -> Vec<f64> {
        self.cliques.iter().map(Clique::amplitude).collect()
    }

    /// Same terms, every coefficient (and the offset) multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        let cliques = self
            .cliques
            .iter()
            .map(|c| {
                Clique::new(
                    c.members()
                        .iter()
                        .map(|m| WeightedPauli::new(m.string.clone(), m.coefficient * factor))
                        .collect::<Result<Vec<_>>>()?,
                )
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(self.name.clone(), self.qubits, self.identity_offset * factor, cliques)
    }

    /// Same terms with `shift` added to the identity coefficient.
    pub fn shifted(&self, shift: f64) -> Result<Self> {
        Self::new(self.name.clone(), self.qubits, self.identity_offset + shift, self.cliques.clone())
    }

    /// Dense `2^K × 2^K` matrix, identity offset included.
    pub fn matrix(&self) -> Result<DMatrix<Complex64>> {
        if self.qubits > MAX_DENSE_QUBITS {
            return Err(Error::DimensionOverflow {
                qubits: self.qubits,
                limit: MAX_DENSE_QUBITS,
            });
        }
        let dim = 1usize << self.qubits;
        let mut m = DMatrix::from_diagonal_element(dim, dim, Complex64::new(self.identity_offset, 0.0));
        for term in self.terms() {
            for col in 0..dim {
                let (row, phase) = term.string.apply_to_basis(col);
                m[(row, col)] += phase * term.coefficient;
            }
        }
        Ok(m)
    }

    /// `⟨ψ|H|ψ⟩` for a state given by its amplitudes.
    pub fn expectation(&self, amplitudes: &[Complex64]) -> Result<f64> {
        let dim = 1usize << self.qubits;
        if amplitudes.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                actual: amplitudes.len(),
            });
        }
        let norm: f64 = amplitudes.iter().map(Complex64::norm_sqr).sum();
        let mut acc = self.identity_offset * norm;
        for term in self.terms() {
            let mut value = Complex64::new(0.0, 0.0);
            for (b, amp) in amplitudes.iter().enumerate() {
                let (row, phase) = term.string.apply_to_basis(b);
                value += amplitudes[row].conj() * phase * amp;
            }
            acc += term.coefficient * value.re;
        }
        Ok(acc)
    }
}

/// Smallest eigenvalue of the dense Hamiltonian matrix.
pub fn exact_ground_energy(h: &QubitHamiltonian) -> Result<f64> {
    let m = h.matrix()?;
    let eig = m.symmetric_eigen();
    Ok(eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min))
}

const H2_TERMS: &[(&str, f64)] = &[
    ("II", -0.5597),
    ("IZ", 0.1615),
    ("ZI", -0.0166),
    ("ZZ", 0.4148),
    ("YY", 0.1226),
    ("XX", 0.1226),
];

const H2_CLIQUES: &[&[usize]] = &[&[1, 2, 3], &[4], &[5]];

// Indexed g₀..g₂₆.
const LIH_TERMS: &[(&str, f64)] = &[
    ("IIII", -7.4989469),
    ("XXYY", -0.0029329),
    ("XYYX", 0.0029329),
    ("XZXI", 0.0129108),
    ("XZXZ", -0.0013743),
    ("XIXI", 0.0115364),
    ("YXXY", 0.0029329),
    ("YYXX", -0.0029320),
    ("YZYI", 0.0129108),
    ("YZYZ", -0.0013743),
    ("YIYI", 0.0115364),
    ("ZIII", 0.1619948),
    ("ZXZX", 0.0115364),
    ("ZYZY", 0.0115364),
    ("ZZII", 0.1244477),
    ("ZIZI", 0.0541304),
    ("ZIIZ", 0.0570634),
    ("IXZX", 0.0129108),
    ("IXIX", -0.0013743),
    ("IYZY", 0.0129107),
    ("IYIY", -0.0013743),
    ("IZII", 0.1619948),
    ("IZZI", 0.0570634),
    ("IZIZ", 0.0541304),
    ("IIZI", -0.0132437),
    ("IIZZ", 0.0847961),
    ("IIIZ", -0.0132436),
];

const LIH_CLIQUES: &[&[usize]] = &[
    &[26, 25, 24, 23, 22, 21, 14, 15, 16, 11],
    &[20, 19, 13],
    &[18, 17, 12],
    &[10, 9, 8],
    &[5, 4, 3],
    &[1],
    &[7],
    &[6],
    &[2],
];

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn h2_builtin_shape() {
        let h = QubitHamiltonian::builtin("h2").unwrap();
        assert_eq!(h.qubits(), 2);
        assert_eq!(h.cliques().len(), 3);
        assert_eq!(h.term_count(), 6);
        assert_eq!(h.identity_offset(), -0.5597);
        assert_eq!(h.cliques()[0].members()[2].coefficient, 0.4148);
    }

    #[test]
    fn lih_builtin_shape() {
        let h = QubitHamiltonian::builtin("lih").unwrap();
        assert_eq!(h.qubits(), 4);
        assert_eq!(h.cliques().len(), 9);
        assert_eq!(h.term_count(), 27);
        assert_eq!(h.cliques()[0].len(), 10);
        let g11 = h
            .terms()
            .find(|t| t.string.to_string() == "ZIII")
            .unwrap()
            .coefficient;
        assert_eq!(g11, 0.1619948);
    }

    #[test]
    fn unknown_molecule_is_rejected() {
        assert!(matches!(
            QubitHamiltonian::builtin("beh2"),
            Err(Error::UnknownMolecule(_))
        ));
    }

    #[test]
    fn load_groups_when_cliques_absent() {
        let h = QubitHamiltonian::load(r#"{"name":"t","qubits":2,"terms":[{"p":"ZZ","g":1.0}]}"#).unwrap();
        assert_eq!(h.cliques().len(), 1);
    }

    #[test]
    fn load_rejects_non_commuting_explicit_clique() {
        let r = QubitHamiltonian::load(
            r#"{"name":"t","qubits":2,"terms":[{"p":"XX","g":1.0},{"p":"ZZ","g":1.0}],"cliques":[[0,1]]}"#,
        );
        assert!(matches!(r, Err(Error::NotQubitwiseCommuting(_, _))));
    }

    #[test]
    fn load_rejects_bad_documents() {
        assert!(QubitHamiltonian::load(r#"{"name":"t","qubits":2,"terms":[{"p":"ZQ","g":1.0}]}"#).is_err());
        assert!(QubitHamiltonian::load(r#"{"name":"t","qubits":3,"terms":[{"p":"ZZ","g":1.0}]}"#).is_err());
        assert!(QubitHamiltonian::load(
            r#"{"name":"t","qubits":2,"terms":[{"p":"ZZ","g":1.0},{"p":"IZ","g":1.0}],"cliques":[[0]]}"#
        )
        .is_err());
        assert!(QubitHamiltonian::load(
            r#"{"name":"t","qubits":2,"terms":[{"p":"II","g":1.0},{"p":"IZ","g":1.0}],"cliques":[[0,1]]}"#
        )
        .is_err());
        let doc = HamiltonianDocument {
            name: "t".into(),
            qubits: 1,
            terms: vec![TermDocument { p: "Z".into(), g: f64::INFINITY }],
            cliques: None,
        };
        assert!(matches!(
            QubitHamiltonian::from_document(&doc),
            Err(Error::NonFiniteCoefficient(_))
        ));
    }

    #[test]
    fn builtin_round_trips_through_json() {
        for name in ["h2", "lih"] {
            let h = QubitHamiltonian::builtin(name).unwrap();
            let back = QubitHamiltonian::load(&h.to_json().unwrap()).unwrap();
            assert_eq!(back, h);
        }
    }

    #[test]
    fn single_z_ground_energy() {
        let h = QubitHamiltonian::load(r#"{"name":"z","qubits":1,"terms":[{"p":"Z","g":1.0}]}"#).unwrap();
        assert_abs_diff_eq!(exact_ground_energy(&h).unwrap(), -1.0, epsilon = 1e-12);
    }

    #[test]
    fn h2_ground_energy_matches_block_formula() {
        // H₂ splits into the {|01⟩,|10⟩} block with coupling g₄+g₅ and a
        // diagonal-dominant {|00⟩,|11⟩} block; the lowest root is in the former.
        let (g0, g1, g2, g3, g4, g5) = (-0.5597, 0.1615, -0.0166, 0.4148, 0.1226, 0.1226);
        let d01: f64 = -g1 + g2 - g3;
        let d10: f64 = g1 - g2 - g3;
        let oracle = g0 + 0.5 * (d01 + d10) - (0.25 * (d01 - d10).powi(2) + (g4 + g5) * (g4 + g5)).sqrt();
        let h = QubitHamiltonian::builtin("h2").unwrap();
        let e0 = exact_ground_energy(&h).unwrap();
        assert_abs_diff_eq!(e0, oracle, epsilon = 1e-12);
        assert_abs_diff_eq!(e0, -1.277555522965677, epsilon = 1e-12);
    }

    #[test]
    fn lih_ground_energy_reference() {
        // Frozen from an independent dense eigensolver run on the same table.
        let h = QubitHamiltonian::builtin("lih").unwrap();
        assert_abs_diff_eq!(exact_ground_energy(&h).unwrap(), -7.862772928797895, epsilon = 1e-10);
    }

    #[test]
    fn matrix_is_hermitian() {
        for name in ["h2", "lih"] {
            let m = QubitHamiltonian::builtin(name).unwrap().matrix().unwrap();
            let diff = (&m - m.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
            assert!(diff < 1e-12);
        }
    }

    #[test]
    fn ground_energy_shifts_with_identity() {
        let h = QubitHamiltonian::builtin("lih").unwrap();
        let e0 = exact_ground_energy(&h).unwrap();
        for c in [-3.0, 0.25, 10.0] {
            let shifted = exact_ground_energy(&h.shifted(c).unwrap()).unwrap();
            assert_abs_diff_eq!(shifted, e0 + c, epsilon = 1e-9);
        }
    }

    #[test]
    fn ground_energy_independent_of_partition() {
        let pinned = QubitHamiltonian::builtin("lih").unwrap();
        let mut doc = pinned.to_document();
        doc.cliques = None;
        let greedy = QubitHamiltonian::from_document(&doc).unwrap();
        assert_abs_diff_eq!(
            exact_ground_energy(&pinned).unwrap(),
            exact_ground_energy(&greedy).unwrap(),
            epsilon = 1e-10
        );
    }

    #[test]
    fn dense_limit_enforced() {
        let doc = HamiltonianDocument {
            name: "big".into(),
            qubits: 13,
            terms: vec![TermDocument { p: "Z".repeat(13), g: 1.0 }],
            cliques: None,
        };
        let h = QubitHamiltonian::from_document(&doc).unwrap();
        assert!(matches!(exact_ground_energy(&h), Err(Error::DimensionOverflow { .. })));
    }
}
