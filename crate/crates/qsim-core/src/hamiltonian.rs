//! Pauli strings and weighted Pauli-sum Hamiltonians (ħ = 1).

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{QsimError, Result};
use crate::linalg::{I, ONE, ZERO};
use crate::state::check_register;
use crate::CMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub fn matrix(self) -> CMatrix {
        match self {
            Pauli::I => DMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, ONE]),
            Pauli::X => DMatrix::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO]),
            Pauli::Y => DMatrix::from_row_slice(2, 2, &[ZERO, -I, I, ZERO]),
            Pauli::Z => DMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, -ONE]),
        }
    }

    fn flips(self) -> bool {
        matches!(self, Pauli::X | Pauli::Y)
    }

    fn as_char(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }
}

/// Tensor product of single-qubit Paulis. Entry `q` acts on qubit `q`.
///
/// The text form lists qubits from `n-1` down to `0`, matching the tensor
/// order `q_{n-1} ⊗ … ⊗ q_0`, so `"XI"` is X on qubit 1.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct PauliString(Vec<Pauli>);

impl PauliString {
    pub fn identity(num_qubits: usize) -> Self {
        Self(vec![Pauli::I; num_qubits])
    }

    /// Identity everywhere except the listed `(qubit, pauli)` sites.
    pub fn from_sites(num_qubits: usize, sites: &[(usize, Pauli)]) -> Result<Self> {
        let mut ops = vec![Pauli::I; num_qubits];
        for &(q, p) in sites {
            if q >= num_qubits {
                return Err(QsimError::InvalidHamiltonian(format!(
                    "site {q} outside a {num_qubits}-qubit register"
                )));
            }
            ops[q] = p;
        }
        Ok(Self(ops))
    }

    pub fn num_qubits(&self) -> usize {
        self.0.len()
    }

    pub fn get(&self, qubit: usize) -> Pauli {
        self.0[qubit]
    }

    /// Qubits carrying a non-identity factor, ascending.
    pub fn support(&self) -> Vec<usize> {
        self.0
            .iter()
            .enumerate()
            .filter(|(_, p)| **p != Pauli::I)
            .map(|(q, _)| q)
            .collect()
    }

    /// Two Pauli strings commute iff they anticommute on an even number of sites.
    pub fn commutes_with(&self, other: &PauliString) -> bool {
        let clashes = self
            .0
            .iter()
            .zip(&other.0)
            .filter(|(a, b)| **a != Pauli::I && **b != Pauli::I && a != b)
            .count();
        clashes % 2 == 0
    }

    /// Full `2ⁿ×2ⁿ` matrix. Built column by column: a Pauli string maps a basis
    /// state to a single basis state times a phase.
    pub fn to_matrix(&self) -> CMatrix {
        let n = self.0.len();
        let dim = 1usize << n;
        let flip_mask: usize = self
            .0
            .iter()
            .enumerate()
            .filter(|(_, p)| p.flips())
            .map(|(q, _)| 1usize << q)
            .sum();
        let mut m = DMatrix::zeros(dim, dim);
        for col in 0..dim {
            let mut phase = ONE;
            for (q, p) in self.0.iter().enumerate() {
                let bit = (col >> q) & 1;
                match p {
                    Pauli::I | Pauli::X => {}
                    Pauli::Y => phase *= if bit == 0 { I } else { -I },
                    Pauli::Z => {
                        if bit == 1 {
                            phase = -phase
                        }
                    }
                }
            }
            m[(col ^ flip_mask, col)] = phase;
        }
        m
    }
}

impl FromStr for PauliString {
    type Err = QsimError;

    fn from_str(s: &str) -> Result<Self> {
        let mut ops = Vec::with_capacity(s.len());
        for c in s.chars().rev() {
            ops.push(match c.to_ascii_uppercase() {
                'I' => Pauli::I,
                'X' => Pauli::X,
                'Y' => Pauli::Y,
                'Z' => Pauli::Z,
                other => {
                    return Err(QsimError::InvalidHamiltonian(format!(
                        "'{other}' is not a Pauli label"
                    )))
                }
            });
        }
        if ops.is_empty() {
            return Err(QsimError::InvalidHamiltonian("empty Pauli string".into()));
        }
        Ok(Self(ops))
    }
}

impl TryFrom<String> for PauliString {
    type Error = QsimError;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<PauliString> for String {
    fn from(p: PauliString) -> String {
        p.to_string()
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for p in self.0.iter().rev() {
            write!(f, "{}", p.as_char())?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PauliTerm {
    pub coefficient: f64,
    pub string: PauliString,
}

impl PauliTerm {
    pub fn new(coefficient: f64, string: PauliString) -> Self {
        Self { coefficient, string }
    }

    pub fn to_matrix(&self) -> CMatrix {
        self.string.to_matrix().scale(self.coefficient)
    }
}

/// `H = Σ c_k P_k` with real coefficients in angular-frequency units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PauliSumHamiltonian {
    num_qubits: usize,
    terms: Vec<PauliTerm>,
}

impl PauliSumHamiltonian {
    pub fn new(num_qubits: usize, terms: Vec<PauliTerm>) -> Result<Self> {
        check_register(num_qubits).map_err(|e| QsimError::InvalidHamiltonian(e.to_string()))?;
        let h = Self { num_qubits, terms };
        h.validate()?;
        Ok(h)
    }

    #[cfg(test)]
    pub(crate) fn from_terms_unchecked(num_qubits: usize, terms: Vec<PauliTerm>) -> Self {
        Self { num_qubits, terms }
    }

    pub fn empty(num_qubits: usize) -> Result<Self> {
        Self::new(num_qubits, Vec::new())
    }

    pub fn validate(&self) -> Result<()> {
        for term in &self.terms {
            if term.string.num_qubits() != self.num_qubits {
                return Err(QsimError::InvalidHamiltonian(format!(
                    "term {} has length {}, register has {} qubits",
                    term.string,
                    term.string.num_qubits(),
                    self.num_qubits
                )));
            }
            if !term.coefficient.is_finite() {
                return Err(QsimError::InvalidHamiltonian(format!(
                    "coefficient of {} is not finite ({})",
                    term.string, term.coefficient
                )));
            }
        }
        Ok(())
    }

    pub fn add_term(&mut self, coefficient: f64, string: PauliString) -> Result<()> {
        self.terms.push(PauliTerm::new(coefficient, string));
        let res = self.validate();
        if res.is_err() {
            self.terms.pop();
        }
        res
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn terms(&self) -> &[PauliTerm] {
        &self.terms
    }

    pub fn to_matrix(&self) -> CMatrix {
        let dim = 1usize << self.num_qubits;
        let mut m: CMatrix = DMatrix::zeros(dim, dim);
        for term in &self.terms {
            m += term.to_matrix();
        }
        m
    }

    /// `(γ/2) X` on a single qubit.
    pub fn single_qubit_x(gamma: f64) -> Result<Self> {
        Self::independent_x_rotations(&[gamma])
    }

    /// `Σ_i (Γ_i/2) X_i` on `gammas.len()` qubits.
    pub fn independent_x_rotations(gammas: &[f64]) -> Result<Self> {
        let n = gammas.len();
        let terms = gammas
            .iter()
            .enumerate()
            .map(|(q, &g)| {
                Ok(PauliTerm::new(
                    g / 2.0,
                    PauliString::from_sites(n, &[(q, Pauli::X)])?,
                ))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(n, terms)
    }

    /// `-(Ω/2) Z` on a single qubit.
    pub fn z_rotation(omega: f64) -> Result<Self> {
        Self::new(
            1,
            vec![PauliTerm::new(
                -omega / 2.0,
                PauliString::from_sites(1, &[(0, Pauli::Z)])?,
            )],
        )
    }

    /// Open transverse-field Ising chain `-J Σ Z_i Z_{i+1} - Σ Γ_i X_i`.
    pub fn transverse_field_ising(j: f64, gammas: &[f64]) -> Result<Self> {
        let n = gammas.len();
        let mut terms = Vec::with_capacity(2 * n);
        for q in 0..n.saturating_sub(1) {
            terms.push(PauliTerm::new(
                -j,
                PauliString::from_sites(n, &[(q, Pauli::Z), (q + 1, Pauli::Z)])?,
            ));
        }
        for (q, &g) in gammas.iter().enumerate() {
            terms.push(PauliTerm::new(-g, PauliString::from_sites(n, &[(q, Pauli::X)])?));
        }
        Self::new(n, terms)
    }
}
