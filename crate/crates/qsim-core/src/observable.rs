//! Two-outcome (±1) observables given as a pair of projectors.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{QsimError, Result};
use crate::hamiltonian::Pauli;
use crate::linalg::{self, LocalLayout, ONE};
use crate::CMatrix;

const PROJECTOR_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Outcome {
    Plus,
    Minus,
}

impl Outcome {
    pub const BOTH: [Outcome; 2] = [Outcome::Plus, Outcome::Minus];

    pub fn value(self) -> f64 {
        match self {
            Outcome::Plus => 1.0,
            Outcome::Minus => -1.0,
        }
    }

    pub fn symbol(self) -> char {
        match self {
            Outcome::Plus => '+',
            Outcome::Minus => '-',
        }
    }

    /// Recorded bit: `+1 → 0`, `-1 → 1`.
    pub fn bit(self) -> usize {
        match self {
            Outcome::Plus => 0,
            Outcome::Minus => 1,
        }
    }

    pub fn from_bit(bit: usize) -> Self {
        if bit & 1 == 0 {
            Outcome::Plus
        } else {
            Outcome::Minus
        }
    }
}

/// A ±1 observable on `qubits`, stored as local projectors (`qubits[0]` is the
/// least significant bit of the local index).
#[derive(Debug, Clone, PartialEq)]
pub struct DichotomicObservable {
    label: String,
    qubits: Vec<usize>,
    plus: CMatrix,
    minus: CMatrix,
}

impl DichotomicObservable {
    /// Validates idempotence, orthogonality and completeness.
    pub fn from_projectors(
        label: impl Into<String>,
        qubits: Vec<usize>,
        plus: CMatrix,
        minus: CMatrix,
    ) -> Result<Self> {
        if qubits.is_empty() {
            return Err(QsimError::InvalidObservable("observable needs a qubit".into()));
        }
        let mut sorted = qubits.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != qubits.len() {
            return Err(QsimError::InvalidObservable(format!(
                "duplicate qubit indices {qubits:?}"
            )));
        }
        let dim = 1usize << qubits.len();
        for p in [&plus, &minus] {
            if p.shape() != (dim, dim) {
                return Err(QsimError::InvalidObservable(format!(
                    "projector is {}x{}, expected {dim}x{dim}",
                    p.nrows(),
                    p.ncols()
                )));
            }
            let defect = linalg::max_abs_diff(&(p * p), p);
            if defect > PROJECTOR_TOLERANCE {
                return Err(QsimError::InvalidObservable(format!(
                    "projector is not idempotent (defect {defect:e})"
                )));
            }
            let herm = linalg::max_abs_diff(p, &p.adjoint());
            if herm > PROJECTOR_TOLERANCE {
                return Err(QsimError::InvalidObservable("projector is not Hermitian".into()));
            }
        }
        if linalg::max_abs(&(&plus * &minus)) > PROJECTOR_TOLERANCE {
            return Err(QsimError::InvalidObservable(
                "projectors are not orthogonal".into(),
            ));
        }
        if linalg::max_abs_diff(&(&plus + &minus), &linalg::identity(dim)) > PROJECTOR_TOLERANCE {
            return Err(QsimError::InvalidObservable("projectors are not complete".into()));
        }
        Ok(Self {
            label: label.into(),
            qubits,
            plus,
            minus,
        })
    }

    /// `Π₋ = I − Π₊`.
    pub fn from_plus_projector(label: impl Into<String>, qubits: Vec<usize>, plus: CMatrix) -> Result<Self> {
        let minus = linalg::identity(plus.nrows()) - &plus;
        Self::from_projectors(label, qubits, plus, minus)
    }

    /// `(I ± P)/2` for a single-qubit Pauli.
    pub fn pauli(pauli: Pauli, qubit: usize) -> Result<Self> {
        if pauli == Pauli::I {
            return Err(QsimError::InvalidObservable("identity is not dichotomic".into()));
        }
        let id = linalg::identity(2);
        let p = pauli.matrix();
        let label = format!("{pauli:?}{qubit}");
        Self::from_projectors(label, vec![qubit], (&id + &p).scale(0.5), (&id - &p).scale(0.5))
    }

    pub fn sigma_z(qubit: usize) -> Self {
        Self::pauli(Pauli::Z, qubit).expect("σz projectors are valid")
    }

    pub fn sigma_x(qubit: usize) -> Self {
        Self::pauli(Pauli::X, qubit).expect("σx projectors are valid")
    }

    /// `Π₊` onto even-parity bitstrings of `qubits`, `Π₋` onto odd.
    pub fn parity(qubits: &[usize]) -> Result<Self> {
        let dim = 1usize << qubits.len();
        let mut plus = DMatrix::zeros(dim, dim);
        for l in 0..dim {
            if l.count_ones() % 2 == 0 {
                plus[(l, l)] = ONE;
            }
        }
        let label = format!(
            "parity({})",
            qubits.iter().map(|q| q.to_string()).collect::<Vec<_>>().join(",")
        );
        Self::from_plus_projector(label, qubits.to_vec(), plus)
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn qubits(&self) -> &[usize] {
        &self.qubits
    }

    pub fn local_projector(&self, outcome: Outcome) -> &CMatrix {
        match outcome {
            Outcome::Plus => &self.plus,
            Outcome::Minus => &self.minus,
        }
    }

    /// Projector on the full `num_qubits` register.
    pub fn projector(&self, outcome: Outcome, num_qubits: usize) -> Result<CMatrix> {
        self.check_register(num_qubits)?;
        Ok(linalg::embed(
            self.local_projector(outcome),
            &self.qubits,
            num_qubits,
        ))
    }

    /// `Π₊ − Π₋` on the full register.
    pub fn operator(&self, num_qubits: usize) -> Result<CMatrix> {
        Ok(self.projector(Outcome::Plus, num_qubits)? - self.projector(Outcome::Minus, num_qubits)?)
    }

    /// Same projectors with the ±1 labels exchanged.
    pub fn relabeled(&self) -> Self {
        Self {
            label: format!("-{}", self.label),
            qubits: self.qubits.clone(),
            plus: self.minus.clone(),
            minus: self.plus.clone(),
        }
    }

    pub fn check_register(&self, num_qubits: usize) -> Result<()> {
        if let Some(&q) = self.qubits.iter().find(|&&q| q >= num_qubits) {
            return Err(QsimError::InvalidObservable(format!(
                "observable {} acts on qubit {q}, register has {num_qubits}",
                self.label
            )));
        }
        Ok(())
    }

    pub fn disjoint_from(&self, other: &DichotomicObservable) -> bool {
        self.qubits.iter().all(|q| !other.qubits.contains(q))
    }

    /// `Π m Π` for an operator `m` on `num_qubits` qubits.
    pub fn project_operator(&self, outcome: Outcome, m: &CMatrix, num_qubits: usize) -> Result<CMatrix> {
        self.check_register(num_qubits)?;
        let layout = LocalLayout::new(&self.qubits, num_qubits);
        Ok(linalg::conjugate_local(self.local_projector(outcome), &layout, m))
    }

    /// `Tr(Π m)`.
    pub fn weight(&self, outcome: Outcome, m: &CMatrix, num_qubits: usize) -> Result<f64> {
        self.check_register(num_qubits)?;
        let layout = LocalLayout::new(&self.qubits, num_qubits);
        let p = self.local_projector(outcome);
        let mut acc = 0.0;
        for &base in &layout.bases {
            for (r, &ro) in layout.offsets.iter().enumerate() {
                for (c, &co) in layout.offsets.iter().enumerate() {
                    acc += (p[(r, c)] * m[(base + co, base + ro)]).re;
                }
            }
        }
        Ok(acc)
    }
}
