//! Pure states and density matrices.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{QsimError, Result};
use crate::linalg::{self, hermitian_eigen, LocalLayout};
use crate::propagator::Propagator;
use crate::{CMatrix, MAX_QUBITS};

const NORM_TOLERANCE: f64 = 1e-10;
const HERMITIAN_TOLERANCE: f64 = 1e-10;
const TRACE_TOLERANCE: f64 = 1e-10;
const PSD_TOLERANCE: f64 = 1e-9;

pub(crate) fn check_register(num_qubits: usize) -> Result<()> {
    if num_qubits == 0 {
        return Err(QsimError::InvalidState(
            "register needs at least one qubit".into(),
        ));
    }
    if num_qubits > MAX_QUBITS {
        return Err(QsimError::TooManyQubits {
            requested: num_qubits,
            cap: MAX_QUBITS,
        });
    }
    Ok(())
}

/// Named initial states.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StateName {
    Zero,
    Plus,
    Bell,
    Ghz,
}

impl FromStr for StateName {
    type Err = QsimError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "zero" => Ok(Self::Zero),
            "plus" => Ok(Self::Plus),
            "bell" => Ok(Self::Bell),
            "ghz" => Ok(Self::Ghz),
            other => Err(QsimError::InvalidPreparation(format!("unknown state '{other}'"))),
        }
    }
}

impl fmt::Display for StateName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Self::Zero => "zero",
            Self::Plus => "plus",
            Self::Bell => "bell",
            Self::Ghz => "ghz",
        };
        f.write_str(s)
    }
}

/// A normalized state vector on `num_qubits` qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    num_qubits: usize,
    amplitudes: DVector<Complex64>,
}

impl PureState {
    pub fn new(num_qubits: usize, amplitudes: DVector<Complex64>) -> Result<Self> {
        check_register(num_qubits)?;
        let dim = 1usize << num_qubits;
        if amplitudes.len() != dim {
            return Err(QsimError::DimensionMismatch {
                expected: dim,
                found: amplitudes.len(),
            });
        }
        let norm_sqr: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
        if (norm_sqr - 1.0).abs() > NORM_TOLERANCE {
            return Err(QsimError::InvalidState(format!(
                "amplitudes have squared norm {norm_sqr}"
            )));
        }
        Ok(Self {
            num_qubits,
            amplitudes,
        })
    }

    /// Computational basis state `|index⟩`.
    pub fn basis(num_qubits: usize, index: usize) -> Result<Self> {
        check_register(num_qubits)?;
        let dim = 1usize << num_qubits;
        if index >= dim {
            return Err(QsimError::InvalidState(format!(
                "basis index {index} out of range for {num_qubits} qubits"
            )));
        }
        let mut amplitudes = DVector::zeros(dim);
        amplitudes[index] = linalg::ONE;
        Ok(Self {
            num_qubits,
            amplitudes,
        })
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn amplitudes(&self) -> &DVector<Complex64> {
        &self.amplitudes
    }

    pub fn evolve(&self, u: &Propagator) -> Result<Self> {
        if u.num_qubits() != self.num_qubits {
            return Err(QsimError::DimensionMismatch {
                expected: self.num_qubits,
                found: u.num_qubits(),
            });
        }
        Ok(Self {
            num_qubits: self.num_qubits,
            amplitudes: u.matrix() * &self.amplitudes,
        })
    }

    /// `|ψ⟩⟨ψ|`.
    pub fn to_density_matrix(&self) -> DensityMatrix {
        let matrix = &self.amplitudes * self.amplitudes.adjoint();
        DensityMatrix::from_matrix_unchecked(self.num_qubits, matrix)
    }

    /// `|⟨self|other⟩|²`.
    pub fn fidelity(&self, other: &PureState) -> f64 {
        self.amplitudes.dotc(&other.amplitudes).norm_sqr()
    }
}

/// Prepare one of the named initial states.
pub fn prepare_state(name: StateName, num_qubits: usize) -> Result<PureState> {
    if num_qubits == 0 {
        return Err(QsimError::InvalidPreparation("num_qubits must be ≥ 1".into()));
    }
    if num_qubits > MAX_QUBITS {
        return Err(QsimError::TooManyQubits {
            requested: num_qubits,
            cap: MAX_QUBITS,
        });
    }
    let dim = 1usize << num_qubits;
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let amplitudes = match name {
        StateName::Zero => {
            let mut v = DVector::zeros(dim);
            v[0] = linalg::ONE;
            v
        }
        StateName::Plus => {
            // |+⟩ on every qubit
            let a = Complex64::new((dim as f64).sqrt().recip(), 0.0);
            DVector::from_element(dim, a)
        }
        StateName::Bell => {
            if num_qubits != 2 {
                return Err(QsimError::InvalidPreparation(format!(
                    "bell state needs exactly 2 qubits, got {num_qubits}"
                )));
            }
            let mut v = DVector::zeros(dim);
            v[0] = Complex64::new(h, 0.0);
            v[3] = Complex64::new(h, 0.0);
            v
        }
        StateName::Ghz => {
            if num_qubits < 2 {
                return Err(QsimError::InvalidPreparation(format!(
                    "ghz state needs at least 2 qubits, got {num_qubits}"
                )));
            }
            let mut v = DVector::zeros(dim);
            v[0] = Complex64::new(h, 0.0);
            v[dim - 1] = Complex64::new(h, 0.0);
            v
        }
    };
    PureState::new(num_qubits, amplitudes)
}

/// A Hermitian, positive semidefinite, unit-trace operator.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    num_qubits: usize,
    matrix: CMatrix,
}

impl DensityMatrix {
    /// Validates hermiticity, unit trace and positivity.
    pub fn new(num_qubits: usize, matrix: CMatrix) -> Result<Self> {
        check_register(num_qubits)?;
        let rho = Self { num_qubits, matrix };
        rho.validate()?;
        Ok(rho)
    }

    pub(crate) fn from_matrix_unchecked(num_qubits: usize, matrix: CMatrix) -> Self {
        Self { num_qubits, matrix }
    }

    /// Normalize a positive operator with nonzero trace.
    pub fn from_unnormalized(num_qubits: usize, matrix: CMatrix) -> Result<Self> {
        let tr = linalg::trace(&matrix).re;
        if tr <= 0.0 {
            return Err(QsimError::InvalidState(format!("trace {tr} is not positive")));
        }
        Ok(Self::from_matrix_unchecked(num_qubits, matrix.unscale(tr)))
    }

    pub fn basis(num_qubits: usize, index: usize) -> Result<Self> {
        Ok(PureState::basis(num_qubits, index)?.to_density_matrix())
    }

    /// `I / 2ⁿ`.
    pub fn maximally_mixed(num_qubits: usize) -> Result<Self> {
        check_register(num_qubits)?;
        let dim = 1usize << num_qubits;
        Ok(Self::from_matrix_unchecked(
            num_qubits,
            linalg::identity(dim).unscale(dim as f64),
        ))
    }

    pub fn validate(&self) -> Result<()> {
        let dim = 1usize << self.num_qubits;
        if self.matrix.shape() != (dim, dim) {
            return Err(QsimError::DimensionMismatch {
                expected: dim,
                found: self.matrix.nrows(),
            });
        }
        let herm = linalg::max_abs_diff(&self.matrix, &self.matrix.adjoint());
        if herm > HERMITIAN_TOLERANCE {
            return Err(QsimError::InvalidState(format!(
                "matrix is not Hermitian (defect {herm:e})"
            )));
        }
        let tr = self.trace();
        if (tr - 1.0).abs() > TRACE_TOLERANCE {
            return Err(QsimError::InvalidState(format!("trace is {tr}")));
        }
        let min_eig = self.min_eigenvalue();
        if min_eig < -PSD_TOLERANCE {
            return Err(QsimError::InvalidState(format!(
                "matrix has negative eigenvalue {min_eig:e}"
            )));
        }
        Ok(())
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn dim(&self) -> usize {
        1usize << self.num_qubits
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn trace(&self) -> f64 {
        linalg::trace(&self.matrix).re
    }

    pub fn purity(&self) -> f64 {
        linalg::trace(&(&self.matrix * &self.matrix)).re
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let (values, _) = hermitian_eigen(&self.matrix);
        values.into_iter().fold(f64::INFINITY, f64::min)
    }

    /// `U ρ U†`.
    pub fn evolve(&self, u: &Propagator) -> Result<Self> {
        if u.num_qubits() != self.num_qubits {
            return Err(QsimError::DimensionMismatch {
                expected: self.num_qubits,
                found: u.num_qubits(),
            });
        }
        Ok(Self::from_matrix_unchecked(
            self.num_qubits,
            u.matrix() * &self.matrix * u.matrix().adjoint(),
        ))
    }

    /// Probability of each computational basis state.
    pub fn populations(&self) -> Vec<f64> {
        self.matrix.diagonal().iter().map(|z| z.re.max(0.0)).collect()
    }

    /// Reduced state of the listed qubits, indexed with `qubits[0]` as the
    /// least significant bit.
    pub fn reduced(&self, qubits: &[usize]) -> Result<CMatrix> {
        for &q in qubits {
            if q >= self.num_qubits {
                return Err(QsimError::InvalidState(format!(
                    "qubit {q} outside a {}-qubit register",
                    self.num_qubits
                )));
            }
        }
        let layout = LocalLayout::new(qubits, self.num_qubits);
        let local = layout.offsets.len();
        let mut out = DMatrix::zeros(local, local);
        for &base in &layout.bases {
            for (r, &ro) in layout.offsets.iter().enumerate() {
                for (c, &co) in layout.offsets.iter().enumerate() {
                    out[(r, c)] += self.matrix[(base + ro, base + co)];
                }
            }
        }
        Ok(out)
    }
}
