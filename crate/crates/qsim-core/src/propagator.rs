//! Unitary propagators `U(t_end, t_start) = exp(-i H (t_end - t_start))`.

use crate::error::{QsimError, Result};
use crate::hamiltonian::PauliSumHamiltonian;
use crate::linalg::{self, exp_from_spectrum, hermitian_eigen};
use crate::CMatrix;

const UNITARITY_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct Propagator {
    num_qubits: usize,
    matrix: CMatrix,
    t_start: f64,
    t_end: f64,
}

impl Propagator {
    /// Wrap a matrix, checking that it is unitary.
    pub fn new(num_qubits: usize, matrix: CMatrix, t_start: f64, t_end: f64) -> Result<Self> {
        let dim = 1usize << num_qubits;
        if matrix.shape() != (dim, dim) {
            return Err(QsimError::DimensionMismatch {
                expected: dim,
                found: matrix.nrows(),
            });
        }
        let u = Self {
            num_qubits,
            matrix,
            t_start,
            t_end,
        };
        let defect = u.unitarity_defect();
        if defect > UNITARITY_TOLERANCE {
            return Err(QsimError::InvalidHamiltonian(format!(
                "propagator is not unitary (defect {defect:e})"
            )));
        }
        Ok(u)
    }

    pub fn identity(num_qubits: usize, t: f64) -> Self {
        Self {
            num_qubits,
            matrix: linalg::identity(1usize << num_qubits),
            t_start: t,
            t_end: t,
        }
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn t_start(&self) -> f64 {
        self.t_start
    }

    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    /// `‖U U† − I‖_max`.
    pub fn unitarity_defect(&self) -> f64 {
        let dim = self.matrix.nrows();
        linalg::max_abs_diff(&(&self.matrix * self.matrix.adjoint()), &linalg::identity(dim))
    }

    /// `later · self`, i.e. evolve with `self` first.
    pub fn then(&self, later: &Propagator) -> Result<Self> {
        if later.num_qubits != self.num_qubits {
            return Err(QsimError::DimensionMismatch {
                expected: self.num_qubits,
                found: later.num_qubits,
            });
        }
        Ok(Self {
            num_qubits: self.num_qubits,
            matrix: &later.matrix * &self.matrix,
            t_start: self.t_start,
            t_end: self.t_end + (later.t_end - later.t_start),
        })
    }
}

/// Eigendecomposition of a Hamiltonian, reused for propagators of any duration.
#[derive(Debug, Clone)]
pub struct Spectrum {
    num_qubits: usize,
    eigenvalues: Vec<f64>,
    eigenvectors: CMatrix,
}

impl Spectrum {
    pub fn new(h: &PauliSumHamiltonian) -> Result<Self> {
        h.validate()?;
        let (eigenvalues, eigenvectors) = hermitian_eigen(&h.to_matrix());
        Ok(Self {
            num_qubits: h.num_qubits(),
            eigenvalues,
            eigenvectors,
        })
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// `exp(-i H duration)`.
    pub fn unitary(&self, duration: f64) -> CMatrix {
        if duration == 0.0 {
            return linalg::identity(1usize << self.num_qubits);
        }
        exp_from_spectrum(&self.eigenvalues, &self.eigenvectors, duration)
    }

    pub fn propagator(&self, t_start: f64, t_end: f64) -> Result<Propagator> {
        check_interval(t_start, t_end)?;
        Ok(Propagator {
            num_qubits: self.num_qubits,
            matrix: self.unitary(t_end - t_start),
            t_start,
            t_end,
        })
    }
}

fn check_interval(t_start: f64, t_end: f64) -> Result<()> {
    if !t_start.is_finite() || !t_end.is_finite() || t_end < t_start {
        return Err(QsimError::InvalidTimeInterval { t_start, t_end });
    }
    Ok(())
}

/// Exact propagator from `t_start` to `t_end` for a time-independent `h`.
pub fn propagator(h: &PauliSumHamiltonian, t_start: f64, t_end: f64) -> Result<Propagator> {
    check_interval(t_start, t_end)?;
    Spectrum::new(h)?.propagator(t_start, t_end)
}
