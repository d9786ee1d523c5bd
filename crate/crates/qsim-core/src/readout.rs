//! Readout confusion matrices.

use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{QsimError, Result};

const STOCHASTIC_TOLERANCE: f64 = 1e-9;

/// Column-stochastic `2ᵐ×2ᵐ` matrix; entry `(r, s)` is the probability of
/// reading bitstring `r` when `s` was prepared. Bit 0 of an index is the
/// first recorded bit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ConfusionMatrixRepr", into = "ConfusionMatrixRepr")]
pub struct ConfusionMatrix {
    num_bits: usize,
    matrix: DMatrix<f64>,
}

#[derive(Serialize, Deserialize)]
struct ConfusionMatrixRepr {
    num_bits: usize,
    matrix: Vec<Vec<f64>>,
}

impl TryFrom<ConfusionMatrixRepr> for ConfusionMatrix {
    type Error = QsimError;

    fn try_from(repr: ConfusionMatrixRepr) -> Result<Self> {
        let dim = repr.matrix.len();
        if let Some(row) = repr.matrix.iter().find(|r| r.len() != dim) {
            return Err(QsimError::InvalidConfusionMatrix(format!(
                "row of length {} in a {dim}-row matrix",
                row.len()
            )));
        }
        let flat: Vec<f64> = repr.matrix.into_iter().flatten().collect();
        Self::new(repr.num_bits, DMatrix::from_row_slice(dim, dim, &flat))
    }
}

impl From<ConfusionMatrix> for ConfusionMatrixRepr {
    fn from(cm: ConfusionMatrix) -> Self {
        Self {
            num_bits: cm.num_bits,
            matrix: cm
                .matrix
                .row_iter()
                .map(|r| r.iter().copied().collect())
                .collect(),
        }
    }
}

impl ConfusionMatrix {
    pub fn new(num_bits: usize, matrix: DMatrix<f64>) -> Result<Self> {
        if num_bits == 0 {
            return Err(QsimError::InvalidConfusionMatrix("num_bits must be ≥ 1".into()));
        }
        if num_bits > 16 {
            return Err(QsimError::InvalidConfusionMatrix(format!(
                "{num_bits} bits is too many"
            )));
        }
        let dim = 1usize << num_bits;
        if matrix.shape() != (dim, dim) {
            return Err(QsimError::DimensionMismatch {
                expected: dim,
                found: matrix.nrows(),
            });
        }
        if let Some(x) = matrix.iter().find(|x| !(0.0..=1.0).contains(*x)) {
            return Err(QsimError::InvalidConfusionMatrix(format!(
                "entry {x} outside [0, 1]"
            )));
        }
        for (s, col) in matrix.column_iter().enumerate() {
            let sum: f64 = col.iter().sum();
            if (sum - 1.0).abs() > STOCHASTIC_TOLERANCE {
                return Err(QsimError::InvalidConfusionMatrix(format!(
                    "column {s} sums to {sum}"
                )));
            }
        }
        Ok(Self { num_bits, matrix })
    }

    pub fn identity(num_bits: usize) -> Result<Self> {
        let dim = 1usize << num_bits;
        Self::new(num_bits, DMatrix::identity(dim, dim))
    }

    /// Single bit flipped with probability `p` in either direction.
    pub fn symmetric_flip(p: f64) -> Result<Self> {
        Self::asymmetric_flip(p, p)
    }

    /// Single bit: `p01` = P(read 1 | prepared 0), `p10` = P(read 0 | prepared 1).
    pub fn asymmetric_flip(p01: f64, p10: f64) -> Result<Self> {
        Self::new(
            1,
            DMatrix::from_row_slice(2, 2, &[1.0 - p01, p10, p01, 1.0 - p10]),
        )
    }

    /// `high ⊗ low`: `low` describes the low-order bits of the joint index.
    pub fn tensor(high: &ConfusionMatrix, low: &ConfusionMatrix) -> Result<Self> {
        Self::new(high.num_bits + low.num_bits, high.matrix.kronecker(&low.matrix))
    }

    /// The same single-bit matrix on each of `num_bits` independent bits.
    pub fn tensor_power(&self, num_bits: usize) -> Result<Self> {
        let mut out = self.clone();
        for _ in 1..num_bits {
            out = Self::tensor(self, &out)?;
        }
        Ok(out)
    }

    pub fn num_bits(&self) -> usize {
        self.num_bits
    }

    pub fn dim(&self) -> usize {
        1usize << self.num_bits
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn get(&self, read: usize, prepared: usize) -> f64 {
        self.matrix[(read, prepared)]
    }

    pub fn is_identity(&self) -> bool {
        self.matrix == DMatrix::identity(self.dim(), self.dim())
    }

    /// `M · p`.
    pub fn apply(&self, distribution: &[f64]) -> Result<Vec<f64>> {
        if distribution.len() != self.dim() {
            return Err(QsimError::DimensionMismatch {
                expected: self.dim(),
                found: distribution.len(),
            });
        }
        let v = nalgebra::DVector::from_column_slice(distribution);
        Ok((&self.matrix * v).iter().copied().collect())
    }

    /// Ratio of largest to smallest singular value.
    pub fn condition_number(&self) -> f64 {
        let sv = self.matrix.clone().singular_values();
        let max = sv.iter().copied().fold(0.0, f64::max);
        let min = sv.iter().copied().fold(f64::INFINITY, f64::min);
        if min == 0.0 {
            f64::INFINITY
        } else {
            max / min
        }
    }

    /// Draw a readout for prepared bitstring `prepared`.
    pub fn sample<R: Rng + ?Sized>(&self, prepared: usize, rng: &mut R) -> usize {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let col = self.matrix.column(prepared);
        for (r, &p) in col.iter().enumerate() {
            acc += p;
            if u < acc {
                return r;
            }
        }
        // round-off: fall back to the last outcome with nonzero weight
        col.iter().rposition(|&p| p > 0.0).unwrap_or(prepared)
    }

    /// Corrupt an `num_bits`-bit record. A one-bit matrix acts on each bit
    /// independently; otherwise the matrix must cover the whole record.
    pub fn corrupt<R: Rng + ?Sized>(&self, record: usize, num_bits: usize, rng: &mut R) -> Result<usize> {
        if self.num_bits == num_bits {
            return Ok(self.sample(record, rng));
        }
        if self.num_bits == 1 {
            let mut out = 0;
            for b in 0..num_bits {
                let bit = (record >> b) & 1;
                out |= self.sample(bit, rng) << b;
            }
            return Ok(out);
        }
        Err(QsimError::DimensionMismatch {
            expected: num_bits,
            found: self.num_bits,
        })
    }
}
