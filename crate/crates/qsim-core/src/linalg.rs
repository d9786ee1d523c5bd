//! Small dense linear-algebra helpers shared by the engine.
//!
//! Local operators act on a subset of qubits. Qubit `q` is bit `q` of the
//! basis index, and local operators on `targets = [t0, t1, ...]` index their
//! basis with `t0` as the least significant bit.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::CMatrix;

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);
pub const I: Complex64 = Complex64::new(0.0, 1.0);

pub fn identity(dim: usize) -> CMatrix {
    DMatrix::identity(dim, dim)
}

pub fn dagger(m: &CMatrix) -> CMatrix {
    m.adjoint()
}

/// Largest absolute entry.
pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// `max |a_ij - b_ij|`.
pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    assert_eq!(a.shape(), b.shape());
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

/// Spectral norm (largest singular value).
pub fn operator_norm(m: &CMatrix) -> f64 {
    m.clone().singular_values().iter().copied().fold(0.0, f64::max)
}

/// Kronecker product `a ⊗ b`; `b` occupies the low bits of the result index.
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

pub fn trace(m: &CMatrix) -> Complex64 {
    m.diagonal().iter().sum()
}

/// `exp(-i H t)` for Hermitian `H` through its eigendecomposition.
pub fn hermitian_exp(h: &CMatrix, t: f64) -> CMatrix {
    let (values, vectors) = hermitian_eigen(h);
    exp_from_spectrum(&values, &vectors, t)
}

/// Eigenvalues and unit-norm eigenvectors of a Hermitian matrix.
pub fn hermitian_eigen(h: &CMatrix) -> (Vec<f64>, CMatrix) {
    // symmetrize so round-off in the input cannot leak anti-Hermitian parts
    let sym = (h + h.adjoint()).scale(0.5);
    let eig = SymmetricEigen::new(sym);
    let mut vectors = eig.eigenvectors;
    for mut col in vectors.column_iter_mut() {
        let norm = col.norm();
        if norm > 0.0 {
            col.unscale_mut(norm);
        }
    }
    (eig.eigenvalues.iter().copied().collect(), vectors)
}

pub fn exp_from_spectrum(values: &[f64], vectors: &CMatrix, t: f64) -> CMatrix {
    let mut scaled = vectors.clone();
    for (j, mut col) in scaled.column_iter_mut().enumerate() {
        let phase = Complex64::from_polar(1.0, -values[j] * t);
        col *= phase;
    }
    scaled * vectors.adjoint()
}

/// Index bookkeeping for applying an operator on `targets` inside an
/// `n`-qubit register.
#[derive(Debug, Clone)]
pub struct LocalLayout {
    /// Full indices with every target bit cleared.
    pub bases: Vec<usize>,
    /// Offset of local basis state `l` relative to a base index.
    pub offsets: Vec<usize>,
}

impl LocalLayout {
    pub fn new(targets: &[usize], num_qubits: usize) -> Self {
        let dim = 1usize << num_qubits;
        let mask: usize = targets.iter().map(|&t| 1usize << t).sum();
        let bases = (0..dim).filter(|b| b & mask == 0).collect();
        let offsets = (0..1usize << targets.len())
            .map(|l| {
                targets
                    .iter()
                    .enumerate()
                    .filter(|(k, _)| (l >> k) & 1 == 1)
                    .map(|(_, &t)| 1usize << t)
                    .sum()
            })
            .collect();
        Self { bases, offsets }
    }
}

/// Embed a local operator on `targets` into the full register.
pub fn embed(op: &CMatrix, targets: &[usize], num_qubits: usize) -> CMatrix {
    let layout = LocalLayout::new(targets, num_qubits);
    let dim = 1usize << num_qubits;
    let mut full = DMatrix::zeros(dim, dim);
    for &base in &layout.bases {
        for (r, &ro) in layout.offsets.iter().enumerate() {
            for (c, &co) in layout.offsets.iter().enumerate() {
                full[(base + ro, base + co)] = op[(r, c)];
            }
        }
    }
    full
}

/// `(op ⊗ I) · m` without forming the full operator.
pub fn apply_left(op: &CMatrix, layout: &LocalLayout, m: &CMatrix) -> CMatrix {
    let local = layout.offsets.len();
    let mut out = DMatrix::zeros(m.nrows(), m.ncols());
    let mut gathered = vec![ZERO; local];
    for col in 0..m.ncols() {
        for &base in &layout.bases {
            for (l, &off) in layout.offsets.iter().enumerate() {
                gathered[l] = m[(base + off, col)];
            }
            for (r, &off) in layout.offsets.iter().enumerate() {
                let mut acc = ZERO;
                for (c, g) in gathered.iter().enumerate() {
                    acc += op[(r, c)] * g;
                }
                out[(base + off, col)] = acc;
            }
        }
    }
    out
}

/// `m · (op ⊗ I)†` without forming the full operator.
pub fn apply_right_adjoint(op: &CMatrix, layout: &LocalLayout, m: &CMatrix) -> CMatrix {
    let local = layout.offsets.len();
    let mut out = DMatrix::zeros(m.nrows(), m.ncols());
    let mut gathered = vec![ZERO; local];
    for row in 0..m.nrows() {
        for &base in &layout.bases {
            for (l, &off) in layout.offsets.iter().enumerate() {
                gathered[l] = m[(row, base + off)];
            }
            for (c, &off) in layout.offsets.iter().enumerate() {
                let mut acc = ZERO;
                for (k, g) in gathered.iter().enumerate() {
                    acc += g * op[(c, k)].conj();
                }
                out[(row, base + off)] = acc;
            }
        }
    }
    out
}

/// `(op ⊗ I) m (op ⊗ I)†`.
pub fn conjugate_local(op: &CMatrix, layout: &LocalLayout, m: &CMatrix) -> CMatrix {
    apply_right_adjoint(op, layout, &apply_left(op, layout, m))
}
