//! Brute-force two-time correlators built from explicit small matrices,
//! independent of the simulation engine.

#![allow(dead_code)]

use nalgebra::DMatrix;
use num_complex::Complex64;

pub type M = DMatrix<Complex64>;

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// `exp(-iθX/2)` written out.
pub fn rx(theta: f64) -> M {
    let (s, co) = (theta / 2.0).sin_cos();
    M::from_row_slice(2, 2, &[c(co, 0.0), c(0.0, -s), c(0.0, -s), c(co, 0.0)])
}

/// `a ⊗ b` by index arithmetic.
pub fn kron(a: &M, b: &M) -> M {
    let (ra, ca) = a.shape();
    let (rb, cb) = b.shape();
    M::from_fn(ra * rb, ca * cb, |i, j| a[(i / rb, j / cb)] * b[(i % rb, j % cb)])
}

/// Diagonal projector onto basis states where `keep(index)` holds.
pub fn diag_projector(dim: usize, keep: impl Fn(usize) -> bool) -> M {
    M::from_fn(dim, dim, |i, j| {
        if i == j && keep(i) {
            c(1.0, 0.0)
        } else {
            c(0.0, 0.0)
        }
    })
}

pub fn bell() -> M {
    let h = 0.5;
    let mut rho = M::zeros(4, 4);
    for i in [0usize, 3] {
        for j in [0usize, 3] {
            rho[(i, j)] = c(h, 0.0);
        }
    }
    rho
}

/// `Σ_{n,m} q_n q_m Tr[Π_m U₂ Π_n U₁ ρ U₁† Π_n U₂† Π_m]` with explicit matrices.
pub fn two_time(rho: &M, u1: &M, u2: &M, first: &[M; 2], second: &[M; 2]) -> f64 {
    let q = [1.0, -1.0];
    let mut total = 0.0;
    for n in 0..2 {
        for m in 0..2 {
            let a = &second[m] * u2 * &first[n] * u1;
            total += q[n] * q[m] * (&a * rho * a.adjoint()).trace().re;
        }
    }
    total
}

pub fn z_projectors(qubit: usize) -> [M; 2] {
    [
        diag_projector(4, |i| (i >> qubit) & 1 == 0),
        diag_projector(4, |i| (i >> qubit) & 1 == 1),
    ]
}

pub fn brute_bell(g1: f64, g2: f64, ti: f64, tj: f64, first: &[M; 2], second: &[M; 2]) -> f64 {
    // qubit 1 is the left tensor factor
    let u = |t: f64| kron(&rx(g2 * t), &rx(g1 * t));
    two_time(&bell(), &u(ti), &u(tj - ti), first, second)
}

pub fn parity_projectors() -> [M; 2] {
    [
        diag_projector(4, |i| i.count_ones() % 2 == 0),
        diag_projector(4, |i| i.count_ones() % 2 == 1),
    ]
}
