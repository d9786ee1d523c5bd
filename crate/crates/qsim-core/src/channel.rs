//! Kraus channels acting on a subset of qubits.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{QsimError, Result};
use crate::hamiltonian::Pauli;
use crate::linalg::{self, conjugate_local, LocalLayout};
use crate::state::DensityMatrix;
use crate::CMatrix;

const COMPLETENESS_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct KrausChannel {
    kraus_ops: Vec<CMatrix>,
    target_qubits: Vec<usize>,
}

impl KrausChannel {
    pub fn new(kraus_ops: Vec<CMatrix>, target_qubits: Vec<usize>) -> Result<Self> {
        if kraus_ops.is_empty() {
            return Err(QsimError::InvalidChannel("no Kraus operators".into()));
        }
        if target_qubits.is_empty() {
            return Err(QsimError::InvalidChannel("no target qubits".into()));
        }
        let mut sorted = target_qubits.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != target_qubits.len() {
            return Err(QsimError::InvalidChannel(format!(
                "duplicate target qubits {target_qubits:?}"
            )));
        }
        let dim = 1usize << target_qubits.len();
        if let Some(k) = kraus_ops.iter().find(|k| k.shape() != (dim, dim)) {
            return Err(QsimError::InvalidChannel(format!(
                "Kraus operator is {}x{}, expected {dim}x{dim}",
                k.nrows(),
                k.ncols()
            )));
        }
        let ch = Self {
            kraus_ops,
            target_qubits,
        };
        let defect = ch.completeness_defect();
        if defect > COMPLETENESS_TOLERANCE {
            return Err(QsimError::InvalidChannel(format!(
                "Σ K†K deviates from identity by {defect:e}"
            )));
        }
        Ok(ch)
    }

    pub fn identity(qubit: usize) -> Self {
        Self {
            kraus_ops: vec![linalg::identity(2)],
            target_qubits: vec![qubit],
        }
    }

    /// Pure dephasing: `{√(1-p) I, √p Z}` with `p = (1 - e^{-duration/t2}) / 2`,
    /// so coherences shrink by `e^{-duration/t2}`.
    pub fn dephasing(t2: f64, duration: f64, qubit: usize) -> Result<Self> {
        if !(t2 > 0.0) || !t2.is_finite() {
            return Err(QsimError::InvalidNoiseParameter(format!(
                "t2 must be > 0, got {t2}"
            )));
        }
        if !(duration >= 0.0) {
            return Err(QsimError::InvalidNoiseParameter(format!(
                "duration must be ≥ 0, got {duration}"
            )));
        }
        let p = dephasing_probability(t2, duration);
        Ok(Self {
            kraus_ops: vec![
                linalg::identity(2).scale((1.0 - p).sqrt()),
                Pauli::Z.matrix().scale(p.sqrt()),
            ],
            target_qubits: vec![qubit],
        })
    }

    /// Amplitude damping towards |0⟩ with `γ = 1 - e^{-duration/t1}`.
    pub fn amplitude_damping(t1: f64, duration: f64, qubit: usize) -> Result<Self> {
        if !(t1 > 0.0) || !t1.is_finite() {
            return Err(QsimError::InvalidNoiseParameter(format!(
                "t1 must be > 0, got {t1}"
            )));
        }
        if !(duration >= 0.0) {
            return Err(QsimError::InvalidNoiseParameter(format!(
                "duration must be ≥ 0, got {duration}"
            )));
        }
        let gamma = 1.0 - (-duration / t1).exp();
        let c = |x: f64| Complex64::new(x, 0.0);
        let k0 = DMatrix::from_row_slice(2, 2, &[c(1.0), c(0.0), c(0.0), c((1.0 - gamma).sqrt())]);
        let k1 = DMatrix::from_row_slice(2, 2, &[c(0.0), c(gamma.sqrt()), c(0.0), c(0.0)]);
        Ok(Self {
            kraus_ops: vec![k0, k1],
            target_qubits: vec![qubit],
        })
    }

    /// Depolarizing channel on `targets`: with probability `p` the targets are
    /// replaced by the maximally mixed state. `p = 1` is fully depolarizing.
    pub fn depolarizing(p: f64, targets: &[usize]) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(QsimError::InvalidNoiseParameter(format!(
                "depolarizing probability {p} outside [0, 1]"
            )));
        }
        let m = targets.len();
        if m == 0 {
            return Err(QsimError::InvalidChannel("no target qubits".into()));
        }
        let count = 1usize << (2 * m); // 4^m Pauli strings
        let paulis = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];
        let mut ops = Vec::with_capacity(count);
        for idx in 0..count {
            // the local string with target 0 in the low bits of the kron
            let mut op = linalg::identity(1);
            for k in (0..m).rev() {
                op = linalg::kron(&op, &paulis[(idx >> (2 * k)) & 3].matrix());
            }
            let weight = if idx == 0 {
                1.0 - p + p / count as f64
            } else {
                p / count as f64
            };
            if weight > 0.0 {
                ops.push(op.scale(weight.sqrt()));
            }
        }
        Self::new(ops, targets.to_vec())
    }

    pub fn kraus_ops(&self) -> &[CMatrix] {
        &self.kraus_ops
    }

    pub fn target_qubits(&self) -> &[usize] {
        &self.target_qubits
    }

    /// `‖Σ K†K − I‖_max`.
    pub fn completeness_defect(&self) -> f64 {
        let dim = 1usize << self.target_qubits.len();
        let mut sum = DMatrix::zeros(dim, dim);
        for k in &self.kraus_ops {
            sum += k.adjoint() * k;
        }
        linalg::max_abs_diff(&sum, &linalg::identity(dim))
    }

    /// `Σ K m K†` on an arbitrary (possibly unnormalized) operator.
    pub fn apply_to_operator(&self, m: &CMatrix, num_qubits: usize) -> Result<CMatrix> {
        if let Some(&q) = self.target_qubits.iter().find(|&&q| q >= num_qubits) {
            return Err(QsimError::InvalidChannel(format!(
                "target qubit {q} outside a {num_qubits}-qubit register"
            )));
        }
        if self.kraus_ops.len() == 1 && self.kraus_ops[0] == linalg::identity(self.kraus_ops[0].nrows()) {
            return Ok(m.clone());
        }
        let layout = LocalLayout::new(&self.target_qubits, num_qubits);
        let mut out = DMatrix::zeros(m.nrows(), m.ncols());
        for k in &self.kraus_ops {
            out += conjugate_local(k, &layout, m);
        }
        Ok(out)
    }
}

pub(crate) fn dephasing_probability(t2: f64, duration: f64) -> f64 {
    0.5 * (1.0 - (-duration / t2).exp())
}

/// `ρ' = Σ K ρ K†`.
pub fn apply_channel(rho: &DensityMatrix, ch: &KrausChannel) -> Result<DensityMatrix> {
    let defect = ch.completeness_defect();
    if defect > COMPLETENESS_TOLERANCE {
        return Err(QsimError::InvalidChannel(format!(
            "Σ K†K deviates from identity by {defect:e}"
        )));
    }
    let out = ch.apply_to_operator(rho.matrix(), rho.num_qubits())?;
    Ok(DensityMatrix::from_matrix_unchecked(rho.num_qubits(), out))
}

/// Pure dephasing channel for one qubit.
pub fn dephasing_channel(t2: f64, duration: f64, qubit: usize) -> Result<KrausChannel> {
    KrausChannel::dephasing(t2, duration, qubit)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::{prepare_state, StateName};
    use approx::assert_abs_diff_eq;

    fn plus() -> DensityMatrix {
        prepare_state(StateName::Plus, 1).unwrap().to_density_matrix()
    }

    #[test]
    fn identity_channel_leaves_state() {
        let rho = prepare_state(StateName::Bell, 2).unwrap().to_density_matrix();
        let out = apply_channel(&rho, &KrausChannel::identity(1)).unwrap();
        assert!(linalg::max_abs_diff(out.matrix(), rho.matrix()) < 1e-15);
    }

    #[test]
    fn dephasing_scales_coherences() {
        let (t2, t) = (55.0, 20.0);
        let out = apply_channel(&plus(), &dephasing_channel(t2, t, 0).unwrap()).unwrap();
        // hand computation: ρ01 → (1-2p) ρ01 with 1-2p = e^{-t/T2}
        assert_abs_diff_eq!(out.matrix()[(0, 1)].re, 0.5 * (-t / t2).exp(), epsilon = 1e-14);
        assert_abs_diff_eq!(out.matrix()[(0, 0)].re, 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(out.matrix()[(1, 1)].re, 0.5, epsilon = 1e-15);
    }

    #[test]
    fn dephasing_special_durations() {
        let t2 = 3.0;
        assert_eq!(dephasing_probability(t2, 0.0), 0.0);
        assert_abs_diff_eq!(dephasing_probability(t2, t2 * 2f64.ln()), 0.25, epsilon = 1e-15);
        assert_abs_diff_eq!(dephasing_probability(t2, 1e6), 0.5, epsilon = 1e-15);

        let half = apply_channel(&plus(), &dephasing_channel(t2, t2 * 2f64.ln(), 0).unwrap()).unwrap();
        assert_abs_diff_eq!(half.matrix()[(0, 1)].re, 0.25, epsilon = 1e-14);
        let zero = apply_channel(&plus(), &dephasing_channel(t2, 0.0, 0).unwrap()).unwrap();
        assert!(linalg::max_abs_diff(zero.matrix(), plus().matrix()) < 1e-15);
    }

    #[test]
    fn dephasing_rejects_nonpositive_t2() {
        assert!(matches!(
            dephasing_channel(0.0, 1.0, 0),
            Err(QsimError::InvalidNoiseParameter(_))
        ));
        assert!(matches!(
            dephasing_channel(-1.0, 1.0, 0),
            Err(QsimError::InvalidNoiseParameter(_))
        ));
    }

    #[test]
    fn full_depolarization_gives_maximally_mixed_marginal() {
        let rho = prepare_state(StateName::Bell, 2).unwrap().to_density_matrix();
        let out = apply_channel(&rho, &KrausChannel::depolarizing(1.0, &[0]).unwrap()).unwrap();
        let red = out.reduced(&[0]).unwrap();
        assert!(linalg::max_abs_diff(&red, &linalg::identity(2).scale(0.5)) < 1e-14);
        assert_abs_diff_eq!(out.trace(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn built_in_channels_are_trace_preserving() {
        let rho = prepare_state(StateName::Ghz, 3).unwrap().to_density_matrix();
        let channels = vec![
            KrausChannel::identity(2),
            KrausChannel::dephasing(2.0, 0.7, 1).unwrap(),
            KrausChannel::amplitude_damping(1.5, 0.9, 0).unwrap(),
            KrausChannel::depolarizing(0.3, &[2]).unwrap(),
            KrausChannel::depolarizing(0.01, &[0, 1]).unwrap(),
            KrausChannel::depolarizing(1.0, &[2, 0]).unwrap(),
        ];
        for ch in channels {
            let out = apply_channel(&rho, &ch).unwrap();
            assert_abs_diff_eq!(out.trace(), 1.0, epsilon = 1e-10);
            out.validate().unwrap();
        }
    }

    #[test]
    fn amplitude_damping_relaxes_excited_state() {
        let one = DensityMatrix::basis(1, 1).unwrap();
        let t1 = 2.0;
        let out = apply_channel(&one, &KrausChannel::amplitude_damping(t1, t1, 0).unwrap()).unwrap();
        assert_abs_diff_eq!(out.matrix()[(1, 1)].re, (-1.0f64).exp(), epsilon = 1e-14);
    }

    #[test]
    fn incomplete_kraus_set_is_rejected() {
        let res = KrausChannel::new(vec![linalg::identity(2).scale(0.5)], vec![0]);
        assert!(matches!(res, Err(QsimError::InvalidChannel(_))));
        let res = KrausChannel::new(vec![linalg::identity(4)], vec![0]);
        assert!(matches!(res, Err(QsimError::InvalidChannel(_))));
    }

    #[test]
    fn out_of_register_target_is_rejected() {
        let rho = DensityMatrix::basis(1, 0).unwrap();
        assert!(apply_channel(&rho, &KrausChannel::dephasing(1.0, 1.0, 3).unwrap()).is_err());
    }
}
