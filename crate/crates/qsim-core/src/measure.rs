//! Projective measurement with collapse.

use crate::error::Result;
use crate::observable::{DichotomicObservable, Outcome};
use crate::state::DensityMatrix;

/// Branches with probability at or below this are reported as unreachable.
pub const UNREACHABLE_PROBABILITY: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct Branch {
    pub probability: f64,
    /// Post-measurement state, `None` when the branch is unreachable.
    pub state: Option<DensityMatrix>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementResult {
    pub plus: Branch,
    pub minus: Branch,
}

impl MeasurementResult {
    pub fn branch(&self, outcome: Outcome) -> &Branch {
        match outcome {
            Outcome::Plus => &self.plus,
            Outcome::Minus => &self.minus,
        }
    }

    pub fn probability(&self, outcome: Outcome) -> f64 {
        self.branch(outcome).probability
    }

    pub fn collapsed(&self, outcome: Outcome) -> Option<&DensityMatrix> {
        self.branch(outcome).state.as_ref()
    }

    /// `P(+1) − P(−1)`.
    pub fn expectation(&self) -> f64 {
        self.plus.probability - self.minus.probability
    }
}

/// `P(q) = Tr(Π_q ρ)` and `ρ_q = Π_q ρ Π_q / P(q)`.
pub fn measure_projective(rho: &DensityMatrix, obs: &DichotomicObservable) -> Result<MeasurementResult> {
    let n = rho.num_qubits();
    obs.check_register(n)?;
    let mut branches = Outcome::BOTH.iter().map(|&o| {
        let projected = obs.project_operator(o, rho.matrix(), n)?;
        let probability = crate::linalg::trace(&projected).re.max(0.0);
        let state = (probability > UNREACHABLE_PROBABILITY)
            .then(|| DensityMatrix::from_matrix_unchecked(n, projected.unscale(probability)));
        Ok(Branch { probability, state })
    });
    let plus = branches.next().expect("two outcomes")?;
    let minus = branches.next().expect("two outcomes")?;
    Ok(MeasurementResult { plus, minus })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::max_abs_diff;
    use crate::state::{prepare_state, StateName};
    use approx::assert_abs_diff_eq;

    #[test]
    fn ground_state_is_deterministic() {
        let rho = DensityMatrix::basis(1, 0).unwrap();
        let m = measure_projective(&rho, &DichotomicObservable::sigma_z(0)).unwrap();
        assert_abs_diff_eq!(m.probability(Outcome::Plus), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(m.probability(Outcome::Minus), 0.0, epsilon = 1e-15);
        assert!(max_abs_diff(m.collapsed(Outcome::Plus).unwrap().matrix(), rho.matrix()) < 1e-15);
        assert!(m.collapsed(Outcome::Minus).is_none());
    }

    #[test]
    fn plus_state_splits_evenly() {
        let rho = prepare_state(StateName::Plus, 1).unwrap().to_density_matrix();
        let m = measure_projective(&rho, &DichotomicObservable::sigma_z(0)).unwrap();
        assert_abs_diff_eq!(m.probability(Outcome::Plus), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(m.probability(Outcome::Minus), 0.5, epsilon = 1e-15);
        let zero = DensityMatrix::basis(1, 0).unwrap();
        let one = DensityMatrix::basis(1, 1).unwrap();
        assert!(max_abs_diff(m.collapsed(Outcome::Plus).unwrap().matrix(), zero.matrix()) < 1e-15);
        assert!(max_abs_diff(m.collapsed(Outcome::Minus).unwrap().matrix(), one.matrix()) < 1e-15);
    }

    #[test]
    fn bell_parity_is_even() {
        let rho = prepare_state(StateName::Bell, 2).unwrap().to_density_matrix();
        let parity = DichotomicObservable::parity(&[0, 1]).unwrap();
        let m = measure_projective(&rho, &parity).unwrap();
        // explicit 4x4 check: Π₊ = diag(1,0,0,1)
        let p_plus = parity.projector(Outcome::Plus, 2).unwrap();
        let direct = crate::linalg::trace(&(p_plus * rho.matrix())).re;
        assert_abs_diff_eq!(direct, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(m.probability(Outcome::Plus), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(m.probability(Outcome::Minus), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn collapsed_states_are_valid() {
        let rho = prepare_state(StateName::Ghz, 3).unwrap().to_density_matrix();
        let m = measure_projective(&rho, &DichotomicObservable::sigma_x(2)).unwrap();
        assert_abs_diff_eq!(
            m.probability(Outcome::Plus) + m.probability(Outcome::Minus),
            1.0,
            epsilon = 1e-10
        );
        for o in Outcome::BOTH {
            m.collapsed(o).unwrap().validate().unwrap();
        }
    }

    #[test]
    fn register_mismatch_is_rejected() {
        let rho = DensityMatrix::basis(1, 0).unwrap();
        assert!(measure_projective(&rho, &DichotomicObservable::sigma_z(1)).is_err());
    }
}
