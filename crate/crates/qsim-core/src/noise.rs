//! Noise model: idle decoherence, gate depolarization and readout confusion.

use serde::{Deserialize, Serialize};

use crate::channel::KrausChannel;
use crate::error::{QsimError, Result};
use crate::readout::ConfusionMatrix;

/// Device characterization values (times in μs).
pub mod device {
    /// Average single-qubit gate error.
    pub const GATE_ERROR_1Q: f64 = 0.0003;
    /// Average CNOT error.
    pub const GATE_ERROR_2Q: f64 = 0.01;
    /// Average readout error.
    pub const READOUT_ERROR: f64 = 0.03;
    pub const T1_US: f64 = 140.0;
    pub const T2_US: f64 = 60.0;
    pub const GATE_LENGTH_US: f64 = 0.03;
    /// Coherence time quoted for the transmon run.
    pub const TRANSMON_T2_US: f64 = 55.0;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    pub t1: Vec<Option<f64>>,
    pub t2: Vec<Option<f64>>,
    pub gate_depolarizing_1q: f64,
    pub gate_depolarizing_2q: f64,
    pub readout_confusion: Option<ConfusionMatrix>,
    pub gate_duration: f64,
}

impl NoiseModel {
    /// No noise of any kind on `num_qubits` qubits.
    pub fn ideal(num_qubits: usize) -> Self {
        Self {
            t1: vec![None; num_qubits],
            t2: vec![None; num_qubits],
            gate_depolarizing_1q: 0.0,
            gate_depolarizing_2q: 0.0,
            readout_confusion: None,
            gate_duration: device::GATE_LENGTH_US,
        }
    }

    pub fn num_qubits(&self) -> usize {
        self.t1.len()
    }

    pub fn with_t2(mut self, t2: f64) -> Self {
        self.t2 = vec![Some(t2); self.t2.len()];
        self
    }

    pub fn with_t1(mut self, t1: f64) -> Self {
        self.t1 = vec![Some(t1); self.t1.len()];
        self
    }

    pub fn with_gate_depolarizing(mut self, p1: f64, p2: f64) -> Self {
        self.gate_depolarizing_1q = p1;
        self.gate_depolarizing_2q = p2;
        self
    }

    pub fn with_readout(mut self, confusion: ConfusionMatrix) -> Self {
        self.readout_confusion = Some(confusion);
        self
    }

    pub fn with_gate_duration(mut self, duration: f64) -> Self {
        self.gate_duration = duration;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.t1.len() != self.t2.len() {
            return Err(QsimError::InvalidNoiseParameter(format!(
                "t1 lists {} qubits, t2 lists {}",
                self.t1.len(),
                self.t2.len()
            )));
        }
        for (q, (t1, t2)) in self.t1.iter().zip(&self.t2).enumerate() {
            for (name, t) in [("t1", t1), ("t2", t2)] {
                if let Some(t) = t {
                    if !(*t > 0.0) {
                        return Err(QsimError::InvalidNoiseParameter(format!(
                            "{name} of qubit {q} must be > 0, got {t}"
                        )));
                    }
                }
            }
            if let (Some(t1), Some(t2)) = (t1, t2) {
                if *t2 > 2.0 * t1 {
                    return Err(QsimError::InvalidNoiseParameter(format!(
                        "qubit {q}: t2 = {t2} exceeds 2·t1 = {}",
                        2.0 * t1
                    )));
                }
            }
        }
        for (name, p) in [
            ("gate_depolarizing_1q", self.gate_depolarizing_1q),
            ("gate_depolarizing_2q", self.gate_depolarizing_2q),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(QsimError::InvalidNoiseParameter(format!(
                    "{name} = {p} outside [0, 1]"
                )));
            }
        }
        if !(self.gate_duration >= 0.0) {
            return Err(QsimError::InvalidNoiseParameter(format!(
                "gate_duration must be ≥ 0, got {}",
                self.gate_duration
            )));
        }
        Ok(())
    }

    pub fn has_decoherence(&self) -> bool {
        self.t1.iter().chain(&self.t2).any(Option::is_some)
    }

    pub fn has_gate_noise(&self) -> bool {
        self.gate_depolarizing_1q > 0.0 || self.gate_depolarizing_2q > 0.0
    }

    /// Channels for `duration` of free evolution. With both times set, the
    /// pure-dephasing rate is `1/T2 − 1/(2 T1)` so the total coherence decay
    /// is `e^{-t/T2}`.
    pub fn idle_channels(&self, duration: f64) -> Result<Vec<KrausChannel>> {
        let mut channels = Vec::new();
        if duration <= 0.0 {
            return Ok(channels);
        }
        for q in 0..self.t1.len() {
            if let Some(t1) = self.t1[q] {
                channels.push(KrausChannel::amplitude_damping(t1, duration, q)?);
            }
            let dephasing_rate = match (self.t1[q], self.t2[q]) {
                (Some(t1), Some(t2)) => 1.0 / t2 - 0.5 / t1,
                (None, Some(t2)) => 1.0 / t2,
                _ => 0.0,
            };
            if dephasing_rate > 0.0 {
                channels.push(KrausChannel::dephasing(dephasing_rate.recip(), duration, q)?);
            }
        }
        Ok(channels)
    }

    /// Depolarizing channel following a single-qubit gate on `qubit`.
    pub fn gate_channel_1q(&self, qubit: usize) -> Result<Option<KrausChannel>> {
        if self.gate_depolarizing_1q == 0.0 {
            return Ok(None);
        }
        KrausChannel::depolarizing(self.gate_depolarizing_1q, &[qubit]).map(Some)
    }

    /// Depolarizing channel following a two-qubit gate on `pair`.
    pub fn gate_channel_2q(&self, pair: &[usize]) -> Result<Option<KrausChannel>> {
        if self.gate_depolarizing_2q == 0.0 {
            return Ok(None);
        }
        KrausChannel::depolarizing(self.gate_depolarizing_2q, pair).map(Some)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::apply_channel;
    use crate::state::{prepare_state, StateName};

    #[test]
    fn physicality_constraint() {
        let ok = NoiseModel::ideal(2).with_t1(100.0).with_t2(150.0);
        ok.validate().unwrap();
        let bad = NoiseModel::ideal(2).with_t1(50.0).with_t2(150.0);
        assert!(bad.validate().is_err());
        let bad = NoiseModel::ideal(1).with_gate_depolarizing(1.5, 0.0);
        assert!(bad.validate().is_err());
    }

    #[test]
    fn combined_t1_t2_decay_rate() {
        let (t1, t2, t) = (140.0, 60.0, 25.0);
        let noise = NoiseModel::ideal(1).with_t1(t1).with_t2(t2);
        let mut rho = prepare_state(StateName::Plus, 1).unwrap().to_density_matrix();
        for ch in noise.idle_channels(t).unwrap() {
            rho = apply_channel(&rho, &ch).unwrap();
        }
        let coherence = rho.matrix()[(0, 1)].norm();
        assert!((coherence - 0.5 * (-t / t2).exp()).abs() < 1e-12);
    }

    #[test]
    fn ideal_model_has_no_channels() {
        let noise = NoiseModel::ideal(3);
        assert!(noise.idle_channels(10.0).unwrap().is_empty());
        assert!(noise.gate_channel_1q(0).unwrap().is_none());
        assert!(!noise.has_decoherence());
    }
}
