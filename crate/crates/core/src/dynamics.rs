//! Time evolution of (possibly unnormalized) operators with optional noise.

use qsim_core::{CMatrix, KrausChannel, NoiseModel, PauliSumHamiltonian, QsimError, Spectrum, TrotterPlan};

use crate::error::Result;

/// How the system is propagated between measurements.
#[derive(Debug, Clone)]
pub enum Dynamics {
    /// Exact `exp(-iHt)`; noise contributes idle decoherence only.
    Exact {
        hamiltonian: PauliSumHamiltonian,
        spectrum: Spectrum,
    },
    /// First-order even/odd Trotter product with step `plan.dt()`. A segment of
    /// length `d` uses `round(d / dt)` steps (at least one when `d > 0`).
    Trotter {
        hamiltonian: PauliSumHamiltonian,
        plan: TrotterPlan,
    },
}

impl Dynamics {
    pub fn exact(hamiltonian: PauliSumHamiltonian) -> Result<Self> {
        let spectrum = Spectrum::new(&hamiltonian)?;
        Ok(Self::Exact {
            hamiltonian,
            spectrum,
        })
    }

    pub fn trotter(hamiltonian: PauliSumHamiltonian, plan: TrotterPlan) -> Result<Self> {
        plan.validate_partition(&hamiltonian)?;
        Ok(Self::Trotter { hamiltonian, plan })
    }

    pub fn hamiltonian(&self) -> &PauliSumHamiltonian {
        match self {
            Self::Exact { hamiltonian, .. } | Self::Trotter { hamiltonian, .. } => hamiltonian,
        }
    }

    pub fn num_qubits(&self) -> usize {
        self.hamiltonian().num_qubits()
    }

    /// Trotter dynamics re-stepped for a scan point: `dt = tau / k`.
    pub fn for_tau(&self, tau: f64) -> Self {
        match self {
            Self::Exact { .. } => self.clone(),
            Self::Trotter { hamiltonian, plan } => Self::Trotter {
                hamiltonian: hamiltonian.clone(),
                plan: plan.clone().with_dt(tau / plan.steps() as f64),
            },
        }
    }

    /// Number of Trotter steps used for a segment of length `duration`.
    pub fn steps_for(&self, duration: f64) -> Result<usize> {
        match self {
            Self::Exact { .. } => Ok(usize::from(duration > 0.0)),
            Self::Trotter { plan, .. } => {
                if duration == 0.0 {
                    return Ok(0);
                }
                if !(plan.dt() > 0.0) {
                    return Err(QsimError::InvalidTrotterPlan(format!(
                        "step dt = {} cannot cover a segment of length {duration}",
                        plan.dt()
                    ))
                    .into());
                }
                Ok(((duration / plan.dt()).round() as usize).max(1))
            }
        }
    }

    /// Evolve `op` for `duration`, interleaving channels from `noise`.
    pub fn evolve(&self, op: &CMatrix, duration: f64, noise: Option<&NoiseModel>) -> Result<CMatrix> {
        if !(duration >= 0.0) {
            return Err(QsimError::InvalidTimeInterval {
                t_start: 0.0,
                t_end: duration,
            }
            .into());
        }
        if duration == 0.0 {
            return Ok(op.clone());
        }
        let n = self.num_qubits();
        match self {
            Self::Exact { spectrum, .. } => {
                let u = spectrum.unitary(duration);
                let mut out = &u * op * u.adjoint();
                if let Some(noise) = noise {
                    out = apply_all(&noise.idle_channels(duration)?, &out, n)?;
                }
                Ok(out)
            }
            Self::Trotter { plan, .. } => {
                let steps = self.steps_for(duration)?;
                let dt = duration / steps as f64;
                let factors = plan.step_factors(n, dt);
                let layer_noise = match noise {
                    Some(noise) => Some(LayerNoise::new(noise, plan, n, dt)?),
                    None => None,
                };
                let mut out = op.clone();
                for _ in 0..steps {
                    out = &factors.odd * out * factors.odd.adjoint();
                    if let Some(ln) = &layer_noise {
                        out = apply_all(&ln.after_odd, &out, n)?;
                    }
                    out = &factors.even * out * factors.even.adjoint();
                    if let Some(ln) = &layer_noise {
                        out = apply_all(&ln.after_even, &out, n)?;
                    }
                }
                Ok(out)
            }
        }
    }
}

/// Channels applied after each layer of a Trotter step.
struct LayerNoise {
    after_odd: Vec<KrausChannel>,
    after_even: Vec<KrausChannel>,
}

impl LayerNoise {
    fn new(noise: &NoiseModel, plan: &TrotterPlan, n: usize, dt: f64) -> Result<Self> {
        let mut after_odd = Vec::new();
        for pair in plan.layer_bonds(false) {
            after_odd.extend(noise.gate_channel_2q(&pair)?);
        }
        // field rotations ride along with the odd layer
        for q in 0..n {
            after_odd.extend(noise.gate_channel_1q(q)?);
        }
        let mut after_even = Vec::new();
        for pair in plan.layer_bonds(true) {
            after_even.extend(noise.gate_channel_2q(&pair)?);
        }
        after_even.extend(noise.idle_channels(dt)?);
        Ok(Self {
            after_odd,
            after_even,
        })
    }
}

fn apply_all(channels: &[KrausChannel], op: &CMatrix, n: usize) -> Result<CMatrix> {
    let mut out = op.clone();
    for ch in channels {
        out = ch.apply_to_operator(&out, n)?;
    }
    Ok(out)
}
