//! Dense statevector / density-matrix engine for few-qubit dynamics.
//!
//! Qubit `q` is bit `q` of a basis index, so tensor products are written
//! `q_{n-1} ⊗ … ⊗ q_0`. Registers are capped at [`MAX_QUBITS`] qubits.

// `!(x > 0.0)` is used on purpose: it also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channel;
pub mod error;
pub mod hamiltonian;
pub mod linalg;
pub mod measure;
pub mod noise;
pub mod observable;
pub mod propagator;
pub mod readout;
pub mod state;
pub mod trotter;

use nalgebra::DMatrix;
use num_complex::Complex64;

pub use channel::{apply_channel, dephasing_channel, KrausChannel};
pub use error::{QsimError, Result};
pub use hamiltonian::{Pauli, PauliString, PauliSumHamiltonian, PauliTerm};
pub use measure::{measure_projective, Branch, MeasurementResult, UNREACHABLE_PROBABILITY};
pub use noise::NoiseModel;
pub use observable::{DichotomicObservable, Outcome};
pub use propagator::{propagator, Propagator, Spectrum};
pub use readout::ConfusionMatrix;
pub use state::{prepare_state, DensityMatrix, PureState, StateName};
pub use trotter::{trotter_propagator, TrotterPlan, TrotterStep};

pub type CMatrix = DMatrix<Complex64>;

/// Largest register the dense engine accepts (4096×4096 density matrices).
pub const MAX_QUBITS: usize = 12;
