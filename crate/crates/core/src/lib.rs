//! Leggett-Garg (LGI) and Leggett-Garg-Bell (LGBI) inequality simulations.
//!
//! Builds on the dense engine in `qsim_core`: two-time correlators (exact and
//! shot-sampled), third-order inequality assembly and scans, readout-error
//! mitigation, and prebuilt scenarios driven by declarative configs.

// `!(x > 0.0)` is used on purpose: it also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod dynamics;
pub mod error;
pub mod format;
pub mod inequalities;
pub mod manifest;
pub mod mitigation;
pub mod observables;
pub mod scenarios;
pub mod seed;

pub use dynamics::Dynamics;
pub use error::{LgsimError, Result};
pub use inequalities::{
    assemble_third_order, closed_form_k3, joint_distribution_oracle, tau_scan, violation_region_scan,
    Combination, Engine, InequalityResult, JointDistribution, Mode, RegionMap, ScanResult, ScanSetup,
};
pub use manifest::RunManifest;
pub use mitigation::{calibrate, mitigate, mitigate_correlator, CountsVector, Mitigator, QuasiDistribution};
pub use observables::{
    exact_correlator, parity_observable, sampled_correlator, CorrelatorEstimate, CountsTable,
    MeasurementSchedule, Method,
};
pub use qsim_core::{ConfusionMatrix, DichotomicObservable, NoiseModel};
pub use scenarios::{EngineKind, EngineSettings, GridSpec, ScenarioKind, ScenarioOutput, ScenarioSpec};
