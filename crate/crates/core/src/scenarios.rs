//! Prebuilt experiments: state, Hamiltonian, observables, noise and grid for
//! each figure-style run, plus the declarative spec that selects one.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use qsim_core::noise::device;
use qsim_core::{
    prepare_state, ConfusionMatrix, DichotomicObservable, NoiseModel, PauliSumHamiltonian, StateName,
    TrotterPlan,
};
use serde::{Deserialize, Serialize};

use crate::dynamics::Dynamics;
use crate::error::{LgsimError, Result};
use crate::inequalities::{
    tau_scan, uniform_grid, violation_region_scan, Engine, Mode, RegionMap, ScanResult, ScanSetup,
};
use crate::mitigation::{calibrate, record_confusion, Mitigator, DEFAULT_CALIBRATION_SHOTS};
use crate::seed;

pub const SCHEMA_VERSION: u32 = 1;
pub const DEFAULT_TAU_POINTS: usize = 75;
pub const DEFAULT_SHOTS: u64 = 8192;
/// Rotating-frame transmon frequency in rad/μs.
pub const DEFAULT_OMEGA_EFF: f64 = 1.0;
/// Default transmon τ range in oscillation periods.
pub const TRANSMON_PERIODS: f64 = 5.0;
pub const TFIC_QUBITS: usize = 5;
pub const MAX_TROTTER_STEPS: usize = 5;
/// Seed path reserved for readout calibration.
const CALIBRATION_STREAM: u64 = u64::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    SingleQubit,
    Transmon,
    BellPairLgiSingle,
    BellPairLgiGlobal,
    BellPairLgbi,
    Tfic,
    ParamScan,
}

impl ScenarioKind {
    pub const ALL: [ScenarioKind; 7] = [
        Self::SingleQubit,
        Self::Transmon,
        Self::BellPairLgiSingle,
        Self::BellPairLgiGlobal,
        Self::BellPairLgbi,
        Self::Tfic,
        Self::ParamScan,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::SingleQubit => "single_qubit",
            Self::Transmon => "transmon",
            Self::BellPairLgiSingle => "bell_pair_lgi_single",
            Self::BellPairLgiGlobal => "bell_pair_lgi_global",
            Self::BellPairLgbi => "bell_pair_lgbi",
            Self::Tfic => "tfic",
            Self::ParamScan => "param_scan",
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            Self::SingleQubit => "LGI on one qubit, H = (gamma/2) X from |0>",
            Self::Transmon => "LGI on a dephasing transmon, H = -(omega/2) Z from |+>, sigma_x readout",
            Self::BellPairLgiSingle => "Bell pair, independent X rotations, LGI on qubit 0",
            Self::BellPairLgiGlobal => "Bell pair, independent X rotations, LGI on the parity Z0 Z1",
            Self::BellPairLgbi => "Bell pair, independent X rotations, LGBI between qubits 0 and 1",
            Self::Tfic => "5-qubit transverse-field Ising chain from GHZ, Trotterized, LGBI q0/q4",
            Self::ParamScan => "exact LGBI violation map over frequency ratio and tau",
        }
    }

    pub fn required(self) -> &'static [&'static str] {
        match self {
            Self::SingleQubit => &["gamma"],
            Self::Transmon => &["omega", "t2"],
            Self::BellPairLgiSingle | Self::BellPairLgiGlobal | Self::BellPairLgbi => &["gamma1", "gamma2"],
            Self::Tfic => &["j", "gamma1", "gamma2", "gamma3", "gamma4", "gamma5", "k"],
            Self::ParamScan => &["n_qubits", "ratio_min", "ratio_max", "ratio_points"],
        }
    }

    pub fn optional(self) -> &'static [&'static str] {
        match self {
            Self::Transmon => &["t1", "readout_error"],
            Self::Tfic => &["readout_error", "depol_1q", "depol_2q"],
            Self::ParamScan => &[],
            _ => &["readout_error"],
        }
    }

    pub fn mode(self) -> Mode {
        match self {
            Self::SingleQubit | Self::Transmon | Self::BellPairLgiSingle => Mode::LgiSingle,
            Self::BellPairLgiGlobal => Mode::LgiGlobal,
            Self::BellPairLgbi | Self::Tfic | Self::ParamScan => Mode::Lgbi,
        }
    }
}

impl fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ScenarioKind {
    type Err = LgsimError;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| LgsimError::Config(format!("unknown scenario '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EngineKind {
    #[default]
    Exact,
    Sampled,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EngineSettings {
    pub kind: EngineKind,
    pub shots: u64,
    pub seed: u64,
    /// Enable the scenario's default noise (readout flips, gate depolarization).
    pub noise: bool,
    pub mitigate: bool,
    pub calibration_shots: u64,
}

impl Default for EngineSettings {
    fn default() -> Self {
        Self {
            kind: EngineKind::Exact,
            shots: DEFAULT_SHOTS,
            seed: 0,
            noise: false,
            mitigate: false,
            calibration_shots: DEFAULT_CALIBRATION_SHOTS,
        }
    }
}

impl EngineSettings {
    pub fn exact() -> Self {
        Self::default()
    }

    pub fn sampled(shots: u64, seed: u64) -> Self {
        Self {
            kind: EngineKind::Sampled,
            shots,
            seed,
            ..Self::default()
        }
    }

    pub fn with_noise(mut self, noise: bool) -> Self {
        self.noise = noise;
        self
    }

    pub fn with_mitigation(mut self, mitigate: bool) -> Self {
        self.mitigate = mitigate;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.kind == EngineKind::Sampled && self.shots == 0 {
            return Err(LgsimError::Config("engine.shots must be ≥ 1".into()));
        }
        if self.mitigate && self.kind == EngineKind::Exact {
            return Err(LgsimError::Config(
                "engine.mitigate needs the sampled engine".into(),
            ));
        }
        if self.mitigate && self.calibration_shots == 0 {
            return Err(LgsimError::Config("engine.calibration_shots must be ≥ 1".into()));
        }
        Ok(())
    }
}

/// τ grid: an explicit list, or `points` uniform values on `[tau_min, tau_max]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSpec {
    pub points: usize,
    pub tau_min: f64,
    /// Scenario default when absent.
    pub tau_max: Option<f64>,
    pub taus: Option<Vec<f64>>,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            points: DEFAULT_TAU_POINTS,
            tau_min: 0.0,
            tau_max: None,
            taus: None,
        }
    }
}

impl GridSpec {
    pub fn explicit(taus: Vec<f64>) -> Self {
        Self {
            taus: Some(taus),
            ..Self::default()
        }
    }

    pub fn uniform(points: usize, tau_max: f64) -> Self {
        Self {
            points,
            tau_max: Some(tau_max),
            ..Self::default()
        }
    }

    pub fn resolve(&self, default_max: f64) -> Vec<f64> {
        match &self.taus {
            Some(t) => t.clone(),
            None => uniform_grid(self.tau_min, self.tau_max.unwrap_or(default_max), self.points),
        }
    }
}

/// A complete, serializable description of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    pub schema_version: u32,
    pub scenario: ScenarioKind,
    #[serde(with = "param_map")]
    pub parameters: BTreeMap<String, f64>,
    #[serde(default)]
    pub grid: GridSpec,
    #[serde(default)]
    pub engine: EngineSettings,
}

impl ScenarioSpec {
    pub fn new(scenario: ScenarioKind) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            scenario,
            parameters: BTreeMap::new(),
            grid: GridSpec::default(),
            engine: EngineSettings::default(),
        }
    }

    pub fn with_param(mut self, key: &str, value: f64) -> Self {
        self.parameters.insert(key.to_string(), value);
        self
    }

    pub fn with_grid(mut self, grid: GridSpec) -> Self {
        self.grid = grid;
        self
    }

    pub fn with_engine(mut self, engine: EngineSettings) -> Self {
        self.engine = engine;
        self
    }

    /// Schema version, parameter names and engine settings.
    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(LgsimError::Config(format!(
                "schema_version {} is not supported (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        let kind = self.scenario;
        for key in kind.required() {
            if !self.parameters.contains_key(*key) {
                return Err(LgsimError::Config(format!(
                    "missing required parameter '{key}' for scenario {kind}"
                )));
            }
        }
        for key in self.parameters.keys() {
            if !kind.required().contains(&key.as_str()) && !kind.optional().contains(&key.as_str()) {
                return Err(LgsimError::Config(format!(
                    "unknown parameter '{key}' for scenario {kind}"
                )));
            }
        }
        self.engine.validate()?;
        if kind == ScenarioKind::ParamScan && self.engine.kind != EngineKind::Exact {
            return Err(LgsimError::Config(
                "param_scan runs on the exact engine only".into(),
            ));
        }
        Ok(())
    }

    fn param(&self, key: &str) -> f64 {
        self.parameters[key]
    }

    fn positive(&self, key: &str) -> Result<f64> {
        let v = self.param(key);
        if v > 0.0 {
            Ok(v)
        } else {
            Err(LgsimError::InvalidScenario(format!("{key} must be > 0, got {v}")))
        }
    }

    fn probability(&self, key: &str, default: f64) -> Result<f64> {
        let v = self.parameters.get(key).copied().unwrap_or(default);
        if (0.0..=1.0).contains(&v) {
            Ok(v)
        } else {
            Err(LgsimError::InvalidScenario(format!(
                "{key} must lie in [0, 1], got {v}"
            )))
        }
    }

    fn integer(&self, key: &str) -> Result<usize> {
        let v = self.param(key);
        if v >= 0.0 && v.fract() == 0.0 && v <= usize::MAX as f64 {
            Ok(v as usize)
        } else {
            Err(LgsimError::InvalidScenario(format!(
                "{key} must be a whole number, got {v}"
            )))
        }
    }

    /// Readout flips applied when the noise toggle is on.
    fn readout(&self) -> Result<Option<ConfusionMatrix>> {
        if !self.engine.noise {
            return Ok(None);
        }
        let p = self.probability("readout_error", device::READOUT_ERROR)?;
        Ok(if p > 0.0 {
            Some(ConfusionMatrix::symmetric_flip(p)?)
        } else {
            None
        })
    }

    pub fn run(&self) -> Result<ScenarioOutput> {
        self.validate()?;
        let s = self;
        match self.scenario {
            ScenarioKind::SingleQubit => {
                let gamma = s.positive("gamma")?;
                let setup = single_qubit_setup(gamma, noise_with_readout(1, s.readout()?))?;
                s.scan(setup, 2.0 * PI / gamma)
            }
            ScenarioKind::Transmon => {
                let omega = s.positive("omega")?;
                let t2 = s.positive("t2")?;
                let t1 = match s.parameters.get("t1") {
                    Some(_) => Some(s.positive("t1")?),
                    None => None,
                };
                let setup = transmon_setup(omega, t2, t1, s.readout()?)?;
                let reference = transmon_setup(omega, f64::INFINITY, None, None)?;
                s.scan_with_reference(setup, reference, TRANSMON_PERIODS * 2.0 * PI / omega, None)
            }
            ScenarioKind::BellPairLgiSingle
            | ScenarioKind::BellPairLgiGlobal
            | ScenarioKind::BellPairLgbi => {
                let g1 = s.positive("gamma1")?;
                let g2 = s.positive("gamma2")?;
                let setup =
                    bell_pair_setup(self.scenario.mode(), g1, g2, noise_with_readout(2, s.readout()?))?;
                s.scan(setup, 2.0 * PI / g1)
            }
            ScenarioKind::Tfic => {
                let j = s.param("j");
                let gammas: Vec<f64> = (1..=TFIC_QUBITS)
                    .map(|i| s.positive(&format!("gamma{i}")))
                    .collect::<Result<_>>()?;
                let k = s.integer("k")?;
                let mut noise = noise_with_readout(TFIC_QUBITS, s.readout()?);
                if s.engine.noise {
                    let p1 = s.probability("depol_1q", device::GATE_ERROR_1Q)?;
                    let p2 = s.probability("depol_2q", device::GATE_ERROR_2Q)?;
                    noise = Some(
                        noise
                            .unwrap_or_else(|| NoiseModel::ideal(TFIC_QUBITS))
                            .with_gate_depolarizing(p1, p2),
                    );
                }
                let setup = tfic_setup(j, &gammas, k, noise)?;
                let reference = tfic_reference_setup(j, &gammas)?;
                s.scan_with_reference(setup, reference, 1.0 / gammas[0], Some(tfic_depth(k)))
            }
            ScenarioKind::ParamScan => {
                let n = s.integer("n_qubits")?;
                let lo = s.positive("ratio_min")?;
                let hi = s.positive("ratio_max")?;
                let points = s.integer("ratio_points")?;
                if points == 0 || hi < lo {
                    return Err(LgsimError::InvalidScenario(
                        "ratio grid needs ratio_points ≥ 1 and ratio_max ≥ ratio_min".into(),
                    ));
                }
                let ratios = uniform_grid(lo, hi, points);
                let taus = s.grid.resolve(PI);
                Ok(ScenarioOutput::Region(violation_region_scan(n, &ratios, &taus)?))
            }
        }
    }

    fn scan(&self, setup: ScanSetup, default_max: f64) -> Result<ScenarioOutput> {
        let engine = build_engine(&self.engine, &setup)?;
        let scan = tau_scan(&setup, &self.grid.resolve(default_max), &engine)?;
        Ok(ScenarioOutput::Scan {
            scan,
            reference: None,
            depth: None,
        })
    }

    fn scan_with_reference(
        &self,
        setup: ScanSetup,
        reference: ScanSetup,
        default_max: f64,
        depth: Option<CircuitDepth>,
    ) -> Result<ScenarioOutput> {
        let grid = self.grid.resolve(default_max);
        let engine = build_engine(&self.engine, &setup)?;
        let scan = tau_scan(&setup, &grid, &engine)?;
        let reference = tau_scan(&reference, &grid, &Engine::Exact)?;
        Ok(ScenarioOutput::Scan {
            scan,
            reference: Some(reference),
            depth,
        })
    }
}

/// Result of running a [`ScenarioSpec`].
#[derive(Debug, Clone, PartialEq)]
#[allow(clippy::large_enum_variant)] // one value per run
pub enum ScenarioOutput {
    Scan {
        scan: ScanResult,
        /// Exact comparison curve (undamped transmon, non-Trotter TFIC).
        reference: Option<ScanResult>,
        depth: Option<CircuitDepth>,
    },
    Region(RegionMap),
}

impl ScenarioOutput {
    pub fn scan(&self) -> Option<&ScanResult> {
        match self {
            Self::Scan { scan, .. } => Some(scan),
            Self::Region(_) => None,
        }
    }

    pub fn reference(&self) -> Option<&ScanResult> {
        match self {
            Self::Scan { reference, .. } => reference.as_ref(),
            Self::Region(_) => None,
        }
    }

    pub fn region(&self) -> Option<&RegionMap> {
        match self {
            Self::Region(r) => Some(r),
            Self::Scan { .. } => None,
        }
    }
}

/// Abstract layer counts per correlator circuit: state preparation, two layers
/// per Trotter step up to the final time, and one layer per measurement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CircuitDepth {
    pub k: usize,
    pub c12: usize,
    pub c23: usize,
    pub c13: usize,
}

pub fn tfic_depth(k: usize) -> CircuitDepth {
    // H plus a CNOT ladder prepares GHZ
    let prep = TFIC_QUBITS;
    let measurements = 2;
    CircuitDepth {
        k,
        c12: prep + 2 * k + measurements,
        c23: prep + 2 * (2 * k) + measurements,
        c13: prep + 2 * (2 * k) + measurements,
    }
}

fn noise_with_readout(n: usize, readout: Option<ConfusionMatrix>) -> Option<NoiseModel> {
    readout.map(|cm| NoiseModel::ideal(n).with_readout(cm))
}

/// Turn engine settings into an [`Engine`], calibrating a pair confusion matrix
/// when mitigation is requested.
pub fn build_engine(settings: &EngineSettings, setup: &ScanSetup) -> Result<Engine> {
    settings.validate()?;
    match settings.kind {
        EngineKind::Exact => Ok(Engine::Exact),
        EngineKind::Sampled if !settings.mitigate => Ok(Engine::sampled(settings.shots, settings.seed)),
        EngineKind::Sampled => {
            let single = setup
                .noise
                .as_ref()
                .and_then(|n| n.readout_confusion.clone())
                .unwrap_or(ConfusionMatrix::identity(1)?);
            let record = record_confusion(&single, setup.first.qubits().len(), setup.second.qubits().len())?;
            let device = NoiseModel::ideal(1).with_readout(record);
            let calibrated = calibrate(
                &device,
                2,
                settings.calibration_shots,
                seed::derive_seed(settings.seed, &[CALIBRATION_STREAM]),
            )?;
            Ok(Engine::Sampled {
                shots: settings.shots,
                seed: settings.seed,
                mitigator: Some(Mitigator::new(calibrated)),
            })
        }
    }
}

/// One qubit from `|0⟩` under `H = (γ/2)X`, `σz` at every time.
pub fn single_qubit_setup(gamma: f64, noise: Option<NoiseModel>) -> Result<ScanSetup> {
    let z = DichotomicObservable::sigma_z(0);
    Ok(ScanSetup {
        label: ScenarioKind::SingleQubit.to_string(),
        rho0: prepare_state(StateName::Zero, 1)?.to_density_matrix(),
        dynamics: Dynamics::exact(PauliSumHamiltonian::single_qubit_x(gamma)?)?,
        first: z.clone(),
        second: z,
        mode: Mode::LgiSingle,
        noise,
        horizon: None,
    })
}

/// Transmon from `|+⟩` under `H = −(Ω/2)Z`, read out in the `σx` basis, with
/// pure dephasing of time `t2` (or combined decay when `t1` is given).
/// `t2 = ∞` switches dephasing off.
pub fn transmon_setup(
    omega: f64,
    t2: f64,
    t1: Option<f64>,
    readout: Option<ConfusionMatrix>,
) -> Result<ScanSetup> {
    let mut noise = NoiseModel::ideal(1);
    if t2.is_finite() {
        noise = noise.with_t2(t2);
    }
    if let Some(t1) = t1 {
        noise = noise.with_t1(t1);
    }
    if let Some(cm) = readout {
        noise = noise.with_readout(cm);
    }
    noise.validate()?;
    let active = noise.has_decoherence() || noise.readout_confusion.is_some();
    let x = DichotomicObservable::sigma_x(0);
    Ok(ScanSetup {
        label: ScenarioKind::Transmon.to_string(),
        rho0: prepare_state(StateName::Plus, 1)?.to_density_matrix(),
        dynamics: Dynamics::exact(PauliSumHamiltonian::z_rotation(omega)?)?,
        first: x.clone(),
        second: x,
        mode: Mode::LgiSingle,
        noise: active.then_some(noise),
        horizon: None,
    })
}

/// τ values `(π/3 + 2πn)/Ω`, where the undamped `K3` peaks, up to `tau_max`.
pub fn transmon_peak_grid(omega: f64, tau_max: f64) -> Vec<f64> {
    (0..)
        .map(|n| (PI / 3.0 + 2.0 * PI * n as f64) / omega)
        .take_while(|&t| t <= tau_max)
        .collect()
}

/// Bell pair under `H = (Γ1/2)X0 + (Γ2/2)X1`. Observables per mode: `σz0`
/// (single), `σz0σz1` (global), `σz0` then `σz1` (LGBI).
pub fn bell_pair_setup(mode: Mode, g1: f64, g2: f64, noise: Option<NoiseModel>) -> Result<ScanSetup> {
    let (first, second, kind) = match mode {
        Mode::LgiSingle => (
            DichotomicObservable::sigma_z(0),
            DichotomicObservable::sigma_z(0),
            ScenarioKind::BellPairLgiSingle,
        ),
        Mode::LgiGlobal => {
            let q = DichotomicObservable::parity(&[0, 1])?;
            (q.clone(), q, ScenarioKind::BellPairLgiGlobal)
        }
        Mode::Lgbi => (
            DichotomicObservable::sigma_z(0),
            DichotomicObservable::sigma_z(1),
            ScenarioKind::BellPairLgbi,
        ),
    };
    Ok(ScanSetup {
        label: kind.to_string(),
        rho0: prepare_state(StateName::Bell, 2)?.to_density_matrix(),
        dynamics: Dynamics::exact(PauliSumHamiltonian::independent_x_rotations(&[g1, g2])?)?,
        first,
        second,
        mode,
        noise,
        horizon: None,
    })
}

fn tfic_common(j: f64, gammas: &[f64]) -> Result<PauliSumHamiltonian> {
    if gammas.len() != TFIC_QUBITS {
        return Err(LgsimError::InvalidScenario(format!(
            "tfic needs {TFIC_QUBITS} field values, got {}",
            gammas.len()
        )));
    }
    Ok(PauliSumHamiltonian::transverse_field_ising(j, gammas)?)
}

fn tfic_with(dynamics: Dynamics, noise: Option<NoiseModel>, label: &str) -> Result<ScanSetup> {
    Ok(ScanSetup {
        label: label.to_string(),
        rho0: prepare_state(StateName::Ghz, TFIC_QUBITS)?.to_density_matrix(),
        dynamics,
        first: DichotomicObservable::sigma_z(0),
        second: DichotomicObservable::sigma_z(TFIC_QUBITS - 1),
        mode: Mode::Lgbi,
        noise,
        horizon: None,
    })
}

/// GHZ chain under `H = −JΣZZ − ΣΓX`, `k` Trotter steps per τ, LGBI between
/// the end qubits.
pub fn tfic_setup(j: f64, gammas: &[f64], k: usize, noise: Option<NoiseModel>) -> Result<ScanSetup> {
    if !(1..=MAX_TROTTER_STEPS).contains(&k) {
        return Err(LgsimError::InvalidScenario(format!(
            "k must lie in 1..={MAX_TROTTER_STEPS}, got {k}"
        )));
    }
    trotterized_tfic(j, gammas, k, noise)
}

/// Like [`tfic_setup`] without the cap on `k` (for convergence diagnostics).
pub fn trotterized_tfic(j: f64, gammas: &[f64], k: usize, noise: Option<NoiseModel>) -> Result<ScanSetup> {
    let h = tfic_common(j, gammas)?;
    let plan = TrotterPlan::even_odd(&h, k)?;
    tfic_with(Dynamics::trotter(h, plan)?, noise, ScenarioKind::Tfic.as_str())
}

/// Exact (non-Trotter, noiseless) TFIC reference.
pub fn tfic_reference_setup(j: f64, gammas: &[f64]) -> Result<ScanSetup> {
    let h = tfic_common(j, gammas)?;
    tfic_with(Dynamics::exact(h)?, None, "tfic_reference")
}

/// Serialize parameter values as numbers, except non-finite ones which become
/// the strings `"inf"`, `"-inf"` or `"nan"` (JSON has no literal for them).
mod param_map {
    use std::collections::BTreeMap;

    use serde::de::Error;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    #[serde(untagged)]
    enum Value {
        Number(f64),
        Text(String),
    }

    pub fn serialize<S: Serializer>(map: &BTreeMap<String, f64>, s: S) -> Result<S::Ok, S::Error> {
        map.iter()
            .map(|(k, &v)| {
                let value = if v.is_finite() {
                    Value::Number(v)
                } else {
                    Value::Text(v.to_string().to_lowercase())
                };
                (k.clone(), value)
            })
            .collect::<BTreeMap<_, _>>()
            .serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BTreeMap<String, f64>, D::Error> {
        let raw = BTreeMap::<String, Value>::deserialize(d)?;
        raw.into_iter()
            .map(|(k, v)| {
                let x = match v {
                    Value::Number(x) => x,
                    Value::Text(t) => t
                        .parse::<f64>()
                        .map_err(|_| D::Error::custom(format!("parameter '{k}': '{t}' is not a number")))?,
                };
                Ok((k, x))
            })
            .collect()
    }
}
