//! Declarative run configs (TOML) and scenario defaults.
//!
//! ```toml
//! schema_version = 1
//! scenario = "tfic"
//!
//! [parameters]
//! j = 0.1
//! gamma1 = 1.0   # ... through gamma5
//! k = 2
//!
//! [grid]          # optional; `taus = [...]` gives an explicit list
//! points = 75
//! tau_max = 1.0
//!
//! [engine]        # optional
//! kind = "sampled"
//! shots = 8192
//! seed = 7
//! noise = true
//! mitigate = false
//! ```

use std::path::Path;

use qsim_core::noise::device;

use crate::error::{LgsimError, Result};
use crate::manifest::RunManifest;
use crate::scenarios::{GridSpec, ScenarioKind, ScenarioSpec, DEFAULT_OMEGA_EFF};

/// Parse and validate a TOML config. Errors carry the line and key at fault.
pub fn parse_toml(text: &str) -> Result<ScenarioSpec> {
    let spec: ScenarioSpec = toml::from_str(text).map_err(|e| LgsimError::Config(e.to_string()))?;
    spec.validate()?;
    Ok(spec)
}

pub fn to_toml(spec: &ScenarioSpec) -> Result<String> {
    toml::to_string(spec).map_err(|e| LgsimError::Config(e.to_string()))
}

/// Load a spec from a TOML config, or from the `spec` of a JSON run manifest.
pub fn load_spec(path: &Path) -> Result<ScenarioSpec> {
    let text =
        std::fs::read_to_string(path).map_err(|e| LgsimError::Config(format!("{}: {e}", path.display())))?;
    let located = |e: LgsimError| LgsimError::Config(format!("{}: {e}", path.display()));
    if path.extension().is_some_and(|ext| ext == "json") {
        let manifest: RunManifest = serde_json::from_str(&text)
            .map_err(|e| LgsimError::Config(format!("{}: {e}", path.display())))?;
        manifest.spec.validate().map_err(located)?;
        return Ok(manifest.spec);
    }
    parse_toml(&text).map_err(|e| match e {
        LgsimError::Config(msg) => LgsimError::Config(format!("{}: {msg}", path.display())),
        other => other,
    })
}

/// A runnable spec with the reference parameters for each scenario.
pub fn default_spec(kind: ScenarioKind) -> ScenarioSpec {
    let spec = ScenarioSpec::new(kind);
    match kind {
        ScenarioKind::SingleQubit => spec.with_param("gamma", 1.0),
        ScenarioKind::Transmon => spec
            .with_param("omega", DEFAULT_OMEGA_EFF)
            .with_param("t2", device::TRANSMON_T2_US),
        ScenarioKind::BellPairLgiSingle | ScenarioKind::BellPairLgiGlobal | ScenarioKind::BellPairLgbi => {
            spec.with_param("gamma1", 1.0).with_param("gamma2", 1.0)
        }
        ScenarioKind::Tfic => spec
            .with_param("j", 0.1)
            .with_param("gamma1", 1.0)
            .with_param("gamma2", 1.0)
            .with_param("gamma3", 1.0)
            .with_param("gamma4", 1.0)
            .with_param("gamma5", 2.0)
            .with_param("k", 1.0),
        ScenarioKind::ParamScan => spec
            .with_param("n_qubits", 5.0)
            .with_param("ratio_min", 0.5)
            .with_param("ratio_max", 4.0)
            .with_param("ratio_points", 8.0)
            .with_grid(GridSpec::uniform(75, std::f64::consts::PI)),
    }
}
