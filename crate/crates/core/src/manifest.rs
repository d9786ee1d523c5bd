//! Run manifests: everything needed to repeat a run, plus where its output went.

use std::time::{Duration, SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::inequalities::ScanMetadata;
use crate::scenarios::{CircuitDepth, ScenarioSpec, SCHEMA_VERSION};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub schema_version: u32,
    pub tool_version: String,
    /// The spec after command-line overrides; re-running it reproduces the outputs.
    pub spec: ScenarioSpec,
    pub seed: u64,
    pub noise_digest: String,
    pub outputs: Vec<String>,
    pub scan: Option<ScanMetadata>,
    pub depth: Option<CircuitDepth>,
    pub started_unix_s: f64,
    pub finished_unix_s: f64,
    pub duration_s: f64,
}

impl RunManifest {
    pub fn new(spec: ScenarioSpec, noise_digest: String, started: SystemTime, elapsed: Duration) -> Self {
        let start = unix_seconds(started);
        Self {
            schema_version: SCHEMA_VERSION,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            seed: spec.engine.seed,
            spec,
            noise_digest,
            outputs: Vec::new(),
            scan: None,
            depth: None,
            started_unix_s: start,
            finished_unix_s: start + elapsed.as_secs_f64(),
            duration_s: elapsed.as_secs_f64(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifests serialize")
    }
}

fn unix_seconds(t: SystemTime) -> f64 {
    t.duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs_f64())
        .unwrap_or(0.0)
}
