//! Subcommand implementations.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime};

use lgsim_core::config::{default_spec, load_spec};
use lgsim_core::format::fmt_g12;
use lgsim_core::inequalities::{noise_digest, Combination, ScanResult};
use lgsim_core::mitigation::{
    calibrate_with_mode, read_confusion_csv, CalibrationMode, InversionMethod, MAX_FULL_CALIBRATION_BITS,
};
use lgsim_core::observables::{CorrelatorEstimate, CountsTable, Method};
use lgsim_core::{
    joint_distribution_oracle, mitigate_correlator, ConfusionMatrix, CountsVector, EngineKind,
    JointDistribution, Mitigator, NoiseModel, RunManifest, ScenarioKind, ScenarioOutput, ScenarioSpec,
};
use qsim_core::noise::device;
use serde::{Deserialize, Serialize};

use crate::error::CliError;
use crate::{CalibrateArgs, EngineArg, MitigateArgs, ModeArg, OracleArgs, ScanArgs};

/// Seed environment fallback.
pub const SEED_ENV: &str = "LGSIM_SEED";

/// Largest disagreement tolerated between the two K3 routes in `oracle`.
const ORACLE_TOLERANCE: f64 = 1e-12;

fn env_seed() -> Result<Option<u64>, CliError> {
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| CliError::usage(format!("{SEED_ENV}='{v}' is not an unsigned integer"))),
        Err(_) => Ok(None),
    }
}

fn read_input(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))
}

fn write_output(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| CliError::runtime(format!("{}: {e}", path.display())))
}

/// Print to `out`, or to stdout when no path is given.
fn emit(out: Option<&PathBuf>, text: &str) -> Result<(), CliError> {
    match out {
        Some(path) => write_output(path, &format!("{text}\n")),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

/// Whether a config file pins the seed itself. Manifests always do.
fn config_sets_seed(path: &Path, text: &str) -> bool {
    if path.extension().is_some_and(|ext| ext == "json") {
        return true;
    }
    text.parse::<toml::Table>()
        .ok()
        .and_then(|t| t.get("engine").and_then(|e| e.get("seed")).cloned())
        .is_some()
}

fn build_spec(args: &ScanArgs) -> Result<ScenarioSpec, CliError> {
    let (mut spec, pinned) = match (&args.config, &args.scenario) {
        (Some(path), _) => {
            let text = read_input(path)?;
            (load_spec(path)?, config_sets_seed(path, &text))
        }
        (None, Some(name)) => (default_spec(name.parse::<ScenarioKind>()?), false),
        (None, None) => return Err(CliError::usage("scan needs a config file or --scenario NAME")),
    };
    if let Some(engine) = args.engine {
        spec.engine.kind = match engine {
            EngineArg::Exact => EngineKind::Exact,
            EngineArg::Sampled => EngineKind::Sampled,
        };
    }
    if let Some(shots) = args.shots {
        spec.engine.shots = shots;
    }
    match (args.seed, pinned) {
        (Some(seed), _) => spec.engine.seed = seed,
        (None, false) => {
            if let Some(seed) = env_seed()? {
                spec.engine.seed = seed;
            }
        }
        (None, true) => {}
    }
    spec.engine.mitigate |= args.mitigate;
    spec.engine.noise |= args.noise;
    for kv in &args.params {
        let (key, value) = kv
            .split_once('=')
            .ok_or_else(|| CliError::usage(format!("--param expects KEY=VALUE, got '{kv}'")))?;
        let value: f64 = value
            .trim()
            .parse()
            .map_err(|_| CliError::usage(format!("--param {key}: '{value}' is not a number")))?;
        spec.parameters.insert(key.trim().to_string(), value);
    }
    if let Some(points) = args.points {
        spec.grid.points = points;
        spec.grid.taus = None;
    }
    if let Some(tau_max) = args.tau_max {
        spec.grid.tau_max = Some(tau_max);
        spec.grid.taus = None;
    }
    spec.validate()?;
    Ok(spec)
}

fn scan_line(spec: &ScenarioSpec, scan: &ScanResult) -> String {
    let best = Combination::REPORTED
        .map(|c| format!("{}={:.6}", c.name(scan.mode()), scan.max(c)))
        .join(" ");
    format!(
        "{} [{}] {} points; violations {}; max {}",
        spec.scenario,
        scan.metadata.method,
        scan.results.len(),
        scan.summary(),
        best
    )
}

pub fn scan(args: ScanArgs) -> Result<(), CliError> {
    let spec = build_spec(&args)?;
    if let Some(jobs) = args.jobs {
        if jobs == 0 {
            return Err(CliError::usage("--jobs must be ≥ 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| CliError::runtime(e.to_string()))?;
    }
    fs::create_dir_all(&args.out).map_err(|e| CliError::runtime(format!("{}: {e}", args.out.display())))?;

    let started = SystemTime::now();
    let clock = Instant::now();
    let output = spec.run()?;
    let elapsed = clock.elapsed();

    let mut outputs = Vec::new();
    let mut save = |name: &str, text: String| -> Result<(), CliError> {
        let path = args.out.join(name);
        write_output(&path, &text)?;
        outputs.push(path.display().to_string());
        Ok(())
    };
    let (line, digest, metadata, depth) = match &output {
        ScenarioOutput::Scan {
            scan,
            reference,
            depth,
        } => {
            save("scan.csv", scan.to_csv())?;
            if let Some(reference) = reference {
                save("reference.csv", reference.to_csv())?;
            }
            (
                scan_line(&spec, scan),
                scan.metadata.noise_digest.clone(),
                Some(scan.metadata.clone()),
                *depth,
            )
        }
        ScenarioOutput::Region(map) => {
            save("region.csv", map.to_csv())?;
            let counts: Vec<String> = ["T3", "T3_prime", "T3_perm"]
                .iter()
                .enumerate()
                .map(|(k, name)| format!("{name}={}", map.cells.iter().filter(|c| c.violated[k]).count()))
                .collect();
            let line = format!(
                "{} [{} qubits] {} ratios x {} points; violating cells {}",
                spec.scenario,
                map.n_qubits,
                map.ratios.len(),
                map.taus.len(),
                counts.join(" ")
            );
            (line, noise_digest(None), None, None)
        }
    };
    let mut manifest = RunManifest::new(spec, digest, started, elapsed);
    manifest.scan = metadata;
    manifest.depth = depth;
    let manifest_path = args.out.join("manifest.json");
    manifest.outputs = outputs;
    manifest.outputs.push(manifest_path.display().to_string());
    write_output(&manifest_path, &manifest.to_json())?;
    println!("{line}");
    Ok(())
}

fn parse_matrix(path: &Path) -> Result<ConfusionMatrix, CliError> {
    let text = read_input(path)?;
    let located = |msg: String| CliError::usage(format!("{}: {msg}", path.display()));
    if path.extension().is_some_and(|ext| ext == "csv") {
        read_confusion_csv(text.as_bytes()).map_err(|e| located(e.to_string()))
    } else {
        serde_json::from_str(&text).map_err(|e| located(e.to_string()))
    }
}

/// `matrix` as a `num_bits` register: as is, or tensored from one bit.
fn fit_matrix(matrix: ConfusionMatrix, num_bits: usize) -> Result<ConfusionMatrix, CliError> {
    if matrix.num_bits() == num_bits {
        Ok(matrix)
    } else if matrix.num_bits() == 1 {
        matrix
            .tensor_power(num_bits)
            .map_err(|e| CliError::usage(e.to_string()))
    } else {
        Err(CliError::usage(format!(
            "a {}-bit confusion matrix does not fit a {num_bits}-bit register",
            matrix.num_bits()
        )))
    }
}

pub fn calibrate(args: CalibrateArgs) -> Result<(), CliError> {
    let truth = match (&args.matrix, args.flip_prob) {
        (Some(path), _) => fit_matrix(parse_matrix(path)?, args.bits)?,
        (None, p) => {
            let p = p.unwrap_or(device::READOUT_ERROR);
            ConfusionMatrix::symmetric_flip(p).map_err(|e| CliError::usage(e.to_string()))?
        }
    };
    let mode = match args.mode {
        Some(ModeArg::Full) => CalibrationMode::Full,
        Some(ModeArg::Tensor) => CalibrationMode::Tensor,
        None if args.bits > MAX_FULL_CALIBRATION_BITS => {
            return Err(CliError::usage(format!(
                "calibration of {} bits exceeds the full-mode cap of {MAX_FULL_CALIBRATION_BITS}; \
                 pass --mode tensor",
                args.bits
            )))
        }
        None => CalibrationMode::default_for(args.bits),
    };
    let seed = match args.seed {
        Some(s) => s,
        None => env_seed()?.unwrap_or(0),
    };
    let noise = NoiseModel::ideal(args.bits.max(1)).with_readout(truth);
    let estimate = calibrate_with_mode(&noise, args.bits, args.shots, seed, mode)?;
    let json = serde_json::to_string_pretty(&estimate).map_err(|e| CliError::runtime(e.to_string()))?;
    emit(args.out.as_ref(), &json)?;
    let line = format!("condition number: {}", fmt_g12(estimate.condition_number()));
    if args.out.is_some() {
        println!("{line}");
    } else {
        eprintln!("{line}");
    }
    Ok(())
}

#[derive(Deserialize)]
#[serde(untagged)]
enum CountsInput {
    Table(CountsTable),
    Register { num_bits: usize, counts: Vec<u64> },
}

#[derive(Serialize)]
struct MitigationReport {
    num_bits: usize,
    n_shots: u64,
    probs: Vec<f64>,
    method: InversionMethod,
    /// Smallest entry of the plain inverse before clipping; null when not computed.
    raw_min: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    raw_correlator: Option<CorrelatorEstimate>,
    #[serde(skip_serializing_if = "Option::is_none")]
    correlator: Option<CorrelatorEstimate>,
}

pub fn mitigate(args: MitigateArgs) -> Result<(), CliError> {
    let text = read_input(&args.counts)?;
    let input: CountsInput = serde_json::from_str(&text)
        .map_err(|e| CliError::usage(format!("{}: {e}", args.counts.display())))?;
    let (raw, table) = match input {
        CountsInput::Table(t) => (CountsVector::from_table(&t)?, Some(t)),
        CountsInput::Register { num_bits, counts } => (CountsVector::new(num_bits, counts)?, None),
    };
    let mitigator = Mitigator::new(fit_matrix(parse_matrix(&args.matrix)?, raw.num_bits())?);
    let quasi = mitigator.mitigate(&raw)?;
    let (raw_correlator, correlator) = match &table {
        Some(t) => {
            let seed = match args.seed {
                Some(s) => s,
                None => env_seed()?.unwrap_or(t.seed),
            };
            let (est, _) = mitigate_correlator(t, &mitigator, seed)?;
            (Some(t.estimate(Method::Sampled)), Some(est))
        }
        None => (None, None),
    };
    let report = MitigationReport {
        num_bits: raw.num_bits(),
        n_shots: raw.total(),
        probs: quasi.probs,
        method: quasi.method,
        raw_min: Some(quasi.raw_min).filter(|v| v.is_finite()),
        raw_correlator,
        correlator,
    };
    let json = serde_json::to_string_pretty(&report).map_err(|e| CliError::runtime(e.to_string()))?;
    emit(args.out.as_ref(), &json)
}

pub fn oracle(args: OracleArgs) -> Result<(), CliError> {
    let text = read_input(&args.distribution)?;
    let dist = JointDistribution::from_json(&text)
        .map_err(|e| CliError::usage(format!("{}: {e}", args.distribution.display())))?;
    let r = joint_distribution_oracle(&dist);
    println!("C12 = {}", fmt_g12(r.c12));
    println!("C23 = {}", fmt_g12(r.c23));
    println!("C13 = {}", fmt_g12(r.c13));
    println!("K3 (C12 + C23 - C13) = {}", fmt_g12(r.k3_assembled));
    println!("K3 (1 - 4[P(+-+) + P(-+-)]) = {}", fmt_g12(r.k3_formula));
    let gap = r.discrepancy();
    if gap > ORACLE_TOLERANCE {
        return Err(CliError::runtime(format!(
            "the two K3 routes disagree by {gap:e} (tolerance {ORACLE_TOLERANCE:e})"
        )));
    }
    println!(
        "agreement within {ORACLE_TOLERANCE:e}; classical bound K3 <= 1 holds: {}",
        r.k3_assembled <= 1.0 + ORACLE_TOLERANCE
    );
    Ok(())
}

pub fn list_scenarios() {
    for kind in ScenarioKind::ALL {
        println!("{:<22} {}", kind.as_str(), kind.description());
        let defaults: BTreeMap<String, f64> = default_spec(kind).parameters;
        let show = |keys: &[&str]| {
            keys.iter()
                .map(|k| match defaults.get(*k) {
                    Some(v) => format!("{k}={}", fmt_g12(*v)),
                    None => k.to_string(),
                })
                .collect::<Vec<_>>()
                .join(", ")
        };
        println!("    required: {}", show(kind.required()));
        if !kind.optional().is_empty() {
            println!("    optional: {}", show(kind.optional()));
        }
    }
}
