//! End-to-end runs of the `lgsim` binary.

use std::f64::consts::PI;
use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn lgsim(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lgsim"))
        .args(args)
        .current_dir(dir)
        .env_remove("LGSIM_SEED")
        .output()
        .expect("binary runs")
}

fn lgsim_env(args: &[&str], dir: &Path, seed: &str) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lgsim"))
        .args(args)
        .current_dir(dir)
        .env("LGSIM_SEED", seed)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn read(path: impl AsRef<Path>) -> String {
    fs::read_to_string(path).unwrap()
}

/// Rows of a CSV as string fields, header excluded.
fn rows(csv: &str) -> Vec<Vec<String>> {
    csv.lines()
        .skip(1)
        .map(|l| l.split(',').map(String::from).collect())
        .collect()
}

const SINGLE_QUBIT: &str = r#"
schema_version = 1
scenario = "single_qubit"

[parameters]
gamma = 1.0
"#;

#[test]
fn single_qubit_exact_scan_peaks_at_the_closed_form_maximum() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("sq.toml"), SINGLE_QUBIT).unwrap();
    let out = lgsim(&["scan", "sq.toml", "--out", "run"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert!(stdout(&out).contains("K3=36"), "{}", stdout(&out));

    let csv = read(dir.path().join("run/scan.csv"));
    assert_eq!(
        csv.lines().next().unwrap(),
        "tau,K3,K3_prime,K3_perm,err_K3,err_K3_prime,err_K3_perm,violated_K3,violated_K3_prime,violated_K3_perm"
    );
    let data = rows(&csv);
    assert_eq!(data.len(), 75);
    let max_k3 = data
        .iter()
        .map(|r| r[1].parse::<f64>().unwrap())
        .fold(f64::MIN, f64::max);

    // 75 points on [0, 2π] never land on π/3; the best attainable is the
    // closed form at the nearest grid point
    let step = 2.0 * PI / 74.0;
    let oracle = (0..75)
        .map(|i| {
            let x = i as f64 * step;
            2.0 * x.cos() - (2.0 * x).cos()
        })
        .fold(f64::MIN, f64::max);
    assert!((max_k3 - oracle).abs() < 1e-9, "{max_k3} vs {oracle}");
    assert!(1.5 - max_k3 < 1.5 * step * step && max_k3 <= 1.5 + 1e-9);

    let manifest: Value = serde_json::from_str(&read(dir.path().join("run/manifest.json"))).unwrap();
    assert_eq!(manifest["schema_version"], 1);
    assert_eq!(manifest["spec"]["scenario"], "single_qubit");
    assert_eq!(manifest["outputs"].as_array().unwrap().len(), 2);
    assert!(manifest["duration_s"].as_f64().unwrap() >= 0.0);
}

#[test]
fn single_shot_sampling_gives_unit_correlators_and_flagged_errors() {
    let dir = tempfile::tempdir().unwrap();
    let out = lgsim(
        &[
            "scan",
            "--scenario",
            "single_qubit",
            "--engine",
            "sampled",
            "--shots",
            "1",
            "--seed",
            "4",
            "--out",
            "o",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    for row in rows(&read(dir.path().join("o/scan.csv"))) {
        for v in &row[1..4] {
            // sums of three ±1 correlators
            assert!(["-3", "-1", "1", "3"].contains(&v.as_str()), "{row:?}");
        }
        assert_eq!(&row[4..7], ["NaN", "NaN", "NaN"]);
    }
}

#[test]
fn missing_parameter_is_a_config_error_naming_the_key() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("bad.toml"),
        "schema_version = 1\nscenario = \"single_qubit\"\n[parameters]\n",
    )
    .unwrap();
    let out = lgsim(&["scan", "bad.toml"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("'gamma'"), "{}", stderr(&out));
}

#[test]
fn malformed_config_reports_the_line() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("bad.toml"),
        "schema_version = 1\nscenario = \"single_qubit\"\ngrid = [\n",
    )
    .unwrap();
    let out = lgsim(&["scan", "bad.toml"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("line"), "{}", stderr(&out));
}

#[test]
fn unknown_parameter_and_bad_flags_are_usage_errors() {
    let dir = tempfile::tempdir().unwrap();
    let out = lgsim(
        &["scan", "--scenario", "single_qubit", "--param", "omega=2"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("omega"));
    assert_eq!(
        lgsim(&["scan", "--frobnicate"], dir.path()).status.code(),
        Some(2)
    );
    assert_eq!(
        lgsim(&["scan", "--scenario", "nope"], dir.path()).status.code(),
        Some(2)
    );
    let mitigate_exact = lgsim(&["scan", "--scenario", "single_qubit", "--mitigate"], dir.path());
    assert_eq!(mitigate_exact.status.code(), Some(2));
}

#[test]
fn rerunning_a_manifest_reproduces_the_csv_byte_for_byte() {
    let dir = tempfile::tempdir().unwrap();
    let args = [
        "scan",
        "--scenario",
        "bell_pair_lgbi",
        "--engine",
        "sampled",
        "--shots",
        "300",
        "--seed",
        "11",
        "--noise",
        "--mitigate",
        "--points",
        "20",
    ];
    let first = lgsim(&[&args[..], &["--out", "a", "--jobs", "1"]].concat(), dir.path());
    assert_eq!(first.status.code(), Some(0), "{}", stderr(&first));
    let again = lgsim(&[&args[..], &["--out", "b", "--jobs", "4"]].concat(), dir.path());
    assert_eq!(again.status.code(), Some(0));
    let replay = lgsim(&["scan", "a/manifest.json", "--out", "c"], dir.path());
    assert_eq!(replay.status.code(), Some(0), "{}", stderr(&replay));

    let a = read(dir.path().join("a/scan.csv"));
    assert_eq!(a, read(dir.path().join("b/scan.csv")));
    assert_eq!(a, read(dir.path().join("c/scan.csv")));
    let manifest: Value = serde_json::from_str(&read(dir.path().join("a/manifest.json"))).unwrap();
    assert_eq!(manifest["seed"], 11);
    assert!(manifest["scan"]["mitigation"].is_object());
}

#[test]
fn seed_falls_back_to_the_environment() {
    let dir = tempfile::tempdir().unwrap();
    let base = [
        "scan",
        "--scenario",
        "single_qubit",
        "--engine",
        "sampled",
        "--shots",
        "50",
        "--points",
        "10",
    ];
    assert_eq!(
        lgsim_env(&[&base[..], &["--out", "env"]].concat(), dir.path(), "5")
            .status
            .code(),
        Some(0)
    );
    assert_eq!(
        lgsim(
            &[&base[..], &["--seed", "5", "--out", "flag"]].concat(),
            dir.path()
        )
        .status
        .code(),
        Some(0)
    );
    assert_eq!(
        lgsim_env(
            &[&base[..], &["--seed", "6", "--out", "over"]].concat(),
            dir.path(),
            "5"
        )
        .status
        .code(),
        Some(0)
    );
    let env = read(dir.path().join("env/scan.csv"));
    assert_eq!(env, read(dir.path().join("flag/scan.csv")));
    assert_ne!(env, read(dir.path().join("over/scan.csv")));

    // a seed written in the config wins over the environment
    fs::write(
        dir.path().join("seeded.toml"),
        format!(
            "{SINGLE_QUBIT}\n[engine]\nkind = \"sampled\"\nshots = 50\nseed = 5\n\n[grid]\npoints = 10\n"
        ),
    )
    .unwrap();
    assert_eq!(
        lgsim_env(&["scan", "seeded.toml", "--out", "cfg"], dir.path(), "9")
            .status
            .code(),
        Some(0)
    );
    assert_eq!(env, read(dir.path().join("cfg/scan.csv")));

    assert_eq!(
        lgsim_env(&base, dir.path(), "not-a-number").status.code(),
        Some(2)
    );
}

#[test]
fn scenario_specific_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = lgsim(
        &["scan", "--scenario", "transmon", "--points", "30", "--out", "t"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert!(dir.path().join("t/reference.csv").exists());

    let out = lgsim(
        &[
            "scan",
            "--scenario",
            "tfic",
            "--param",
            "k=2",
            "--points",
            "15",
            "--out",
            "f",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert!(read(dir.path().join("f/scan.csv")).starts_with("tau,T3,T3_prime,T3_perm,"));
    let manifest: Value = serde_json::from_str(&read(dir.path().join("f/manifest.json"))).unwrap();
    assert_eq!(manifest["depth"]["k"], 2);

    let out = lgsim(
        &[
            "scan",
            "--scenario",
            "param_scan",
            "--param",
            "n_qubits=2",
            "--param",
            "ratio_points=3",
            "--points",
            "20",
            "--out",
            "p",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let region = read(dir.path().join("p/region.csv"));
    assert!(region.starts_with("ratio,tau,T3,T3_prime,T3_perm,violated_T3,"));
    assert_eq!(rows(&region).len(), 60);
    assert!(stdout(&out).contains("violating cells"));
}

fn matrix_entries(json: &str) -> Vec<Vec<f64>> {
    let v: Value = serde_json::from_str(json).unwrap();
    v["matrix"]
        .as_array()
        .unwrap()
        .iter()
        .map(|r| {
            r.as_array()
                .unwrap()
                .iter()
                .map(|x| x.as_f64().unwrap())
                .collect()
        })
        .collect()
}

#[test]
fn calibrate_recovers_the_flip_probability() {
    let dir = tempfile::tempdir().unwrap();
    let out = lgsim(
        &[
            "calibrate",
            "--bits",
            "1",
            "--flip-prob",
            "0.03",
            "--shots",
            "1000000",
            "--seed",
            "2",
            "--out",
            "m.json",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert!(stdout(&out).starts_with("condition number: "));
    let m = matrix_entries(&read(dir.path().join("m.json")));
    let want = [[0.97, 0.03], [0.03, 0.97]];
    for r in 0..2 {
        for c in 0..2 {
            assert!((m[r][c] - want[r][c]).abs() < 0.001, "{m:?}");
        }
    }
}

#[test]
fn calibrate_without_flips_gives_the_identity() {
    let dir = tempfile::tempdir().unwrap();
    let out = lgsim(
        &["calibrate", "--bits", "2", "--flip-prob", "0", "--shots", "1000"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let m = matrix_entries(&stdout(&out));
    for (r, row) in m.iter().enumerate() {
        for (c, &v) in row.iter().enumerate() {
            assert_eq!(v, if r == c { 1.0 } else { 0.0 });
        }
    }
}

#[test]
fn calibrate_rejects_oversized_and_invalid_requests() {
    let dir = tempfile::tempdir().unwrap();
    let full = lgsim(&["calibrate", "--bits", "7", "--mode", "full"], dir.path());
    assert_eq!(full.status.code(), Some(2));
    assert!(stderr(&full).contains("exceeds"));
    assert_eq!(
        lgsim(&["calibrate", "--bits", "7"], dir.path()).status.code(),
        Some(2)
    );
    assert_eq!(
        lgsim(&["calibrate", "--flip-prob", "1.5"], dir.path())
            .status
            .code(),
        Some(2)
    );
    let tensor = lgsim(
        &["calibrate", "--bits", "7", "--mode", "tensor", "--shots", "200"],
        dir.path(),
    );
    assert_eq!(tensor.status.code(), Some(0), "{}", stderr(&tensor));
}

#[test]
fn mitigate_undoes_a_calibrated_readout() {
    let dir = tempfile::tempdir().unwrap();
    let cal = lgsim(
        &[
            "calibrate",
            "--bits",
            "2",
            "--flip-prob",
            "0.05",
            "--shots",
            "200000",
            "--seed",
            "8",
            "--out",
            "m.json",
        ],
        dir.path(),
    );
    assert_eq!(cal.status.code(), Some(0), "{}", stderr(&cal));

    // perfectly correlated record (C = 1) read through 5% flips on each bit:
    // P(++) = P(--) = (0.95² + 0.05²)/2, P(+-) = P(-+) = 0.95·0.05
    let n = 100_000u64;
    let same = ((0.95f64 * 0.95 + 0.05 * 0.05) / 2.0 * n as f64).round() as u64;
    let diff = (n - 2 * same) / 2;
    let table = format!(
        r#"{{"outcomes": {{"++": {same}, "+-": {diff}, "-+": {diff}, "--": {}}}, "n_shots": {n}, "seed": 1}}"#,
        n - same - 2 * diff
    );
    fs::write(dir.path().join("counts.json"), table).unwrap();
    let out = lgsim(
        &[
            "mitigate",
            "--counts",
            "counts.json",
            "--matrix",
            "m.json",
            "--out",
            "mit.json",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let report: Value = serde_json::from_str(&read(dir.path().join("mit.json"))).unwrap();
    let raw = report["raw_correlator"]["value"].as_f64().unwrap();
    let fixed = report["correlator"]["value"].as_f64().unwrap();
    assert!((raw - 0.81).abs() < 1e-3, "{raw}");
    assert!((fixed - 1.0).abs() < 0.02, "{fixed}");
    let probs: Vec<f64> = report["probs"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_f64().unwrap())
        .collect();
    assert!(probs.iter().all(|&p| p >= 0.0));
    assert!((probs.iter().sum::<f64>() - 1.0).abs() < 1e-9);

    // plain registers and CSV matrices are accepted too
    fs::write(
        dir.path().join("reg.json"),
        r#"{"num_bits": 1, "counts": [970, 30]}"#,
    )
    .unwrap();
    fs::write(dir.path().join("m.csv"), "0.97,0.03\n0.03,0.97\n").unwrap();
    let out = lgsim(
        &["mitigate", "--counts", "reg.json", "--matrix", "m.csv"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let report: Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert!((report["probs"][0].as_f64().unwrap() - 1.0).abs() < 1e-9);
    assert!(report.get("correlator").is_none());

    fs::write(
        dir.path().join("bad.json"),
        r#"{"outcomes": {"++": 1, "+-": 0, "-+": 0, "--": 0}, "n_shots": 5, "seed": 0}"#,
    )
    .unwrap();
    let out = lgsim(
        &["mitigate", "--counts", "bad.json", "--matrix", "m.json"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn oracle_checks_classical_distributions() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("u.json"),
        "[0.125,0.125,0.125,0.125,0.125,0.125,0.125,0.125]",
    )
    .unwrap();
    let out = lgsim(&["oracle", "--distribution", "u.json"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("K3 (C12 + C23 - C13) = 0\n"));
    assert!(stdout(&out).contains("K3 (1 - 4[P(+-+) + P(-+-)]) = 0\n"));

    fs::write(dir.path().join("d.json"), r#"{"+-+": 1.0}"#).unwrap();
    let out = lgsim(&["oracle", "--distribution", "d.json"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("K3 (C12 + C23 - C13) = -3\n"));

    fs::write(
        dir.path().join("n.json"),
        "[-0.1,0.2,0.125,0.125,0.125,0.125,0.125,0.275]",
    )
    .unwrap();
    assert_eq!(
        lgsim(&["oracle", "--distribution", "n.json"], dir.path())
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        lgsim(&["oracle", "--distribution", "missing.json"], dir.path())
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn list_scenarios_names_every_scenario() {
    let dir = tempfile::tempdir().unwrap();
    let out = lgsim(&["list-scenarios"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    for name in [
        "single_qubit",
        "transmon",
        "bell_pair_lgi_single",
        "bell_pair_lgi_global",
        "bell_pair_lgbi",
        "tfic",
        "param_scan",
    ] {
        assert!(text.lines().any(|l| l.starts_with(name)), "{name} missing");
    }
}
