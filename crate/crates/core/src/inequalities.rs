//! Third-order LGI/LGBI combinations, violation detection and scans.
//!
//! With correlators `C12 = C(0, τ)`, `C23 = C(τ, 2τ)` and `C13 = C(0, 2τ)`:
//!
//! | combination | signs on (C12, C23, C13) |
//! |-------------|--------------------------|
//! | `K3`        | `+ + −`                  |
//! | `K3_prime`  | `− − −`                  |
//! | `K3_perm`   | `− + +`                  |
//! | `K3_fourth` | `+ − +`                  |
//!
//! Macrorealism (or locality, for LGBIs) bounds each by `−3 ≤ K ≤ 1`. LGBI
//! results use the `T3` names.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use qsim_core::{DensityMatrix, DichotomicObservable, NoiseModel, PauliSumHamiltonian, StateName};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::dynamics::Dynamics;
use crate::error::{LgsimError, Result};
use crate::format::fmt_g12;
use crate::mitigation::{mitigate_correlator, InversionMethod, Mitigator};
use crate::observables::{
    exact_correlator, sampled_correlator, CorrelatorEstimate, MeasurementSchedule, Method,
};
use crate::seed;

/// Violation margin for exact data.
pub const EXACT_MARGIN: f64 = 1e-9;
/// Sampled data must exceed 1 by this many propagated standard errors.
pub const SAMPLED_MARGIN_SIGMAS: f64 = 2.0;
/// Tolerance on the normalization of a joint distribution.
pub const DISTRIBUTION_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// LGI on a single-qubit observable.
    LgiSingle,
    /// LGI on a multi-qubit (parity) observable.
    LgiGlobal,
    /// LGBI: first and second measurements on disjoint qubits.
    Lgbi,
}

impl Mode {
    fn prefix(self) -> &'static str {
        match self {
            Mode::Lgbi => "T3",
            _ => "K3",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Combination {
    Plain,
    Prime,
    Perm,
    Fourth,
}

impl Combination {
    /// The three combinations reported by default.
    pub const REPORTED: [Combination; 3] = [Self::Plain, Self::Prime, Self::Perm];
    pub const ALL: [Combination; 4] = [Self::Plain, Self::Prime, Self::Perm, Self::Fourth];

    /// Signs on `(C12, C23, C13)`.
    pub fn signs(self) -> [f64; 3] {
        match self {
            Self::Plain => [1.0, 1.0, -1.0],
            Self::Prime => [-1.0, -1.0, -1.0],
            Self::Perm => [-1.0, 1.0, 1.0],
            Self::Fourth => [1.0, -1.0, 1.0],
        }
    }

    pub fn evaluate(self, c12: f64, c23: f64, c13: f64) -> f64 {
        let [a, b, c] = self.signs();
        a * c12 + b * c23 + c * c13
    }

    fn index(self) -> usize {
        self as usize
    }

    /// Column name, e.g. `K3_prime` or `T3`.
    pub fn name(self, mode: Mode) -> String {
        let suffix = match self {
            Self::Plain => "",
            Self::Prime => "_prime",
            Self::Perm => "_perm",
            Self::Fourth => "_fourth",
        };
        format!("{}{suffix}", mode.prefix())
    }

    /// The combination obtained after relabeling `Q → −Q` at time `t ∈ {1,2,3}`.
    pub fn flipped(self, time: usize) -> Combination {
        let [mut a, mut b, mut c] = self.signs();
        match time {
            1 => {
                a = -a;
                c = -c;
            }
            2 => {
                a = -a;
                b = -b;
            }
            3 => {
                b = -b;
                c = -c;
            }
            _ => panic!("measurement time index {time} is not 1, 2 or 3"),
        }
        // each flip preserves the product of the signs, so the image is one of the four
        Self::ALL
            .into_iter()
            .find(|comb| comb.signs() == [a, b, c])
            .expect("single-time flips map the four patterns onto each other")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InequalityResult {
    pub tau: f64,
    pub mode: Mode,
    pub method: Method,
    /// `[C12, C23, C13]`.
    pub correlators: [CorrelatorEstimate; 3],
    /// Indexed by `Combination as usize`.
    pub values: [f64; 4],
    /// Propagated standard error; NaN when a single-shot input leaves it undefined.
    pub errors: [f64; 4],
    pub violated: [bool; 4],
}

impl InequalityResult {
    pub fn value(&self, comb: Combination) -> f64 {
        self.values[comb.index()]
    }

    pub fn error(&self, comb: Combination) -> f64 {
        self.errors[comb.index()]
    }

    pub fn is_violated(&self, comb: Combination) -> bool {
        self.violated[comb.index()]
    }

    pub fn any_violated(&self) -> bool {
        Combination::REPORTED.iter().any(|&c| self.is_violated(c))
    }
}

/// The threshold above 1 a value must exceed to count as a violation.
pub fn decision_margin(method: Method, std_error: f64) -> f64 {
    match method {
        Method::Exact => EXACT_MARGIN,
        _ if std_error.is_nan() => 0.0,
        _ => (SAMPLED_MARGIN_SIGMAS * std_error).max(0.0),
    }
}

/// Combine three correlators into all sign patterns.
pub fn assemble_third_order(
    tau: f64,
    c12: CorrelatorEstimate,
    c23: CorrelatorEstimate,
    c13: CorrelatorEstimate,
    mode: Mode,
) -> Result<InequalityResult> {
    let method = c12.method;
    if c23.method != method || c13.method != method {
        return Err(LgsimError::MixedMethod(format!(
            "C12 is {}, C23 is {}, C13 is {}",
            c12.method, c23.method, c13.method
        )));
    }
    let cs = [c12, c23, c13];
    let err = if cs.iter().all(CorrelatorEstimate::has_defined_error) {
        cs.iter().map(|c| c.std_error * c.std_error).sum::<f64>().sqrt()
    } else {
        f64::NAN
    };
    let values = Combination::ALL.map(|comb| comb.evaluate(c12.value, c23.value, c13.value));
    let margin = decision_margin(method, err);
    Ok(InequalityResult {
        tau,
        mode,
        method,
        correlators: cs,
        values,
        errors: [err; 4],
        violated: values.map(|v| v > 1.0 + margin),
    })
}

/// Single-qubit closed forms `(K3, K3′, K3ᵖᵉʳᵐ)` for `C(Δt) = cos(γΔt)`.
pub fn closed_form_k3(gamma: f64, tau: f64) -> (f64, f64, f64) {
    let x = gamma * tau;
    (
        2.0 * x.cos() - (2.0 * x).cos(),
        -2.0 * x.cos() - (2.0 * x).cos(),
        (2.0 * x).cos(),
    )
}

/// Outcome labels of a three-time record, `Q1` first.
pub const JOINT_OUTCOMES: [&str; 8] = ["+++", "++-", "+-+", "+--", "-++", "-+-", "--+", "---"];

/// A classical joint distribution `P(Q1, Q2, Q3)`, indexed as [`JOINT_OUTCOMES`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct JointDistribution([f64; 8]);

impl JointDistribution {
    pub fn new(p: [f64; 8]) -> Result<Self> {
        if let Some((i, v)) = p
            .iter()
            .enumerate()
            .find(|(_, v)| !(**v >= 0.0) || !v.is_finite())
        {
            return Err(LgsimError::InvalidDistribution(format!(
                "P({}) = {v} is not a nonnegative number",
                JOINT_OUTCOMES[i]
            )));
        }
        let sum: f64 = p.iter().sum();
        if (sum - 1.0).abs() > DISTRIBUTION_TOLERANCE {
            return Err(LgsimError::InvalidDistribution(format!(
                "probabilities sum to {sum}"
            )));
        }
        Ok(Self(p))
    }

    pub fn uniform() -> Self {
        Self([0.125; 8])
    }

    pub fn delta(outcome: &str) -> Result<Self> {
        let i = JOINT_OUTCOMES
            .iter()
            .position(|o| *o == outcome)
            .ok_or_else(|| LgsimError::InvalidDistribution(format!("unknown outcome '{outcome}'")))?;
        let mut p = [0.0; 8];
        p[i] = 1.0;
        Ok(Self(p))
    }

    pub fn probabilities(&self) -> &[f64; 8] {
        &self.0
    }

    /// Parse either an array of 8 numbers or an object keyed by outcome label.
    pub fn from_json(text: &str) -> Result<Self> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            List(Vec<f64>),
            Map(BTreeMap<String, f64>),
        }
        let repr: Repr =
            serde_json::from_str(text).map_err(|e| LgsimError::InvalidDistribution(e.to_string()))?;
        let mut p = [0.0; 8];
        match repr {
            Repr::List(v) => {
                if v.len() != 8 {
                    return Err(LgsimError::InvalidDistribution(format!(
                        "expected 8 entries, got {}",
                        v.len()
                    )));
                }
                p.copy_from_slice(&v);
            }
            Repr::Map(m) => {
                for (k, v) in m {
                    let i = JOINT_OUTCOMES
                        .iter()
                        .position(|o| *o == k)
                        .ok_or_else(|| LgsimError::InvalidDistribution(format!("unknown outcome '{k}'")))?;
                    p[i] = v;
                }
            }
        }
        Self::new(p)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OracleResult {
    pub c12: f64,
    pub c23: f64,
    pub c13: f64,
    /// `C12 + C23 − C13`.
    pub k3_assembled: f64,
    /// `1 − 4[P(+,−,+) + P(−,+,−)]`.
    pub k3_formula: f64,
}

impl OracleResult {
    pub fn discrepancy(&self) -> f64 {
        (self.k3_assembled - self.k3_formula).abs()
    }
}

/// Correlators of a classical three-time record by marginalization.
pub fn joint_distribution_oracle(dist: &JointDistribution) -> OracleResult {
    let p = dist.probabilities();
    let q = |i: usize, t: usize| if (i >> (2 - t)) & 1 == 0 { 1.0 } else { -1.0 };
    let corr = |a: usize, b: usize| (0..8).map(|i| q(i, a) * q(i, b) * p[i]).sum::<f64>();
    let (c12, c23, c13) = (corr(0, 1), corr(1, 2), corr(0, 2));
    OracleResult {
        c12,
        c23,
        c13,
        k3_assembled: c12 + c23 - c13,
        k3_formula: 1.0 - 4.0 * (p[0b010] + p[0b101]),
    }
}

/// `n` equally spaced points on `[start, end]`, endpoints included.
pub fn uniform_grid(start: f64, end: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![start],
        _ => (0..n)
            .map(|i| start + (end - start) * i as f64 / (n - 1) as f64)
            .collect(),
    }
}

fn validate_grid(grid: &[f64], name: &str) -> Result<()> {
    if grid.is_empty() {
        return Err(LgsimError::InvalidGrid(format!("{name} grid is empty")));
    }
    if let Some(x) = grid.iter().find(|x| !x.is_finite() || **x < 0.0) {
        return Err(LgsimError::InvalidGrid(format!(
            "{name} grid value {x} is not a finite non-negative number"
        )));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(LgsimError::InvalidGrid(format!(
            "{name} grid is not strictly increasing"
        )));
    }
    Ok(())
}

/// Everything a τ scan needs besides the grid and the engine.
#[derive(Debug, Clone)]
pub struct ScanSetup {
    pub label: String,
    pub rho0: DensityMatrix,
    pub dynamics: Dynamics,
    /// Measured at the earlier time of each correlator.
    pub first: DichotomicObservable,
    /// Measured at the later time of each correlator.
    pub second: DichotomicObservable,
    pub mode: Mode,
    pub noise: Option<NoiseModel>,
    /// Largest admissible final time `2τ`.
    pub horizon: Option<f64>,
}

/// How correlators are estimated.
#[derive(Debug, Clone)]
pub enum Engine {
    Exact,
    Sampled {
        shots: u64,
        seed: u64,
        /// Pair confusion matrix used to mitigate each correlator.
        mitigator: Option<Mitigator>,
    },
}

impl Engine {
    pub fn sampled(shots: u64, seed: u64) -> Self {
        Self::Sampled {
            shots,
            seed,
            mitigator: None,
        }
    }

    pub fn method(&self) -> Method {
        match self {
            Self::Exact => Method::Exact,
            Self::Sampled { mitigator: None, .. } => Method::Sampled,
            Self::Sampled { .. } => Method::SampledMitigated,
        }
    }
}

/// Descriptor written next to scan output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanMetadata {
    pub scenario: String,
    pub mode: Mode,
    pub method: Method,
    pub shots: Option<u64>,
    pub seed: Option<u64>,
    pub noise_digest: String,
    /// How often each inversion method was used on the observed counts.
    pub mitigation: Option<BTreeMap<InversionMethod, usize>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanResult {
    pub grid: Vec<f64>,
    pub results: Vec<InequalityResult>,
    pub metadata: ScanMetadata,
}

impl ScanResult {
    pub fn mode(&self) -> Mode {
        self.metadata.mode
    }

    pub fn values(&self, comb: Combination) -> Vec<f64> {
        self.results.iter().map(|r| r.value(comb)).collect()
    }

    pub fn max(&self, comb: Combination) -> f64 {
        self.values(comb).into_iter().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn violation_count(&self, comb: Combination) -> usize {
        self.results.iter().filter(|r| r.is_violated(comb)).count()
    }

    pub fn csv_header(mode: Mode) -> String {
        let names = Combination::REPORTED.map(|c| c.name(mode));
        let mut cols = vec!["tau".to_string()];
        cols.extend(names.iter().cloned());
        cols.extend(names.iter().map(|n| format!("err_{n}")));
        cols.extend(names.iter().map(|n| format!("violated_{n}")));
        cols.join(",")
    }

    /// One header line, then one row per grid point.
    pub fn to_csv(&self) -> String {
        let mut out = Self::csv_header(self.mode());
        out.push('\n');
        for r in &self.results {
            let mut fields = vec![fmt_g12(r.tau)];
            fields.extend(Combination::REPORTED.map(|c| fmt_g12(r.value(c))));
            fields.extend(Combination::REPORTED.map(|c| fmt_g12(r.error(c))));
            fields.extend(Combination::REPORTED.map(|c| r.is_violated(c).to_string()));
            let _ = writeln!(out, "{}", fields.join(","));
        }
        out
    }

    /// Per-combination violation counts, e.g. `K3=12 K3_prime=0 K3_perm=3`.
    pub fn summary(&self) -> String {
        Combination::REPORTED
            .map(|c| format!("{}={}", c.name(self.mode()), self.violation_count(c)))
            .join(" ")
    }
}

/// SHA-256 of the canonical JSON form of a noise model (or of `null`).
pub fn noise_digest(noise: Option<&NoiseModel>) -> String {
    let json = serde_json::to_vec(&noise).expect("noise models serialize");
    hex::encode(Sha256::digest(&json))
}

fn point_correlators(
    setup: &ScanSetup,
    tau: f64,
    index: usize,
    engine: &Engine,
) -> Result<(InequalityResult, Vec<InversionMethod>)> {
    let dynamics = setup.dynamics.for_tau(tau);
    let schedules = [(0.0, tau), (tau, 2.0 * tau), (0.0, 2.0 * tau)];
    let mut estimates = Vec::with_capacity(3);
    let mut inversions = Vec::new();
    for (c, (ti, tj)) in schedules.into_iter().enumerate() {
        let sched = MeasurementSchedule::new(ti, tj, setup.first.clone(), setup.second.clone())?;
        let est = match engine {
            Engine::Exact => exact_correlator(&setup.rho0, &dynamics, &sched, setup.noise.as_ref())?,
            Engine::Sampled {
                shots,
                seed,
                mitigator,
            } => {
                let path = [index as u64, c as u64];
                let (raw, counts) = sampled_correlator(
                    &setup.rho0,
                    &dynamics,
                    &sched,
                    *shots,
                    setup.noise.as_ref(),
                    seed::derive_seed(*seed, &path),
                )?;
                match mitigator {
                    None => raw,
                    Some(m) => {
                        let boot = seed::derive_seed(*seed, &[index as u64, c as u64, 1]);
                        let (est, how) = mitigate_correlator(&counts, m, boot)?;
                        inversions.push(how);
                        est
                    }
                }
            }
        };
        estimates.push(est);
    }
    let result = assemble_third_order(tau, estimates[0], estimates[1], estimates[2], setup.mode)?;
    Ok((result, inversions))
}

/// Evaluate `C12(0,τ)`, `C23(τ,2τ)`, `C13(0,2τ)` and all combinations at each
/// grid point. Points run in parallel; output follows grid order.
pub fn tau_scan(setup: &ScanSetup, grid: &[f64], engine: &Engine) -> Result<ScanResult> {
    validate_grid(grid, "tau")?;
    if setup.mode == Mode::Lgbi && !setup.first.disjoint_from(&setup.second) {
        return Err(LgsimError::InvalidSchedule(format!(
            "LGBI observables {} and {} share qubits",
            setup.first.label(),
            setup.second.label()
        )));
    }
    if let Some(h) = setup.horizon {
        let last = grid[grid.len() - 1];
        if 2.0 * last > h {
            return Err(LgsimError::InvalidGrid(format!(
                "final time 2τ = {} exceeds the horizon {h}",
                2.0 * last
            )));
        }
    }
    if let Engine::Sampled { shots: 0, .. } = engine {
        return Err(LgsimError::InvalidCounts("shots must be ≥ 1".into()));
    }
    let points: Vec<(InequalityResult, Vec<InversionMethod>)> = grid
        .par_iter()
        .enumerate()
        .map(|(i, &tau)| point_correlators(setup, tau, i, engine))
        .collect::<Result<_>>()?;

    let mitigation = match engine {
        Engine::Sampled {
            mitigator: Some(_), ..
        } => {
            let mut tally = BTreeMap::new();
            for how in points.iter().flat_map(|(_, v)| v) {
                *tally.entry(*how).or_insert(0) += 1;
            }
            Some(tally)
        }
        _ => None,
    };
    let (shots, seed) = match engine {
        Engine::Exact => (None, None),
        Engine::Sampled { shots, seed, .. } => (Some(*shots), Some(*seed)),
    };
    Ok(ScanResult {
        grid: grid.to_vec(),
        results: points.into_iter().map(|(r, _)| r).collect(),
        metadata: ScanMetadata {
            scenario: setup.label.clone(),
            mode: setup.mode,
            method: engine.method(),
            shots,
            seed,
            noise_digest: noise_digest(setup.noise.as_ref()),
            mitigation,
        },
    })
}

/// One `(ratio, τ)` cell of a violation-region map.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegionCell {
    pub ratio: f64,
    pub tau: f64,
    /// `[T3, T3′, T3ᵖᵉʳᵐ]`.
    pub values: [f64; 3],
    pub violated: [bool; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionMap {
    pub n_qubits: usize,
    pub ratios: Vec<f64>,
    pub taus: Vec<f64>,
    /// Row-major: all τ for the first ratio, then the next ratio.
    pub cells: Vec<RegionCell>,
}

impl RegionMap {
    pub fn column(&self, ratio_index: usize) -> &[RegionCell] {
        let n = self.taus.len();
        &self.cells[ratio_index * n..(ratio_index + 1) * n]
    }

    /// Whether combination `k` (0 = T3, 1 = T3′, 2 = T3ᵖᵉʳᵐ) is violated
    /// anywhere in the column.
    pub fn column_violates(&self, ratio_index: usize, k: usize) -> bool {
        self.column(ratio_index).iter().any(|c| c.violated[k])
    }

    pub fn column_violates_any(&self, ratio_index: usize) -> bool {
        (0..3).any(|k| self.column_violates(ratio_index, k))
    }

    pub fn to_csv(&self) -> String {
        let mut out =
            String::from("ratio,tau,T3,T3_prime,T3_perm,violated_T3,violated_T3_prime,violated_T3_perm\n");
        for c in &self.cells {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                fmt_g12(c.ratio),
                fmt_g12(c.tau),
                fmt_g12(c.values[0]),
                fmt_g12(c.values[1]),
                fmt_g12(c.values[2]),
                c.violated[0],
                c.violated[1],
                c.violated[2]
            );
        }
        out
    }
}

/// Non-interacting LGBI setup: `H = Σ Γ_q/2 X_q` on a Bell pair (`n = 2`) or a
/// GHZ state (`n = 5`), with `Γ = 1` on every qubit except the last, which gets
/// `ratio`. The first measurement is `σz` on qubit 0, the second on the last.
pub fn region_setup(n_qubits: usize, ratio: f64) -> Result<ScanSetup> {
    let state = match n_qubits {
        2 => StateName::Bell,
        5 => StateName::Ghz,
        _ => {
            return Err(LgsimError::InvalidScenario(format!(
                "region scans use 2 or 5 qubits, not {n_qubits}"
            )))
        }
    };
    if !(ratio > 0.0) || !ratio.is_finite() {
        return Err(LgsimError::InvalidGrid(format!(
            "frequency ratio {ratio} must be positive"
        )));
    }
    let mut gammas = vec![1.0; n_qubits];
    gammas[n_qubits - 1] = ratio;
    let h = PauliSumHamiltonian::independent_x_rotations(&gammas)?;
    Ok(ScanSetup {
        label: format!("region_{n_qubits}q_ratio_{}", fmt_g12(ratio)),
        rho0: qsim_core::prepare_state(state, n_qubits)?.to_density_matrix(),
        dynamics: Dynamics::exact(h)?,
        first: DichotomicObservable::sigma_z(0),
        second: DichotomicObservable::sigma_z(n_qubits - 1),
        mode: Mode::Lgbi,
        noise: None,
        horizon: None,
    })
}

/// Exact LGBI violation map over frequency ratios and τ.
pub fn violation_region_scan(n_qubits: usize, ratios: &[f64], taus: &[f64]) -> Result<RegionMap> {
    validate_grid(taus, "tau")?;
    if ratios.is_empty() {
        return Err(LgsimError::InvalidGrid("ratio grid is empty".into()));
    }
    let columns: Vec<Vec<RegionCell>> = ratios
        .par_iter()
        .map(|&ratio| {
            let setup = region_setup(n_qubits, ratio)?;
            let scan = tau_scan(&setup, taus, &Engine::Exact)?;
            Ok(scan
                .results
                .iter()
                .map(|r| RegionCell {
                    ratio,
                    tau: r.tau,
                    values: Combination::REPORTED.map(|c| r.value(c)),
                    violated: Combination::REPORTED.map(|c| r.is_violated(c)),
                })
                .collect())
        })
        .collect::<Result<_>>()?;
    Ok(RegionMap {
        n_qubits,
        ratios: ratios.to_vec(),
        taus: taus.to_vec(),
        cells: columns.into_iter().flatten().collect(),
    })
}
