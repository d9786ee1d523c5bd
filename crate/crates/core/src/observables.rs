//! Two-time correlators: the exact trace formula and a shot-sampled protocol.
//!
//! For observables `A` (measured at `t_i`) and `B` (measured at `t_j`):
//!
//! `C = Σ_{n,m} q_n q_m Tr[Π^B_m U(t_j,t_i) Π^A_n U(t_i,0) ρ₀ U†(t_i,0) Π^A_n U†(t_j,t_i) Π^B_m]`
//!
//! with decoherence channels applied after each evolution segment.

use std::collections::BTreeMap;
use std::fmt;

use qsim_core::{CMatrix, DensityMatrix, DichotomicObservable, NoiseModel, Outcome, UNREACHABLE_PROBABILITY};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dynamics::Dynamics;
use crate::error::{LgsimError, Result};
use crate::seed;

/// Parity of the listed qubits (`σz` for one qubit, `σz⊗σz` for two).
pub fn parity_observable(qubits: &[usize]) -> Result<DichotomicObservable> {
    Ok(DichotomicObservable::parity(qubits)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Exact,
    Sampled,
    SampledMitigated,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Exact => "exact",
            Method::Sampled => "sampled",
            Method::SampledMitigated => "sampled_mitigated",
        })
    }
}

/// One estimated correlator. A single-shot estimate reports `std_error = 0`
/// and is flagged through [`CorrelatorEstimate::has_defined_error`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrelatorEstimate {
    pub value: f64,
    pub std_error: f64,
    pub n_shots: u64,
    pub method: Method,
}

impl CorrelatorEstimate {
    pub fn exact(value: f64) -> Self {
        Self {
            value,
            std_error: 0.0,
            n_shots: 0,
            method: Method::Exact,
        }
    }

    pub fn has_defined_error(&self) -> bool {
        self.n_shots != 1
    }
}

/// Measurement times and the observables read at each of them.
#[derive(Debug, Clone)]
pub struct MeasurementSchedule {
    pub t_i: f64,
    pub t_j: f64,
    pub first: DichotomicObservable,
    pub second: DichotomicObservable,
}

impl MeasurementSchedule {
    /// `t_i = t_j` is accepted as the same-time limit.
    pub fn new(
        t_i: f64,
        t_j: f64,
        first: DichotomicObservable,
        second: DichotomicObservable,
    ) -> Result<Self> {
        if !t_i.is_finite() || !t_j.is_finite() || t_i < 0.0 {
            return Err(LgsimError::InvalidSchedule(format!(
                "times must be finite and non-negative (t_i = {t_i}, t_j = {t_j})"
            )));
        }
        if t_j < t_i {
            return Err(LgsimError::InvalidSchedule(format!(
                "t_j = {t_j} precedes t_i = {t_i}"
            )));
        }
        Ok(Self {
            t_i,
            t_j,
            first,
            second,
        })
    }

    /// Spatio-temporal schedule: the two observables must act on disjoint qubits.
    pub fn spatial(
        t_i: f64,
        t_j: f64,
        first: DichotomicObservable,
        second: DichotomicObservable,
    ) -> Result<Self> {
        if !first.disjoint_from(&second) {
            return Err(LgsimError::InvalidSchedule(format!(
                "{} and {} share qubits",
                first.label(),
                second.label()
            )));
        }
        Self::new(t_i, t_j, first, second)
    }

    fn check_register(&self, n: usize) -> Result<()> {
        self.first.check_register(n)?;
        self.second.check_register(n)?;
        Ok(())
    }
}

/// Branch weights of the two-time protocol: `P(n)` at `t_i` and `P(m | n)` at `t_j`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BranchProbabilities {
    pub first: [f64; 2],
    pub second_given_first: [[f64; 2]; 2],
}

impl BranchProbabilities {
    /// Joint `P(n, m)` indexed `[n][m]` with `0 ↔ +1`, `1 ↔ −1`.
    pub fn joint(&self) -> [[f64; 2]; 2] {
        std::array::from_fn(|n| std::array::from_fn(|m| self.first[n] * self.second_given_first[n][m]))
    }

    pub fn correlator(&self) -> f64 {
        let j = self.joint();
        j[0][0] - j[0][1] - j[1][0] + j[1][1]
    }
}

/// Evolve, measure, collapse and evolve again. Unreachable first outcomes get
/// zero weight and a uniform (unused) conditional distribution.
pub fn branch_probabilities(
    rho0: &DensityMatrix,
    dynamics: &Dynamics,
    sched: &MeasurementSchedule,
    noise: Option<&NoiseModel>,
) -> Result<BranchProbabilities> {
    let n = rho0.num_qubits();
    check_dimensions(rho0, dynamics, sched)?;
    let at_first = dynamics.evolve(rho0.matrix(), sched.t_i, noise)?;
    let mut first = [0.0; 2];
    let mut second_given_first = [[0.5; 2]; 2];
    for a in Outcome::BOTH {
        let projected = sched.first.project_operator(a, &at_first, n)?;
        let p = qsim_core::linalg::trace(&projected).re.max(0.0);
        first[a.bit()] = p;
        if p <= UNREACHABLE_PROBABILITY {
            continue;
        }
        let collapsed: CMatrix = projected.unscale(p);
        let later = dynamics.evolve(&collapsed, sched.t_j - sched.t_i, noise)?;
        let mut cond = [0.0; 2];
        for b in Outcome::BOTH {
            cond[b.bit()] = sched.second.weight(b, &later, n)?.max(0.0);
        }
        let total = cond[0] + cond[1];
        second_given_first[a.bit()] = [cond[0] / total, cond[1] / total];
    }
    let total = first[0] + first[1];
    first = [first[0] / total, first[1] / total];
    Ok(BranchProbabilities {
        first,
        second_given_first,
    })
}

fn check_dimensions(rho0: &DensityMatrix, dynamics: &Dynamics, sched: &MeasurementSchedule) -> Result<()> {
    let n = rho0.num_qubits();
    if dynamics.num_qubits() != n {
        return Err(qsim_core::QsimError::DimensionMismatch {
            expected: n,
            found: dynamics.num_qubits(),
        }
        .into());
    }
    sched.check_register(n)
}

/// Exact two-time correlator via the trace formula.
pub fn exact_correlator(
    rho0: &DensityMatrix,
    dynamics: &Dynamics,
    sched: &MeasurementSchedule,
    noise: Option<&NoiseModel>,
) -> Result<CorrelatorEstimate> {
    let n = rho0.num_qubits();
    check_dimensions(rho0, dynamics, sched)?;
    let at_first = dynamics.evolve(rho0.matrix(), sched.t_i, noise)?;
    let mut value = 0.0;
    for a in Outcome::BOTH {
        // unnormalized Π_n ρ(t_i) Π_n
        let projected = sched.first.project_operator(a, &at_first, n)?;
        let later = dynamics.evolve(&projected, sched.t_j - sched.t_i, noise)?;
        for b in Outcome::BOTH {
            value += a.value() * b.value() * sched.second.weight(b, &later, n)?;
        }
    }
    Ok(CorrelatorEstimate::exact(value))
}

/// Raw outcome counts over `(Q_i, Q_j)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CountsTable {
    /// Indexed by `bit(Q_i) | bit(Q_j) << 1` with `+1 → 0`, `−1 → 1`.
    pub counts: [u64; 4],
    pub n_shots: u64,
    pub seed: u64,
}

const OUTCOME_KEYS: [&str; 4] = ["++", "-+", "+-", "--"];

impl CountsTable {
    pub fn key(index: usize) -> &'static str {
        OUTCOME_KEYS[index]
    }

    pub fn index_of(key: &str) -> Option<usize> {
        OUTCOME_KEYS.iter().position(|k| *k == key)
    }

    pub fn get(&self, first: Outcome, second: Outcome) -> u64 {
        self.counts[first.bit() | second.bit() << 1]
    }

    pub fn frequencies(&self) -> [f64; 4] {
        let n = self.n_shots as f64;
        self.counts.map(|c| c as f64 / n)
    }

    /// Mean of `Q_i Q_j` and its standard error (sample std / √N).
    pub fn estimate(&self, method: Method) -> CorrelatorEstimate {
        let n = self.n_shots as f64;
        let agree = (self.counts[0] + self.counts[3]) as f64;
        let mean = (2.0 * agree - n) / n;
        let std_error = if self.n_shots > 1 {
            // Σ (x - mean)² with x ∈ {±1}
            let sum_sq = n * (1.0 - mean * mean);
            (sum_sq / (n - 1.0)).sqrt() / n.sqrt()
        } else {
            0.0
        };
        CorrelatorEstimate {
            value: mean,
            std_error,
            n_shots: self.n_shots,
            method,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_shots == 0 {
            return Err(LgsimError::InvalidCounts("n_shots must be ≥ 1".into()));
        }
        let sum: u64 = self.counts.iter().sum();
        if sum != self.n_shots {
            return Err(LgsimError::InvalidCounts(format!(
                "outcomes sum to {sum}, n_shots is {}",
                self.n_shots
            )));
        }
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
struct CountsTableRepr {
    outcomes: BTreeMap<String, u64>,
    n_shots: u64,
    seed: u64,
}

impl Serialize for CountsTable {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let outcomes = (0..4)
            .map(|i| (Self::key(i).to_string(), self.counts[i]))
            .collect();
        CountsTableRepr {
            outcomes,
            n_shots: self.n_shots,
            seed: self.seed,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for CountsTable {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error;
        let repr = CountsTableRepr::deserialize(d)?;
        let mut counts = [0u64; 4];
        for (k, v) in repr.outcomes {
            let i =
                Self::index_of(&k).ok_or_else(|| D::Error::custom(format!("unknown outcome key '{k}'")))?;
            counts[i] = v;
        }
        let table = Self {
            counts,
            n_shots: repr.n_shots,
            seed: repr.seed,
        };
        table.validate().map_err(D::Error::custom)?;
        Ok(table)
    }
}

fn draw(p_plus: f64, rng: &mut impl Rng) -> usize {
    usize::from(rng.random::<f64>() >= p_plus)
}

/// Shot-sampled two-time correlator.
///
/// Each shot samples the first outcome, then the second outcome from the
/// collapsed and evolved branch state, and finally passes both recorded bits
/// through the readout confusion (if any). Branch states are computed once per
/// outcome; shot `s` draws from its own stream `derive(seed, s)`.
pub fn sampled_correlator(
    rho0: &DensityMatrix,
    dynamics: &Dynamics,
    sched: &MeasurementSchedule,
    n_shots: u64,
    noise: Option<&NoiseModel>,
    seed: u64,
) -> Result<(CorrelatorEstimate, CountsTable)> {
    if n_shots == 0 {
        return Err(LgsimError::InvalidCounts("n_shots must be ≥ 1".into()));
    }
    let branches = branch_probabilities(rho0, dynamics, sched, noise)?;
    let readout = noise.and_then(|n| n.readout_confusion.as_ref());
    let first_reads = sched.first.qubits().len();
    let second_reads = sched.second.qubits().len();

    let mut counts = [0u64; 4];
    for shot in 0..n_shots {
        let mut rng = seed::stream(seed, &[shot]);
        let a = draw(branches.first[0], &mut rng);
        let b = draw(branches.second_given_first[a][0], &mut rng);
        let mut record = a | b << 1;
        if let Some(cm) = readout {
            record = corrupt_record(cm, record, first_reads, second_reads, &mut rng)?;
        }
        counts[record] += 1;
    }
    let table = CountsTable {
        counts,
        n_shots,
        seed,
    };
    Ok((table.estimate(Method::Sampled), table))
}

/// Apply readout confusion to a two-bit `(Q_i, Q_j)` record. A full two-bit
/// matrix acts jointly; a one-bit matrix flips each dichotomic outcome once per
/// physical qubit that contributes to it.
fn corrupt_record(
    cm: &qsim_core::ConfusionMatrix,
    record: usize,
    first_reads: usize,
    second_reads: usize,
    rng: &mut impl Rng,
) -> Result<usize> {
    if cm.num_bits() == 2 {
        return Ok(cm.sample(record, rng));
    }
    if cm.num_bits() != 1 {
        return Err(qsim_core::QsimError::DimensionMismatch {
            expected: 2,
            found: cm.num_bits(),
        }
        .into());
    }
    let mut first = record & 1;
    for _ in 0..first_reads {
        first = cm.sample(first, rng);
    }
    let mut second = record >> 1;
    for _ in 0..second_reads {
        second = cm.sample(second, rng);
    }
    Ok(first | second << 1)
}
