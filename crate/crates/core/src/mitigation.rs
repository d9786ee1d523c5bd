//! Readout-error mitigation: calibrate a confusion matrix from basis-state
//! preparations and undo it on measured distributions.

use std::fmt;
use std::io::{Read, Write};

use nalgebra::{DMatrix, DVector};
use qsim_core::{ConfusionMatrix, NoiseModel};
use rand::Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{LgsimError, Result};
use crate::observables::{CorrelatorEstimate, CountsTable, Method};
use crate::seed;

/// Largest register calibrated by preparing every basis state.
pub const MAX_FULL_CALIBRATION_BITS: usize = 6;
/// Largest register calibrated bit by bit.
pub const MAX_TENSOR_CALIBRATION_BITS: usize = qsim_core::MAX_QUBITS;
/// Full calibration is the default up to this many bits.
pub const FULL_MODE_DEFAULT_BITS: usize = 3;
pub const DEFAULT_CALIBRATION_SHOTS: u64 = 8192;
pub const BOOTSTRAP_RESAMPLES: usize = 200;
/// Plain inversion is accepted when no entry is below this value.
pub const NEGATIVITY_THRESHOLD: f64 = -0.01;

const LSQ_MAX_ITERATIONS: usize = 200_000;
const LSQ_TOLERANCE: f64 = 1e-15;

/// Raw counts over `2ᵐ` bitstrings.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountsVector {
    num_bits: usize,
    counts: Vec<u64>,
    total: u64,
}

impl CountsVector {
    pub fn new(num_bits: usize, counts: Vec<u64>) -> Result<Self> {
        if num_bits == 0 || counts.len() != 1usize << num_bits {
            return Err(LgsimError::InvalidCounts(format!(
                "{} entries do not describe a {num_bits}-bit register",
                counts.len()
            )));
        }
        let total: u64 = counts.iter().sum();
        if total == 0 {
            return Err(LgsimError::InvalidCounts("total count is zero".into()));
        }
        Ok(Self {
            num_bits,
            counts,
            total,
        })
    }

    /// Two-bit vector with bit 0 = `Q_i`, bit 1 = `Q_j`.
    pub fn from_table(table: &CountsTable) -> Result<Self> {
        table.validate()?;
        Self::new(2, table.counts.to_vec())
    }

    pub fn num_bits(&self) -> usize {
        self.num_bits
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn frequencies(&self) -> Vec<f64> {
        let n = self.total as f64;
        self.counts.iter().map(|&c| c as f64 / n).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InversionMethod {
    /// `M` is the identity; nothing to undo.
    Identity,
    /// `M⁻¹·p` with small negatives clipped and the result renormalized.
    InverseClip,
    /// Least squares constrained to the probability simplex.
    LeastSquares,
}

impl fmt::Display for InversionMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Identity => "identity",
            Self::InverseClip => "inverse_clip",
            Self::LeastSquares => "least_squares",
        })
    }
}

/// Mitigated distribution; nonnegative and summing to 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuasiDistribution {
    pub probs: Vec<f64>,
    pub method: InversionMethod,
    /// Smallest entry of `M⁻¹·p` before clipping (NaN when not computed).
    pub raw_min: f64,
}

/// A confusion matrix with its inverse precomputed.
#[derive(Debug, Clone)]
pub struct Mitigator {
    matrix: ConfusionMatrix,
    inverse: Option<DMatrix<f64>>,
    lipschitz: f64,
}

impl Mitigator {
    pub fn new(matrix: ConfusionMatrix) -> Self {
        let inverse = matrix.matrix().clone().try_inverse();
        let sv = matrix.matrix().clone().singular_values();
        let smax = sv.iter().copied().fold(0.0, f64::max);
        Self {
            matrix,
            inverse,
            lipschitz: smax * smax,
        }
    }

    pub fn matrix(&self) -> &ConfusionMatrix {
        &self.matrix
    }

    pub fn num_bits(&self) -> usize {
        self.matrix.num_bits()
    }

    pub fn mitigate(&self, raw: &CountsVector) -> Result<QuasiDistribution> {
        self.check_bits(raw.num_bits())?;
        self.mitigate_frequencies(&raw.frequencies())
    }

    /// Mitigate a distribution given directly as frequencies.
    pub fn mitigate_frequencies(&self, freqs: &[f64]) -> Result<QuasiDistribution> {
        if freqs.len() != self.matrix.dim() {
            return Err(qsim_core::QsimError::DimensionMismatch {
                expected: self.matrix.dim(),
                found: freqs.len(),
            }
            .into());
        }
        if self.matrix.is_identity() {
            return Ok(QuasiDistribution {
                probs: freqs.to_vec(),
                method: InversionMethod::Identity,
                raw_min: freqs.iter().copied().fold(f64::INFINITY, f64::min),
            });
        }
        let y = DVector::from_column_slice(freqs);
        if let Some(inv) = &self.inverse {
            let x = inv * &y;
            let raw_min = x.iter().copied().fold(f64::INFINITY, f64::min);
            if raw_min >= NEGATIVITY_THRESHOLD && x.iter().all(|v| v.is_finite()) {
                return Ok(QuasiDistribution {
                    probs: clip_renormalize(x.as_slice())?,
                    method: InversionMethod::InverseClip,
                    raw_min,
                });
            }
            let probs = self.least_squares(&y)?;
            return Ok(QuasiDistribution {
                probs,
                method: InversionMethod::LeastSquares,
                raw_min,
            });
        }
        let probs = self.least_squares(&y)?;
        Ok(QuasiDistribution {
            probs,
            method: InversionMethod::LeastSquares,
            raw_min: f64::NAN,
        })
    }

    fn check_bits(&self, num_bits: usize) -> Result<()> {
        if num_bits != self.num_bits() {
            return Err(qsim_core::QsimError::DimensionMismatch {
                expected: self.num_bits(),
                found: num_bits,
            }
            .into());
        }
        Ok(())
    }

    /// Accelerated projected gradient on `½‖Mx − y‖²` over the simplex.
    fn least_squares(&self, y: &DVector<f64>) -> Result<Vec<f64>> {
        let m = self.matrix.matrix();
        if !(self.lipschitz > 0.0) {
            return Err(LgsimError::MitigationFailed("confusion matrix is zero".into()));
        }
        let step = 1.0 / self.lipschitz;
        let mt = m.transpose();
        let dim = y.len();
        let mut x = DVector::from_element(dim, 1.0 / dim as f64);
        let mut z = x.clone();
        let mut t = 1.0_f64;
        for _ in 0..LSQ_MAX_ITERATIONS {
            let grad = &mt * (m * &z - y);
            let next = project_simplex(&(&z - grad * step));
            let t_next = (1.0 + (1.0 + 4.0 * t * t).sqrt()) / 2.0;
            let delta = (&next - &x).amax();
            z = &next + (&next - &x) * ((t - 1.0) / t_next);
            x = next;
            t = t_next;
            if delta < LSQ_TOLERANCE {
                break;
            }
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(LgsimError::MitigationFailed(
                "least-squares iteration diverged".into(),
            ));
        }
        clip_renormalize(x.as_slice())
    }
}

/// Clip negatives to zero and renormalize. Vectors that are already
/// nonnegative are returned unchanged.
fn clip_renormalize(x: &[f64]) -> Result<Vec<f64>> {
    if x.iter().all(|&v| v >= 0.0) {
        return Ok(x.to_vec());
    }
    let clipped: Vec<f64> = x.iter().map(|&v| v.max(0.0)).collect();
    let sum: f64 = clipped.iter().sum();
    if !(sum > 0.0) {
        return Err(LgsimError::MitigationFailed(
            "no positive weight left after clipping".into(),
        ));
    }
    Ok(clipped.into_iter().map(|v| v / sum).collect())
}

/// Euclidean projection onto `{x ≥ 0, Σx = 1}`.
fn project_simplex(v: &DVector<f64>) -> DVector<f64> {
    let mut sorted: Vec<f64> = v.iter().copied().collect();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (i, &u) in sorted.iter().enumerate() {
        cumsum += u;
        let candidate = (cumsum - 1.0) / (i + 1) as f64;
        if u - candidate > 0.0 {
            theta = candidate;
        }
    }
    v.map(|x| (x - theta).max(0.0))
}

/// Mitigate raw counts with `m`.
pub fn mitigate(raw: &CountsVector, m: &ConfusionMatrix) -> Result<QuasiDistribution> {
    Mitigator::new(m.clone()).mitigate(raw)
}

fn correlator_of(p: &[f64]) -> f64 {
    p[0] - p[1] - p[2] + p[3]
}

/// Mitigated two-time correlator with a bootstrap standard error.
///
/// Returns the estimate and the inversion method used on the observed counts.
pub fn mitigate_correlator(
    counts: &CountsTable,
    mitigator: &Mitigator,
    bootstrap_seed: u64,
) -> Result<(CorrelatorEstimate, InversionMethod)> {
    let raw = CountsVector::from_table(counts)?;
    mitigator.check_bits(2)?;
    if mitigator.matrix().is_identity() {
        return Ok((
            counts.estimate(Method::SampledMitigated),
            InversionMethod::Identity,
        ));
    }
    let observed = mitigator.mitigate(&raw)?;
    let value = correlator_of(&observed.probs);
    let std_error = if counts.n_shots > 1 {
        let freqs = raw.frequencies();
        let mut rng = seed::stream(bootstrap_seed, &[]);
        let mut samples = Vec::with_capacity(BOOTSTRAP_RESAMPLES);
        for _ in 0..BOOTSTRAP_RESAMPLES {
            let resampled = multinomial(counts.n_shots, &freqs, &mut rng)?;
            let n = counts.n_shots as f64;
            let f: Vec<f64> = resampled.iter().map(|&c| c as f64 / n).collect();
            samples.push(correlator_of(&mitigator.mitigate_frequencies(&f)?.probs));
        }
        sample_std(&samples)
    } else {
        0.0
    };
    Ok((
        CorrelatorEstimate {
            value,
            std_error,
            n_shots: counts.n_shots,
            method: Method::SampledMitigated,
        },
        observed.method,
    ))
}

fn sample_std(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    var.sqrt()
}

/// Multinomial draw via sequential conditional binomials.
fn multinomial(n: u64, probs: &[f64], rng: &mut impl Rng) -> Result<Vec<u64>> {
    let mut out = vec![0u64; probs.len()];
    let mut remaining = n;
    let mut mass = 1.0;
    for (i, &p) in probs.iter().enumerate() {
        if remaining == 0 {
            break;
        }
        if i + 1 == probs.len() {
            out[i] = remaining;
            break;
        }
        let q = if mass > 0.0 {
            (p / mass).clamp(0.0, 1.0)
        } else {
            0.0
        };
        let draw = Binomial::new(remaining, q)
            .map_err(|e| LgsimError::MitigationFailed(format!("bootstrap: {e}")))?
            .sample(rng);
        out[i] = draw;
        remaining -= draw;
        mass -= p;
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CalibrationMode {
    /// Prepare all `2ᵐ` basis states.
    Full,
    /// Calibrate each bit from the all-zeros and all-ones preparations and
    /// take the tensor product.
    Tensor,
}

impl CalibrationMode {
    pub fn default_for(num_bits: usize) -> Self {
        if num_bits <= FULL_MODE_DEFAULT_BITS {
            Self::Full
        } else {
            Self::Tensor
        }
    }
}

/// The readout the simulated device applies to an `num_bits`-bit register.
pub fn device_readout(noise: &NoiseModel, num_bits: usize) -> Result<ConfusionMatrix> {
    match &noise.readout_confusion {
        None => Ok(ConfusionMatrix::identity(num_bits)?),
        Some(cm) if cm.num_bits() == num_bits => Ok(cm.clone()),
        Some(cm) if cm.num_bits() == 1 => Ok(cm.tensor_power(num_bits)?),
        Some(cm) => Err(qsim_core::QsimError::DimensionMismatch {
            expected: num_bits,
            found: cm.num_bits(),
        }
        .into()),
    }
}

/// Estimate the confusion matrix of `num_bits` readouts under `noise`, using
/// the default mode for that size.
pub fn calibrate(
    noise: &NoiseModel,
    num_bits: usize,
    shots_per_state: u64,
    seed: u64,
) -> Result<ConfusionMatrix> {
    if num_bits > MAX_FULL_CALIBRATION_BITS {
        return Err(LgsimError::CalibrationTooLarge {
            num_bits,
            cap: MAX_FULL_CALIBRATION_BITS,
        });
    }
    calibrate_with_mode(
        noise,
        num_bits,
        shots_per_state,
        seed,
        CalibrationMode::default_for(num_bits),
    )
}

pub fn calibrate_with_mode(
    noise: &NoiseModel,
    num_bits: usize,
    shots_per_state: u64,
    seed: u64,
    mode: CalibrationMode,
) -> Result<ConfusionMatrix> {
    let cap = match mode {
        CalibrationMode::Full => MAX_FULL_CALIBRATION_BITS,
        CalibrationMode::Tensor => MAX_TENSOR_CALIBRATION_BITS,
    };
    if num_bits > cap {
        return Err(LgsimError::CalibrationTooLarge { num_bits, cap });
    }
    if num_bits == 0 || shots_per_state == 0 {
        return Err(LgsimError::Config(
            "calibration needs at least one bit and one shot per state".into(),
        ));
    }
    let truth = device_readout(noise, num_bits)?;
    let read_column = |prepared: usize| -> Vec<u64> {
        let mut rng = seed::stream(seed, &[prepared as u64]);
        let mut col = vec![0u64; truth.dim()];
        for _ in 0..shots_per_state {
            col[truth.sample(prepared, &mut rng)] += 1;
        }
        col
    };
    let n = shots_per_state as f64;
    match mode {
        CalibrationMode::Full => {
            let columns: Vec<Vec<u64>> = (0..truth.dim()).into_par_iter().map(read_column).collect();
            let matrix = DMatrix::from_fn(truth.dim(), truth.dim(), |r, s| columns[s][r] as f64 / n);
            Ok(ConfusionMatrix::new(num_bits, matrix)?)
        }
        CalibrationMode::Tensor => {
            let zeros = read_column(0);
            let ones = read_column(truth.dim() - 1);
            let mut out: Option<ConfusionMatrix> = None;
            for bit in 0..num_bits {
                let flipped = |col: &[u64], prepared_bit: usize| -> f64 {
                    col.iter()
                        .enumerate()
                        .filter(|(r, _)| (r >> bit) & 1 != prepared_bit)
                        .map(|(_, &c)| c)
                        .sum::<u64>() as f64
                        / n
                };
                let single = ConfusionMatrix::asymmetric_flip(flipped(&zeros, 0), flipped(&ones, 1))?;
                out = Some(match out {
                    None => single,
                    Some(low) => ConfusionMatrix::tensor(&single, &low)?,
                });
            }
            Ok(out.expect("num_bits ≥ 1"))
        }
    }
}

/// Effective confusion on a `(Q_i, Q_j)` record when each dichotomic outcome is
/// assembled from `first_reads` and `second_reads` single-qubit readouts.
pub fn record_confusion(
    single: &ConfusionMatrix,
    first_reads: usize,
    second_reads: usize,
) -> Result<ConfusionMatrix> {
    if single.num_bits() == 2 {
        return Ok(single.clone());
    }
    let power = |k: usize| -> Result<ConfusionMatrix> {
        let mut m = DMatrix::identity(2, 2);
        for _ in 0..k {
            m = single.matrix() * m;
        }
        Ok(ConfusionMatrix::new(1, m)?)
    };
    Ok(ConfusionMatrix::tensor(
        &power(second_reads)?,
        &power(first_reads)?,
    )?)
}

/// Write `m` as headerless CSV, one row per read outcome.
pub fn write_confusion_csv<W: Write>(m: &ConfusionMatrix, out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    for row in m.matrix().row_iter() {
        w.write_record(row.iter().map(|v| format!("{v}")))
            .map_err(|e| LgsimError::Config(e.to_string()))?;
    }
    w.flush().map_err(|e| LgsimError::Config(e.to_string()))?;
    Ok(())
}

/// Read a square headerless CSV written by [`write_confusion_csv`].
pub fn read_confusion_csv<R: Read>(input: R) -> Result<ConfusionMatrix> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(input);
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (line, record) in rdr.records().enumerate() {
        let record = record.map_err(|e| LgsimError::Config(e.to_string()))?;
        let row = record
            .iter()
            .map(|f| {
                f.parse::<f64>()
                    .map_err(|_| LgsimError::Config(format!("row {}: '{f}' is not a number", line + 1)))
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    let dim = rows.len();
    if dim < 2 || !dim.is_power_of_two() || rows.iter().any(|r| r.len() != dim) {
        return Err(LgsimError::Config(format!(
            "confusion table must be square with a power-of-two size ≥ 2, got {dim} rows"
        )));
    }
    let flat: Vec<f64> = rows.into_iter().flatten().collect();
    Ok(ConfusionMatrix::new(
        dim.trailing_zeros() as usize,
        DMatrix::from_row_slice(dim, dim, &flat),
    )?)
}
