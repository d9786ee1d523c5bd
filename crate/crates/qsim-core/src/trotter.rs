//! First-order even/odd Trotter products.
//!
//! One step is `exp(-i H_even dt) · exp(-i (H_odd + H_single) dt)`: the odd
//! factor acts first and also carries every single-site term.

use serde::{Deserialize, Serialize};

use crate::error::{QsimError, Result};
use crate::hamiltonian::{PauliSumHamiltonian, PauliTerm};
use crate::linalg::{self, hermitian_exp};
use crate::propagator::Propagator;
use crate::CMatrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrotterPlan {
    steps: usize,
    even_terms: Vec<PauliTerm>,
    odd_terms: Vec<PauliTerm>,
    single_site_terms: Vec<PauliTerm>,
    dt: f64,
}

impl TrotterPlan {
    /// Build a plan from an explicit partition. `dt` starts at zero; set it with
    /// [`TrotterPlan::with_dt`] or let [`trotter_propagator`] derive it.
    pub fn new(
        steps: usize,
        even_terms: Vec<PauliTerm>,
        odd_terms: Vec<PauliTerm>,
        single_site_terms: Vec<PauliTerm>,
    ) -> Result<Self> {
        if steps == 0 {
            return Err(QsimError::InvalidTrotterPlan("steps must be ≥ 1".into()));
        }
        check_mutually_commuting("even", &even_terms)?;
        check_mutually_commuting("odd", &odd_terms)?;
        Ok(Self {
            steps,
            even_terms,
            odd_terms,
            single_site_terms,
            dt: 0.0,
        })
    }

    /// Split nearest-neighbour bond terms by the parity of their lower site;
    /// single-site and identity terms go to the single-site group.
    pub fn even_odd(h: &PauliSumHamiltonian, steps: usize) -> Result<Self> {
        let mut even = Vec::new();
        let mut odd = Vec::new();
        let mut single = Vec::new();
        for term in h.terms() {
            let support = term.string.support();
            match support.as_slice() {
                [] | [_] => single.push(term.clone()),
                [a, b] if b - a == 1 => {
                    if a % 2 == 0 {
                        even.push(term.clone())
                    } else {
                        odd.push(term.clone())
                    }
                }
                _ => {
                    return Err(QsimError::InvalidTrotterPlan(format!(
                        "term {} is not a nearest-neighbour bond",
                        term.string
                    )))
                }
            }
        }
        Self::new(steps, even, odd, single)
    }

    pub fn with_dt(mut self, dt: f64) -> Self {
        self.dt = dt;
        self
    }

    pub fn with_steps(mut self, steps: usize) -> Result<Self> {
        if steps == 0 {
            return Err(QsimError::InvalidTrotterPlan("steps must be ≥ 1".into()));
        }
        self.steps = steps;
        Ok(self)
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn even_terms(&self) -> &[PauliTerm] {
        &self.even_terms
    }

    pub fn odd_terms(&self) -> &[PauliTerm] {
        &self.odd_terms
    }

    pub fn single_site_terms(&self) -> &[PauliTerm] {
        &self.single_site_terms
    }

    /// Qubit pairs touched by the even (resp. odd) layer.
    pub fn layer_bonds(&self, even: bool) -> Vec<Vec<usize>> {
        let terms = if even { &self.even_terms } else { &self.odd_terms };
        terms.iter().map(|t| t.string.support()).collect()
    }

    /// Check that the three groups together are exactly the terms of `h`.
    pub fn validate_partition(&self, h: &PauliSumHamiltonian) -> Result<()> {
        let mut remaining: Vec<&PauliTerm> = h.terms().iter().collect();
        let planned = self
            .even_terms
            .iter()
            .chain(&self.odd_terms)
            .chain(&self.single_site_terms);
        for term in planned {
            if term.string.num_qubits() != h.num_qubits() {
                return Err(QsimError::InvalidTrotterPlan(format!(
                    "term {} does not fit a {}-qubit register",
                    term.string,
                    h.num_qubits()
                )));
            }
            match remaining.iter().position(|t| *t == term) {
                Some(i) => {
                    remaining.swap_remove(i);
                }
                None => {
                    return Err(QsimError::InvalidTrotterPlan(format!(
                        "planned term {}·{} is not in the Hamiltonian (or appears twice)",
                        term.coefficient, term.string
                    )))
                }
            }
        }
        if let Some(t) = remaining.first() {
            return Err(QsimError::InvalidTrotterPlan(format!(
                "Hamiltonian term {}·{} is missing from the plan",
                t.coefficient, t.string
            )));
        }
        Ok(())
    }

    fn group_matrix(num_qubits: usize, terms: &[&PauliTerm]) -> CMatrix {
        let dim = 1usize << num_qubits;
        let mut m = CMatrix::zeros(dim, dim);
        for t in terms {
            m += t.to_matrix();
        }
        m
    }

    /// The two factors of one step of length `dt`.
    pub fn step_factors(&self, num_qubits: usize, dt: f64) -> TrotterStep {
        let even: Vec<&PauliTerm> = self.even_terms.iter().collect();
        let odd: Vec<&PauliTerm> = self.odd_terms.iter().chain(&self.single_site_terms).collect();
        TrotterStep {
            even: hermitian_exp(&Self::group_matrix(num_qubits, &even), dt),
            odd: hermitian_exp(&Self::group_matrix(num_qubits, &odd), dt),
        }
    }
}

fn check_mutually_commuting(label: &str, terms: &[PauliTerm]) -> Result<()> {
    for (i, a) in terms.iter().enumerate() {
        for b in &terms[i + 1..] {
            if !a.string.commutes_with(&b.string) {
                return Err(QsimError::InvalidTrotterPlan(format!(
                    "{label} layer terms {} and {} do not commute",
                    a.string, b.string
                )));
            }
        }
    }
    Ok(())
}

/// The unitaries of a single Trotter step.
#[derive(Debug, Clone)]
pub struct TrotterStep {
    pub even: CMatrix,
    pub odd: CMatrix,
}

impl TrotterStep {
    /// `even · odd`.
    pub fn product(&self) -> CMatrix {
        &self.even * &self.odd
    }
}

/// `[exp(-i H_even dt) exp(-i H_odd dt)]^k` with `dt = total_time / k`.
pub fn trotter_propagator(
    h: &PauliSumHamiltonian,
    plan: &TrotterPlan,
    total_time: f64,
) -> Result<Propagator> {
    h.validate()?;
    plan.validate_partition(h)?;
    if !total_time.is_finite() || total_time < 0.0 {
        return Err(QsimError::InvalidTimeInterval {
            t_start: 0.0,
            t_end: total_time,
        });
    }
    let n = h.num_qubits();
    let dt = total_time / plan.steps as f64;
    let step = plan.step_factors(n, dt).product();
    let mut u = linalg::identity(1usize << n);
    for _ in 0..plan.steps {
        u = &step * u;
    }
    Propagator::new(n, u, 0.0, total_time)
}
