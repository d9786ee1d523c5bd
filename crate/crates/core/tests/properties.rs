//! Invariants of correlators, inequality assembly and mitigation.

use lgsim_core::inequalities::{
    assemble_third_order, closed_form_k3, joint_distribution_oracle, tau_scan, uniform_grid, Combination,
    Engine, JointDistribution, Mode,
};
use lgsim_core::mitigation::{mitigate, CountsVector, Mitigator};
use lgsim_core::observables::{
    exact_correlator, sampled_correlator, CorrelatorEstimate, MeasurementSchedule,
};
use lgsim_core::scenarios::single_qubit_setup;
use lgsim_core::{ConfusionMatrix, DichotomicObservable, Dynamics};
use nalgebra::DMatrix;
use proptest::prelude::*;
use qsim_core::{prepare_state, Outcome, PauliSumHamiltonian, StateName};
use std::f64::consts::PI;

fn tv(a: &[f64], b: &[f64]) -> f64 {
    0.5 * a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>()
}

fn normalized(raw: &[f64]) -> Vec<f64> {
    let s: f64 = raw.iter().sum();
    raw.iter().map(|x| x / s).collect()
}

/// A small random instance: one or two qubits, random fields, random initial
/// state, σz observables on the same or on different qubits.
fn instance(
    n: usize,
    fields: &[f64],
    state: StateName,
    cross: bool,
) -> (qsim_core::DensityMatrix, Dynamics, MeasurementSchedule) {
    // GHZ needs at least two qubits
    let state = if n == 1 && state == StateName::Ghz {
        StateName::Plus
    } else {
        state
    };
    let rho = prepare_state(state, n).unwrap().to_density_matrix();
    let h = if n == 1 {
        PauliSumHamiltonian::single_qubit_x(fields[0]).unwrap()
    } else {
        PauliSumHamiltonian::transverse_field_ising(fields[2], &fields[..2]).unwrap()
    };
    let (a, b) = if n == 2 && cross {
        (DichotomicObservable::sigma_z(0), DichotomicObservable::sigma_z(1))
    } else {
        let z = DichotomicObservable::sigma_z(0);
        (z.clone(), z)
    };
    let sched = MeasurementSchedule::new(fields[3], fields[3] + fields[4], a, b).unwrap();
    (rho, Dynamics::exact(h).unwrap(), sched)
}

fn state_strategy() -> impl Strategy<Value = StateName> {
    prop_oneof![Just(StateName::Zero), Just(StateName::Plus), Just(StateName::Ghz)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn classical_records_obey_the_bound(raw in prop::collection::vec(0.0f64..1.0, 8)) {
        prop_assume!(raw.iter().sum::<f64>() > 1e-6);
        let mut p = [0.0; 8];
        p.copy_from_slice(&normalized(&raw));
        // renormalizing in floating point can leave the sum a few ulps off
        let sum: f64 = p.iter().sum();
        p[0] += 1.0 - sum;
        prop_assume!(p[0] >= 0.0);
        let r = joint_distribution_oracle(&JointDistribution::new(p).unwrap());
        prop_assert!(r.k3_assembled >= -3.0 - 1e-12 && r.k3_assembled <= 1.0 + 1e-12);
        prop_assert!(r.discrepancy() <= 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn exact_correlator_is_bounded_and_relabel_symmetric(
        n in 1usize..=2,
        fields in prop::collection::vec(0.05f64..2.0, 5),
        state in state_strategy(),
        cross in any::<bool>(),
    ) {
        let (rho, dynamics, sched) = instance(n, &fields, state, cross);
        let c = exact_correlator(&rho, &dynamics, &sched, None).unwrap().value;
        prop_assert!(c.abs() <= 1.0 + 1e-9);
        let flipped = MeasurementSchedule::new(
            sched.t_i,
            sched.t_j,
            sched.first.relabeled(),
            sched.second.relabeled(),
        )
        .unwrap();
        let c2 = exact_correlator(&rho, &dynamics, &flipped, None).unwrap().value;
        prop_assert!((c - c2).abs() < 1e-12);
        // relabeling one side only flips the sign
        let one = MeasurementSchedule::new(sched.t_i, sched.t_j, sched.first.relabeled(), sched.second.clone()).unwrap();
        let c3 = exact_correlator(&rho, &dynamics, &one, None).unwrap().value;
        prop_assert!((c + c3).abs() < 1e-12);
    }

    #[test]
    fn combinations_stay_in_range(c in prop::collection::vec(-1.0f64..=1.0, 3)) {
        let e = |v| CorrelatorEstimate::exact(v);
        let r = assemble_third_order(0.0, e(c[0]), e(c[1]), e(c[2]), Mode::LgiSingle).unwrap();
        for comb in Combination::ALL {
            prop_assert!(r.value(comb).abs() <= 3.0 + 1e-12);
            prop_assert_eq!(r.is_violated(comb), r.value(comb) > 1.0 + 1e-9);
        }
    }

    #[test]
    fn single_time_flips_permute_combinations(
        c in prop::collection::vec(-1.0f64..=1.0, 3),
        time in 1usize..=3,
    ) {
        // relabeling at time t negates the correlators that involve t
        let (mut c12, mut c23, mut c13) = (c[0], c[1], c[2]);
        match time {
            1 => { c12 = -c12; c13 = -c13; }
            2 => { c12 = -c12; c23 = -c23; }
            _ => { c23 = -c23; c13 = -c13; }
        }
        for comb in Combination::ALL {
            let after = comb.evaluate(c12, c23, c13);
            let mapped = comb.flipped(time).evaluate(c[0], c[1], c[2]);
            prop_assert!((after - mapped).abs() < 1e-12);
        }
        // relabeling at all three times leaves every correlator unchanged
        for comb in Combination::ALL {
            prop_assert_eq!(comb.flipped(1).flipped(2).flipped(3), comb);
        }
    }

    #[test]
    fn mitigated_output_is_a_distribution(
        counts in prop::collection::vec(0u64..500, 4),
        p01 in 0.0f64..0.2,
        p10 in 0.0f64..0.2,
    ) {
        prop_assume!(counts.iter().sum::<u64>() > 0);
        let m = ConfusionMatrix::asymmetric_flip(p01, p10).unwrap().tensor_power(2).unwrap();
        let q = mitigate(&CountsVector::new(2, counts).unwrap(), &m).unwrap();
        prop_assert!(q.probs.iter().all(|&x| x >= 0.0));
        prop_assert!((q.probs.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }
}

fn random_confusion(seed: &[f64], dim: usize) -> Option<ConfusionMatrix> {
    // diagonally dominant columns: keep ≥ 0.7 on the diagonal
    let mut m = DMatrix::zeros(dim, dim);
    for s in 0..dim {
        let off: Vec<f64> = (0..dim)
            .map(|r| if r == s { 0.0 } else { seed[s * dim + r] })
            .collect();
        let off_total: f64 = off.iter().sum();
        let budget = 0.3 * seed[s * dim + s];
        for r in 0..dim {
            m[(r, s)] = if r == s {
                1.0 - budget
            } else if off_total > 0.0 {
                budget * off[r] / off_total
            } else {
                budget / (dim - 1) as f64
            };
        }
    }
    let cm = ConfusionMatrix::new(dim.trailing_zeros() as usize, m).ok()?;
    (cm.condition_number() < 50.0).then_some(cm)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn mitigation_inverts_exact_inputs(
        raw_d in prop::collection::vec(0.01f64..1.0, 4),
        seed in prop::collection::vec(0.0f64..1.0, 16),
    ) {
        let Some(m) = random_confusion(&seed, 4) else { return Ok(()) };
        let d = normalized(&raw_d);
        let noisy = m.apply(&d).unwrap();
        let q = Mitigator::new(m).mitigate_frequencies(&noisy).unwrap();
        prop_assert!(tv(&q.probs, &d) < 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn mitigation_round_trip_at_a_million_shots(
        raw_d in prop::collection::vec(0.0f64..1.0, 4),
        seed in prop::collection::vec(0.0f64..1.0, 16),
        draw_seed in any::<u64>(),
    ) {
        prop_assume!(raw_d.iter().sum::<f64>() > 0.1);
        let Some(m) = random_confusion(&seed, 4) else { return Ok(()) };
        let d = normalized(&raw_d);
        let noisy = m.apply(&d).unwrap();
        let shots = 1_000_000u64;
        // inverse-CDF sampling from a seeded stream
        let mut rng = lgsim_core::seed::stream(draw_seed, &[]);
        let mut counts = vec![0u64; 4];
        for _ in 0..shots {
            let u: f64 = rand::Rng::random(&mut rng);
            let mut acc = 0.0;
            let mut k = 3;
            for (i, p) in noisy.iter().enumerate() {
                acc += p;
                if u < acc { k = i; break; }
            }
            counts[k] += 1;
        }
        let q = mitigate(&CountsVector::new(2, counts).unwrap(), &m).unwrap();
        prop_assert!(tv(&q.probs, &d) <= 0.01, "tv = {}", tv(&q.probs, &d));
    }
}

#[test]
fn sampled_agrees_with_exact_on_random_instances() {
    let mut failures = 0;
    let mut rng = lgsim_core::seed::stream(2024, &[]);
    let states = [StateName::Zero, StateName::Plus, StateName::Ghz];
    for i in 0..20u64 {
        let u = |rng: &mut _| rand::Rng::random_range(rng, 0.1..1.8);
        let fields: Vec<f64> = (0..5).map(|_| u(&mut rng)).collect();
        let n = 1 + (i % 2) as usize;
        let (rho, dynamics, sched) = instance(n, &fields, states[(i % 3) as usize], i % 4 < 2);
        let exact = exact_correlator(&rho, &dynamics, &sched, None).unwrap().value;
        let (est, _) = sampled_correlator(&rho, &dynamics, &sched, 4000, None, i).unwrap();
        if (est.value - exact).abs() > 4.0 * est.std_error {
            failures += 1;
        }
    }
    assert!(failures <= 1, "{failures} of 20 instances disagreed");
}

#[test]
fn first_time_marginal_matches_initial_populations() {
    // first measurement at t = 0 on a σz eigenstate mixture
    let rho = qsim_core::DensityMatrix::new(
        1,
        DMatrix::from_row_slice(2, 2, &[0.8, 0.0, 0.0, 0.2]).map(|x| num_complex::Complex64::new(x, 0.0)),
    )
    .unwrap();
    let dynamics = Dynamics::exact(PauliSumHamiltonian::single_qubit_x(1.0).unwrap()).unwrap();
    let z = DichotomicObservable::sigma_z(0);
    let sched = MeasurementSchedule::new(0.0, 0.7, z.clone(), z.clone()).unwrap();
    let shots = 20_000u64;
    let (_, table) = sampled_correlator(&rho, &dynamics, &sched, shots, None, 9).unwrap();
    let first_plus = (table.get(Outcome::Plus, Outcome::Plus) + table.get(Outcome::Plus, Outcome::Minus))
        as f64
        / shots as f64;
    let sigma = (0.8f64 * 0.2 / shots as f64).sqrt();
    assert!((first_plus - 0.8).abs() < 4.0 * sigma);
    // the second marginal is the single-time distribution after the same evolution
    let evolved = dynamics.evolve(rho.matrix(), 0.7, None).unwrap();
    let p_plus = z.weight(Outcome::Plus, &evolved, 1).unwrap();
    let second_plus = (table.get(Outcome::Plus, Outcome::Plus) + table.get(Outcome::Minus, Outcome::Plus))
        as f64
        / shots as f64;
    let sigma = (p_plus * (1.0 - p_plus) / shots as f64).sqrt();
    assert!((second_plus - p_plus).abs() < 4.0 * sigma);
}

#[test]
fn complementarity_on_half_periods() {
    let gamma = 1.0;
    let n = 2001;
    let taus: Vec<f64> = uniform_grid(0.0, 2.0 * PI / gamma, n);
    let mut seen = [[false; 2]; 2];
    for &tau in &taus[1..n - 1] {
        let x = gamma * tau;
        if x.cos().abs() < 1e-6 {
            continue;
        }
        let (k3, kp, _) = closed_form_k3(gamma, tau);
        assert!(!(k3 > 1.0 && kp > 1.0), "both violated at τ = {tau}");
        let half = usize::from(x > PI);
        seen[half][0] |= k3 > 1.0;
        seen[half][1] |= kp > 1.0;
    }
    for half in seen {
        assert!(half[0] || half[1]);
    }
}

#[test]
fn exact_scans_never_exceed_the_quantum_bound() {
    let setup = single_qubit_setup(1.0, None).unwrap();
    let grid = uniform_grid(0.0, 2.0 * PI, 2001);
    let scan = tau_scan(&setup, &grid, &Engine::Exact).unwrap();
    for comb in Combination::ALL {
        assert!(scan.max(comb) <= 1.5 + 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// A manifest must reproduce its run, so specs survive JSON bit for bit.
    #[test]
    fn specs_round_trip_through_json_exactly(
        gamma in any::<f64>().prop_filter("finite", |g| g.is_finite()),
        tau_max in 1e-300f64..1e300,
        seed in any::<u64>(),
    ) {
        let spec = lgsim_core::ScenarioSpec::new(lgsim_core::ScenarioKind::SingleQubit)
            .with_param("gamma", gamma)
            .with_grid(lgsim_core::GridSpec::uniform(75, tau_max))
            .with_engine(lgsim_core::EngineSettings::sampled(100, seed));
        let back: lgsim_core::ScenarioSpec =
            serde_json::from_str(&serde_json::to_string(&spec).unwrap()).unwrap();
        prop_assert_eq!(back.parameters["gamma"].to_bits(), gamma.to_bits());
        prop_assert_eq!(back, spec);
    }
}
