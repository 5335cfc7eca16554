use proptest::prelude::*;

use quench_core::ed_oracle::{reduced_entropy, Boundary, QuenchOracle, StateVector};
use quench_core::mps_tebd::{
    init_product_mps, mps_cut_entropy, tebd_step, MatrixProductState, TrotterPlan, TruncationPolicy,
};

fn evolve(n: usize, t: f64, dt: f64, policy: &TruncationPolicy) -> MatrixProductState {
    let plan = TrotterPlan::new(n, dt, 2).unwrap();
    let mut mps = init_product_mps(n).unwrap();
    let steps = (t / dt).round() as usize;
    for _ in 0..steps {
        tebd_step(&mut mps, &plan, policy).unwrap();
    }
    mps
}

fn distance(a: &StateVector, b: &StateVector) -> f64 {
    (2.0 * (1.0 - a.inner(b).norm())).max(0.0).sqrt()
}

#[test]
fn second_order_convergence_against_exact_evolution() {
    let exact = TruncationPolicy::discard(0.0).unwrap();
    let reference = QuenchOracle::new(8, Boundary::Open).unwrap().state_at_spin_time(1.0);
    let coarse = distance(&evolve(8, 1.0, 0.1, &exact).to_state_vector().unwrap(), &reference);
    let fine = distance(&evolve(8, 1.0, 0.05, &exact).to_state_vector().unwrap(), &reference);
    let ratio = coarse / fine;
    assert!((3.0..=5.0).contains(&ratio), "ratio {ratio} ({coarse:e} / {fine:e})");
}

fn worst_cut_error(mps: &MatrixProductState, psi: &StateVector) -> f64 {
    (1..mps.n_spins())
        .map(|cut| (mps_cut_entropy(mps, cut).unwrap() - reduced_entropy(psi, cut).unwrap()).abs())
        .fold(0.0, f64::max)
}

#[test]
fn cut_entropies_match_exact_state() {
    let n = 10;
    let psi = QuenchOracle::new(n, Boundary::Open).unwrap().state_at_spin_time(1.0);

    // lossless and fine enough that Trotter error is below 1e-6
    let fine = evolve(n, 1.0, 0.0025, &TruncationPolicy::discard(0.0).unwrap());
    let err = worst_cut_error(&fine, &psi);
    assert!(err <= 1e-6, "lossless: {err:e}");

    // entropies are first order in the amplitude error; dt² Trotter error
    // alone is 3.2e-5 bits here
    let run = evolve(n, 1.0, 0.02, &TruncationPolicy::discard(1e-12).unwrap());
    let err = worst_cut_error(&run, &psi);
    assert!(err <= 1e-4, "truncated: {err:e}");
    assert!(run.to_state_vector().unwrap().fidelity(&psi) >= 1.0 - 1e-5);
}

#[test]
fn cut_entropy_rejects_bad_cuts() {
    let mps = init_product_mps(4).unwrap();
    assert!(mps_cut_entropy(&mps, 0).is_err());
    assert!(mps_cut_entropy(&mps, 4).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn invariants_survive_truncated_steps(
        n in 3usize..9,
        steps in 1usize..12,
        dt in 0.01f64..0.3,
        cap in prop::option::of(1usize..6),
        tol_exp in -12i32..-3,
    ) {
        let policy = TruncationPolicy::new(cap, 10f64.powi(tol_exp)).unwrap();
        let plan = TrotterPlan::new(n, dt, 2).unwrap();
        let mut mps = init_product_mps(n).unwrap();
        for _ in 0..steps {
            tebd_step(&mut mps, &plan, &policy).unwrap();
            prop_assert!((mps.norm() - 1.0).abs() <= 1e-10);
            prop_assert!(mps.canonical_residual() <= 1e-10);
        }
        let dims = mps.bond_dims();
        for (i, &d) in dims.iter().enumerate() {
            let limit = (1usize << (i + 1)).min(1 << (n - 1 - i));
            prop_assert!(d <= limit);
            if let Some(c) = cap {
                prop_assert!(d <= c);
            }
        }
        for (i, s) in mps.cut_entropies().iter().enumerate() {
            prop_assert!(*s <= (dims[i] as f64).log2() + 1e-12);
        }
        prop_assert_eq!(mps.truncation_ledger().len(), steps);
        prop_assert!(mps.error_estimate() >= 0.0);
    }
}
