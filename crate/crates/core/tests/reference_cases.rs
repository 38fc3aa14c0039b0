//! Closed-form generators pushed through the whole pipeline.

use std::f64::consts::{FRAC_1_SQRT_2, SQRT_2};

use gkls_core::constraints::{check_corollary, check_qubit_relations, nearest_consistent_rates, RateSource};
use gkls_core::fixtures::{dephasing, depolarizing, pauli, plus_state};
use gkls_core::spectrum::{generator_spectrum, multiset_distance};
use gkls_core::{
    check_main_theorem, evolve, relaxation_profile, ComplexMatrix, DensityMatrix, GKLSGenerator, HermitianMatrix,
    KossakowskiMatrix, RateSet, TimeGrid, C64,
};

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

#[test]
fn dephasing_end_to_end() {
    let g = dephasing(1.0);
    let spec = generator_spectrum(&g).unwrap();
    let expected = [c(0.0, 0.0), c(0.0, 0.0), c(-1.0, 0.0), c(-1.0, 0.0)];
    assert!(multiset_distance(spec.eigenvalues(), &expected) < 1e-12);

    let profile = relaxation_profile(&spec);
    for (got, want) in profile.rates.iter().zip([1.0, 1.0, 0.0]) {
        assert!((got - want).abs() < 1e-12);
    }
    assert!(profile.times[2].is_infinite());

    let rates = RateSet::from_profile(&profile);
    let report = check_main_theorem(&rates, 1e-9);
    assert!(report.pass);
    assert!((report.tightness - FRAC_1_SQRT_2).abs() < 1e-12);
    let qubit = check_qubit_relations(&rates, 1e-9).unwrap();
    assert!(qubit.margins[0].abs() < 1e-12 && qubit.margins[1].abs() < 1e-12);
    assert!(check_corollary(&rates, 1e-9).margins[..2].iter().all(|m| m.abs() < 1e-12));

    let rho = DensityMatrix::new(plus_state()).unwrap();
    let traj = evolve(&g, &rho, &TimeGrid::new(vec![0.0, 1.0, 2.0]).unwrap()).unwrap();
    for (t, s) in traj.times.iter().zip(&traj.states) {
        assert!((s[(0, 1)].re - 0.5 * (-t).exp()).abs() < 1e-9);
    }
}

#[test]
fn depolarizing_rates_are_isotropic() {
    let g = depolarizing(1.0);
    let profile = relaxation_profile(&generator_spectrum(&g).unwrap());
    assert!((profile.total_rate() - 2.0 * g.kossakowski().trace()).abs() < 1e-12);
    assert!(profile.rates.iter().all(|r| (r - 1.0).abs() < 1e-12), "{:?}", profile.rates);
}

#[test]
fn precession_spectrum() {
    let h = HermitianMatrix::new(pauli('z').scale_real(0.5)).unwrap();
    let g = GKLSGenerator::new(h, KossakowskiMatrix::zeros(3)).unwrap();
    let spec = generator_spectrum(&g).unwrap();
    let expected = [c(0.0, 0.0), c(0.0, 0.0), c(0.0, 1.0), c(0.0, -1.0)];
    assert!(multiset_distance(spec.eigenvalues(), &expected) < 1e-12);
    let profile = relaxation_profile(&spec);
    assert!(profile.rates.iter().all(|&r| r == 0.0));
    assert!(profile.times.iter().all(|t| t.is_infinite()));
}

#[test]
fn dominant_rate_projects_onto_facet() {
    let r = RateSet::new(2, vec![10.0, 1.0, 1.0], RateSource::Measured).unwrap();
    let p = nearest_consistent_rates(&r);
    let x = p.rates();
    // Closed form: y - t a with a = (√2 - 1, -1, -1), t = a·y / a·a.
    let a = [SQRT_2 - 1.0, -1.0, -1.0];
    let ay: f64 = a.iter().zip(r.rates()).map(|(u, v)| u * v).sum();
    let aa: f64 = a.iter().map(|u| u * u).sum();
    let t = ay / aa;
    let oracle: Vec<f64> = r.rates().iter().zip(a).map(|(y, ai)| y - t * ai).collect();
    for (got, want) in x.iter().zip(&oracle) {
        assert!((got - want).abs() < 1e-10, "{x:?} vs {oracle:?}");
    }
    assert!((x[0] - 9.5914).abs() < 1e-4 && (x[1] - 1.9865).abs() < 1e-4);
    // KKT: residual parallel to the active normal with nonnegative multiplier.
    let kkt: f64 = r.rates().iter().zip(x).zip(a).map(|((y, xi), ai)| (y - xi - t * ai).abs()).fold(0.0, f64::max);
    assert!(t >= 0.0 && kkt < 1e-10);
    assert!((p.total() - SQRT_2 * x[0]).abs() < 1e-10);
}

#[test]
fn lindblad_list_and_matrix_forms_agree() {
    let l = pauli('z');
    let from_ops =
        GKLSGenerator::from_lindblad(ComplexMatrix::zeros(2, 2), &[gkls_core::LindbladTerm::new(0.5, l)]).unwrap();
    let direct = dephasing(1.0);
    assert!(from_ops.kossakowski().as_matrix().max_abs_diff(direct.kossakowski().as_matrix()) < 1e-14);
    assert!(from_ops.hamiltonian().as_matrix().max_abs() < 1e-15);
}
