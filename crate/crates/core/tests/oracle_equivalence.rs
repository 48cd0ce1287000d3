//! The closed-form measurement matrix against brute-force Fock-space
//! simulation.

mod common;

use common::{random_circuit, random_internal};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use splitstate::circuit::{coupling_matrix, section_propagator, CircuitSpec};
use splitstate::fock_oracle::{internal_from_overlaps, oracle_correlations, oracle_distribution, InternalState};
use splitstate::linalg::CMatrix;
use splitstate::states::{density_from_overlaps, example_three_photon_overlaps, to_free_vector, OverlapMatrix};
use splitstate::tomography::{predict_correlations, MeasurementMatrix};
use splitstate::Complex64;
use std::f64::consts::PI;

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

#[test]
fn randomized_instances_agree() {
    let mut rng = ChaCha8Rng::seed_from_u64(20240611);
    let mut checked = 0;
    for case in 0..160 {
        let n = 2 + case % 2;
        let m = rng.random_range(n..=5);
        let spec = random_circuit(&mut rng, m, n);
        let internal = random_internal(&mut rng, n, n);
        let overlaps = OverlapMatrix::new(internal.overlaps()).unwrap();

        let t = MeasurementMatrix::for_circuit(&spec).unwrap();
        let rho = density_from_overlaps(&overlaps).unwrap();
        let predicted = predict_correlations(&t, &to_free_vector(&rho)).unwrap();
        let oracle = oracle_correlations(&spec.unitary(), &spec.input_ports, &internal).unwrap();
        let d = max_diff(predicted.as_slice(), oracle.as_slice());
        assert!(d < 1e-10, "case {case}: m={m} n={n} diff {d:e}");
        checked += 1;
    }
    assert!(checked >= 100);
}

#[test]
fn paper_state_through_random_circuit() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let ov = example_three_photon_overlaps();
    let internal = internal_from_overlaps(&ov, 3).unwrap();
    let rho = density_from_overlaps(&ov).unwrap();
    for _ in 0..10 {
        let spec = random_circuit(&mut rng, 5, 3);
        let t = MeasurementMatrix::for_circuit(&spec).unwrap();
        let predicted = predict_correlations(&t, &to_free_vector(&rho)).unwrap();
        let oracle = oracle_correlations(&spec.unitary(), &spec.input_ports, &internal).unwrap();
        assert!(max_diff(predicted.as_slice(), oracle.as_slice()) < 1e-10);
    }
}

#[test]
fn four_photons_agree() {
    let mut rng = ChaCha8Rng::seed_from_u64(44);
    for _ in 0..3 {
        let spec = random_circuit(&mut rng, 6, 4);
        let internal = random_internal(&mut rng, 4, 4);
        let overlaps = OverlapMatrix::new(internal.overlaps()).unwrap();
        let t = MeasurementMatrix::for_circuit(&spec).unwrap();
        let predicted = predict_correlations(&t, &to_free_vector(&density_from_overlaps(&overlaps).unwrap())).unwrap();
        let oracle = oracle_correlations(&spec.unitary(), &spec.input_ports, &internal).unwrap();
        assert!(max_diff(predicted.as_slice(), oracle.as_slice()) < 1e-10);
    }
}

#[test]
fn hong_ou_mandel_zero() {
    let u = section_propagator(&coupling_matrix(2, 1.0), PI / 4.0);
    let spec = CircuitSpec::new(2, 1.0, vec![PI / 4.0], vec![], vec![0, 1]).unwrap();
    let t = MeasurementMatrix::for_circuit(&spec).unwrap();
    let same = OverlapMatrix::indistinguishable(2).unwrap();
    let g = predict_correlations(&t, &to_free_vector(&density_from_overlaps(&same).unwrap())).unwrap();
    assert!(g.as_slice()[0].abs() < 1e-12);
    let o = oracle_correlations(&u, &[0, 1], &internal_from_overlaps(&same, 1).unwrap()).unwrap();
    assert!(o.as_slice()[0].abs() < 1e-12);
}

#[test]
fn probability_completeness() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for n in 1..=3 {
        let spec = random_circuit(&mut rng, 5, n);
        let internal = random_internal(&mut rng, n, 2.min(n).max(1));
        let total: f64 = oracle_distribution(&spec.unitary(), &spec.input_ports, &internal)
            .unwrap()
            .iter()
            .map(|(_, p)| p)
            .sum();
        assert!((total - 1.0).abs() < 1e-10, "n={n}: {total}");
    }
}

#[test]
fn oracle_independent_of_internal_basis() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let spec = random_circuit(&mut rng, 5, 3);
    let ov = example_three_photon_overlaps();
    let base = internal_from_overlaps(&ov, 3).unwrap();
    let wider = internal_from_overlaps(&ov, 4).unwrap();
    // random internal unitary from the eigenvectors of a random Hermitian matrix
    let h = CMatrix::from_fn(3, 3, |_, _| {
        Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
    });
    let h = &h + h.adjoint();
    let (_, w) = splitstate::linalg::hermitian_eigen(&h);
    let rotated = base.rotated(&w).unwrap();

    let u = spec.unitary();
    let g0 = oracle_correlations(&u, &spec.input_ports, &base).unwrap();
    for other in [&wider, &rotated] {
        let g = oracle_correlations(&u, &spec.input_ports, other).unwrap();
        assert!(max_diff(g0.as_slice(), g.as_slice()) < 1e-10);
    }
}

#[test]
fn internal_state_validation() {
    use nalgebra::DVector;
    let v = DVector::from_vec(vec![Complex64::new(0.5, 0.0), Complex64::new(0.0, 0.0)]);
    assert!(InternalState::new(vec![v]).is_err());
}
