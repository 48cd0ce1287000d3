mod common;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use splitstate::circuit::{coupling_matrix, input_submatrix, Propagator, TransferMatrix};
use splitstate::combinatorics::{permutations_lex, Permutation};
use splitstate::linalg::{hermitian_eigen, RMatrix};
use splitstate::states::{
    density_from_overlaps, free_layout, from_free_vector, support_block, to_free_vector, FreeVector, OverlapMatrix,
};
use splitstate::tomography::{
    build_measurement_matrix, condition_number, condition_number_of, fidelity, predict_correlations, project_physical,
    reconstruct,
};
use splitstate::Complex64;
use std::f64::consts::PI;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn random_overlaps(r: &mut ChaCha8Rng, n: usize) -> OverlapMatrix {
    let dim = r.random_range(1..=n);
    OverlapMatrix::new(common::random_internal(r, n, dim).overlaps()).unwrap()
}

fn random_perm(r: &mut ChaCha8Rng, n: usize) -> Permutation {
    let perms = permutations_lex(n).unwrap();
    perms[r.random_range(0..perms.len())].clone()
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn circuits_are_unitary(seed: u64, m in 2usize..8) {
        let mut r = rng(seed);
        let spec = common::random_circuit(&mut r, m, 2.min(m));
        prop_assert!(spec.unitary().unitarity_defect() < 1e-10);
    }

    #[test]
    fn coupling_spectrum_is_analytic(m in 1usize..12, kappa in 0.1f64..3.0) {
        let prop = Propagator::new(&coupling_matrix(m, kappa));
        let mut expected: Vec<f64> = (1..=m).map(|q| 2.0 * kappa * (PI * q as f64 / (m as f64 + 1.0)).cos()).collect();
        expected.sort_by(f64::total_cmp);
        prop_assert!(max_diff(prop.eigenvalues(), &expected) < 1e-10);
    }

    #[test]
    fn measurement_columns_are_paired(seed: u64, n in 2usize..=3, extra in 0usize..3) {
        let mut r = rng(seed);
        let spec = common::random_circuit(&mut r, n + extra, n);
        let t = build_measurement_matrix(&spec.input_submatrix(), n).unwrap();
        let tc = t.t_complex();
        for (i, p) in permutations_lex(n).unwrap().iter().enumerate() {
            let j = p.invert().lex_rank();
            for row in 0..tc.nrows() {
                prop_assert!((tc[(row, i)] - tc[(row, j)].conj()).norm() < 1e-12);
                if p.is_involution() {
                    prop_assert!(tc[(row, i)].im.abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn overlap_states_are_physical(seed: u64, n in 2usize..=4) {
        let mut r = rng(seed);
        let rho = density_from_overlaps(&random_overlaps(&mut r, n)).unwrap();
        prop_assert!((rho.trace() - 1.0).abs() < 1e-12);
        for (i, p) in permutations_lex(n).unwrap().iter().enumerate() {
            prop_assert!((rho.first_row()[p.invert().lex_rank()] - rho.first_row()[i].conj()).norm() < 1e-12);
            if p.is_involution() {
                prop_assert!(rho.first_row()[i].im.abs() < 1e-14);
            }
        }
        let (eig, _) = hermitian_eigen(&support_block(&rho));
        prop_assert!(eig[0] >= -1e-10);
    }

    #[test]
    fn free_vector_round_trip(values in prop::collection::vec(-1.0f64..1.0, 24)) {
        for n in 2..=4 {
            let len = free_layout(n).unwrap().len();
            let v = FreeVector(values[..len].to_vec());
            let back = to_free_vector(&from_free_vector(&v, n).unwrap());
            prop_assert_eq!(back, v);
        }
    }

    #[test]
    fn reconstruction_inverts_prediction(seed: u64) {
        let mut r = rng(seed);
        let spec = common::random_circuit(&mut r, 5, 3);
        let t = build_measurement_matrix(&spec.input_submatrix(), 3).unwrap();
        prop_assume!(condition_number(&t) < 1e6);
        let v = to_free_vector(&density_from_overlaps(&random_overlaps(&mut r, 3)).unwrap());
        let gamma = predict_correlations(&t, &v).unwrap();
        let back = reconstruct(&t, &gamma, false).unwrap().free;
        prop_assert!(max_diff(back.as_slice(), v.as_slice()) < 1e-10);
    }

    #[test]
    fn physical_correlations_are_probabilities(seed: u64) {
        let mut r = rng(seed);
        let spec = common::random_circuit(&mut r, 5, 3);
        let t = build_measurement_matrix(&spec.input_submatrix(), 3).unwrap();
        let v = to_free_vector(&density_from_overlaps(&random_overlaps(&mut r, 3)).unwrap());
        let gamma = predict_correlations(&t, &v).unwrap();
        prop_assert!(gamma.as_slice().iter().all(|&g| g >= -1e-12));
        prop_assert!(gamma.total() <= 1.0 + 1e-12);
    }

    #[test]
    fn condition_number_invariances(seed: u64, scale in 0.01f64..100.0) {
        let mut r = rng(seed);
        let a = RMatrix::from_fn(10, 6, |_, _| r.random_range(-1.0..1.0));
        let base = condition_number_of(&a);
        let mut rows: Vec<usize> = (0..10).collect();
        let mut cols: Vec<usize> = (0..6).collect();
        rows.reverse();
        cols.rotate_left(r.random_range(0..6));
        let shuffled = RMatrix::from_fn(10, 6, |i, j| a[(rows[i], cols[j])] * scale);
        prop_assert!((condition_number_of(&shuffled) - base).abs() < 1e-9 * base);
    }

    #[test]
    fn global_phase_leaves_measurement_unchanged(seed: u64, theta in 0.0f64..6.3) {
        let mut r = rng(seed);
        let spec = common::random_circuit(&mut r, 5, 3);
        let u = spec.input_submatrix();
        let shifted = &u * Complex64::from_polar(1.0, theta);
        let a = build_measurement_matrix(&u, 3).unwrap();
        let b = build_measurement_matrix(&shifted, 3).unwrap();
        prop_assert!((a.t_complex() - b.t_complex()).iter().all(|z| z.norm() < 1e-12));
    }

    #[test]
    fn relabeling_is_covariant(seed: u64, n in 2usize..=4) {
        let mut r = rng(seed);
        let ov = random_overlaps(&mut r, n);
        let p = random_perm(&mut r, n);
        let rho = density_from_overlaps(&ov).unwrap();
        let moved = density_from_overlaps(&ov.relabeled(&p).unwrap()).unwrap();
        let pinv = p.invert();
        for (i, s) in permutations_lex(n).unwrap().iter().enumerate() {
            let conj = p.compose(s).compose(&pinv);
            prop_assert!((moved.first_row()[i] - rho.element(&conj)).norm() < 1e-14);
        }
    }

    #[test]
    fn swapping_input_order_relabels_photons(seed: u64) {
        let mut r = rng(seed);
        let spec = common::random_circuit(&mut r, 5, 3);
        let u = spec.input_submatrix();
        let ov = random_overlaps(&mut r, 3);
        let p = random_perm(&mut r, 3);
        let swapped = splitstate::linalg::CMatrix::from_fn(5, 3, |row, k| u[(row, p.apply(k))]);
        let g = |u: &splitstate::linalg::CMatrix, ov: &OverlapMatrix| {
            let t = build_measurement_matrix(u, 3).unwrap();
            predict_correlations(&t, &to_free_vector(&density_from_overlaps(ov).unwrap())).unwrap()
        };
        let a = g(&u, &ov);
        let b = g(&swapped, &ov.relabeled(&p).unwrap());
        prop_assert!(max_diff(a.as_slice(), b.as_slice()) < 1e-12);
        // identical photons do not notice the relabeling at all
        let same = OverlapMatrix::indistinguishable(3).unwrap();
        prop_assert!(max_diff(g(&u, &same).as_slice(), g(&swapped, &same).as_slice()) < 1e-12);
    }

    #[test]
    fn fidelity_is_bounded(seed: u64, noise in 0.0f64..0.2) {
        let mut r = rng(seed);
        let rho = density_from_overlaps(&random_overlaps(&mut r, 3)).unwrap();
        prop_assert!((fidelity(&rho, &rho).unwrap() - 1.0).abs() < 1e-8);
        let v: Vec<f64> = to_free_vector(&rho).as_slice().iter().map(|x| x + r.random_range(-noise..=noise)).collect();
        let other = project_physical(&from_free_vector(&FreeVector(v), 3).unwrap()).unwrap();
        let f = fidelity(&rho, &other).unwrap();
        prop_assert!((0.0..=1.0).contains(&f));
        prop_assert!((f - fidelity(&other, &rho).unwrap()).abs() < 1e-8);
    }
}

#[test]
fn identity_circuit_only_fires_input_detectors() {
    // photons stay in their input ports, so only the input set clicks
    let u = TransferMatrix::identity(4);
    let u_r = input_submatrix(&u, &[0, 2]).unwrap();
    let t = build_measurement_matrix(&u_r, 2).unwrap();
    let v = to_free_vector(&density_from_overlaps(&OverlapMatrix::indistinguishable(2).unwrap()).unwrap());
    let g = predict_correlations(&t, &v).unwrap();
    for (set, p) in t.detector_sets().iter().zip(g.as_slice()) {
        let expected = if set == &vec![0, 2] { 1.0 } else { 0.0 };
        assert!((p - expected).abs() < 1e-14);
    }
}
