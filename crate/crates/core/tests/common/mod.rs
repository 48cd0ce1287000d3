#![allow(dead_code)]

use nalgebra::DVector;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use splitstate::circuit::CircuitSpec;
use splitstate::fock_oracle::InternalState;
use splitstate::Complex64;
use std::f64::consts::TAU;

/// Circuit with 1–3 sections of random length and random phase layers, inputs
/// on `n` random distinct ports.
pub fn random_circuit(rng: &mut ChaCha8Rng, m: usize, n: usize) -> CircuitSpec {
    let sections = rng.random_range(1..=3);
    let lengths = (0..sections).map(|_| rng.random_range(0.1..1.5)).collect();
    let layers = (0..sections - 1)
        .map(|_| (0..m).map(|_| rng.random_range(0.0..TAU)).collect())
        .collect();
    let mut ports: Vec<usize> = (0..m).collect();
    for i in 0..n {
        let j = rng.random_range(i..m);
        ports.swap(i, j);
    }
    let mut ports = ports[..n].to_vec();
    ports.sort_unstable();
    CircuitSpec::new(m, 1.0, lengths, layers, ports).unwrap()
}

/// `n` random unit vectors in `C^r`.
pub fn random_internal(rng: &mut ChaCha8Rng, n: usize, r: usize) -> InternalState {
    let vectors = (0..n)
        .map(|_| {
            let v = DVector::from_fn(r, |_, _| {
                Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
            });
            let norm = v.norm();
            v / Complex64::new(norm, 0.0)
        })
        .collect();
    InternalState::new(vectors).unwrap()
}
