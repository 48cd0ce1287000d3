//! Brute-force simulator of partially distinguishable photons behind a
//! linear-optical network, with click detection.
//!
//! Each photon carries an internal state in a small `r`-dimensional space.
//! Creation operators are expanded over every `(output port, internal mode)`
//! pair, amplitudes are accumulated per occupation pattern, and coincidences
//! are read off by summing probabilities. Nothing here touches permanents or
//! the measurement-matrix code, so it serves as an independent check of them.

use std::collections::HashMap;

use nalgebra::DVector;
use num_complex::Complex64;

use crate::circuit::TransferMatrix;
use crate::combinatorics::combinations_lex;
use crate::error::{Error, Result};
use crate::linalg::{hermitian_eigen, CMatrix};
use crate::states::OverlapMatrix;
use crate::tomography::CorrelationVector;

pub const MAX_PHOTONS: usize = 4;
pub const MAX_PORTS: usize = 8;
pub const MAX_INTERNAL: usize = 4;

/// Unit-norm internal vectors, one per photon.
#[derive(Debug, Clone, PartialEq)]
pub struct InternalState {
    vectors: Vec<DVector<Complex64>>,
}

impl InternalState {
    pub fn new(vectors: Vec<DVector<Complex64>>) -> Result<Self> {
        let r = vectors.first().map_or(0, |v| v.len());
        if vectors.iter().any(|v| v.len() != r) || r == 0 {
            return Err(Error::Argument(
                "internal vectors must share a non-zero dimension".into(),
            ));
        }
        if let Some(v) = vectors.iter().find(|v| (v.norm() - 1.0).abs() > 1e-12) {
            return Err(Error::Validation(format!("internal vector has norm {}", v.norm())));
        }
        Ok(Self { vectors })
    }

    pub fn photons(&self) -> usize {
        self.vectors.len()
    }

    pub fn dim(&self) -> usize {
        self.vectors[0].len()
    }

    pub fn vectors(&self) -> &[DVector<Complex64>] {
        &self.vectors
    }

    /// `⟨v_i|v_j⟩`.
    pub fn overlaps(&self) -> CMatrix {
        let n = self.vectors.len();
        CMatrix::from_fn(n, n, |i, j| self.vectors[i].dotc(&self.vectors[j]))
    }

    /// Applies the same unitary to every internal vector.
    pub fn rotated(&self, w: &CMatrix) -> Result<Self> {
        if w.nrows() != self.dim() || w.ncols() != self.dim() {
            return Err(Error::Argument("rotation dimension mismatch".into()));
        }
        Self::new(self.vectors.iter().map(|v| w * v).collect())
    }
}

/// Factorizes `I = V†V` and returns the columns of `V` as internal vectors in
/// an `r`-dimensional space.
pub fn internal_from_overlaps(overlaps: &OverlapMatrix, r: usize) -> Result<InternalState> {
    let n = overlaps.n();
    let (values, q) = hermitian_eigen(overlaps.matrix());
    if values[0] < -1e-10 {
        return Err(Error::Factorization(format!(
            "overlap matrix has eigenvalue {:e}",
            values[0]
        )));
    }
    let rank = values.iter().filter(|&&v| v > 1e-12).count();
    if rank > r {
        return Err(Error::Factorization(format!(
            "overlap rank {rank} exceeds internal dimension {r}"
        )));
    }
    // largest eigenvalues last
    let mut vectors = vec![DVector::zeros(r); n];
    for (a, k) in (0..n).rev().take(r.min(n)).enumerate() {
        let s = values[k].max(0.0).sqrt();
        for (i, v) in vectors.iter_mut().enumerate() {
            v[a] = q[(i, k)].conj() * s;
        }
    }
    // renormalize away rounding from clipped eigenvalues
    for v in &mut vectors {
        let norm = v.norm();
        *v /= Complex64::new(norm, 0.0);
    }
    InternalState::new(vectors)
}

/// Output amplitudes keyed by the sorted list of occupied
/// `(port · r + internal)` modes.
fn output_amplitudes(
    u: &TransferMatrix,
    ports: &[usize],
    internal: &InternalState,
) -> Result<HashMap<Vec<usize>, Complex64>> {
    let n = ports.len();
    let m = u.dim();
    let r = internal.dim();
    if n != internal.photons() {
        return Err(Error::Argument(format!("{n} ports for {} photons", internal.photons())));
    }
    if n > MAX_PHOTONS || m > MAX_PORTS || r > MAX_INTERNAL {
        return Err(Error::SizeLimit(format!(
            "oracle supports N ≤ {MAX_PHOTONS}, m ≤ {MAX_PORTS}, r ≤ {MAX_INTERNAL}; got N={n}, m={m}, r={r}"
        )));
    }
    if ports.iter().any(|&p| p >= m) {
        return Err(Error::Argument("input port out of range".into()));
    }
    let modes = m * r;
    // single-photon wavefunction of photon k over the output modes
    let single: Vec<Vec<Complex64>> = (0..n)
        .map(|k| {
            (0..modes)
                .map(|mode| u.matrix()[(mode / r, ports[k])] * internal.vectors()[k][mode % r])
                .collect()
        })
        .collect();

    let mut amps: HashMap<Vec<usize>, Complex64> = HashMap::new();
    let mut assignment = vec![0usize; n];
    loop {
        let coeff: Complex64 = (0..n).map(|k| single[k][assignment[k]]).product();
        if coeff != Complex64::new(0.0, 0.0) {
            let mut key = assignment.clone();
            key.sort_unstable();
            *amps.entry(key).or_insert(Complex64::new(0.0, 0.0)) += coeff;
        }
        // odometer increment
        let mut k = 0;
        while k < n {
            assignment[k] += 1;
            if assignment[k] < modes {
                break;
            }
            assignment[k] = 0;
            k += 1;
        }
        if k == n {
            break;
        }
    }
    Ok(amps)
}

/// `∏ b†|0⟩ = √(∏ n_i!) |n⟩`, so a pattern's probability is
/// `|Σ coeff|² ∏ n_i!`.
fn pattern_probability(key: &[usize], amp: Complex64) -> f64 {
    let mut weight = 1.0;
    let mut run = 1.0;
    for w in key.windows(2) {
        if w[0] == w[1] {
            run += 1.0;
            weight *= run;
        } else {
            run = 1.0;
        }
    }
    amp.norm_sqr() * weight
}

/// Probability of every output occupation pattern (internal modes included).
pub fn oracle_distribution(
    u: &TransferMatrix,
    ports: &[usize],
    internal: &InternalState,
) -> Result<Vec<(Vec<usize>, f64)>> {
    let mut out: Vec<(Vec<usize>, f64)> = output_amplitudes(u, ports, internal)?
        .into_iter()
        .map(|(k, a)| {
            let p = pattern_probability(&k, a);
            (k, p)
        })
        .collect();
    out.sort_by(|a, b| a.0.cmp(&b.0));
    Ok(out)
}

/// N-fold coincidences over distinct detectors, in lexicographic detector-set
/// order.
pub fn oracle_correlations(u: &TransferMatrix, ports: &[usize], internal: &InternalState) -> Result<CorrelationVector> {
    let n = ports.len();
    let r = internal.dim();
    let sets = combinations_lex(u.dim(), n)?;
    let index: HashMap<Vec<usize>, usize> = sets.into_iter().enumerate().map(|(i, s)| (s, i)).collect();
    let mut gamma = vec![0.0; index.len()];
    for (key, p) in oracle_distribution(u, ports, internal)? {
        let detectors: Vec<usize> = key.iter().map(|mode| mode / r).collect();
        // click pattern with exactly one photon per detector
        if detectors.windows(2).all(|w| w[0] < w[1]) {
            if let Some(&row) = index.get(&detectors) {
                gamma[row] += p;
            }
        }
    }
    Ok(CorrelationVector(gamma))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{coupling_matrix, section_propagator, CircuitSpec};
    use crate::states::example_three_photon_overlaps;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    #[test]
    fn factorization_of_simple_overlaps() {
        let id = internal_from_overlaps(&OverlapMatrix::distinguishable(3).unwrap(), 3).unwrap();
        let g = id.overlaps();
        assert!((g - CMatrix::identity(3, 3)).iter().all(|z| z.norm() < 1e-12));

        let ones = internal_from_overlaps(&OverlapMatrix::indistinguishable(3).unwrap(), 1).unwrap();
        assert_eq!(ones.dim(), 1);
        let v0 = ones.vectors()[0][0];
        assert!(ones.vectors().iter().all(|v| (v[0] - v0).norm() < 1e-12));

        let ex = example_three_photon_overlaps();
        let st = internal_from_overlaps(&ex, 3).unwrap();
        let g = st.overlaps();
        assert!((g[(0, 1)] - Complex64::from_polar(0.7, -PI / 3.0)).norm() < 1e-12);
        assert!((&g - ex.matrix()).iter().all(|z| z.norm() < 1e-12));

        assert!(matches!(internal_from_overlaps(&ex, 2), Err(Error::Factorization(_))));
    }

    #[test]
    fn single_photon() {
        let spec = CircuitSpec::uniform(4, 1.3, 2, vec![vec![0.0, 0.4, 2.0, 1.0]], vec![1]).unwrap();
        let u = spec.unitary();
        let st = internal_from_overlaps(&OverlapMatrix::distinguishable(1).unwrap(), 1).unwrap();
        let g = oracle_correlations(&u, &[1], &st).unwrap();
        for d in 0..4 {
            assert_abs_diff_eq!(g.0[d], u.matrix()[(d, 1)].norm_sqr(), epsilon = 1e-14);
        }
    }

    #[test]
    fn hong_ou_mandel_dip() {
        let u = section_propagator(&coupling_matrix(2, 1.0), PI / 4.0);
        let same = internal_from_overlaps(&OverlapMatrix::indistinguishable(2).unwrap(), 1).unwrap();
        assert!(oracle_correlations(&u, &[0, 1], &same).unwrap().0[0].abs() < 1e-15);
        let diff = internal_from_overlaps(&OverlapMatrix::distinguishable(2).unwrap(), 2).unwrap();
        assert_abs_diff_eq!(
            oracle_correlations(&u, &[0, 1], &diff).unwrap().0[0],
            0.5,
            epsilon = 1e-14
        );
    }

    #[test]
    fn size_limits() {
        let u = TransferMatrix::identity(9);
        let st = internal_from_overlaps(&OverlapMatrix::distinguishable(2).unwrap(), 2).unwrap();
        assert!(matches!(
            oracle_correlations(&u, &[0, 1], &st),
            Err(Error::SizeLimit(_))
        ));
    }
}
