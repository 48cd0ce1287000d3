//! Measurement matrix, correlation prediction, pseudoinverse reconstruction
//! and state scoring.
//!
//! For detector set `D = (d_0 < … < d_{N-1})` and permutation `σ` the
//! coincidence probability contributed by `ρ_{id;σ}` is
//!
//! ```text
//! T[D, σ] = N! · perm(M),   M[j, k] = U_r[d_j, k] · conj(U_r[d_j, σ(k)])
//! ```
//!
//! so that `Γ_D = Σ_σ T[D, σ] ρ_{id;σ}`. Collecting each conjugate pair
//! `σ, σ⁻¹` gives a real matrix acting on the free vector: involution columns
//! carry `Re T`, pair representatives carry `2 Re T` (for `Re ρ`) and
//! `-2 Im T` (for `Im ρ`).

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::circuit::CircuitSpec;
use crate::combinatorics::{combinations_lex, factorial, permutations_lex, Permutation};
use crate::error::{Error, Result};
use crate::linalg::{hermitian_eigen, hermitian_function, psd_sqrt, singular_values, CMatrix, RMatrix};
use crate::par;
use crate::permanent::permanent;
use crate::states::{
    free_layout, from_free_vector, from_support_block, support_block, FreeVector, SlotKind, SplitStateDensity,
};

/// Tag of the frozen real-column convention (factors on involution, pair-Re
/// and pair-Im columns).
pub const CONVENTION: &str = "involution:1,pair-re:2,pair-im:-2";

/// Relative cutoff below which a singular value counts as zero for the
/// condition number.
pub const SINGULAR_CUTOFF: f64 = 1e-14;

/// Relative cutoff for truncating singular values in the pseudoinverse.
pub const PINV_CUTOFF: f64 = 1e-12;

/// Negative eigenvalues down to this value are accepted as rounding noise.
pub const PSD_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementMatrix {
    m: usize,
    n: usize,
    input_ports: Vec<usize>,
    detector_sets: Vec<Vec<usize>>,
    t_complex: CMatrix,
    t_real: RMatrix,
}

/// JSON-serializable description of a measurement matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasurementMetadata {
    pub m: usize,
    pub n: usize,
    pub ports: Vec<usize>,
    pub convention: String,
}

impl MeasurementMatrix {
    pub fn for_circuit(spec: &CircuitSpec) -> Result<Self> {
        let mut t = build_measurement_matrix(&spec.input_submatrix(), spec.photons())?;
        t.input_ports = spec.input_ports.clone();
        Ok(t)
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn detector_sets(&self) -> &[Vec<usize>] {
        &self.detector_sets
    }

    pub fn t_complex(&self) -> &CMatrix {
        &self.t_complex
    }

    pub fn t_real(&self) -> &RMatrix {
        &self.t_real
    }

    pub fn metadata(&self) -> MeasurementMetadata {
        MeasurementMetadata {
            m: self.m,
            n: self.n,
            ports: self.input_ports.clone(),
            convention: CONVENTION.to_string(),
        }
    }
}

/// Builds `T` from the `m × N` input submatrix.
///
/// `T[D,σ] = N!·perm(M)` with `M[j,k] = conj(u[d_j,k])·u[d_j,σ(k)]`, so that
/// `Γ = Σ_σ T[:,σ]·ρ_{id;σ}` for `ρ_{id;σ} ∝ Π_k ⟨φ_k|φ_σ(k)⟩`.
pub fn build_measurement_matrix(u_r: &CMatrix, n: usize) -> Result<MeasurementMatrix> {
    if u_r.ncols() != n {
        return Err(Error::Argument(format!(
            "input submatrix has {} columns, expected {n}",
            u_r.ncols()
        )));
    }
    let m = u_r.nrows();
    let perms = permutations_lex(n)?;
    let detector_sets = combinations_lex(m, n)?;
    let scale = factorial(n) as f64;

    let row = |r: usize| -> Vec<Complex64> {
        let d = &detector_sets[r];
        perms
            .iter()
            .map(|s| {
                let mm = CMatrix::from_fn(n, n, |j, k| u_r[(d[j], k)].conj() * u_r[(d[j], s.apply(k))]);
                permanent(&mm).expect("order bounded by enumeration cap") * scale
            })
            .collect()
    };
    // small matrices are cheaper to build serially
    let rows: Vec<Vec<Complex64>> = if detector_sets.len() * perms.len() >= 4096 {
        par::map_indexed(detector_sets.len(), row)
    } else {
        (0..detector_sets.len()).map(row).collect()
    };
    let t_complex = CMatrix::from_fn(rows.len(), perms.len(), |r, c| rows[r][c]);
    let t_real = real_columns(&t_complex, n)?;
    Ok(MeasurementMatrix {
        m,
        n,
        input_ports: Vec::new(),
        detector_sets,
        t_complex,
        t_real,
    })
}

fn real_columns(t: &CMatrix, n: usize) -> Result<RMatrix> {
    let layout = free_layout(n)?;
    Ok(RMatrix::from_fn(t.nrows(), layout.len(), |r, c| {
        let s = layout[c];
        let z = t[(r, s.perm)];
        match s.kind {
            SlotKind::Involution => z.re,
            SlotKind::PairRe => 2.0 * z.re,
            SlotKind::PairIm => -2.0 * z.im,
        }
    }))
}

/// Coincidence probabilities, one per detector set in lexicographic order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CorrelationVector(pub Vec<f64>);

impl CorrelationVector {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn total(&self) -> f64 {
        self.0.iter().sum()
    }
}

/// `Γ = T ρ_free`.
pub fn predict_correlations(t: &MeasurementMatrix, v: &FreeVector) -> Result<CorrelationVector> {
    if v.len() != t.t_real.ncols() {
        return Err(Error::Argument(format!(
            "free vector has {} entries, T has {} columns",
            v.len(),
            t.t_real.ncols()
        )));
    }
    let gamma = (0..t.t_real.nrows())
        .map(|r| t.t_real.row(r).iter().zip(v.as_slice()).map(|(a, b)| a * b).sum())
        .collect();
    Ok(CorrelationVector(gamma))
}

/// `σ_max / σ_min` of the real measurement matrix; infinite when the design
/// cannot resolve every free parameter.
pub fn condition_number(t: &MeasurementMatrix) -> f64 {
    condition_number_of(&t.t_real)
}

pub fn condition_number_of(a: &RMatrix) -> f64 {
    if a.nrows() < a.ncols() || a.ncols() == 0 {
        return f64::INFINITY;
    }
    let s = singular_values(a);
    let (max, min) = (s[0], s[s.len() - 1]);
    if !(max > 0.0) || min < SINGULAR_CUTOFF * max || !min.is_finite() {
        return f64::INFINITY;
    }
    max / min
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Reconstruction {
    pub free: FreeVector,
    pub rank: usize,
    /// Set when singular values were truncated; the solution is then the
    /// minimum-norm least-squares fit.
    pub rank_deficient: bool,
}

/// Precomputed pseudoinverse of a measurement matrix.
#[derive(Debug, Clone)]
pub struct Reconstructor {
    n: usize,
    pinv: RMatrix,
    rank: usize,
}

impl Reconstructor {
    pub fn new(t: &MeasurementMatrix) -> Self {
        let a = &t.t_real;
        let svd = a.clone().svd(true, true);
        let smax = svd.singular_values.iter().copied().fold(0.0, f64::max);
        let cutoff = PINV_CUTOFF * smax;
        let u = svd.u.expect("requested");
        let vt = svd.v_t.expect("requested");
        let mut pinv = RMatrix::zeros(a.ncols(), a.nrows());
        let mut rank = 0;
        for (k, &s) in svd.singular_values.iter().enumerate() {
            if s > cutoff && s > 0.0 {
                rank += 1;
                pinv += vt.row(k).transpose() * u.column(k).transpose() / s;
            }
        }
        Self { n: t.n, pinv, rank }
    }

    pub fn apply(&self, gamma: &CorrelationVector, normalize: bool) -> Result<Reconstruction> {
        if gamma.len() != self.pinv.ncols() {
            return Err(Error::Argument(format!(
                "{} correlations for {} detector sets",
                gamma.len(),
                self.pinv.ncols()
            )));
        }
        let mut free: Vec<f64> = (0..self.pinv.nrows())
            .map(|r| self.pinv.row(r).iter().zip(gamma.as_slice()).map(|(a, b)| a * b).sum())
            .collect();
        let rank_deficient = self.rank < self.pinv.nrows();
        if rank_deficient {
            log::warn!("measurement matrix has rank {} < {}", self.rank, self.pinv.nrows());
        }
        if normalize {
            // identity permutation sits in slot 0; the trace is N! ρ_{id;id}
            let trace = factorial(self.n) as f64 * free[0];
            if !(trace.abs() > 0.0) || !trace.is_finite() {
                return Err(Error::Degenerate(
                    "reconstructed trace is zero; cannot normalize".into(),
                ));
            }
            free.iter_mut().for_each(|x| *x /= trace);
        }
        Ok(Reconstruction {
            free: FreeVector(free),
            rank: self.rank,
            rank_deficient,
        })
    }
}

/// `ρ_free = T⁺ Γ`.
pub fn reconstruct(t: &MeasurementMatrix, gamma: &CorrelationVector, normalize: bool) -> Result<Reconstruction> {
    Reconstructor::new(t).apply(gamma, normalize)
}

/// Nearest physical state by eigenvalue clipping of the support block,
/// renormalized to unit trace.
pub fn project_physical(rho: &SplitStateDensity) -> Result<SplitStateDensity> {
    let block = support_block(rho);
    let (values, _) = hermitian_eigen(&block);
    let kept: f64 = values.iter().map(|v| v.max(0.0)).sum();
    if !(kept > 0.0) {
        return Err(Error::Degenerate("no positive eigenvalues to keep".into()));
    }
    let projected = hermitian_function(&block, |v| v.max(0.0) / kept);
    let raw = from_support_block(rho.n(), &projected);
    Ok(symmetrize(&raw))
}

/// Restores exact Hermitian pairing of a first row that is correct up to
/// rounding.
fn symmetrize(rho: &SplitStateDensity) -> SplitStateDensity {
    let perms = permutations_lex(rho.n()).expect("size validated");
    let row = rho.first_row();
    let fixed: Vec<Complex64> = perms
        .iter()
        .enumerate()
        .map(|(i, p)| (row[i] + row[p.invert().lex_rank()].conj()) * 0.5)
        .collect();
    SplitStateDensity::new(rho.n(), fixed).expect("symmetrized row is paired")
}

/// `Tr √(√a b √a)` of two split states, evaluated on their support blocks.
pub fn fidelity(a: &SplitStateDensity, b: &SplitStateDensity) -> Result<f64> {
    if a.n() != b.n() {
        return Err(Error::Argument(format!(
            "fidelity between {}- and {}-photon states",
            a.n(),
            b.n()
        )));
    }
    fidelity_matrices(&support_block(a), &support_block(b))
}

/// Uhlmann fidelity of two PSD matrices of equal size, clamped to `[0, 1]`.
pub fn fidelity_matrices(a: &CMatrix, b: &CMatrix) -> Result<f64> {
    if a.shape() != b.shape() || a.nrows() != a.ncols() {
        return Err(Error::Argument(
            "fidelity needs two square matrices of equal size".into(),
        ));
    }
    for (name, m) in [("first", a), ("second", b)] {
        let min = hermitian_eigen(m).0.first().copied().unwrap_or(0.0);
        if min < -PSD_TOL {
            return Err(Error::Precondition(format!(
                "{name} state has eigenvalue {min:e}; apply project_physical first"
            )));
        }
    }
    // ‖√a √b‖₁ equals Tr √(√a b √a) and is symmetric in a, b by construction
    let product = psd_sqrt(a) * psd_sqrt(b);
    let f: f64 = product.svd(false, false).singular_values.iter().sum();
    Ok(f.clamp(0.0, 1.0))
}

/// Reconstructs a state from correlations and converts it to a density.
pub fn reconstruct_state(
    t: &MeasurementMatrix,
    gamma: &CorrelationVector,
    normalize: bool,
) -> Result<SplitStateDensity> {
    let rec = reconstruct(t, gamma, normalize)?;
    from_free_vector(&rec.free, t.n)
}

/// Label of a real column, e.g. `re:1-2-0`.
pub fn column_labels(n: usize) -> Result<Vec<String>> {
    let perms = permutations_lex(n)?;
    Ok(free_layout(n)?
        .iter()
        .map(|s| {
            let p = dash(perms[s.perm].image());
            match s.kind {
                SlotKind::Involution => p,
                SlotKind::PairRe => format!("re:{p}"),
                SlotKind::PairIm => format!("im:{p}"),
            }
        })
        .collect())
}

pub(crate) fn dash(v: &[usize]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("-")
}

/// Index of the column holding `ρ_{id;σ}` in `t_complex`.
pub fn complex_column(sigma: &Permutation) -> usize {
    sigma.lex_rank()
}
