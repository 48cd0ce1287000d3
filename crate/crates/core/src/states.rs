//! Split-state density matrices.
//!
//! For `N` photons in `N` distinct spatial modes the reduced spatial density
//! matrix is supported on the `N!` permutations of the mode labels, and every
//! row is a relabeling of the first one. A state is therefore stored as its
//! first row `ρ_{id;σ}`, with `σ` in lexicographic order.

use serde::{Deserialize, Serialize};

use crate::combinatorics::{factorial, permutations_lex, Permutation, MAX_ENUMERATED};
use crate::error::{Error, Result};
use crate::linalg::{hermitian_eigen, hermiticity_defect, CMatrix};
use num_complex::Complex64;

const STRUCTURE_TOL: f64 = 1e-10;

/// Hermitian, unit-diagonal Gram matrix of pairwise spectral overlaps.
#[derive(Debug, Clone, PartialEq)]
pub struct OverlapMatrix {
    entries: CMatrix,
}

impl OverlapMatrix {
    pub fn new(entries: CMatrix) -> Result<Self> {
        let n = entries.nrows();
        if n == 0 || entries.ncols() != n {
            return Err(Error::Validation("overlap matrix must be square and non-empty".into()));
        }
        if n > MAX_ENUMERATED {
            return Err(Error::SizeLimit(format!("{n} photons exceeds {MAX_ENUMERATED}")));
        }
        let herm = hermiticity_defect(&entries);
        if herm > STRUCTURE_TOL {
            return Err(Error::Validation(format!(
                "overlap matrix is not Hermitian (defect {herm:e})"
            )));
        }
        for j in 0..n {
            if (entries[(j, j)] - Complex64::new(1.0, 0.0)).norm() > STRUCTURE_TOL {
                return Err(Error::Validation(format!("diagonal entry {j} is not 1")));
            }
        }
        if entries.iter().any(|z| z.norm() > 1.0 + STRUCTURE_TOL) {
            return Err(Error::Validation("overlap magnitude exceeds 1".into()));
        }
        Ok(Self { entries })
    }

    /// Builds an `n`-photon overlap matrix from its off-diagonal pairs;
    /// `(i, j, z)` sets `I_{i,j} = z` and `I_{j,i} = z*`. Unlisted pairs are 0.
    pub fn from_pairs(n: usize, pairs: &[(usize, usize, Complex64)]) -> Result<Self> {
        let mut m = CMatrix::identity(n, n);
        for &(i, j, z) in pairs {
            if i >= n || j >= n || i == j {
                return Err(Error::Argument(format!("invalid overlap pair ({i}, {j})")));
            }
            m[(i, j)] = z;
            m[(j, i)] = z.conj();
        }
        Self::new(m)
    }

    /// Every pair fully overlapping (indistinguishable photons).
    pub fn indistinguishable(n: usize) -> Result<Self> {
        Self::new(CMatrix::from_element(n, n, Complex64::new(1.0, 0.0)))
    }

    /// Orthogonal internal states (distinguishable photons).
    pub fn distinguishable(n: usize) -> Result<Self> {
        Self::new(CMatrix::identity(n, n))
    }

    pub fn n(&self) -> usize {
        self.entries.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.entries[(i, j)]
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.entries
    }

    pub fn min_eigenvalue(&self) -> f64 {
        hermitian_eigen(&self.entries).0[0]
    }

    /// Whether this is the Gram matrix of some set of unit vectors.
    pub fn is_physical(&self) -> bool {
        self.min_eigenvalue() >= -1e-12
    }

    /// Overlaps after relabeling photon `i` as `relabel(i)`.
    pub fn relabeled(&self, relabel: &Permutation) -> Result<Self> {
        let n = self.n();
        Self::new(CMatrix::from_fn(n, n, |i, j| {
            self.entries[(relabel.apply(i), relabel.apply(j))]
        }))
    }
}

impl Serialize for OverlapMatrix {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let rows: Vec<Vec<Complex64>> = self.entries.row_iter().map(|r| r.iter().copied().collect()).collect();
        OverlapsJson { overlaps: rows }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for OverlapMatrix {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let json = OverlapsJson::deserialize(d)?;
        let n = json.overlaps.len();
        if json.overlaps.iter().any(|r| r.len() != n) {
            return Err(serde::de::Error::custom("overlap matrix must be square"));
        }
        let m = CMatrix::from_fn(n, n, |i, j| json.overlaps[i][j]);
        OverlapMatrix::new(m).map_err(serde::de::Error::custom)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct OverlapsJson {
    overlaps: Vec<Vec<Complex64>>,
}

/// The first row `ρ_{id;σ}` of a split-state density matrix.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SplitStateDensity {
    n: usize,
    first_row: Vec<Complex64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct DensityJson {
    n: usize,
    first_row: Vec<Complex64>,
}

impl<'de> Deserialize<'de> for SplitStateDensity {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let json = DensityJson::deserialize(d)?;
        SplitStateDensity::new(json.n, json.first_row).map_err(serde::de::Error::custom)
    }
}

impl SplitStateDensity {
    /// Wraps a first row, checking length, Hermitian pairing
    /// `ρ_{id;σ⁻¹} = ρ_{id;σ}*` and realness of involution entries.
    pub fn new(n: usize, first_row: Vec<Complex64>) -> Result<Self> {
        let perms = permutations_lex(n)?;
        if first_row.len() != perms.len() {
            return Err(Error::Argument(format!(
                "first row has {} entries, expected {}",
                first_row.len(),
                perms.len()
            )));
        }
        let state = Self { n, first_row };
        let residual = state.pairing_residual(&perms);
        if residual > STRUCTURE_TOL {
            return Err(Error::Validation(format!(
                "first row violates Hermitian pairing by {residual:e}"
            )));
        }
        Ok(state)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn first_row(&self) -> &[Complex64] {
        &self.first_row
    }

    pub fn element(&self, sigma: &Permutation) -> Complex64 {
        self.first_row[sigma.lex_rank()]
    }

    fn pairing_residual(&self, perms: &[Permutation]) -> f64 {
        perms
            .iter()
            .enumerate()
            .map(|(i, p)| (self.first_row[p.invert().lex_rank()] - self.first_row[i].conj()).norm())
            .fold(0.0, f64::max)
    }

    /// `Tr` of the support block, i.e. `N! · ρ_{id;id}`.
    pub fn trace(&self) -> f64 {
        factorial(self.n) as f64 * self.first_row[0].re
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            n: self.n,
            first_row: self.first_row.iter().map(|z| z * factor).collect(),
        }
    }
}

/// Which density element a slot of the free vector holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SlotKind {
    /// Real element of a self-inverse permutation.
    Involution,
    /// Real part of the pair representative.
    PairRe,
    /// Imaginary part of the pair representative.
    PairIm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FreeSlot {
    pub kind: SlotKind,
    /// Lex index of the permutation whose element is stored.
    pub perm: usize,
    /// Lex index of its inverse (equal to `perm` for involutions).
    pub partner: usize,
}

/// Slot layout of the free vector: walk permutations lexicographically, skip
/// those whose inverse came earlier, emit one slot for an involution and two
/// (Re then Im) for a pair representative.
pub fn free_layout(n: usize) -> Result<Vec<FreeSlot>> {
    let perms = permutations_lex(n)?;
    let mut slots = Vec::with_capacity(perms.len());
    for (i, p) in perms.iter().enumerate() {
        let j = p.invert().lex_rank();
        if j == i {
            slots.push(FreeSlot {
                kind: SlotKind::Involution,
                perm: i,
                partner: i,
            });
        } else if i < j {
            slots.push(FreeSlot {
                kind: SlotKind::PairRe,
                perm: i,
                partner: j,
            });
            slots.push(FreeSlot {
                kind: SlotKind::PairIm,
                perm: i,
                partner: j,
            });
        }
    }
    Ok(slots)
}

/// `N!` real parameters fully describing a split state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FreeVector(pub Vec<f64>);

impl FreeVector {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

pub fn to_free_vector(rho: &SplitStateDensity) -> FreeVector {
    let layout = free_layout(rho.n).expect("state size already validated");
    FreeVector(
        layout
            .iter()
            .map(|s| match s.kind {
                SlotKind::Involution | SlotKind::PairRe => rho.first_row[s.perm].re,
                SlotKind::PairIm => rho.first_row[s.perm].im,
            })
            .collect(),
    )
}

pub fn from_free_vector(v: &FreeVector, n: usize) -> Result<SplitStateDensity> {
    let layout = free_layout(n)?;
    if v.len() != layout.len() {
        return Err(Error::Argument(format!(
            "free vector has {} entries, expected {}",
            v.len(),
            layout.len()
        )));
    }
    let mut row = vec![Complex64::new(0.0, 0.0); layout.len()];
    for (s, &x) in layout.iter().zip(&v.0) {
        match s.kind {
            SlotKind::Involution => row[s.perm] = Complex64::new(x, 0.0),
            SlotKind::PairRe => {
                row[s.perm].re = x;
                row[s.partner].re = x;
            }
            SlotKind::PairIm => {
                row[s.perm].im = x;
                row[s.partner].im = -x;
            }
        }
    }
    Ok(SplitStateDensity { n, first_row: row })
}

/// `ρ_{id;σ} = (1/N!) ∏_k I_{k,σ(k)}` for photons with uncorrelated spectra.
///
/// Non-PSD overlaps are accepted (the state may then be unphysical) and a
/// warning is logged.
pub fn density_from_overlaps(overlaps: &OverlapMatrix) -> Result<SplitStateDensity> {
    let n = overlaps.n();
    if !overlaps.is_physical() {
        log::warn!("overlap matrix is not positive semidefinite; the state is unphysical");
    }
    let norm = 1.0 / factorial(n) as f64;
    let first_row = permutations_lex(n)?
        .iter()
        .map(|s| (0..n).map(|k| overlaps.get(k, s.apply(k))).product::<Complex64>() * norm)
        .collect();
    Ok(SplitStateDensity { n, first_row })
}

/// The `N! × N!` block holding every nonzero element of the reduced matrix.
///
/// Rows and columns follow the lexicographic permutation order; entry
/// `(π, τ)` is `ρ_{π;τ} = ρ_{id; τ∘π⁻¹}` by simultaneous relabeling.
pub fn support_block(rho: &SplitStateDensity) -> CMatrix {
    let perms = permutations_lex(rho.n).expect("state size already validated");
    let inverses: Vec<Permutation> = perms.iter().map(Permutation::invert).collect();
    let d = perms.len();
    CMatrix::from_fn(d, d, |r, c| rho.first_row[perms[c].compose(&inverses[r]).lex_rank()])
}

/// Rebuilds a state from a support block by reading its first row.
pub(crate) fn from_support_block(n: usize, block: &CMatrix) -> SplitStateDensity {
    SplitStateDensity {
        n,
        first_row: block.row(0).iter().copied().collect(),
    }
}

/// Three-photon collective phase `arg ρ_{012;120}`.
pub fn collective_phase(rho: &SplitStateDensity) -> Result<f64> {
    if rho.n != 3 {
        return Err(Error::Unsupported(format!(
            "collective phase is defined for 3 photons, not {}",
            rho.n
        )));
    }
    let cyclic = rho.first_row[Permutation::new(vec![1, 2, 0])?.lex_rank()];
    if cyclic.norm() < 1e-300 {
        return Err(Error::UndefinedPhase);
    }
    Ok(cyclic.arg())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalDiagnostics {
    /// `max_σ |ρ_{id;σ⁻¹} − ρ_{id;σ}*|`
    pub pairing_residual: f64,
    /// `|Tr − 1|` of the support block.
    pub trace_deviation: f64,
    pub min_eigenvalue: f64,
}

impl PhysicalDiagnostics {
    pub fn is_physical(&self, tol: f64) -> bool {
        self.pairing_residual <= tol && self.trace_deviation <= tol && self.min_eigenvalue >= -tol
    }
}

pub fn validate_physical(rho: &SplitStateDensity) -> PhysicalDiagnostics {
    let perms = permutations_lex(rho.n).expect("state size already validated");
    let block = support_block(rho);
    PhysicalDiagnostics {
        pairing_residual: rho.pairing_residual(&perms),
        trace_deviation: (rho.trace() - 1.0).abs(),
        min_eigenvalue: hermitian_eigen(&block).0[0],
    }
}

/// Overlaps of the three-photon example state used throughout the docs and
/// tests: `⟨φ0|φ1⟩ = 0.7 e^{-iπ/3}`, `⟨φ1|φ2⟩ = 0.65`, `⟨φ2|φ0⟩ = 0.6`.
pub fn example_three_photon_overlaps() -> OverlapMatrix {
    use std::f64::consts::PI;
    OverlapMatrix::from_pairs(
        3,
        &[
            (0, 1, Complex64::from_polar(0.7, -PI / 3.0)),
            (1, 2, Complex64::new(0.65, 0.0)),
            (2, 0, Complex64::new(0.6, 0.0)),
        ],
    )
    .expect("example overlaps are valid")
}
