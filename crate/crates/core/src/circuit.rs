//! Segmented coupled-waveguide arrays.
//!
//! `M` identical waveguides with nearest-neighbour coupling `κ` are cut into
//! `S` sections; between consecutive sections a layer of local phase shifts is
//! applied. The one-photon transfer matrix is
//! `U = W_S B_{S-1} W_{S-1} ⋯ B_1 W_1` with `W_j = exp(i C L_j)` and
//! `B_j = diag(e^{iφ_{k,j}})`. Lengths are in units of `1/κ`.

use std::f64::consts::TAU;

use nalgebra::DVector;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{symmetric_eigen, unitarity_defect, CMatrix, RMatrix};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawCircuitSpec")]
pub struct CircuitSpec {
    pub m: usize,
    pub kappa: f64,
    pub section_lengths: Vec<f64>,
    pub phase_layers: Vec<Vec<f64>>,
    pub input_ports: Vec<usize>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCircuitSpec {
    m: usize,
    #[serde(default = "unit_kappa")]
    kappa: f64,
    section_lengths: Vec<f64>,
    #[serde(default)]
    phase_layers: Vec<Vec<f64>>,
    input_ports: Vec<usize>,
}

fn unit_kappa() -> f64 {
    1.0
}

impl TryFrom<RawCircuitSpec> for CircuitSpec {
    type Error = Error;

    fn try_from(r: RawCircuitSpec) -> Result<Self> {
        CircuitSpec::new(r.m, r.kappa, r.section_lengths, r.phase_layers, r.input_ports)
    }
}

pub fn fold_phase(phi: f64) -> f64 {
    let f = phi.rem_euclid(TAU);
    // rem_euclid can round up to exactly TAU
    if f >= TAU {
        0.0
    } else {
        f
    }
}

impl CircuitSpec {
    /// Validates the geometry and folds every phase into `[0, 2π)`.
    pub fn new(
        m: usize,
        kappa: f64,
        section_lengths: Vec<f64>,
        phase_layers: Vec<Vec<f64>>,
        input_ports: Vec<usize>,
    ) -> Result<Self> {
        if m == 0 {
            return Err(Error::Argument("circuit needs at least one waveguide".into()));
        }
        if !(kappa > 0.0 && kappa.is_finite()) {
            return Err(Error::Argument(format!("coupling must be positive, got {kappa}")));
        }
        if section_lengths.is_empty() {
            return Err(Error::Argument("circuit needs at least one section".into()));
        }
        if section_lengths.iter().any(|l| !(*l >= 0.0 && l.is_finite())) {
            return Err(Error::Argument(
                "section lengths must be finite and non-negative".into(),
            ));
        }
        if phase_layers.len() + 1 != section_lengths.len() {
            return Err(Error::Argument(format!(
                "{} sections need {} phase layers, got {}",
                section_lengths.len(),
                section_lengths.len() - 1,
                phase_layers.len()
            )));
        }
        if let Some(layer) = phase_layers.iter().find(|l| l.len() != m) {
            return Err(Error::Argument(format!(
                "phase layer has {} entries, expected {m}",
                layer.len()
            )));
        }
        if phase_layers.iter().flatten().any(|p| !p.is_finite()) {
            return Err(Error::Argument("phases must be finite".into()));
        }
        check_ports(m, &input_ports)?;
        if input_ports.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Argument("input ports must be strictly increasing".into()));
        }
        let phase_layers = phase_layers
            .into_iter()
            .map(|l| l.into_iter().map(fold_phase).collect())
            .collect();
        Ok(Self {
            m,
            kappa,
            section_lengths,
            phase_layers,
            input_ports,
        })
    }

    /// `sections` equal sections of total length `total_length`, unit coupling.
    pub fn uniform(
        m: usize,
        total_length: f64,
        sections: usize,
        phase_layers: Vec<Vec<f64>>,
        input_ports: Vec<usize>,
    ) -> Result<Self> {
        if sections == 0 {
            return Err(Error::Argument("circuit needs at least one section".into()));
        }
        let lengths = vec![total_length / sections as f64; sections];
        Self::new(m, 1.0, lengths, phase_layers, input_ports)
    }

    pub fn sections(&self) -> usize {
        self.section_lengths.len()
    }

    pub fn photons(&self) -> usize {
        self.input_ports.len()
    }

    pub fn total_length(&self) -> f64 {
        self.section_lengths.iter().sum()
    }

    pub fn unitary(&self) -> TransferMatrix {
        circuit_unitary(self)
    }

    /// The `m × N` block of the transfer matrix seen by the photons.
    pub fn input_submatrix(&self) -> CMatrix {
        input_submatrix(&self.unitary(), &self.input_ports).expect("ports validated on construction")
    }
}

fn check_ports(m: usize, ports: &[usize]) -> Result<()> {
    if ports.is_empty() {
        return Err(Error::Argument("at least one input port is required".into()));
    }
    if let Some(p) = ports.iter().find(|&&p| p >= m) {
        return Err(Error::Argument(format!(
            "input port {p} out of range for {m} waveguides"
        )));
    }
    let mut sorted = ports.to_vec();
    sorted.sort_unstable();
    if sorted.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::Argument("input ports must be distinct".into()));
    }
    Ok(())
}

/// Linear-optical one-photon transfer matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct TransferMatrix(CMatrix);

impl TransferMatrix {
    pub fn from_matrix(u: CMatrix) -> Result<Self> {
        if u.nrows() != u.ncols() {
            return Err(Error::Argument("transfer matrix must be square".into()));
        }
        let defect = unitarity_defect(&u);
        if defect > 1e-10 {
            return Err(Error::Validation(format!("matrix is not unitary (defect {defect:e})")));
        }
        Ok(Self(u))
    }

    pub fn identity(m: usize) -> Self {
        Self(CMatrix::identity(m, m))
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn unitarity_defect(&self) -> f64 {
        unitarity_defect(&self.0)
    }

    /// `other · self`: apply `self` first.
    pub fn then(&self, other: &TransferMatrix) -> TransferMatrix {
        TransferMatrix(&other.0 * &self.0)
    }
}

/// Tridiagonal coupling matrix with zero diagonal and `kappa` off-diagonal.
pub fn coupling_matrix(m: usize, kappa: f64) -> RMatrix {
    RMatrix::from_fn(m, m, |i, j| if i.abs_diff(j) == 1 { kappa } else { 0.0 })
}

/// Eigendecomposition of a real symmetric coupling matrix, reusable across
/// section lengths.
#[derive(Debug, Clone)]
pub struct Propagator {
    eigenvalues: Vec<f64>,
    vectors: CMatrix,
}

impl Propagator {
    pub fn new(coupling: &RMatrix) -> Self {
        let (eigenvalues, v) = symmetric_eigen(coupling);
        Self {
            eigenvalues,
            vectors: v.map(|x| Complex64::new(x, 0.0)),
        }
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// `exp(i C L) = V exp(iΛL) Vᵀ`.
    pub fn propagate(&self, length: f64) -> TransferMatrix {
        let phases = DVector::from_iterator(
            self.eigenvalues.len(),
            self.eigenvalues.iter().map(|&l| Complex64::from_polar(1.0, l * length)),
        );
        let scaled = CMatrix::from_fn(self.vectors.nrows(), self.vectors.ncols(), |r, c| {
            self.vectors[(r, c)] * phases[c]
        });
        TransferMatrix(scaled * self.vectors.transpose())
    }
}

pub fn section_propagator(coupling: &RMatrix, length: f64) -> TransferMatrix {
    Propagator::new(coupling).propagate(length)
}

pub fn phase_layer(phases: &[f64]) -> TransferMatrix {
    let d = DVector::from_iterator(phases.len(), phases.iter().map(|&p| Complex64::from_polar(1.0, p)));
    TransferMatrix(CMatrix::from_diagonal(&d))
}

pub fn circuit_unitary(spec: &CircuitSpec) -> TransferMatrix {
    let prop = Propagator::new(&coupling_matrix(spec.m, spec.kappa));
    unitary_from_parts(&prop, &spec.section_lengths, &spec.phase_layers)
}

/// `W_S B_{S-1} ⋯ B_1 W_1` with a precomputed propagator. Callers guarantee
/// `phase_layers.len() + 1 == lengths.len()`.
pub(crate) fn unitary_from_parts(prop: &Propagator, lengths: &[f64], phase_layers: &[Vec<f64>]) -> TransferMatrix {
    let mut u = prop.propagate(lengths[0]).0;
    for (layer, &len) in phase_layers.iter().zip(&lengths[1..]) {
        for (r, &p) in layer.iter().enumerate() {
            let f = Complex64::from_polar(1.0, p);
            u.row_mut(r).iter_mut().for_each(|z| *z *= f);
        }
        u = prop.propagate(len).0 * u;
    }
    TransferMatrix(u)
}

/// Columns of `u` at the given input ports, in port order.
pub fn input_submatrix(u: &TransferMatrix, ports: &[usize]) -> Result<CMatrix> {
    check_ports(u.dim(), ports)?;
    Ok(CMatrix::from_fn(u.dim(), ports.len(), |r, c| u.0[(r, ports[c])]))
}
