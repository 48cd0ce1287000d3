//! Monte Carlo robustness studies: reconstruction fidelity under noisy
//! correlations, and condition-number spread under phase errors.
//!
//! Every trial draws from its own ChaCha stream (`seed`, stream = trial
//! index), so results do not depend on how trials are scheduled. The same
//! draws are reused across noise levels and perturbation magnitudes.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::circuit::CircuitSpec;
use crate::error::{Error, Result};
use crate::par;
use crate::states::{from_free_vector, to_free_vector, SplitStateDensity};
use crate::tomography::{
    condition_number, fidelity, predict_correlations, project_physical, CorrelationVector, MeasurementMatrix,
    Reconstructor,
};

pub const HISTOGRAM_BINS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseModel {
    /// `Γ_k (1 + ε_k)` with `ε_k ~ N(0, σ)`.
    #[default]
    Relative,
    /// `Γ_k + ε_k` with `ε_k ~ N(0, σ)`, σ in probability units.
    Absolute,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PerturbationModel {
    /// Independent draws from `[−δ, δ]`.
    #[default]
    Uniform,
    /// Independent draws from `N(0, δ)`.
    Gaussian,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseStudyConfig {
    pub design: CircuitSpec,
    pub true_state: SplitStateDensity,
    pub relative_sigma: f64,
    pub trials: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub noise_model: NoiseModel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToleranceStudyConfig {
    pub design: CircuitSpec,
    pub perturbation_magnitudes: Vec<f64>,
    pub trials: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub perturbation_model: PerturbationModel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    /// `bins + 1` increasing edges.
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
}

impl Histogram {
    /// Uniform bins over the observed range of `values`.
    pub fn from_values(values: &[f64], bins: usize) -> Self {
        let (min, max) = min_max(values);
        let (lo, hi) = if max > min {
            (min, max)
        } else {
            let pad = 1e-9 * min.abs().max(1.0);
            (min - pad, max + pad)
        };
        let width = (hi - lo) / bins as f64;
        let edges = (0..=bins)
            .map(|i| if i == bins { hi } else { lo + i as f64 * width })
            .collect();
        let mut counts = vec![0; bins];
        for &v in values {
            let b = (((v - lo) / width) as usize).min(bins - 1);
            counts[b] += 1;
        }
        Self { edges, counts }
    }

    pub fn total(&self) -> usize {
        self.counts.iter().sum()
    }

    /// Counts normalized to a probability density.
    pub fn density(&self) -> Vec<f64> {
        let total = self.total() as f64;
        self.counts
            .iter()
            .zip(self.edges.windows(2))
            .map(|(&c, e)| c as f64 / (total * (e[1] - e[0])))
            .collect()
    }
}

fn min_max(values: &[f64]) -> (f64, f64) {
    values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
        (lo.min(v), hi.max(v))
    })
}

/// Per-trial scores and their summary statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudySummary {
    pub trials: usize,
    pub mean: f64,
    pub min: f64,
    pub max: f64,
    pub std_dev: f64,
    pub histogram: Histogram,
    pub values: Vec<f64>,
}

impl StudySummary {
    pub fn from_values(values: Vec<f64>) -> Self {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        let (min, max) = min_max(&values);
        Self {
            trials: values.len(),
            mean,
            min,
            max,
            std_dev: var.sqrt(),
            histogram: Histogram::from_values(&values, HISTOGRAM_BINS),
            values,
        }
    }
}

fn trial_rng(seed: u64, trial: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial as u64);
    rng
}

/// Reconstruction fidelity under noisy correlations.
pub fn noise_study(cfg: &NoiseStudyConfig) -> Result<StudySummary> {
    if !(cfg.relative_sigma >= 0.0) {
        return Err(Error::Argument("noise level must be non-negative".into()));
    }
    if cfg.trials == 0 {
        return Err(Error::Argument("at least one trial is required".into()));
    }
    if cfg.true_state.n() != cfg.design.photons() {
        return Err(Error::Argument(format!(
            "{}-photon state through a {}-port input design",
            cfg.true_state.n(),
            cfg.design.photons()
        )));
    }
    let t = MeasurementMatrix::for_circuit(&cfg.design)?;
    let cond = condition_number(&t);
    if !cond.is_finite() {
        return Err(Error::Precondition("design has an infinite condition number".into()));
    }
    let truth = project_physical(&cfg.true_state)?;
    let gamma = predict_correlations(&t, &to_free_vector(&cfg.true_state))?;
    let rec = Reconstructor::new(&t);
    let n = cfg.true_state.n();

    let scores: Vec<Result<f64>> = par::map_indexed(cfg.trials, |trial| {
        let mut rng = trial_rng(cfg.seed, trial);
        let noisy: Vec<f64> = gamma
            .as_slice()
            .iter()
            .map(|&g| {
                let eps: f64 = rng.sample(StandardNormal);
                match cfg.noise_model {
                    NoiseModel::Relative => g * (1.0 + cfg.relative_sigma * eps),
                    NoiseModel::Absolute => g + cfg.relative_sigma * eps,
                }
            })
            .collect();
        let free = rec.apply(&CorrelationVector(noisy), false)?.free;
        let estimate = project_physical(&from_free_vector(&free, n)?)?;
        fidelity(&truth, &estimate)
    });
    let values = scores.into_iter().collect::<Result<Vec<f64>>>()?;
    Ok(StudySummary::from_values(values))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToleranceLevel {
    pub magnitude: f64,
    pub summary: StudySummary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToleranceReport {
    pub unperturbed_condition_number: f64,
    pub levels: Vec<ToleranceLevel>,
}

/// Condition-number spread when every free phase (all but the first of each
/// layer) is perturbed independently.
pub fn tolerance_study(cfg: &ToleranceStudyConfig) -> Result<ToleranceReport> {
    if cfg.perturbation_magnitudes.iter().any(|d| !(*d >= 0.0)) {
        return Err(Error::Argument("perturbation magnitudes must be non-negative".into()));
    }
    if cfg.trials == 0 {
        return Err(Error::Argument("at least one trial is required".into()));
    }
    let design = &cfg.design;
    let base = condition_number(&MeasurementMatrix::for_circuit(design)?);
    let free_per_layer = design.m - 1;
    let free = design.phase_layers.len() * free_per_layer;

    // unit draws per trial, shared by every magnitude
    let draws: Vec<Vec<f64>> = par::map_indexed(cfg.trials, |trial| {
        let mut rng = trial_rng(cfg.seed, trial);
        (0..free)
            .map(|_| match cfg.perturbation_model {
                PerturbationModel::Uniform => rng.random_range(-1.0..=1.0),
                PerturbationModel::Gaussian => rng.sample(StandardNormal),
            })
            .collect()
    });

    let levels = cfg
        .perturbation_magnitudes
        .iter()
        .map(|&delta| {
            let conds: Vec<Result<f64>> = par::map_indexed(cfg.trials, |trial| {
                let offsets = &draws[trial];
                let layers: Vec<Vec<f64>> = design
                    .phase_layers
                    .iter()
                    .enumerate()
                    .map(|(l, layer)| {
                        layer
                            .iter()
                            .enumerate()
                            .map(|(k, &p)| {
                                if k == 0 {
                                    p
                                } else {
                                    p + delta * offsets[l * free_per_layer + k - 1]
                                }
                            })
                            .collect()
                    })
                    .collect();
                let spec = CircuitSpec::new(
                    design.m,
                    design.kappa,
                    design.section_lengths.clone(),
                    layers,
                    design.input_ports.clone(),
                )?;
                Ok(condition_number(&MeasurementMatrix::for_circuit(&spec)?))
            });
            let values = conds.into_iter().collect::<Result<Vec<f64>>>()?;
            Ok(ToleranceLevel {
                magnitude: delta,
                summary: StudySummary::from_values(values),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ToleranceReport {
        unperturbed_condition_number: base,
        levels,
    })
}
