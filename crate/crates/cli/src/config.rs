//! JSON job documents, one per subcommand. Unknown fields are rejected
//! everywhere.

use serde::{Deserialize, Deserializer, Serialize};
use serde_json::Value;
use splitstate::analysis::NoiseModel;
use splitstate::circuit::CircuitSpec;
use splitstate::states::{density_from_overlaps, OverlapMatrix, SplitStateDensity};

/// A state given either by pairwise overlaps (`{"overlaps": ...}`) or by a
/// density first row (`{"n": ..., "first_row": ...}`).
#[derive(Debug, Clone, Serialize)]
#[serde(untagged)]
pub enum StateInput {
    Overlaps(OverlapMatrix),
    Density(SplitStateDensity),
}

impl StateInput {
    pub fn density(&self) -> splitstate::Result<SplitStateDensity> {
        match self {
            StateInput::Overlaps(o) => density_from_overlaps(o),
            StateInput::Density(d) => Ok(d.clone()),
        }
    }

    pub fn overlaps(&self) -> Option<&OverlapMatrix> {
        match self {
            StateInput::Overlaps(o) => Some(o),
            StateInput::Density(_) => None,
        }
    }
}

impl<'de> Deserialize<'de> for StateInput {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        use serde::de::Error;
        let value = Value::deserialize(d)?;
        if value.get("overlaps").is_some() {
            OverlapMatrix::deserialize(value)
                .map(StateInput::Overlaps)
                .map_err(D::Error::custom)
        } else {
            SplitStateDensity::deserialize(value)
                .map(StateInput::Density)
                .map_err(D::Error::custom)
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateJob {
    pub circuit: CircuitSpec,
    pub state: StateInput,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LengthGrid {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepJob {
    pub m: usize,
    #[serde(default)]
    pub n: Option<usize>,
    pub input_ports: Vec<usize>,
    pub sections: usize,
    pub lengths: LengthGrid,
    #[serde(default = "default_starts")]
    pub starts: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub optimize_lengths: bool,
    #[serde(default)]
    pub restarts: usize,
}

fn default_starts() -> usize {
    50
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReconstructJob {
    pub circuit: CircuitSpec,
    /// Inline correlations in detector-set order.
    #[serde(default)]
    pub correlations: Option<Vec<f64>>,
    /// Path to a `detector_set,probability` CSV, relative to the config file.
    #[serde(default)]
    pub correlations_csv: Option<String>,
    #[serde(default = "yes")]
    pub normalize: bool,
    /// Optional true state; its fidelity with the estimate is reported.
    #[serde(default)]
    pub reference: Option<StateInput>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseJob {
    pub design: CircuitSpec,
    pub state: StateInput,
    pub relative_sigma: f64,
    pub trials: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub noise_model: NoiseModel,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn state_forms() {
        let o: StateInput = serde_json::from_str(r#"{"overlaps": [[[1,0],[0.5,0]],[[0.5,0],[1,0]]]}"#).unwrap();
        assert!(o.overlaps().is_some());
        let d: StateInput = serde_json::from_str(r#"{"n": 2, "first_row": [[0.5,0],[0.25,0]]}"#).unwrap();
        assert!((d.density().unwrap().trace() - 1.0).abs() < 1e-15);
        assert!(serde_json::from_str::<StateInput>(r#"{"n": 2, "first_row": [[0.5,0],[0.25,0]], "x": 1}"#).is_err());
    }

    #[test]
    fn unknown_job_fields_rejected() {
        let base = r#"{"circuit": {"m": 2, "section_lengths": [0.5], "input_ports": [0, 1]},
                       "state": {"overlaps": [[[1,0],[1,0]],[[1,0],[1,0]]]}"#;
        assert!(serde_json::from_str::<SimulateJob>(&format!("{base}}}")).is_ok());
        assert!(serde_json::from_str::<SimulateJob>(&format!("{base}, \"extra\": 0}}")).is_err());
    }
}
