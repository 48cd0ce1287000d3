//! WebAssembly bindings for the static page in `www/`.
//!
//! Every export takes and returns JSON strings so the page stays plain
//! JavaScript. The same functions are callable natively for testing.

use serde::{Deserialize, Serialize};
use serde_json::json;
use splitstate::analysis::{noise_study, NoiseStudyConfig};
use splitstate::circuit::CircuitSpec;
use splitstate::optimize::{length_grid, length_sweep, DesignProblem};
use splitstate::states::{collective_phase, density_from_overlaps, to_free_vector, OverlapMatrix};
use splitstate::tomography::{condition_number, predict_correlations, MeasurementMatrix};
use splitstate::Complex64;
use wasm_bindgen::prelude::*;

/// Three photons described by the magnitudes and phases of `I01`, `I12`,
/// `I20`.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThreePhotonOverlaps {
    pub magnitudes: [f64; 3],
    pub phases: [f64; 3],
}

impl ThreePhotonOverlaps {
    fn matrix(&self) -> Result<OverlapMatrix, String> {
        let z = |k: usize| Complex64::from_polar(self.magnitudes[k], self.phases[k]);
        OverlapMatrix::from_pairs(3, &[(0, 1, z(0)), (1, 2, z(1)), (2, 0, z(2))]).map_err(|e| e.to_string())
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateRequest {
    pub circuit: CircuitSpec,
    pub overlaps: ThreePhotonOverlaps,
}

#[derive(Debug, Serialize)]
pub struct SimulateResponse {
    pub labels: Vec<String>,
    pub probabilities: Vec<f64>,
    pub condition_number: Option<f64>,
    pub collective_phase: Option<f64>,
    pub physical: bool,
}

fn label(set: &[usize]) -> String {
    set.iter().map(|d| (d + 1).to_string()).collect::<Vec<_>>().join("")
}

pub fn simulate_json(request: &str) -> Result<String, String> {
    let req: SimulateRequest = serde_json::from_str(request).map_err(|e| e.to_string())?;
    if req.circuit.photons() != 3 {
        return Err("the demo expects three input ports".into());
    }
    let overlaps = req.overlaps.matrix()?;
    let rho = density_from_overlaps(&overlaps).map_err(|e| e.to_string())?;
    let t = MeasurementMatrix::for_circuit(&req.circuit).map_err(|e| e.to_string())?;
    let gamma = predict_correlations(&t, &to_free_vector(&rho)).map_err(|e| e.to_string())?;
    let cond = condition_number(&t);
    let response = SimulateResponse {
        labels: t.detector_sets().iter().map(|s| label(s)).collect(),
        probabilities: gamma.0,
        condition_number: cond.is_finite().then_some(cond),
        collective_phase: collective_phase(&rho).ok(),
        physical: overlaps.is_physical(),
    };
    serde_json::to_string(&response).map_err(|e| e.to_string())
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepRequest {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
    pub starts: usize,
    pub seed: u64,
}

/// Two-photon, three-port, one-hidden-layer design curve.
pub fn sweep_json(request: &str) -> Result<String, String> {
    let req: SweepRequest = serde_json::from_str(request).map_err(|e| e.to_string())?;
    if req.starts == 0 || req.starts > 200 {
        return Err("starts must be between 1 and 200".into());
    }
    let grid = length_grid(req.start, req.stop, req.step).map_err(|e| e.to_string())?;
    if grid.len() > 400 {
        return Err("grid is too fine for the browser".into());
    }
    let problem = DesignProblem::new(3, vec![0, 2], 2, grid[0])
        .with_starts(req.starts)
        .with_seed(req.seed);
    let points = length_sweep(&problem, &grid).map_err(|e| e.to_string())?;
    let rows: Vec<_> = points
        .iter()
        .map(|p| {
            let phases = p.result.as_ref().map(|r| r.centered_phases().concat());
            let cond = p.condition_number();
            json!({"length": p.length, "condition_number": cond.is_finite().then_some(cond), "phases": phases})
        })
        .collect();
    Ok(json!({ "points": rows }).to_string())
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseRequest {
    pub circuit: CircuitSpec,
    pub overlaps: ThreePhotonOverlaps,
    pub sigma: f64,
    pub trials: usize,
    pub seed: u64,
}

pub fn noise_json(request: &str) -> Result<String, String> {
    let req: NoiseRequest = serde_json::from_str(request).map_err(|e| e.to_string())?;
    if req.trials == 0 || req.trials > 20_000 {
        return Err("trials must be between 1 and 20000".into());
    }
    let state = density_from_overlaps(&req.overlaps.matrix()?).map_err(|e| e.to_string())?;
    let summary = noise_study(&NoiseStudyConfig {
        design: req.circuit,
        true_state: state,
        relative_sigma: req.sigma,
        trials: req.trials,
        seed: req.seed,
        noise_model: Default::default(),
    })
    .map_err(|e| e.to_string())?;
    Ok(json!({
        "mean": summary.mean,
        "min": summary.min,
        "max": summary.max,
        "std_dev": summary.std_dev,
        "edges": summary.histogram.edges,
        "counts": summary.histogram.counts,
    })
    .to_string())
}

#[wasm_bindgen]
pub fn simulate(request: &str) -> Result<String, JsError> {
    simulate_json(request).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn sweep(request: &str) -> Result<String, JsError> {
    sweep_json(request).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn noise(request: &str) -> Result<String, JsError> {
    noise_json(request).map_err(|e| JsError::new(&e))
}
