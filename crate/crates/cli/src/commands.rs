use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{json, Value};
use splitstate::analysis::{noise_study, tolerance_study, NoiseStudyConfig, ToleranceStudyConfig};
use splitstate::combinatorics::{free_parameter_counts, min_output_ports};
use splitstate::optimize::{length_grid, length_sweep, optimize_phases, DesignProblem};
use splitstate::report;
use splitstate::states::{
    collective_phase, support_block, to_free_vector, validate_physical, FreeVector, OverlapMatrix, PhysicalDiagnostics,
    SplitStateDensity,
};
use splitstate::tomography::{
    condition_number, fidelity, predict_correlations, project_physical, reconstruct, CorrelationVector,
    MeasurementMatrix, MeasurementMetadata,
};
use splitstate::Complex64;

use crate::config::{NoiseJob, ReconstructJob, SimulateJob, StateInput, SweepJob};
use crate::error::CliError;
use crate::output::{Manifest, OutputDir};

/// Raw bytes and parsed JSON of a config file.
pub struct Loaded {
    pub path: std::path::PathBuf,
    pub bytes: Vec<u8>,
    pub value: Value,
}

pub fn load(path: &Path) -> Result<Loaded, CliError> {
    let bytes = std::fs::read(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let value: Value = serde_json::from_slice(&bytes).map_err(|e| CliError::Schema(e.to_string()))?;
    Ok(Loaded {
        path: path.to_path_buf(),
        bytes,
        value,
    })
}

fn parse<T: DeserializeOwned>(loaded: &Loaded) -> Result<T, CliError> {
    serde_json::from_value(loaded.value.clone()).map_err(|e| CliError::Schema(e.to_string()))
}

fn manifest(command: &'static str, loaded: &Loaded, seed: Option<u64>) -> Manifest {
    Manifest::new(command, &loaded.bytes, loaded.value.clone(), seed)
}

pub fn params(photons: usize) -> Result<String, CliError> {
    let c = free_parameter_counts(photons).map_err(|e| CliError::Schema(e.to_string()))?;
    let m = min_output_ports(photons).map_err(|e| CliError::Schema(e.to_string()))?;
    // written by hand: counts beyond 20 photons overflow serde_json's u64 numbers
    Ok(format!(
        r#"{{"total":{},"real":{},"imag":{},"min_output_ports":{m}}}"#,
        c.total, c.real, c.imag
    ))
}

#[derive(Serialize)]
struct StateReport<'a> {
    density: &'a SplitStateDensity,
    free_vector: FreeVector,
    #[serde(skip_serializing_if = "Option::is_none")]
    collective_phase: Option<f64>,
    diagnostics: PhysicalDiagnostics,
    support_block: Vec<Vec<Complex64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    overlaps: Option<&'a OverlapMatrix>,
}

impl<'a> StateReport<'a> {
    fn new(density: &'a SplitStateDensity, overlaps: Option<&'a OverlapMatrix>) -> Self {
        let block = support_block(density);
        Self {
            density,
            free_vector: to_free_vector(density),
            collective_phase: collective_phase(density).ok(),
            diagnostics: validate_physical(density),
            support_block: block.row_iter().map(|r| r.iter().copied().collect()).collect(),
            overlaps,
        }
    }
}

#[derive(Serialize)]
struct MeasurementReport {
    metadata: MeasurementMetadata,
    condition_number: f64,
    detector_sets: usize,
}

pub fn simulate(loaded: &Loaded, out: &Path) -> Result<Value, CliError> {
    let job: SimulateJob = parse(loaded)?;
    let density = job.state.density()?;
    if density.n() != job.circuit.photons() {
        return Err(CliError::Schema(format!(
            "{}-photon state for a circuit with {} input ports",
            density.n(),
            job.circuit.photons()
        )));
    }
    let t = MeasurementMatrix::for_circuit(&job.circuit)?;
    let gamma = predict_correlations(&t, &to_free_vector(&density))?;
    let cond = condition_number(&t);

    let mut dir = OutputDir::create(out)?;
    dir.write_with("correlations.csv", |w| report::write_correlations_csv(w, &t, &gamma))?;
    dir.write_with("measurement.csv", |w| report::write_measurement_csv(w, &t))?;
    dir.write_json("state.json", &StateReport::new(&density, job.state.overlaps()))?;
    dir.write_json(
        "measurement.json",
        &MeasurementReport {
            metadata: t.metadata(),
            condition_number: cond,
            detector_sets: t.detector_sets().len(),
        },
    )?;
    let files = dir.finish(manifest("simulate", loaded, None))?;
    Ok(json!({
        "command": "simulate",
        "condition_number": cond,
        "total_probability": gamma.total(),
        "outputs": files,
    }))
}

pub fn design(loaded: &Loaded, out: &Path, seed: Option<u64>) -> Result<Value, CliError> {
    let mut problem: DesignProblem = parse(loaded)?;
    if let Some(s) = seed {
        problem.seed = s;
    }
    problem.validate()?;
    let result = optimize_phases(&problem)?;
    let circuit = result.circuit(&problem)?;

    let mut dir = OutputDir::create(out)?;
    dir.write_json("design.json", &json!({ "problem": problem, "result": result }))?;
    dir.write_json("circuit.json", &circuit)?;
    dir.write_with("starts.csv", |w| {
        let mut csv = csv::Writer::from_writer(w);
        csv.write_record([
            "start",
            "initial_condition_number",
            "final_condition_number",
            "iterations",
            "evaluations",
            "converged",
        ])?;
        for h in &result.history {
            csv.write_record([
                h.start.to_string(),
                report::sig12(h.initial_condition_number),
                report::sig12(h.final_condition_number),
                h.iterations.to_string(),
                h.evaluations.to_string(),
                h.converged.to_string(),
            ])?;
        }
        csv.flush()?;
        Ok(())
    })?;
    let files = dir.finish(manifest("design", loaded, Some(problem.seed)))?;
    Ok(json!({
        "command": "design",
        "best_condition_number": result.best_condition_number,
        "best_phases": result.best_phases,
        "converged": result.converged,
        "outputs": files,
    }))
}

pub fn sweep(loaded: &Loaded, out: &Path, seed: Option<u64>) -> Result<Value, CliError> {
    let job: SweepJob = parse(loaded)?;
    let seed = seed.unwrap_or(job.seed);
    let grid = length_grid(job.lengths.start, job.lengths.stop, job.lengths.step)?;
    let problem = DesignProblem {
        m: job.m,
        n: job.n,
        input_ports: job.input_ports,
        sections: job.sections,
        total_length: grid[0],
        starts: job.starts,
        seed,
        optimize_lengths: job.optimize_lengths,
        restarts: job.restarts,
    };
    problem.validate()?;
    let points = length_sweep(&problem, &grid)?;
    let best = points
        .iter()
        .filter(|p| p.result.is_some())
        .min_by(|a, b| a.condition_number().total_cmp(&b.condition_number()));
    let summary = best.map(|p| json!({"length": p.length, "condition_number": p.condition_number()}));

    let mut dir = OutputDir::create(out)?;
    dir.write_with("sweep.csv", |w| report::write_sweep_csv(w, &points))?;
    dir.write_json("sweep.json", &points)?;
    let files = dir.finish(manifest("sweep", loaded, Some(seed)))?;
    Ok(json!({
        "command": "sweep",
        "points": points.len(),
        "failed_points": points.iter().filter(|p| p.result.is_none()).count(),
        "best": summary,
        "outputs": files,
    }))
}

fn read_correlations(path: &Path, t: &MeasurementMatrix) -> Result<CorrelationVector, CliError> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let mut values = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| CliError::Schema(format!("{}: {e}", path.display())))?;
        let (Some(label), Some(p)) = (record.get(0), record.get(1)) else {
            return Err(CliError::Schema(format!(
                "{}: row {} needs two columns",
                path.display(),
                i + 1
            )));
        };
        let set: Vec<usize> = label
            .split('-')
            .map(str::parse)
            .collect::<Result<_, _>>()
            .map_err(|_| CliError::Schema(format!("bad detector set '{label}'")))?;
        if t.detector_sets().get(i) != Some(&set) {
            return Err(CliError::Schema(format!(
                "row {} is detector set '{label}', out of order for this circuit",
                i + 1
            )));
        }
        values.push(
            p.parse::<f64>()
                .map_err(|_| CliError::Schema(format!("bad probability '{p}'")))?,
        );
    }
    Ok(CorrelationVector(values))
}

pub fn reconstruct_cmd(loaded: &Loaded, out: &Path) -> Result<Value, CliError> {
    let job: ReconstructJob = parse(loaded)?;
    let t = MeasurementMatrix::for_circuit(&job.circuit)?;
    let gamma = match (&job.correlations, &job.correlations_csv) {
        (Some(v), None) => CorrelationVector(v.clone()),
        (None, Some(p)) => {
            let base = loaded.path.parent().unwrap_or(Path::new("."));
            read_correlations(&base.join(p), &t)?
        }
        _ => {
            return Err(CliError::Schema(
                "give exactly one of 'correlations' and 'correlations_csv'".into(),
            ))
        }
    };
    if gamma.len() != t.detector_sets().len() {
        return Err(CliError::Schema(format!(
            "{} correlations for {} detector sets",
            gamma.len(),
            t.detector_sets().len()
        )));
    }
    let rec = reconstruct(&t, &gamma, job.normalize)?;
    let raw = splitstate::states::from_free_vector(&rec.free, t.n())?;
    let physical = project_physical(&raw)?;
    let reference = job.reference.as_ref().map(StateInput::density).transpose()?;
    let fid = match &reference {
        Some(r) => Some(fidelity(&project_physical(r)?, &physical)?),
        None => None,
    };

    let mut dir = OutputDir::create(out)?;
    dir.write_json(
        "reconstruction.json",
        &json!({
            "condition_number": condition_number(&t),
            "rank": rec.rank,
            "rank_deficient": rec.rank_deficient,
            "free_vector": rec.free,
            "raw": StateReport::new(&raw, None),
            "physical": StateReport::new(&physical, None),
            "fidelity": fid,
        }),
    )?;
    let files = dir.finish(manifest("reconstruct", loaded, None))?;
    Ok(json!({
        "command": "reconstruct",
        "rank_deficient": rec.rank_deficient,
        "raw_min_eigenvalue": validate_physical(&raw).min_eigenvalue,
        "fidelity": fid,
        "outputs": files,
    }))
}

pub fn noise(loaded: &Loaded, out: &Path, seed: Option<u64>) -> Result<Value, CliError> {
    let job: NoiseJob = parse(loaded)?;
    let cfg = NoiseStudyConfig {
        design: job.design,
        true_state: job.state.density()?,
        relative_sigma: job.relative_sigma,
        trials: job.trials,
        seed: seed.unwrap_or(job.seed),
        noise_model: job.noise_model,
    };
    let summary = noise_study(&cfg)?;

    let mut dir = OutputDir::create(out)?;
    dir.write_with("trials.csv", |w| report::write_trials_csv(w, "fidelity", &summary))?;
    dir.write_with("summary.csv", |w| report::write_summary_csv(w, &summary))?;
    dir.write_with("histogram.csv", |w| report::write_histogram_csv(w, &summary))?;
    dir.write_json("summary.json", &summary)?;
    let files = dir.finish(manifest("noise", loaded, Some(cfg.seed)))?;
    Ok(json!({
        "command": "noise",
        "trials": summary.trials,
        "mean": summary.mean,
        "min": summary.min,
        "max": summary.max,
        "std_dev": summary.std_dev,
        "outputs": files,
    }))
}

pub fn tolerance(loaded: &Loaded, out: &Path, seed: Option<u64>) -> Result<Value, CliError> {
    let mut cfg: ToleranceStudyConfig = parse(loaded)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    let report = tolerance_study(&cfg)?;

    let mut dir = OutputDir::create(out)?;
    dir.write_with("trials.csv", |w| report::write_tolerance_trials_csv(w, &report))?;
    dir.write_with("summary.csv", |w| report::write_tolerance_summary_csv(w, &report))?;
    dir.write_json("report.json", &report)?;
    let files = dir.finish(manifest("tolerance", loaded, Some(cfg.seed)))?;
    let levels: Vec<Value> = report
        .levels
        .iter()
        .map(|l| json!({"magnitude": l.magnitude, "mean": l.summary.mean, "max": l.summary.max}))
        .collect();
    Ok(json!({
        "command": "tolerance",
        "unperturbed_condition_number": report.unperturbed_condition_number,
        "levels": levels,
        "outputs": files,
    }))
}
