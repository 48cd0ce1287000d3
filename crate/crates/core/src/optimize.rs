//! Condition-number minimization over hidden-layer phases.
//!
//! The search is a multi-start Nelder–Mead simplex over the free phases at
//! fixed, equal section lengths; the first phase of every layer is pinned to
//! zero since a common phase on a layer does not change any correlation.

use std::f64::consts::{PI, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::circuit::{coupling_matrix, fold_phase, unitary_from_parts, CircuitSpec, Propagator};
use crate::combinatorics::{binomial, factorial, MAX_ENUMERATED};
use crate::error::{Error, Result};
use crate::par;
use crate::tomography::{build_measurement_matrix, condition_number_of};

/// Objective value substituted for a non-finite evaluation.
pub const SENTINEL: f64 = 1e12;

#[derive(Debug, Clone, PartialEq)]
pub struct NelderMeadOptions {
    /// Offset of each initial vertex from `x0` along one axis.
    pub initial_step: f64,
    /// Stop once every vertex lies within this max-norm distance of the best.
    pub x_tol: f64,
    /// Stop once the objective spread across the simplex is below this.
    pub f_tol: f64,
    /// Evaluation budget; `None` means `2000 · dim`.
    pub max_evals: Option<usize>,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        Self {
            initial_step: 0.5,
            x_tol: 1e-8,
            f_tol: 1e-10,
            max_evals: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NelderMeadResult {
    pub x: Vec<f64>,
    pub f: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
}

const REFLECT: f64 = 1.0;
const EXPAND: f64 = 2.0;
const CONTRACT: f64 = 0.5;
const SHRINK: f64 = 0.5;

/// Minimizes `objective` from `x0` with the standard simplex moves.
pub fn nelder_mead<F>(mut objective: F, x0: &[f64], options: &NelderMeadOptions) -> Result<NelderMeadResult>
where
    F: FnMut(&[f64]) -> f64,
{
    let evals = std::cell::Cell::new(0usize);
    let mut eval = |x: &[f64]| {
        evals.set(evals.get() + 1);
        let v = objective(x);
        if v.is_finite() {
            v
        } else {
            SENTINEL
        }
    };
    let dim = x0.len();
    let f0 = eval(x0);
    if f0 >= SENTINEL {
        return Err(Error::Precondition(
            "objective is not finite at the starting point".into(),
        ));
    }
    if dim == 0 {
        return Ok(NelderMeadResult {
            x: Vec::new(),
            f: f0,
            iterations: 0,
            evaluations: 1,
            converged: true,
        });
    }
    let max_evals = options.max_evals.unwrap_or(2000 * dim);

    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(dim + 1);
    simplex.push((x0.to_vec(), f0));
    for i in 0..dim {
        let mut x = x0.to_vec();
        x[i] += options.initial_step;
        let f = eval(&x);
        simplex.push((x, f));
    }

    let mut iterations = 0;
    let mut converged = false;
    loop {
        // stable sort keeps earlier vertices first on ties
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let best = &simplex[0];
        let spread = simplex[dim].1 - best.1;
        let diameter = simplex[1..]
            .iter()
            .flat_map(|(x, _)| x.iter().zip(&best.0).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max);
        if diameter < options.x_tol || spread < options.f_tol {
            converged = true;
            break;
        }
        if evals.get() >= max_evals {
            break;
        }
        iterations += 1;

        let centroid: Vec<f64> = (0..dim)
            .map(|j| simplex[..dim].iter().map(|(x, _)| x[j]).sum::<f64>() / dim as f64)
            .collect();
        let worst = simplex[dim].clone();
        let along = |t: f64| -> Vec<f64> { centroid.iter().zip(&worst.0).map(|(c, w)| c + t * (c - w)).collect() };

        let xr = along(REFLECT);
        let fr = eval(&xr);
        if fr < simplex[0].1 {
            let xe = along(REFLECT * EXPAND);
            let fe = eval(&xe);
            simplex[dim] = if fe < fr { (xe, fe) } else { (xr, fr) };
            continue;
        }
        if fr < simplex[dim - 1].1 {
            simplex[dim] = (xr, fr);
            continue;
        }
        let (xc, fc, accept) = if fr < worst.1 {
            // outside contraction
            let xc = along(REFLECT * CONTRACT);
            let fc = eval(&xc);
            (xc, fc, fc <= fr)
        } else {
            let xc = along(-CONTRACT);
            let fc = eval(&xc);
            (xc, fc, fc < worst.1)
        };
        if accept {
            simplex[dim] = (xc, fc);
            continue;
        }
        let anchor = simplex[0].0.clone();
        for vertex in simplex.iter_mut().skip(1) {
            let x: Vec<f64> = anchor
                .iter()
                .zip(&vertex.0)
                .map(|(a, v)| a + SHRINK * (v - a))
                .collect();
            let f = eval(&x);
            *vertex = (x, f);
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    let (x, f) = simplex.swap_remove(0);
    Ok(NelderMeadResult {
        x,
        f,
        iterations,
        evaluations: evals.get(),
        converged,
    })
}

/// Phase-design job for one circuit geometry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DesignProblem {
    pub m: usize,
    /// Photon count; optional in JSON, must equal the number of input ports.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    pub input_ports: Vec<usize>,
    pub sections: usize,
    pub total_length: f64,
    #[serde(default = "default_starts")]
    pub starts: usize,
    #[serde(default)]
    pub seed: u64,
    /// Also optimize individual section lengths, starting from equal ones.
    #[serde(default)]
    pub optimize_lengths: bool,
    /// Extra Nelder–Mead runs per start, each from the previous minimum with
    /// a fresh simplex, while the relative improvement exceeds 1e-9.
    #[serde(default)]
    pub restarts: usize,
}

fn default_starts() -> usize {
    50
}

impl DesignProblem {
    pub fn new(m: usize, input_ports: Vec<usize>, sections: usize, total_length: f64) -> Self {
        Self {
            m,
            n: None,
            input_ports,
            sections,
            total_length,
            starts: default_starts(),
            seed: 0,
            optimize_lengths: false,
            restarts: 0,
        }
    }

    pub fn with_starts(mut self, starts: usize) -> Self {
        self.starts = starts;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_restarts(mut self, restarts: usize) -> Self {
        self.restarts = restarts;
        self
    }

    pub fn photons(&self) -> usize {
        self.input_ports.len()
    }

    /// `(S − 1)(m − 1)` phases after pinning one per layer.
    pub fn free_phase_count(&self) -> usize {
        self.sections.saturating_sub(1) * self.m.saturating_sub(1)
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(n) = self.n {
            if n != self.input_ports.len() {
                return Err(Error::Argument(format!(
                    "n = {n} but {} input ports",
                    self.input_ports.len()
                )));
            }
        }
        if self.starts == 0 {
            return Err(Error::Argument("at least one start is required".into()));
        }
        // geometry checks are shared with the circuit type
        self.circuit(&vec![vec![0.0; self.m]; self.sections.saturating_sub(1)], None)?;
        let n = self.input_ports.len();
        if n <= MAX_ENUMERATED && binomial(self.m, n) < factorial(n) {
            return Err(Error::DesignInfeasible(format!(
                "{} detector sets cannot resolve {} parameters",
                binomial(self.m, n),
                factorial(n)
            )));
        }
        Ok(())
    }

    /// Circuit with the given full phase layers and optional section lengths.
    pub fn circuit(&self, layers: &[Vec<f64>], lengths: Option<&[f64]>) -> Result<CircuitSpec> {
        if self.sections == 0 {
            return Err(Error::Argument("at least one section is required".into()));
        }
        let lengths = match lengths {
            Some(l) => l.to_vec(),
            None => vec![self.total_length / self.sections as f64; self.sections],
        };
        CircuitSpec::new(self.m, 1.0, lengths, layers.to_vec(), self.input_ports.clone())
    }

    /// Expands free phases into full layers with a leading zero each.
    pub fn layers_from_free(&self, free: &[f64]) -> Vec<Vec<f64>> {
        let k = self.m - 1;
        (0..self.sections - 1)
            .map(|l| {
                std::iter::once(0.0)
                    .chain(free[l * k..(l + 1) * k].iter().copied())
                    .collect()
            })
            .collect()
    }
}

/// Condition number of the measurement matrix for a geometry, reusing one
/// eigendecomposition of the coupling matrix across evaluations.
pub struct DesignObjective {
    problem: DesignProblem,
    propagator: Propagator,
}

impl DesignObjective {
    pub fn new(problem: &DesignProblem) -> Result<Self> {
        problem.validate()?;
        Ok(Self {
            problem: problem.clone(),
            propagator: Propagator::new(&coupling_matrix(problem.m, 1.0)),
        })
    }

    pub fn evaluate_layers(&self, layers: &[Vec<f64>], lengths: &[f64]) -> f64 {
        let u = unitary_from_parts(&self.propagator, lengths, layers);
        let ports = &self.problem.input_ports;
        let ur = crate::linalg::CMatrix::from_fn(self.problem.m, ports.len(), |r, c| u.matrix()[(r, ports[c])]);
        match build_measurement_matrix(&ur, ports.len()) {
            Ok(t) => condition_number_of(t.t_real()),
            Err(_) => f64::INFINITY,
        }
    }

    fn equal_lengths(&self) -> Vec<f64> {
        vec![self.problem.total_length / self.problem.sections as f64; self.problem.sections]
    }

    /// Objective over the search vector: free phases, then (when lengths are
    /// optimized) one entry per section whose magnitude is the length.
    pub fn evaluate(&self, x: &[f64]) -> f64 {
        let k = self.problem.free_phase_count();
        let layers = self.problem.layers_from_free(&x[..k]);
        let lengths: Vec<f64> = if self.problem.optimize_lengths {
            x[k..].iter().map(|l| l.abs()).collect()
        } else {
            self.equal_lengths()
        };
        let v = self.evaluate_layers(&layers, &lengths);
        if v.is_finite() {
            v
        } else {
            SENTINEL
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StartRecord {
    pub start: usize,
    pub initial_condition_number: f64,
    pub final_condition_number: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignResult {
    /// Full phase layers in `[0, 2π)`, first entry of each pinned to 0.
    pub best_phases: Vec<Vec<f64>>,
    pub section_lengths: Vec<f64>,
    pub best_condition_number: f64,
    pub history: Vec<StartRecord>,
    pub iterations: usize,
    pub converged: bool,
}

impl DesignResult {
    pub fn circuit(&self, problem: &DesignProblem) -> Result<CircuitSpec> {
        problem.circuit(&self.best_phases, Some(&self.section_lengths))
    }

    /// Best phases wrapped into `(−π, π]`.
    pub fn centered_phases(&self) -> Vec<Vec<f64>> {
        self.best_phases
            .iter()
            .map(|l| l.iter().map(|&p| if p > PI { p - TAU } else { p }).collect())
            .collect()
    }
}

fn start_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Multi-start Nelder–Mead over the free phases.
pub fn optimize_phases(problem: &DesignProblem) -> Result<DesignResult> {
    let objective = DesignObjective::new(problem)?;
    let k = problem.free_phase_count();
    let options = NelderMeadOptions::default();

    let runs = par::map_indexed(problem.starts, |s| {
        let mut rng = start_rng(problem.seed, s as u64);
        let mut x0: Vec<f64> = (0..k).map(|_| rng.random_range(0.0..TAU)).collect();
        if problem.optimize_lengths {
            x0.extend(objective.equal_lengths());
        }
        let f0 = objective.evaluate(&x0);
        let run = nelder_mead(|x| objective.evaluate(x), &x0, &options).and_then(|mut run| {
            for _ in 0..problem.restarts {
                let next = nelder_mead(|x| objective.evaluate(x), &run.x, &options)?;
                let gain = run.f - next.f;
                let (iterations, evaluations) = (run.iterations + next.iterations, run.evaluations + next.evaluations);
                if next.f < run.f {
                    run = NelderMeadResult {
                        iterations,
                        evaluations,
                        ..next
                    };
                } else {
                    run.iterations = iterations;
                    run.evaluations = evaluations;
                }
                if gain <= 1e-9 * run.f {
                    break;
                }
            }
            Ok(run)
        });
        (s, f0, run)
    });

    struct Candidate {
        phases: Vec<Vec<f64>>,
        lengths: Vec<f64>,
        cond: f64,
        converged: bool,
    }
    let mut history = Vec::with_capacity(runs.len());
    let mut best: Option<Candidate> = None;
    let mut iterations = 0;
    for (s, f0, run) in runs {
        let Ok(run) = run else {
            history.push(StartRecord {
                start: s,
                initial_condition_number: f64::INFINITY,
                final_condition_number: f64::INFINITY,
                iterations: 0,
                evaluations: 1,
                converged: false,
            });
            continue;
        };
        iterations += run.iterations;
        history.push(StartRecord {
            start: s,
            initial_condition_number: f0,
            final_condition_number: run.f,
            iterations: run.iterations,
            evaluations: run.evaluations,
            converged: run.converged,
        });
        if run.f >= SENTINEL {
            continue;
        }
        let phases: Vec<Vec<f64>> = problem
            .layers_from_free(&run.x[..k])
            .into_iter()
            .map(|l| l.into_iter().map(fold_phase).collect())
            .collect();
        let lengths = if problem.optimize_lengths {
            run.x[k..].iter().map(|l| l.abs()).collect()
        } else {
            objective.equal_lengths()
        };
        let cand = Candidate {
            phases,
            lengths,
            cond: run.f,
            converged: run.converged,
        };
        let better = match &best {
            None => true,
            Some(b) => cand.cond < b.cond || (cand.cond == b.cond && lex_less(&cand.phases, &b.phases)),
        };
        if better {
            best = Some(cand);
        }
    }
    let best = best.ok_or_else(|| Error::DesignInfeasible("every start has an infinite condition number".into()))?;
    Ok(DesignResult {
        best_phases: best.phases,
        section_lengths: best.lengths,
        best_condition_number: best.cond,
        history,
        iterations,
        converged: best.converged,
    })
}

fn lex_less(a: &[Vec<f64>], b: &[Vec<f64>]) -> bool {
    a.iter()
        .flatten()
        .zip(b.iter().flatten())
        .find(|(x, y)| x != y)
        .is_some_and(|(x, y)| x < y)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub length: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub result: Option<DesignResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl SweepPoint {
    pub fn condition_number(&self) -> f64 {
        self.result.as_ref().map_or(f64::INFINITY, |r| r.best_condition_number)
    }
}

/// Optimizes every total length in `lengths` independently; failures are
/// recorded per point.
pub fn length_sweep(problem: &DesignProblem, lengths: &[f64]) -> Result<Vec<SweepPoint>> {
    if lengths.is_empty() {
        return Err(Error::Argument("length grid is empty".into()));
    }
    Ok(lengths
        .iter()
        .map(|&length| {
            let p = DesignProblem {
                total_length: length,
                ..problem.clone()
            };
            match optimize_phases(&p) {
                Ok(r) => SweepPoint {
                    length,
                    result: Some(r),
                    error: None,
                },
                Err(e) => SweepPoint {
                    length,
                    result: None,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect())
}

/// Inclusive grid `start, start + step, …, stop`, with points rounded to
/// 1e-12 to avoid accumulated drift.
pub fn length_grid(start: f64, stop: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) || stop < start {
        return Err(Error::Argument("grid needs step > 0 and stop ≥ start".into()));
    }
    let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
    Ok((0..count)
        .map(|i| ((start + i as f64 * step) * 1e12).round() / 1e12)
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn parabola() {
        let r = nelder_mead(|x| (x[0] - 2.0).powi(2), &[0.0], &NelderMeadOptions::default()).unwrap();
        assert_abs_diff_eq!(r.x[0], 2.0, epsilon = 1e-6);
        assert!(r.converged);
    }

    #[test]
    fn rosenbrock() {
        let f = |x: &[f64]| 100.0 * (x[1] - x[0] * x[0]).powi(2) + (1.0 - x[0]).powi(2);
        let opts = NelderMeadOptions {
            f_tol: 1e-14,
            ..Default::default()
        };
        let r = nelder_mead(f, &[-1.2, 1.0], &opts).unwrap();
        assert_abs_diff_eq!(r.x[0], 1.0, epsilon = 1e-4);
        assert_abs_diff_eq!(r.x[1], 1.0, epsilon = 1e-4);
    }

    #[test]
    fn deterministic_trajectory() {
        let f = |x: &[f64]| (x[0] - 1.0).powi(2) + (x[1] + 0.5).powi(4) + x[0].sin();
        let a = nelder_mead(f, &[3.0, 2.0], &NelderMeadOptions::default()).unwrap();
        let b = nelder_mead(f, &[3.0, 2.0], &NelderMeadOptions::default()).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.x[0].to_bits(), b.x[0].to_bits());
    }

    #[test]
    fn non_finite_values_are_penalized() {
        let f = |x: &[f64]| if x[0] < 0.0 { f64::NAN } else { (x[0] - 1.0).powi(2) };
        let r = nelder_mead(f, &[0.2], &NelderMeadOptions::default()).unwrap();
        assert_abs_diff_eq!(r.x[0], 1.0, epsilon = 1e-4);
        assert!(nelder_mead(|_| f64::INFINITY, &[0.0], &NelderMeadOptions::default()).is_err());
    }

    #[test]
    fn evaluation_budget() {
        let opts = NelderMeadOptions {
            max_evals: Some(20),
            x_tol: 0.0,
            f_tol: 0.0,
            ..Default::default()
        };
        let r = nelder_mead(|x| x[0].powi(2) + x[1].powi(2), &[5.0, 5.0], &opts).unwrap();
        assert!(!r.converged);
        assert!(r.evaluations <= 20 + 3);
    }

    #[test]
    fn free_parameter_count_and_layers() {
        let p = DesignProblem::new(5, vec![0, 2, 4], 3, 3.0);
        assert_eq!(p.free_phase_count(), 8);
        let layers = p.layers_from_free(&[1., 2., 3., 4., 5., 6., 7., 8.]);
        assert_eq!(layers, vec![vec![0., 1., 2., 3., 4.], vec![0., 5., 6., 7., 8.]]);
    }

    #[test]
    fn gauge_invariance() {
        let p = DesignProblem::new(5, vec![0, 2, 4], 2, 2.5);
        let obj = DesignObjective::new(&p).unwrap();
        let layer = vec![0.0, 1.083, 1.167, 0.973, 5.509];
        let shifted: Vec<f64> = layer.iter().map(|x| x + 0.9).collect();
        let l = obj.equal_lengths();
        let a = obj.evaluate_layers(&[layer], &l);
        let b = obj.evaluate_layers(&[shifted], &l);
        assert!((a - b).abs() < 1e-10 * a);
    }

    #[test]
    fn no_hidden_layer_has_nothing_to_optimize() {
        let p = DesignProblem::new(3, vec![0, 2], 1, 1.0).with_starts(3);
        let r = optimize_phases(&p).unwrap();
        assert!(r.best_phases.is_empty());
        assert!(r.converged);
        assert!(r.best_condition_number >= 1.0);
    }

    #[test]
    fn infeasible_design() {
        let p = DesignProblem::new(3, vec![0, 2], 1, 0.0).with_starts(2);
        assert!(matches!(optimize_phases(&p), Err(Error::DesignInfeasible(_))));
        let sweep = length_sweep(&p, &[0.0, 1.0]).unwrap();
        assert!(sweep[0].error.is_some());
        assert!(sweep[1].result.is_some());
        assert!(length_sweep(&p, &[]).is_err());
    }

    #[test]
    fn result_never_worse_than_its_starts() {
        let p = DesignProblem::new(3, vec![0, 2], 2, 1.0).with_starts(5).with_seed(11);
        let r = optimize_phases(&p).unwrap();
        for h in &r.history {
            assert!(h.final_condition_number <= h.initial_condition_number);
            assert!(r.best_condition_number <= h.final_condition_number);
        }
        let again = optimize_phases(&p).unwrap();
        assert_eq!(r, again);
    }

    #[test]
    fn joint_length_search() {
        let mut p = DesignProblem::new(3, vec![0, 2], 2, 1.0).with_starts(4);
        p.optimize_lengths = true;
        let r = optimize_phases(&p).unwrap();
        assert_eq!(r.section_lengths.len(), 2);
        assert!(r.best_condition_number < 2.4);
    }

    #[test]
    fn grids() {
        let g = length_grid(0.2, 2.0, 0.05).unwrap();
        assert_eq!(g.len(), 37);
        assert_eq!(g[0], 0.2);
        assert_eq!(g[36], 2.0);
        assert_eq!(g[12], 0.8);
        assert!(length_grid(1.0, 0.0, 0.1).is_err());
    }

    #[test]
    fn problem_json() {
        let json = r#"{"m":3,"input_ports":[0,2],"sections":2,"total_length":1.0}"#;
        let p: DesignProblem = serde_json::from_str(json).unwrap();
        assert_eq!(p.starts, 50);
        assert!(serde_json::from_str::<DesignProblem>(
            r#"{"m":3,"input_ports":[0,2],"sections":2,"total_length":1.0,"bogus":0}"#
        )
        .is_err());
        let bad_n = DesignProblem { n: Some(3), ..p };
        assert!(bad_n.validate().is_err());
    }

    #[test]
    fn restarts_only_improve() {
        let p = DesignProblem::new(5, vec![0, 2, 4], 2, 2.5).with_starts(3).with_seed(4);
        let plain = optimize_phases(&p).unwrap();
        let restarted = optimize_phases(&p.clone().with_restarts(5)).unwrap();
        for (a, b) in plain.history.iter().zip(&restarted.history) {
            assert!(b.final_condition_number <= a.final_condition_number);
            assert!(b.evaluations >= a.evaluations);
        }
    }
}
