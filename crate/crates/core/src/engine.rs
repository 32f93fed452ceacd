//! The sequential optimization loop, with an ask/tell split for external
//! experiment loops.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;

use crate::acquisition::{self, binom_af, ehvi, ehvi_many, joint_af, nested_af, MCConfig};
use crate::benchmarks::{make_problem, Problem};
use crate::error::{check_dim, Error, Result};
use crate::optimizer::{
    maximize_flat_with, maximize_joint_with, maximize_on_grid, perturbed_candidates, sobol_candidates, OptBudget,
};
use crate::pareto::ParetoFront;
use crate::seed::mix_seed;
use crate::surrogate::{fit_gp, GpModel};

/// Stream tags for [`mix_seed`].
mod tag {
    pub const INIT: u64 = 1;
    pub const FIT: u64 = 2;
    pub const MC: u64 = 3;
    pub const OPT: u64 = 4;
    pub const GRID: u64 = 5;
    pub const FALLBACK: u64 = 6;
    pub const LOCAL: u64 = 7;
}

/// Acquisition strategy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Ehvi,
    NmmoNested,
    NmmoJoint,
    Binom,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Ehvi, Method::NmmoNested, Method::NmmoJoint, Method::Binom];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Ehvi => "ehvi",
            Method::NmmoNested => "nmmo_nested",
            Method::NmmoJoint => "nmmo_joint",
            Method::Binom => "binom",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::UnknownMethod(s.to_string()))
    }
}

/// Settings of one seeded run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub problem: String,
    pub method: Method,
    pub horizon_cap: usize,
    /// Number of optimization iterations, not counting the initial design.
    pub iterations: usize,
    pub init_points: usize,
    pub mc_samples: usize,
    pub grid_size: usize,
    pub fit_restarts: usize,
    pub seed: u64,
    /// When false, wall-clock columns are written as zero so traces are
    /// byte-reproducible.
    pub record_timing: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            problem: "zdt3".into(),
            method: Method::Ehvi,
            horizon_cap: 4,
            iterations: 65,
            init_points: 5,
            mc_samples: MCConfig::DEFAULT_SAMPLES,
            grid_size: 512,
            fit_restarts: 8,
            seed: 0,
            record_timing: true,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        make_problem(&self.problem)?;
        if self.iterations == 0 {
            return Err(Error::invalid("iterations must be at least 1"));
        }
        if self.init_points < 2 {
            return Err(Error::invalid("need at least 2 initial points"));
        }
        if self.horizon_cap == 0 {
            return Err(Error::invalid("horizon cap must be at least 1"));
        }
        if self.mc_samples == 0 || self.grid_size == 0 || self.fit_restarts == 0 {
            return Err(Error::invalid(
                "mc samples, grid size and fit restarts must be at least 1",
            ));
        }
        Ok(())
    }
}

/// Planning horizon at iteration `t` (1-based) of `total`.
pub fn horizon(t: usize, total: usize, cap: usize) -> Result<usize> {
    if t == 0 || t > total {
        return Err(Error::invalid(format!("iteration {t} outside 1..={total}")));
    }
    if cap == 0 {
        return Err(Error::invalid("horizon cap must be at least 1"));
    }
    Ok(cap.min(total - t + 1))
}

/// Data, front and fitted models of a run in progress.
#[derive(Debug, Clone)]
pub struct BOState {
    pub problem: Problem,
    /// Evaluated inputs in the unit cube.
    pub inputs: Vec<Vec<f64>>,
    /// Observed outputs, maximization convention.
    pub outputs: Vec<Vec<f64>>,
    pub front: ParetoFront,
    pub models: Vec<GpModel>,
    /// Completed optimization iterations.
    pub iteration: usize,
    pub seed: u64,
}

/// One optimization iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub iteration: usize,
    pub x_unit: Vec<f64>,
    pub x_native: Vec<f64>,
    /// Observed objectives, maximization convention.
    pub y: Vec<f64>,
    /// Hypervolume gained by this observation.
    pub hvi: f64,
    pub hypervolume: f64,
    pub wall_seconds: f64,
}

/// Full trace of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub seed: u64,
    pub initial_hypervolume: f64,
    pub rows: Vec<TraceRow>,
    /// Final Pareto front, maximization convention.
    pub front: Vec<Vec<f64>>,
    /// Unit-cube inputs whose outputs lie on the final front.
    pub pareto_set: Vec<Vec<f64>>,
}

impl RunRecord {
    pub fn final_hypervolume(&self) -> f64 {
        self.rows.last().map_or(self.initial_hypervolume, |r| r.hypervolume)
    }
}

fn fit_models(
    state_inputs: &[Vec<f64>],
    outputs: &[Vec<f64>],
    k: usize,
    restarts: usize,
    seed: u64,
    t: usize,
) -> Result<Vec<GpModel>> {
    (0..k)
        .into_par_iter()
        .map(|obj| {
            let y: Vec<f64> = outputs.iter().map(|o| o[obj]).collect();
            fit_gp(
                state_inputs,
                &y,
                restarts,
                mix_seed(seed, &[t as u64, tag::FIT, obj as u64]),
            )
        })
        .collect()
}

/// The initial Sobol design of a run, in the unit cube.
pub fn initial_design(cfg: &RunConfig) -> Result<Vec<Vec<f64>>> {
    let problem = make_problem(&cfg.problem)?;
    sobol_candidates(problem.d, cfg.init_points, mix_seed(cfg.seed, &[tag::INIT]))
}

/// Evaluates the initial Sobol design and fits the surrogates.
pub fn init_state(cfg: &RunConfig) -> Result<BOState> {
    cfg.validate()?;
    let problem = make_problem(&cfg.problem)?;
    let inputs = initial_design(cfg)?;
    let outputs = inputs
        .iter()
        .map(|x| problem.evaluate(x).map(|y| y.into_inner()))
        .collect::<Result<Vec<_>>>()?;
    state_from_data(cfg, inputs, outputs)
}

/// Builds a state from externally evaluated initial data (unit-cube inputs,
/// maximization-convention outputs).
pub fn state_from_data(cfg: &RunConfig, inputs: Vec<Vec<f64>>, outputs: Vec<Vec<f64>>) -> Result<BOState> {
    cfg.validate()?;
    let problem = make_problem(&cfg.problem)?;
    check_dim(inputs.len(), outputs.len())?;
    if inputs.len() < 2 {
        return Err(Error::invalid("need at least 2 initial observations"));
    }
    for (x, y) in inputs.iter().zip(&outputs) {
        check_dim(problem.d, x.len())?;
        check_dim(problem.k, y.len())?;
        if x.iter().chain(y).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("observation"));
        }
    }
    let front = ParetoFront::from_points(&outputs, problem.reference_max())?;
    let models = fit_models(&inputs, &outputs, problem.k, cfg.fit_restarts, cfg.seed, 0)?;
    Ok(BOState {
        problem,
        inputs,
        outputs,
        front,
        models,
        iteration: 0,
        seed: cfg.seed,
    })
}

/// The next input to evaluate. Does not modify the state.
pub fn suggest(state: &BOState, cfg: &RunConfig) -> Result<Vec<f64>> {
    let t = state.iteration + 1;
    let inner = || -> Result<Vec<f64>> {
        let h = horizon(t, cfg.iterations, cfg.horizon_cap)?;
        select(state, cfg, t, h)
    };
    inner()
        .or_else(|_| fallback(state, cfg, t))
        .map_err(|e| e.at_iteration(t))
}

fn select(state: &BOState, cfg: &RunConfig, t: usize, h: usize) -> Result<Vec<f64>> {
    let seed = state.seed;
    let (models, front, d) = (&state.models, &state.front, state.problem.d);
    let mc = MCConfig::new(cfg.mc_samples, mix_seed(seed, &[t as u64, tag::MC])).with_base(models.len(), h)?;
    let opt_seed = mix_seed(seed, &[t as u64, tag::OPT]);
    let nan_on_err = |r: Result<f64>| r.unwrap_or(f64::NAN);

    if cfg.method == Method::NmmoNested {
        let grid = sobol_candidates(d, cfg.grid_size, mix_seed(seed, &[t as u64, tag::GRID]))?;
        let af = |x: &[f64]| nan_on_err(nested_af(models, x, front, h, &grid, &mc));
        return Ok(maximize_on_grid(&af, &grid)?.0);
    }
    let anchors = pareto_inputs(state);
    let local_seed = mix_seed(seed, &[t as u64, tag::LOCAL]);
    if h == 1 || cfg.method == Method::Ehvi {
        let budget = OptBudget::pointwise(opt_seed);
        let extra = perturbed_candidates(&anchors, 1, budget.n_raw_candidates / 2, local_seed)?;
        let af = |x: &[f64]| nan_on_err(ehvi(models, x, front, &mc));
        return Ok(maximize_flat_with(&af, d, &budget, &extra)?.0);
    }
    let budget = OptBudget::joint(h, opt_seed);
    let mut extra = perturbed_candidates(&anchors, h, budget.n_raw_candidates / 2, local_seed)?;
    match cfg.method {
        Method::NmmoJoint => {
            // Half of the local candidates start from the myopic optimum.
            let point_budget = OptBudget::pointwise(opt_seed);
            let local = perturbed_candidates(&anchors, 1, point_budget.n_raw_candidates / 2, local_seed)?;
            let myopic = |x: &[f64]| nan_on_err(ehvi(models, x, front, &mc));
            let (x_myopic, _) = maximize_flat_with(&myopic, d, &point_budget, &local)?;
            for z in extra.iter_mut().step_by(2) {
                z[..d].copy_from_slice(&x_myopic);
            }
            let af = |x: &[f64], xp: &[Vec<f64>]| nan_on_err(joint_af(models, x, xp, front, &mc));
            Ok(maximize_joint_with(&af, d, h, &budget, &extra)?.x)
        }
        Method::Binom => {
            let af = |x: &[f64], xp: &[Vec<f64>]| {
                let mut xb = Vec::with_capacity(xp.len() + 1);
                xb.push(x.to_vec());
                xb.extend_from_slice(xp);
                nan_on_err(binom_af(models, &xb, front, &mc))
            };
            let opt = maximize_joint_with(&af, d, h, &budget, &extra)?;
            let mut xb = vec![opt.x];
            xb.extend(opt.plan);
            acquisition::binom_pick(models, &xb, front, &mc)
        }
        Method::Ehvi | Method::NmmoNested => unreachable!("handled above"),
    }
}

/// Inputs whose observed outputs lie on the current front.
pub fn pareto_inputs(state: &BOState) -> Vec<Vec<f64>> {
    state
        .inputs
        .iter()
        .zip(&state.outputs)
        .filter(|(_, y)| state.front.points().any(|p| p == y.as_slice()))
        .map(|(x, _)| x.clone())
        .collect()
}

/// Best raw Sobol candidate by EHVI, used when the main selection fails.
fn fallback(state: &BOState, cfg: &RunConfig, t: usize) -> Result<Vec<f64>> {
    let cands = sobol_candidates(state.problem.d, 256, mix_seed(state.seed, &[t as u64, tag::FALLBACK]))?;
    let mc = MCConfig::new(cfg.mc_samples, mix_seed(state.seed, &[t as u64, tag::MC]));
    let scores = ehvi_many(&state.models, &cands, &state.front, &mc)?;
    let (i, _) = acquisition::argmax(&scores)
        .ok_or_else(|| Error::Optimization("fallback EHVI is non-finite everywhere".into()))?;
    Ok(cands[i].clone())
}

/// Appends an observation, updates the front and refits the surrogates.
/// Returns the hypervolume gained.
pub fn observe(state: &mut BOState, cfg: &RunConfig, x: Vec<f64>, y: Vec<f64>) -> Result<f64> {
    check_dim(state.problem.d, x.len())?;
    check_dim(state.problem.k, y.len())?;
    if x.iter().chain(&y).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("observation"));
    }
    let t = state.iteration + 1;
    let gain = state.front.hvi(&y)?;
    state.front.insert(&y)?;
    state.inputs.push(x);
    state.outputs.push(y);
    state.models = fit_models(
        &state.inputs,
        &state.outputs,
        state.problem.k,
        cfg.fit_restarts,
        state.seed,
        t,
    )
    .map_err(|e| e.at_iteration(t))?;
    state.iteration = t;
    Ok(gain)
}

/// Suggests, evaluates the benchmark, and observes.
pub fn step(state: &mut BOState, cfg: &RunConfig) -> Result<TraceRow> {
    let start = Instant::now();
    let t = state.iteration + 1;
    let x = suggest(state, cfg)?;
    let x_native = state.problem.to_native(&x).map_err(|e| e.at_iteration(t))?;
    let y = state.problem.evaluate(&x).map_err(|e| e.at_iteration(t))?.into_inner();
    let hvi = observe(state, cfg, x.clone(), y.clone())?;
    let wall_seconds = if cfg.record_timing {
        start.elapsed().as_secs_f64()
    } else {
        0.0
    };
    Ok(TraceRow {
        iteration: t,
        x_unit: x,
        x_native,
        y,
        hvi,
        hypervolume: state.front.hypervolume(),
        wall_seconds,
    })
}

/// A full seeded run: initial design followed by `cfg.iterations` steps.
pub fn run_bo(cfg: &RunConfig) -> Result<RunRecord> {
    let mut state = init_state(cfg)?;
    let initial_hypervolume = state.front.hypervolume();
    let mut rows = Vec::with_capacity(cfg.iterations);
    for _ in 0..cfg.iterations {
        rows.push(step(&mut state, cfg)?);
    }
    let front = state.front.to_vecs();
    let pareto_set = pareto_inputs(&state);
    Ok(RunRecord {
        seed: cfg.seed,
        initial_hypervolume,
        rows,
        front,
        pareto_set,
    })
}
