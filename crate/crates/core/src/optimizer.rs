//! Derivative-free maximization over the unit cube.
//!
//! Every maximizer scores a scrambled Sobol candidate set, then polishes the
//! best few candidates with a coordinate pattern search whose step halves
//! from 0.1 down to 1e-3. Non-finite objective values count as minus
//! infinity.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::seed::mix_seed;

/// Largest dimension the Sobol generator supports.
pub const MAX_SOBOL_DIM: usize = sobol_burley::NUM_DIMENSIONS as usize;

const BLOCK: usize = 1 << 16;
const INITIAL_STEP: f64 = 0.1;
const MIN_STEP: f64 = 1e-3;

/// Evaluation budget of one maximization.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OptBudget {
    pub n_restarts: usize,
    pub n_raw_candidates: usize,
    pub max_evals_per_restart: usize,
    pub seed: u64,
}

impl OptBudget {
    pub fn pointwise(seed: u64) -> Self {
        OptBudget {
            n_restarts: 8,
            n_raw_candidates: 256,
            max_evals_per_restart: 400,
            seed,
        }
    }

    /// Budget for a concatenated horizon of `h` points. With `h == 1` this is
    /// the pointwise budget.
    pub fn joint(h: usize, seed: u64) -> Self {
        if h <= 1 {
            return Self::pointwise(seed);
        }
        OptBudget {
            n_restarts: 8,
            n_raw_candidates: 512,
            max_evals_per_restart: 400 * h,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_restarts == 0 || self.n_raw_candidates == 0 || self.max_evals_per_restart == 0 {
            return Err(Error::invalid("optimizer budget entries must be at least 1"));
        }
        Ok(())
    }
}

/// `n` scrambled Sobol points in `[0, 1)^d`. Sequences longer than 2^16 are
/// continued with independently scrambled blocks.
pub fn sobol_candidates(d: usize, n: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    if d == 0 {
        return Err(Error::invalid("dimension must be positive"));
    }
    if d > MAX_SOBOL_DIM {
        return Err(Error::invalid(format!("Sobol dimension {d} exceeds {MAX_SOBOL_DIM}")));
    }
    Ok((0..n)
        .map(|i| {
            let block_seed = mix_seed(seed, &[(i / BLOCK) as u64]) as u32;
            let idx = (i % BLOCK) as u32;
            (0..d)
                .map(|j| sobol_burley::sample(idx, j as u32, block_seed) as f64)
                .collect()
        })
        .collect())
}

fn score(v: f64) -> f64 {
    if v.is_finite() {
        v
    } else {
        f64::NEG_INFINITY
    }
}

/// Coordinate pattern search from `x0` (with known value `v0`).
fn pattern_search<F>(af: &F, mut x: Vec<f64>, mut best: f64, max_evals: usize) -> (Vec<f64>, f64)
where
    F: Fn(&[f64]) -> f64 + ?Sized,
{
    let mut step = INITIAL_STEP;
    let mut evals = 0;
    while step >= MIN_STEP && evals < max_evals {
        let mut improved = false;
        'coords: for i in 0..x.len() {
            for dir in [1.0, -1.0] {
                if evals >= max_evals {
                    break 'coords;
                }
                let old = x[i];
                let new = (old + dir * step).clamp(0.0, 1.0);
                if new == old {
                    continue;
                }
                x[i] = new;
                evals += 1;
                let v = score(af(&x));
                if v > best {
                    best = v;
                    improved = true;
                    break;
                }
                x[i] = old;
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    (x, best)
}

/// `n` points of dimension `slots * d`, each slot a Gaussian perturbation of
/// an anchor picked at random. Each coordinate moves with probability one
/// half, with a scale cycling through 0.01, 0.05 and 0.2.
pub fn perturbed_candidates(anchors: &[Vec<f64>], slots: usize, n: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    if anchors.is_empty() || n == 0 {
        return Ok(Vec::new());
    }
    let d = anchors[0].len();
    if d == 0 || anchors.iter().any(|a| a.len() != d) {
        return Err(Error::invalid("anchors must share a positive dimension"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scales = [0.01, 0.05, 0.2];
    Ok((0..n)
        .map(|i| {
            let sd = scales[i % scales.len()];
            let mut z = Vec::with_capacity(slots * d);
            for _ in 0..slots {
                let a = &anchors[rng.random_range(0..anchors.len())];
                let forced = rng.random_range(0..d);
                for (j, &v) in a.iter().enumerate() {
                    let step: f64 = StandardNormal.sample(&mut rng);
                    let moved = j == forced || rng.random_bool(0.5);
                    z.push(if moved { (v + sd * step).clamp(0.0, 1.0) } else { v });
                }
            }
            z
        })
        .collect())
}

/// Maximizes `af` over `[0, 1]^dim`.
pub fn maximize_flat<F>(af: &F, dim: usize, budget: &OptBudget) -> Result<(Vec<f64>, f64)>
where
    F: Fn(&[f64]) -> f64 + Sync + ?Sized,
{
    maximize_flat_with(af, dim, budget, &[])
}

/// As [`maximize_flat`], with `extra` candidates scored alongside the Sobol
/// set.
pub fn maximize_flat_with<F>(af: &F, dim: usize, budget: &OptBudget, extra: &[Vec<f64>]) -> Result<(Vec<f64>, f64)>
where
    F: Fn(&[f64]) -> f64 + Sync + ?Sized,
{
    budget.validate()?;
    if extra.iter().any(|x| x.len() != dim) {
        return Err(Error::invalid("extra candidates have the wrong dimension"));
    }
    let mut raw = sobol_candidates(dim, budget.n_raw_candidates, budget.seed)?;
    raw.extend_from_slice(extra);
    let values: Vec<f64> = raw.par_iter().map(|x| score(af(x))).collect();

    let mut order: Vec<usize> = (0..raw.len()).filter(|&i| values[i].is_finite()).collect();
    if order.is_empty() {
        return Err(Error::Optimization(
            "acquisition is non-finite at every raw candidate".into(),
        ));
    }
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    order.truncate(budget.n_restarts);

    let refined: Vec<(Vec<f64>, f64)> = order
        .par_iter()
        .map(|&i| pattern_search(af, raw[i].clone(), values[i], budget.max_evals_per_restart))
        .collect();

    let mut best = 0;
    for (i, r) in refined.iter().enumerate() {
        if r.1 > refined[best].1 {
            best = i;
        }
    }
    Ok(refined.into_iter().nth(best).expect("at least one restart"))
}

/// Maximizes a single-point acquisition.
pub fn maximize_pointwise<F>(af: &F, d: usize, budget: &OptBudget) -> Result<(Vec<f64>, f64)>
where
    F: Fn(&[f64]) -> f64 + Sync + ?Sized,
{
    maximize_flat(af, d, budget)
}

/// Result of a joint maximization: the point to evaluate now, the planned
/// remainder of the horizon, and the acquisition value.
#[derive(Debug, Clone, PartialEq)]
pub struct JointOptimum {
    pub x: Vec<f64>,
    pub plan: Vec<Vec<f64>>,
    pub value: f64,
}

/// Maximizes `af(x, X')` over the concatenated `h * d` vector, where `X'`
/// holds `h - 1` points.
pub fn maximize_joint<F>(af: &F, d: usize, h: usize, budget: &OptBudget) -> Result<JointOptimum>
where
    F: Fn(&[f64], &[Vec<f64>]) -> f64 + Sync + ?Sized,
{
    maximize_joint_with(af, d, h, budget, &[])
}

/// As [`maximize_joint`], with extra flat `h * d` candidates.
pub fn maximize_joint_with<F>(
    af: &F,
    d: usize,
    h: usize,
    budget: &OptBudget,
    extra: &[Vec<f64>],
) -> Result<JointOptimum>
where
    F: Fn(&[f64], &[Vec<f64>]) -> f64 + Sync + ?Sized,
{
    if h == 0 {
        return Err(Error::invalid("horizon must be at least 1"));
    }
    if d == 0 {
        return Err(Error::invalid("dimension must be positive"));
    }
    let split = |z: &[f64]| -> Vec<Vec<f64>> { z[d..].chunks_exact(d).map(<[f64]>::to_vec).collect() };
    let flat = |z: &[f64]| af(&z[..d], &split(z));
    let (z, value) = maximize_flat_with(&flat, h * d, budget, extra)?;
    Ok(JointOptimum {
        x: z[..d].to_vec(),
        plan: split(&z),
        value,
    })
}

/// Exhaustive maximization over the rows of `grid`; ties go to the lowest row.
pub fn maximize_on_grid<F>(af: &F, grid: &[Vec<f64>]) -> Result<(Vec<f64>, f64)>
where
    F: Fn(&[f64]) -> f64 + Sync + ?Sized,
{
    if grid.is_empty() {
        return Err(Error::invalid("grid is empty"));
    }
    let values: Vec<f64> = grid.par_iter().map(|x| score(af(x))).collect();
    let (i, v) = crate::acquisition::argmax(&values)
        .ok_or_else(|| Error::Optimization("acquisition is non-finite on the whole grid".into()))?;
    Ok((grid[i].clone(), v))
}
