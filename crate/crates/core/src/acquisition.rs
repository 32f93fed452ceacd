//! Monte-Carlo hypervolume-improvement acquisitions and their non-myopic
//! extensions.
//!
//! All estimators draw posterior samples through a fixed set of standard
//! normal base samples, so every acquisition is a deterministic function of
//! its inputs. Batch rows are put into lexicographic order (and exact
//! duplicates removed) before sampling, which makes batch values independent
//! of row order.

use std::borrow::Cow;
use std::cmp::Ordering;
use std::sync::Arc;

use crate::error::{check_dim, Error, Result};
use crate::pareto::ParetoFront;
use crate::surrogate::{fantasize_all, sample_with_base, BaseSamples, GpModel, SampleTensor};

/// Sampling budget of the Monte-Carlo estimators.
#[derive(Debug, Clone)]
pub struct MCConfig {
    pub n_samples: usize,
    pub seed: u64,
    /// Pre-drawn normals. When absent (or too small for the request) they
    /// are drawn from `seed` on every call.
    pub base_samples: Option<Arc<BaseSamples>>,
}

impl MCConfig {
    pub const DEFAULT_SAMPLES: usize = 128;
    pub const ORACLE_SAMPLES: usize = 2048;

    pub fn new(n_samples: usize, seed: u64) -> Self {
        MCConfig {
            n_samples,
            seed,
            base_samples: None,
        }
    }

    /// Materializes base samples for `k` objectives and batches of up to
    /// `slots` points.
    pub fn with_base(mut self, k: usize, slots: usize) -> Result<Self> {
        self.base_samples = Some(Arc::new(BaseSamples::new(k, slots, self.n_samples, self.seed)?));
        Ok(self)
    }

    fn base(&self, k: usize, slots: usize) -> Result<Cow<'_, BaseSamples>> {
        if self.n_samples == 0 {
            return Err(Error::invalid("n_samples must be at least 1"));
        }
        match &self.base_samples {
            Some(b) if b.n_objectives() >= k && b.slots() >= slots && b.n_samples() == self.n_samples => {
                Ok(Cow::Borrowed(b))
            }
            _ => Ok(Cow::Owned(BaseSamples::new(k, slots, self.n_samples, self.seed)?)),
        }
    }
}

impl Default for MCConfig {
    fn default() -> Self {
        MCConfig::new(Self::DEFAULT_SAMPLES, 0)
    }
}

/// Horizon cap and nested-grid size.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LookaheadConfig {
    pub horizon_cap: usize,
    pub grid_size: usize,
}

impl Default for LookaheadConfig {
    fn default() -> Self {
        LookaheadConfig {
            horizon_cap: 4,
            grid_size: 512,
        }
    }
}

impl LookaheadConfig {
    pub fn validate(&self) -> Result<()> {
        if self.horizon_cap == 0 {
            return Err(Error::invalid("horizon cap must be at least 1"));
        }
        if self.grid_size == 0 {
            return Err(Error::invalid("grid size must be at least 1"));
        }
        Ok(())
    }
}

fn check_setup(models: &[GpModel], front: &ParetoFront, xs: &[Vec<f64>]) -> Result<()> {
    if models.is_empty() {
        return Err(Error::invalid("need at least one model"));
    }
    check_dim(front.k(), models.len())?;
    let d = models[0].dim();
    for x in xs {
        check_dim(d, x.len())?;
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("candidate input"));
        }
    }
    Ok(())
}

fn lex(a: &[f64], b: &[f64]) -> Ordering {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or(Ordering::Equal)
}

/// Sorted, duplicate-free copy of a batch.
fn canonical(xb: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut rows = xb.to_vec();
    rows.sort_by(|a, b| lex(a, b));
    rows.dedup_by(|a, b| lex(a, b).is_eq());
    rows
}

/// Mean over samples of the joint hypervolume gain of each sampled batch.
fn mean_batch_gain(t: &SampleTensor, front: &ParetoFront) -> f64 {
    let k = t.k;
    let mut total = 0.0;
    if t.m == 1 {
        for s in 0..t.n {
            total += front.hvi_unchecked(t.sample(s));
        }
    } else {
        let mut scratch = front.clone();
        for s in 0..t.n {
            scratch.clone_from(front);
            let block = t.sample(s);
            for y in block.chunks_exact(k) {
                let gain = scratch.hvi_unchecked(y);
                if gain > 0.0 {
                    total += gain;
                    scratch.insert_unchecked(y);
                }
            }
        }
    }
    total / t.n as f64
}

fn behvi_canonical(models: &[GpModel], rows: &[Vec<f64>], front: &ParetoFront, mc: &MCConfig) -> Result<f64> {
    if rows.is_empty() {
        return Ok(0.0);
    }
    let base = mc.base(models.len(), rows.len())?;
    let t = sample_with_base(models, rows, &base)?;
    Ok(mean_batch_gain(&t, front))
}

/// Expected hypervolume improvement of a single input.
pub fn ehvi(models: &[GpModel], x: &[f64], front: &ParetoFront, mc: &MCConfig) -> Result<f64> {
    let rows = [x.to_vec()];
    check_setup(models, front, &rows)?;
    behvi_canonical(models, &rows, front, mc)
}

/// Expected joint hypervolume improvement of a batch, with correlations
/// between batch members respected within each objective.
pub fn behvi(models: &[GpModel], xb: &[Vec<f64>], front: &ParetoFront, mc: &MCConfig) -> Result<f64> {
    if xb.is_empty() {
        return Err(Error::invalid("batch must contain at least one input"));
    }
    check_setup(models, front, xb)?;
    behvi_canonical(models, &canonical(xb), front, mc)
}

/// Single-point EHVI for many inputs at once, sharing one triangular solve
/// per model. Agrees with [`ehvi`] up to round-off.
pub fn ehvi_many(models: &[GpModel], xs: &[Vec<f64>], front: &ParetoFront, mc: &MCConfig) -> Result<Vec<f64>> {
    check_setup(models, front, xs)?;
    let k = models.len();
    let base = mc.base(k, 1)?;
    let marg: Vec<(Vec<f64>, Vec<f64>)> = models.iter().map(|m| m.marginals(xs)).collect::<Result<_>>()?;
    let n = base.n_samples();
    let mut y = vec![0.0; k];
    let mut out = Vec::with_capacity(xs.len());
    for j in 0..xs.len() {
        let mut total = 0.0;
        for s in 0..n {
            for (obj, (mu, var)) in marg.iter().enumerate() {
                let sd = if var[j] > 0.0 { var[j].sqrt() } else { 0.0 };
                y[obj] = mu[j] + sd * base.column(obj, 0)[s];
            }
            total += front.hvi_unchecked(&y);
        }
        out.push(total / n as f64);
    }
    Ok(out)
}

fn normal_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

fn normal_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z / std::f64::consts::SQRT_2)
}

/// `E[(Y - h)^+]` for `Y ~ N(mu, sd^2)`.
fn rectified_mean(mu: f64, sd: f64, h: f64) -> f64 {
    if h == f64::INFINITY {
        return 0.0;
    }
    if sd <= 0.0 {
        return (mu - h).max(0.0);
    }
    let z = (mu - h) / sd;
    (mu - h) * normal_cdf(z) + sd * normal_pdf(z)
}

/// Closed-form two-objective EHVI under independent Gaussian marginals.
///
/// The region above the reference that the front leaves uncovered is cut
/// into vertical strips at the sorted first coordinates of the front. Within
/// a strip the improvement factorizes into a width term in the first
/// objective and a height term in the second.
pub fn ehvi_exact_2d(models: &[GpModel], x: &[f64], front: &ParetoFront) -> Result<f64> {
    if models.len() != 2 || front.k() != 2 {
        return Err(Error::invalid("closed-form EHVI requires exactly two objectives"));
    }
    check_setup(models, front, &[x.to_vec()])?;
    let xq = [x.to_vec()];
    let mut mu = [0.0; 2];
    let mut sd = [0.0; 2];
    for (i, m) in models.iter().enumerate() {
        let p = m.posterior(&xq)?;
        mu[i] = p.mean[0];
        sd[i] = p.covariance[(0, 0)].max(0.0).sqrt();
    }
    let r = front.reference();
    let mut pts: Vec<[f64; 2]> = front
        .points()
        .filter(|p| p[0] > r[0] && p[1] > r[1])
        .map(|p| [p[0], p[1]])
        .collect();
    pts.sort_by(|a, b| a[0].total_cmp(&b[0]));

    // Strip i spans [a_i, a_{i+1}) with uncovered floor h_i.
    let mut total = 0.0;
    let mut lo = r[0];
    for p in &pts {
        let (hi, floor) = (p[0], p[1]);
        let width = rectified_mean(mu[0], sd[0], lo) - rectified_mean(mu[0], sd[0], hi);
        total += width * rectified_mean(mu[1], sd[1], floor);
        lo = hi;
    }
    total += rectified_mean(mu[0], sd[0], lo) * rectified_mean(mu[1], sd[1], r[1]);
    Ok(total.max(0.0))
}

/// Greedy lookahead batch of `size` grid rows under `models`, each step adding
/// the row with the largest batch value (ties to the lowest row). Returns the
/// batch and its value.
pub fn greedy_grid_batch(
    models: &[GpModel],
    grid: &[Vec<f64>],
    size: usize,
    front: &ParetoFront,
    mc: &MCConfig,
) -> Result<(Vec<Vec<f64>>, f64)> {
    if grid.is_empty() {
        return Err(Error::invalid("lookahead grid is empty"));
    }
    check_setup(models, front, grid)?;
    let mut batch: Vec<Vec<f64>> = Vec::with_capacity(size);
    let mut value = 0.0;
    for step in 0..size {
        let scores = if step == 0 {
            ehvi_many(models, grid, front, mc)?
        } else {
            grid.iter()
                .map(|g| {
                    let mut cand = batch.clone();
                    cand.push(g.clone());
                    behvi_canonical(models, &canonical(&cand), front, mc)
                })
                .collect::<Result<Vec<f64>>>()?
        };
        let (best, best_val) =
            argmax(&scores).ok_or_else(|| Error::Optimization("lookahead scores are all non-finite".into()))?;
        batch.push(grid[best].clone());
        value = best_val;
    }
    Ok((batch, value))
}

/// Index and value of the largest finite entry; ties go to the lowest index.
pub(crate) fn argmax(v: &[f64]) -> Option<(usize, f64)> {
    let mut best: Option<(usize, f64)> = None;
    for (i, &x) in v.iter().enumerate() {
        if x.is_finite() && best.map_or(true, |(_, b)| x > b) {
            best = Some((i, x));
        }
    }
    best
}

/// Models and front after the pseudo-observation of the posterior mean at `x`.
fn lookahead(models: &[GpModel], x: &[f64], front: &ParetoFront) -> Result<(Vec<GpModel>, ParetoFront)> {
    let xq = [x.to_vec()];
    let mean = models
        .iter()
        .map(|m| m.posterior(&xq).map(|p| p.mean[0]))
        .collect::<Result<Vec<f64>>>()?;
    let mut next = front.clone();
    next.insert(&mean)?;
    Ok((fantasize_all(models, x)?, next))
}

/// EHVI of `x` plus the best greedy `(horizon - 1)`-point grid batch under the
/// models fantasized at `x`. The lookahead front includes the fantasized
/// observation (the posterior mean at `x`).
pub fn nested_af(
    models: &[GpModel],
    x: &[f64],
    front: &ParetoFront,
    horizon: usize,
    grid: &[Vec<f64>],
    mc: &MCConfig,
) -> Result<f64> {
    if horizon == 0 {
        return Err(Error::invalid("horizon must be at least 1"));
    }
    if grid.is_empty() {
        return Err(Error::invalid("lookahead grid is empty"));
    }
    let now = ehvi(models, x, front, mc)?;
    if horizon == 1 {
        return Ok(now);
    }
    let (fantasy, next) = lookahead(models, x, front)?;
    let (_, future) = greedy_grid_batch(&fantasy, grid, horizon - 1, &next, mc)?;
    Ok(now + future)
}

/// EHVI of `x` plus the batch value of `xp` under the models fantasized at
/// `x`, measured against the front that includes the fantasized observation.
pub fn joint_af(models: &[GpModel], x: &[f64], xp: &[Vec<f64>], front: &ParetoFront, mc: &MCConfig) -> Result<f64> {
    let now = ehvi(models, x, front, mc)?;
    if xp.is_empty() {
        return Ok(now);
    }
    check_setup(models, front, xp)?;
    let (fantasy, next) = lookahead(models, x, front)?;
    Ok(now + behvi_canonical(&fantasy, &canonical(xp), &next, mc)?)
}

/// The whole horizon scored as one batch.
pub fn binom_af(models: &[GpModel], xb: &[Vec<f64>], front: &ParetoFront, mc: &MCConfig) -> Result<f64> {
    behvi(models, xb, front, mc)
}

/// Index of the batch member with the largest single-point EHVI.
pub fn binom_pick_index(models: &[GpModel], xb: &[Vec<f64>], front: &ParetoFront, mc: &MCConfig) -> Result<usize> {
    if xb.is_empty() {
        return Err(Error::invalid("batch must contain at least one input"));
    }
    let scores = xb
        .iter()
        .map(|x| ehvi(models, x, front, mc))
        .collect::<Result<Vec<f64>>>()?;
    Ok(argmax(&scores).map_or(0, |(i, _)| i))
}

pub fn binom_pick(models: &[GpModel], xb: &[Vec<f64>], front: &ParetoFront, mc: &MCConfig) -> Result<Vec<f64>> {
    let i = binom_pick_index(models, xb, front, mc)?;
    Ok(xb[i].clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surrogate::KernelParams;

    fn models() -> Vec<GpModel> {
        let x = vec![vec![0.1], vec![0.5], vec![0.9]];
        let k = KernelParams::isotropic(1, 0.3, 1.0, 1e-4).unwrap();
        vec![
            GpModel::new(k.clone(), x.clone(), &[0.2, 1.0, 0.4]).unwrap(),
            GpModel::new(k, x, &[1.0, 0.3, 0.8]).unwrap(),
        ]
    }

    #[test]
    fn empty_front_standard_normal_closed_form() {
        // Prior-only models at a far point: mean 0, unit variance.
        let k = KernelParams::isotropic(1, 0.1, 1.0, 1e-6).unwrap();
        let m = GpModel::from_standardized(k, vec![vec![0.0]], vec![0.0], 0.0, 1.0).unwrap();
        let ms = vec![m.clone(), m];
        let front = ParetoFront::new(vec![0.0, 0.0]).unwrap();
        let v = ehvi_exact_2d(&ms, &[50.0], &front).unwrap();
        assert!((v - 1.0 / (2.0 * std::f64::consts::PI)).abs() < 1e-12, "{v}");
    }

    #[test]
    fn batch_value_ignores_row_order() {
        let ms = models();
        let front = ParetoFront::from_points(&[vec![0.9, 0.9]], vec![0.0, 0.0]).unwrap();
        let mc = MCConfig::new(64, 3);
        let a = behvi(&ms, &[vec![0.3], vec![0.7], vec![0.2]], &front, &mc).unwrap();
        let b = behvi(&ms, &[vec![0.7], vec![0.2], vec![0.3]], &front, &mc).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn nested_with_horizon_one_is_ehvi() {
        let ms = models();
        let front = ParetoFront::from_points(&[vec![0.9, 0.9]], vec![0.0, 0.0]).unwrap();
        let mc = MCConfig::new(64, 3);
        let grid = vec![vec![0.25], vec![0.75]];
        let e = ehvi(&ms, &[0.4], &front, &mc).unwrap();
        assert_eq!(nested_af(&ms, &[0.4], &front, 1, &grid, &mc).unwrap(), e);
        assert!(nested_af(&ms, &[0.4], &front, 3, &grid, &mc).unwrap() >= e);
    }
}
