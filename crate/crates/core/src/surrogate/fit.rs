use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::kernel::{matern52_lengthscale_factor, scaled_dist2, KernelParams};
use super::{cholesky, gram, solve_spd, standardization, GpModel};
use crate::error::{check_dim, Error, Result};

/// Log marginal likelihood and its gradient with respect to
/// `[log l_1, .., log l_d, log signal, log noise]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Lml {
    pub value: f64,
    pub gradient: Vec<f64>,
}

/// Hyperparameter search settings.
#[derive(Debug, Clone, PartialEq)]
pub struct FitOptions {
    pub restarts: usize,
    pub max_iters: usize,
    pub lengthscale_bounds: (f64, f64),
    pub signal_bounds: (f64, f64),
    pub noise_bounds: (f64, f64),
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            restarts: 8,
            max_iters: 100,
            lengthscale_bounds: (1e-3, 10.0),
            signal_bounds: (1e-3, 1e3),
            noise_bounds: (1e-6, 1.0),
        }
    }
}

/// Gaussian log evidence `log N(y | 0, K + noise I)`, with analytic gradient.
///
/// No jitter is added: a singular Gram matrix is an error here.
pub fn log_marginal_likelihood(k: &KernelParams, x: &[Vec<f64>], y: &[f64]) -> Result<Lml> {
    k.validate()?;
    if x.is_empty() {
        return Err(Error::invalid("log marginal likelihood needs at least one point"));
    }
    check_dim(x.len(), y.len())?;
    for row in x {
        check_dim(k.dim(), row.len())?;
    }
    if y.iter().chain(x.iter().flatten()).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("training data"));
    }
    lml_unchecked(k, x, y).ok_or(Error::NotPositiveDefinite { jitter: 0.0 })
}

fn lml_unchecked(k: &KernelParams, x: &[Vec<f64>], y: &[f64]) -> Option<Lml> {
    let n = x.len();
    let d = k.dim();
    let l = cholesky(gram(x, k, k.noise_variance))?;
    let yv = DVector::from_column_slice(y);
    let alpha = solve_spd(&l, &yv);

    let log_det: f64 = 2.0 * l.diagonal().iter().map(|v| v.ln()).sum::<f64>();
    let value = -0.5 * yv.dot(&alpha) - 0.5 * log_det - 0.5 * n as f64 * (2.0 * std::f64::consts::PI).ln();

    // W = alpha alpha^T - K^{-1}; dL/dtheta = 0.5 tr(W dK/dtheta).
    let mut kinv = DMatrix::identity(n, n);
    l.solve_lower_triangular_mut(&mut kinv);
    l.tr_solve_lower_triangular_mut(&mut kinv);

    let mut grad = vec![0.0; d + 2];
    for i in 0..n {
        let w_ii = alpha[i] * alpha[i] - kinv[(i, i)];
        grad[d] += 0.5 * w_ii * k.signal_variance;
        grad[d + 1] += 0.5 * w_ii * k.noise_variance;
        for j in 0..i {
            let w = alpha[i] * alpha[j] - 0.5 * (kinv[(i, j)] + kinv[(j, i)]);
            let rho2 = scaled_dist2(&x[i], &x[j], &k.lengthscales);
            let kf = super::kernel::matern52_from_dist2(rho2, k.signal_variance);
            // Off-diagonal pairs appear twice in the trace.
            grad[d] += w * kf;
            let factor = w * matern52_lengthscale_factor(rho2, k.signal_variance);
            for (p, g) in grad[..d].iter_mut().enumerate() {
                let u = (x[i][p] - x[j][p]) / k.lengthscales[p];
                *g += factor * u * u;
            }
        }
    }
    value.is_finite().then_some(Lml { value, gradient: grad })
}

/// Maximum-likelihood GP fit with the default search settings and
/// `restarts` starting points.
pub fn fit_gp(x: &[Vec<f64>], y: &[f64], restarts: usize, seed: u64) -> Result<GpModel> {
    let opts = FitOptions {
        restarts,
        ..FitOptions::default()
    };
    fit_gp_with(x, y, &opts, seed)
}

pub fn fit_gp_with(x: &[Vec<f64>], y: &[f64], opts: &FitOptions, seed: u64) -> Result<GpModel> {
    if x.is_empty() {
        return Err(Error::invalid("cannot fit a GP to an empty dataset"));
    }
    check_dim(x.len(), y.len())?;
    let d = x[0].len();
    if d == 0 {
        return Err(Error::invalid("input dimension must be positive"));
    }
    for row in x {
        check_dim(d, row.len())?;
    }
    if y.iter().chain(x.iter().flatten()).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("training data"));
    }
    if opts.restarts == 0 {
        return Err(Error::invalid("fit needs at least one start"));
    }
    let (mean, scale) = standardization(y);
    let ys: Vec<f64> = y.iter().map(|v| (v - mean) / scale).collect();

    let (lo, hi) = log_bounds(d, opts);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<(f64, Vec<f64>)> = None;
    for start in 0..opts.restarts {
        let theta0 = if start == 0 {
            let mut t = vec![0.5f64.ln(); d];
            t.push(0.0);
            t.push(1e-4f64.ln());
            t
        } else {
            let mut t: Vec<f64> = (0..d).map(|_| rng.random_range(0.05f64.ln()..2.0f64.ln())).collect();
            t.push(rng.random_range(0.2f64.ln()..5.0f64.ln()));
            t.push(rng.random_range(1e-6f64.ln()..1e-2f64.ln()));
            t
        };
        let theta0 = project(theta0, &lo, &hi);
        if let Some((val, theta)) = ascend(x, &ys, theta0, &lo, &hi, opts.max_iters) {
            if best.as_ref().map_or(true, |(b, _)| val > *b) {
                best = Some((val, theta));
            }
        }
    }
    let (_, theta) =
        best.ok_or_else(|| Error::Optimization("log marginal likelihood non-finite at every start".into()))?;
    GpModel::from_standardized(KernelParams::from_log(&theta), x.to_vec(), ys, mean, scale)
}

fn log_bounds(d: usize, o: &FitOptions) -> (Vec<f64>, Vec<f64>) {
    let mut lo = vec![o.lengthscale_bounds.0.ln(); d];
    let mut hi = vec![o.lengthscale_bounds.1.ln(); d];
    lo.push(o.signal_bounds.0.ln());
    hi.push(o.signal_bounds.1.ln());
    lo.push(o.noise_bounds.0.ln());
    hi.push(o.noise_bounds.1.ln());
    (lo, hi)
}

fn project(mut t: Vec<f64>, lo: &[f64], hi: &[f64]) -> Vec<f64> {
    for ((v, l), h) in t.iter_mut().zip(lo).zip(hi) {
        *v = v.clamp(*l, *h);
    }
    t
}

fn eval(x: &[Vec<f64>], y: &[f64], theta: &[f64]) -> Option<Lml> {
    lml_unchecked(&KernelParams::from_log(theta), x, y)
}

/// Projected gradient ascent with Barzilai-Borwein steps and Armijo
/// backtracking. Returns `None` if the start itself is not evaluable.
fn ascend(
    x: &[Vec<f64>],
    y: &[f64],
    theta0: Vec<f64>,
    lo: &[f64],
    hi: &[f64],
    max_iters: usize,
) -> Option<(f64, Vec<f64>)> {
    let mut theta = theta0;
    let mut cur = eval(x, y, &theta)?;
    let mut step = 0.1 / cur.gradient.iter().fold(1e-12f64, |a, g| a.max(g.abs()));
    let mut prev: Option<(Vec<f64>, Vec<f64>)> = None;

    for _ in 0..max_iters {
        if let Some((pt, pg)) = &prev {
            let s: Vec<f64> = theta.iter().zip(pt).map(|(a, b)| a - b).collect();
            let yk: Vec<f64> = cur.gradient.iter().zip(pg).map(|(a, b)| a - b).collect();
            let sy: f64 = s.iter().zip(&yk).map(|(a, b)| a * b).sum();
            let ss: f64 = s.iter().map(|a| a * a).sum();
            // Ascent: curvature sy is negative for a concave neighbourhood.
            if sy < 0.0 && ss > 0.0 {
                step = (ss / -sy).clamp(1e-6, 10.0);
            }
        }
        let mut accepted = None;
        let mut t = step;
        for _ in 0..30 {
            let cand = project(
                theta.iter().zip(&cur.gradient).map(|(a, g)| a + t * g).collect(),
                lo,
                hi,
            );
            let moved: f64 = cand
                .iter()
                .zip(&theta)
                .zip(&cur.gradient)
                .map(|((c, a), g)| (c - a) * g)
                .sum();
            if moved <= 1e-14 {
                break;
            }
            if let Some(next) = eval(x, y, &cand) {
                if next.value >= cur.value + 1e-4 * moved {
                    accepted = Some((cand, next));
                    break;
                }
            }
            t *= 0.5;
        }
        let Some((cand, next)) = accepted else { break };
        let gain = next.value - cur.value;
        prev = Some((
            std::mem::replace(&mut theta, cand),
            std::mem::replace(&mut cur, next).gradient,
        ));
        step = t;
        if gain < 1e-9 * (1.0 + cur.value.abs()) {
            break;
        }
    }
    Some((cur.value, theta))
}
