//! Independent per-objective Gaussian-process surrogates.
//!
//! Inputs are expected in the unit cube. Targets are standardized per model
//! and predictions are returned in the original output units. The
//! predictive distribution is that of the latent function (no observation
//! noise added), which is what the acquisition functions integrate over.

mod fit;
mod kernel;
mod sampling;

use nalgebra::{DMatrix, DVector};

use crate::error::{check_dim, Error, Result};

pub use fit::{fit_gp, fit_gp_with, log_marginal_likelihood, FitOptions, Lml};
pub use kernel::{matern52_ard, KernelParams};
pub use sampling::{joint_sample, psd_cholesky, sample_with_base, BaseSamples, SampleTensor};

use kernel::matern52;

/// Diagonal jitter tried, in order, when the Gram matrix fails to factor.
pub const JITTER_LADDER: [f64; 4] = [0.0, 1e-6, 1e-4, 1e-2];

/// Pivots below this fraction of the largest diagonal entry count as singular.
pub(crate) const PIVOT_TOL: f64 = 1e-12;

/// Mean vector and full covariance of a joint Gaussian prediction.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorGaussian {
    pub mean: Vec<f64>,
    pub covariance: DMatrix<f64>,
}

impl PosteriorGaussian {
    pub fn variances(&self) -> Vec<f64> {
        self.covariance.diagonal().iter().copied().collect()
    }
}

/// A fitted Gaussian process for one objective.
#[derive(Debug, Clone)]
pub struct GpModel {
    kernel: KernelParams,
    jitter: f64,
    inputs: Vec<Vec<f64>>,
    targets: Vec<f64>,
    chol: DMatrix<f64>,
    alpha: DVector<f64>,
    y_mean: f64,
    y_scale: f64,
}

/// Sample mean and standard deviation used to standardize targets.
/// Constant (or single) targets keep a unit scale.
pub(crate) fn standardization(y: &[f64]) -> (f64, f64) {
    let n = y.len() as f64;
    let mean = y.iter().sum::<f64>() / n;
    if y.len() < 2 {
        return (mean, 1.0);
    }
    let var = y.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let sd = var.sqrt();
    if sd > 0.0 && sd.is_finite() {
        (mean, sd)
    } else {
        (mean, 1.0)
    }
}

/// Gram matrix of the training inputs with `noise` on the diagonal.
pub(crate) fn gram(inputs: &[Vec<f64>], k: &KernelParams, noise: f64) -> DMatrix<f64> {
    let n = inputs.len();
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        m[(i, i)] = k.signal_variance + noise;
        for j in 0..i {
            let v = matern52(&inputs[i], &inputs[j], &k.lengthscales, k.signal_variance);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    m
}

/// Lower Cholesky factor, rejecting numerically singular matrices.
pub(crate) fn cholesky(m: DMatrix<f64>) -> Option<DMatrix<f64>> {
    let max_diag = m.diagonal().iter().fold(0.0f64, |a, &b| a.max(b));
    let chol = nalgebra::Cholesky::new(m)?;
    let l = chol.unpack();
    let ok = l
        .diagonal()
        .iter()
        .all(|d| d.is_finite() && d * d > PIVOT_TOL * max_diag);
    ok.then_some(l)
}

impl GpModel {
    /// Builds a model from raw targets, standardizing them first.
    pub fn new(kernel: KernelParams, inputs: Vec<Vec<f64>>, targets: &[f64]) -> Result<Self> {
        if inputs.is_empty() {
            return Err(Error::invalid("a GP needs at least one training point"));
        }
        check_dim(inputs.len(), targets.len())?;
        if targets.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("training targets"));
        }
        let (mean, scale) = standardization(targets);
        let std: Vec<f64> = targets.iter().map(|v| (v - mean) / scale).collect();
        Self::from_standardized(kernel, inputs, std, mean, scale)
    }

    pub(crate) fn from_standardized(
        kernel: KernelParams,
        inputs: Vec<Vec<f64>>,
        targets: Vec<f64>,
        y_mean: f64,
        y_scale: f64,
    ) -> Result<Self> {
        kernel.validate()?;
        for x in &inputs {
            check_dim(kernel.dim(), x.len())?;
        }
        let base = gram(&inputs, &kernel, kernel.noise_variance);
        for &jitter in &JITTER_LADDER {
            let mut m = base.clone();
            for i in 0..m.nrows() {
                m[(i, i)] += jitter;
            }
            if let Some(chol) = cholesky(m) {
                let alpha = solve_spd(&chol, &DVector::from_column_slice(&targets));
                return Ok(GpModel {
                    kernel,
                    jitter,
                    inputs,
                    targets,
                    chol,
                    alpha,
                    y_mean,
                    y_scale,
                });
            }
        }
        Err(Error::NotPositiveDefinite {
            jitter: JITTER_LADDER[JITTER_LADDER.len() - 1],
        })
    }

    pub fn kernel(&self) -> &KernelParams {
        &self.kernel
    }

    /// Extra diagonal jitter that was needed to factor the Gram matrix.
    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    pub fn n_train(&self) -> usize {
        self.inputs.len()
    }

    pub fn dim(&self) -> usize {
        self.kernel.dim()
    }

    pub fn train_inputs(&self) -> &[Vec<f64>] {
        &self.inputs
    }

    /// Training targets in standardized units.
    pub fn standardized_targets(&self) -> &[f64] {
        &self.targets
    }

    pub fn output_mean(&self) -> f64 {
        self.y_mean
    }

    pub fn output_scale(&self) -> f64 {
        self.y_scale
    }

    /// Observation noise (including jitter) in output units.
    pub fn noise_variance(&self) -> f64 {
        (self.kernel.noise_variance + self.jitter) * self.y_scale * self.y_scale
    }

    /// Prior signal variance in output units.
    pub fn signal_variance(&self) -> f64 {
        self.kernel.signal_variance * self.y_scale * self.y_scale
    }

    fn cross_kernel(&self, xq: &[Vec<f64>]) -> DMatrix<f64> {
        let k = &self.kernel;
        DMatrix::from_fn(self.inputs.len(), xq.len(), |i, j| {
            matern52(&self.inputs[i], &xq[j], &k.lengthscales, k.signal_variance)
        })
    }

    fn check_queries(&self, xq: &[Vec<f64>]) -> Result<()> {
        for x in xq {
            check_dim(self.dim(), x.len())?;
            if x.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite("query input"));
            }
        }
        Ok(())
    }

    /// Joint predictive distribution of the latent function at `xq`.
    pub fn posterior(&self, xq: &[Vec<f64>]) -> Result<PosteriorGaussian> {
        self.check_queries(xq)?;
        let k = &self.kernel;
        let kq = self.cross_kernel(xq);
        let mean_std = kq.tr_mul(&self.alpha);
        let v = self
            .chol
            .solve_lower_triangular(&kq)
            .ok_or(Error::NotPositiveDefinite { jitter: self.jitter })?;
        let m = xq.len();
        let vtv = v.tr_mul(&v);
        let s2 = self.y_scale * self.y_scale;
        let mut cov = DMatrix::zeros(m, m);
        for i in 0..m {
            for j in 0..=i {
                let prior = matern52(&xq[i], &xq[j], &k.lengthscales, k.signal_variance);
                let c = s2 * (prior - 0.5 * (vtv[(i, j)] + vtv[(j, i)]));
                cov[(i, j)] = c;
                cov[(j, i)] = c;
            }
        }
        let mean = mean_std.iter().map(|v| self.y_mean + self.y_scale * v).collect();
        Ok(PosteriorGaussian { mean, covariance: cov })
    }

    /// Pointwise predictive means and variances, without the cross terms.
    pub fn marginals(&self, xq: &[Vec<f64>]) -> Result<(Vec<f64>, Vec<f64>)> {
        self.check_queries(xq)?;
        let kq = self.cross_kernel(xq);
        let mean_std = kq.tr_mul(&self.alpha);
        let v = self
            .chol
            .solve_lower_triangular(&kq)
            .ok_or(Error::NotPositiveDefinite { jitter: self.jitter })?;
        let s2 = self.y_scale * self.y_scale;
        let mean = mean_std.iter().map(|v| self.y_mean + self.y_scale * v).collect();
        let var = v
            .column_iter()
            .map(|c| s2 * (self.kernel.signal_variance - c.norm_squared()))
            .collect();
        Ok((mean, var))
    }

    /// Conditions the model on a pseudo-observation at `x_new` whose value is
    /// the current posterior mean there. The posterior mean is unchanged
    /// everywhere; the variance shrinks around `x_new`. The model's own noise
    /// term is used for the pseudo-observation.
    pub fn fantasize(&self, x_new: &[f64]) -> Result<GpModel> {
        self.check_queries(std::slice::from_ref(&x_new.to_vec()))?;
        let k = &self.kernel;
        let n = self.inputs.len();
        let kx = DVector::from_fn(n, |i, _| {
            matern52(&self.inputs[i], x_new, &k.lengthscales, k.signal_variance)
        });
        let target = kx.dot(&self.alpha);
        let l = self
            .chol
            .solve_lower_triangular(&kx)
            .ok_or(Error::NotPositiveDefinite { jitter: self.jitter })?;
        let diag = k.signal_variance + k.noise_variance + self.jitter;
        let pivot2 = diag - l.norm_squared();

        let mut inputs = self.inputs.clone();
        inputs.push(x_new.to_vec());
        let mut targets = self.targets.clone();
        targets.push(target);

        let max_diag = diag;
        if pivot2.is_nan() || pivot2 <= PIVOT_TOL * max_diag {
            // Rank-one extension is singular; refactor with the jitter ladder.
            return GpModel::from_standardized(k.clone(), inputs, targets, self.y_mean, self.y_scale).map(|mut m| {
                m.jitter = m.jitter.max(self.jitter);
                m
            });
        }
        let mut chol = self.chol.clone().resize(n + 1, n + 1, 0.0);
        for j in 0..n {
            chol[(n, j)] = l[j];
        }
        chol[(n, n)] = pivot2.sqrt();
        let alpha = solve_spd(&chol, &DVector::from_column_slice(&targets));
        Ok(GpModel {
            kernel: k.clone(),
            jitter: self.jitter,
            inputs,
            targets,
            chol,
            alpha,
            y_mean: self.y_mean,
            y_scale: self.y_scale,
        })
    }
}

/// Solves `L L^T x = b` given the lower factor `L`.
pub(crate) fn solve_spd(l: &DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
    let mut x = b.clone();
    l.solve_lower_triangular_mut(&mut x);
    l.tr_solve_lower_triangular_mut(&mut x);
    x
}

/// Posterior at `xq` for every model; convenience for acquisition code.
pub fn posteriors(models: &[GpModel], xq: &[Vec<f64>]) -> Result<Vec<PosteriorGaussian>> {
    models.iter().map(|m| m.posterior(xq)).collect()
}

/// Fantasizes every model at the same input.
pub fn fantasize_all(models: &[GpModel], x_new: &[f64]) -> Result<Vec<GpModel>> {
    models.iter().map(|m| m.fantasize(x_new)).collect()
}
