use nalgebra::DMatrix;
use statrs::distribution::{ContinuousCDF, Normal};

use super::GpModel;
use crate::error::{Error, Result};
use crate::seed::mix_seed;

/// Fixed standard-normal draws reused across acquisition evaluations.
///
/// Draws are quasi-random: an Owen-scrambled Sobol point set mapped through
/// the normal quantile function. Within a slot the `k` objectives form one
/// joint low-discrepancy set; each slot is scrambled with its own seed, so
/// the draws for a slot do not depend on how many slots the tensor holds.
#[derive(Debug, Clone, PartialEq)]
pub struct BaseSamples {
    n: usize,
    k: usize,
    slots: usize,
    z: Vec<f64>,
}

impl BaseSamples {
    pub fn new(k: usize, slots: usize, n: usize, seed: u64) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("need at least one sample"));
        }
        if k > sobol_burley::NUM_DIMENSIONS as usize {
            return Err(Error::invalid("too many objectives for quasi-random sampling"));
        }
        if n > u32::MAX as usize {
            return Err(Error::invalid("too many samples"));
        }
        let normal = Normal::standard();
        let lo = f64::from(f32::EPSILON);
        let mut z = vec![0.0; k * slots * n];
        for slot in 0..slots {
            let slot_seed = mix_seed(seed, &[slot as u64]) as u32;
            for obj in 0..k {
                let start = (obj * slots + slot) * n;
                for (s, out) in z[start..start + n].iter_mut().enumerate() {
                    let u = f64::from(sobol_burley::sample(s as u32, obj as u32, slot_seed));
                    *out = normal.inverse_cdf(u.clamp(lo, 1.0 - lo));
                }
            }
        }
        Ok(BaseSamples { n, k, slots, z })
    }

    pub fn n_samples(&self) -> usize {
        self.n
    }

    pub fn n_objectives(&self) -> usize {
        self.k
    }

    pub fn slots(&self) -> usize {
        self.slots
    }

    #[inline]
    pub fn column(&self, obj: usize, slot: usize) -> &[f64] {
        let start = (obj * self.slots + slot) * self.n;
        &self.z[start..start + self.n]
    }
}

/// Posterior draws laid out as `[sample][point][objective]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleTensor {
    pub n: usize,
    pub m: usize,
    pub k: usize,
    pub data: Vec<f64>,
}

impl SampleTensor {
    #[inline]
    pub fn get(&self, s: usize, j: usize, obj: usize) -> f64 {
        self.data[(s * self.m + j) * self.k + obj]
    }

    /// The `m x k` block of sample `s`, row-major.
    #[inline]
    pub fn sample(&self, s: usize) -> &[f64] {
        let w = self.m * self.k;
        &self.data[s * w..(s + 1) * w]
    }
}

/// Lower factor of a positive semi-definite matrix. Pivots that are zero up
/// to round-off produce zero columns instead of failing.
pub fn psd_cholesky(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let m = a.nrows();
    if a.ncols() != m {
        return Err(Error::invalid("matrix must be square"));
    }
    if a.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("covariance"));
    }
    let max_diag = (0..m).fold(0.0f64, |acc, i| acc.max(a[(i, i)]));
    let tol = 1e-12 * max_diag.max(f64::MIN_POSITIVE);
    let mut l = DMatrix::zeros(m, m);
    for j in 0..m {
        let mut d = a[(j, j)];
        for p in 0..j {
            d -= l[(j, p)] * l[(j, p)];
        }
        if d <= tol {
            continue;
        }
        let piv = d.sqrt();
        l[(j, j)] = piv;
        for i in j + 1..m {
            let mut s = a[(i, j)];
            for p in 0..j {
                s -= l[(i, p)] * l[(j, p)];
            }
            l[(i, j)] = s / piv;
        }
    }
    Ok(l)
}

/// Joint posterior draws at `xq` for every model from fresh base samples.
pub fn joint_sample(models: &[GpModel], xq: &[Vec<f64>], n: usize, seed: u64) -> Result<SampleTensor> {
    let base = BaseSamples::new(models.len(), xq.len(), n, seed)?;
    sample_with_base(models, xq, &base)
}

/// `mean + L z` per objective using the provided base samples.
pub fn sample_with_base(models: &[GpModel], xq: &[Vec<f64>], base: &BaseSamples) -> Result<SampleTensor> {
    let (k, m, n) = (models.len(), xq.len(), base.n_samples());
    if base.n_objectives() < k || base.slots() < m {
        return Err(Error::invalid(format!(
            "base samples cover {} objectives x {} points, need {k} x {m}",
            base.n_objectives(),
            base.slots()
        )));
    }
    let mut data = vec![0.0; n * m * k];
    for (obj, model) in models.iter().enumerate() {
        let post = model.posterior(xq)?;
        let l = psd_cholesky(&post.covariance)?;
        for j in 0..m {
            let mu = post.mean[j];
            for s in 0..n {
                data[(s * m + j) * k + obj] = mu;
            }
            for p in 0..=j {
                let c = l[(j, p)];
                if c == 0.0 {
                    continue;
                }
                let z = base.column(obj, p);
                for s in 0..n {
                    data[(s * m + j) * k + obj] += c * z[s];
                }
            }
        }
    }
    Ok(SampleTensor { n, m, k, data })
}
