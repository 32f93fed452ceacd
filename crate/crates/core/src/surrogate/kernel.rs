use crate::error::{check_dim, Error, Result};

const SQRT5: f64 = 2.236_067_977_499_79;

/// Matérn 5/2 kernel hyperparameters with one lengthscale per input dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelParams {
    pub lengthscales: Vec<f64>,
    pub signal_variance: f64,
    pub noise_variance: f64,
}

impl KernelParams {
    pub fn new(lengthscales: Vec<f64>, signal_variance: f64, noise_variance: f64) -> Result<Self> {
        let params = KernelParams {
            lengthscales,
            signal_variance,
            noise_variance,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn isotropic(d: usize, lengthscale: f64, signal_variance: f64, noise_variance: f64) -> Result<Self> {
        Self::new(vec![lengthscale; d], signal_variance, noise_variance)
    }

    pub fn dim(&self) -> usize {
        self.lengthscales.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.lengthscales.is_empty() {
            return Err(Error::invalid("kernel needs at least one lengthscale"));
        }
        if self.lengthscales.iter().any(|l| !(l.is_finite() && *l > 0.0)) {
            return Err(Error::invalid("lengthscales must be finite and positive"));
        }
        if !(self.signal_variance.is_finite() && self.signal_variance > 0.0) {
            return Err(Error::invalid("signal variance must be finite and positive"));
        }
        if !(self.noise_variance.is_finite() && self.noise_variance >= 0.0) {
            return Err(Error::invalid("noise variance must be finite and nonnegative"));
        }
        Ok(())
    }

    /// Inverse of the log layout `[log l_1, .., log l_d, log signal, log noise]`.
    pub(crate) fn from_log(theta: &[f64]) -> Self {
        let d = theta.len() - 2;
        KernelParams {
            lengthscales: theta[..d].iter().map(|t| t.exp()).collect(),
            signal_variance: theta[d].exp(),
            noise_variance: theta[d + 1].exp(),
        }
    }
}

/// `s2 (1 + sqrt5 rho + 5 rho^2 / 3) exp(-sqrt5 rho)` with
/// `rho^2 = sum_i ((x_i - x2_i) / l_i)^2`.
pub fn matern52_ard(x: &[f64], x2: &[f64], k: &KernelParams) -> Result<f64> {
    check_dim(x.len(), x2.len())?;
    check_dim(k.dim(), x.len())?;
    if k.lengthscales.iter().any(|l| *l <= 0.0) {
        return Err(Error::invalid("lengthscales must be positive"));
    }
    Ok(matern52(x, x2, &k.lengthscales, k.signal_variance))
}

#[inline]
pub(crate) fn scaled_dist2(x: &[f64], x2: &[f64], lengthscales: &[f64]) -> f64 {
    x.iter()
        .zip(x2)
        .zip(lengthscales)
        .map(|((a, b), l)| {
            let u = (a - b) / l;
            u * u
        })
        .sum()
}

#[inline]
pub(crate) fn matern52_from_dist2(rho2: f64, signal: f64) -> f64 {
    let rho = rho2.sqrt();
    signal * (1.0 + SQRT5 * rho + 5.0 / 3.0 * rho2) * (-SQRT5 * rho).exp()
}

#[inline]
pub(crate) fn matern52(x: &[f64], x2: &[f64], lengthscales: &[f64], signal: f64) -> f64 {
    matern52_from_dist2(scaled_dist2(x, x2, lengthscales), signal)
}

/// Shared factor of the log-lengthscale derivatives:
/// `dk/dlog(l_i) = factor * ((x_i - x2_i) / l_i)^2`.
#[inline]
pub(crate) fn matern52_lengthscale_factor(rho2: f64, signal: f64) -> f64 {
    let rho = rho2.sqrt();
    5.0 / 3.0 * signal * (1.0 + SQRT5 * rho) * (-SQRT5 * rho).exp()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_distance_is_signal_variance() {
        let k = KernelParams::isotropic(3, 0.7, 1.0, 0.0).unwrap();
        let x = [0.1, 0.2, 0.3];
        assert_eq!(matern52_ard(&x, &x, &k).unwrap(), 1.0);
    }

    #[test]
    fn unit_distance_closed_form() {
        // (1 + sqrt5 + 5/3) exp(-sqrt5) evaluated by hand.
        let k = KernelParams::isotropic(1, 1.0, 1.0, 0.0).unwrap();
        let v = matern52_ard(&[0.0], &[1.0], &k).unwrap();
        assert!((v - 0.523_994_108_831_820_3).abs() < 1e-12, "{v}");
    }

    #[test]
    fn symmetric() {
        let k = KernelParams::new(vec![0.3, 2.0], 1.7, 0.0).unwrap();
        let (a, b) = ([0.2, 0.9], [0.6, 0.1]);
        assert_eq!(matern52_ard(&a, &b, &k).unwrap(), matern52_ard(&b, &a, &k).unwrap());
    }

    #[test]
    fn rejects_bad_params() {
        assert!(KernelParams::new(vec![0.0], 1.0, 0.0).is_err());
        assert!(KernelParams::new(vec![1.0], -1.0, 0.0).is_err());
        let bad = KernelParams {
            lengthscales: vec![-1.0],
            signal_variance: 1.0,
            noise_variance: 0.0,
        };
        assert!(matern52_ard(&[0.0], &[1.0], &bad).is_err());
        let k = KernelParams::isotropic(2, 1.0, 1.0, 0.0).unwrap();
        assert!(matern52_ard(&[0.0], &[1.0], &k).is_err());
    }
}
