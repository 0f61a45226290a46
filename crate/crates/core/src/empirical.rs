//! Weighted empirical distribution of residuals and its limit covariance.
//!
//! Residuals `ehat_k = Y_k - R ghat(z_k)` enter the weighted ECDF
//! `Fhat(t) = sum_k w_k 1{ehat_k <= t}`. Asymptotically the residual ECDF
//! behaves like the error ECDF plus the drift `f(t) sum_k w_k eps_k`, which
//! gives the covariance
//!
//! ```text
//! Sigma(t,t') = c (F(t ^ t') - F(t)F(t') + f(t) E[eps 1{eps <= t'}]
//!                  + f(t') E[eps 1{eps <= t}] + sigma^2 f(t) f(t'))
//! ```
//!
//! with `c` the limit of `n sum_k w_k^2`.

use alloc::vec::Vec;
use core::f64::consts::{PI, SQRT_2};

use crate::error::{Error, Result};
use crate::estimator::SinogramData;
use crate::math::sqrt;

/// Tolerance on `|sum w - 1|` for weight vectors.
pub const WEIGHT_SUM_TOLERANCE: f64 = 1e-9;

/// Normalization constant `8 pi^2 / 3` of the limit covariance kernel.
pub const LIMIT_NORMALIZATION: f64 = 8.0 * PI * PI / 3.0;

/// Centred error distribution with the moments the residual process needs.
pub trait ErrorLaw {
    fn cdf(&self, t: f64) -> f64;
    fn density(&self, t: f64) -> f64;
    /// `E[eps 1{eps <= t}]`.
    fn partial_mean(&self, t: f64) -> f64;
    fn variance(&self) -> f64;
}

/// `N(0, sigma^2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gaussian {
    sigma: f64,
}

impl Gaussian {
    pub fn new(sigma: f64) -> Result<Self> {
        if sigma > 0.0 && sigma.is_finite() {
            Ok(Self { sigma })
        } else {
            Err(Error::OutOfDomain {
                what: "sigma",
                value: sigma,
            })
        }
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }
}

impl ErrorLaw for Gaussian {
    fn cdf(&self, t: f64) -> f64 {
        0.5 * libm::erfc(-t / (self.sigma * SQRT_2))
    }

    fn density(&self, t: f64) -> f64 {
        let z = t / self.sigma;
        libm::exp(-0.5 * z * z) / (self.sigma * sqrt(2.0 * PI))
    }

    /// `-sigma^2 f(t)`.
    fn partial_mean(&self, t: f64) -> f64 {
        -self.sigma * self.sigma * self.density(t)
    }

    fn variance(&self) -> f64 {
        self.sigma * self.sigma
    }
}

/// Uniform on `[-a, a]`.
///
/// Its density is not positive everywhere; process diagnostics should keep
/// the evaluation grid inside the support.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Uniform {
    half_width: f64,
}

impl Uniform {
    /// Uniform on `[a, b]`; the law must be centred, so `a = -b`.
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !(a < b) || !a.is_finite() || !b.is_finite() {
            return Err(Error::Invalid("uniform law needs finite a < b"));
        }
        if (a + b).abs() > 1e-12 * b.abs().max(1.0) {
            return Err(Error::OutOfDomain {
                what: "uniform mean (a+b)/2",
                value: 0.5 * (a + b),
            });
        }
        Ok(Self { half_width: b })
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }
}

impl ErrorLaw for Uniform {
    fn cdf(&self, t: f64) -> f64 {
        let a = self.half_width;
        ((t + a) / (2.0 * a)).clamp(0.0, 1.0)
    }

    fn density(&self, t: f64) -> f64 {
        let a = self.half_width;
        if (-a..=a).contains(&t) {
            0.5 / a
        } else {
            0.0
        }
    }

    fn partial_mean(&self, t: f64) -> f64 {
        let a = self.half_width;
        let t = t.clamp(-a, a);
        (t * t - a * a) / (4.0 * a)
    }

    fn variance(&self) -> f64 {
        self.half_width * self.half_width / 3.0
    }
}

impl<L: ErrorLaw + ?Sized> ErrorLaw for &L {
    fn cdf(&self, t: f64) -> f64 {
        (**self).cdf(t)
    }
    fn density(&self, t: f64) -> f64 {
        (**self).density(t)
    }
    fn partial_mean(&self, t: f64) -> f64 {
        (**self).partial_mean(t)
    }
    fn variance(&self) -> f64 {
        (**self).variance()
    }
}

/// `ehat_k = Y_k - trace_k`.
pub fn residuals(data: &SinogramData, trace: &[f64]) -> Result<Vec<f64>> {
    let y = data.y();
    if trace.len() != y.len() {
        return Err(Error::LengthMismatch {
            expected: y.len(),
            found: trace.len(),
        });
    }
    Ok(y.iter().zip(trace).map(|(y, r)| y - r).collect())
}

fn check_weights(weights: &[f64], len: usize) -> Result<()> {
    if weights.len() != len {
        return Err(Error::LengthMismatch {
            expected: len,
            found: weights.len(),
        });
    }
    let total: f64 = weights.iter().sum();
    if (total - 1.0).abs() > WEIGHT_SUM_TOLERANCE {
        return Err(Error::WeightsNotNormalized(total));
    }
    Ok(())
}

/// `sum_k w_k 1{res_k <= t}` by direct summation.
pub fn weighted_ecdf(res: &[f64], weights: &[f64], t: f64) -> f64 {
    res.iter()
        .zip(weights)
        .filter(|(r, _)| **r <= t)
        .map(|(_, w)| w)
        .sum()
}

/// Weighted ECDF prepared for repeated evaluation: residuals sorted once,
/// each query a binary search.
#[derive(Debug, Clone)]
pub struct WeightedEcdf {
    sorted: Vec<f64>,
    cumulative: Vec<f64>,
}

impl WeightedEcdf {
    pub fn new(res: &[f64], weights: &[f64]) -> Result<Self> {
        check_weights(weights, res.len())?;
        if res.iter().any(|r| r.is_nan()) {
            return Err(Error::Invalid("residuals contain NaN"));
        }
        let mut pairs: Vec<(f64, f64)> = res.iter().copied().zip(weights.iter().copied()).collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut acc = 0.0;
        let cumulative = pairs
            .iter()
            .map(|&(_, w)| {
                acc += w;
                acc
            })
            .collect();
        Ok(Self {
            sorted: pairs.into_iter().map(|(r, _)| r).collect(),
            cumulative,
        })
    }

    /// Right-continuous step: ties count as `<= t`.
    pub fn eval(&self, t: f64) -> f64 {
        let k = self.sorted.partition_point(|&r| r <= t);
        if k == 0 {
            0.0
        } else {
            self.cumulative[k - 1]
        }
    }

    pub fn eval_grid(&self, t_grid: &[f64]) -> Vec<f64> {
        t_grid.iter().map(|&t| self.eval(t)).collect()
    }
}

/// The residual process on a grid, plus the linearization gap when true
/// errors are known.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalProcessEval {
    pub t_grid: Vec<f64>,
    pub f_hat: Vec<f64>,
    /// `sqrt(n) (Fhat(t) - F(t))`.
    pub process: Vec<f64>,
    pub lin_gap: Option<Vec<f64>>,
    pub n: usize,
}

impl EmpiricalProcessEval {
    /// `sqrt(n) sup_t |gap(t)|`, if the gap was computed.
    pub fn scaled_gap_sup(&self) -> Option<f64> {
        self.lin_gap
            .as_ref()
            .map(|g| sqrt(self.n as f64) * g.iter().fold(0.0_f64, |m, v| m.max(v.abs())))
    }
}

/// `sqrt(n) (Fhat(t) - F(t))` over `t_grid`.
pub fn process<L: ErrorLaw + ?Sized>(
    res: &[f64],
    weights: &[f64],
    n: usize,
    law: &L,
    t_grid: &[f64],
) -> Result<EmpiricalProcessEval> {
    let ecdf = WeightedEcdf::new(res, weights)?;
    let f_hat = ecdf.eval_grid(t_grid);
    let root_n = sqrt(n as f64);
    let process = t_grid
        .iter()
        .zip(&f_hat)
        .map(|(&t, &fh)| root_n * (fh - law.cdf(t)))
        .collect();
    Ok(EmpiricalProcessEval {
        t_grid: t_grid.to_vec(),
        f_hat,
        process,
        lin_gap: None,
        n,
    })
}

/// `sum_k w_k [1{ehat_k <= t} - 1{eps_k <= t} - eps_k f(t)]` over `t_grid`.
///
/// Needs the true errors, so this is a simulation-only diagnostic.
pub fn linearization_gap<L: ErrorLaw + ?Sized>(
    res: &[f64],
    raw_errors: Option<&[f64]>,
    weights: &[f64],
    law: &L,
    t_grid: &[f64],
) -> Result<Vec<f64>> {
    let raw = raw_errors.ok_or(Error::Invalid("linearization gap needs the true errors"))?;
    if raw.len() != res.len() {
        return Err(Error::LengthMismatch {
            expected: res.len(),
            found: raw.len(),
        });
    }
    let fitted = WeightedEcdf::new(res, weights)?;
    let truth = WeightedEcdf::new(raw, weights)?;
    let drift: f64 = weights.iter().zip(raw).map(|(w, e)| w * e).sum();
    Ok(t_grid
        .iter()
        .map(|&t| fitted.eval(t) - truth.eval(t) - drift * law.density(t))
        .collect())
}

/// Limit covariance of the residual process with normalization `8 pi^2 / 3`.
pub fn covariance_kernel<L: ErrorLaw + ?Sized>(t: f64, t2: f64, law: &L) -> f64 {
    covariance_kernel_scaled(t, t2, law, LIMIT_NORMALIZATION)
}

/// Covariance kernel with an explicit normalization in place of `8 pi^2 / 3`,
/// e.g. [`design_normalization`] of a concrete grid.
pub fn covariance_kernel_scaled<L: ErrorLaw + ?Sized>(
    t: f64,
    t2: f64,
    law: &L,
    normalization: f64,
) -> f64 {
    // Evaluate in a fixed argument order so the kernel is exactly symmetric.
    let (t, t2) = if t <= t2 { (t, t2) } else { (t2, t) };
    let (f1, f2) = (law.density(t), law.density(t2));
    let core = law.cdf(t) - law.cdf(t) * law.cdf(t2)
        + f1 * law.partial_mean(t2)
        + f2 * law.partial_mean(t)
        + law.variance() * f1 * f2;
    normalization * core
}

/// `n sum_k w_k^2`: the variance inflation of a weighted mean relative to a
/// plain mean. For the standard grid this tends to `32 / (3 pi^2)`.
pub fn design_normalization(weights: &[f64]) -> f64 {
    weights.len() as f64 * weights.iter().map(|w| w * w).sum::<f64>()
}

/// `n sum w_k^2` in the large-grid limit for the standard detector measure.
pub const DESIGN_NORMALIZATION_LIMIT: f64 = 32.0 / (3.0 * PI * PI);
