//! Spectral cut-off estimation for the Radon-transform inverse regression model.
//!
//! The image `g` lives on the unit disc ("brain space") and is observed only
//! through noisy chord averages `Y_k = Rg(z_k) + eps_k` taken on a parallel-beam
//! detector grid. The normalized Radon transform `R` is diagonal in the Zernike
//! basis (image side) and the Chebyshev-U basis (detector side), with singular
//! values `(m+1)^{-1/2}`. The estimator projects the data onto the detector
//! basis, inverts the singular values and truncates the series at a bandwidth.
//!
//! This crate is `no_std` (it needs `alloc`) and has no IO. Random sampling,
//! file formats and the CLI live in `radon-spectral-sim`.
//!
//! Module map:
//!
//! * [`basis`]: radial polynomials, Zernike and Chebyshev functions, derivatives.
//! * [`radon`]: coefficient fields, the SVD form of the transform, chord quadrature.
//! * [`design`]: detector grid, cell weights and design points.
//! * [`estimator`]: coefficient estimates, cut-off estimator, bandwidth rule.
//! * [`empirical`]: residuals, weighted ECDF, residual process, limit covariance.
#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod basis;
pub mod design;
pub mod empirical;
pub mod error;
pub mod estimator;
pub mod quadrature;
pub mod radon;

mod math;

pub use num_complex::Complex64;

pub use basis::{BasisIndex, BrainPoint, DetectorPoint, ZernikeBasis};
pub use design::{DesignGrid, GridCell};
pub use error::{Error, Result};
pub use estimator::{BandwidthRule, FilterSpec, SinogramData};
pub use radon::{CoefficientField, FieldFunction, Space};
