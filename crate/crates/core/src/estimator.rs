//! Spectral cut-off estimation.
//!
//! Detector coefficients are estimated by the weighted sums
//! `Rhat(l,m) = sum_k w_k conj(psi_(l,m)(z_k)) Y_k`, then mapped back through
//! the inverse singular values and damped by a filter `Lambda(m / t)`:
//!
//! ```text
//! ghat = sum_(l,m) Lambda(m/t) sqrt(m+1) Rhat(l,m) phi_(l,m)
//! ```
//!
//! The hard cut-off `Lambda = 1_[0,1]` keeps exactly the degrees `m <= t`.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::basis::{chebyshev_u_all, psi, BasisIndex, BrainPoint, ZernikeBasis};
use crate::design::DesignGrid;
use crate::error::{Error, Result};
use crate::math::sqrt;
use crate::radon::{svd_forward, CoefficientField, Space};

/// Imaginary residue above which a reconstruction is rejected as non-real.
pub const REAL_TOLERANCE: f64 = 1e-10;

/// Bandwidth `t = max(1, floor(scale (n / ln n)^{1/(2(v+3))}))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BandwidthRule {
    /// Smoothness index of the target class.
    pub v: f64,
    pub scale: f64,
}

impl Default for BandwidthRule {
    fn default() -> Self {
        Self { v: 5.0, scale: 1.0 }
    }
}

impl BandwidthRule {
    pub fn new(v: f64, scale: f64) -> Result<Self> {
        if !(v >= 5.0) {
            return Err(Error::OutOfDomain {
                what: "smoothness v (must be >= 5)",
                value: v,
            });
        }
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::OutOfDomain {
                what: "bandwidth scale",
                value: scale,
            });
        }
        Ok(Self { v, scale })
    }

    /// Rate exponent `(v-1) / (2(v+3))` of the sup-norm error bound.
    pub fn rate_exponent(&self) -> f64 {
        (self.v - 1.0) / (2.0 * (self.v + 3.0))
    }
}

/// Rate-balancing bandwidth for `n` observations, clamped to `[1, cap]`.
///
/// The rule grows very slowly: with `v = 5` it stays at 1 until `n / ln n`
/// exceeds `2^16`.
pub fn default_bandwidth(n: usize, rule: &BandwidthRule, cap: u32) -> Result<u32> {
    if n < 2 {
        return Err(Error::Invalid("bandwidth rule needs n >= 2"));
    }
    let nf = n as f64;
    let raw = rule.scale * libm::pow(nf / libm::log(nf), 1.0 / (2.0 * (rule.v + 3.0)));
    let t = libm::floor(raw).max(1.0);
    Ok((t.min(f64::from(cap))) as u32)
}

/// Spectral filter `Lambda`, evaluated at `m / t`.
#[derive(Debug, Clone, Copy)]
pub enum FilterSpec {
    /// `1_[0,1]`.
    HardCutoff,
    /// `min(1, max(0, 2 - 2x))`: flat on `[0, 1/2]`, linear down to 0 at 1.
    LinearTaper,
    /// User-supplied `Lambda` with values in `[0,1]` vanishing beyond `support`.
    Custom {
        lambda: fn(f64) -> f64,
        support: f64,
    },
}

impl FilterSpec {
    pub fn weight(&self, x: f64) -> f64 {
        match *self {
            Self::HardCutoff => {
                if (0.0..=1.0).contains(&x) {
                    1.0
                } else {
                    0.0
                }
            }
            Self::LinearTaper => (2.0 - 2.0 * x).clamp(0.0, 1.0),
            Self::Custom { lambda, .. } => lambda(x),
        }
    }

    pub fn support(&self) -> f64 {
        match *self {
            Self::HardCutoff | Self::LinearTaper => 1.0,
            Self::Custom { support, .. } => support,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::HardCutoff => "hard",
            Self::LinearTaper => "taper",
            Self::Custom { .. } => "custom",
        }
    }
}

/// Provenance of a data set.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DataMeta {
    pub seed: Option<u64>,
    pub error_law: String,
    pub phantom: String,
}

/// Observations `Y_k` aligned with the design grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SinogramData {
    grid: DesignGrid,
    y: Vec<f64>,
    pub meta: DataMeta,
}

impl SinogramData {
    pub fn new(grid: DesignGrid, y: Vec<f64>) -> Result<Self> {
        if y.len() != grid.n() {
            return Err(Error::LengthMismatch {
                expected: grid.n(),
                found: y.len(),
            });
        }
        if let Some(&bad) = y.iter().find(|v| !v.is_finite()) {
            return Err(Error::OutOfDomain {
                what: "observation",
                value: bad,
            });
        }
        Ok(Self {
            grid,
            y,
            meta: DataMeta::default(),
        })
    }

    pub fn with_meta(mut self, meta: DataMeta) -> Self {
        self.meta = meta;
        self
    }

    pub fn grid(&self) -> &DesignGrid {
        &self.grid
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn into_parts(self) -> (DesignGrid, Vec<f64>, DataMeta) {
        (self.grid, self.y, self.meta)
    }
}

/// `Rhat(l,m) = sum_k w_k conj(psi_(l,m)(z_k)) Y_k`, summed point by point.
pub fn estimate_coefficient(data: &SinogramData, idx: BasisIndex) -> Complex64 {
    let grid = data.grid();
    grid.points()
        .zip(grid.weights())
        .zip(data.y())
        .map(|((z, &w), &y)| psi(idx, z).conj() * (w * y))
        .sum()
}

/// All `Rhat(l,m)` with `m <= max_degree`, as a detector-space field.
///
/// Same sums as [`estimate_coefficient`], factored over the tensor grid:
/// first the angular sums `B_l(k1) = sum_k2 w_k e^{-il phi_k2} Y_k`, then
/// `Rhat(l,m) = sum_k1 U_m(s_k1) B_l(k1)`. Because `Y` is real,
/// `B_{-l} = conj(B_l)` and the field comes out exactly conjugate-symmetric.
pub fn estimate_coefficients(data: &SinogramData, max_degree: u32) -> CoefficientField {
    let grid = data.grid();
    let (q, p) = (grid.q(), grid.p());
    let y = data.y();
    let w = grid.weights();
    let u_table: Vec<Vec<f64>> = grid
        .radial_nodes()
        .iter()
        .map(|&s| chebyshev_u_all(max_degree, s))
        .collect();

    let mut field = CoefficientField::new(Space::Detector);
    for l in 0..=max_degree as i32 {
        let phases: Vec<Complex64> = grid
            .angular_nodes()
            .iter()
            .map(|&phi| Complex64::from_polar(1.0, -f64::from(l) * phi))
            .collect();
        let mut angular = vec![Complex64::new(0.0, 0.0); q];
        for (k1, b) in angular.iter_mut().enumerate() {
            let row = k1 * p;
            *b = phases
                .iter()
                .enumerate()
                .map(|(k2, &e)| e * (w[row + k2] * y[row + k2]))
                .sum();
        }
        let mut m = l as u32;
        while m <= max_degree {
            let c: Complex64 = angular
                .iter()
                .zip(&u_table)
                .map(|(&b, u)| b * u[m as usize])
                .sum();
            let idx = BasisIndex::new(l, m).expect("l <= m with matching parity");
            field.insert(idx, c);
            if l > 0 {
                field.insert(idx.mirror(), c.conj());
            }
            m += 2;
        }
    }
    field
}

/// Brain-space coefficients `Lambda(m/t) sqrt(m+1) Rhat(l,m)` of the estimator.
pub fn spectral_estimate(
    data: &SinogramData,
    t: u32,
    filter: FilterSpec,
    basis: &ZernikeBasis,
) -> Result<CoefficientField> {
    let rhat = estimate_up_to(data, t, filter, basis)?;
    apply_filter(&rhat, t, filter)
}

/// Degree range needed by `filter` at bandwidth `t`, with the estimates for it.
fn estimate_up_to(
    data: &SinogramData,
    t: u32,
    filter: FilterSpec,
    basis: &ZernikeBasis,
) -> Result<CoefficientField> {
    basis.check_degree(t)?;
    if t == 0 {
        return Err(Error::Invalid("bandwidth must be positive"));
    }
    let reach = libm::floor(filter.support() * f64::from(t));
    let max_m = if reach.is_finite() && reach >= 0.0 {
        (reach as u64).min(u64::from(basis.degree_cap())) as u32
    } else {
        basis.degree_cap()
    };
    Ok(estimate_coefficients(data, max_m))
}

/// Turns detector estimates into the filtered brain-space expansion.
pub fn apply_filter(
    rhat: &CoefficientField,
    t: u32,
    filter: FilterSpec,
) -> Result<CoefficientField> {
    if rhat.space() != Space::Detector {
        return Err(Error::SpaceMismatch {
            expected: Space::Detector,
            found: rhat.space(),
        });
    }
    let mut out = CoefficientField::new(Space::Brain);
    for (idx, c) in rhat.iter() {
        let lambda = filter.weight(f64::from(idx.m()) / f64::from(t));
        if !(0.0..=1.0).contains(&lambda) {
            return Err(Error::OutOfDomain {
                what: "filter value",
                value: lambda,
            });
        }
        if lambda > 0.0 {
            out.insert(idx, c * (lambda * sqrt(f64::from(idx.m()) + 1.0)));
        }
    }
    Ok(out)
}

/// Reconstruction `ghat` at the given points.
pub fn estimate_at(
    data: &SinogramData,
    t: u32,
    filter: FilterSpec,
    basis: &ZernikeBasis,
    points: &[BrainPoint],
) -> Result<Vec<f64>> {
    let field = spectral_estimate(data, t, filter, basis)?;
    evaluate_real(&field, basis, points)
}

/// Real values of a brain-space field, rejecting imaginary residue above
/// [`REAL_TOLERANCE`].
pub fn evaluate_real(
    field: &CoefficientField,
    basis: &ZernikeBasis,
    points: &[BrainPoint],
) -> Result<Vec<f64>> {
    points
        .iter()
        .map(|&p| {
            let z = field.evaluate_brain(basis, p)?;
            if z.im.abs() > REAL_TOLERANCE {
                Err(Error::NotReal(z.im.abs()))
            } else {
                Ok(z.re)
            }
        })
        .collect()
}

/// `R ghat` at every design point, via the diagonal form of the transform.
pub fn radon_trace(field: &CoefficientField, grid: &DesignGrid) -> Result<Vec<f64>> {
    let detector = svd_forward(field)?;
    let values = detector.evaluate_on_grid(grid)?;
    Ok(values.into_iter().map(|z| z.re).collect())
}

/// `R ghat(z_k)` for the estimator built from `data`.
pub fn estimator_radon_trace(
    data: &SinogramData,
    t: u32,
    filter: FilterSpec,
    basis: &ZernikeBasis,
) -> Result<Vec<f64>> {
    let field = spectral_estimate(data, t, filter, basis)?;
    radon_trace(&field, data.grid())
}

/// `sum m^tau |c(l,m)|` over the support of `field`.
pub fn ellipsoid_norm(field: &CoefficientField, tau: f64) -> f64 {
    field
        .iter()
        .map(|(idx, c)| libm::pow(f64::from(idx.m()), tau) * c.norm())
        .sum()
}

/// Detector coefficients `<R[g - ghat], psi_(l,m)>` of two brain-space fields.
pub fn detector_error_field(
    truth: &CoefficientField,
    estimate: &CoefficientField,
) -> Result<CoefficientField> {
    let truth_det = svd_forward(truth)?;
    let est_det = svd_forward(estimate)?;
    let mut out = truth_det.clone();
    for (idx, c) in est_det.iter() {
        out.insert(idx, truth_det.get(idx) - c);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::index_set;
    use crate::design::build_grid;
    use approx::assert_abs_diff_eq;
    use core::f64::consts::TAU;

    fn idx(l: i32, m: u32) -> BasisIndex {
        BasisIndex::new(l, m).unwrap()
    }

    fn constant_data(q: usize, value: f64) -> SinogramData {
        let grid = build_grid(q, TAU).unwrap();
        let n = grid.n();
        SinogramData::new(grid, vec![value; n]).unwrap()
    }

    #[test]
    fn coefficient_of_constant_data() {
        let d = constant_data(8, 1.0);
        let c = estimate_coefficient(&d, idx(0, 0));
        assert_abs_diff_eq!(c.re, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(c.im, 0.0, epsilon = 1e-12);
        let z = constant_data(8, 0.0);
        for i in index_set(4) {
            assert_eq!(estimate_coefficient(&z, i), Complex64::new(0.0, 0.0));
        }
    }

    #[test]
    fn factored_estimates_match_pointwise_sums() {
        let grid = build_grid(6, 2.5).unwrap();
        let y: Vec<f64> = (0..grid.n())
            .map(|k| libm::sin(0.37 * k as f64) + 0.1)
            .collect();
        let data = SinogramData::new(grid, y).unwrap();
        let field = estimate_coefficients(&data, 7);
        assert_eq!(field.len(), crate::basis::index_count(7));
        for i in index_set(7) {
            let naive = estimate_coefficient(&data, i);
            assert!((field.get(i) - naive).norm() <= 1e-13, "{i:?}");
        }
        assert!(field.is_conjugate_symmetric(0.0));
    }

    #[test]
    fn bandwidth_examples() {
        let rule = BandwidthRule::default();
        assert_eq!(default_bandwidth(2, &rule, 50).unwrap(), 1);
        assert_eq!(default_bandwidth(10_000, &rule, 50).unwrap(), 1);
        let big = BandwidthRule::new(5.0, 20.0).unwrap();
        assert_eq!(default_bandwidth(1_000_000, &big, 3).unwrap(), 3);
        let mut last = 0;
        for n in (2..200_000).step_by(997) {
            let t = default_bandwidth(n, &BandwidthRule::new(5.0, 4.0).unwrap(), 50).unwrap();
            assert!(t >= last);
            last = t;
        }
        assert!(default_bandwidth(1, &rule, 50).is_err());
        assert!(BandwidthRule::new(4.0, 1.0).is_err());
        assert!(BandwidthRule::new(5.0, 0.0).is_err());
    }

    #[test]
    fn filters() {
        assert_eq!(FilterSpec::HardCutoff.weight(1.0), 1.0);
        assert_eq!(FilterSpec::HardCutoff.weight(1.01), 0.0);
        assert_eq!(FilterSpec::LinearTaper.weight(0.25), 1.0);
        assert_abs_diff_eq!(FilterSpec::LinearTaper.weight(0.75), 0.5);
        assert_eq!(FilterSpec::LinearTaper.weight(1.0), 0.0);
    }

    #[test]
    fn zero_data_gives_empty_estimate() {
        let b = ZernikeBasis::default();
        let d = constant_data(4, 0.0);
        for t in [1, 3, 6] {
            assert!(spectral_estimate(&d, t, FilterSpec::HardCutoff, &b)
                .unwrap()
                .is_empty());
        }
        let pts = [BrainPoint { r: 0.2, theta: 1.0 }];
        assert_eq!(
            estimate_at(&d, 2, FilterSpec::LinearTaper, &b, &pts).unwrap(),
            [0.0]
        );
    }

    #[test]
    fn hard_cutoff_equals_indicator_filter() {
        fn indicator(x: f64) -> f64 {
            if (0.0..=1.0).contains(&x) {
                1.0
            } else {
                0.0
            }
        }
        let b = ZernikeBasis::default();
        let grid = build_grid(5, TAU).unwrap();
        let y: Vec<f64> = (0..grid.n()).map(|k| libm::cos(0.11 * k as f64)).collect();
        let d = SinogramData::new(grid, y).unwrap();
        let hard = spectral_estimate(&d, 4, FilterSpec::HardCutoff, &b).unwrap();
        let custom = spectral_estimate(
            &d,
            4,
            FilterSpec::Custom {
                lambda: indicator,
                support: 1.0,
            },
            &b,
        )
        .unwrap();
        assert_eq!(hard, custom);
        assert_eq!(hard.max_degree(), Some(4));
    }

    #[test]
    fn bandwidth_above_cap_is_rejected() {
        let b = ZernikeBasis::new(6, 1).unwrap();
        let d = constant_data(3, 1.0);
        assert!(matches!(
            spectral_estimate(&d, 7, FilterSpec::HardCutoff, &b),
            Err(Error::DegreeCap { .. })
        ));
    }

    #[test]
    fn trace_of_constant_field() {
        let grid = build_grid(4, TAU).unwrap();
        let f =
            CoefficientField::from_entries(Space::Brain, [(idx(0, 0), Complex64::new(2.5, 0.0))]);
        let tr = radon_trace(&f, &grid).unwrap();
        assert!(tr.iter().all(|&v| (v - 2.5).abs() <= 1e-15));
        let empty = radon_trace(&CoefficientField::new(Space::Brain), &grid).unwrap();
        assert!(empty.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn non_real_fields_are_rejected() {
        let b = ZernikeBasis::default();
        let f =
            CoefficientField::from_entries(Space::Brain, [(idx(1, 1), Complex64::new(1.0, 0.0))]);
        let pts = [BrainPoint { r: 0.5, theta: 1.0 }];
        assert!(matches!(
            evaluate_real(&f, &b, &pts),
            Err(Error::NotReal(_))
        ));
    }

    #[test]
    fn ellipsoid_norm_weights_by_degree() {
        let f = CoefficientField::from_entries(
            Space::Detector,
            [
                (idx(0, 0), Complex64::new(3.0, 0.0)),
                (idx(0, 2), Complex64::new(0.0, -1.0)),
            ],
        );
        assert_abs_diff_eq!(ellipsoid_norm(&f, 2.0), 4.0);
        assert_abs_diff_eq!(ellipsoid_norm(&f, 0.0), 4.0);
    }

    #[test]
    fn sinogram_validation() {
        let grid = build_grid(2, 1.0).unwrap();
        assert!(SinogramData::new(grid.clone(), vec![0.0; 3]).is_err());
        assert!(SinogramData::new(grid, vec![f64::NAN; 4]).is_err());
    }
}
