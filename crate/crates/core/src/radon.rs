//! The normalized Radon transform: chord averages computed by quadrature,
//! and the same operator in diagonal form on basis coefficients.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::basis::{
    chebyshev_u_all, psi, zernike_from_radial, BasisIndex, BrainPoint, DetectorPoint, ZernikeBasis,
};
use crate::design::DesignGrid;
use crate::error::{Error, Result};
use crate::math::{sqrt, wrap_angle};
use crate::quadrature::GaussLegendre;

pub const DEFAULT_CHORD_NODES: usize = 64;

/// Which basis a [`CoefficientField`] is expanded in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Space {
    /// Coefficients `<g, phi_(l,m)>` against Zernike functions.
    Brain,
    /// Coefficients `<Rg, psi_(l,m)>` against Chebyshev-U functions.
    Detector,
}

/// Sparse expansion coefficients keyed by [`BasisIndex`].
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientField {
    space: Space,
    entries: BTreeMap<BasisIndex, Complex64>,
}

impl CoefficientField {
    pub fn new(space: Space) -> Self {
        Self {
            space,
            entries: BTreeMap::new(),
        }
    }

    pub fn from_entries<I>(space: Space, entries: I) -> Self
    where
        I: IntoIterator<Item = (BasisIndex, Complex64)>,
    {
        let mut field = Self::new(space);
        for (idx, c) in entries {
            field.insert(idx, c);
        }
        field
    }

    pub fn space(&self) -> Space {
        self.space
    }

    /// Sets a coefficient. Exact zeros are dropped to keep the support minimal.
    pub fn insert(&mut self, idx: BasisIndex, c: Complex64) {
        if c == Complex64::new(0.0, 0.0) {
            self.entries.remove(&idx);
        } else {
            self.entries.insert(idx, c);
        }
    }

    pub fn get(&self, idx: BasisIndex) -> Complex64 {
        self.entries.get(&idx).copied().unwrap_or_default()
    }

    pub fn iter(&self) -> impl Iterator<Item = (BasisIndex, Complex64)> + '_ {
        self.entries.iter().map(|(&i, &c)| (i, c))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn max_degree(&self) -> Option<u32> {
        self.entries.keys().map(|i| i.m()).max()
    }

    /// Largest `|c(-l,m) - conj(c(l,m))|` over the support.
    pub fn symmetry_defect(&self) -> f64 {
        self.iter()
            .map(|(i, c)| (self.get(i.mirror()) - c.conj()).norm())
            .fold(0.0, f64::max)
    }

    /// True when `c(-l,m) = conj(c(l,m))` to within `tol`, i.e. the field is real-valued.
    pub fn is_conjugate_symmetric(&self, tol: f64) -> bool {
        self.symmetry_defect() <= tol
    }

    fn expect_space(&self, expected: Space) -> Result<()> {
        if self.space == expected {
            Ok(())
        } else {
            Err(Error::SpaceMismatch {
                expected,
                found: self.space,
            })
        }
    }

    /// `sum c(l,m) phi_(l,m)(p)`.
    pub fn evaluate_brain(&self, basis: &ZernikeBasis, p: BrainPoint) -> Result<Complex64> {
        self.expect_space(Space::Brain)?;
        let Some(max_m) = self.max_degree() else {
            return Ok(Complex64::new(0.0, 0.0));
        };
        let radial = basis.radial_values(max_m, p.r)?;
        Ok(self
            .iter()
            .map(|(idx, c)| c * zernike_from_radial(idx, radial.get(idx.m(), idx.abs_l()), p.theta))
            .sum())
    }

    /// Real part of [`evaluate_brain`](Self::evaluate_brain); the imaginary
    /// residue of a conjugate-symmetric field is discarded.
    pub fn evaluate_brain_real(&self, basis: &ZernikeBasis, p: BrainPoint) -> Result<f64> {
        self.evaluate_brain(basis, p).map(|z| z.re)
    }

    /// `sum c(l,m) psi_(l,m)(d)`.
    pub fn evaluate_detector(&self, d: DetectorPoint) -> Result<Complex64> {
        self.expect_space(Space::Detector)?;
        Ok(self.iter().map(|(idx, c)| c * psi(idx, d)).sum())
    }

    pub fn evaluate_detector_real(&self, d: DetectorPoint) -> Result<f64> {
        self.evaluate_detector(d).map(|z| z.re)
    }

    /// Mixed partial `d^alpha/dr^alpha d^beta/dtheta^beta` of the brain expansion.
    pub fn expansion_derivative(
        &self,
        basis: &ZernikeBasis,
        alpha: u32,
        beta: u32,
        p: BrainPoint,
    ) -> Result<Complex64> {
        self.expect_space(Space::Brain)?;
        let order = alpha + beta;
        if order > basis.max_order() {
            return Err(Error::OrderCap {
                order,
                max: basis.max_order(),
            });
        }
        let Some(max_m) = self.max_degree() else {
            return Ok(Complex64::new(0.0, 0.0));
        };
        let table = basis.radial_derivative_values(max_m, alpha, p.r)?;
        let mut acc = Complex64::new(0.0, 0.0);
        for (idx, c) in self.iter() {
            let radial = table.get(idx.m(), idx.abs_l());
            let l = f64::from(idx.l());
            let angular =
                Complex64::new(0.0, l).powu(beta) * Complex64::from_polar(1.0, l * p.theta);
            acc += c * sqrt(f64::from(idx.m()) + 1.0) * radial * angular;
        }
        Ok(acc)
    }

    /// Values of a detector-space field at every design point, in grid order.
    ///
    /// Exploits the tensor structure of the grid: `U_m` is tabulated per
    /// column and the angular factor per row.
    pub fn evaluate_on_grid(&self, grid: &DesignGrid) -> Result<Vec<Complex64>> {
        self.expect_space(Space::Detector)?;
        let mut out = alloc::vec![Complex64::new(0.0, 0.0); grid.n()];
        let Some(max_m) = self.max_degree() else {
            return Ok(out);
        };
        let u_table: Vec<Vec<f64>> = grid
            .radial_nodes()
            .iter()
            .map(|&s| chebyshev_u_all(max_m, s))
            .collect();
        let mut by_l: BTreeMap<i32, Vec<(u32, Complex64)>> = BTreeMap::new();
        for (idx, c) in self.iter() {
            by_l.entry(idx.l()).or_default().push((idx.m(), c));
        }
        let p = grid.p();
        for (&l, terms) in &by_l {
            let phases: Vec<Complex64> = grid
                .angular_nodes()
                .iter()
                .map(|&phi| Complex64::from_polar(1.0, f64::from(l) * phi))
                .collect();
            for (k1, u) in u_table.iter().enumerate() {
                let radial: Complex64 = terms.iter().map(|&(m, c)| c * u[m as usize]).sum();
                for (k2, &e) in phases.iter().enumerate() {
                    out[k1 * p + k2] += radial * e;
                }
            }
        }
        Ok(out)
    }
}

/// Brain -> detector: `out(l,m) = c(l,m) / sqrt(m+1)`.
pub fn svd_forward(c: &CoefficientField) -> Result<CoefficientField> {
    c.expect_space(Space::Brain)?;
    Ok(CoefficientField::from_entries(
        Space::Detector,
        c.iter().map(|(i, v)| (i, v / sqrt(f64::from(i.m()) + 1.0))),
    ))
}

/// Detector -> brain: `out(l,m) = sqrt(m+1) c(l,m)`.
pub fn svd_inverse(c: &CoefficientField) -> Result<CoefficientField> {
    c.expect_space(Space::Detector)?;
    Ok(CoefficientField::from_entries(
        Space::Brain,
        c.iter().map(|(i, v)| (i, v * sqrt(f64::from(i.m()) + 1.0))),
    ))
}

/// A real function on the unit disc.
pub trait FieldFunction {
    fn eval(&self, p: BrainPoint) -> f64;
}

impl<F: Fn(BrainPoint) -> f64> FieldFunction for F {
    fn eval(&self, p: BrainPoint) -> f64 {
        self(p)
    }
}

/// A brain-space expansion viewed as a real function.
#[derive(Debug, Clone, Copy)]
pub struct Expansion<'a> {
    pub field: &'a CoefficientField,
    pub basis: &'a ZernikeBasis,
}

impl<'a> Expansion<'a> {
    pub fn new(field: &'a CoefficientField, basis: &'a ZernikeBasis) -> Result<Self> {
        field.expect_space(Space::Brain)?;
        if let Some(m) = field.max_degree() {
            basis.check_degree(m)?;
        }
        Ok(Self { field, basis })
    }
}

impl FieldFunction for Expansion<'_> {
    fn eval(&self, p: BrainPoint) -> f64 {
        self.field
            .evaluate_brain_real(self.basis, p)
            .expect("space and degree checked at construction")
    }
}

/// Chord-average quadrature with a reusable Gauss–Legendre rule.
#[derive(Debug, Clone)]
pub struct LineIntegrator {
    rule: GaussLegendre,
}

impl LineIntegrator {
    pub fn new(nodes: usize) -> Result<Self> {
        if nodes < 2 {
            return Err(Error::Invalid("chord quadrature needs at least 2 nodes"));
        }
        Ok(Self {
            rule: GaussLegendre::new(nodes)?,
        })
    }

    /// Normalized Radon transform of `g` at `d`.
    ///
    /// The chord has half-length `h = sqrt(1 - s^2)`; with `t = h x` the
    /// normalized integral becomes `(1/2) int_{-1}^{1} g dx`, so the
    /// `(1-s^2)^{-1/2}` prefactor never appears. At `s = 1` the chord
    /// degenerates to the tangency point and `g` is evaluated there.
    pub fn integrate<G: FieldFunction + ?Sized>(&self, g: &G, d: DetectorPoint) -> Result<f64> {
        if !(0.0..=1.0).contains(&d.s) {
            return Err(Error::OutOfDomain {
                what: "s",
                value: d.s,
            });
        }
        let (sin_phi, cos_phi) = libm::sincos(d.phi);
        let (cx, cy) = (d.s * cos_phi, d.s * sin_phi);
        if d.s == 1.0 {
            return Ok(g.eval(BrainPoint {
                r: 1.0,
                theta: wrap_angle(d.phi),
            }));
        }
        let h = sqrt((1.0 - d.s) * (1.0 + d.s));
        let mut acc = 0.0;
        for (&x, &w) in self.rule.nodes().iter().zip(self.rule.weights()) {
            let t = h * x;
            let px = cx - t * sin_phi;
            let py = cy + t * cos_phi;
            let r = libm::hypot(px, py).min(1.0);
            let theta = wrap_angle(libm::atan2(py, px));
            acc += w * g.eval(BrainPoint { r, theta });
        }
        Ok(0.5 * acc)
    }
}

/// One-shot form of [`LineIntegrator::integrate`].
pub fn radon_line_integral<G: FieldFunction + ?Sized>(
    g: &G,
    d: DetectorPoint,
    nodes: usize,
) -> Result<f64> {
    LineIntegrator::new(nodes)?.integrate(g, d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::index_set;
    use approx::assert_abs_diff_eq;
    use core::f64::consts::TAU;

    fn idx(l: i32, m: u32) -> BasisIndex {
        BasisIndex::new(l, m).unwrap()
    }

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn line_integral_of_constant_is_constant() {
        for nodes in [2, 7, 64] {
            for s in [0.0, 0.3, 0.99, 1.0] {
                let d = DetectorPoint::new(s, 1.7).unwrap();
                let v = radon_line_integral(&|_: BrainPoint| 1.0, d, nodes).unwrap();
                assert_abs_diff_eq!(v, 1.0, epsilon = 1e-14);
                let z = radon_line_integral(&|_: BrainPoint| 0.0, d, nodes).unwrap();
                assert_eq!(z, 0.0);
            }
        }
    }

    #[test]
    fn line_integral_of_first_zernike() {
        let b = ZernikeBasis::default();
        let g = |p: BrainPoint| b.zernike_phi(idx(1, 1), p).unwrap().re;
        let v = radon_line_integral(&g, DetectorPoint::new(0.5, 0.0).unwrap(), 64).unwrap();
        assert_abs_diff_eq!(v, 1.0 / 2f64.sqrt(), epsilon = 1e-13);
    }

    #[test]
    fn line_integral_domain() {
        let g = |_: BrainPoint| 1.0;
        let bad = DetectorPoint { s: 1.2, phi: 0.0 };
        assert!(matches!(
            radon_line_integral(&g, bad, 64),
            Err(Error::OutOfDomain { .. })
        ));
        assert!(radon_line_integral(&g, DetectorPoint { s: 0.1, phi: 0.0 }, 1).is_err());
        // Tangency point at s = 1.
        let x_coord = |p: BrainPoint| p.r * libm::cos(p.theta);
        let v = radon_line_integral(&x_coord, DetectorPoint { s: 1.0, phi: 0.4 }, 8).unwrap();
        assert_abs_diff_eq!(v, libm::cos(0.4), epsilon = 1e-14);
    }

    #[test]
    fn svd_maps() {
        let one = CoefficientField::from_entries(Space::Brain, [(idx(0, 0), c(1.0, 0.0))]);
        assert_eq!(svd_forward(&one).unwrap().get(idx(0, 0)), c(1.0, 0.0));
        let f = CoefficientField::from_entries(Space::Brain, [(idx(1, 3), c(2.0, 0.0))]);
        assert_abs_diff_eq!(svd_forward(&f).unwrap().get(idx(1, 3)).re, 1.0);
        let empty = CoefficientField::new(Space::Brain);
        assert!(svd_forward(&empty).unwrap().is_empty());
        assert!(svd_inverse(&CoefficientField::new(Space::Detector))
            .unwrap()
            .is_empty());
        let d = CoefficientField::from_entries(Space::Detector, [(idx(0, 2), c(0.5, 0.0))]);
        assert_abs_diff_eq!(
            svd_inverse(&d).unwrap().get(idx(0, 2)).re,
            0.5 * 3f64.sqrt()
        );
        assert!(matches!(svd_forward(&d), Err(Error::SpaceMismatch { .. })));
        assert!(matches!(svd_inverse(&f), Err(Error::SpaceMismatch { .. })));
    }

    #[test]
    fn evaluate_expansion_examples() {
        let b = ZernikeBasis::default();
        let one = CoefficientField::from_entries(Space::Brain, [(idx(0, 0), c(1.0, 0.0))]);
        let p = BrainPoint::new(0.8, 4.0).unwrap();
        assert_abs_diff_eq!(one.evaluate_brain_real(&b, p).unwrap(), 1.0);
        let pair = CoefficientField::from_entries(
            Space::Brain,
            [(idx(1, 1), c(1.0, 0.0)), (idx(-1, 1), c(1.0, 0.0))],
        );
        let v = pair
            .evaluate_brain(&b, BrainPoint::new(0.5, 0.0).unwrap())
            .unwrap();
        assert_abs_diff_eq!(v.re, 2f64.sqrt(), epsilon = 1e-14);
        assert!(v.im.abs() <= 1e-12);
        assert!(pair
            .evaluate_detector(DetectorPoint { s: 0.1, phi: 0.0 })
            .is_err());
        let det = svd_forward(&pair).unwrap();
        assert!(det.evaluate_brain(&b, p).is_err());
    }

    #[test]
    fn expansion_matches_naive_sum() {
        let b = ZernikeBasis::default();
        let field = CoefficientField::from_entries(
            Space::Brain,
            index_set(6).into_iter().map(|i| {
                let k = f64::from(i.m()) + 0.1 * f64::from(i.l());
                (i, c(libm::sin(k), libm::cos(3.0 * k)))
            }),
        );
        for k in 0..10 {
            let p = BrainPoint {
                r: f64::from(k) / 10.0,
                theta: 0.6 * f64::from(k),
            };
            let mut naive = c(0.0, 0.0);
            for i in index_set(6) {
                let m = f64::from(i.m());
                let rad = b.radial_poly(i, p.r).unwrap();
                let e = c(
                    libm::cos(f64::from(i.l()) * p.theta),
                    libm::sin(f64::from(i.l()) * p.theta),
                );
                naive += field.get(i) * (m + 1.0).sqrt() * rad * e;
            }
            let got = field.evaluate_brain(&b, p).unwrap();
            assert!((got - naive).norm() <= 1e-12);
        }
    }

    #[test]
    fn expansion_derivative_examples() {
        let b = ZernikeBasis::default();
        let p = BrainPoint::new(0.5, 0.3).unwrap();
        let constant = CoefficientField::from_entries(Space::Brain, [(idx(0, 0), c(2.0, 0.0))]);
        assert_eq!(
            constant.expansion_derivative(&b, 1, 0, p).unwrap(),
            c(0.0, 0.0)
        );
        let f = CoefficientField::from_entries(Space::Brain, [(idx(0, 2), c(1.0, 0.0))]);
        let v = f.expansion_derivative(&b, 1, 0, p).unwrap();
        assert_abs_diff_eq!(v.re, 2.0 * 3f64.sqrt(), epsilon = 1e-13);
        assert!(matches!(
            f.expansion_derivative(&b, 3, 2, p),
            Err(Error::OrderCap { .. })
        ));
    }

    #[test]
    fn angular_derivative_matches_finite_differences() {
        let b = ZernikeBasis::default();
        let field = CoefficientField::from_entries(
            Space::Brain,
            [
                (idx(1, 3), c(0.4, -0.2)),
                (idx(-1, 3), c(0.4, 0.2)),
                (idx(2, 4), c(-0.1, 0.3)),
                (idx(-2, 4), c(-0.1, -0.3)),
                (idx(0, 2), c(0.7, 0.0)),
            ],
        );
        let h = 1e-5;
        for k in 1..10 {
            let p = BrainPoint {
                r: f64::from(k) / 10.0,
                theta: TAU * f64::from(k) / 11.0,
            };
            for alpha in 0..=1 {
                let f = |th: f64| {
                    field
                        .expansion_derivative(&b, alpha, 0, BrainPoint { r: p.r, theta: th })
                        .unwrap()
                };
                let fd = (f(p.theta + h) - f(p.theta - h)) / (2.0 * h);
                let got = field.expansion_derivative(&b, alpha, 1, p).unwrap();
                assert!((got - fd).norm() <= 1e-6 * fd.norm().max(1.0));
            }
        }
    }

    #[test]
    fn symmetry_check() {
        let sym = CoefficientField::from_entries(
            Space::Brain,
            [
                (idx(1, 1), c(1.0, 2.0)),
                (idx(-1, 1), c(1.0, -2.0)),
                (idx(0, 0), c(3.0, 0.0)),
            ],
        );
        assert!(sym.is_conjugate_symmetric(0.0));
        let broken = CoefficientField::from_entries(Space::Brain, [(idx(1, 1), c(1.0, 0.0))]);
        assert!(!broken.is_conjugate_symmetric(1e-12));
    }

    #[test]
    fn insert_drops_exact_zeros() {
        let mut f = CoefficientField::new(Space::Brain);
        f.insert(idx(0, 0), c(1.0, 0.0));
        f.insert(idx(0, 0), c(0.0, 0.0));
        assert!(f.is_empty());
    }
}
