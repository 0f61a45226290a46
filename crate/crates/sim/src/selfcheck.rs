//! Numerical identities that must hold for any correct build: the SVD of the
//! normalized Radon transform and orthonormality of both bases.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use radon_spectral::basis::{chebyshev_u_all, index_set, psi, BasisIndex};
use radon_spectral::quadrature::GaussLegendre;
use radon_spectral::radon::LineIntegrator;
use radon_spectral::{BrainPoint, Complex64, DetectorPoint, ZernikeBasis};
use serde::Serialize;

use crate::error::SimResult;

#[derive(Debug, Clone, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub max_error: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl CheckResult {
    fn new(name: &str, max_error: f64, tolerance: f64) -> Self {
        Self {
            name: name.to_string(),
            max_error,
            tolerance,
            passed: max_error <= tolerance,
        }
    }
}

impl std::fmt::Display for CheckResult {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{} {}: max error {:.3e} (tolerance {:.0e})",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.max_error,
            self.tolerance
        )
    }
}

/// `count` detector points with `s` evenly spread over `[0, s_max]` and
/// angles from a golden-ratio sequence.
pub fn detector_sample(count: usize, s_max: f64) -> Vec<DetectorPoint> {
    let golden = 0.5 * (5f64.sqrt() - 1.0);
    (0..count)
        .map(|i| {
            let s = if count > 1 {
                s_max * (i as f64 / (count - 1) as f64)
            } else {
                0.0
            };
            DetectorPoint {
                s,
                phi: TAU * (i as f64 * golden).fract(),
            }
        })
        .collect()
}

/// Largest `|R phi_(l,m)(d) - (m+1)^{-1/2} psi_(l,m)(d)|`, real and imaginary
/// parts transformed separately by chord quadrature.
pub fn svd_identity_error(
    max_degree: u32,
    points: &[DetectorPoint],
    nodes: usize,
) -> SimResult<f64> {
    let basis = ZernikeBasis::default();
    let line = LineIntegrator::new(nodes)?;
    let mut worst = 0.0_f64;
    for idx in index_set(max_degree) {
        let re = |p: BrainPoint| basis.zernike_phi(idx, p).expect("degree within cap").re;
        let im = |p: BrainPoint| basis.zernike_phi(idx, p).expect("degree within cap").im;
        let scale = 1.0 / (f64::from(idx.m()) + 1.0).sqrt();
        for &d in points {
            let got = Complex64::new(line.integrate(&re, d)?, line.integrate(&im, d)?);
            worst = worst.max((got - scale * psi(idx, d)).norm());
        }
    }
    Ok(worst)
}

/// Largest `|G - I|` entry of a Gram matrix built on a product rule: radial
/// `nodes` as `(coordinate, weight with the measure folded in)` times an
/// `angles`-point trapezoid. `value(k, theta)` gives every basis function at
/// radial node `k` and angle `theta`.
fn gram_defect(
    indices: &[BasisIndex],
    nodes: &[(f64, f64)],
    angles: usize,
    value: impl Fn(usize, f64) -> Vec<Complex64>,
) -> f64 {
    let k = indices.len();
    let mut gram = vec![Complex64::new(0.0, 0.0); k * k];
    let dtheta = TAU / angles as f64;
    for (node, &(_, w)) in nodes.iter().enumerate() {
        for j in 0..angles {
            let v = value(node, dtheta * j as f64);
            let wt = w * dtheta;
            for a in 0..k {
                let va = v[a] * wt;
                for b in 0..k {
                    gram[a * k + b] += va * v[b].conj();
                }
            }
        }
    }
    let mut worst = 0.0_f64;
    for a in 0..k {
        for b in 0..k {
            let target = if a == b { 1.0 } else { 0.0 };
            worst = worst.max((gram[a * k + b] - target).norm());
        }
    }
    worst
}

/// Largest entrywise deviation from the identity of the Zernike Gram matrix
/// under `dmu = pi^-1 r dr dtheta`: Gauss-Legendre in `r`, trapezoid in `theta`.
pub fn brain_gram_defect(max_degree: u32, nodes: usize) -> SimResult<f64> {
    let basis = ZernikeBasis::default();
    let indices = index_set(max_degree);
    let rule = GaussLegendre::new(nodes)?;
    let radial: Vec<(f64, f64)> = rule
        .mapped(0.0, 1.0)
        .map(|(r, w)| (r, w * r / PI))
        .collect();
    let tables = radial
        .iter()
        .map(|&(r, _)| basis.radial_values(max_degree, r))
        .collect::<Result<Vec<_>, _>>()?;
    let scale: Vec<f64> = indices
        .iter()
        .map(|i| (f64::from(i.m()) + 1.0).sqrt())
        .collect();
    Ok(gram_defect(&indices, &radial, nodes, |k, theta| {
        indices
            .iter()
            .zip(&scale)
            .map(|(i, s)| {
                Complex64::from_polar(
                    s * tables[k].get(i.m(), i.abs_l()),
                    f64::from(i.l()) * theta,
                )
            })
            .collect()
    }))
}

/// Same for the detector functions under `dlambda = 2 pi^-2 sqrt(1-s^2) ds dphi`,
/// with `s = sin u` so the radial integrand is smooth.
pub fn detector_gram_defect(max_degree: u32, nodes: usize) -> SimResult<f64> {
    let indices = index_set(max_degree);
    let rule = GaussLegendre::new(nodes)?;
    let radial: Vec<(f64, f64)> = rule
        .mapped(0.0, FRAC_PI_2)
        .map(|(u, w)| (u.sin(), w * u.cos() * u.cos() * 2.0 / (PI * PI)))
        .collect();
    let tables: Vec<Vec<f64>> = radial
        .iter()
        .map(|&(s, _)| chebyshev_u_all(max_degree, s))
        .collect();
    Ok(gram_defect(&indices, &radial, nodes, |k, phi| {
        indices
            .iter()
            .map(|i| Complex64::from_polar(tables[k][i.m() as usize], f64::from(i.l()) * phi))
            .collect()
    }))
}

/// The suite run by `selfcheck`.
pub fn run_all() -> SimResult<Vec<CheckResult>> {
    let points = detector_sample(20, 0.95);
    Ok(vec![
        CheckResult::new(
            "svd identity (m <= 10, 128 chord nodes)",
            svd_identity_error(10, &points, 128)?,
            1e-6,
        ),
        CheckResult::new(
            "zernike orthonormality (m <= 10, 200 x 200 nodes)",
            brain_gram_defect(10, 200)?,
            1e-8,
        ),
        CheckResult::new(
            "chebyshev orthonormality (m <= 10, 200 x 200 nodes)",
            detector_gram_defect(10, 200)?,
            1e-8,
        ),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn low_degree_identities_hold() {
        let pts = detector_sample(5, 0.9);
        assert!(svd_identity_error(3, &pts, 32).unwrap() < 1e-10);
        assert!(brain_gram_defect(3, 16).unwrap() < 1e-12);
        assert!(detector_gram_defect(3, 24).unwrap() < 1e-12);
    }

    #[test]
    fn too_few_nodes_are_detected() {
        // Eight angles alias e^{4i theta} onto e^{-4i theta}.
        assert!(brain_gram_defect(4, 8).unwrap() > 0.5);
    }

    #[test]
    fn sample_points_stay_in_range() {
        let pts = detector_sample(20, 0.95);
        assert_eq!(pts.len(), 20);
        assert!(pts
            .iter()
            .all(|d| (0.0..=0.95).contains(&d.s) && (0.0..TAU).contains(&d.phi)));
        assert_eq!(pts[19].s, 0.95);
    }
}
