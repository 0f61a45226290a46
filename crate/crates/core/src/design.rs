//! Parallel-beam detector grid.
//!
//! Detector space `[0,1] x [0,2pi]` is cut into `q` radial columns and `p`
//! angular rows. Each cell carries its mass under
//! `dlambda = 2 pi^-2 sqrt(1-s^2) ds dphi` as its weight. The radial design
//! coordinate is chosen so that the first moment `int (s - z) sqrt(1-s^2) ds`
//! over the cell vanishes, which turns the weighted sum into a midpoint rule
//! that is exact for functions linear in `s`.
//!
//! Grid points are stored row-major with linear index `k = k1 * p + k2`.

use alloc::vec::Vec;
use core::f64::consts::{PI, TAU};

use crate::basis::DetectorPoint;
use crate::error::{Error, Result};
use crate::math::sqrt;

/// `int_0^s sqrt(1-x^2) dx`.
fn chord_mass(s: f64) -> f64 {
    0.5 * (s * sqrt((1.0 - s) * (1.0 + s)) + libm::asin(s))
}

/// `int_a^b x sqrt(1-x^2) dx`, written to avoid cancellation on narrow cells.
fn first_moment(a: f64, b: f64) -> f64 {
    let ua = sqrt((1.0 - a) * (1.0 + a));
    let ub = sqrt((1.0 - b) * (1.0 + b));
    // (ua^3 - ub^3) / 3 with ua - ub = (b-a)(b+a)/(ua+ub).
    let diff = if ua + ub > 0.0 {
        (b - a) * (b + a) / (ua + ub)
    } else {
        0.0
    };
    diff * (ua * ua + ua * ub + ub * ub) / 3.0
}

/// Radial design coordinate of the cell `[s_lo, s_hi]`.
pub fn radial_design_point(s_lo: f64, s_hi: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&s_lo) {
        return Err(Error::OutOfDomain {
            what: "s_lo",
            value: s_lo,
        });
    }
    if !(0.0..=1.0).contains(&s_hi) {
        return Err(Error::OutOfDomain {
            what: "s_hi",
            value: s_hi,
        });
    }
    if s_lo >= s_hi {
        return Err(Error::Invalid("radial cell must satisfy s_lo < s_hi"));
    }
    let z = first_moment(s_lo, s_hi) / (chord_mass(s_hi) - chord_mass(s_lo));
    Ok(z.clamp(s_lo, s_hi))
}

/// One rectangle of the detector grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridCell {
    pub k1: usize,
    pub k2: usize,
    pub s_lo: f64,
    pub s_hi: f64,
    pub phi_lo: f64,
    pub phi_hi: f64,
}

impl GridCell {
    pub fn of(q: usize, p: usize, k1: usize, k2: usize) -> Self {
        Self {
            k1,
            k2,
            s_lo: k1 as f64 / q as f64,
            s_hi: (k1 + 1) as f64 / q as f64,
            phi_lo: TAU * k2 as f64 / p as f64,
            phi_hi: TAU * (k2 + 1) as f64 / p as f64,
        }
    }

    pub fn contains(&self, d: DetectorPoint) -> bool {
        (self.s_lo..=self.s_hi).contains(&d.s) && (self.phi_lo..=self.phi_hi).contains(&d.phi)
    }
}

/// Mass of `cell` under the detector measure.
pub fn cell_weight(cell: &GridCell) -> f64 {
    2.0 / (PI * PI) * (cell.phi_hi - cell.phi_lo) * (chord_mass(cell.s_hi) - chord_mass(cell.s_lo))
}

/// A `q x p` tensor grid of design points with cell weights.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignGrid {
    q: usize,
    p: usize,
    radial: Vec<f64>,
    angular: Vec<f64>,
    weights: Vec<f64>,
}

/// `p = round(ratio * q)`, at least 1.
pub fn angular_count(q: usize, ratio: f64) -> usize {
    (libm::round(ratio * q as f64) as usize).max(1)
}

/// Standard grid: `q` radial columns, `p = round(ratio q)` angular rows.
pub fn build_grid(q: usize, ratio: f64) -> Result<DesignGrid> {
    if q == 0 {
        return Err(Error::Invalid("q must be positive"));
    }
    if !(ratio.is_finite() && ratio > 0.0) || libm::round(ratio * q as f64) < 1.0 {
        return Err(Error::OutOfDomain {
            what: "ratio",
            value: ratio,
        });
    }
    let p = angular_count(q, ratio);
    let radial = (0..q)
        .map(|k1| radial_design_point(k1 as f64 / q as f64, (k1 + 1) as f64 / q as f64))
        .collect::<Result<Vec<_>>>()?;
    let angular = (0..p)
        .map(|k2| TAU * (k2 as f64 + 0.5) / p as f64)
        .collect();
    let mut weights = Vec::with_capacity(p * q);
    for k1 in 0..q {
        for k2 in 0..p {
            weights.push(cell_weight(&GridCell::of(q, p, k1, k2)));
        }
    }
    Ok(DesignGrid {
        q,
        p,
        radial,
        angular,
        weights,
    })
}

impl DesignGrid {
    /// Assembles a grid from explicit coordinates, e.g. when read back from a file.
    pub fn from_parts(radial: Vec<f64>, angular: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        let (q, p) = (radial.len(), angular.len());
        if q == 0 || p == 0 {
            return Err(Error::Invalid("grid must have at least one row and column"));
        }
        if weights.len() != p * q {
            return Err(Error::LengthMismatch {
                expected: p * q,
                found: weights.len(),
            });
        }
        if let Some(&s) = radial.iter().find(|s| !(0.0..=1.0).contains(*s)) {
            return Err(Error::OutOfDomain {
                what: "s",
                value: s,
            });
        }
        if let Some(&phi) = angular.iter().find(|a| !(0.0..=TAU).contains(*a)) {
            return Err(Error::OutOfDomain {
                what: "phi",
                value: phi,
            });
        }
        if let Some(&w) = weights.iter().find(|w| !(w.is_finite() && **w >= 0.0)) {
            return Err(Error::OutOfDomain {
                what: "weight",
                value: w,
            });
        }
        Ok(Self {
            q,
            p,
            radial,
            angular,
            weights,
        })
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn n(&self) -> usize {
        self.p * self.q
    }

    #[inline]
    pub fn linear_index(&self, k1: usize, k2: usize) -> usize {
        k1 * self.p + k2
    }

    /// `(k1, k2)` of linear index `k`.
    #[inline]
    pub fn split_index(&self, k: usize) -> (usize, usize) {
        (k / self.p, k % self.p)
    }

    /// Radial design coordinates, one per column.
    pub fn radial_nodes(&self) -> &[f64] {
        &self.radial
    }

    /// Angular design coordinates, one per row.
    pub fn angular_nodes(&self) -> &[f64] {
        &self.angular
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weight(&self, k: usize) -> f64 {
        self.weights[k]
    }

    pub fn point(&self, k: usize) -> DetectorPoint {
        let (k1, k2) = self.split_index(k);
        DetectorPoint {
            s: self.radial[k1],
            phi: self.angular[k2],
        }
    }

    pub fn points(&self) -> impl Iterator<Item = DetectorPoint> + '_ {
        (0..self.n()).map(|k| self.point(k))
    }

    pub fn cell(&self, k1: usize, k2: usize) -> GridCell {
        GridCell::of(self.q, self.p, k1, k2)
    }
}
