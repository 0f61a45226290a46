//! Zernike functions on the unit disc and Chebyshev-U functions on the
//! detector space: the singular functions of the normalized Radon transform.
//!
//! Radial polynomials are evaluated with the three-term recurrence
//!
//! ```text
//! R_n^a(r) = r (R_{n-1}^{|a-1|}(r) + R_{n-1}^{a+1}(r)) - R_{n-2}^a(r),   R_n^a = 0 for a > n,
//! ```
//!
//! which stays accurate at high degree where the alternating factorial sum
//! cancels catastrophically. Derivatives come from the lowering identity
//!
//! ```text
//! d/dr R_m^{|l|} = sum_j (m - 2j) R_{m-1-2j}^{|l-1|} + sum_j (m - 2j) R_{m-1-2j}^{|l+1|}
//! ```
//!
//! applied order by order to a whole triangle of values at one radius.

use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::f64::consts::TAU;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::math::sqrt;

pub const DEFAULT_DEGREE_CAP: u32 = 50;
pub const DEFAULT_MAX_ORDER: u32 = 4;

/// A pair `(l, m)` with `|l| <= m` and `m - |l|` even.
///
/// Ordered by `(m, l)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BasisIndex {
    l: i32,
    m: u32,
}

impl BasisIndex {
    pub fn new(l: i32, m: u32) -> Result<Self> {
        if Self::is_valid(l, m) {
            Ok(Self { l, m })
        } else {
            Err(Error::InvalidIndex { l, m })
        }
    }

    pub fn is_valid(l: i32, m: u32) -> bool {
        let a = l.unsigned_abs();
        a <= m && (m - a).is_multiple_of(2)
    }

    #[inline]
    pub fn l(self) -> i32 {
        self.l
    }

    #[inline]
    pub fn m(self) -> u32 {
        self.m
    }

    #[inline]
    pub fn abs_l(self) -> u32 {
        self.l.unsigned_abs()
    }

    /// The index `(-l, m)` of the conjugate partner.
    #[inline]
    pub fn mirror(self) -> Self {
        Self {
            l: -self.l,
            m: self.m,
        }
    }
}

impl PartialOrd for BasisIndex {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for BasisIndex {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.m, self.l).cmp(&(other.m, other.l))
    }
}

/// Polar point `(r, theta)` in the unit disc.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BrainPoint {
    pub r: f64,
    pub theta: f64,
}

impl BrainPoint {
    pub fn new(r: f64, theta: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&r) {
            return Err(Error::OutOfDomain {
                what: "r",
                value: r,
            });
        }
        if !(0.0..=TAU).contains(&theta) {
            return Err(Error::OutOfDomain {
                what: "theta",
                value: theta,
            });
        }
        Ok(Self { r, theta })
    }
}

/// Chord coordinates `(s, phi)`: distance from the origin and inclination.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectorPoint {
    pub s: f64,
    pub phi: f64,
}

impl DetectorPoint {
    pub fn new(s: f64, phi: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&s) {
            return Err(Error::OutOfDomain {
                what: "s",
                value: s,
            });
        }
        if !(0.0..=TAU).contains(&phi) {
            return Err(Error::OutOfDomain {
                what: "phi",
                value: phi,
            });
        }
        Ok(Self { s, phi })
    }
}

/// All indices with `m <= max_degree`, sorted by `(m, l)`.
pub fn index_set(max_degree: u32) -> Vec<BasisIndex> {
    let mut out = Vec::with_capacity(index_count(max_degree));
    for m in 0..=max_degree {
        let mut l = -(m as i32);
        while l <= m as i32 {
            out.push(BasisIndex { l, m });
            l += 2;
        }
    }
    out
}

pub fn index_count(max_degree: u32) -> usize {
    let n = max_degree as usize;
    (n + 1) * (n + 2) / 2
}

#[inline]
fn slot(m: u32, a: u32) -> usize {
    let m = m as usize;
    m * (m + 1) / 2 + a as usize
}

/// `R_n^a(r)` (or one of its derivatives) for every `n <= max_degree` at a fixed `r`.
#[derive(Debug, Clone)]
pub struct RadialValues {
    max_degree: u32,
    values: Vec<f64>,
}

impl RadialValues {
    /// Zero for `a > n` or `n - a` odd.
    #[inline]
    pub fn get(&self, n: u32, a: u32) -> f64 {
        if a > n || n > self.max_degree {
            0.0
        } else {
            self.values[slot(n, a)]
        }
    }

    pub fn max_degree(&self) -> u32 {
        self.max_degree
    }

    fn zeros(max_degree: u32) -> Self {
        Self {
            max_degree,
            values: vec![0.0; slot(max_degree, max_degree) + 1],
        }
    }

    fn at(max_degree: u32, r: f64) -> Self {
        let mut out = Self::zeros(max_degree);
        for n in 0..=max_degree {
            for a in (n % 2..=n).step_by(2) {
                let v = if n == 0 {
                    1.0
                } else {
                    let lower = if n >= 2 { out.get(n - 2, a) } else { 0.0 };
                    r * (out.get(n - 1, a.abs_diff(1)) + out.get(n - 1, a + 1)) - lower
                };
                out.values[slot(n, a)] = v;
            }
        }
        out
    }

    /// One derivative level up, via the lowering identity.
    fn differentiate(&self) -> Self {
        let max = self.max_degree;
        let mut out = Self::zeros(max);
        // prefix[slot(n, b)] = sum over n' = n, n-2, ..., >= b of (n'+1) * value(n', b).
        let mut prefix = vec![0.0; self.values.len()];
        for n in 0..=max {
            for b in (n % 2..=n).step_by(2) {
                let below = if n >= b + 2 {
                    prefix[slot(n - 2, b)]
                } else {
                    0.0
                };
                prefix[slot(n, b)] = below + f64::from(n + 1) * self.values[slot(n, b)];
            }
        }
        for m in 1..=max {
            for a in (m % 2..=m).step_by(2) {
                let mut acc = 0.0;
                for b in [a.abs_diff(1), a + 1] {
                    if b < m {
                        acc += prefix[slot(m - 1, b)];
                    }
                }
                out.values[slot(m, a)] = acc;
            }
        }
        out
    }
}

/// Degree cap and derivative-order cap shared by everything downstream.
///
/// Immutable after construction; share it freely across threads.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ZernikeBasis {
    cap: u32,
    max_order: u32,
}

impl Default for ZernikeBasis {
    fn default() -> Self {
        Self {
            cap: DEFAULT_DEGREE_CAP,
            max_order: DEFAULT_MAX_ORDER,
        }
    }
}

impl ZernikeBasis {
    pub fn new(cap: u32, max_order: u32) -> Result<Self> {
        Ok(Self { cap, max_order })
    }

    pub fn degree_cap(&self) -> u32 {
        self.cap
    }

    pub fn max_order(&self) -> u32 {
        self.max_order
    }

    pub(crate) fn check_degree(&self, m: u32) -> Result<()> {
        if m > self.cap {
            Err(Error::DegreeCap {
                degree: m,
                cap: self.cap,
            })
        } else {
            Ok(())
        }
    }

    fn check_order(&self, order: u32) -> Result<()> {
        if order > self.max_order {
            Err(Error::OrderCap {
                order,
                max: self.max_order,
            })
        } else {
            Ok(())
        }
    }

    /// All radial polynomials up to `max_degree` at `r`.
    pub fn radial_values(&self, max_degree: u32, r: f64) -> Result<RadialValues> {
        self.check_degree(max_degree)?;
        Ok(RadialValues::at(max_degree, r))
    }

    /// All `order`-th radial derivatives up to `max_degree` at `r`.
    pub fn radial_derivative_values(
        &self,
        max_degree: u32,
        order: u32,
        r: f64,
    ) -> Result<RadialValues> {
        self.check_degree(max_degree)?;
        self.check_order(order)?;
        let mut table = RadialValues::at(max_degree, r);
        for _ in 0..order {
            table = table.differentiate();
        }
        Ok(table)
    }

    /// Radial polynomial `R_m^{|l|}(r)`.
    pub fn radial_poly(&self, idx: BasisIndex, r: f64) -> Result<f64> {
        Ok(self.radial_values(idx.m, r)?.get(idx.m, idx.abs_l()))
    }

    /// `order`-th derivative of `R_m^{|l|}` at `r`.
    pub fn radial_poly_derivative(&self, idx: BasisIndex, order: u32, r: f64) -> Result<f64> {
        Ok(self
            .radial_derivative_values(idx.m, order, r)?
            .get(idx.m, idx.abs_l()))
    }

    /// Zernike function `sqrt(m+1) R_m^{|l|}(r) e^{i l theta}`.
    pub fn zernike_phi(&self, idx: BasisIndex, p: BrainPoint) -> Result<Complex64> {
        let radial = self.radial_poly(idx, p.r)?;
        Ok(zernike_from_radial(idx, radial, p.theta))
    }

    /// Total variant of [`zernike_phi`](Self::zernike_phi): zero off the index set.
    pub fn zernike_phi_or_zero(&self, l: i32, m: u32, p: BrainPoint) -> Result<Complex64> {
        match BasisIndex::new(l, m) {
            Ok(idx) => self.zernike_phi(idx, p),
            Err(_) => Ok(Complex64::new(0.0, 0.0)),
        }
    }
}

/// `sqrt(m+1) radial e^{i l theta}`.
#[inline]
pub fn zernike_from_radial(idx: BasisIndex, radial: f64, theta: f64) -> Complex64 {
    Complex64::from_polar(
        sqrt(f64::from(idx.m) + 1.0) * radial,
        f64::from(idx.l) * theta,
    )
}

/// Chebyshev polynomial of the second kind `U_m(s)`.
pub fn chebyshev_u(m: u32, s: f64) -> f64 {
    let (mut prev, mut cur) = (1.0, 2.0 * s);
    if m == 0 {
        return prev;
    }
    for _ in 1..m {
        let next = 2.0 * s * cur - prev;
        prev = cur;
        cur = next;
    }
    cur
}

/// Chebyshev polynomial of the first kind `T_m(s)`.
pub fn chebyshev_t(m: u32, s: f64) -> f64 {
    let (mut prev, mut cur) = (1.0, s);
    if m == 0 {
        return prev;
    }
    for _ in 1..m {
        let next = 2.0 * s * cur - prev;
        prev = cur;
        cur = next;
    }
    cur
}

/// `U_0(s), ..., U_m(s)`.
pub fn chebyshev_u_all(m: u32, s: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(m as usize + 1);
    out.push(1.0);
    if m >= 1 {
        out.push(2.0 * s);
    }
    for k in 2..=m as usize {
        let next = 2.0 * s * out[k - 1] - out[k - 2];
        out.push(next);
    }
    out
}

fn chebyshev_t_all(m: u32, s: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(m as usize + 1);
    out.push(1.0);
    if m >= 1 {
        out.push(s);
    }
    for k in 2..=m as usize {
        let next = 2.0 * s * out[k - 1] - out[k - 2];
        out.push(next);
    }
    out
}

/// `order`-th derivative of `U_m` at `s`.
///
/// Uses `U_m' = sum' ((m+1)^2 - j^2) T_j` over `j <= m-1` with `m-1-j` even
/// (the `j = 0` term halved), and `T_j' = j U_{j-1}`, level by level.
pub fn chebyshev_u_derivative(m: u32, order: u32, s: f64) -> f64 {
    let mut u = chebyshev_u_all(m, s);
    if order == 0 {
        return u[m as usize];
    }
    let mut t = chebyshev_t_all(m, s);
    for _ in 0..order {
        // Both vectors hold the previous derivative level for degrees 0..=m.
        let mut du = vec![0.0; m as usize + 1];
        for (k, slot) in du.iter_mut().enumerate().skip(1) {
            let kp1 = (k + 1) as f64;
            let mut acc = 0.0;
            let mut j = k as i64 - 1;
            while j >= 0 {
                let jf = j as f64;
                let c = kp1 * kp1 - jf * jf;
                acc += if j == 0 { 0.5 * c } else { c } * t[j as usize];
                j -= 2;
            }
            *slot = acc;
        }
        let mut dt = vec![0.0; m as usize + 1];
        for (k, slot) in dt.iter_mut().enumerate().skip(1) {
            *slot = k as f64 * u[k - 1];
        }
        u = du;
        t = dt;
    }
    u[m as usize]
}

/// Detector function `U_m(s) e^{i l phi}`.
pub fn psi(idx: BasisIndex, d: DetectorPoint) -> Complex64 {
    Complex64::from_polar(chebyshev_u(idx.m, d.s), f64::from(idx.l) * d.phi)
}

/// Total variant of [`psi`]: zero off the index set.
pub fn psi_or_zero(l: i32, m: u32, d: DetectorPoint) -> Complex64 {
    BasisIndex::new(l, m).map_or(Complex64::new(0.0, 0.0), |idx| psi(idx, d))
}
