//! Test images given by their Zernike coefficients.

use std::f64::consts::TAU;

use radon_spectral::{BasisIndex, BrainPoint, CoefficientField, Complex64, Space, ZernikeBasis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::error::{SimError, SimResult};

/// `zeta(5/2)`: bounds the smoothness sum of a decaying phantom per unit amplitude.
pub const ZETA_FIVE_HALVES: f64 = 1.341_487_257_250_917;

/// Largest tolerated imaginary part of an `l = 0` coefficient.
const REAL_AXIS_TOLERANCE: f64 = 1e-14;

/// One coefficient `<g, phi_(l,m)>`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub l: i32,
    pub m: u32,
    pub re: f64,
    #[serde(default)]
    pub im: f64,
}

fn default_max_degree() -> u32 {
    20
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PhantomSpec {
    /// Explicit coefficients. Missing conjugate partners are filled in; given
    /// partners must already be conjugate.
    Finite { terms: Vec<Term> },
    /// `c(l,m) = A (m+1)^{-(v+3)} e^{i theta(l,m)}` for `m <= max_degree`,
    /// with seeded random phases (signs for `l = 0`).
    Decaying {
        v: f64,
        amplitude: f64,
        #[serde(default = "default_max_degree")]
        max_degree: u32,
        #[serde(default)]
        seed: u64,
    },
}

impl Default for PhantomSpec {
    fn default() -> Self {
        Self::Decaying {
            v: 5.0,
            amplitude: 1.0,
            max_degree: default_max_degree(),
            seed: 0,
        }
    }
}

impl PhantomSpec {
    /// A degree-2 image with every index of degree at most 2 present.
    pub fn degree_two() -> Self {
        let t = |l, m, re, im| Term { l, m, re, im };
        Self::Finite {
            terms: vec![
                t(0, 0, 1.0, 0.0),
                t(1, 1, 0.3, -0.2),
                t(0, 2, 0.5, 0.0),
                t(2, 2, 0.25, 0.1),
            ],
        }
    }

    pub fn build(&self) -> SimResult<Phantom> {
        match self {
            Self::Finite { terms } => finite(terms).map(|field| Phantom {
                spec: self.clone(),
                field,
                smoothness: None,
            }),
            Self::Decaying {
                v,
                amplitude,
                max_degree,
                seed,
            } => decaying(*v, *amplitude, *max_degree, *seed).map(|(field, smoothness)| Phantom {
                spec: self.clone(),
                field,
                smoothness: Some(smoothness),
            }),
        }
    }
}

fn finite(terms: &[Term]) -> SimResult<CoefficientField> {
    let mut field = CoefficientField::new(Space::Brain);
    for t in terms {
        let idx = BasisIndex::new(t.l, t.m)?;
        let c = Complex64::new(t.re, t.im);
        if !(c.re.is_finite() && c.im.is_finite()) {
            return Err(SimError::Config(format!(
                "coefficient ({}, {}) is not finite",
                t.l, t.m
            )));
        }
        if t.l == 0 && c.im.abs() > REAL_AXIS_TOLERANCE {
            return Err(SimError::Config(format!(
                "coefficient (0, {}) must be real",
                t.m
            )));
        }
        field.insert(idx, c);
    }
    for (idx, c) in field.clone().iter() {
        let partner = field.get(idx.mirror());
        if partner == Complex64::new(0.0, 0.0) {
            field.insert(idx.mirror(), c.conj());
        } else if (partner - c.conj()).norm() > REAL_AXIS_TOLERANCE * c.norm().max(1.0) {
            return Err(SimError::Config(format!(
                "coefficients ({}, {}) and ({}, {}) are not conjugate",
                idx.l(),
                idx.m(),
                -idx.l(),
                idx.m()
            )));
        }
    }
    Ok(field)
}

/// Smoothness report of a decaying phantom.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Smoothness {
    pub v: f64,
    /// `sum (m+1)^{v-1/2} |c(l,m)|` over the support.
    pub sum: f64,
    /// `A zeta(5/2)`, the value of the sum with infinitely many degrees.
    pub bound: f64,
}

fn decaying(
    v: f64,
    amplitude: f64,
    max_degree: u32,
    seed: u64,
) -> SimResult<(CoefficientField, Smoothness)> {
    if !(v.is_finite() && v >= 0.0) {
        return Err(SimError::Config(format!(
            "phantom smoothness v must be >= 0, got {v}"
        )));
    }
    if !(amplitude.is_finite() && amplitude >= 0.0) {
        return Err(SimError::Config(format!(
            "phantom amplitude must be >= 0, got {amplitude}"
        )));
    }
    let decay = v + 3.0;
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut field = CoefficientField::new(Space::Brain);
    let mut sum = 0.0;
    for m in 0..=max_degree {
        let size = amplitude * (f64::from(m) + 1.0).powf(-decay);
        for l in (m % 2..=m).step_by(2) {
            let idx = BasisIndex::new(l as i32, m)?;
            let c = if l == 0 {
                let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
                Complex64::new(sign * size, 0.0)
            } else {
                Complex64::from_polar(size, rng.random_range(0.0..TAU))
            };
            field.insert(idx, c);
            if l > 0 {
                field.insert(idx.mirror(), c.conj());
            }
        }
    }
    for (idx, c) in field.iter() {
        sum += (f64::from(idx.m()) + 1.0).powf(v - 0.5) * c.norm();
    }
    let report = Smoothness {
        v,
        sum,
        bound: amplitude * ZETA_FIVE_HALVES,
    };
    if report.sum > report.bound * (1.0 + 1e-12) {
        return Err(SimError::Config(format!(
            "smoothness sum {} exceeds its bound {}",
            report.sum, report.bound
        )));
    }
    Ok((field, report))
}

/// A built phantom: its brain-space coefficients plus provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct Phantom {
    spec: PhantomSpec,
    field: CoefficientField,
    smoothness: Option<Smoothness>,
}

impl Phantom {
    pub fn spec(&self) -> &PhantomSpec {
        &self.spec
    }

    pub fn field(&self) -> &CoefficientField {
        &self.field
    }

    pub fn smoothness(&self) -> Option<Smoothness> {
        self.smoothness
    }

    pub fn max_degree(&self) -> u32 {
        self.field.max_degree().unwrap_or(0)
    }

    pub fn label(&self) -> String {
        match &self.spec {
            PhantomSpec::Finite { terms } => format!("finite({} terms)", terms.len()),
            PhantomSpec::Decaying {
                v,
                amplitude,
                max_degree,
                seed,
            } => {
                format!("decaying(v={v},A={amplitude},M={max_degree},seed={seed})")
            }
        }
    }

    /// Real values `g(p)` at the given points.
    pub fn evaluate(&self, basis: &ZernikeBasis, points: &[BrainPoint]) -> SimResult<Vec<f64>> {
        Ok(radon_spectral::estimator::evaluate_real(
            &self.field,
            basis,
            points,
        )?)
    }
}
