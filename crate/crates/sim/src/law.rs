//! Error laws: the analytic side comes from the core crate's `ErrorLaw`,
//! sampling and quantiles from `rand_distr` / `statrs`.

use radon_spectral::empirical::{ErrorLaw, Gaussian, Uniform};
use rand::Rng;
use rand_distr::{Distribution, Normal, StudentT as TSampler};
use serde::{Deserialize, Serialize};
use statrs::distribution::{Continuous, ContinuousCDF, StudentsT};

use crate::error::{SimError, SimResult};

/// Serializable description of an error law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LawSpec {
    Gaussian {
        sigma: f64,
    },
    Uniform {
        a: f64,
        b: f64,
    },
    /// Location-zero Student t with `df > 3`, scaled by `scale`.
    StudentT {
        df: f64,
        scale: f64,
    },
    /// Degenerate at zero: noise-free data. Not usable for process diagnostics.
    Zero,
}

impl LawSpec {
    pub fn build(&self) -> SimResult<Law> {
        Ok(match *self {
            Self::Gaussian { sigma } => Law::Gaussian(Gaussian::new(sigma)?),
            Self::Uniform { a, b } => Law::Uniform(Uniform::new(a, b)?),
            Self::StudentT { df, scale } => Law::StudentT(StudentTLaw::new(df, scale)?),
            Self::Zero => Law::Zero,
        })
    }

    pub fn label(&self) -> String {
        match *self {
            Self::Gaussian { sigma } => format!("gaussian(sigma={sigma})"),
            Self::Uniform { a, b } => format!("uniform({a},{b})"),
            Self::StudentT { df, scale } => format!("student_t(df={df},scale={scale})"),
            Self::Zero => "zero".to_string(),
        }
    }
}

/// Student t with `df` degrees of freedom, scaled by `scale`.
#[derive(Debug, Clone)]
pub struct StudentTLaw {
    df: f64,
    scale: f64,
    dist: StudentsT,
}

impl StudentTLaw {
    pub fn new(df: f64, scale: f64) -> SimResult<Self> {
        // A finite third moment is needed by the residual-process theory.
        if !(df > 3.0 && df.is_finite()) {
            return Err(SimError::Config(format!(
                "student_t needs df > 3, got {df}"
            )));
        }
        let dist = StudentsT::new(0.0, scale, df)
            .map_err(|e| SimError::Config(format!("student_t: {e}")))?;
        Ok(Self { df, scale, dist })
    }
}

impl ErrorLaw for StudentTLaw {
    fn cdf(&self, t: f64) -> f64 {
        self.dist.cdf(t)
    }

    fn density(&self, t: f64) -> f64 {
        self.dist.pdf(t)
    }

    /// `-scale^2 (df + u^2) / (df - 1) f(t)` with `u = t / scale`.
    fn partial_mean(&self, t: f64) -> f64 {
        let u = t / self.scale;
        -self.scale * self.scale * (self.df + u * u) / (self.df - 1.0) * self.density(t)
    }

    fn variance(&self) -> f64 {
        self.scale * self.scale * self.df / (self.df - 2.0)
    }
}

/// A concrete law ready for sampling and for the process diagnostics.
#[derive(Debug, Clone)]
pub enum Law {
    Gaussian(Gaussian),
    Uniform(Uniform),
    StudentT(StudentTLaw),
    Zero,
}

impl Law {
    /// Fills `out` with iid draws.
    pub fn fill<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        match self {
            Self::Gaussian(g) => {
                let d = Normal::new(0.0, g.sigma()).expect("sigma validated");
                out.iter_mut().for_each(|e| *e = d.sample(rng));
            }
            Self::Uniform(u) => {
                let a = u.half_width();
                let d = rand_distr::Uniform::new_inclusive(-a, a).expect("a validated");
                out.iter_mut().for_each(|e| *e = d.sample(rng));
            }
            Self::StudentT(t) => {
                let d = TSampler::new(t.df).expect("df validated");
                out.iter_mut().for_each(|e| *e = t.scale * d.sample(rng));
            }
            Self::Zero => out.iter_mut().for_each(|e| *e = 0.0),
        }
    }

    pub fn is_degenerate(&self) -> bool {
        matches!(self, Self::Zero)
    }

    pub fn quantile(&self, prob: f64) -> SimResult<f64> {
        if !(0.0..=1.0).contains(&prob) {
            return Err(SimError::Config(format!(
                "quantile level {prob} outside [0,1]"
            )));
        }
        Ok(match self {
            Self::Gaussian(g) => statrs::distribution::Normal::new(0.0, g.sigma())
                .expect("sigma validated")
                .inverse_cdf(prob),
            Self::Uniform(u) => u.half_width() * (2.0 * prob - 1.0),
            Self::StudentT(t) => t.dist.inverse_cdf(prob),
            Self::Zero => 0.0,
        })
    }

    /// The law as an [`ErrorLaw`], rejecting the degenerate law.
    pub fn as_error_law(&self) -> SimResult<&(dyn ErrorLaw + Sync)> {
        match self {
            Self::Gaussian(g) => Ok(g),
            Self::Uniform(u) => Ok(u),
            Self::StudentT(t) => Ok(t),
            Self::Zero => Err(SimError::Config(
                "the zero law has no density; residual diagnostics need a continuous law".into(),
            )),
        }
    }
}

/// `points` equispaced values between the `lo` and `hi` quantiles.
pub fn quantile_grid(law: &Law, points: usize, lo: f64, hi: f64) -> SimResult<Vec<f64>> {
    if law.is_degenerate() {
        return Err(SimError::Config("t-grid needs a non-degenerate law".into()));
    }
    if points < 2 || !(lo < hi) {
        return Err(SimError::Config(
            "t-grid needs at least 2 points and lo < hi".into(),
        ));
    }
    let (a, b) = (law.quantile(lo)?, law.quantile(hi)?);
    Ok((0..points)
        .map(|k| a + (b - a) * k as f64 / (points - 1) as f64)
        .collect())
}

/// 41 points spanning the 0.5% to 99.5% quantiles.
pub fn default_t_grid(law: &Law) -> SimResult<Vec<f64>> {
    quantile_grid(law, 41, 0.005, 0.995)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    #[test]
    fn student_t_partial_mean_matches_numeric_integral() {
        let law = StudentTLaw::new(5.0, 0.7).unwrap();
        // Midpoint rule on a wide interval; the tail beyond -60 is negligible.
        for t in [-2.0, -0.3, 0.0, 1.1] {
            let (a, steps) = (-60.0, 400_000);
            let h = (t - a) / steps as f64;
            let num: f64 = (0..steps)
                .map(|k| {
                    let x = a + (k as f64 + 0.5) * h;
                    x * law.density(x) * h
                })
                .sum();
            assert_abs_diff_eq!(law.partial_mean(t), num, epsilon = 1e-6);
        }
        assert_abs_diff_eq!(law.variance(), 0.49 * 5.0 / 3.0, epsilon = 1e-15);
    }

    #[test]
    fn student_t_needs_three_moments() {
        assert!(LawSpec::StudentT {
            df: 3.0,
            scale: 1.0
        }
        .build()
        .is_err());
        assert!(LawSpec::StudentT {
            df: 3.5,
            scale: 1.0
        }
        .build()
        .is_ok());
    }

    #[test]
    fn quantile_grid_spans_the_bulk() {
        let law = LawSpec::Gaussian { sigma: 2.0 }.build().unwrap();
        let g = default_t_grid(&law).unwrap();
        assert_eq!(g.len(), 41);
        assert_abs_diff_eq!(g[0], -2.0 * 2.5758293035489, epsilon = 1e-9);
        assert_abs_diff_eq!(g[20], 0.0, epsilon = 1e-12);
        let u = LawSpec::Uniform { a: -1.0, b: 1.0 }.build().unwrap();
        let g = default_t_grid(&u).unwrap();
        assert!(g[0] > -1.0 && g[40] < 1.0);
        assert!(default_t_grid(&Law::Zero).is_err());
    }

    #[test]
    fn sampling_is_seeded() {
        let law = LawSpec::StudentT {
            df: 6.0,
            scale: 1.0,
        }
        .build()
        .unwrap();
        let draw = |seed| {
            let mut out = vec![0.0; 8];
            law.fill(&mut ChaCha20Rng::seed_from_u64(seed), &mut out);
            out
        };
        assert_eq!(draw(3), draw(3));
        assert_ne!(draw(3), draw(4));
    }

    #[test]
    fn spec_round_trips_through_json() {
        for spec in [
            LawSpec::Gaussian { sigma: 0.5 },
            LawSpec::Uniform { a: -1.0, b: 1.0 },
            LawSpec::StudentT {
                df: 5.0,
                scale: 2.0,
            },
            LawSpec::Zero,
        ] {
            let s = serde_json::to_string(&spec).unwrap();
            assert_eq!(serde_json::from_str::<LawSpec>(&s).unwrap(), spec);
        }
    }
}
