//! Monte Carlo studies: sup-error rates, the linearization gap and the
//! covariance of the residual process.
//!
//! Replications run in a rayon parallel map. Results are collected in
//! replication order and reduced sequentially, so every number written out
//! is independent of the thread count.

use radon_spectral::basis::BrainPoint;
use radon_spectral::design::build_grid;
use radon_spectral::empirical::{
    covariance_kernel, covariance_kernel_scaled, design_normalization, linearization_gap, process,
    residuals, ErrorLaw, LIMIT_NORMALIZATION,
};
use radon_spectral::estimator::{
    detector_error_field, ellipsoid_norm, estimate_coefficients, evaluate_real, radon_trace,
    spectral_estimate,
};
use radon_spectral::{CoefficientField, FilterSpec, SinogramData, ZernikeBasis};
use rayon::prelude::*;
use serde::Serialize;
use statrs::statistics::{Data, OrderStatistics};

use crate::config::{Bandwidth, ExperimentConfig};
use crate::error::{SimError, SimResult};
use crate::io::{ProcessRow, RateRow};
use crate::law::LawSpec;
use crate::phantom::Phantom;
use crate::simulate::{replication_seed, Simulator, RNG_NAME};

/// Exponent `tau` of the detector-side diagnostic `sum m^tau |<R(g - ghat), psi>|`.
pub const ELLIPSOID_TAU: f64 = 1.0;

/// Median and interquartile range.
pub fn median_iqr(values: &[f64]) -> (f64, f64) {
    let mut data = Data::new(values.to_vec());
    let median = data.median();
    (median, data.upper_quartile() - data.lower_quartile())
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn log_log_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let k = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / k, ly.iter().sum::<f64>() / k);
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

/// Sup-norm distance to a known image on a fixed point set.
#[derive(Debug, Clone)]
pub struct SupError {
    basis: ZernikeBasis,
    points: Vec<BrainPoint>,
    truth: Vec<f64>,
}

impl SupError {
    pub fn new(phantom: &Phantom, basis: ZernikeBasis, points: Vec<BrainPoint>) -> SimResult<Self> {
        let truth = phantom.evaluate(&basis, &points)?;
        Ok(Self {
            basis,
            points,
            truth,
        })
    }

    pub fn points(&self) -> &[BrainPoint] {
        &self.points
    }

    pub fn truth(&self) -> &[f64] {
        &self.truth
    }

    /// `max_p |ghat(p) - g(p)|` for a brain-space estimate.
    pub fn of_field(&self, estimate: &CoefficientField) -> SimResult<f64> {
        let values = evaluate_real(estimate, &self.basis, &self.points)?;
        Ok(self.of_values(&values))
    }

    fn of_values(&self, values: &[f64]) -> f64 {
        values
            .iter()
            .zip(&self.truth)
            .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()))
    }

    /// Bandwidth in `[1, max_t]` with the smallest sup error, and that error.
    ///
    /// Uses the per-degree split `ghat_t(p) = sum_m Lambda(m/t) S_m(p)`, so
    /// each candidate costs one weighted sum per point.
    pub fn oracle(
        &self,
        data: &SinogramData,
        filter: FilterSpec,
        max_t: u32,
    ) -> SimResult<(u32, f64)> {
        let reach = (filter.support() * f64::from(max_t)).floor();
        let max_m = if reach.is_finite() {
            (reach.max(0.0) as u32).min(self.basis.degree_cap())
        } else {
            self.basis.degree_cap()
        };
        let rhat = estimate_coefficients(data, max_m);
        let profile = self.degree_profile(&rhat, max_m)?;
        let mut best = (1, f64::INFINITY);
        for t in 1..=max_t {
            let lambdas: Vec<f64> = (0..=max_m)
                .map(|m| filter.weight(f64::from(m) / f64::from(t)))
                .collect();
            let err = profile
                .iter()
                .zip(&self.truth)
                .map(|(s, g)| (s.iter().zip(&lambdas).map(|(a, l)| a * l).sum::<f64>() - g).abs())
                .fold(0.0_f64, f64::max);
            if err < best.1 {
                best = (t, err);
            }
        }
        Ok(best)
    }

    /// `S_m(p) = Re sum_l (m+1) Rhat(l,m) R_m^{|l|}(r) e^{il theta}` for every point.
    fn degree_profile(&self, rhat: &CoefficientField, max_m: u32) -> SimResult<Vec<Vec<f64>>> {
        let mut out = Vec::with_capacity(self.points.len());
        let mut cached: Option<(f64, radon_spectral::basis::RadialValues)> = None;
        for p in &self.points {
            if cached.as_ref().is_none_or(|(r, _)| *r != p.r) {
                cached = Some((p.r, self.basis.radial_values(max_m, p.r)?));
            }
            let radial = &cached.as_ref().expect("just filled").1;
            let mut row = vec![0.0; max_m as usize + 1];
            for (idx, c) in rhat.iter() {
                let m = idx.m();
                let phase = f64::from(idx.l()) * p.theta;
                let re = c.re * phase.cos() - c.im * phase.sin();
                row[m as usize] += (f64::from(m) + 1.0) * radial.get(m, idx.abs_l()) * re;
            }
            out.push(row);
        }
        Ok(out)
    }
}

/// The single bandwidth used for `n` observations; the oracle is rejected.
pub fn fixed_bandwidth(cfg: &ExperimentConfig, n: usize) -> SimResult<u32> {
    match cfg.bandwidth(n)? {
        Bandwidth::Fixed(t) => Ok(t),
        Bandwidth::Oracle => Err(SimError::Config(
            "t = \"oracle\" needs a known phantom and is only available in rate-study".into(),
        )),
    }
}

/// Reconstruction of observed data with the configured bandwidth.
pub fn reconstruct(
    data: &SinogramData,
    cfg: &ExperimentConfig,
) -> SimResult<(u32, CoefficientField)> {
    let t = fixed_bandwidth(cfg, data.grid().n())?;
    let field = spectral_estimate(data, t, cfg.filter_spec(), &cfg.basis()?)?;
    Ok((t, field))
}

#[derive(Debug, Clone, Serialize)]
pub struct RateLevel {
    pub row: RateRow,
    /// Median of the detector-side diagnostic `sum m^tau |<R(g - ghat), psi>|`.
    pub median_ellipsoid_norm: f64,
    /// Oracle bandwidths per replication, when the oracle is used.
    pub oracle_t: Option<Vec<u32>>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RateStudy {
    pub rng: String,
    pub base_seed: u64,
    pub replications: usize,
    pub law: LawSpec,
    pub phantom: String,
    pub levels: Vec<RateLevel>,
    /// Least-squares slope of `ln median_sup_error` against `ln n`.
    pub slope: f64,
    /// The theoretical sup-norm exponent `(v-1)/(2(v+3))` for comparison.
    pub rate_exponent: f64,
}

impl RateStudy {
    pub fn rows(&self) -> Vec<RateRow> {
        self.levels.iter().map(|l| l.row).collect()
    }
}

/// Median sup error over replications for every `q` in the configuration.
pub fn rate_study(cfg: &ExperimentConfig) -> SimResult<RateStudy> {
    let phantom = cfg.phantom.build()?;
    let basis = cfg.basis()?;
    let filter = cfg.filter_spec();
    let sup = SupError::new(&phantom, basis, cfg.eval_grid.points()?)?;
    let mut levels = Vec::with_capacity(cfg.q_list.len());
    for &q in &cfg.q_list {
        let sim = Simulator::new(&phantom, build_grid(q, cfg.ratio)?, &cfg.law)?;
        let n = sim.grid().n();
        let bandwidth = cfg.bandwidth(n)?;
        let per_rep: Vec<(f64, f64, u32)> = (0..cfg.replications as u64)
            .into_par_iter()
            .map(|rep| -> SimResult<(f64, f64, u32)> {
                let data = sim.draw(replication_seed(cfg.base_seed, rep))?.data;
                let t = match bandwidth {
                    Bandwidth::Fixed(t) => t,
                    Bandwidth::Oracle => sup.oracle(&data, filter, cfg.degree_cap)?.0,
                };
                let est = spectral_estimate(&data, t, filter, &basis)?;
                let err = sup.of_field(&est)?;
                let diag =
                    ellipsoid_norm(&detector_error_field(phantom.field(), &est)?, ELLIPSOID_TAU);
                Ok((err, diag, t))
            })
            .collect::<SimResult<_>>()?;
        let errors: Vec<f64> = per_rep.iter().map(|r| r.0).collect();
        let diags: Vec<f64> = per_rep.iter().map(|r| r.1).collect();
        let (median, iqr) = median_iqr(&errors);
        let (t, oracle_t) = match bandwidth {
            Bandwidth::Fixed(t) => (t, None),
            Bandwidth::Oracle => (0, Some(per_rep.iter().map(|r| r.2).collect())),
        };
        levels.push(RateLevel {
            row: RateRow {
                q,
                n,
                t,
                median_sup_error: median,
                iqr,
            },
            median_ellipsoid_norm: median_iqr(&diags).0,
            oracle_t,
        });
    }
    let ns: Vec<f64> = levels.iter().map(|l| l.row.n as f64).collect();
    let meds: Vec<f64> = levels.iter().map(|l| l.row.median_sup_error).collect();
    let slope = if levels.len() >= 2 {
        log_log_slope(&ns, &meds)
    } else {
        f64::NAN
    };
    Ok(RateStudy {
        rng: RNG_NAME.to_string(),
        base_seed: cfg.base_seed,
        replications: cfg.replications,
        law: cfg.law,
        phantom: phantom.label(),
        levels,
        slope,
        rate_exponent: (cfg.v - 1.0) / (2.0 * (cfg.v + 3.0)),
    })
}

/// Residuals, residual process and (when the errors are known) linearization
/// gap of one data set.
pub fn residual_process(
    data: &SinogramData,
    errors: Option<&[f64]>,
    cfg: &ExperimentConfig,
    law: &dyn ErrorLaw,
    t_grid: &[f64],
) -> SimResult<(u32, Vec<ProcessRow>)> {
    let (t, field) = reconstruct(data, cfg)?;
    let trace = radon_trace(&field, data.grid())?;
    let res = residuals(data, &trace)?;
    let w = data.grid().weights();
    let mut eval = process(&res, w, data.grid().n(), law, t_grid)?;
    if errors.is_some() {
        eval.lin_gap = Some(linearization_gap(&res, errors, w, law, t_grid)?);
    }
    let rows = (0..t_grid.len())
        .map(|i| ProcessRow {
            t: eval.t_grid[i],
            f_hat: eval.f_hat[i],
            process: eval.process[i],
            lin_gap: eval.lin_gap.as_ref().map(|g| g[i]),
            sigma_kernel_diag: covariance_kernel(t_grid[i], t_grid[i], law),
        })
        .collect();
    Ok((t, rows))
}

#[derive(Debug, Clone, Serialize)]
pub struct LinearizationLevel {
    pub q: usize,
    pub n: usize,
    pub t: u32,
    /// Median over replications of `sqrt(n) sup_t |gap(t)|`.
    pub median_scaled_gap: f64,
    pub iqr: f64,
}

/// `sqrt(n) sup_t |gap|` across replications for every `q` in the configuration.
pub fn linearization_study(cfg: &ExperimentConfig) -> SimResult<Vec<LinearizationLevel>> {
    let phantom = cfg.phantom.build()?;
    let law = cfg.law.build()?;
    let analytic = law.as_error_law()?;
    let t_grid = cfg.t_grid.resolve(&law)?;
    let basis = cfg.basis()?;
    let filter = cfg.filter_spec();
    let mut out = Vec::with_capacity(cfg.q_list.len());
    for &q in &cfg.q_list {
        let sim = Simulator::new(&phantom, build_grid(q, cfg.ratio)?, &cfg.law)?;
        let n = sim.grid().n();
        let t = fixed_bandwidth(cfg, n)?;
        let gaps: Vec<f64> = (0..cfg.replications as u64)
            .into_par_iter()
            .map(|rep| -> SimResult<f64> {
                let s = sim.draw(replication_seed(cfg.base_seed, rep))?;
                let trace =
                    radon_trace(&spectral_estimate(&s.data, t, filter, &basis)?, sim.grid())?;
                let res = residuals(&s.data, &trace)?;
                let gap = linearization_gap(
                    &res,
                    Some(&s.errors),
                    sim.grid().weights(),
                    analytic,
                    &t_grid,
                )?;
                Ok((n as f64).sqrt() * gap.iter().fold(0.0_f64, |m, g| m.max(g.abs())))
            })
            .collect::<SimResult<_>>()?;
        let (median, iqr) = median_iqr(&gaps);
        out.push(LinearizationLevel {
            q,
            n,
            t,
            median_scaled_gap: median,
            iqr,
        });
    }
    Ok(out)
}

/// Empirical versus theoretical covariance of the residual process.
#[derive(Debug, Clone, Serialize)]
pub struct CovarianceReport {
    pub rng: String,
    pub base_seed: u64,
    pub replications: usize,
    pub q: usize,
    pub p: usize,
    pub n: usize,
    pub t: u32,
    pub law: LawSpec,
    pub phantom: String,
    pub t_grid: Vec<f64>,
    /// Sample covariance (divisor `R - 1`) of `sqrt(n)(Fhat - F)`.
    pub empirical: Vec<Vec<f64>>,
    /// Monte Carlo standard error of each sample covariance entry.
    pub mc_standard_error: Vec<Vec<f64>>,
    /// Kernel with the limit normalization `8 pi^2 / 3`.
    pub kernel_limit: Vec<Vec<f64>>,
    /// Kernel normalized by this grid's `n sum w_k^2`.
    pub kernel_design: Vec<Vec<f64>>,
    pub limit_normalization: f64,
    pub design_normalization: f64,
    /// Entrywise `|empirical - kernel| <= max(0.15 |kernel|, 3 se)`.
    pub limit_match: bool,
    pub design_match: bool,
    /// Largest `|empirical - kernel| / tolerance`; at most 1 on a match.
    pub limit_worst_ratio: f64,
    pub design_worst_ratio: f64,
    pub kernel_symmetric: bool,
    pub kernel_min_eigenvalue: f64,
}

/// Relative part of the entrywise tolerance.
pub const COVARIANCE_RELATIVE_TOLERANCE: f64 = 0.15;
/// Standard-error multiple of the entrywise tolerance.
pub const COVARIANCE_SE_MULTIPLE: f64 = 3.0;

fn worst_ratio(emp: &[Vec<f64>], kernel: &[Vec<f64>], se: &[Vec<f64>]) -> f64 {
    let mut worst = 0.0_f64;
    for i in 0..emp.len() {
        for j in 0..emp.len() {
            let tol = (COVARIANCE_RELATIVE_TOLERANCE * kernel[i][j].abs())
                .max(COVARIANCE_SE_MULTIPLE * se[i][j]);
            worst = worst.max((emp[i][j] - kernel[i][j]).abs() / tol);
        }
    }
    worst
}

/// Smallest eigenvalue of a symmetric matrix.
pub fn min_eigenvalue(m: &[Vec<f64>]) -> f64 {
    let k = m.len();
    let flat: Vec<f64> = m.iter().flatten().copied().collect();
    nalgebra::DMatrix::from_row_slice(k, k, &flat)
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

/// `[kernel(t_i, t_j)]`.
pub fn kernel_matrix<F: Fn(f64, f64) -> f64>(t_grid: &[f64], kernel: F) -> Vec<Vec<f64>> {
    t_grid
        .iter()
        .map(|&a| t_grid.iter().map(|&b| kernel(a, b)).collect())
        .collect()
}

pub fn covariance_study(cfg: &ExperimentConfig) -> SimResult<CovarianceReport> {
    let phantom = cfg.phantom.build()?;
    let law = cfg.law.build()?;
    let analytic = law.as_error_law()?;
    let t_grid = cfg.covariance_t_grid.resolve(&law)?;
    let basis = cfg.basis()?;
    let filter = cfg.filter_spec();
    let sim = Simulator::new(&phantom, build_grid(cfg.q, cfg.ratio)?, &cfg.law)?;
    let n = sim.grid().n();
    let t = fixed_bandwidth(cfg, n)?;
    let samples: Vec<Vec<f64>> = (0..cfg.replications as u64)
        .into_par_iter()
        .map(|rep| -> SimResult<Vec<f64>> {
            let s = sim.draw(replication_seed(cfg.base_seed, rep))?;
            let trace = radon_trace(&spectral_estimate(&s.data, t, filter, &basis)?, sim.grid())?;
            let res = residuals(&s.data, &trace)?;
            Ok(process(&res, sim.grid().weights(), n, analytic, &t_grid)?.process)
        })
        .collect::<SimResult<_>>()?;

    let k = t_grid.len();
    let reps = samples.len() as f64;
    let mut mean = vec![0.0; k];
    for s in &samples {
        for (m, v) in mean.iter_mut().zip(s) {
            *m += v / reps;
        }
    }
    let mut empirical = vec![vec![0.0; k]; k];
    let mut se = vec![vec![0.0; k]; k];
    for i in 0..k {
        for j in 0..k {
            let prods: Vec<f64> = samples
                .iter()
                .map(|s| (s[i] - mean[i]) * (s[j] - mean[j]))
                .collect();
            let cov = prods.iter().sum::<f64>() / (reps - 1.0).max(1.0);
            let pm = prods.iter().sum::<f64>() / reps;
            let var =
                prods.iter().map(|x| (x - pm) * (x - pm)).sum::<f64>() / (reps - 1.0).max(1.0);
            empirical[i][j] = cov;
            se[i][j] = (var / reps).sqrt();
        }
    }
    let design_norm = design_normalization(sim.grid().weights());
    let kernel_limit = kernel_matrix(&t_grid, |a, b| covariance_kernel(a, b, analytic));
    let kernel_design = kernel_matrix(&t_grid, |a, b| {
        covariance_kernel_scaled(a, b, analytic, design_norm)
    });
    let limit_worst_ratio = worst_ratio(&empirical, &kernel_limit, &se);
    let design_worst_ratio = worst_ratio(&empirical, &kernel_design, &se);
    let kernel_symmetric = (0..k).all(|i| (0..k).all(|j| kernel_limit[i][j] == kernel_limit[j][i]));
    Ok(CovarianceReport {
        rng: RNG_NAME.to_string(),
        base_seed: cfg.base_seed,
        replications: cfg.replications,
        q: cfg.q,
        p: sim.grid().p(),
        n,
        t,
        law: cfg.law,
        phantom: phantom.label(),
        kernel_min_eigenvalue: min_eigenvalue(&kernel_limit),
        t_grid,
        empirical,
        mc_standard_error: se,
        kernel_limit,
        kernel_design,
        limit_normalization: LIMIT_NORMALIZATION,
        design_normalization: design_norm,
        limit_match: limit_worst_ratio <= 1.0,
        design_match: design_worst_ratio <= 1.0,
        limit_worst_ratio,
        design_worst_ratio,
        kernel_symmetric,
    })
}
