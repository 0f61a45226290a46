use std::f64::consts::TAU;

use radon_spectral::design::build_grid;
use radon_spectral::empirical::{covariance_kernel, Gaussian};
use radon_spectral::estimator::spectral_estimate;
use radon_spectral::{FilterSpec, ZernikeBasis};
use radon_spectral_sim::config::ExperimentConfig;
use radon_spectral_sim::phantom::PhantomSpec;
use radon_spectral_sim::simulate::replication_seed;
use radon_spectral_sim::study::{self, kernel_matrix, min_eigenvalue, SupError};
use radon_spectral_sim::{LawSpec, Simulator};

fn eval_points() -> Vec<radon_spectral::BrainPoint> {
    ExperimentConfig::default().eval_grid.points().unwrap()
}

/// Noise-free errors at fixed q.
fn noise_free_errors(q: usize, ts: &[u32]) -> Vec<f64> {
    let phantom = PhantomSpec::default().build().unwrap();
    let basis = ZernikeBasis::default();
    let sim = Simulator::new(&phantom, build_grid(q, TAU).unwrap(), &LawSpec::Zero).unwrap();
    let data = sim.draw(0).unwrap().data;
    let sup = SupError::new(&phantom, basis, eval_points()).unwrap();
    ts.iter()
        .map(|&t| {
            sup.of_field(&spectral_estimate(&data, t, FilterSpec::HardCutoff, &basis).unwrap())
                .unwrap()
        })
        .collect()
}

#[test]
fn bias_shrinks_with_bandwidth_without_noise() {
    let e = noise_free_errors(64, &[1, 2, 3]);
    assert!(e[0] > e[1] && e[1] > e[2], "{e:?}");
}

// With coefficients decaying like (m+1)^-8, the bias at t = 2 is already
// below the quadrature error of the degree-6 terms, so beyond t = 3 the
// noise-free error is quadrature-dominated and falls like 1/q^2.
#[test]
fn high_bandwidth_error_is_quadrature_dominated() {
    let coarse = noise_free_errors(64, &[2, 6]);
    let fine = noise_free_errors(128, &[6]);
    assert!(coarse[1] > coarse[0], "{coarse:?}");
    let ratio = coarse[1] / fine[0];
    assert!((3.5..4.5).contains(&ratio), "{ratio}");
}

#[test]
fn noise_amplification_grows_with_bandwidth() {
    let zero = PhantomSpec::Finite { terms: vec![] }.build().unwrap();
    let basis = ZernikeBasis::default();
    let sim = Simulator::new(
        &zero,
        build_grid(16, TAU).unwrap(),
        &LawSpec::Gaussian { sigma: 1.0 },
    )
    .unwrap();
    let sup = SupError::new(&zero, basis, eval_points()).unwrap();
    let mean_sup = |t| {
        (0..200u64)
            .map(|rep| {
                let data = sim.draw(replication_seed(7, rep)).unwrap().data;
                sup.of_field(&spectral_estimate(&data, t, FilterSpec::HardCutoff, &basis).unwrap())
                    .unwrap()
            })
            .sum::<f64>()
            / 200.0
    };
    let means: Vec<f64> = [1, 3, 5].into_iter().map(mean_sup).collect();
    assert!(means.windows(2).all(|w| w[0] < w[1]), "{means:?}");
}

#[test]
fn rate_study_diagnostics_decrease_with_n() {
    let cfg = ExperimentConfig {
        replications: 20,
        ..Default::default()
    };
    let result = study::rate_study(&cfg).unwrap();
    let ell: Vec<f64> = result
        .levels
        .iter()
        .map(|l| l.median_ellipsoid_norm)
        .collect();
    assert!(ell.iter().all(|e| e.is_finite()));
    assert!(ell.windows(2).all(|w| w[1] < w[0]), "{ell:?}");
    assert_eq!(
        result.rows().iter().map(|r| r.q).collect::<Vec<_>>(),
        [16, 32, 64]
    );
}

#[test]
fn oracle_bandwidth_never_loses_to_the_default() {
    let cfg: ExperimentConfig =
        ExperimentConfig::from_json(r#"{"t": "oracle", "replications": 5, "q_list": [16, 32]}"#)
            .unwrap();
    let fixed = ExperimentConfig {
        replications: 5,
        q_list: vec![16, 32],
        ..Default::default()
    };
    let oracle = study::rate_study(&cfg).unwrap();
    let auto = study::rate_study(&fixed).unwrap();
    for (o, a) in oracle.levels.iter().zip(&auto.levels) {
        assert_eq!(o.row.t, 0);
        assert!(o.oracle_t.as_ref().unwrap().iter().all(|&t| t >= 1));
        assert!(o.row.median_sup_error <= a.row.median_sup_error + 1e-12);
    }
}

#[test]
fn kernel_is_psd_on_a_ten_point_grid() {
    for sigma in [0.3, 1.0, 2.5] {
        let law = Gaussian::new(sigma).unwrap();
        let grid: Vec<f64> = (0..10)
            .map(|i| sigma * (-2.5 + 5.0 * i as f64 / 9.0))
            .collect();
        let k = kernel_matrix(&grid, |a, b| covariance_kernel(a, b, &law));
        assert!(min_eigenvalue(&k) >= -1e-8);
    }
}

#[test]
fn studies_do_not_depend_on_thread_count() {
    let cfg = ExperimentConfig {
        replications: 30,
        q: 16,
        ..Default::default()
    };
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| serde_json::to_string(&study::covariance_study(&cfg).unwrap()).unwrap())
    };
    assert_eq!(run(1), run(4));
}
