use std::f64::consts::TAU;

use radon_spectral::basis::index_set;
use radon_spectral::design::build_grid;
use radon_spectral::empirical::residuals;
use radon_spectral::estimator::{
    estimate_at, estimate_coefficient, estimator_radon_trace, radon_trace, spectral_estimate,
};
use radon_spectral::radon::{Expansion, LineIntegrator};
use radon_spectral::{
    BasisIndex, BrainPoint, CoefficientField, Complex64, FilterSpec, SinogramData, Space,
    ZernikeBasis,
};

fn idx(l: i32, m: u32) -> BasisIndex {
    BasisIndex::new(l, m).unwrap()
}

/// Conjugate-symmetric brain field from `(l >= 0, m, c)` entries.
fn field(entries: &[(i32, u32, Complex64)]) -> CoefficientField {
    let mut f = CoefficientField::new(Space::Brain);
    for &(l, m, c) in entries {
        f.insert(idx(l, m), c);
        if l > 0 {
            f.insert(idx(-l, m), c.conj());
        }
    }
    f
}

fn noise_free(g: &CoefficientField, q: usize) -> SinogramData {
    let grid = build_grid(q, TAU).unwrap();
    let y = radon_trace(g, &grid).unwrap();
    SinogramData::new(grid, y).unwrap()
}

fn degree_two() -> CoefficientField {
    field(&[
        (0, 0, Complex64::new(1.0, 0.0)),
        (1, 1, Complex64::new(0.3, -0.2)),
        (0, 2, Complex64::new(0.5, 0.0)),
        (2, 2, Complex64::new(0.25, 0.1)),
    ])
}

#[test]
fn first_order_pair_is_recovered_within_quadrature_bound() {
    let c = Complex64::new(0.7, 0.4);
    let data = noise_free(&field(&[(1, 1, c)]), 32);
    let n = data.grid().n() as f64;
    let err = (estimate_coefficient(&data, idx(1, 1)) - c / 2f64.sqrt()).norm();
    assert!(err <= 5.0 / n, "{err}");
    assert!(err > 0.0);
}

#[test]
fn trace_matches_line_quadrature_at_design_points() {
    let g = field(&[
        (0, 0, Complex64::new(0.4, 0.0)),
        (1, 3, Complex64::new(-0.2, 0.5)),
        (2, 4, Complex64::new(0.3, 0.3)),
        (4, 4, Complex64::new(0.1, -0.6)),
        (3, 5, Complex64::new(0.2, 0.0)),
    ]);
    let data = noise_free(&g, 16);
    let basis = ZernikeBasis::default();
    let est = spectral_estimate(&data, 5, FilterSpec::HardCutoff, &basis).unwrap();
    let trace = estimator_radon_trace(&data, 5, FilterSpec::HardCutoff, &basis).unwrap();
    let line = LineIntegrator::new(128).unwrap();
    let expansion = Expansion::new(&est, &basis).unwrap();
    let n = data.grid().n();
    for j in 0..10 {
        let k = (j * 7919 + 13) % n;
        let by_line = line.integrate(&expansion, data.grid().point(k)).unwrap();
        assert!(
            (by_line - trace[k]).abs() <= 1e-6,
            "k={k}: {by_line} vs {}",
            trace[k]
        );
    }
}

#[test]
fn noise_free_residuals_are_quadrature_sized() {
    let data = noise_free(&degree_two(), 64);
    let basis = ZernikeBasis::default();
    for t in [2, 4] {
        let trace = estimator_radon_trace(&data, t, FilterSpec::HardCutoff, &basis).unwrap();
        let worst = residuals(&data, &trace)
            .unwrap()
            .iter()
            .fold(0.0_f64, |m, e| m.max(e.abs()));
        assert!(worst <= 1e-2, "t={t}: {worst}");
    }
}

#[test]
fn zero_data_reconstructs_zero() {
    let grid = build_grid(8, TAU).unwrap();
    let data = SinogramData::new(grid.clone(), vec![0.0; grid.n()]).unwrap();
    let points = [
        BrainPoint::new(0.0, 0.0).unwrap(),
        BrainPoint::new(0.7, 2.0).unwrap(),
    ];
    for filter in [FilterSpec::HardCutoff, FilterSpec::LinearTaper] {
        assert_eq!(
            estimate_at(&data, 3, filter, &ZernikeBasis::default(), &points).unwrap(),
            [0.0, 0.0]
        );
    }
}

#[test]
fn estimate_recovers_every_low_degree_coefficient() {
    let g = degree_two();
    let data = noise_free(&g, 64);
    let est =
        spectral_estimate(&data, 2, FilterSpec::HardCutoff, &ZernikeBasis::default()).unwrap();
    for i in index_set(2) {
        assert!((est.get(i) - g.get(i)).norm() < 1e-3, "{i:?}");
    }
}
