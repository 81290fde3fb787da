mod common;

use common::{quantile, sigma2_ginibre_mc, GridDistances};
use nhrmt::spectra::{RadialDensityModel, RadialWindow};
use nhrmt::stats::sigma2_ginibre_analytic;
use nhrmt::Complex64;
use std::f64::consts::PI;

#[test]
fn grid_distances_are_euclidean_for_uniform_density() {
    let model = RadialDensityModel::uniform(1.0 / PI, RadialWindow::new(0.0, 10.0).unwrap());
    let g = GridDistances::new(&model, Complex64::new(1.0, 0.5), 0.01, 100, 7);
    let p = Complex64::new(1.6, 0.9);
    let want = (p - g.center).norm();
    assert!((g.at(p) - want).abs() < 0.005 * want);
}

#[test]
fn grid_distances_scale_with_density() {
    let model = RadialDensityModel::uniform(4.0 / PI, RadialWindow::new(0.0, 10.0).unwrap());
    let g = GridDistances::new(&model, Complex64::new(-2.0, 1.0), 0.01, 100, 7);
    let p = Complex64::new(-2.5, 1.3);
    let want = 2.0 * (p - g.center).norm();
    assert!((g.at(p) - want).abs() < 0.005 * want);
}

#[test]
fn mc_oracle_agrees_with_analytic_curve() {
    for n in [0.5, 3.0] {
        let (v, se) = sigma2_ginibre_mc(n, 400_000, 7);
        let a = sigma2_ginibre_analytic(n).unwrap();
        assert!((v - a).abs() < 4.0 * se, "n {n}: mc {v} +- {se} vs {a}");
    }
}

#[test]
fn quantile_interpolates() {
    let v = [0.0, 1.0, 2.0, 3.0];
    assert_eq!(quantile(&v, 0.0), 0.0);
    assert_eq!(quantile(&v, 1.0), 3.0);
    assert!((quantile(&v, 0.5) - 1.5).abs() < 1e-15);
}
