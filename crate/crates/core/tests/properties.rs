use std::f64::consts::{PI, TAU};

use nhrmt::ensembles::{check_selfdual, sample_selfdual_gine, sample_symm_gine};
use nhrmt::kickedtop::{dissipation_op, floquet_oe, floquet_se, floquet_ue, parity_block, Parity, Spin};
use nhrmt::numerics::{eig_general, ComplexMatrix};
use nhrmt::sampler::{log_weight, LogGasConfig};
use nhrmt::seed::stream_rng;
use nhrmt::spectra::{dedup_kramers, fit_radial_density, trim, RadialDensityModel, RadialWindow, Spectrum};
use nhrmt::stats::{
    nn_spacings, spacing_histogram, spacing_ratio_type1, spacing_ratio_type2, Histogram, Normalization,
};
use nhrmt::unfolding::{
    find_self_intersection, fold_power_law, geodesic_shoot, geodesic_trace, isochrone, local_unfold_spacing,
    unfold_power_law,
};
use nhrmt::Complex64;
use proptest::prelude::*;

fn point() -> impl Strategy<Value = Complex64> {
    (-10.0..10.0f64, -10.0..10.0f64).prop_map(|(a, b)| Complex64::new(a, b))
}

fn cloud(min: usize, max: usize) -> impl Strategy<Value = Vec<Complex64>> {
    prop::collection::vec(point(), min..max).prop_filter("distinct points", |v| {
        v.iter().enumerate().all(|(i, a)| v[..i].iter().all(|b| (a - b).norm() > 1e-6))
    })
}

fn spectrum(z: Vec<Complex64>) -> Spectrum {
    Spectrum::new(z, "prop", "", 0).unwrap()
}

fn unitarity_defect(m: &ComplexMatrix) -> f64 {
    m.matmul(&m.adjoint()).unwrap().max_abs_diff(&ComplexMatrix::identity(m.rows())).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn ratios_lie_in_unit_interval(z in cloud(3, 60)) {
        let s = spectrum(z);
        for r in spacing_ratio_type1(&s).unwrap() {
            prop_assert!(r > 0.0 && r <= 1.0, "type I ratio {r}");
        }
        if let Ok(v) = spacing_ratio_type2(&s) {
            for r in v {
                prop_assert!(r > 0.0 && r <= 1.0, "type II ratio {r}");
            }
        }
    }

    #[test]
    fn ratios_ignore_similarity_transforms(
        z in cloud(3, 40),
        scale in 0.1..10.0f64,
        phi in 0.0..TAU,
        shift in point(),
    ) {
        let map = Complex64::from_polar(scale, phi);
        let moved = spectrum(z.iter().map(|&p| map * p + shift).collect());
        let s = spectrum(z);
        let (mut a, mut b) = (spacing_ratio_type1(&s).unwrap(), spacing_ratio_type1(&moved).unwrap());
        a.sort_by(f64::total_cmp);
        b.sort_by(f64::total_cmp);
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).abs() < 1e-9);
        }
    }

    #[test]
    fn spacings_scale_with_the_spectrum(z in cloud(2, 40), scale in 0.1..10.0f64) {
        let s = spectrum(z.clone());
        let big = spectrum(z.iter().map(|p| p * scale).collect());
        let (a, b) = (nn_spacings(&s, None).unwrap(), nn_spacings(&big, None).unwrap());
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x * scale - y).abs() <= 1e-9 * y.max(1.0));
        }
    }

    #[test]
    fn uniform_local_unfolding_is_a_rescaling(a in point(), b in point(), rho in 0.01..10.0f64) {
        let w = RadialWindow::new(0.0, 100.0).unwrap();
        let s = local_unfold_spacing(a, b, &RadialDensityModel::uniform(rho, w)).unwrap();
        prop_assert!((s - (PI * rho).sqrt() * (a - b).norm()).abs() < 1e-9 * s.max(1.0));
    }

    #[test]
    fn histogram_pdf_integrates_to_one(v in prop::collection::vec(0.0..3.0f64, 1..500), bins in 1usize..80) {
        let h = Histogram::uniform(&v, 0.0, 3.0, bins, Normalization::Pdf).unwrap();
        prop_assert_eq!(h.counts.len(), h.bin_edges.len() - 1);
        prop_assert!((h.integral() - 1.0).abs() < 1e-9);
        let s = spacing_histogram(&v).unwrap();
        prop_assert!((s.integral() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn trims_compose(z in cloud(5, 60), a in 0.0..5.0f64, b in 5.0..15.0f64, c in 0.0..5.0f64, d in 5.0..15.0f64) {
        let s = spectrum(z);
        let inner = (a.max(c), b.min(d));
        let once = trim(&s, inner.0, inner.1);
        let twice = trim(&s, a, b).and_then(|t| trim(&t, c, d));
        match (once, twice) {
            (Ok(x), Ok(y)) => prop_assert_eq!(x.eigenvalues, y.eigenvalues),
            (Err(_), Err(_)) => {}
            (x, y) => prop_assert!(false, "{x:?} vs {y:?}"),
        }
    }

    #[test]
    fn dedup_is_idempotent_and_keeps_separation(z in cloud(1, 40), eps in 0.0..1e-9f64) {
        let doubled: Vec<Complex64> = z.iter().flat_map(|&p| [p, p + eps]).collect();
        let s = spectrum(doubled);
        let tol = 1e-7;
        let once = dedup_kramers(&s, tol).unwrap();
        prop_assert_eq!(once.len(), z.len());
        prop_assert!(once.dedup_applied);
        for (i, p) in once.eigenvalues.iter().enumerate() {
            for q in &once.eigenvalues[..i] {
                prop_assert!((p - q).norm() > tol);
            }
        }
        let twice = dedup_kramers(&once, tol).unwrap();
        prop_assert_eq!(twice.eigenvalues, once.eigenvalues);
    }

    #[test]
    fn power_law_unfolding_inverts(z in cloud(1, 40), k in 1u32..5) {
        let s = spectrum(z.iter().filter(|p| p.norm() > 1e-3).copied().chain([Complex64::new(1.0, 1.0)]).collect());
        let u = unfold_power_law(&s, k).unwrap();
        for p in &u.points {
            prop_assert!(p.sheet < k);
        }
        let back = fold_power_law(&u).unwrap();
        for (a, b) in s.eigenvalues.iter().zip(&back) {
            prop_assert!((a - b).norm() < 1e-9 * a.norm().max(1.0), "{a} -> {b}");
        }
    }

    #[test]
    fn density_fit_ignores_member_order(seed in 0u64..1000) {
        let mut rng = stream_rng(seed, 0);
        let members: Vec<Spectrum> = (0..3)
            .map(|_| {
                let m = sample_symm_gine(100, &mut rng);
                spectrum(eig_general(&m).unwrap())
            })
            .collect();
        let mut rev = members.clone();
        rev.reverse();
        match (fit_radial_density(&members, 4), fit_radial_density(&rev, 4)) {
            (Ok(a), Ok(b)) => {
                for r in [0.5, 4.0, 8.0] {
                    prop_assert!((a.density(r) - b.density(r)).abs() < 1e-10);
                    prop_assert!(a.density(r) >= 0.0);
                }
            }
            (Err(a), Err(b)) => prop_assert_eq!(a.to_string(), b.to_string()),
            (a, b) => prop_assert!(false, "order changed the outcome: {:?} vs {:?}", a.is_ok(), b.is_ok()),
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn geodesics_retrace_on_power_law_metric(
        r0 in 1.0..2.0f64,
        theta in 0.0..TAU,
        dir in 0.0..TAU,
        s in 0.1..1.0f64,
    ) {
        let d = RadialDensityModel::power_law(2, RadialWindow::new(0.0, 10.0).unwrap());
        let c = Complex64::from_polar(r0, theta);
        let end = geodesic_trace(&d, c, Complex64::from_polar(1.0, dir), s, s / 400.0).unwrap();
        let back = geodesic_shoot(&d, end.point, -end.tangent, s, s / 400.0).unwrap();
        prop_assert!((back - c).norm() < 1e-7, "{c} -> {} -> {back}", end.point);
    }

    #[test]
    fn uniform_isochrones_are_simple_circles(c in point(), s in 0.2..3.0f64, n in 16usize..64) {
        let d = RadialDensityModel::uniform(1.0 / PI, RadialWindow::new(0.0, 30.0).unwrap());
        let curve = isochrone(&d, c, s, n).unwrap();
        prop_assert!(find_self_intersection(&curve.vertices).is_none());
        for v in &curve.vertices {
            prop_assert!(((v - c).norm() - s).abs() < 1e-6);
        }
    }

    #[test]
    fn conservative_tops_are_unitary(
        twice_j in 1u32..14,
        alpha in -3.0..3.0f64,
        tau in 0.0..20.0f64,
        k in 0.0..5.0f64,
    ) {
        let spin = Spin::from_twice(twice_j).unwrap();
        prop_assert!(unitarity_defect(&floquet_oe(spin, alpha, tau).unwrap()) < 1e-10);
        prop_assert!(unitarity_defect(&floquet_ue(spin, alpha, tau, k).unwrap()) < 1e-10);
        if spin.is_half_integer() {
            let f = floquet_se(spin, alpha, tau, k, 0.5 * tau).unwrap();
            prop_assert!(unitarity_defect(&f) < 1e-10);
            let raw = spectrum(eig_general(&f).unwrap());
            prop_assert_eq!(dedup_kramers(&raw, raw.default_dedup_tol()).unwrap().len() * 2, raw.len());
        }
    }

    #[test]
    fn dissipation_contracts(twice_j in 1u32..14, gamma in 0.0..5.0f64) {
        let spin = Spin::from_twice(twice_j).unwrap();
        let d = dissipation_op(spin, gamma).unwrap();
        for z in d.diagonal() {
            prop_assert!(z.im == 0.0 && z.re > 0.0 && z.re <= 1.0);
        }
        if gamma == 0.0 {
            prop_assert!(unitarity_defect(&d) == 0.0);
        }
    }

    #[test]
    fn parity_blocks_partition_the_spectrum(twice_j in (1u32..8).prop_map(|j| 2 * j), alpha in -3.0..3.0f64, tau in 0.0..20.0f64) {
        let spin = Spin::from_twice(twice_j).unwrap();
        let f = floquet_oe(spin, alpha, tau).unwrap().matmul(&dissipation_op(spin, 0.3).unwrap()).unwrap();
        let even = parity_block(&f, Parity::Even).unwrap();
        let odd = parity_block(&f, Parity::Odd).unwrap();
        prop_assert_eq!(even.rows() + odd.rows(), spin.dim());
        let mut whole = eig_general(&f).unwrap();
        let mut parts = eig_general(&even).unwrap();
        parts.extend(eig_general(&odd).unwrap());
        let key = |a: &Complex64, b: &Complex64| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im));
        whole.sort_by(key);
        parts.sort_by(key);
        for (a, b) in whole.iter().zip(&parts) {
            prop_assert!((a - b).norm() < 1e-8, "{a} vs {b}");
        }
    }

    #[test]
    fn selfdual_draws_pass_the_check(n in 1usize..12, seed in 0u64..1000) {
        let m = sample_selfdual_gine(n, &mut stream_rng(seed, 1));
        prop_assert_eq!(m.rows(), 2 * n);
        prop_assert_eq!(check_selfdual(&m).unwrap(), (true, 0.0));
    }

    #[test]
    fn symm_draws_are_symmetric(n in 1usize..20, seed in 0u64..1000) {
        let m = sample_symm_gine(n, &mut stream_rng(seed, 2));
        prop_assert_eq!(m.transpose(), m);
    }

    #[test]
    fn log_gas_weight_is_rotation_invariant(z in cloud(2, 20), phi in 0.0..TAU, k in 1u32..4) {
        let cfg = LogGasConfig::new(z.len(), k, 0);
        let rot = Complex64::from_polar(1.0, phi);
        let a = log_weight(&cfg, &z).unwrap();
        let b = log_weight(&cfg, &z.iter().map(|p| p * rot).collect::<Vec<_>>()).unwrap();
        prop_assert!((a - b).abs() < 1e-9 * a.abs().max(1.0));
    }
}
