use std::f64::consts::PI;
use std::sync::Arc;

use fcs_core::curve_space::{embedding_constant_c3, ForwardCurve, Grid, WeightParams};
use fcs_core::fourier_lab::{
    c0_bound_check, fourier, functional_representation_check, l1_bound_check, lift_transform, plancherel_check,
    LineGrid,
};
use fcs_core::sampling::random_subspace_curve;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn line() -> LineGrid {
    LineGrid::new(20.0, 1 << 12).unwrap()
}

#[test]
fn gaussian_is_a_fixed_point() {
    let g = line();
    let transform = fourier(&g.sample(|x| (-0.5 * x * x).exp())).unwrap();
    let worst = transform
        .xi_nodes
        .iter()
        .zip(&transform.values)
        .map(|(xi, v)| (v.re - (-0.5 * xi * xi).exp()).abs().max(v.im.abs()))
        .fold(0.0, f64::max);
    assert!(worst < 1e-12, "{worst}");
}

#[test]
fn modulated_packet_matches_closed_form() {
    // F[sin(k x) e^{-x^2 / (2 s^2)}](xi) = (G(xi - k) - G(xi + k)) / (2i), G(xi) = s e^{-s^2 xi^2 / 2}
    let (k, s) = (3.0, 1.5);
    let g = line();
    let transform = fourier(&g.sample(|x| (k * x).sin() * (-x * x / (2.0 * s * s)).exp())).unwrap();
    let big_g = |xi: f64| s * (-s * s * xi * xi / 2.0).exp();
    let worst = transform
        .xi_nodes
        .iter()
        .zip(&transform.values)
        .map(|(&xi, v)| {
            let want_im = -(big_g(xi - k) - big_g(xi + k)) / 2.0;
            v.re.abs().max((v.im - want_im).abs())
        })
        .fold(0.0, f64::max);
    assert!(worst < 1e-4, "{worst}");
}

#[test]
fn exponential_lift_transform_matches_closed_form() {
    // h = e^{-lambda x}: the reflected lift is e^{-mu |x|}, mu = lambda - beta / 2,
    // with transform (2 pi)^{-1/2} 2 mu / (mu^2 + xi^2)
    let w = WeightParams::new(1.0, 2.0).unwrap();
    let lambda = 1.6;
    let mu = lambda - 0.5 * w.beta();
    let grid = Arc::new(Grid::uniform(40.0, 8000).unwrap());
    let h = ForwardCurve::from_fn(grid, 0.0, |x| (-lambda * x).exp()).unwrap();
    for xi in [0.0, 0.3, -1.0, 4.0, 12.0] {
        let got = lift_transform(&h, xi, &w).unwrap();
        let want = 2.0 * mu / (mu * mu + xi * xi) / (2.0 * PI).sqrt();
        assert!((got.re - want).abs() < 1e-5 && got.im.abs() < 1e-12, "xi={xi}: {got} vs {want}");
    }
}

#[test]
fn lift_transform_decays_at_high_frequency() {
    let w = WeightParams::new(1.0, 2.0).unwrap();
    let grid = Arc::new(Grid::geometric(w.default_x_max(), 64, 8.0).unwrap());
    let h = ForwardCurve::from_fn(grid, 0.0, |x| x * (-1.5 * x).exp()).unwrap();
    let low = lift_transform(&h, 0.5, &w).unwrap().norm();
    let high = lift_transform(&h, 200.0, &w).unwrap().norm();
    assert!(high < 1e-3 * low, "{high} vs {low}");
}

fn packet(g: &LineGrid, centre: f64, width: f64, freq: f64, phase: f64) -> fcs_core::fourier_lab::LineCurve {
    g.sample(|x| {
        let u = (x - centre) / width;
        (-0.5 * u * u).exp() * (freq * x + phase).cos()
    })
}

fn packet_params() -> impl Strategy<Value = (f64, f64, f64, f64)> {
    (-4.0f64..4.0, 0.3f64..2.0, 0.0f64..6.0, 0.0f64..6.3)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn plancherel_holds_for_packets(a in packet_params(), b in packet_params()) {
        let g = line();
        let f = packet(&g, a.0, a.1, a.2, a.3);
        let h = packet(&g, b.0, b.1, b.2, b.3);
        let (lhs, rhs) = plancherel_check(&f, &h).unwrap();
        let scale = f.l2_norm() * h.l2_norm();
        prop_assert!((lhs - rhs).norm() <= 1e-10 * scale);
    }

    #[test]
    fn transform_is_bounded_by_l1_norm(a in packet_params()) {
        let g = line();
        let (sup, bound) = l1_bound_check(&packet(&g, a.0, a.1, a.2, a.3)).unwrap();
        prop_assert!(sup <= bound * (1.0 + 1e-12));
    }

    #[test]
    fn functional_pairing_reproduces_transform(seed in any::<u64>(), xi in -20.0f64..20.0) {
        let w = WeightParams::new(1.0, 2.0).unwrap();
        let grid = Arc::new(Grid::geometric(w.default_x_max(), 64, 8.0).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let h = random_subspace_curve(&mut rng, &grid, &w);
        let (direct, paired) = functional_representation_check(&h, xi, &w).unwrap();
        prop_assert!((direct - paired).norm() <= 1e-10 * (1.0 + direct.norm()));
        prop_assert!(direct.norm() <= embedding_constant_c3(&w) / (2.0 * PI).sqrt() * h.hgamma_norm(&w) * (1.0 + 1e-9));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn sampled_lift_spectrum_is_uniformly_bounded(seed in any::<u64>()) {
        let w = WeightParams::new(1.0, 2.0).unwrap();
        let grid = Arc::new(Grid::geometric(w.default_x_max(), 64, 8.0).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let h = random_subspace_curve(&mut rng, &grid, &w);
        let (sup, bound) = c0_bound_check(&h, &w).unwrap();
        prop_assert!(sup <= bound);
    }
}
