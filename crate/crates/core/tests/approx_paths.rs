use std::sync::Arc;

use fcs_core::approx::{
    audit_est_epsilon_n, audit_norm_conv, audit_uni_local, ito_approximant, mean_square_error, project_path,
};
use fcs_core::curve_space::{ForwardCurve, Grid, WeightParams};
use fcs_core::hjmm_sim::{simulate, SimConfig, VolSpec};
use fcs_core::spectral::{BasisSet, SingularSystem};

struct Setup {
    w: WeightParams,
    grid: Arc<Grid>,
    h0: ForwardCurve,
    sys: SingularSystem,
}

fn setup() -> Setup {
    let w = WeightParams::new(0.5, 1.5).unwrap();
    let grid = Arc::new(Grid::geometric(w.default_x_max() + 1.0, 48, 8.0).unwrap());
    let h0 = ForwardCurve::from_fn(grid.clone(), 0.05, |x| 0.05 - 0.02 * (-x).exp()).unwrap();
    let sys = SingularSystem::compute(BasisSet::with_level(grid.clone(), w)).unwrap();
    Setup { w, grid, h0, sys }
}

#[test]
fn approximant_is_exact_without_noise() {
    let s = setup();
    let cfg = SimConfig::new(1.0 / 52.0, 1.0, 2, 4, s.w, s.grid.clone()).unwrap();
    let vol = VolSpec::zero(1);
    let ens = simulate(&s.h0, &vol, &cfg).unwrap();
    let op = s.sys.perturb_functionals(6, 0.01, 4).unwrap();
    for path in &ens.paths {
        let projected = project_path(path, &op).unwrap();
        let approx = ito_approximant(path, &op, &vol, &s.w).unwrap();
        assert!(projected.max_gap(&approx).unwrap() < 1e-13);
        assert_eq!(projected.increment_checksum, approx.increment_checksum);
    }
}

#[test]
fn errors_shrink_with_rank() {
    let s = setup();
    let cfg = SimConfig::new(1.0 / 52.0, 1.0, 16, 9, s.w, s.grid.clone()).unwrap();
    let ens = simulate(&s.h0, &VolSpec::vasicek(0.02, 1.0), &cfg).unwrap();
    let k = 2.0 * s.h0.hgamma_norm(&s.w);
    let mut last_worst = f64::INFINITY;
    let mut last_mse = f64::INFINITY;
    for n in [1, 2, 3, 4, 6, 8, 12] {
        let t_n = s.sys.make_tn(n).unwrap();
        let conv = audit_norm_conv(&ens, &t_n, &s.sys).unwrap();
        assert!(conv.passes(), "n={n}: margin {}", conv.worst_margin());
        assert!(conv.worst_lhs() <= last_worst * (1.0 + 1e-12), "n={n}");
        last_worst = conv.worst_lhs();

        let eps = 0.5f64.powi(n as i32);
        let s_n = s.sys.perturb_functionals(n, eps, 9).unwrap();
        assert!(audit_est_epsilon_n(&ens, &s_n, &s.sys, eps).unwrap().passes());
        assert!(audit_uni_local(&ens, &s_n, &s.sys, k, eps).unwrap().passes());
        let mse = mean_square_error(&ens, &t_n, &s.sys, 0.0).unwrap();
        assert!(mse.estimate <= mse.bound);
        assert!(mse.estimate <= last_mse * (1.0 + 1e-12), "n={n}");
        last_mse = mse.estimate;
    }
}

#[test]
fn foreign_system_is_rejected() {
    let s = setup();
    let other = SingularSystem::compute(BasisSet::with_level(s.grid.clone(), s.w)).unwrap();
    let cfg = SimConfig::new(0.25, 1.0, 1, 1, s.w, s.grid.clone()).unwrap();
    let ens = simulate(&s.h0, &VolSpec::vasicek(0.02, 1.0), &cfg).unwrap();
    let op = other.make_tn(2).unwrap();
    assert!(audit_norm_conv(&ens, &op, &s.sys).is_err());
}
