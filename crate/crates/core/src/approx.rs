//! Finite-rank approximants of simulated paths and audits of the error bounds
//! `||T_n r - r|| <= ||T_n - Id|| ||r||` and their perturbed and localized variants.

use std::hash::{DefaultHasher, Hash, Hasher};
use std::sync::Arc;

use rayon::prelude::*;

use crate::curve_space::{ForwardCurve, WeightParams};
use crate::error::{FcsError, Result};
use crate::hjmm_sim::{drift_from_components, hitting_time, shift, Path, PathEnsemble, VolSpec};
use crate::spectral::{FiniteRankOperator, SingularSystem};

/// Absolute slack added to every right-hand side.
pub const ABS_SLACK: f64 = 1e-8;

/// Default perturbation schedule `eps_n = 2^{-n}`.
pub fn default_eps(n: usize) -> f64 {
    0.5f64.powi(n as i32)
}

/// Hash of the raw bits of a path's Brownian increments.
pub fn increment_checksum(path: &Path) -> u64 {
    let mut h = DefaultHasher::new();
    for step in &path.increments {
        for v in step {
            v.to_bits().hash(&mut h);
        }
    }
    h.finish()
}

/// Coordinates of an `F_n`-valued process in the frame `f_1 .. f_n`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectedPath {
    pub times: Vec<f64>,
    pub coefficients: Vec<Vec<f64>>,
    /// Checksum of the increments of the source path.
    pub increment_checksum: u64,
}

impl ProjectedPath {
    pub fn element(&self, op: &FiniteRankOperator, step: usize) -> ForwardCurve {
        op.reconstruct(&self.coefficients[step])
    }

    /// `max_t ||self_t - other_t||_{H_2}`, using the orthonormality of the `f_k`.
    pub fn max_gap(&self, other: &ProjectedPath) -> Result<f64> {
        if self.times.len() != other.times.len() {
            return Err(FcsError::InvalidArgument("projected paths have different lengths".into()));
        }
        Ok(self
            .coefficients
            .iter()
            .zip(&other.coefficients)
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt())
            .fold(0.0, f64::max))
    }
}

fn check_system(op: &FiniteRankOperator, sys: &SingularSystem) -> Result<()> {
    if Arc::ptr_eq(op.basis(), sys.basis()) {
        Ok(())
    } else {
        Err(FcsError::BasisMismatch)
    }
}

/// Coefficients `s_k <r_t, zeta_k>_gamma` along the path.
pub fn project_path(path: &Path, op: &FiniteRankOperator) -> Result<ProjectedPath> {
    let coefficients = path
        .states
        .iter()
        .map(|r| op.coefficients(r))
        .collect::<Result<Vec<_>>>()?;
    Ok(ProjectedPath {
        times: path.times.clone(),
        coefficients,
        increment_checksum: increment_checksum(path),
    })
}

pub fn project_ensemble(ens: &PathEnsemble, op: &FiniteRankOperator) -> Result<Vec<ProjectedPath>> {
    ens.paths.par_iter().map(|p| project_path(p, op)).collect()
}

/// Euler integration of the coefficient processes of `r^(n)` with the path's recorded
/// increments. The generator pairing `<A* zeta, r>` is replaced by `<zeta, (S_dt r - r) / dt>`.
pub fn ito_approximant(path: &Path, op: &FiniteRankOperator, vol: &VolSpec, params: &WeightParams) -> Result<ProjectedPath> {
    let steps = path.states.len() - 1;
    if path.increments.len() != steps || (steps > 0 && path.increments[0].len() != vol.dim()) {
        return Err(FcsError::MissingIncrements);
    }
    let zetas = op.functionals();
    let weights = op.weights();
    let pair = |c: &mut [f64], h: &ForwardCurve, scale: f64| -> Result<()> {
        for ((ck, z), s) in c.iter_mut().zip(zetas).zip(weights) {
            *ck += s * scale * z.hgamma_inner(h, params)?;
        }
        Ok(())
    };
    let mut c = op.coefficients(&path.states[0])?;
    let mut coefficients = Vec::with_capacity(steps + 1);
    coefficients.push(c.clone());
    for i in 0..steps {
        let (t, dt) = (path.times[i], path.times[i + 1] - path.times[i]);
        let r = &path.states[i];
        let transport = shift(r, dt)?.sub(r)?;
        let sigmas = vol.eval(t, r)?;
        let alpha = drift_from_components(&sigmas, r.grid())?;
        pair(&mut c, &transport, 1.0)?;
        pair(&mut c, &alpha, dt)?;
        for (s, dw) in sigmas.iter().zip(&path.increments[i]) {
            pair(&mut c, s, *dw)?;
        }
        coefficients.push(c.clone());
    }
    Ok(ProjectedPath {
        times: path.times.clone(),
        coefficients,
        increment_checksum: increment_checksum(path),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorRow {
    pub path: usize,
    pub step: usize,
    pub t: f64,
    pub lhs: f64,
    pub rhs: f64,
}

impl ErrorRow {
    /// `lhs / (rhs + slack)`; the bound holds iff this is at most 1.
    pub fn margin(&self) -> f64 {
        self.lhs / (self.rhs + ABS_SLACK)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorReport {
    pub label: String,
    pub rows: Vec<ErrorRow>,
}

impl ErrorReport {
    pub fn worst_margin(&self) -> f64 {
        self.rows.iter().map(ErrorRow::margin).fold(0.0, f64::max)
    }

    pub fn worst_lhs(&self) -> f64 {
        self.rows.iter().map(|r| r.lhs).fold(0.0, f64::max)
    }

    pub fn passes(&self) -> bool {
        self.worst_margin() <= 1.0
    }
}

/// `||op(r) - r||_{H_2}`.
pub fn approximation_error(op: &FiniteRankOperator, r: &ForwardCurve, params: &WeightParams) -> Result<f64> {
    Ok(op.apply(r)?.sub(r)?.h2_norm(params))
}

fn audit_rows<F>(ens: &PathEnsemble, op: &FiniteRankOperator, params: &WeightParams, stop: F, rhs: impl Fn(f64) -> f64 + Sync) -> Result<Vec<ErrorRow>>
where
    F: Fn(&Path) -> Result<usize> + Sync,
{
    let per_path = ens
        .paths
        .par_iter()
        .enumerate()
        .map(|(p, path)| {
            let last = stop(path)?;
            (0..=last)
                .map(|i| {
                    let r = &path.states[i];
                    Ok(ErrorRow {
                        path: p,
                        step: i,
                        t: path.times[i],
                        lhs: approximation_error(op, r, params)?,
                        rhs: rhs(r.hgamma_norm(params)),
                    })
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(per_path.into_iter().flatten().collect())
}

fn full_path(path: &Path) -> Result<usize> {
    Ok(path.states.len() - 1)
}

/// `||T_n r_t - r_t||_{H_2} <= s_{n+1} ||r_t||_gamma` along every path.
pub fn audit_norm_conv(ens: &PathEnsemble, op: &FiniteRankOperator, sys: &SingularSystem) -> Result<ErrorReport> {
    check_system(op, sys)?;
    let s_next = sys.next_singular_value(op.rank());
    let rows = audit_rows(ens, op, sys.params(), full_path, |norm| s_next * norm)?;
    Ok(ErrorReport {
        label: format!("norm_conv n={}", op.rank()),
        rows,
    })
}

/// `||S_n r_t - r_t||_{H_2} <= (s_{n+1} + eps_n) ||r_t||_gamma` along every path.
pub fn audit_est_epsilon_n(ens: &PathEnsemble, op: &FiniteRankOperator, sys: &SingularSystem, eps_n: f64) -> Result<ErrorReport> {
    check_system(op, sys)?;
    let factor = sys.next_singular_value(op.rank()) + eps_n;
    let rows = audit_rows(ens, op, sys.params(), full_path, |norm| factor * norm)?;
    Ok(ErrorReport {
        label: format!("est_epsilon_n n={} eps={eps_n}", op.rank()),
        rows,
    })
}

/// Index of the first state at or after the stopping time, or the last state.
pub fn stopping_index(path: &Path, k: f64, params: &WeightParams) -> Result<usize> {
    Ok(match hitting_time(path, k, params)? {
        Some(tau) => path.times.iter().position(|&t| t == tau).expect("tau is a path time"),
        None => path.states.len() - 1,
    })
}

/// `||S_n r_{t ^ tau} - r_{t ^ tau}||_{H_2} <= K (s_{n+1} + eps_n)` over the stopped path.
pub fn audit_uni_local(ens: &PathEnsemble, op: &FiniteRankOperator, sys: &SingularSystem, k: f64, eps_n: f64) -> Result<ErrorReport> {
    check_system(op, sys)?;
    let params = *sys.params();
    let bound = k * (sys.next_singular_value(op.rank()) + eps_n);
    let rows = audit_rows(ens, op, &params, |p| stopping_index(p, k, &params), |_| bound)?;
    Ok(ErrorReport {
        label: format!("uni_local n={} eps={eps_n} K={k}", op.rank()),
        rows,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MseEstimate {
    /// `E[sup_t ||op(r_t) - r_t||^2_{H_2}]^{1/2}`.
    pub estimate: f64,
    pub std_error: f64,
    /// `E[sup_t ||r_t||^2_gamma]^{1/2}`.
    pub k_hat: f64,
    /// `k_hat (s_{n+1} + eps_n)`.
    pub bound: f64,
}

fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Monte Carlo estimate of the mean-square sup error with a delta-method standard error.
pub fn mean_square_error(ens: &PathEnsemble, op: &FiniteRankOperator, sys: &SingularSystem, eps_n: f64) -> Result<MseEstimate> {
    check_system(op, sys)?;
    if ens.paths.is_empty() {
        return Err(FcsError::EmptyEnsemble);
    }
    let params = *sys.params();
    let sups = ens
        .paths
        .par_iter()
        .map(|path| {
            let mut err: f64 = 0.0;
            let mut norm: f64 = 0.0;
            for r in &path.states {
                err = err.max(approximation_error(op, r, &params)?.powi(2));
                norm = norm.max(r.hgamma_norm(&params).powi(2));
            }
            Ok((err, norm))
        })
        .collect::<Result<Vec<_>>>()?;
    let errs: Vec<f64> = sups.iter().map(|s| s.0).collect();
    let norms: Vec<f64> = sups.iter().map(|s| s.1).collect();
    let (mean_err, se_err) = mean_and_se(&errs);
    let estimate = mean_err.sqrt();
    let std_error = if estimate > 0.0 { se_err / (2.0 * estimate) } else { 0.0 };
    let k_hat = mean_and_se(&norms).0.sqrt();
    Ok(MseEstimate {
        estimate,
        std_error,
        k_hat,
        bound: k_hat * (sys.next_singular_value(op.rank()) + eps_n),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve_space::Grid;
    use crate::hjmm_sim::{simulate, simulate_with_increments, SimConfig};
    use crate::spectral::BasisSet;

    fn setup(n_cells: usize) -> (SingularSystem, Arc<Grid>) {
        let w = WeightParams::new(0.5, 1.5).unwrap();
        let grid = Arc::new(Grid::geometric(w.default_x_max() + 1.0, n_cells, 8.0).unwrap());
        let sys = SingularSystem::compute(BasisSet::with_level(grid.clone(), w)).unwrap();
        (sys, grid)
    }

    fn curve(grid: &Arc<Grid>) -> ForwardCurve {
        ForwardCurve::from_fn(grid.clone(), 0.04, |x| 0.01 * (-0.8 * x).exp() - 0.005 * (-0.1 * x * x).exp()).unwrap()
    }

    fn ensemble(sys: &SingularSystem, n_paths: usize, vol: &VolSpec) -> PathEnsemble {
        let grid = sys.basis().grid().clone();
        let cfg = SimConfig::new(1.0 / 52.0, 0.5, n_paths, 3, *sys.params(), grid.clone()).unwrap();
        simulate(&curve(&grid), vol, &cfg).unwrap()
    }

    #[test]
    fn projection_of_special_paths() {
        let (sys, grid) = setup(24);
        let t4 = sys.make_tn(4).unwrap();
        let zero = Path::new(vec![0.0], vec![ForwardCurve::zero(grid.clone())], vec![]).unwrap();
        assert_eq!(project_path(&zero, &t4).unwrap().coefficients[0], vec![0.0; 4]);
        let e1 = Path::new(vec![0.0], vec![sys.e()[0].clone()], vec![]).unwrap();
        let c = &project_path(&e1, &t4).unwrap().coefficients[0];
        assert!((c[0] - sys.singular_values()[0]).abs() < 1e-10);
        assert!(c[1..].iter().all(|x| x.abs() < 1e-10));
    }

    #[test]
    fn tight_and_full_rank_cases() {
        let (sys, grid) = setup(24);
        let n = 3;
        let t = sys.make_tn(n).unwrap();
        let e = &sys.e()[n];
        let path = Path::new(vec![0.0], vec![e.clone()], vec![]).unwrap();
        let ens = PathEnsemble { seed: 0, dt: 1.0, paths: vec![path] };
        let report = audit_norm_conv(&ens, &t, &sys).unwrap();
        let row = report.rows[0];
        assert!((row.lhs - sys.singular_values()[n]).abs() < 1e-9);
        assert!((row.rhs - sys.singular_values()[n]).abs() < 1e-9);

        let full = sys.make_tn(sys.rank()).unwrap();
        let path = Path::new(vec![0.0], vec![curve(&grid)], vec![]).unwrap();
        let ens = PathEnsemble { seed: 0, dt: 1.0, paths: vec![path] };
        assert!(audit_norm_conv(&ens, &full, &sys).unwrap().worst_lhs() <= 1e-8);
    }

    #[test]
    fn audits_hold_on_vasicek_paths() {
        let (sys, _) = setup(32);
        let ens = ensemble(&sys, 8, &VolSpec::vasicek(0.02, 1.0));
        let w = *sys.params();
        let k = 2.0 * ens.paths[0].states[0].hgamma_norm(&w);
        let mut previous = f64::INFINITY;
        for n in [1, 2, 4, 8] {
            let t = sys.make_tn(n).unwrap();
            let eps = default_eps(n);
            let s = sys.perturb_functionals(n, eps, 9).unwrap();
            let conv = audit_norm_conv(&ens, &t, &sys).unwrap();
            assert!(conv.passes(), "{}", conv.worst_margin());
            assert!(audit_est_epsilon_n(&ens, &s, &sys, eps).unwrap().passes());
            assert!(audit_uni_local(&ens, &s, &sys, k, eps).unwrap().passes());
            assert!(conv.worst_lhs() <= previous);
            previous = conv.worst_lhs();
            let mse = mean_square_error(&ens, &s, &sys, eps).unwrap();
            assert!(mse.estimate <= mse.bound);
        }
    }

    #[test]
    fn zero_epsilon_matches_truncation() {
        let (sys, _) = setup(24);
        let ens = ensemble(&sys, 2, &VolSpec::vasicek(0.02, 1.0));
        let t = sys.make_tn(4).unwrap();
        let s = sys.perturb_functionals(4, 0.0, 1).unwrap();
        let a = audit_norm_conv(&ens, &t, &sys).unwrap();
        let b = audit_est_epsilon_n(&ens, &s, &sys, 0.0).unwrap();
        assert_eq!(a.rows, b.rows);
    }

    #[test]
    fn ito_approximant_starts_at_projection() {
        let (sys, _) = setup(24);
        let vol = VolSpec::vasicek(0.02, 1.0);
        let ens = ensemble(&sys, 1, &vol);
        let s = sys.perturb_functionals(4, 0.01, 2).unwrap();
        let ito = ito_approximant(&ens.paths[0], &s, &vol, sys.params()).unwrap();
        let proj = project_path(&ens.paths[0], &s).unwrap();
        assert_eq!(ito.coefficients[0], proj.coefficients[0]);
        assert_eq!(ito.increment_checksum, proj.increment_checksum);
        assert!(ito.max_gap(&proj).unwrap() < 1e-3);
    }

    #[test]
    fn missing_increments_are_reported() {
        let (sys, grid) = setup(16);
        let h = curve(&grid);
        let path = Path::new(vec![0.0, 0.1], vec![h.clone(), h], vec![]).unwrap();
        let s = sys.make_tn(2).unwrap();
        assert_eq!(
            ito_approximant(&path, &s, &VolSpec::zero(1), sys.params()),
            Err(FcsError::MissingIncrements)
        );
    }

    #[test]
    fn zero_vol_is_deterministic() {
        let (sys, grid) = setup(24);
        let vol = VolSpec::zero(1);
        let ens = ensemble(&sys, 3, &vol);
        let s = sys.make_tn(2).unwrap();
        let mse = mean_square_error(&ens, &s, &sys, 0.0).unwrap();
        assert_eq!(mse.std_error, 0.0);
        let k = 2.0 * curve(&grid).hgamma_norm(sys.params());
        assert!(audit_uni_local(&ens, &s, &sys, k, 0.0).unwrap().worst_margin() < 1.0);
        let path = simulate_with_increments(&curve(&grid), &vol, 0.1, vec![vec![0.0]; 3]).unwrap();
        let ito = ito_approximant(&path, &s, &vol, sys.params()).unwrap();
        let proj = project_path(&path, &s).unwrap();
        assert!(ito.max_gap(&proj).unwrap() < 1e-12);
    }

    #[test]
    fn empty_ensemble() {
        let (sys, _) = setup(8);
        let ens = PathEnsemble { seed: 0, dt: 1.0, paths: vec![] };
        let t = sys.make_tn(1).unwrap();
        assert_eq!(mean_square_error(&ens, &t, &sys, 0.0), Err(FcsError::EmptyEnsemble));
    }
}
