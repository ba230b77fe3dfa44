//! Pure-diffusion HJMM dynamics `dr = (A r + alpha_HJM(t, r)) dt + sigma(t, r) dW` in
//! Musiela parametrization, stepped with the splitting scheme
//! `r+ = S_dt (r + alpha dt + sum_j sigma^j dW_j)`.

use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::curve_space::{ForwardCurve, Grid, WeightParams};
use crate::error::{FcsError, Result};

/// Default Vasicek-type volatility level.
pub const VASICEK_C: f64 = 0.02;
/// Default Vasicek-type mean-reversion speed.
pub const VASICEK_A: f64 = 1.0;

type VolFn = dyn Fn(f64, &ForwardCurve) -> Vec<ForwardCurve> + Send + Sync;

/// The `d` volatility maps `sigma^j(t, r)`, each valued in `H0_gamma`.
#[derive(Clone)]
pub struct VolSpec {
    dim: usize,
    state_dependent: bool,
    time_dependent: bool,
    label: String,
    f: Arc<VolFn>,
}

impl fmt::Debug for VolSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("VolSpec")
            .field("dim", &self.dim)
            .field("state_dependent", &self.state_dependent)
            .field("time_dependent", &self.time_dependent)
            .field("label", &self.label)
            .finish()
    }
}

impl VolSpec {
    /// A general specification. The maps must return `dim` curves with `h_inf = 0` on the
    /// grid of `r`; Lipschitz and growth conditions are the caller's responsibility.
    pub fn new<F>(dim: usize, state_dependent: bool, time_dependent: bool, label: &str, f: F) -> Self
    where
        F: Fn(f64, &ForwardCurve) -> Vec<ForwardCurve> + Send + Sync + 'static,
    {
        Self {
            dim,
            state_dependent,
            time_dependent,
            label: label.to_string(),
            f: Arc::new(f),
        }
    }

    pub fn zero(dim: usize) -> Self {
        Self::new(dim, false, false, "zero", move |_, r| {
            vec![ForwardCurve::zero(r.grid().clone()); dim]
        })
    }

    /// `sigma(x) = c e^{-a x}`, pinned to zero at `x_max`.
    pub fn vasicek(c: f64, a: f64) -> Self {
        Self::new(1, false, false, &format!("vasicek(c={c}, a={a})"), move |_, r| {
            vec![vasicek_curve(r.grid().clone(), c, a)]
        })
    }

    /// `sigma(t, r)(x) = c e^{-a x} (1 + kappa tanh(r(0)))`: bounded and Lipschitz in `r`.
    pub fn level_dependent(c: f64, a: f64, kappa: f64) -> Self {
        Self::new(
            1,
            true,
            false,
            &format!("level-dependent(c={c}, a={a}, kappa={kappa})"),
            move |_, r| {
                let base = vasicek_curve(r.grid().clone(), c, a);
                vec![base.scale(1.0 + kappa * r.h0().tanh())]
            },
        )
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn state_dependent(&self) -> bool {
        self.state_dependent
    }

    pub fn time_dependent(&self) -> bool {
        self.time_dependent
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn eval(&self, t: f64, r: &ForwardCurve) -> Result<Vec<ForwardCurve>> {
        let out = (self.f)(t, r);
        if out.len() != self.dim {
            return Err(FcsError::InvalidArgument(format!(
                "volatility returned {} components, expected {}",
                out.len(),
                self.dim
            )));
        }
        for s in &out {
            if !s.same_grid(r) {
                return Err(FcsError::GridMismatch);
            }
            if !s.in_subspace() {
                return Err(FcsError::TailNotNegligible { h_inf: s.h_inf() });
            }
        }
        Ok(out)
    }

    /// Whether `sigma` and `alpha` can be evaluated once per simulation.
    fn is_constant(&self) -> bool {
        !self.state_dependent && !self.time_dependent
    }
}

fn vasicek_curve(grid: Arc<Grid>, c: f64, a: f64) -> ForwardCurve {
    ForwardCurve::from_fn(grid, 0.0, |x| c * (-a * x).exp()).expect("finite volatility samples")
}

/// `(S_t h)(x) = h(t + x)`, re-binned onto the grid of `h`; `h = h_inf` past `x_max`.
pub fn shift(h: &ForwardCurve, t: f64) -> Result<ForwardCurve> {
    let grid = h.grid();
    let horizon = grid.x_max();
    if !(0.0..=horizon).contains(&t) {
        return Err(FcsError::HorizonExceeded { shift: t, horizon });
    }
    if t == 0.0 {
        return Ok(h.clone());
    }
    let shifted: Vec<f64> = grid.nodes().iter().map(|&x| h.eval_extended(x + t)).collect();
    let dcoef = shifted
        .windows(2)
        .enumerate()
        .map(|(i, p)| (p[1] - p[0]) / grid.width(i))
        .collect();
    ForwardCurve::new(grid.clone(), h.h_inf(), dcoef)
}

/// `alpha(x) = sum_j sigma^j(x) int_0^x sigma^j`, from node values.
pub fn drift_from_components(sigmas: &[ForwardCurve], grid: &Arc<Grid>) -> Result<ForwardCurve> {
    let mut alpha = vec![0.0; grid.n_cells() + 1];
    for s in sigmas {
        let cum = s.cumulative_integral();
        for ((a, v), c) in alpha.iter_mut().zip(s.node_values()).zip(&cum) {
            *a += v * c;
        }
    }
    // sigma^j(x_max) = 0, so alpha vanishes at x_max as well
    let dcoef = alpha
        .windows(2)
        .enumerate()
        .map(|(i, p)| (p[1] - p[0]) / grid.width(i))
        .collect();
    ForwardCurve::new(grid.clone(), 0.0, dcoef)
}

/// The HJM no-arbitrage drift `alpha_HJM(t, r)`.
pub fn hjm_drift(vol: &VolSpec, t: f64, r: &ForwardCurve) -> Result<ForwardCurve> {
    drift_from_components(&vol.eval(t, r)?, r.grid())
}

fn step_with(r: &ForwardCurve, sigmas: &[ForwardCurve], alpha: &ForwardCurve, dt: f64, dw: &[f64]) -> Result<ForwardCurve> {
    let mut y = r.axpy(dt, alpha)?;
    for (s, w) in sigmas.iter().zip(dw) {
        y = y.axpy(*w, s)?;
    }
    shift(&y, dt)
}

/// One splitting step `S_dt (r + alpha(t, r) dt + sum_j sigma^j(t, r) dW_j)`.
pub fn euler_step(r: &ForwardCurve, t: f64, vol: &VolSpec, dt: f64, dw: &[f64]) -> Result<ForwardCurve> {
    if dw.len() != vol.dim() {
        return Err(FcsError::InvalidArgument(format!(
            "{} increments for a {}-dimensional noise",
            dw.len(),
            vol.dim()
        )));
    }
    let sigmas = vol.eval(t, r)?;
    let alpha = drift_from_components(&sigmas, r.grid())?;
    step_with(r, &sigmas, &alpha, dt, dw)
}

#[derive(Debug, Clone)]
pub struct SimConfig {
    pub dt: f64,
    pub t_max: f64,
    pub n_paths: usize,
    pub seed: u64,
    pub params: WeightParams,
    pub grid: Arc<Grid>,
}

impl SimConfig {
    pub fn new(dt: f64, t_max: f64, n_paths: usize, seed: u64, params: WeightParams, grid: Arc<Grid>) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(FcsError::InvalidArgument(format!("dt = {dt} must be positive")));
        }
        if !(t_max >= dt && t_max.is_finite()) {
            return Err(FcsError::InvalidArgument(format!("t_max = {t_max} must be at least dt = {dt}")));
        }
        let cfg = Self {
            dt,
            t_max,
            n_paths,
            seed,
            params,
            grid,
        };
        let end = cfg.n_steps() as f64 * dt;
        if end > cfg.grid.x_max() {
            return Err(FcsError::HorizonExceeded {
                shift: end,
                horizon: cfg.grid.x_max(),
            });
        }
        Ok(cfg)
    }

    /// Grid on `[0, x_max + t_max]`, where `x_max` is the default truncation for `params`.
    pub fn extended_grid(params: &WeightParams, t_max: f64, build: impl FnOnce(f64) -> Result<Grid>) -> Result<Arc<Grid>> {
        Ok(Arc::new(build(params.default_x_max() + t_max)?))
    }

    /// Steps needed to reach `t_max`, tolerating rounding in `t_max / dt`.
    pub fn n_steps(&self) -> usize {
        (self.t_max / self.dt - 1e-9).ceil().max(1.0) as usize
    }

    pub fn times(&self) -> Vec<f64> {
        (0..=self.n_steps()).map(|i| i as f64 * self.dt).collect()
    }
}

/// One simulated path: states `r_{t_i}` and the increments that produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct Path {
    pub times: Vec<f64>,
    pub states: Vec<ForwardCurve>,
    /// `increments[i][j]` is `Delta W_j` over `[t_i, t_{i+1}]`.
    pub increments: Vec<Vec<f64>>,
}

impl Path {
    pub fn new(times: Vec<f64>, states: Vec<ForwardCurve>, increments: Vec<Vec<f64>>) -> Result<Self> {
        if times.len() != states.len() || times.is_empty() {
            return Err(FcsError::InvalidArgument("path needs one state per time".into()));
        }
        if !increments.is_empty() && increments.len() + 1 != times.len() {
            return Err(FcsError::InvalidArgument("path needs one increment vector per step".into()));
        }
        Ok(Self {
            times,
            states,
            increments,
        })
    }

    pub fn terminal(&self) -> &ForwardCurve {
        self.states.last().expect("paths are non-empty")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathEnsemble {
    pub seed: u64,
    pub dt: f64,
    pub paths: Vec<Path>,
}

/// Seeded `N(0, dt)` increments for one path: stream `path` of a ChaCha8 generator.
pub fn draw_increments(seed: u64, path: usize, n_steps: usize, dim: usize, dt: f64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(path as u64);
    let sd = dt.sqrt();
    (0..n_steps)
        .map(|_| (0..dim).map(|_| sd * rng.sample::<f64, _>(StandardNormal)).collect())
        .collect()
}

/// Sums consecutive groups of `factor` increments: the coarse-step noise of a coupled path.
pub fn coarsen(increments: &[Vec<f64>], factor: usize) -> Result<Vec<Vec<f64>>> {
    if factor == 0 || !increments.len().is_multiple_of(factor) {
        return Err(FcsError::InvalidArgument(format!(
            "cannot group {} steps by {factor}",
            increments.len()
        )));
    }
    Ok(increments
        .chunks(factor)
        .map(|group| {
            let mut sum = group[0].clone();
            for inc in &group[1..] {
                for (s, v) in sum.iter_mut().zip(inc) {
                    *s += v;
                }
            }
            sum
        })
        .collect())
}

/// Runs the scheme from `h0` with the given increments, calling `visit(i, t_i, r_{t_i})`
/// for every state.
pub fn run_path<F>(h0: &ForwardCurve, vol: &VolSpec, dt: f64, increments: &[Vec<f64>], mut visit: F) -> Result<()>
where
    F: FnMut(usize, f64, &ForwardCurve),
{
    let constant = if vol.is_constant() {
        let sigmas = vol.eval(0.0, h0)?;
        let alpha = drift_from_components(&sigmas, h0.grid())?;
        Some((sigmas, alpha))
    } else {
        None
    };
    let mut r = h0.clone();
    visit(0, 0.0, &r);
    for (i, dw) in increments.iter().enumerate() {
        if dw.len() != vol.dim() {
            return Err(FcsError::InvalidArgument(format!(
                "{} increments for a {}-dimensional noise",
                dw.len(),
                vol.dim()
            )));
        }
        let t = i as f64 * dt;
        r = match &constant {
            Some((sigmas, alpha)) => step_with(&r, sigmas, alpha, dt, dw)?,
            None => euler_step(&r, t, vol, dt, dw)?,
        };
        visit(i + 1, (i + 1) as f64 * dt, &r);
    }
    Ok(())
}

/// A single path driven by the given increments, with every state stored.
pub fn simulate_with_increments(h0: &ForwardCurve, vol: &VolSpec, dt: f64, increments: Vec<Vec<f64>>) -> Result<Path> {
    let mut times = Vec::with_capacity(increments.len() + 1);
    let mut states = Vec::with_capacity(increments.len() + 1);
    run_path(h0, vol, dt, &increments, |_, t, r| {
        times.push(t);
        states.push(r.clone());
    })?;
    Path::new(times, states, increments)
}

fn check_start(h0: &ForwardCurve, cfg: &SimConfig) -> Result<()> {
    if !Arc::ptr_eq(h0.grid(), &cfg.grid) && h0.grid().nodes() != cfg.grid.nodes() {
        return Err(FcsError::GridMismatch);
    }
    Ok(())
}

/// Path `index` of the ensemble defined by `cfg`.
pub fn simulate_path(h0: &ForwardCurve, vol: &VolSpec, cfg: &SimConfig, index: usize) -> Result<Path> {
    check_start(h0, cfg)?;
    let inc = draw_increments(cfg.seed, index, cfg.n_steps(), vol.dim(), cfg.dt);
    simulate_with_increments(h0, vol, cfg.dt, inc)
}

/// `n_paths` independent paths, computed in parallel; the result does not depend on scheduling.
pub fn simulate(h0: &ForwardCurve, vol: &VolSpec, cfg: &SimConfig) -> Result<PathEnsemble> {
    check_start(h0, cfg)?;
    let paths = (0..cfg.n_paths)
        .into_par_iter()
        .map(|i| simulate_path(h0, vol, cfg, i))
        .collect::<Result<Vec<_>>>()?;
    Ok(PathEnsemble {
        seed: cfg.seed,
        dt: cfg.dt,
        paths,
    })
}

/// Terminal states only, for ensembles too large to keep in memory.
pub fn simulate_terminal(h0: &ForwardCurve, vol: &VolSpec, cfg: &SimConfig) -> Result<Vec<ForwardCurve>> {
    check_start(h0, cfg)?;
    (0..cfg.n_paths)
        .into_par_iter()
        .map(|i| {
            let inc = draw_increments(cfg.seed, i, cfg.n_steps(), vol.dim(), cfg.dt);
            let mut last = None;
            let n = inc.len();
            run_path(h0, vol, cfg.dt, &inc, |k, _, r| {
                if k == n {
                    last = Some(r.clone());
                }
            })?;
            Ok(last.expect("at least one step"))
        })
        .collect()
}

/// First recorded time with `||r_t||_gamma >= k`, or `None` within the horizon.
pub fn hitting_time(path: &Path, k: f64, w: &WeightParams) -> Result<Option<f64>> {
    let initial = path.states[0].hgamma_norm(w);
    if !(k > initial) {
        return Err(FcsError::BadThreshold { k, initial });
    }
    Ok(path
        .states
        .iter()
        .zip(&path.times)
        .find(|(r, _)| r.hgamma_norm(w) >= k)
        .map(|(_, &t)| t))
}
