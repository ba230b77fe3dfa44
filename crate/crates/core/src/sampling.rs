//! Seeded random curves for property checks and audits.

use std::sync::Arc;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::curve_space::{ForwardCurve, Grid, WeightParams};

/// A mixture `sum_j a_j e^{-lambda_j x}`, pinned to zero at `x_max`, with rates above
/// `(gamma - beta) / 2` so the mixture lies comfortably inside `H0_gamma`.
pub fn exponential_mixture<R: Rng>(rng: &mut R, grid: &Arc<Grid>, w: &WeightParams) -> ForwardCurve {
    let terms = rng.random_range(1..=4);
    let floor = 0.5 * w.gamma();
    let mix: Vec<(f64, f64)> = (0..terms)
        .map(|_| {
            let amp = rng.sample::<f64, _>(StandardNormal);
            let rate = floor + rng.random_range(0.05..3.0);
            (amp, rate)
        })
        .collect();
    ForwardCurve::from_fn(grid.clone(), 0.0, |x| mix.iter().map(|(a, l)| a * (-l * x).exp()).sum())
        .expect("finite mixture")
}

/// Independent Gaussian derivative per cell, scaled so each cell carries comparable
/// `H_gamma` energy. Rough, but always in `H0_gamma`.
pub fn cell_noise<R: Rng>(rng: &mut R, grid: &Arc<Grid>, w: &WeightParams) -> ForwardCurve {
    let energy = grid.exp_cell_integrals(w.gamma());
    let n = grid.n_cells() as f64;
    let dcoef = energy
        .iter()
        .map(|e| rng.sample::<f64, _>(StandardNormal) / (n * e).sqrt())
        .collect();
    ForwardCurve::new(grid.clone(), 0.0, dcoef).expect("finite noise")
}

/// Either family with equal probability.
pub fn random_subspace_curve<R: Rng>(rng: &mut R, grid: &Arc<Grid>, w: &WeightParams) -> ForwardCurve {
    if rng.random_bool(0.5) {
        exponential_mixture(rng, grid, w)
    } else {
        cell_noise(rng, grid, w)
    }
}
