//! Continuous Fourier transform `(F h)(xi) = (2 pi)^{-1/2} int h(x) e^{-i xi x} dx` on
//! periodic line grids, and numerical checks of the identities used by the compactness
//! argument.

use std::f64::consts::PI;

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use crate::curve_space::{embedding_constant_c3, ForwardCurve, SampledCurve, WeightParams};
use crate::error::{FcsError, Result};
use crate::quad;

/// Relative edge amplitude above which a sample is considered truncated.
pub const DECAY_TOLERANCE: f64 = 1e-8;

/// Frequencies at which the pointwise functional checks are run.
pub const PROBE_FREQUENCIES: [f64; 9] = [0.0, 0.5, -0.5, 1.0, -1.0, 5.0, -5.0, 20.0, -20.0];

fn inv_sqrt_2pi() -> f64 {
    1.0 / (2.0 * PI).sqrt()
}

/// `n_points` equispaced nodes `x_j = -L + j dx` on the periodic interval `[-L, L)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineGrid {
    half_width: f64,
    n_points: usize,
}

impl LineGrid {
    pub fn new(half_width: f64, n_points: usize) -> Result<Self> {
        if !(half_width > 0.0 && half_width.is_finite()) {
            return Err(FcsError::InvalidGrid(format!("half width {half_width} must be positive")));
        }
        if n_points < 4 || !n_points.is_multiple_of(2) {
            return Err(FcsError::InvalidGrid(format!("{n_points} points; need an even count >= 4")));
        }
        Ok(Self { half_width, n_points })
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / self.n_points as f64
    }

    pub fn node(&self, j: usize) -> f64 {
        -self.half_width + j as f64 * self.spacing()
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n_points).map(|j| self.node(j)).collect()
    }

    /// `xi_k = pi k / L` for `k = -n/2 .. n/2 - 1`.
    pub fn frequencies(&self) -> Vec<f64> {
        let half = (self.n_points / 2) as i64;
        (-half..half).map(|k| PI * k as f64 / self.half_width).collect()
    }

    pub fn frequency_spacing(&self) -> f64 {
        PI / self.half_width
    }

    pub fn sample<F: Fn(f64) -> f64>(&self, f: F) -> LineCurve {
        LineCurve {
            grid: *self,
            values: (0..self.n_points).map(|j| f(self.node(j))).collect(),
            edge: f(-self.half_width).abs().max(f(self.half_width).abs()),
        }
    }

    /// Samples a piecewise-linear curve, taking it to vanish outside its nodes.
    pub fn sample_curve(&self, h: &SampledCurve) -> LineCurve {
        self.sample(|x| h.eval(x).unwrap_or(0.0))
    }
}

/// Real samples on a [`LineGrid`], plus the largest endpoint magnitude `|h(+-L)|`.
#[derive(Debug, Clone, PartialEq)]
pub struct LineCurve {
    grid: LineGrid,
    values: Vec<f64>,
    edge: f64,
}

impl LineCurve {
    pub fn new(grid: LineGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n_points {
            return Err(FcsError::GridMismatch);
        }
        // periodic samples: h(L) is identified with h(-L)
        let edge = values[0].abs();
        Ok(Self { grid, values, edge })
    }

    pub fn grid(&self) -> &LineGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn is_decayed(&self) -> bool {
        let edge = self.edge();
        edge == 0.0 || edge < DECAY_TOLERANCE * self.max_abs()
    }

    fn edge(&self) -> f64 {
        self.edge
    }

    fn require_decayed(&self) -> Result<()> {
        if self.is_decayed() {
            Ok(())
        } else {
            Err(FcsError::NotDecayed {
                edge: self.edge(),
                peak: self.max_abs(),
            })
        }
    }

    pub fn l2_inner(&self, other: &LineCurve) -> Result<f64> {
        if self.grid != other.grid {
            return Err(FcsError::GridMismatch);
        }
        Ok(self.grid.spacing() * self.values.iter().zip(&other.values).map(|(a, b)| a * b).sum::<f64>())
    }

    pub fn l2_norm(&self) -> f64 {
        self.l2_inner(self).expect("same grid").sqrt()
    }

    pub fn l1_norm(&self) -> f64 {
        self.grid.spacing() * self.values.iter().map(|v| v.abs()).sum::<f64>()
    }

    /// Fourth-order periodic central difference.
    pub fn derivative(&self) -> LineCurve {
        let n = self.values.len();
        let v = &self.values;
        let dx = self.grid.spacing();
        let values: Vec<f64> = (0..n)
            .map(|j| {
                let at = |o: isize| v[(j as isize + o).rem_euclid(n as isize) as usize];
                (-at(2) + 8.0 * at(1) - 8.0 * at(-1) + at(-2)) / (12.0 * dx)
            })
            .collect();
        let edge = values[0].abs();
        LineCurve {
            grid: self.grid,
            values,
            edge,
        }
    }

    /// `(int (h^2 + h'^2))^{1/2}` with the difference-quotient derivative.
    pub fn sobolev_norm(&self) -> f64 {
        (self.l2_norm().powi(2) + self.derivative().l2_norm().powi(2)).sqrt()
    }
}

/// Samples of `F h` on the frequency grid of a [`LineGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub xi_nodes: Vec<f64>,
    pub values: Vec<Complex64>,
}

impl Spectrum {
    pub fn sup_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.norm()))
    }

    fn spacing(&self) -> f64 {
        self.xi_nodes[1] - self.xi_nodes[0]
    }

    /// `<self, other>_{L2(R)}`, linear in the first argument.
    pub fn l2_inner(&self, other: &Spectrum) -> Result<Complex64> {
        if self.xi_nodes != other.xi_nodes {
            return Err(FcsError::GridMismatch);
        }
        let sum: Complex64 = self.values.iter().zip(&other.values).map(|(a, b)| a * b.conj()).sum();
        Ok(sum * self.spacing())
    }

    /// `|| xi F h ||_{L2}`.
    pub fn moment_norm(&self) -> f64 {
        let sum: f64 = self
            .xi_nodes
            .iter()
            .zip(&self.values)
            .map(|(x, v)| x * x * v.norm_sqr())
            .sum();
        (sum * self.spacing()).sqrt()
    }

    /// Mass `int_{|xi| > r} |F h|^2` and its Chebyshev bound `|| xi F h ||^2 / r^2`.
    pub fn high_frequency_mass(&self, r: f64) -> (f64, f64) {
        let mass: f64 = self
            .xi_nodes
            .iter()
            .zip(&self.values)
            .filter(|(x, _)| x.abs() > r)
            .map(|(_, v)| v.norm_sqr())
            .sum();
        (mass * self.spacing(), self.moment_norm().powi(2) / (r * r))
    }
}

/// Fast transform calibrated to the continuous one:
/// `F h(xi_k) = dx (2 pi)^{-1/2} (-1)^k DFT[h](k mod n)`.
pub fn fourier(h: &LineCurve) -> Result<Spectrum> {
    h.require_decayed()?;
    let grid = h.grid;
    let n = grid.n_points;
    let mut buf: Vec<Complex64> = h.values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let scale = grid.spacing() * inv_sqrt_2pi();
    let half = (n / 2) as i64;
    let values = (-half..half)
        .map(|k| {
            let sign = if k.rem_euclid(2) == 0 { scale } else { -scale };
            buf[k.rem_euclid(n as i64) as usize] * sign
        })
        .collect();
    Ok(Spectrum {
        xi_nodes: grid.frequencies(),
        values,
    })
}

/// `(<F f, F g>, <f, g>)` in `L2(R)`.
pub fn plancherel_check(f: &LineCurve, g: &LineCurve) -> Result<(Complex64, Complex64)> {
    if f.grid != g.grid {
        return Err(FcsError::GridMismatch);
    }
    let lhs = fourier(f)?.l2_inner(&fourier(g)?)?;
    let rhs = Complex64::new(f.l2_inner(g)?, 0.0);
    Ok((lhs, rhs))
}

/// `max |F(h')(xi) - i xi F h(xi)| / (1 + |F h(xi)|)` over the central half of the frequencies.
pub fn derivative_identity_check(h: &LineCurve) -> Result<f64> {
    let dh = h.derivative();
    let fh = fourier(h)?;
    let fdh = fourier(&dh)?;
    let n = fh.xi_nodes.len();
    let (lo, hi) = (n / 4, 3 * n / 4);
    Ok((lo..hi)
        .map(|k| {
            let xi = fh.xi_nodes[k];
            let want = Complex64::new(0.0, xi) * fh.values[k];
            (fdh.values[k] - want).norm() / (1.0 + fh.values[k].norm())
        })
        .fold(0.0, f64::max))
}

/// `(|| xi F h ||_{L2}, || h ||_{W1})`.
pub fn weighted_sobolev_bound_check(h: &LineCurve) -> Result<(f64, f64)> {
    let lhs = fourier(h)?.moment_norm();
    h.derivative().require_decayed()?;
    Ok((lhs, h.sobolev_norm()))
}

/// `(sup |F h|, || h ||_{L1} / sqrt(2 pi))` for the discrete transform.
pub fn l1_bound_check(h: &LineCurve) -> Result<(f64, f64)> {
    Ok((fourier(h)?.sup_abs(), h.l1_norm() * inv_sqrt_2pi()))
}

/// Subcells per grid cell so that the eight-point rule resolves `e^{i xi x}`.
fn subdivisions(width: f64, xi: f64) -> usize {
    1 + (xi.abs() * width).ceil() as usize
}

fn integrate_cells<F: Fn(f64) -> f64>(h: &ForwardCurve, xi: f64, f: F) -> f64 {
    let grid = h.grid();
    let mut total = 0.0;
    for i in 0..grid.n_cells() {
        let (a, b) = grid.cell(i);
        let m = subdivisions(b - a, xi);
        let step = (b - a) / m as f64;
        for s in 0..m {
            let lo = a + s as f64 * step;
            total += quad::integrate(lo, lo + step, &f);
        }
    }
    total
}

/// `F((h e^{(beta/2) x})^*)(xi)` by quadrature of the transform integral over the mirrored cells.
pub fn lift_transform(h: &ForwardCurve, xi: f64, w: &WeightParams) -> Result<Complex64> {
    if h.h_inf() != 0.0 {
        return Err(FcsError::TailNotNegligible { h_inf: h.h_inf() });
    }
    let half = 0.5 * w.beta();
    let lift = |x: f64| h.eval_extended(x) * (half * x).exp();
    // the reflected lift is even; the two halves contribute e^{-i xi x} and e^{+i xi x}
    let right_re = integrate_cells(h, xi, |x| lift(x) * (xi * x).cos());
    let right_im = integrate_cells(h, xi, |x| -lift(x) * (xi * x).sin());
    let left_re = integrate_cells(h, xi, |x| lift(x) * (xi * x).cos());
    let left_im = integrate_cells(h, xi, |x| lift(x) * (xi * x).sin());
    Ok(Complex64::new(right_re + left_re, right_im + left_im) * inv_sqrt_2pi())
}

/// `(direct, paired)`: the transform of the reflected lift at `xi`, and the pairing
/// `(2 pi)^{-1/2} < h, e^{(beta/2 - delta) x} 2 cos(xi x) >_{L2_delta}`.
pub fn functional_representation_check(
    h: &ForwardCurve,
    xi: f64,
    w: &WeightParams,
) -> Result<(Complex64, Complex64)> {
    let direct = lift_transform(h, xi, w)?;
    let (half, delta) = (0.5 * w.beta(), w.delta());
    let paired = integrate_cells(h, xi, |x| {
        h.eval_extended(x) * ((half - delta) * x).exp() * 2.0 * (xi * x).cos() * (delta * x).exp()
    }) * inv_sqrt_2pi();
    Ok((direct, Complex64::new(paired, 0.0)))
}

/// Points on the line grid used by [`c0_bound_check`].
pub const C0_POINTS: usize = 1 << 13;

/// `(sup_xi |F((h e^{(beta/2) x})^*)|, C3 / sqrt(2 pi) ||h||_gamma)`.
pub fn c0_bound_check(h: &ForwardCurve, w: &WeightParams) -> Result<(f64, f64)> {
    if h.h_inf() != 0.0 {
        return Err(FcsError::TailNotNegligible { h_inf: h.h_inf() });
    }
    let x_max = h.grid().x_max();
    // h(x_max) = h_inf = 0, so the lift vanishes at both ends of [-x_max, x_max]
    let line = LineGrid::new(x_max, C0_POINTS)?;
    let half = 0.5 * w.beta();
    let lifted = line.sample(|x| h.eval_extended(x.abs()) * (half * x.abs()).exp());
    let sup = fourier(&lifted)?.sup_abs();
    Ok((sup, embedding_constant_c3(w) * inv_sqrt_2pi() * h.hgamma_norm(w)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve_space::Grid;
    use approx::assert_relative_eq;
    use std::sync::Arc;

    fn line(n_log2: u32) -> LineGrid {
        LineGrid::new(20.0, 1 << n_log2).unwrap()
    }

    /// Direct Riemann sum of the transform integral.
    fn naive(h: &LineCurve, xi: f64) -> Complex64 {
        let g = h.grid();
        (0..g.n_points())
            .map(|j| {
                let x = g.node(j);
                Complex64::from_polar(h.values()[j], -xi * x)
            })
            .sum::<Complex64>()
            * g.spacing()
            * inv_sqrt_2pi()
    }

    #[test]
    fn grid_validation() {
        assert!(LineGrid::new(0.0, 8).is_err());
        assert!(LineGrid::new(1.0, 7).is_err());
        let g = LineGrid::new(2.0, 8).unwrap();
        assert_eq!(g.spacing(), 0.5);
        assert_eq!(g.node(0), -2.0);
        assert_eq!(g.frequencies()[4], 0.0);
    }

    #[test]
    fn matches_direct_sum() {
        let g = LineGrid::new(10.0, 64).unwrap();
        let h = g.sample(|x| (-(x - 1.0) * (x - 1.0)).exp() * (1.0 + 0.3 * x));
        let s = fourier(&h).unwrap();
        for (xi, v) in s.xi_nodes.iter().zip(&s.values) {
            assert!((v - naive(&h, *xi)).norm() < 1e-12);
        }
    }

    #[test]
    fn two_sided_exponential() {
        let h = line(16).sample(|x| (-x.abs()).exp());
        let s = fourier(&h).unwrap();
        let mid = s.xi_nodes.len() / 2;
        for k in [mid, mid + 3, mid + 40] {
            let xi = s.xi_nodes[k];
            let want = (2.0 / PI).sqrt() / (1.0 + xi * xi);
            assert!((s.values[k].re - want).abs() < 1e-6, "xi={xi}");
            assert!(s.values[k].im.abs() < 1e-10);
        }
    }

    #[test]
    fn zero_curve() {
        let h = line(8).sample(|_| 0.0);
        assert_eq!(fourier(&h).unwrap().sup_abs(), 0.0);
        assert_eq!(derivative_identity_check(&h).unwrap(), 0.0);
        assert_eq!(weighted_sobolev_bound_check(&h).unwrap(), (0.0, 0.0));
    }

    #[test]
    fn truncated_curve_is_rejected() {
        let h = line(8).sample(|x| (-0.1 * x.abs()).exp());
        assert!(matches!(fourier(&h), Err(FcsError::NotDecayed { .. })));
    }

    #[test]
    fn plancherel_closed_forms() {
        let g = line(16);
        let f = g.sample(|x| (-x.abs()).exp());
        let (lhs, rhs) = plancherel_check(&f, &f).unwrap();
        assert!((lhs - rhs).norm() <= 1e-6 * (1.0 + rhs.norm()));
        assert!((rhs.re - 1.0).abs() < 1e-6);

        let gauss = g.sample(|x| (-x * x / 2.0).exp());
        let (lhs, rhs) = plancherel_check(&gauss, &gauss).unwrap();
        assert_relative_eq!(lhs.re, PI.sqrt(), max_relative = 1e-10);
        assert_relative_eq!(rhs.re, PI.sqrt(), max_relative = 1e-10);

        let left = g.sample(|x| (-(x + 5.0) * (x + 5.0)).exp());
        let right = g.sample(|x| (-(x - 5.0) * (x - 5.0) * 4.0).exp());
        let (lhs, rhs) = plancherel_check(&left, &right).unwrap();
        assert!(lhs.norm() < 1e-10 && rhs.norm() < 1e-10);
    }

    #[test]
    fn derivative_identity_for_gaussian() {
        let h = line(12).sample(|x| (-x * x / 2.0).exp());
        assert!(derivative_identity_check(&h).unwrap() < 1e-6);
    }

    #[test]
    fn sobolev_moment_for_gaussian() {
        let h = line(14).sample(|x| (-x * x / 2.0).exp());
        let (lhs, rhs) = weighted_sobolev_bound_check(&h).unwrap();
        let root_pi = PI.sqrt();
        assert_relative_eq!(lhs, (root_pi / 2.0).sqrt(), max_relative = 1e-8);
        assert_relative_eq!(rhs, (1.5 * root_pi).sqrt(), max_relative = 1e-8);
        assert_relative_eq!(rhs * rhs - lhs * lhs, h.l2_norm().powi(2), max_relative = 1e-8);
    }

    #[test]
    fn high_frequency_tail_is_bounded() {
        let h = line(12).sample(|x| (-x * x).exp() * (3.0 * x).sin());
        let s = fourier(&h).unwrap();
        for r in [1.0, 4.0, 10.0] {
            let (mass, bound) = s.high_frequency_mass(r);
            assert!(mass <= bound);
        }
    }

    fn exp_curve(rate: f64, x_max: f64, n: usize) -> ForwardCurve {
        let g = Arc::new(Grid::uniform(x_max, n).unwrap());
        let tail = (-rate * x_max).exp();
        ForwardCurve::from_fn(g, 0.0, |x| (-rate * x).exp() - tail).unwrap()
    }

    #[test]
    fn representation_closed_forms() {
        let w = WeightParams::new(1.0, 2.0).unwrap();
        let h = exp_curve(2.0, 30.0, 6000);
        let c = 2.0 * inv_sqrt_2pi();
        let (direct, paired) = functional_representation_check(&h, 0.0, &w).unwrap();
        assert!((direct.re - c * 2.0 / 3.0).abs() < 1e-5);
        assert!((direct - paired).norm() <= 1e-12);
        let (direct, paired) = functional_representation_check(&h, 5.0, &w).unwrap();
        assert!((direct.re - c * 1.5 / (2.25 + 25.0)).abs() < 1e-5);
        assert!(direct.im.abs() < 1e-12);
        assert!((direct - paired).norm() <= 1e-12);
    }

    #[test]
    fn c0_bound_closed_form() {
        let w = WeightParams::new(1.0, 3.0).unwrap();
        let h = exp_curve(2.0, 30.0, 3000);
        let (sup, bound) = c0_bound_check(&h, &w).unwrap();
        assert!((sup - 2.0 * inv_sqrt_2pi() / 1.5).abs() < 1e-3);
        assert!((bound - 1.030).abs() < 1e-3);
        let zero = ForwardCurve::zero(h.grid().clone());
        assert_eq!(c0_bound_check(&zero, &w).unwrap(), (0.0, 0.0));
        let lifted = ForwardCurve::constant(h.grid().clone(), 1.0);
        assert!(matches!(c0_bound_check(&lifted, &w), Err(FcsError::TailNotNegligible { .. })));
    }
}
