use std::sync::Arc;

use super::grid::same_grid;
use super::{Grid, ProductElement, SampledCurve, WeightParams};
use crate::error::{FcsError, Result};
use crate::quad;

/// An element of `H_gamma`: a continuous curve with piecewise-constant derivative on the
/// grid and constant value `h_inf` beyond `x_max`.
///
/// Node values are reconstructed from the right, `h(x_i) = h_inf - sum_{j >= i} dcoef_j w_j`,
/// so `h(0)` always agrees with the derivative data.
#[derive(Debug, Clone)]
pub struct ForwardCurve {
    grid: Arc<Grid>,
    h_inf: f64,
    dcoef: Vec<f64>,
    values: Vec<f64>,
}

impl PartialEq for ForwardCurve {
    fn eq(&self, other: &Self) -> bool {
        same_grid(&self.grid, &other.grid) && self.h_inf == other.h_inf && self.dcoef == other.dcoef
    }
}

impl ForwardCurve {
    pub fn new(grid: Arc<Grid>, h_inf: f64, dcoef: Vec<f64>) -> Result<Self> {
        if dcoef.len() != grid.n_cells() {
            return Err(FcsError::InvalidArgument(format!(
                "{} derivative coefficients for {} cells",
                dcoef.len(),
                grid.n_cells()
            )));
        }
        if !h_inf.is_finite() || dcoef.iter().any(|d| !d.is_finite()) {
            return Err(FcsError::InvalidArgument("non-finite curve data".into()));
        }
        Ok(Self::from_parts_unchecked(grid, h_inf, dcoef))
    }

    fn from_parts_unchecked(grid: Arc<Grid>, h_inf: f64, dcoef: Vec<f64>) -> Self {
        let n = dcoef.len();
        let mut values = vec![0.0; n + 1];
        values[n] = h_inf;
        for i in (0..n).rev() {
            values[i] = values[i + 1] - dcoef[i] * grid.width(i);
        }
        Self {
            grid,
            h_inf,
            dcoef,
            values,
        }
    }

    pub fn zero(grid: Arc<Grid>) -> Self {
        let n = grid.n_cells();
        Self::from_parts_unchecked(grid, 0.0, vec![0.0; n])
    }

    pub fn constant(grid: Arc<Grid>, c: f64) -> Self {
        let n = grid.n_cells();
        Self::from_parts_unchecked(grid, c, vec![0.0; n])
    }

    /// Piecewise-linear interpolant of `f` at the nodes, shifted so the curve equals `h_inf`
    /// at `x_max` and beyond.
    pub fn from_fn<F: Fn(f64) -> f64>(grid: Arc<Grid>, h_inf: f64, f: F) -> Result<Self> {
        let samples: Vec<f64> = grid.nodes().iter().map(|&x| f(x)).collect();
        let dcoef = samples
            .windows(2)
            .enumerate()
            .map(|(i, p)| (p[1] - p[0]) / grid.width(i))
            .collect();
        Self::new(grid, h_inf, dcoef)
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn h0(&self) -> f64 {
        self.values[0]
    }

    pub fn h_inf(&self) -> f64 {
        self.h_inf
    }

    pub fn dcoef(&self) -> &[f64] {
        &self.dcoef
    }

    pub fn node_values(&self) -> &[f64] {
        &self.values
    }

    /// Member of the closed subspace `H0_gamma = { h : h(inf) = 0 }`.
    pub fn in_subspace(&self) -> bool {
        self.h_inf == 0.0
    }

    pub fn eval(&self, x: f64) -> Result<f64> {
        let x_max = self.grid.x_max();
        if !(0.0..=x_max).contains(&x) {
            return Err(FcsError::OutOfRange { x, x_max });
        }
        Ok(self.eval_extended(x))
    }

    /// Evaluates on all of `[0, inf)`, using `h = h_inf` past the grid.
    pub fn eval_extended(&self, x: f64) -> f64 {
        if x >= self.grid.x_max() {
            return self.h_inf;
        }
        let i = self.grid.locate(x);
        self.values[i] + self.dcoef[i] * (x - self.grid.nodes()[i])
    }

    /// Splits `h = h0 + h(inf)` with `h0` in `H0_gamma`.
    pub fn split(&self) -> (ForwardCurve, f64) {
        let head = Self::from_parts_unchecked(self.grid.clone(), 0.0, self.dcoef.clone());
        (head, self.h_inf)
    }

    pub fn same_grid(&self, other: &ForwardCurve) -> bool {
        same_grid(&self.grid, &other.grid)
    }

    fn check_grid(&self, other: &ForwardCurve) -> Result<()> {
        if self.same_grid(other) {
            Ok(())
        } else {
            Err(FcsError::GridMismatch)
        }
    }

    /// `self + a * other`.
    pub fn axpy(&self, a: f64, other: &ForwardCurve) -> Result<ForwardCurve> {
        self.check_grid(other)?;
        let dcoef = self
            .dcoef
            .iter()
            .zip(&other.dcoef)
            .map(|(x, y)| x + a * y)
            .collect();
        Ok(Self::from_parts_unchecked(
            self.grid.clone(),
            self.h_inf + a * other.h_inf,
            dcoef,
        ))
    }

    pub fn add(&self, other: &ForwardCurve) -> Result<ForwardCurve> {
        self.axpy(1.0, other)
    }

    pub fn sub(&self, other: &ForwardCurve) -> Result<ForwardCurve> {
        self.axpy(-1.0, other)
    }

    pub fn scale(&self, a: f64) -> ForwardCurve {
        Self::from_parts_unchecked(
            self.grid.clone(),
            a * self.h_inf,
            self.dcoef.iter().map(|d| a * d).collect(),
        )
    }

    /// Linear combination `sum_k coeffs[k] * curves[k]` on a shared grid.
    pub fn combine(grid: Arc<Grid>, coeffs: &[f64], curves: &[ForwardCurve]) -> Result<ForwardCurve> {
        let n = grid.n_cells();
        let mut dcoef = vec![0.0; n];
        let mut h_inf = 0.0;
        for (&c, curve) in coeffs.iter().zip(curves) {
            if !same_grid(&grid, &curve.grid) {
                return Err(FcsError::GridMismatch);
            }
            h_inf += c * curve.h_inf;
            for (d, e) in dcoef.iter_mut().zip(&curve.dcoef) {
                *d += c * e;
            }
        }
        Ok(Self::from_parts_unchecked(grid, h_inf, dcoef))
    }

    /// `H`-type inner product `h(0) g(0) + int h' g' e^{rate x} dx` with closed-form cell integrals.
    pub fn h_inner_with(&self, other: &ForwardCurve, rate: f64) -> Result<f64> {
        self.check_grid(other)?;
        let energy: f64 = self
            .dcoef
            .iter()
            .zip(&other.dcoef)
            .zip(self.grid.nodes().windows(2))
            .map(|((d, e), p)| d * e * quad::exp_integral(rate, p[0], p[1]))
            .sum();
        Ok(self.h0() * other.h0() + energy)
    }

    pub fn h_norm_with(&self, rate: f64) -> f64 {
        let energy: f64 = self
            .dcoef
            .iter()
            .zip(self.grid.nodes().windows(2))
            .map(|(d, p)| d * d * quad::exp_integral(rate, p[0], p[1]))
            .sum();
        (self.h0() * self.h0() + energy).sqrt()
    }

    pub fn hgamma_inner(&self, other: &ForwardCurve, w: &WeightParams) -> Result<f64> {
        self.h_inner_with(other, w.gamma())
    }

    pub fn hgamma_norm(&self, w: &WeightParams) -> f64 {
        self.h_norm_with(w.gamma())
    }

    fn require_subspace(&self) -> Result<()> {
        if self.in_subspace() {
            Ok(())
        } else {
            Err(FcsError::TailNotNegligible { h_inf: self.h_inf })
        }
    }

    /// Node values of `h - h(inf)`, summed from the right so a large level does not cancel.
    fn tail_values(&self) -> Vec<f64> {
        let n = self.dcoef.len();
        let mut t = vec![0.0; n + 1];
        for i in (0..n).rev() {
            t[i] = t[i + 1] - self.dcoef[i] * self.grid.width(i);
        }
        t
    }

    /// `int_0^{x_max} (h - h(inf)) (g - g(inf)) e^{rate x} dx`.
    fn weighted_l2_inner_raw(&self, other: &ForwardCurve, rate: f64) -> f64 {
        let nodes = self.grid.nodes();
        let (ts, to) = (self.tail_values(), other.tail_values());
        let mut total = 0.0;
        for i in 0..self.dcoef.len() {
            let (a, b) = (nodes[i], nodes[i + 1]);
            let (va, da) = (ts[i], self.dcoef[i]);
            let (vb, db) = (to[i], other.dcoef[i]);
            total += quad::integrate(a, b, |x| {
                (va + da * (x - a)) * (vb + db * (x - a)) * (rate * x).exp()
            });
        }
        total
    }

    /// Inner product in `L2(R_+, e^{rate x} dx)`; requires both curves in `H0_gamma`.
    pub fn l2_inner_with(&self, other: &ForwardCurve, rate: f64) -> Result<f64> {
        self.check_grid(other)?;
        self.require_subspace()?;
        other.require_subspace()?;
        Ok(self.weighted_l2_inner_raw(other, rate))
    }

    pub fn l2_norm_with(&self, rate: f64) -> Result<f64> {
        self.require_subspace()?;
        Ok(self.weighted_l2_inner_raw(self, rate).max(0.0).sqrt())
    }

    pub fn l2beta_norm(&self, w: &WeightParams) -> Result<f64> {
        self.l2_norm_with(w.beta())
    }

    /// Inner product of the images in `L2_beta (+) R`: `<h - h(inf), g - g(inf)>_{L2_beta} + h(inf) g(inf)`.
    pub fn h2_inner(&self, other: &ForwardCurve, w: &WeightParams) -> Result<f64> {
        self.check_grid(other)?;
        Ok(self.weighted_l2_inner_raw(other, w.beta()) + self.h_inf * other.h_inf)
    }

    pub fn h2_norm(&self, w: &WeightParams) -> f64 {
        let l2 = self.weighted_l2_inner_raw(self, w.beta());
        (l2.max(0.0) + self.h_inf * self.h_inf).sqrt()
    }

    /// The image of `h` under the embedding `H_gamma -> L2_beta (+) R`.
    pub fn embed(&self, w: &WeightParams) -> ProductElement {
        let l2_part = SampledCurve::new(self.grid.nodes().to_vec(), self.tail_values(), w.beta())
            .expect("grid nodes are strictly increasing");
        ProductElement::new(l2_part, self.h_inf)
    }

    /// Node samples of `x -> h(x) e^{(beta/2) x}` on `[0, x_max]`.
    pub fn weighted_lift(&self, w: &WeightParams) -> Result<SampledCurve> {
        self.require_subspace()?;
        let half = 0.5 * w.beta();
        let values = self
            .grid
            .nodes()
            .iter()
            .zip(&self.values)
            .map(|(&x, &v)| v * (half * x).exp())
            .collect();
        SampledCurve::new(self.grid.nodes().to_vec(), values, 0.0)
    }

    /// `W1(R)` norm of the reflected lift `(h e^{(beta/2) x})^*`, computed from the exact
    /// derivative `(h' + (beta/2) h) e^{(beta/2) x}` on each cell.
    pub fn lift_sobolev_norm(&self, w: &WeightParams) -> Result<f64> {
        self.require_subspace()?;
        let half = 0.5 * w.beta();
        let nodes = self.grid.nodes();
        let mut half_line = 0.0;
        for i in 0..self.dcoef.len() {
            let (a, b) = (nodes[i], nodes[i + 1]);
            let (v, d) = (self.values[i], self.dcoef[i]);
            half_line += quad::integrate(a, b, |x| {
                let h = v + d * (x - a);
                let dh = d + half * h;
                (h * h + dh * dh) * (2.0 * half * x).exp()
            });
        }
        Ok((2.0 * half_line).sqrt())
    }

    /// `L1(R)` norm of the reflected lift; cells are split at sign changes so the rule stays exact-order.
    pub fn lift_l1_norm(&self, w: &WeightParams) -> Result<f64> {
        self.require_subspace()?;
        let half = 0.5 * w.beta();
        let nodes = self.grid.nodes();
        let mut half_line = 0.0;
        for i in 0..self.dcoef.len() {
            let (a, b) = (nodes[i], nodes[i + 1]);
            let (v, d) = (self.values[i], self.dcoef[i]);
            let f = |x: f64| (v + d * (x - a)).abs() * (half * x).exp();
            let vb = self.values[i + 1];
            if v * vb < 0.0 {
                let root = a - v / d;
                half_line += quad::integrate(a, root, f) + quad::integrate(root, b, f);
            } else {
                half_line += quad::integrate(a, b, f);
            }
        }
        Ok(2.0 * half_line)
    }

    /// `int_0^{x} h(eta) d eta` at every node (exact for piecewise-linear curves).
    pub fn cumulative_integral(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.values.len());
        let mut acc = 0.0;
        out.push(0.0);
        for (i, p) in self.values.windows(2).enumerate() {
            acc += 0.5 * (p[0] + p[1]) * self.grid.width(i);
            out.push(acc);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve_space::embedding_constant_c1;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn grid(x_max: f64, n: usize) -> Arc<Grid> {
        Arc::new(Grid::uniform(x_max, n).unwrap())
    }

    #[test]
    fn constant_curve_norm() {
        let w = WeightParams::new(1.0, 2.0).unwrap();
        let c = ForwardCurve::constant(grid(5.0, 10), -3.0);
        assert_eq!(c.hgamma_norm(&w), 3.0);
        assert_eq!(c.h0(), -3.0);
        assert!(matches!(c.l2beta_norm(&w), Err(FcsError::TailNotNegligible { .. })));
    }

    #[test]
    fn eval_single_cell() {
        let h = ForwardCurve::new(grid(1.0, 1), 0.0, vec![-1.0]).unwrap();
        assert_relative_eq!(h.eval(0.25).unwrap(), 0.75, epsilon = 1e-15);
        assert_eq!(h.eval(0.0).unwrap(), h.h0());
        assert_eq!(h.eval(1.0).unwrap(), h.h_inf());
        assert!(matches!(h.eval(1.5), Err(FcsError::OutOfRange { .. })));
        assert!(h.eval(-0.1).is_err());
    }

    #[test]
    fn reconstruction_matches_h0() {
        let g = Arc::new(Grid::geometric(10.0, 17, 5.0).unwrap());
        let dcoef: Vec<f64> = (0..17).map(|i| ((i * 7 % 5) as f64 - 2.0) * 0.3).collect();
        let h = ForwardCurve::new(g.clone(), 0.7, dcoef.clone()).unwrap();
        let direct = 0.7 - dcoef.iter().zip(g.widths()).map(|(d, w)| d * w).sum::<f64>();
        assert_relative_eq!(h.h0(), direct, epsilon = 1e-14);
        assert_eq!(h.eval(0.0).unwrap(), h.h0());
    }

    #[test]
    fn split_parts() {
        let g = grid(30.0, 300);
        let h = ForwardCurve::from_fn(g.clone(), 3.0, |x| (-x).exp() + 3.0).unwrap();
        let (head, level) = h.split();
        assert_eq!(level, 3.0);
        assert!(head.in_subspace());
        let e = ForwardCurve::from_fn(g.clone(), 0.0, |x| (-x).exp()).unwrap();
        for x in [0.0, 0.5, 2.0, 10.0] {
            assert_relative_eq!(head.eval(x).unwrap(), e.eval(x).unwrap(), epsilon = 1e-12);
        }
        let (zero, c) = ForwardCurve::constant(g, 4.0).split();
        assert_eq!(c, 4.0);
        assert_eq!(zero.hgamma_norm(&WeightParams::new(1.0, 2.0).unwrap()), 0.0);
    }

    #[test]
    fn exponential_norms_on_fine_grid() {
        // h = e^{-2x}: ||h||_gamma^2 = 1 + 4/(4 - gamma), ||h||_{L2_beta}^2 = 1/(4 - beta)
        let w = WeightParams::new(1.0, 2.0).unwrap();
        let h = ForwardCurve::from_fn(grid(40.0, 40_000), 0.0, |x| (-2.0 * x).exp()).unwrap();
        assert_relative_eq!(h.hgamma_norm(&w), 3f64.sqrt(), max_relative = 1e-5);
        assert_relative_eq!(h.l2beta_norm(&w).unwrap(), 1.0 / 3f64.sqrt(), max_relative = 1e-5);
        let c1 = embedding_constant_c1(&w);
        assert!(h.l2beta_norm(&w).unwrap() <= c1 * h.hgamma_norm(&w));
    }

    #[test]
    fn lift_has_same_l2_norm() {
        let w = WeightParams::new(1.0, 2.0).unwrap();
        let h = ForwardCurve::from_fn(grid(20.0, 400), 0.0, |x| (-2.0 * x).exp() * (1.0 + x.sin())).unwrap();
        let lift = h.weighted_lift(&w).unwrap();
        // the lift interpolates h e^{x/2} only at nodes, so compare on a fine grid
        assert_relative_eq!(lift.l2_norm(), h.l2beta_norm(&w).unwrap(), max_relative = 1e-3);
        for (x, v) in lift.nodes().iter().zip(lift.values()) {
            assert_relative_eq!(*v, h.eval(*x).unwrap() * (0.5 * x).exp(), epsilon = 1e-14);
        }
        let z = ForwardCurve::zero(grid(1.0, 4)).weighted_lift(&w).unwrap();
        assert!(z.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn embed_norm_matches_h2_norm() {
        let w = WeightParams::new(0.5, 1.5).unwrap();
        let h = ForwardCurve::from_fn(grid(25.0, 100), 0.05, |x| 0.05 + 0.02 * (-x).exp()).unwrap();
        assert_relative_eq!(h.embed(&w).norm(), h.h2_norm(&w), max_relative = 1e-12);
    }

    #[test]
    fn cumulative_integral_of_constant_slope() {
        let h = ForwardCurve::new(grid(2.0, 4), 0.0, vec![-1.0; 4]).unwrap();
        // h(x) = 2 - x on [0, 2]
        let cum = h.cumulative_integral();
        assert_relative_eq!(cum[4], 2.0, epsilon = 1e-14);
        assert_relative_eq!(cum[2], 1.5, epsilon = 1e-14);
    }

    #[test]
    fn rejects_bad_curves() {
        assert!(ForwardCurve::new(grid(1.0, 2), 0.0, vec![1.0]).is_err());
        assert!(ForwardCurve::new(grid(1.0, 1), f64::NAN, vec![1.0]).is_err());
        let a = ForwardCurve::zero(grid(1.0, 2));
        let b = ForwardCurve::zero(grid(1.0, 3));
        assert_eq!(a.add(&b), Err(FcsError::GridMismatch));
    }

    proptest! {
        #[test]
        fn norm_is_homogeneous(d in proptest::collection::vec(-5.0f64..5.0, 12), c in -3.0f64..3.0, s in -4.0f64..4.0) {
            let w = WeightParams::new(1.0, 2.0).unwrap();
            let h = ForwardCurve::new(grid(6.0, 12), c, d).unwrap();
            let lhs = h.scale(s).hgamma_norm(&w);
            prop_assert!((lhs - s.abs() * h.hgamma_norm(&w)).abs() <= 1e-12 * (1.0 + lhs));
        }

        #[test]
        fn beta_norm_below_gamma_norm(d in proptest::collection::vec(-5.0f64..5.0, 10), beta in 0.1f64..2.0, gap in 0.01f64..3.0) {
            let h = ForwardCurve::new(grid(8.0, 10), 0.0, d).unwrap();
            prop_assert!(h.h_norm_with(beta) <= h.h_norm_with(beta + gap) * (1.0 + 1e-12));
        }

        #[test]
        fn embedding_inequality(d in proptest::collection::vec(-1.0f64..1.0, 16), beta in 0.1f64..2.0, gap in 0.05f64..3.0) {
            let w = WeightParams::new(beta, beta + gap).unwrap();
            let g = Arc::new(Grid::geometric(w.default_x_max(), 16, 8.0).unwrap());
            let h = ForwardCurve::new(g, 0.0, d).unwrap();
            let lhs = h.l2beta_norm(&w).unwrap();
            let rhs = embedding_constant_c1(&w) * h.hgamma_norm(&w);
            prop_assert!(lhs <= rhs * (1.0 + 1e-8));
        }
    }
}
