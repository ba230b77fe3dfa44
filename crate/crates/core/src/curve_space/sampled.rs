use crate::error::{FcsError, Result};
use crate::quad;

/// Node samples of a function, read as their piecewise-linear interpolant, in
/// `L2(e^{weight x} dx)` over the sampled interval. `weight = 0` gives plain `L2`.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledCurve {
    nodes: Vec<f64>,
    values: Vec<f64>,
    weight: f64,
}

impl SampledCurve {
    pub fn new(nodes: Vec<f64>, values: Vec<f64>, weight: f64) -> Result<Self> {
        if nodes.len() != values.len() || nodes.len() < 2 {
            return Err(FcsError::InvalidArgument(format!(
                "{} nodes and {} values",
                nodes.len(),
                values.len()
            )));
        }
        if nodes.windows(2).any(|p| !(p[1] > p[0])) {
            return Err(FcsError::InvalidGrid("sample nodes must increase strictly".into()));
        }
        if values.iter().chain(&nodes).any(|v| !v.is_finite()) || !weight.is_finite() {
            return Err(FcsError::InvalidArgument("non-finite samples".into()));
        }
        Ok(Self { nodes, values, weight })
    }

    pub fn from_fn<F: Fn(f64) -> f64>(nodes: Vec<f64>, weight: f64, f: F) -> Result<Self> {
        let values = nodes.iter().map(|&x| f(x)).collect();
        Self::new(nodes, values, weight)
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn weight(&self) -> f64 {
        self.weight
    }

    pub fn eval(&self, x: f64) -> Result<f64> {
        let (lo, hi) = (self.nodes[0], self.nodes[self.nodes.len() - 1]);
        if !(lo..=hi).contains(&x) {
            return Err(FcsError::OutOfRange { x, x_max: hi });
        }
        let k = self.nodes.partition_point(|&n| n <= x).clamp(1, self.nodes.len() - 1) - 1;
        let (a, b) = (self.nodes[k], self.nodes[k + 1]);
        let t = (x - a) / (b - a);
        Ok(self.values[k] * (1.0 - t) + self.values[k + 1] * t)
    }

    fn cells(&self) -> impl Iterator<Item = (f64, f64, f64, f64)> + '_ {
        self.nodes
            .windows(2)
            .zip(self.values.windows(2))
            .map(|(x, v)| (x[0], x[1], v[0], v[1]))
    }

    pub fn l2_inner(&self, other: &SampledCurve) -> Result<f64> {
        if self.nodes != other.nodes || self.weight != other.weight {
            return Err(FcsError::GridMismatch);
        }
        let rate = self.weight;
        let total = self
            .cells()
            .zip(other.values.windows(2))
            .map(|((a, b, fa, fb), g)| {
                let w = b - a;
                if rate == 0.0 {
                    // exact for products of linear pieces
                    w * (2.0 * fa * g[0] + fa * g[1] + fb * g[0] + 2.0 * fb * g[1]) / 6.0
                } else {
                    quad::integrate(a, b, |x| {
                        let t = (x - a) / w;
                        (fa + (fb - fa) * t) * (g[0] + (g[1] - g[0]) * t) * (rate * x).exp()
                    })
                }
            })
            .sum();
        Ok(total)
    }

    pub fn l2_norm(&self) -> f64 {
        self.l2_inner(self).expect("same nodes").max(0.0).sqrt()
    }

    /// `(int (f^2 + f'^2) e^{weight x} dx)^{1/2}` for the interpolant.
    pub fn sobolev_norm(&self) -> f64 {
        let rate = self.weight;
        let deriv: f64 = self
            .cells()
            .map(|(a, b, fa, fb)| {
                let slope = (fb - fa) / (b - a);
                slope * slope * quad::exp_integral(rate, a, b)
            })
            .sum();
        (self.l2_norm().powi(2) + deriv).sqrt()
    }

    pub fn l1_norm(&self) -> f64 {
        let rate = self.weight;
        self.cells()
            .map(|(a, b, fa, fb)| {
                let f = |x: f64| (fa + (fb - fa) * (x - a) / (b - a)).abs() * (rate * x).exp();
                if fa * fb < 0.0 {
                    let root = a + (b - a) * fa / (fa - fb);
                    quad::integrate(a, root, f) + quad::integrate(root, b, f)
                } else {
                    quad::integrate(a, b, f)
                }
            })
            .sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Even reflection `h^*(x) = h(|x|)` of samples on `[0, L]` onto the mirrored nodes of `[-L, L]`.
pub fn reflect(h: &SampledCurve) -> Result<SampledCurve> {
    if h.nodes[0] != 0.0 {
        return Err(FcsError::InvalidGrid("reflection needs samples starting at x = 0".into()));
    }
    let n = h.nodes.len();
    let mut nodes = Vec::with_capacity(2 * n - 1);
    let mut values = Vec::with_capacity(2 * n - 1);
    for k in (1..n).rev() {
        nodes.push(-h.nodes[k]);
        values.push(h.values[k]);
    }
    nodes.extend_from_slice(&h.nodes);
    values.extend_from_slice(&h.values);
    SampledCurve::new(nodes, values, 0.0)
}

/// An element of `L2_beta (+) R`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductElement {
    pub l2_part: SampledCurve,
    pub scalar_part: f64,
}

impl ProductElement {
    pub fn new(l2_part: SampledCurve, scalar_part: f64) -> Self {
        Self { l2_part, scalar_part }
    }

    pub fn norm(&self) -> f64 {
        (self.l2_part.l2_norm().powi(2) + self.scalar_part * self.scalar_part).sqrt()
    }
}
