//! Weighted forward-curve spaces on a truncated half-line grid.
//!
//! `H_gamma` holds absolutely continuous curves with norm
//! `(|h(0)|^2 + int |h'(x)|^2 e^{gamma x} dx)^{1/2}`; `L2_beta` is the
//! Lebesgue space with weight `e^{beta x}`. Curves are stored through a
//! piecewise-constant derivative so every `H_gamma` inner product reduces to
//! closed-form cell integrals.

mod forward;
mod grid;
mod sampled;
mod text;

pub use forward::ForwardCurve;
pub use grid::{Grid, GridKind, GEOMETRIC_STRETCH};
pub use sampled::{reflect, ProductElement, SampledCurve};
pub use text::{fmt17, read_curve, write_curve, CurveFile};

use crate::error::{FcsError, Result};

/// Tail level used to pick the truncation point `x_max`.
pub const TAIL_TOLERANCE: f64 = 1e-10;

/// Weight exponents of the two spaces plus the midpoint `delta = (beta + gamma) / 2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightParams {
    beta: f64,
    gamma: f64,
    delta: f64,
}

impl WeightParams {
    pub fn new(beta: f64, gamma: f64) -> Result<Self> {
        if !(beta.is_finite() && gamma.is_finite() && beta > 0.0 && gamma > beta) {
            return Err(FcsError::InvalidWeights { beta, gamma });
        }
        Ok(Self {
            beta,
            gamma,
            delta: 0.5 * (beta + gamma),
        })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// Smallest `x_max` with `e^{-(gamma - beta) x_max} < TAIL_TOLERANCE`, rounded up to an integer.
    pub fn default_x_max(&self) -> f64 {
        ((1.0 / TAIL_TOLERANCE).ln() / (self.gamma - self.beta)).ceil()
    }
}

/// `C1 = 1 / sqrt(gamma (gamma - beta))`, the constant of `||h||_{L2_beta} <= C1 ||h||_gamma` on `H0_gamma`.
pub fn embedding_constant_c1(w: &WeightParams) -> f64 {
    c1_raw(w.beta, w.gamma)
}

fn c1_raw(beta: f64, gamma: f64) -> f64 {
    1.0 / (gamma * (gamma - beta)).sqrt()
}

/// `C2 = sqrt(2 C1^2 + 4 + beta^2 C1^2)`, bounding the W1(R) norm of the reflected lift
/// `(h e^{(beta/2) x})^*` by `C2 ||h||_gamma`.
pub fn embedding_constant_c2(w: &WeightParams) -> f64 {
    let c1 = embedding_constant_c1(w);
    (2.0 * c1 * c1 + 4.0 + w.beta * w.beta * c1 * c1).sqrt()
}

/// `C3 = 2 C1(delta, gamma) / sqrt(delta - beta)`, bounding the L1(R) norm of the reflected lift.
pub fn embedding_constant_c3(w: &WeightParams) -> f64 {
    2.0 * c1_raw(w.delta, w.gamma) * (1.0 / (w.delta - w.beta)).sqrt()
}
