use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use super::WeightParams;
use crate::error::{FcsError, Result};

/// Ratio between the widest and the narrowest cell of a geometric grid.
pub const GEOMETRIC_STRETCH: f64 = 8.0;

/// Strictly increasing nodes `0 = x_0 < x_1 < ... < x_n = x_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    nodes: Vec<f64>,
}

impl Grid {
    pub fn from_nodes(nodes: Vec<f64>) -> Result<Self> {
        if nodes.len() < 2 {
            return Err(FcsError::InvalidGrid("need at least one cell".into()));
        }
        if nodes[0] != 0.0 {
            return Err(FcsError::InvalidGrid(format!("first node is {}, expected 0", nodes[0])));
        }
        if nodes.iter().any(|x| !x.is_finite()) {
            return Err(FcsError::InvalidGrid("non-finite node".into()));
        }
        if let Some(i) = nodes.windows(2).position(|p| p[1] <= p[0]) {
            return Err(FcsError::InvalidGrid(format!("cell {i} has non-positive width")));
        }
        Ok(Self { nodes })
    }

    pub fn uniform(x_max: f64, n_cells: usize) -> Result<Self> {
        check_extent(x_max, n_cells)?;
        let h = x_max / n_cells as f64;
        let mut nodes: Vec<f64> = (0..=n_cells).map(|i| i as f64 * h).collect();
        nodes[n_cells] = x_max;
        Self::from_nodes(nodes)
    }

    /// Cell widths grow geometrically toward `x_max`; the last cell is `stretch` times the first.
    pub fn geometric(x_max: f64, n_cells: usize, stretch: f64) -> Result<Self> {
        check_extent(x_max, n_cells)?;
        if !(stretch >= 1.0 && stretch.is_finite()) {
            return Err(FcsError::InvalidGrid(format!("stretch {stretch} must be >= 1")));
        }
        if n_cells == 1 || stretch == 1.0 {
            return Self::uniform(x_max, n_cells);
        }
        let ratio = stretch.powf(1.0 / (n_cells - 1) as f64);
        let first = x_max * (ratio - 1.0) / (ratio.powi(n_cells as i32) - 1.0);
        let mut nodes = Vec::with_capacity(n_cells + 1);
        let mut x = 0.0;
        let mut w = first;
        nodes.push(0.0);
        for _ in 0..n_cells {
            x += w;
            w *= ratio;
            nodes.push(x);
        }
        nodes[n_cells] = x_max;
        Self::from_nodes(nodes)
    }

    /// Nodes equally spaced in `t = e^{-rate x}`, the coordinate in which the singular
    /// functions of the embedding oscillate uniformly.
    pub fn stretched(x_max: f64, n_cells: usize, rate: f64) -> Result<Self> {
        check_extent(x_max, n_cells)?;
        if !(rate > 0.0 && rate.is_finite()) {
            return Err(FcsError::InvalidGrid(format!("rate {rate} must be positive")));
        }
        let span = -(-rate * x_max).exp_m1();
        let mut nodes: Vec<f64> = (0..=n_cells)
            .map(|i| -(-(i as f64 / n_cells as f64) * span).ln_1p() / rate)
            .collect();
        nodes[0] = 0.0;
        nodes[n_cells] = x_max;
        Self::from_nodes(nodes)
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn n_cells(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn x_max(&self) -> f64 {
        self.nodes[self.nodes.len() - 1]
    }

    pub fn cell(&self, i: usize) -> (f64, f64) {
        (self.nodes[i], self.nodes[i + 1])
    }

    pub fn width(&self, i: usize) -> f64 {
        self.nodes[i + 1] - self.nodes[i]
    }

    pub fn widths(&self) -> impl Iterator<Item = f64> + '_ {
        self.nodes.windows(2).map(|p| p[1] - p[0])
    }

    pub fn min_width(&self) -> f64 {
        self.widths().fold(f64::INFINITY, f64::min)
    }

    /// Index of the cell containing `x`; the right end maps to the last cell.
    pub fn locate(&self, x: f64) -> usize {
        let n = self.n_cells();
        match self.nodes.partition_point(|&node| node <= x) {
            0 => 0,
            k => (k - 1).min(n - 1),
        }
    }

    /// Closed-form `int_cell e^{rate x} dx` for every cell.
    pub fn exp_cell_integrals(&self, rate: f64) -> Vec<f64> {
        self.nodes
            .windows(2)
            .map(|p| crate::quad::exp_integral(rate, p[0], p[1]))
            .collect()
    }
}

fn check_extent(x_max: f64, n_cells: usize) -> Result<()> {
    if !(x_max > 0.0 && x_max.is_finite()) {
        return Err(FcsError::InvalidGrid(format!("x_max {x_max} must be positive")));
    }
    if n_cells == 0 {
        return Err(FcsError::InvalidGrid("need at least one cell".into()));
    }
    Ok(())
}

pub(crate) fn same_grid(a: &Arc<Grid>, b: &Arc<Grid>) -> bool {
    Arc::ptr_eq(a, b) || a.nodes == b.nodes
}

/// Grid families selectable from configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridKind {
    Uniform,
    Geometric,
    Stretched,
}

impl GridKind {
    pub fn build(self, x_max: f64, n_cells: usize, w: &WeightParams) -> Result<Grid> {
        match self {
            GridKind::Uniform => Grid::uniform(x_max, n_cells),
            GridKind::Geometric => Grid::geometric(x_max, n_cells, GEOMETRIC_STRETCH),
            GridKind::Stretched => Grid::stretched(x_max, n_cells, 0.5 * (w.gamma() - w.beta())),
        }
    }
}

impl FromStr for GridKind {
    type Err = FcsError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform" => Ok(GridKind::Uniform),
            "geometric" => Ok(GridKind::Geometric),
            "stretched" => Ok(GridKind::Stretched),
            other => Err(FcsError::Parse(format!(
                "unknown grid kind '{other}' (expected uniform, geometric or stretched)"
            ))),
        }
    }
}

impl fmt::Display for GridKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GridKind::Uniform => "uniform",
            GridKind::Geometric => "geometric",
            GridKind::Stretched => "stretched",
        })
    }
}
