//! Flat text format for curves:
//!
//! ```text
//! grid x_max=<float> n_cells=<int>
//! <h0> <h_inf>
//! <dcoef_0>
//! ...
//! ```
//!
//! Floats carry 17 significant digits so a write/read cycle is bit-exact.

use std::fmt::Write as _;
use std::sync::Arc;

use super::{ForwardCurve, Grid};
use crate::error::{FcsError, Result};

/// Formats a float with 17 significant digits.
pub fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_curve(h: &ForwardCurve) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "grid x_max={} n_cells={}",
        fmt17(h.grid().x_max()),
        h.grid().n_cells()
    );
    let _ = writeln!(out, "{} {}", fmt17(h.h0()), fmt17(h.h_inf()));
    for d in h.dcoef() {
        let _ = writeln!(out, "{}", fmt17(*d));
    }
    out
}

/// Parsed contents of a curve file, not yet bound to a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveFile {
    pub x_max: f64,
    pub n_cells: usize,
    pub h0: f64,
    pub h_inf: f64,
    pub dcoef: Vec<f64>,
}

fn parse_f64(token: &str, line: usize) -> Result<f64> {
    token
        .parse::<f64>()
        .map_err(|_| FcsError::Parse(format!("line {line}: '{token}' is not a number")))
}

pub fn read_curve(text: &str) -> Result<CurveFile> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines.next().ok_or_else(|| FcsError::Parse("empty curve file".into()))?;
    let mut parts = header.split_whitespace();
    if parts.next() != Some("grid") {
        return Err(FcsError::Parse("header must start with 'grid'".into()));
    }
    let mut x_max = None;
    let mut n_cells = None;
    for part in parts {
        match part.split_once('=') {
            Some(("x_max", v)) => x_max = Some(parse_f64(v, 1)?),
            Some(("n_cells", v)) => {
                n_cells = Some(
                    v.parse::<usize>()
                        .map_err(|_| FcsError::Parse(format!("line 1: bad n_cells '{v}'")))?,
                )
            }
            _ => return Err(FcsError::Parse(format!("line 1: unexpected token '{part}'"))),
        }
    }
    let x_max = x_max.ok_or_else(|| FcsError::Parse("header lacks x_max".into()))?;
    let n_cells = n_cells.ok_or_else(|| FcsError::Parse("header lacks n_cells".into()))?;

    let (idx, levels) = lines.next().ok_or_else(|| FcsError::Parse("missing 'h0 h_inf' line".into()))?;
    let levels: Vec<&str> = levels.split_whitespace().collect();
    if levels.len() != 2 {
        return Err(FcsError::Parse(format!("line {}: expected 'h0 h_inf'", idx + 1)));
    }
    let h0 = parse_f64(levels[0], idx + 1)?;
    let h_inf = parse_f64(levels[1], idx + 1)?;
    let dcoef = lines
        .map(|(i, l)| parse_f64(l.trim(), i + 1))
        .collect::<Result<Vec<f64>>>()?;
    if dcoef.len() != n_cells {
        return Err(FcsError::Parse(format!(
            "header announces {n_cells} cells, found {} coefficients",
            dcoef.len()
        )));
    }
    Ok(CurveFile {
        x_max,
        n_cells,
        h0,
        h_inf,
        dcoef,
    })
}

impl CurveFile {
    /// Binds the coefficients to `grid`, which must match the header.
    pub fn on_grid(&self, grid: Arc<Grid>) -> Result<ForwardCurve> {
        if grid.n_cells() != self.n_cells || grid.x_max() != self.x_max {
            return Err(FcsError::GridMismatch);
        }
        let h = ForwardCurve::new(grid, self.h_inf, self.dcoef.clone())?;
        let scale = 1.0 + h.h0().abs().max(self.h0.abs());
        if (h.h0() - self.h0).abs() > 1e-9 * scale {
            return Err(FcsError::Parse(format!(
                "h0 = {} disagrees with the reconstruction {}",
                self.h0,
                h.h0()
            )));
        }
        Ok(h)
    }

    /// Binds the coefficients to a uniform grid described by the header.
    pub fn on_uniform_grid(&self) -> Result<ForwardCurve> {
        self.on_grid(Arc::new(Grid::uniform(self.x_max, self.n_cells)?))
    }
}

impl ForwardCurve {
    /// Interpolates this curve at the nodes of another grid.
    pub fn resample(&self, grid: Arc<Grid>) -> Result<ForwardCurve> {
        let offset = self.h_inf() - self.eval_extended(grid.x_max());
        ForwardCurve::from_fn(grid, self.h_inf(), |x| self.eval_extended(x) + offset)
    }
}
