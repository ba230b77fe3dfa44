//! Galerkin discretization of the embedding `H_gamma -> L2_beta (+) R`.
//!
//! The trial space is spanned by cell ramps `b_i` (derivative = indicator of cell `i`,
//! `b_i(inf) = 0`), optionally joined by the constant curve `1`, whose image in
//! `L2_beta (+) R` is `(0, 1)`. The singular system of the identity on that space comes from
//! the generalized eigenproblem `G_l v = mu G_h v`, solved by Cholesky reduction of `G_h`
//! and a symmetric eigensolve.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::curve_space::{ForwardCurve, Grid, WeightParams};
use crate::error::{FcsError, Result};
use crate::quad;

/// Singular values below this are discarded; `f_k = e_k / s_k` would amplify rounding noise.
pub const MODE_CUTOFF: f64 = 1e-13;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum BasisKind {
    /// Cell ramps only: a subspace of `H0_gamma`.
    Ramps,
    /// Cell ramps plus the constant curve: a subspace of `H_gamma`.
    RampsAndLevel,
    Custom,
}

#[derive(Debug, Clone)]
pub struct BasisSet {
    grid: Arc<Grid>,
    params: WeightParams,
    curves: Vec<ForwardCurve>,
    kind: BasisKind,
}

impl BasisSet {
    fn ramps(grid: &Arc<Grid>) -> Vec<ForwardCurve> {
        let n = grid.n_cells();
        (0..n)
            .map(|i| {
                let mut d = vec![0.0; n];
                d[i] = 1.0;
                ForwardCurve::new(grid.clone(), 0.0, d).expect("unit ramp is valid")
            })
            .collect()
    }

    /// One ramp per cell, spanning every grid curve in `H0_gamma`.
    pub fn cell_ramps(grid: Arc<Grid>, params: WeightParams) -> Self {
        let curves = Self::ramps(&grid);
        Self {
            grid,
            params,
            curves,
            kind: BasisKind::Ramps,
        }
    }

    /// Cell ramps plus the constant curve, spanning every grid curve in `H_gamma`.
    pub fn with_level(grid: Arc<Grid>, params: WeightParams) -> Self {
        let mut curves = Self::ramps(&grid);
        curves.push(ForwardCurve::constant(grid.clone(), 1.0));
        Self {
            grid,
            params,
            curves,
            kind: BasisKind::RampsAndLevel,
        }
    }

    /// An arbitrary finite family of curves on `grid`.
    pub fn from_curves(grid: Arc<Grid>, params: WeightParams, curves: Vec<ForwardCurve>) -> Result<Self> {
        if curves.is_empty() {
            return Err(FcsError::InvalidArgument("empty basis".into()));
        }
        let probe = ForwardCurve::zero(grid.clone());
        if curves.iter().any(|c| !c.same_grid(&probe)) {
            return Err(FcsError::GridMismatch);
        }
        Ok(Self {
            grid,
            params,
            curves,
            kind: BasisKind::Custom,
        })
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn params(&self) -> &WeightParams {
        &self.params
    }

    pub fn curves(&self) -> &[ForwardCurve] {
        &self.curves
    }

    pub fn len(&self) -> usize {
        self.curves.len()
    }

    pub fn is_empty(&self) -> bool {
        self.curves.is_empty()
    }

    /// Whether the span includes curves with `h(inf) != 0`.
    pub fn spans_levels(&self) -> bool {
        match self.kind {
            BasisKind::Ramps => false,
            BasisKind::RampsAndLevel => true,
            BasisKind::Custom => self.curves.iter().any(|c| c.h_inf() != 0.0),
        }
    }

    /// Coordinates of a grid curve in this basis.
    pub fn coordinates(&self, h: &ForwardCurve) -> Result<DVector<f64>> {
        if !h.same_grid(&self.curves[0]) {
            return Err(FcsError::BasisMismatch);
        }
        match self.kind {
            BasisKind::Ramps if h.in_subspace() => Ok(DVector::from_column_slice(h.dcoef())),
            BasisKind::RampsAndLevel => {
                let mut c = DVector::zeros(self.len());
                c.rows_mut(0, h.dcoef().len()).copy_from_slice(h.dcoef());
                c[self.len() - 1] = h.h_inf();
                Ok(c)
            }
            _ => Err(FcsError::BasisMismatch),
        }
    }

    /// The curve `sum_i coefs[i] b_i`.
    pub fn curve(&self, coefs: &[f64]) -> ForwardCurve {
        let n = self.grid.n_cells();
        match self.kind {
            BasisKind::Ramps => ForwardCurve::new(self.grid.clone(), 0.0, coefs.to_vec()),
            BasisKind::RampsAndLevel => ForwardCurve::new(self.grid.clone(), coefs[n], coefs[..n].to_vec()),
            BasisKind::Custom => ForwardCurve::combine(self.grid.clone(), coefs, &self.curves),
        }
        .expect("coefficients match the basis")
    }
}

/// Gram matrices of the basis in `H_gamma` and in `L2_beta (+) R`.
#[derive(Debug, Clone)]
pub struct GramPair {
    pub gram_h: DMatrix<f64>,
    pub gram_l: DMatrix<f64>,
}

/// Assembles both Gram matrices: closed-form cell integrals for `G_h`, the eight-point
/// rule per cell for `G_l`.
pub fn assemble_gram(basis: &BasisSet) -> Result<GramPair> {
    let m = basis.len();
    let grid = basis.grid();
    let n = grid.n_cells();
    let gamma = basis.params.gamma();
    let beta = basis.params.beta();

    let energy = grid.exp_cell_integrals(gamma);
    let mut derivs = DMatrix::zeros(m, n);
    let mut scaled = DMatrix::zeros(m, n);
    let mut heads = DVector::zeros(m);
    let mut levels = DVector::zeros(m);
    for (r, b) in basis.curves.iter().enumerate() {
        heads[r] = b.h0();
        levels[r] = b.h_inf();
        for (c, (&d, &e)) in b.dcoef().iter().zip(&energy).enumerate() {
            derivs[(r, c)] = d;
            scaled[(r, c)] = d * e;
        }
    }
    let mut gram_h = &derivs * scaled.transpose();
    gram_h.ger(1.0, &heads, &heads, 1.0);

    // values of b - b(inf) at every quadrature point, with sqrt weights folded in
    let nq = n * quad::ORDER;
    let mut samples = DMatrix::zeros(m, nq);
    for (r, b) in basis.curves.iter().enumerate() {
        let values = b.node_values();
        for c in 0..n {
            let (a, bb) = grid.cell(c);
            for (q, (x, w)) in quad::cell_rule(a, bb).into_iter().enumerate() {
                let v = values[c] + b.dcoef()[c] * (x - a) - b.h_inf();
                samples[(r, c * quad::ORDER + q)] = v * (w * (beta * x).exp()).sqrt();
            }
        }
    }
    let mut gram_l = &samples * samples.transpose();
    gram_l.ger(1.0, &levels, &levels, 1.0);

    symmetrize(&mut gram_h);
    symmetrize(&mut gram_l);
    if gram_h.clone().cholesky().is_none() {
        return Err(FcsError::SingularGram);
    }
    Ok(GramPair { gram_h, gram_l })
}

fn symmetrize(m: &mut DMatrix<f64>) {
    let t = m.transpose();
    *m += t;
    *m *= 0.5;
}

/// Singular numbers `s_k` with `H_gamma`-orthonormal `e_k` and `L2_beta (+) R`-orthonormal
/// `f_k`, so that `h = sum_k s_k <h, e_k>_gamma f_k` on the trial space.
#[derive(Debug, Clone)]
pub struct SingularSystem {
    basis: Arc<BasisSet>,
    s: Vec<f64>,
    e: Vec<ForwardCurve>,
    f: Vec<ForwardCurve>,
    e_coefs: DMatrix<f64>,
    f_coefs: DMatrix<f64>,
    /// Lower Cholesky factor of `G_h`.
    chol: DMatrix<f64>,
    /// Square root of the whitened operator `L^{-1} G_l L^{-T}`, all modes kept.
    whitened_root: DMatrix<f64>,
    gram: GramPair,
}

impl SingularSystem {
    pub fn compute(basis: BasisSet) -> Result<Self> {
        let gram = assemble_gram(&basis)?;
        Self::from_gram(Arc::new(basis), gram)
    }

    pub fn from_gram(basis: Arc<BasisSet>, gram: GramPair) -> Result<Self> {
        let m = basis.len();
        let chol = gram
            .gram_h
            .clone()
            .cholesky()
            .ok_or(FcsError::SingularGram)?
            .unpack();

        // C = L^{-1} G_l L^{-T}
        let left = chol
            .solve_lower_triangular(&gram.gram_l)
            .ok_or(FcsError::SingularGram)?;
        let mut whitened = chol
            .solve_lower_triangular(&left.transpose())
            .ok_or(FcsError::SingularGram)?;
        symmetrize(&mut whitened);

        let eig = whitened
            .clone()
            .try_symmetric_eigen(f64::EPSILON, 10_000)
            .ok_or_else(|| FcsError::EigenFailure("symmetric eigensolver did not converge".into()))?;
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));

        let mut root_vecs = DMatrix::zeros(m, m);
        let mut root_vals = DVector::zeros(m);
        for (dst, &src) in order.iter().enumerate() {
            root_vecs.set_column(dst, &eig.eigenvectors.column(src));
            root_vals[dst] = eig.eigenvalues[src].max(0.0).sqrt();
        }
        let whitened_root = &root_vecs * DMatrix::from_diagonal(&root_vals) * root_vecs.transpose();

        let kept = root_vals.iter().take_while(|&&s| s > MODE_CUTOFF).count();
        let chol_t = chol.transpose();
        let mut e_coefs = DMatrix::zeros(m, kept);
        let mut f_coefs = DMatrix::zeros(m, kept);
        let mut s = Vec::with_capacity(kept);
        for k in 0..kept {
            let mut v: DVector<f64> = root_vecs.column(k).into_owned();
            // sign convention: first significant entry of e_k positive
            let e_k = chol_t.solve_upper_triangular(&v).ok_or(FcsError::SingularGram)?;
            let scale = e_k.amax();
            if let Some(first) = e_k.iter().find(|c| c.abs() > 1e-12 * scale) {
                if *first < 0.0 {
                    v.neg_mut();
                }
            }
            let e_k = chol_t.solve_upper_triangular(&v).ok_or(FcsError::SingularGram)?;
            let mut f_k = &e_k / root_vals[k];
            let norm = f_k.dot(&(&gram.gram_l * &f_k)).sqrt();
            f_k /= norm;
            e_coefs.set_column(k, &e_k);
            f_coefs.set_column(k, &f_k);
            s.push(root_vals[k]);
        }

        let e = (0..kept).map(|k| basis.curve(e_coefs.column(k).as_slice())).collect();
        let f = (0..kept).map(|k| basis.curve(f_coefs.column(k).as_slice())).collect();
        Ok(Self {
            basis,
            s,
            e,
            f,
            e_coefs,
            f_coefs,
            chol,
            whitened_root,
            gram,
        })
    }

    pub fn basis(&self) -> &Arc<BasisSet> {
        &self.basis
    }

    pub fn params(&self) -> &WeightParams {
        self.basis.params()
    }

    pub fn gram(&self) -> &GramPair {
        &self.gram
    }

    pub fn singular_values(&self) -> &[f64] {
        &self.s
    }

    pub fn rank(&self) -> usize {
        self.s.len()
    }

    /// `s_{n+1}` in one-based numbering, or 0 when every retained mode is used.
    pub fn next_singular_value(&self, n: usize) -> f64 {
        self.s.get(n).copied().unwrap_or(0.0)
    }

    pub fn e(&self) -> &[ForwardCurve] {
        &self.e
    }

    pub fn f(&self) -> &[ForwardCurve] {
        &self.f
    }

    pub fn e_coefs(&self) -> &DMatrix<f64> {
        &self.e_coefs
    }

    pub fn f_coefs(&self) -> &DMatrix<f64> {
        &self.f_coefs
    }

    /// Whitened matrix `L^T M L^{-T}` of `M = sum_k s_k f_k z_k^T G_h`.
    fn whitened_operator(&self, op: &FiniteRankOperator) -> DMatrix<f64> {
        let m = self.basis.len();
        let lt = self.chol.transpose();
        let mut out = DMatrix::zeros(m, m);
        for k in 0..op.rank {
            let fhat = &lt * op.target_coefs.column(k);
            let zhat = &lt * op.functional_coefs.column(k);
            out.ger(op.weights[k], &fhat, &zhat, 1.0);
        }
        out
    }

    fn check_operator(&self, op: &FiniteRankOperator) -> Result<()> {
        if Arc::ptr_eq(&self.basis, &op.basis) {
            Ok(())
        } else {
            Err(FcsError::BasisMismatch)
        }
    }

    fn whitened_norm(&self, w: &DMatrix<f64>) -> Result<f64> {
        let a = &self.whitened_root * w;
        let sv = a
            .try_svd(false, false, f64::EPSILON, 10_000)
            .ok_or_else(|| FcsError::EigenFailure("SVD did not converge".into()))?
            .singular_values;
        Ok(sv.iter().fold(0.0, |acc: f64, &x| acc.max(x)))
    }

    /// `||op - Id||` from the trial space in `H_gamma` to `L2_beta (+) R`.
    pub fn operator_defect(&self, op: &FiniteRankOperator) -> Result<f64> {
        self.check_operator(op)?;
        let mut w = self.whitened_operator(op);
        for i in 0..w.nrows() {
            w[(i, i)] -= 1.0;
        }
        self.whitened_norm(&w)
    }

    /// `||a - b||` from `H_gamma` to `L2_beta (+) R`.
    pub fn operator_distance(&self, a: &FiniteRankOperator, b: &FiniteRankOperator) -> Result<f64> {
        self.check_operator(a)?;
        self.check_operator(b)?;
        let w = self.whitened_operator(a) - self.whitened_operator(b);
        self.whitened_norm(&w)
    }

    /// `T_n h = sum_{k <= n} s_k <h, e_k>_gamma f_k`.
    pub fn make_tn(&self, n: usize) -> Result<FiniteRankOperator> {
        if n > self.rank() {
            return Err(FcsError::RankTooLarge {
                requested: n,
                available: self.rank(),
            });
        }
        Ok(FiniteRankOperator {
            basis: self.basis.clone(),
            params: *self.params(),
            rank: n,
            functionals: self.e[..n].to_vec(),
            functional_coefs: self.e_coefs.columns(0, n).into_owned(),
            weights: self.s[..n].to_vec(),
            targets: self.f[..n].to_vec(),
            target_coefs: self.f_coefs.columns(0, n).into_owned(),
            budget: 0.0,
            regularity: "exact singular vectors".into(),
        })
    }

    /// `S_n`: like `T_n` but with analysing functionals `zeta_k = e_k + p_k`, where `p_k` is a
    /// seeded random combination of the leading singular vectors with
    /// `||p_k||_gamma < eps / (2^k s_k)`. `eps = 0` gives `T_n`.
    pub fn perturb_functionals(&self, n: usize, eps: f64, seed: u64) -> Result<FiniteRankOperator> {
        if !(eps >= 0.0 && eps.is_finite()) {
            return Err(FcsError::InvalidArgument(format!("perturbation budget {eps} must be >= 0")));
        }
        let mut op = self.make_tn(n)?;
        if eps == 0.0 || n == 0 {
            return Ok(op);
        }
        let span = self.rank().min(PERTURBATION_MODES);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(n as u64);
        for k in 0..n {
            let g: Vec<f64> = (0..span).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
            let g_norm = g.iter().map(|x| x * x).sum::<f64>().sqrt();
            let budget = eps / (2f64.powi(k as i32 + 1) * self.s[k]);
            let size = budget * rng.random_range(0.25..0.9) / g_norm;
            let mut col = self.e_coefs.column(k).into_owned();
            for (j, gj) in g.iter().enumerate() {
                col.axpy(size * gj, &self.e_coefs.column(j), 1.0);
            }
            op.functionals[k] = self.basis.curve(col.as_slice());
            op.functional_coefs.set_column(k, &col);
        }
        op.budget = eps;
        op.regularity = format!("random combinations of the leading {span} singular vectors");
        Ok(op)
    }
}

/// Number of leading singular vectors mixed into each perturbation.
pub const PERTURBATION_MODES: usize = 8;

/// `h -> sum_{k <= n} s_k <h, zeta_k>_gamma f_k`, mapping into `F_n = span(f_1..f_n)`.
#[derive(Debug, Clone)]
pub struct FiniteRankOperator {
    basis: Arc<BasisSet>,
    params: WeightParams,
    rank: usize,
    functionals: Vec<ForwardCurve>,
    functional_coefs: DMatrix<f64>,
    weights: Vec<f64>,
    targets: Vec<ForwardCurve>,
    target_coefs: DMatrix<f64>,
    budget: f64,
    regularity: String,
}

impl FiniteRankOperator {
    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn basis(&self) -> &Arc<BasisSet> {
        &self.basis
    }

    pub fn functionals(&self) -> &[ForwardCurve] {
        &self.functionals
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn targets(&self) -> &[ForwardCurve] {
        &self.targets
    }

    /// The perturbation budget `eps` the functionals were drawn with (0 for `T_n`).
    pub fn budget(&self) -> f64 {
        self.budget
    }

    /// Description of how the analysing functionals were built.
    pub fn regularity(&self) -> &str {
        &self.regularity
    }

    /// Coordinates `s_k <h, zeta_k>_gamma` of the image in the `f_k` frame.
    pub fn coefficients(&self, h: &ForwardCurve) -> Result<Vec<f64>> {
        if !h.same_grid(&self.basis.curves()[0]) {
            return Err(FcsError::BasisMismatch);
        }
        self.functionals
            .iter()
            .zip(&self.weights)
            .map(|(z, s)| Ok(s * h.hgamma_inner(z, &self.params)?))
            .collect()
    }

    /// The element of `F_n` with the given coordinates in the `f_k` frame.
    pub fn reconstruct(&self, coefs: &[f64]) -> ForwardCurve {
        ForwardCurve::combine(self.basis.grid().clone(), coefs, &self.targets).expect("targets share the grid")
    }

    pub fn apply(&self, h: &ForwardCurve) -> Result<ForwardCurve> {
        Ok(self.reconstruct(&self.coefficients(h)?))
    }
}
