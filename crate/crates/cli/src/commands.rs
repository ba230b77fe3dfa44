//! Subcommand bodies. Each returns its checks and the files to write; nothing touches the
//! output directory until every computation has succeeded.

use fcs_core::approx::{audit_est_epsilon_n, audit_norm_conv, audit_uni_local, mean_square_error, ErrorReport};
use fcs_core::curve_space::{embedding_constant_c1, write_curve};
use fcs_core::hjmm_sim::simulate;
use fcs_core::spectral::{BasisSet, SingularSystem};
use fcs_core::FcsError;

use crate::checks::{all_criteria, fourier_suite, spectrum_shape, Check};
use crate::config::RunConfig;
use crate::output::{num, Table};
use crate::RunError;

#[derive(Debug, Default)]
pub struct Artifacts {
    pub checks: Vec<(String, Check)>,
    pub files: Vec<(String, String)>,
}

impl Artifacts {
    fn check(&mut self, section: &str, c: Check) {
        self.checks.push((section.to_string(), c));
    }

    fn file(&mut self, name: &str, contents: String) {
        self.files.push((name.to_string(), contents));
    }
}

fn ctx(op: &'static str) -> impl FnOnce(FcsError) -> RunError {
    move |source| RunError::Numeric { op, source }
}

pub fn spectrum(cfg: &RunConfig) -> Result<Artifacts, RunError> {
    let w = cfg.params();
    let grid = cfg.build_grid()?;
    let sys = SingularSystem::compute(BasisSet::cell_ramps(grid, w)).map_err(ctx("spectral::compute"))?;
    let s = sys.singular_values();
    let mut table = Table::new(&["k", "singular_value", "relative_to_first"]);
    for (k, v) in s.iter().enumerate() {
        table.push(vec![(k + 1).to_string(), num(*v), num(v / s[0])]);
    }
    let mut out = Artifacts::default();
    for c in spectrum_shape(&sys, cfg.cells) {
        out.check("spectrum", c);
    }
    out.check("spectrum", Check::at_most("s_1 / C1", s[0] / embedding_constant_c1(&w), 1.0));
    out.file("spectrum.csv", table.render());
    Ok(out)
}

pub fn fourier_verify(cfg: &RunConfig) -> Result<Artifacts, RunError> {
    let (checks, cases) = fourier_suite(&cfg.params(), cfg.seed).map_err(ctx("fourier_lab::verify"))?;
    let mut table = Table::new(&["check", "case", "lhs", "rhs", "pass"]);
    for c in &cases {
        table.push(vec![c.check.to_string(), c.case.clone(), num(c.lhs), num(c.rhs), c.pass.to_string()]);
    }
    let mut out = Artifacts::default();
    for c in checks {
        out.check("fourier", c);
    }
    out.file("fourier_checks.csv", table.render());
    Ok(out)
}

pub fn simulate_cmd(cfg: &RunConfig) -> Result<Artifacts, RunError> {
    let w = cfg.params();
    let grid = cfg.build_grid()?;
    let h0 = cfg.initial_curve(&grid)?;
    let sim = cfg.sim_config(grid)?;
    let ens = simulate(&h0, &cfg.vol(), &sim).map_err(ctx("hjmm_sim::simulate"))?;
    let mut table = Table::new(&["path", "t", "norm_gamma", "r_0", "r_probe"]);
    let mut finite = true;
    let mut out = Artifacts::default();
    for (p, path) in ens.paths.iter().enumerate() {
        for (t, r) in path.times.iter().zip(&path.states) {
            let norm = r.hgamma_norm(&w);
            let probe = r.eval(cfg.x_probe).map_err(ctx("curve_space::eval"))?;
            finite &= norm.is_finite();
            table.push(vec![p.to_string(), num(*t), num(norm), num(r.h0()), num(probe)]);
        }
        if cfg.snapshots {
            out.file(&format!("snapshots/path_{p:05}_terminal.txt"), write_curve(path.terminal()));
        }
    }
    out.check("simulate", Check::holds("all path norms finite", finite));
    out.file("paths.csv", table.render());
    Ok(out)
}

fn push_report(table: &mut Table, audit: &str, report: &ErrorReport) {
    for row in &report.rows {
        table.push(vec![
            audit.to_string(),
            row.path.to_string(),
            num(row.t),
            num(row.lhs),
            num(row.rhs),
            num(row.margin()),
        ]);
    }
}

pub fn approximate(cfg: &RunConfig) -> Result<Artifacts, RunError> {
    let w = cfg.params();
    let grid = cfg.build_grid()?;
    let h0 = cfg.initial_curve(&grid)?;
    let sim = cfg.sim_config(grid.clone())?;
    let vol = cfg.vol();
    let ens = simulate(&h0, &vol, &sim).map_err(ctx("hjmm_sim::simulate"))?;
    let sys = SingularSystem::compute(BasisSet::with_level(grid, w)).map_err(ctx("spectral::compute"))?;
    let n = cfg.rank;
    let t_n = sys.make_tn(n).map_err(ctx("spectral::make_tn"))?;
    let s_n = sys
        .perturb_functionals(n, cfg.eps, cfg.seed)
        .map_err(ctx("spectral::perturb_functionals"))?;
    let k = cfg.threshold_k.unwrap_or(2.0 * h0.hgamma_norm(&w));

    let conv = audit_norm_conv(&ens, &t_n, &sys).map_err(ctx("approx::audit_norm_conv"))?;
    let est = audit_est_epsilon_n(&ens, &s_n, &sys, cfg.eps).map_err(ctx("approx::audit_est_epsilon_n"))?;
    let uni = audit_uni_local(&ens, &s_n, &sys, k, cfg.eps).map_err(ctx("approx::audit_uni_local"))?;
    let mse = mean_square_error(&ens, &s_n, &sys, cfg.eps).map_err(ctx("approx::mean_square_error"))?;

    let mut errors = Table::new(&["audit", "path", "t", "lhs", "rhs", "margin"]);
    let mut summary = Table::new(&["audit", "rank", "eps", "worst_margin", "estimate", "std_error", "bound", "pass"]);
    let mut out = Artifacts::default();
    for (name, report) in [("norm_conv", &conv), ("est_epsilon_n", &est), ("uni_local", &uni)] {
        push_report(&mut errors, name, report);
        let c = Check::at_most(format!("{name} worst margin"), report.worst_margin(), 1.0);
        summary.push(vec![
            name.to_string(),
            n.to_string(),
            num(cfg.eps),
            num(c.measured),
            String::new(),
            String::new(),
            String::new(),
            c.pass.to_string(),
        ]);
        out.check("approximate", c);
    }
    let c = Check::at_most("mse / bound", mse.estimate / mse.bound, 1.0);
    summary.push(vec![
        "mean_square_error".to_string(),
        n.to_string(),
        num(cfg.eps),
        num(c.measured),
        num(mse.estimate),
        num(mse.std_error),
        num(mse.bound),
        c.pass.to_string(),
    ]);
    out.check("approximate", c);
    let worst = out.checks.iter().map(|(_, c)| c.measured).fold(0.0, f64::max);
    summary.push(vec![
        "summary".to_string(),
        n.to_string(),
        num(cfg.eps),
        num(worst),
        String::new(),
        String::new(),
        String::new(),
        (worst <= 1.0).to_string(),
    ]);
    out.file("errors.csv", errors.render());
    out.file("summary.csv", summary.render());
    Ok(out)
}

pub fn verify_all(cfg: &RunConfig) -> Result<Artifacts, RunError> {
    let mut out = Artifacts::default();
    for (criterion, checks) in all_criteria(cfg.seed).map_err(ctx("verify_all::criteria"))? {
        for c in checks {
            out.check(&format!("criterion {criterion}"), c);
        }
    }
    out.file("checks.csv", crate::output::checks_table(&out.checks).render());
    Ok(out)
}
