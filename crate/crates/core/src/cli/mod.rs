//! Batch experiment runner: `ma <command> --config <path> [--out <dir>] [--seed <n>]`.
//!
//! Every run writes its artifacts (field CSVs, tables, heatmaps and a
//! `manifest.txt`) into one output directory and prints a verdict summary.
//! The exit status is 0 iff every verdict passes, 1 if any fails and 2 on
//! errors, which are reported as one `error: <Kind>: <reason>` line.

mod config;
mod heatmap;

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::Parser;
use thiserror::Error;

use crate::fields::io::{fmt_f64, read_field_csv, write_field_csv, write_grid_sidecar};
use crate::fields::{gradient, ScalarField, Trace, UniformGrid};
use crate::geometry::{half_width_a, Domain2D};
use crate::moving_planes::{
    anti_monotone_witness, barrier_epsilon0, barrier_psi, barrier_ratio_bound, reflect_difference, sweep, verify_barrier, BarrierParams,
    SweepReport, PSI_MAX, PSI_MIN,
};
use crate::nonlinearity::{check_cross_monotonicity, check_p1_symmetry, CoupledRhs, SamplingBox};
use crate::solver::{convergence_study, manufactured_case, newton_solve, SolveResult};

pub use config::{BarrierGrid, BoundarySpec, Command, ExperimentConfig, Injection, RhsSpec};
pub use heatmap::{emit_heatmap, render_svg, write_svg};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Solve(String),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Config(_) => "ConfigError",
            CliError::Solve(_) => "SolveError",
            CliError::Io(_) => "IOError",
        }
    }

    /// Single diagnostic line.
    pub fn line(&self) -> String {
        let reason = self.to_string().replace(['\n', '\r'], " ");
        format!("error: {}: {}", self.kind(), reason)
    }
}

fn solve_err(e: impl std::fmt::Display) -> CliError {
    CliError::Solve(e.to_string())
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

#[derive(Clone, Debug, PartialEq)]
pub struct Verdict {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct RunSummary {
    pub out_dir: PathBuf,
    pub verdicts: Vec<Verdict>,
    pub notes: Vec<String>,
    pub manifest: Vec<(String, String)>,
}

impl RunSummary {
    fn verdict(&mut self, name: impl Into<String>, pass: bool, detail: impl Into<String>) {
        self.verdicts.push(Verdict { name: name.into(), pass, detail: detail.into() });
    }

    fn key(&mut self, k: &str, v: impl ToString) {
        self.manifest.push((k.to_string(), v.to_string()));
    }

    pub fn pass(&self) -> bool {
        self.verdicts.iter().all(|v| v.pass)
    }

    pub fn exit_code(&self) -> i32 {
        if self.pass() {
            0
        } else {
            1
        }
    }

    pub fn verdict_named(&self, name: &str) -> Option<&Verdict> {
        self.verdicts.iter().find(|v| v.name == name)
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        for n in &self.notes {
            let _ = writeln!(s, "note: {n}");
        }
        for v in &self.verdicts {
            let _ = writeln!(s, "verdict {}: {} ({})", v.name, if v.pass { "pass" } else { "fail" }, v.detail);
        }
        let _ = writeln!(s, "status: {}", if self.pass() { "pass" } else { "fail" });
        s
    }

    fn manifest_text(&self) -> String {
        let mut s = String::new();
        for (k, v) in &self.manifest {
            let _ = writeln!(s, "{k} = {v}");
        }
        for v in &self.verdicts {
            let _ = writeln!(s, "verdict.{} = {}", v.name, if v.pass { "pass" } else { "fail" });
        }
        let _ = writeln!(s, "status = {}", if self.pass() { "pass" } else { "fail" });
        s
    }
}

/// Cap worker threads from `MA_THREADS` (a positive integer).
pub fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("MA_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Config(format!("MA_THREADS must be a positive integer, got '{raw}'")))?;
    // a pool may already exist when running several commands in one process
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| io_err(path, e))
}

/// Problem instance resolved from the configuration.
struct Instance {
    label: String,
    domain: Domain2D,
    rhs: CoupledRhs,
    bu: Trace,
    bv: Trace,
}

fn instance(cfg: &ExperimentConfig) -> Result<Instance, CliError> {
    match &cfg.case {
        Some(name) => {
            let c = manufactured_case(name).map_err(|e| CliError::Config(e.to_string()))?;
            Ok(Instance { label: name.clone(), domain: c.domain, rhs: c.rhs, bu: c.boundary_u, bv: c.boundary_v })
        }
        None => Ok(Instance {
            label: "custom".into(),
            domain: cfg.domain()?,
            rhs: cfg.coupling()?,
            bu: cfg.boundary_u.trace(),
            bv: cfg.boundary_v.trace(),
        }),
    }
}

/// Attained ranges of `(u, v, p1, p2)` over both fields.
fn attained_box(u: &ScalarField, v: &ScalarField) -> Result<SamplingBox, CliError> {
    let grid = u.grid();
    let mut p1 = (f64::INFINITY, f64::NEG_INFINITY);
    let mut p2 = (f64::INFINITY, f64::NEG_INFINITY);
    for &n in grid.active_nodes() {
        for f in [u, v] {
            let g = gradient(f, n).map_err(solve_err)?;
            p1 = (p1.0.min(g[0]), p1.1.max(g[0]));
            p2 = (p2.0.min(g[1]), p2.1.max(g[1]));
        }
    }
    Ok(SamplingBox::from_attained(u.range(), v.range(), p1, p2))
}

fn run_solve_stage(cfg: &ExperimentConfig, inst: &Instance, out: &Path, summary: &mut RunSummary) -> Result<SolveResult, CliError> {
    let grid = UniformGrid::new(&inst.domain, cfg.grid_h).map_err(|e| CliError::Config(e.to_string()))?;
    let pilot = check_cross_monotonicity(&inst.rhs, &SamplingBox::default(), 256, cfg.seed).map_err(solve_err)?;
    if !pilot.pass {
        summary.notes.push(format!(
            "coupling fails cross-monotonicity on the pilot box (min dg/dv {:.3e}, min df/du {:.3e})",
            pilot.g_v_min, pilot.f_u_min
        ));
    }
    let res = newton_solve(&grid, &inst.rhs, &inst.bu, &inst.bv, &cfg.solve).map_err(solve_err)?;
    write_field_csv(&res.u, &out.join("u.csv")).map_err(solve_err)?;
    write_field_csv(&res.v, &out.join("v.csv")).map_err(solve_err)?;
    write_grid_sidecar(&grid, &out.join("grid.txt")).map_err(solve_err)?;

    summary.key("iterations", res.iterations);
    summary.key("final_residual", fmt_f64(res.final_residual()));
    summary.key("converged", res.converged);
    summary.key("convexity_violations", res.convexity_report.violations);
    summary.key("pinned_nodes", grid.pinned_count());
    if let Some(name) = &cfg.case {
        let case = manufactured_case(name).map_err(solve_err)?;
        let (eu, ev) = case.exact_fields(&grid);
        let err = grid
            .active_nodes()
            .iter()
            .map(|&n| (res.u.value(n) - eu.value(n)).abs().max((res.v.value(n) - ev.value(n)).abs()))
            .fold(0.0, f64::max);
        summary.key("nodal_error", fmt_f64(err));
    }

    let bx = attained_box(&res.u, &res.v)?;
    let sym = check_p1_symmetry(&inst.rhs, &bx, cfg.check_samples, cfg.seed).map_err(solve_err)?;
    let mono = check_cross_monotonicity(&inst.rhs, &bx, cfg.check_samples, cfg.seed).map_err(solve_err)?;
    summary.notes.push(format!(
        "hypotheses on the attained box [{bx}]: p1-symmetry {}, cross-monotonicity {}",
        if sym.pass { "pass" } else { "fail" },
        if mono.pass { "pass" } else { "fail" }
    ));

    summary.verdict(
        "converged",
        res.converged && res.final_residual() <= cfg.solve.newton_tol,
        format!("{} iterations, residual {:.3e}", res.iterations, res.final_residual()),
    );
    summary.verdict(
        "convexity",
        res.convexity_report.check().is_ok(),
        format!("{} of {} interior nodes not SPD", res.convexity_report.deep_violations, res.convexity_report.deep_nodes),
    );
    summary.verdict(
        "boundary_monotonicity",
        res.boundary_monotonicity_pass(),
        format!(
            "worst margin u {:.3e}, v {:.3e}",
            res.boundary_monotonicity_u.worst_margin, res.boundary_monotonicity_v.worst_margin
        ),
    );
    Ok(res)
}

fn common_manifest(cmd: Command, cfg: &ExperimentConfig, summary: &mut RunSummary) {
    summary.key("command", cmd.name());
    summary.key("seed", cfg.seed);
}

fn instance_manifest(cfg: &ExperimentConfig, inst: &Instance, summary: &mut RunSummary) {
    summary.key("case", &inst.label);
    summary.key("domain", inst.domain.name());
    summary.key("rhs", inst.rhs.name());
    summary.key("h", fmt_f64(cfg.grid_h));
    summary.key("boundary_u", if cfg.case.is_some() { "case".into() } else { cfg.boundary_u.label() });
    summary.key("boundary_v", if cfg.case.is_some() { "case".into() } else { cfg.boundary_v.label() });
}

fn cmd_solve(cfg: &ExperimentConfig, out: &Path, summary: &mut RunSummary) -> Result<(), CliError> {
    let inst = instance(cfg)?;
    instance_manifest(cfg, &inst, summary);
    let res = run_solve_stage(cfg, &inst, out, summary)?;
    if cfg.heatmaps {
        write_svg(res.u.grid(), res.u.values(), "u", &out.join("u.svg"))?;
        write_svg(res.v.grid(), res.v.values(), "v", &out.join("v.svg"))?;
    }
    Ok(())
}

fn sweep_csv(rep: &SweepReport) -> String {
    let mut s = String::from("lambda,max_U,max_V,argmax_x1,argmax_x2\n");
    for r in &rep.records {
        let p = r.argmax();
        let _ = writeln!(
            s,
            "{},{},{},{},{}",
            fmt_f64(r.lambda),
            fmt_f64(r.max_u),
            fmt_f64(r.max_v),
            fmt_f64(p.map_or(f64::NAN, |p| p.x1)),
            fmt_f64(p.map_or(f64::NAN, |p| p.x2))
        );
    }
    s
}

fn sweep_summary_text(rep: &SweepReport) -> String {
    format!(
        "a = {}\nsign_tol = {}\nlambda_bar = {}\nsymmetry_defect_u = {}\nsymmetry_defect_v = {}\nmonotonicity_pass = {}\nworst_margin = {}\nviolations = {}\nviolating_planes = {}\n",
        fmt_f64(rep.a),
        fmt_f64(rep.sign_tol),
        fmt_f64(rep.lambda_bar),
        fmt_f64(rep.symmetry_defect_u),
        fmt_f64(rep.symmetry_defect_v),
        rep.monotonicity_pass(),
        fmt_f64(rep.worst_margin()),
        rep.violations.len(),
        rep.violating_lambdas().len(),
    )
}

fn load_fields(cfg: &ExperimentConfig, inst: &Instance) -> Result<Option<(ScalarField, ScalarField)>, CliError> {
    match (&cfg.load_u, &cfg.load_v) {
        (None, None) => Ok(None),
        (Some(pu), Some(pv)) => {
            let grid = UniformGrid::new(&inst.domain, cfg.grid_h).map_err(|e| CliError::Config(e.to_string()))?;
            let read = |p: &PathBuf, t: &Trace| {
                read_field_csv(&grid, p, Some(t.clone())).map_err(|e| match e {
                    crate::fields::FieldError::Io(m) => CliError::Io(m),
                    other => CliError::Config(format!("{}: {other}", p.display())),
                })
            };
            Ok(Some((read(pu, &inst.bu)?, read(pv, &inst.bv)?)))
        }
        _ => Err(CliError::Config("sweep.load_u and sweep.load_v must be given together".into())),
    }
}

fn inject(field: ScalarField, how: Injection, grid: &Arc<UniformGrid>) -> ScalarField {
    match how {
        Injection::None => field,
        Injection::X1 => anti_monotone_witness(grid),
    }
}

fn cmd_sweep(cfg: &ExperimentConfig, out: &Path, summary: &mut RunSummary) -> Result<(), CliError> {
    let inst = instance(cfg)?;
    instance_manifest(cfg, &inst, summary);
    let (u, v) = match load_fields(cfg, &inst)? {
        Some(pair) => {
            summary.key("fields", "loaded");
            pair
        }
        None => {
            let res = run_solve_stage(cfg, &inst, out, summary)?;
            (res.u, res.v)
        }
    };
    let grid = u.grid().clone();
    let u = inject(u, cfg.inject_u, &grid);
    let v = inject(v, cfg.inject_v, &grid);
    if cfg.inject_u != Injection::None || cfg.inject_v != Injection::None {
        summary.notes.push("anti-monotone field x1 injected".into());
    }
    let rep = sweep(&u, &v, &cfg.sweep).map_err(solve_err)?;
    write_text(&out.join("sweep.csv"), &sweep_csv(&rep))?;
    write_text(&out.join("sweep_summary.txt"), &sweep_summary_text(&rep))?;
    summary.key("lambda_bar", fmt_f64(rep.lambda_bar));
    summary.key("sign_tol", fmt_f64(rep.sign_tol));
    summary.key("symmetry_defect_u", fmt_f64(rep.symmetry_defect_u));
    summary.key("symmetry_defect_v", fmt_f64(rep.symmetry_defect_v));

    if cfg.heatmaps && !rep.records.is_empty() {
        let n = rep.records.len();
        for (k, idx) in [n / 4, n / 2, (3 * n) / 4].into_iter().enumerate() {
            let lambda = rep.records[idx.min(n - 1)].lambda;
            if lambda >= 0.0 {
                continue;
            }
            let cap = reflect_difference(&u, lambda).map_err(solve_err)?;
            let title = format!("U at lambda = {lambda:.6}");
            write_svg(&grid, &cap.to_grid_values(), &title, &out.join(format!("heatmap_U_{}.svg", k + 1)))?;
        }
    }

    let domain = grid.domain();
    if domain.has_corners() {
        summary.notes.push("domain has corners: plane and symmetry checks are reported but not judged".into());
        summary.notes.push(format!(
            "planes nonpositive: {}, monotone u: {}, monotone v: {}",
            rep.all_planes_nonpositive(),
            rep.monotonicity_u.pass,
            rep.monotonicity_v.pass
        ));
        return Ok(());
    }
    summary.verdict(
        "planes_nonpositive",
        rep.all_planes_nonpositive(),
        format!("{} of {} planes exceed sign_tol {:.3e}", rep.violating_lambdas().len(), rep.records.len(), rep.sign_tol),
    );
    summary.verdict(
        "monotonicity_u",
        rep.monotonicity_u.pass,
        format!("max du/dx1 {:.3e} vs threshold {:.3e}", rep.monotonicity_u.max_derivative, rep.monotonicity_u.threshold),
    );
    summary.verdict(
        "monotonicity_v",
        rep.monotonicity_v.pass,
        format!("max dv/dx1 {:.3e} vs threshold {:.3e}", rep.monotonicity_v.max_derivative, rep.monotonicity_v.threshold),
    );
    let detail = format!("defects u {:.3e}, v {:.3e}, sign_tol {:.3e}", rep.symmetry_defect_u, rep.symmetry_defect_v, rep.sign_tol);
    if domain.is_x1_symmetric() {
        summary.verdict("symmetry", rep.symmetric(), detail);
    } else {
        summary.notes.push(format!("domain not symmetric in x1; symmetry not expected ({detail})"));
    }
    Ok(())
}

fn cmd_barrier(cfg: &ExperimentConfig, out: &Path, summary: &mut RunSummary) -> Result<(), CliError> {
    let domain = cfg.domain()?;
    let a = half_width_a(&domain).map_err(|e| CliError::Config(e.to_string()))?;
    summary.key("domain", domain.name());
    summary.key("a", fmt_f64(a));
    let b = &cfg.barrier;
    let mut csv = String::from("m,c0,g_max,f_max,epsilon0,bound_at_epsilon0,max_ratio_at_half,min_product_at_half,pass\n");
    let (mut rows, mut passed) = (0, 0);
    for &m in &b.m {
        for &c0 in &b.c0 {
            for &g in &b.g_max {
                for &f in &b.f_max {
                    rows += 1;
                    let (eps0, bound, ver) = match barrier_epsilon0(m, c0, g, f) {
                        Ok(e0) => {
                            let p = BarrierParams { m, c0, a, epsilon: e0, g_max: g, f_max: f };
                            let ver = verify_barrier(m, c0, g, f, 0.5 * e0, b.verify_points, b.verify_points, cfg.seed);
                            (e0, barrier_ratio_bound(&p), Some(ver))
                        }
                        Err(_) => (f64::NAN, f64::NAN, None),
                    };
                    let pass = ver.is_some_and(|v| v.pass);
                    passed += pass as usize;
                    let _ = writeln!(
                        csv,
                        "{},{},{},{},{},{},{},{},{}",
                        fmt_f64(m),
                        fmt_f64(c0),
                        fmt_f64(g),
                        fmt_f64(f),
                        fmt_f64(eps0),
                        fmt_f64(bound),
                        fmt_f64(ver.map_or(f64::NAN, |v| v.max_ratio)),
                        fmt_f64(ver.map_or(f64::NAN, |v| v.min_product)),
                        pass
                    );
                }
            }
        }
    }
    write_text(&out.join("barrier.csv"), &csv)?;
    summary.verdict("epsilon0_table", passed == rows, format!("{passed} of {rows} parameter sets verified at epsilon0/2"));

    let eps = 0.5 * a;
    let p = BarrierParams { m: 1.0, c0: 1.0, a, epsilon: eps, g_max: 1.0, f_max: 1.0 };
    let left = barrier_psi(-a, &p).map_err(solve_err)?;
    let right = barrier_psi(-a + eps, &p).map_err(solve_err)?;
    let ok = (left - PSI_MAX).abs() <= 1e-12 && (right - PSI_MIN).abs() <= 1e-12;
    summary.verdict("psi_endpoints", ok, format!("psi(-a) = {left:.15}, psi(-a + eps) = {right:.15}"));
    Ok(())
}

fn cmd_check(cfg: &ExperimentConfig, out: &Path, summary: &mut RunSummary) -> Result<(), CliError> {
    let rhs = cfg.coupling()?;
    summary.key("rhs", rhs.name());
    summary.key("samples", cfg.check_samples);
    let sym = check_p1_symmetry(&rhs, &cfg.check_box, cfg.check_samples, cfg.seed).map_err(|e| CliError::Config(e.to_string()))?;
    let mono = check_cross_monotonicity(&rhs, &cfg.check_box, cfg.check_samples, cfg.seed).map_err(|e| CliError::Config(e.to_string()))?;
    let mut text = format!("box = {}\n", cfg.check_box);
    let _ = writeln!(text, "p1_symmetry.pass = {}", sym.pass);
    let _ = writeln!(text, "p1_symmetry.equality = {}", sym.equality);
    let _ = writeln!(text, "p1_symmetry.worst_margin = {}", fmt_f64(sym.worst_margin));
    if let Some((w, a)) = sym.witness {
        let _ = writeln!(text, "p1_symmetry.witness = {w:?} at {a}");
    }
    let _ = writeln!(text, "cross_monotonicity.pass = {}", mono.pass);
    let _ = writeln!(text, "cross_monotonicity.g_v_min = {}", fmt_f64(mono.g_v_min));
    let _ = writeln!(text, "cross_monotonicity.f_u_min = {}", fmt_f64(mono.f_u_min));
    let _ = writeln!(text, "cross_monotonicity.g_v_max = {}", fmt_f64(mono.g_max));
    let _ = writeln!(text, "cross_monotonicity.f_u_max = {}", fmt_f64(mono.f_max));
    if let Some((w, a)) = mono.witness {
        let _ = writeln!(text, "cross_monotonicity.witness = {w:?} at {a}");
    }
    write_text(&out.join("check.txt"), &text)?;
    summary.verdict("p1_symmetry", sym.pass, format!("worst margin {:.3e}", sym.worst_margin));
    summary.verdict(
        "cross_monotonicity",
        mono.pass,
        match mono.witness {
            Some((w, a)) => format!("min dg/dv {:.3e}, min df/du {:.3e}; witness {w:?} at {a}", mono.g_v_min, mono.f_u_min),
            None => format!("min dg/dv {:.3e}, min df/du {:.3e}", mono.g_v_min, mono.f_u_min),
        },
    );
    Ok(())
}

fn cmd_validate(cfg: &ExperimentConfig, out: &Path, summary: &mut RunSummary) -> Result<(), CliError> {
    let mut hs = cfg.validate_h.clone();
    hs.sort_by(|a, b| b.total_cmp(a));
    summary.key("cases", cfg.validate_cases.join(","));
    summary.key("h", hs.iter().map(|h| fmt_f64(*h)).collect::<Vec<_>>().join(","));
    let mut csv = String::from("case,h,iterations,final_residual,converged,nodal_error,error,ratio,order\n");
    for name in &cfg.validate_cases {
        let case = manufactured_case(name).map_err(|e| CliError::Config(e.to_string()))?;
        let table = convergence_study(&case, &hs, &cfg.solve).map_err(solve_err)?;
        for r in &table.rows {
            let _ = writeln!(
                csv,
                "{name},{},{},{},{},{},{},{},{}",
                fmt_f64(r.h),
                r.iterations,
                fmt_f64(r.final_residual),
                r.converged,
                fmt_f64(r.error.nodal),
                fmt_f64(r.error.continuum),
                r.ratio.map_or("".into(), fmt_f64),
                r.order.map_or("".into(), fmt_f64)
            );
        }
        let converged = table.rows.iter().all(|r| r.converged && r.final_residual <= cfg.solve.newton_tol);
        let iters = table.rows.iter().map(|r| r.iterations).max().unwrap_or(0);
        summary.verdict(format!("{name}.converged"), converged, format!("max {iters} Newton iterations"));
        let orders = table.orders();
        let (lo, hi) = cfg.validate_order;
        summary.verdict(
            format!("{name}.order"),
            !orders.is_empty() && orders.iter().all(|&o| o >= lo && o <= hi),
            format!("observed orders {:?} within [{lo}, {hi}]", orders.iter().map(|o| (o * 1000.0).round() / 1000.0).collect::<Vec<_>>()),
        );
    }
    write_text(&out.join("convergence.csv"), &csv)?;
    Ok(())
}

/// Execute one command. `out` and `seed` override the configuration.
pub fn run(command: Command, mut cfg: ExperimentConfig, out: Option<PathBuf>, seed: Option<u64>) -> Result<RunSummary, CliError> {
    if let Some(c) = cfg.command {
        if c != command {
            return Err(CliError::Config(format!("config is for '{}' but '{}' was requested", c.name(), command.name())));
        }
    }
    if let Some(s) = seed {
        cfg.seed = s;
    }
    let out_dir = out.or_else(|| cfg.output_dir.clone()).unwrap_or_else(|| PathBuf::from("ma-out"));
    fs::create_dir_all(&out_dir).map_err(|e| io_err(&out_dir, e))?;
    let mut summary = RunSummary { out_dir: out_dir.clone(), ..Default::default() };
    common_manifest(command, &cfg, &mut summary);
    match command {
        Command::Solve => cmd_solve(&cfg, &out_dir, &mut summary)?,
        Command::Sweep => cmd_sweep(&cfg, &out_dir, &mut summary)?,
        Command::Barrier => cmd_barrier(&cfg, &out_dir, &mut summary)?,
        Command::Check => cmd_check(&cfg, &out_dir, &mut summary)?,
        Command::Validate => cmd_validate(&cfg, &out_dir, &mut summary)?,
    }
    write_text(&out_dir.join("manifest.txt"), &summary.manifest_text())?;
    Ok(summary)
}

#[derive(Debug, Parser)]
#[command(name = "ma", about = "Coupled Monge-Ampere solver and moving-plane diagnostics")]
struct Args {
    /// Workflow to run.
    #[arg(value_enum)]
    command: Command,
    /// Experiment configuration (flat `key = value` file).
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides `output_dir`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Sampling seed (overrides `seed`).
    #[arg(long)]
    seed: Option<u64>,
}

/// Parse arguments, run, print the summary; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let args = match Args::try_parse_from(args) {
        Ok(a) => a,
        Err(e) if matches!(e.kind(), clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion) => {
            print!("{e}");
            return 0;
        }
        Err(e) => {
            let first = e.to_string().lines().next().unwrap_or("invalid arguments").trim_start_matches("error: ").to_string();
            eprintln!("{}", CliError::Config(first).line());
            return 2;
        }
    };
    let result = configure_threads()
        .and_then(|_| fs::read_to_string(&args.config).map_err(|e| io_err(&args.config, e)))
        .and_then(|text| ExperimentConfig::parse(&text))
        .and_then(|cfg| run(args.command, cfg, args.out, args.seed));
    match result {
        Ok(summary) => {
            print!("{}", summary.render());
            summary.exit_code()
        }
        Err(e) => {
            eprintln!("{}", e.line());
            2
        }
    }
}
