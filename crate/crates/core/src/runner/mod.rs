//! Configuration-driven experiment runner: single solves, verification
//! suites, dependency sweeps and degenerate-family studies. Every command
//! produces a [`RunReport`] that is written as JSON next to its CSV tables.

pub mod config;
pub mod densities;

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::Serialize;

pub use config::{Command, RunConfig};
pub use densities::{stress_family, StressMember, StressRow};

use crate::degenerate::{
    classical_driver, decade_schedule, lipschitz_study, make_log_vanishing, make_power_vanishing,
    offset_center, regularize, regularized_family, sobolev_quantity, write_family_csv,
    LipschitzReport,
};
use crate::error::{Error, Result};
use crate::estimate::{
    abp_check, build_cutoff, cutoff_bounds, estimate_report, h_field, ibp_identity_residual,
    l1_h_bound, lambda_of, refine_argmax, ABPReport, EstimateReport, L1Bound,
};
use crate::grid::snapshot::{read_snapshot, write_snapshot};
use crate::grid::{GridSpec, ScalarField};
use crate::kahler::{make_flat_background, make_perturbed_background, BackgroundMetric};
use crate::par::{map_ordered, workers_from_env};
use crate::solver::{
    compatibility_defect, manufactured, normalize_density, solve, MAProblem, MASolution, SolverLog,
};
use config::{BackgroundSpec, DensitySpec};

pub const SCHEMA_VERSION: u32 = 1;
pub const REPORT_FILE: &str = "report.json";

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    /// `"<="` or `">="`.
    pub relation: &'static str,
    pub threshold: f64,
    pub passed: bool,
}

impl Check {
    fn at_most(name: &str, value: f64, threshold: f64) -> Self {
        Check {
            name: name.into(),
            value,
            relation: "<=",
            threshold,
            passed: value <= threshold,
        }
    }

    fn at_least(name: &str, value: f64, threshold: f64) -> Self {
        Check {
            name: name.into(),
            value,
            relation: ">=",
            threshold,
            passed: value >= threshold,
        }
    }

    fn holds(name: &str, ok: bool) -> Self {
        Check::at_least(name, if ok { 1.0 } else { 0.0 }, 1.0)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SolverSummary {
    pub iterations: usize,
    pub residual_sup: f64,
    pub min_eigen_omega: f64,
    pub inf_phi: f64,
    pub compatibility_defect: f64,
    /// `‖φ - φ*‖_∞` for manufactured instances (both mean-zero).
    pub manufactured_error: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[allow(non_snake_case)]
pub struct CutoffSummary {
    pub x0: Vec<f64>,
    pub r: f64,
    pub C0: f64,
    pub theta: f64,
    pub eta_min: f64,
    pub eta_max: f64,
    pub grad_sq_max: f64,
    pub grad_bound: f64,
    pub hess_max: f64,
    pub hess_bound: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[allow(non_snake_case)]
pub struct SweepRow {
    pub a: f64,
    pub amplitude: f64,
    pub width: f64,
    pub wgrad_F_norm: f64,
    pub grad_F_sup: f64,
    pub sup_F: f64,
    pub sup_H: f64,
    pub iterations: usize,
    pub residual_sup: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepReport {
    pub rows: Vec<SweepRow>,
    pub baseline_sup_h: f64,
    pub baseline_frozen: bool,
    /// `max_a |wgrad_a / wgrad_1 - 1|`
    pub wgrad_max_rel_dev: f64,
    pub sup_f_ratio: f64,
    pub grad_growth: f64,
    pub sup_h_ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DriverRow {
    #[serde(rename = "N")]
    pub points: usize,
    pub classical_driver: f64,
    pub sobolev: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DegenerateReport {
    pub family: LipschitzReport,
    pub log_profile: Vec<DriverRow>,
    pub driver_growth: f64,
    pub sobolev_drift: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub command: Command,
    pub config: RunConfig,
    pub solver: Option<SolverSummary>,
    pub solver_log: Option<SolverLog>,
    pub estimate: Option<EstimateReport>,
    pub cutoff: Option<CutoffSummary>,
    pub abp: Option<ABPReport>,
    pub ibp_residual: Option<f64>,
    pub l1_h: Option<L1Bound>,
    pub sweep: Option<SweepReport>,
    pub degenerate: Option<DegenerateReport>,
    pub checks: Vec<Check>,
    pub passed: bool,
}

impl RunReport {
    fn new(command: Command, config: &RunConfig) -> Self {
        RunReport {
            schema_version: SCHEMA_VERSION,
            command,
            config: config.clone(),
            solver: None,
            solver_log: None,
            estimate: None,
            cutoff: None,
            abp: None,
            ibp_residual: None,
            l1_h: None,
            sweep: None,
            degenerate: None,
            checks: Vec::new(),
            passed: false,
        }
    }

    pub fn failed_checks(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self)
            .map_err(|e| Error::Config(format!("report serialization: {e}")))
    }
}

fn grid_of(cfg: &RunConfig) -> Result<GridSpec> {
    GridSpec::new(cfg.n, cfg.points)
}

pub fn build_background(cfg: &RunConfig, grid: GridSpec) -> Result<Arc<BackgroundMetric<f64>>> {
    Ok(Arc::new(match &cfg.background {
        BackgroundSpec::Flat => make_flat_background(grid),
        BackgroundSpec::Perturbed { psi } => {
            make_perturbed_background(grid, &densities::trig_series(grid, psi)?)?
        }
    }))
}

fn with_knobs(cfg: &RunConfig, p: MAProblem<f64>) -> MAProblem<f64> {
    p.with_newton_tol(cfg.solver.newton_tol)
        .with_max_newton_iters(cfg.solver.max_newton_iters)
        .with_continuation_steps(cfg.solver.continuation_steps)
}

fn log_of(f: &ScalarField<f64>) -> Result<ScalarField<f64>> {
    if let Some((index, &value)) = f.values().iter().enumerate().find(|(_, &v)| !(v > 0.0)) {
        return Err(Error::NonPositiveDensity { index, value });
    }
    Ok(f.map(f64::ln))
}

/// The problem described by the density section, plus the exact potential
/// for manufactured instances.
pub fn build_problem(
    cfg: &RunConfig,
    bg: &Arc<BackgroundMetric<f64>>,
) -> Result<(MAProblem<f64>, Option<ScalarField<f64>>)> {
    let grid = *bg.grid();
    let raw = match &cfg.density {
        DensitySpec::Zero => ScalarField::zeros(grid),
        DensitySpec::Trig { terms } => densities::log_trig_density(grid, terms)?,
        DensitySpec::Bump {
            amplitude,
            width,
            center,
        } => {
            let c =
                densities::center_or_default(&grid, center.as_ref(), vec![0.5; grid.real_dim()])?;
            densities::bump(grid, &c, *amplitude, *width)?
        }
        DensitySpec::LogType { radius, center, k } => {
            let c = center.clone().unwrap_or_else(|| offset_center(&grid));
            let d = make_log_vanishing(bg, &[c], *radius)?;
            log_of(&match k {
                Some(k) => regularize(&d, bg, *k)?,
                None => d.f,
            })?
        }
        DensitySpec::Power {
            eps0,
            radius,
            center,
            k,
        } => {
            let c = center.clone().unwrap_or_else(|| offset_center(&grid));
            let d = make_power_vanishing(bg, &[c], *eps0, *radius)?;
            log_of(&match k {
                Some(k) => regularize(&d, bg, *k)?,
                None => d.f,
            })?
        }
        DensitySpec::Manufactured { terms } => {
            let mut phi_star = densities::trig_series(grid, terms)?;
            let m = crate::grid::integrate(&phi_star, bg.det_g0())? / bg.volume();
            phi_star = phi_star.shifted(-m);
            let p = manufactured(bg.clone(), &phi_star)?;
            return Ok((with_knobs(cfg, p), Some(phi_star)));
        }
        DensitySpec::Snapshot { path } => {
            let (_, f) = read_snapshot::<f64>(path)?;
            grid.check_same(f.grid())?;
            f
        }
    };
    let f = normalize_density(&raw, bg)?;
    Ok((with_knobs(cfg, MAProblem::new(bg.clone(), f)?), None))
}

fn solver_summary(sol: &MASolution<f64>, phi_star: Option<&ScalarField<f64>>) -> SolverSummary {
    SolverSummary {
        iterations: sol.iterations,
        residual_sup: sol.residual_sup,
        min_eigen_omega: sol.min_eigen_omega,
        inf_phi: sol.inf_phi,
        compatibility_defect: compatibility_defect(sol.f(), sol.bg()),
        manufactured_error: phi_star.map(|p| sol.phi.zip_map(p, |a, b| a - b).max_abs()),
    }
}

fn solve_checks(cfg: &RunConfig, s: &SolverSummary, checks: &mut Vec<Check>) {
    checks.push(Check::at_most(
        "solver_residual_sup",
        s.residual_sup,
        cfg.solver.newton_tol.max(1e-12),
    ));
    checks.push(Check::at_least(
        "min_eigen_omega",
        s.min_eigen_omega,
        crate::solver::POSITIVITY_FLOOR,
    ));
    if let Some(e) = s.manufactured_error {
        checks.push(Check::at_most(
            "manufactured_error",
            e,
            cfg.thresholds.manufactured_sup,
        ));
    }
}

fn run_solve(cfg: &RunConfig, report: &mut RunReport, verify: bool) -> Result<()> {
    let grid = grid_of(cfg)?;
    let bg = build_background(cfg, grid)?;
    let (problem, phi_star) = build_problem(cfg, &bg)?;
    let sol = solve(problem)?;
    let summary = solver_summary(&sol, phi_star.as_ref());
    solve_checks(cfg, &summary, &mut report.checks);
    let est = estimate_report(&sol)?;
    report
        .checks
        .push(Check::holds("gradient_certificate", est.certificate_holds));

    if verify {
        let t = &cfg.thresholds;
        let bochner_tol = if bg.is_flat() {
            t.bochner_rel_flat
        } else {
            t.bochner_rel_perturbed
        };
        report.checks.push(Check::at_most(
            "bochner_relative_residual",
            est.bochner_residual_max,
            bochner_tol,
        ));
        report.checks.push(Check::at_least(
            "diff_inequality_relative_slack",
            est.relative_slack(),
            -t.slack_rel,
        ));

        let lambda = lambda_of(bg.k_lower())?;
        let h = h_field(&sol, lambda);
        let (x0, _) = refine_argmax(&h);
        let mut cut = build_cutoff(&x0, cfg.estimate.r, cfg.estimate.c0, &bg)?;
        cut.alpha = cfg.estimate.alpha;
        let b = cutoff_bounds(&cut.eta, &bg);
        let theta_exact = {
            let d = 10.0 * cfg.n as f64 * cut.c0;
            (1.0 / d).min(cut.r * cut.r / d)
        };
        report.checks.push(Check::at_most(
            "cutoff_theta_defect",
            (cut.theta - theta_exact).abs(),
            0.0,
        ));
        report.checks.push(Check::at_least(
            "cutoff_eta_min",
            b.eta_min,
            1.0 - cut.theta - 1e-15,
        ));
        report
            .checks
            .push(Check::at_most("cutoff_eta_max", b.eta_max, 1.0 + 1e-15));
        report.checks.push(Check::at_most(
            "cutoff_grad_sq_max",
            b.grad_sq_max,
            cut.grad_bound(),
        ));
        report.checks.push(Check::at_most(
            "cutoff_hess_max",
            b.hess_max,
            cut.hess_bound(),
        ));
        report.cutoff = Some(CutoffSummary {
            x0: x0.clone(),
            r: cut.r,
            C0: cut.c0,
            theta: cut.theta,
            eta_min: b.eta_min,
            eta_max: b.eta_max,
            grad_sq_max: b.grad_sq_max,
            grad_bound: cut.grad_bound(),
            hess_max: b.hess_max,
            hess_bound: cut.hess_bound(),
        });

        let abp = abp_check(&sol, &cut, lambda, cfg.seed)?;
        let gap = abp.sup_inner - abp.sup_boundary;
        report.checks.push(Check::at_most(
            "abp_chain",
            gap,
            abp.implied_constant * abp.integral_term * (1.0 + 1e-12),
        ));
        report
            .checks
            .push(Check::holds("abp_bootstrap", abp.bootstrap_holds));
        report.abp = Some(abp);

        let ibp = ibp_identity_residual(&sol, lambda)?;
        report
            .checks
            .push(Check::at_most("ibp_identity_residual", ibp, t.ibp));
        report.ibp_residual = Some(ibp);
        let l1 = l1_h_bound(&sol, lambda)?;
        report.checks.push(Check::at_least(
            "l1_h_margin",
            l1.margin(),
            f64::MIN_POSITIVE,
        ));
        report.l1_h = Some(l1);
    }

    if cfg.snapshots {
        write_snapshot(&cfg.output_dir, "phi", &sol.phi)?;
        write_snapshot(&cfg.output_dir, "F", sol.f())?;
    }
    report.solver = Some(summary);
    report.solver_log = Some(sol.log.clone());
    report.estimate = Some(est);
    Ok(())
}

fn run_sweep(cfg: &RunConfig, report: &mut RunReport, workers: usize) -> Result<()> {
    let grid = grid_of(cfg)?;
    let bg = build_background(cfg, grid)?;
    let sw = &cfg.sweep;
    let base_idx =
        sw.a_values.iter().position(|&a| a == 1.0).ok_or_else(|| {
            Error::Config("sweep a_values must contain the baseline a = 1".into())
        })?;
    let outcomes = map_ordered(&sw.a_values, workers, |&a| -> Result<SweepRow> {
        let m = stress_family(&bg, a, sw.base_amplitude, sw.base_width)?;
        let p = with_knobs(cfg, MAProblem::new(bg.clone(), m.f.clone())?);
        let sol =
            solve(p).map_err(|e| Error::InvalidArgument(format!("stress member a = {a}: {e}")))?;
        let est = estimate_report(&sol)?;
        Ok(SweepRow {
            a,
            amplitude: m.amplitude,
            width: m.width,
            wgrad_F_norm: m.wgrad,
            grad_F_sup: m.grad_sup,
            sup_F: m.sup_f,
            sup_H: est.sup_H,
            iterations: sol.iterations,
            residual_sup: sol.residual_sup,
        })
    });
    let rows = outcomes.into_iter().collect::<Result<Vec<_>>>()?;
    let base = &rows[base_idx];
    let baseline_sup_h = sw.baseline_sup_h.unwrap_or(base.sup_H);
    let wgrad_max_rel_dev = rows
        .iter()
        .map(|r| (r.wgrad_F_norm / base.wgrad_F_norm - 1.0).abs())
        .fold(0.0, f64::max);
    let sup_f_ratio = rows
        .iter()
        .map(|r| r.sup_F / base.sup_F)
        .fold(0.0, f64::max);
    let grad_growth = rows.iter().map(|r| r.grad_F_sup).fold(0.0, f64::max) / base.grad_F_sup;
    let sup_h_ratio = rows.iter().map(|r| r.sup_H).fold(0.0, f64::max) / baseline_sup_h;
    let mut order: Vec<&SweepRow> = rows.iter().collect();
    order.sort_by(|x, y| x.a.total_cmp(&y.a));
    let monotone = order.windows(2).all(|w| w[1].grad_F_sup >= w[0].grad_F_sup);

    let t = &cfg.thresholds;
    for r in &rows {
        report.checks.push(Check::at_most(
            &format!("stress_residual_a{}", r.a),
            r.residual_sup,
            cfg.solver.newton_tol,
        ));
    }
    report.checks.push(Check::at_most(
        "stress_wgrad_rel_dev",
        wgrad_max_rel_dev,
        t.sweep_wgrad_rel,
    ));
    report.checks.push(Check::at_most(
        "stress_sup_f_ratio",
        sup_f_ratio,
        t.sweep_sup_f_factor,
    ));
    report.checks.push(Check::at_least(
        "stress_grad_sup_growth",
        grad_growth,
        t.sweep_grad_growth,
    ));
    report
        .checks
        .push(Check::holds("stress_grad_sup_monotone", monotone));
    report.checks.push(Check::at_most(
        "stress_sup_h_ratio",
        sup_h_ratio,
        t.sweep_sup_h_factor,
    ));

    write_sweep_csv(&cfg.output_dir.join("sweep.csv"), &rows)?;
    report.sweep = Some(SweepReport {
        rows,
        baseline_sup_h,
        baseline_frozen: sw.baseline_sup_h.is_some(),
        wgrad_max_rel_dev,
        sup_f_ratio,
        grad_growth,
        sup_h_ratio,
    });
    Ok(())
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> Error + '_ {
    move |e| Error::io(path, e.into())
}

fn write_sweep_csv(path: &Path, rows: &[SweepRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    for r in rows {
        w.serialize(r).map_err(csv_err(path))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn write_driver_csv(path: &Path, rows: &[DriverRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    for r in rows {
        w.serialize(r).map_err(csv_err(path))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn run_degenerate(cfg: &RunConfig, report: &mut RunReport, workers: usize) -> Result<()> {
    let dg = &cfg.degenerate;
    let t = &cfg.thresholds;
    let grid = grid_of(cfg)?;
    let bg = build_background(cfg, grid)?;
    let base = make_power_vanishing(&bg, &[offset_center(&grid)], dg.eps0, dg.radius)?;
    let fam = regularized_family(
        base,
        bg.clone(),
        &decade_schedule(dg.k_decades),
        workers,
        |p| with_knobs(cfg, p),
    )?;
    let study = lipschitz_study(&fam, &bg, t.uniform_tol)?;
    write_family_csv(&cfg.output_dir.join("family.csv"), &study)?;

    let sob = study.sobolev_base.unwrap_or(f64::INFINITY);
    let sob_k_max = study.rows.iter().map(|r| r.sobolev_k).fold(0.0, f64::max);
    report.checks.push(Check::at_most(
        "family_solves_failed",
        study.failures.len() as f64,
        0.0,
    ));
    report.checks.push(Check::at_most(
        "sobolev_k_ratio",
        sob_k_max / sob,
        t.sobolev_factor,
    ));
    report.checks.push(Check::at_most(
        "grad_sup_ratio",
        study.grad_ratio,
        t.grad_ratio,
    ));
    report.checks.push(Check::holds(
        "uniform_gradient_bound",
        study.uniform_bound_holds,
    ));
    report.checks.push(Check::holds(
        "cauchy_gaps_decreasing",
        study.gaps_decreasing,
    ));

    let mut log_profile = Vec::new();
    for &npts in &dg.log_grid_sizes {
        let g = GridSpec::new(cfg.n, npts)?;
        let bg_n = build_background(cfg, g)?;
        let d = make_log_vanishing(&bg_n, &[offset_center(&g)], dg.radius)?;
        log_profile.push(DriverRow {
            points: npts,
            classical_driver: classical_driver(&d.f, &bg_n),
            sobolev: sobolev_quantity(&d.f, &bg_n)?,
        });
    }
    let (driver_growth, sobolev_drift) = match (log_profile.first(), log_profile.last()) {
        (Some(a), Some(b)) if log_profile.len() >= 2 => {
            let lo = log_profile
                .iter()
                .map(|r| r.sobolev)
                .fold(f64::INFINITY, f64::min);
            let hi = log_profile.iter().map(|r| r.sobolev).fold(0.0, f64::max);
            (b.classical_driver / a.classical_driver, (hi - lo) / lo)
        }
        _ => {
            return Err(Error::Config(
                "log_grid_sizes needs at least two entries".into(),
            ))
        }
    };
    report.checks.push(Check::at_least(
        "log_driver_growth",
        driver_growth,
        t.driver_growth,
    ));
    report.checks.push(Check::at_most(
        "log_sobolev_drift",
        sobolev_drift,
        t.sobolev_drift,
    ));
    write_driver_csv(&cfg.output_dir.join("log_profile.csv"), &log_profile)?;

    report.degenerate = Some(DegenerateReport {
        family: study,
        log_profile,
        driver_growth,
        sobolev_drift,
    });
    Ok(())
}

/// Runs `command` (falling back to the config's own) and assembles the
/// report. CSV tables and snapshots go to the output directory; the JSON
/// report itself is left to [`write_report`].
pub fn run(cfg: &RunConfig, command: Option<Command>) -> Result<RunReport> {
    let command = command
        .or(cfg.command)
        .ok_or_else(|| Error::Config("no command given".into()))?;
    std::fs::create_dir_all(&cfg.output_dir).map_err(|e| Error::io(&cfg.output_dir, e))?;
    let workers = workers_from_env();
    let mut report = RunReport::new(command, cfg);
    match command {
        Command::Solve => run_solve(cfg, &mut report, false)?,
        Command::Verify => run_solve(cfg, &mut report, true)?,
        Command::Sweep => run_sweep(cfg, &mut report, workers)?,
        Command::Degenerate => run_degenerate(cfg, &mut report, workers)?,
    }
    report
        .checks
        .push(Check::holds("report_finite", numbers_finite(&report)?));
    report.passed = report.checks.iter().all(|c| c.passed);
    Ok(report)
}

/// Serializing maps NaN and ±∞ to `null`; any `null` outside an `Option`
/// slot therefore marks a non-finite number.
fn numbers_finite(report: &RunReport) -> Result<bool> {
    fn walk(v: &serde_json::Value) -> bool {
        match v {
            serde_json::Value::Number(n) => n.as_f64().map_or(true, f64::is_finite),
            serde_json::Value::Array(a) => a.iter().all(walk),
            serde_json::Value::Object(o) => o
                .iter()
                .all(|(k, v)| !(v.is_null() && !OPTIONAL_KEYS.contains(&k.as_str())) && walk(v)),
            _ => true,
        }
    }
    const OPTIONAL_KEYS: &[&str] = &[
        "solver",
        "solver_log",
        "estimate",
        "cutoff",
        "abp",
        "ibp_residual",
        "l1_h",
        "sweep",
        "degenerate",
        "manufactured_error",
        "gap_to_next",
        "sobolev_base",
        "command",
        "center",
        "k",
        "baseline_sup_h",
    ];
    let v = serde_json::to_value(report)
        .map_err(|e| Error::Config(format!("report serialization: {e}")))?;
    Ok(walk(&v))
}

/// Writes `<output_dir>/report.json` and returns its path.
pub fn write_report(report: &RunReport) -> Result<PathBuf> {
    let path = report.config.output_dir.join(REPORT_FILE);
    let mut text = report.to_json()?;
    text.push('\n');
    std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(text: &str, dir: &Path) -> RunConfig {
        let mut c = RunConfig::parse(text).unwrap();
        c.output_dir = dir.to_path_buf();
        c
    }

    #[test]
    fn zero_density_is_trivial() {
        let dir = tempfile::tempdir().unwrap();
        let c = cfg("n = 1\nN = 16\n", dir.path());
        let r = run(&c, Some(Command::Solve)).unwrap();
        let est = r.estimate.as_ref().unwrap();
        assert_eq!(est.c_emp, 0.0);
        assert_eq!(r.solver.as_ref().unwrap().residual_sup, 0.0);
        assert!(r.passed, "{:?}", r.failed_checks().collect::<Vec<_>>());
    }

    #[test]
    fn manufactured_n1_verify_passes() {
        let dir = tempfile::tempdir().unwrap();
        let c = cfg(
            r#"
n = 1
N = 32
[background]
kind = "perturbed"
psi = [{ amp = 0.01, waves = ["cos", "one"] }]
[density]
kind = "manufactured"
terms = [{ amp = 0.02, waves = ["sin", "cos"] }]
"#,
            dir.path(),
        );
        let r = run(&c, Some(Command::Verify)).unwrap();
        assert!(r.passed, "{:?}", r.failed_checks().collect::<Vec<_>>());
        assert!(r.solver.unwrap().manufactured_error.unwrap() < 1e-8);
    }

    #[test]
    fn missing_command_is_config_error() {
        let dir = tempfile::tempdir().unwrap();
        let c = cfg("n = 1\nN = 16\n", dir.path());
        assert!(matches!(run(&c, None), Err(Error::Config(_))));
    }

    #[test]
    fn nonpositive_trig_density_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let c = cfg(
            "n = 1\nN = 16\n[density]\nkind = \"trig\"\nterms = [{ amp = 1.5, waves = [\"sin\", \"one\"] }]\n",
            dir.path(),
        );
        assert!(matches!(
            run(&c, Some(Command::Solve)),
            Err(Error::NonPositiveDensity { .. })
        ));
    }
}
