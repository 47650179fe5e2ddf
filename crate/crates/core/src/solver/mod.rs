//! Solvers for `det(g₀ + φ_{ij̄}) = e^F det g₀` on the closed torus.
//!
//! n = 1 on the flat torus is linear and solved exactly in Fourier space.
//! Everything else goes through damped Newton with continuation in the
//! density, each linear step being a right-preconditioned GMRES solve of
//! `Δ_ω δφ = -G(φ)` with the flat inverse Laplacian as preconditioner.

pub mod gmres;

use std::sync::Arc;

use num_complex::Complex;
use num_traits::Zero;
use serde::Serialize;

use crate::error::{Error, IterateDiagnostics, Result};
use crate::grid::{integrate, ComplexMatrixField, DiffOp, Dz, GridSpec, ScalarField};
use crate::kahler::{metric_of_potential, BackgroundMetric, MetricField};
use crate::scalar::Real;
use gmres::{gmres, GmresOptions};

pub const DEFAULT_NEWTON_TOL: f64 = 1e-10;
pub const DEFAULT_MAX_NEWTON_ITERS: usize = 50;
pub const DEFAULT_CONTINUATION_STEPS: usize = 8;
/// Residual target for the intermediate continuation stages.
pub const DEFAULT_STAGE_TOL: f64 = 1e-3;
pub const POSITIVITY_FLOOR: f64 = 1e-8;
const MAX_CONTINUATION_STEPS: usize = 128;
const MAX_HALVINGS: usize = 30;

fn compat_tol<T: Real>() -> f64 {
    1e-12f64.max(50.0 * T::eps().as_f64())
}

#[derive(Clone, Debug)]
pub struct MAProblem<T: Real> {
    pub bg: Arc<BackgroundMetric<T>>,
    pub f: ScalarField<T>,
    pub newton_tol: T,
    pub max_newton_iters: usize,
    pub continuation_steps: usize,
    pub stage_tol: T,
    pub linear_rel_tol: f64,
}

impl<T: Real> MAProblem<T> {
    /// Fails with [`Error::Incompatible`] unless `∫e^F ω₀ⁿ = ∫ω₀ⁿ`.
    pub fn new(bg: Arc<BackgroundMetric<T>>, f: ScalarField<T>) -> Result<Self> {
        bg.grid().check_same(f.grid())?;
        let defect = compatibility_defect(&f, &bg);
        if defect.abs() > compat_tol::<T>() {
            return Err(Error::Incompatible { defect });
        }
        Ok(MAProblem {
            bg,
            f,
            newton_tol: T::lit(DEFAULT_NEWTON_TOL).max(T::lit(100.0) * T::eps()),
            max_newton_iters: DEFAULT_MAX_NEWTON_ITERS,
            continuation_steps: DEFAULT_CONTINUATION_STEPS,
            stage_tol: T::lit(DEFAULT_STAGE_TOL),
            linear_rel_tol: 1e-3,
        })
    }

    pub fn grid(&self) -> &GridSpec {
        self.bg.grid()
    }

    pub fn with_newton_tol(mut self, tol: T) -> Self {
        self.newton_tol = tol;
        self
    }

    pub fn with_max_newton_iters(mut self, iters: usize) -> Self {
        self.max_newton_iters = iters;
        self
    }

    pub fn with_continuation_steps(mut self, steps: usize) -> Self {
        self.continuation_steps = steps.max(1);
        self
    }
}

/// `(∫e^F ω₀ⁿ - ∫ω₀ⁿ) / ∫ω₀ⁿ`.
pub fn compatibility_defect<T: Real>(f: &ScalarField<T>, bg: &BackgroundMetric<T>) -> f64 {
    let vol = bg.volume();
    let mass = integrate(&f.map(|v| v.exp()), bg.det_g0()).unwrap_or(T::nan());
    ((mass - vol) / vol).as_f64()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SolverLog {
    pub records: Vec<IterateDiagnostics>,
    pub continuation_steps: usize,
}

#[derive(Clone, Debug)]
pub struct MASolution<T: Real> {
    pub problem: MAProblem<T>,
    /// Mean-zero potential, `∫φ ω₀ⁿ = 0`.
    pub phi: ScalarField<T>,
    pub residual_sup: T,
    pub iterations: usize,
    pub min_eigen_omega: T,
    pub inf_phi: T,
    pub log: SolverLog,
}

impl<T: Real> MASolution<T> {
    pub fn grid(&self) -> &GridSpec {
        self.problem.grid()
    }

    pub fn bg(&self) -> &BackgroundMetric<T> {
        &self.problem.bg
    }

    pub fn f(&self) -> &ScalarField<T> {
        &self.problem.f
    }

    /// `φ - inf φ`, the normalization used by every estimate quantity.
    pub fn phi_normalized(&self) -> ScalarField<T> {
        let m = self.phi.min();
        self.phi.map(|v| v - m)
    }

    pub fn metric(&self) -> Result<MetricField<T>> {
        metric_of_potential(self.bg(), &self.phi)
    }
}

/// `F_raw + log(∫ω₀ⁿ / ∫e^{F_raw}ω₀ⁿ)`.
pub fn normalize_density<T: Real>(
    f_raw: &ScalarField<T>,
    bg: &BackgroundMetric<T>,
) -> Result<ScalarField<T>> {
    bg.grid().check_same(f_raw.grid())?;
    let top = f_raw.max();
    let mass = integrate(&f_raw.map(|v| (v - top).exp()), bg.det_g0())?;
    let c = bg.volume().ln() - top - mass.ln();
    Ok(f_raw.map(|v| v + c))
}

fn remove_weighted_mean<T: Real>(u: &mut ScalarField<T>, w: &ScalarField<T>) {
    let vol = w.mean();
    let m = integrate(u, w).expect("same grid") / vol;
    for v in u.values_mut() {
        *v -= m;
    }
}

fn residual_field<T: Real>(m: &MetricField<T>, f: &ScalarField<T>) -> ScalarField<T> {
    m.det_ratio().zip_map(f, |d, fv| d.ln() - fv)
}

fn finish<T: Real>(
    problem: MAProblem<T>,
    mut phi: ScalarField<T>,
    iterations: usize,
    log: SolverLog,
) -> Result<MASolution<T>> {
    remove_weighted_mean(&mut phi, problem.bg.det_g0());
    let m = metric_of_potential(&problem.bg, &phi)?;
    let residual_sup = residual_field(&m, &problem.f).max_abs();
    let inf_phi = phi.min();
    Ok(MASolution {
        problem,
        phi,
        residual_sup,
        iterations,
        min_eigen_omega: m.min_eigen(),
        inf_phi,
        log,
    })
}

/// Exact Fourier solve of `φ_{zz̄} = e^F - 1` (n = 1, flat background).
pub fn solve_linear_n1<T: Real>(problem: MAProblem<T>) -> Result<MASolution<T>> {
    let grid = *problem.grid();
    if grid.complex_dim() != 1 || !problem.bg.is_flat() {
        return Err(Error::InvalidArgument(
            "linear solve requires n = 1 and a flat background".into(),
        ));
    }
    let rhs = problem.f.map(|v| v.exp() - T::one());
    let defect = rhs.mean().as_f64();
    if defect.abs() > compat_tol::<T>() {
        return Err(Error::Incompatible { defect });
    }
    let symbol = DiffOp::new(&[Dz::Holo(0), Dz::Anti(0)]).symbol_table::<T>(&grid);
    let inv: Vec<Complex<T>> = symbol
        .iter()
        .enumerate()
        .map(|(k, s)| if k == 0 { Complex::zero() } else { s.inv() })
        .collect();
    let phi = rhs.spectrum().scaled(&inv).to_field();
    let log = SolverLog {
        records: Vec::new(),
        continuation_steps: 0,
    };
    finish(problem, phi, 1, log)
}

/// Hessian tables of the flat inverse Laplacian, `σ_{ij̄}/σ_Δ`, used to apply
/// `Δ_ω ∘ Δ₀⁻¹` with one forward and (n = 2) two inverse transforms.
struct Preconditioned<T: Real> {
    inv_lap: Vec<Complex<T>>,
    tables: Vec<Vec<Complex<T>>>,
}

impl<T: Real> Preconditioned<T> {
    fn new(grid: &GridSpec) -> Self {
        let n = grid.complex_dim();
        let lap = DiffOp::flat_laplacian(n).symbol_table::<f64>(grid);
        let inv_lap: Vec<Complex<f64>> = lap
            .iter()
            .enumerate()
            .map(|(k, s)| if k == 0 { Complex::zero() } else { s.inv() })
            .collect();
        let mut ops = vec![DiffOp::new(&[Dz::Holo(0), Dz::Anti(0)])];
        if n == 2 {
            ops.push(DiffOp::new(&[Dz::Holo(1), Dz::Anti(1)]));
            ops.push(DiffOp::new(&[Dz::Holo(0), Dz::Anti(1)]));
        }
        let tables = ops
            .iter()
            .map(|op| {
                op.symbol_table::<f64>(grid)
                    .iter()
                    .zip(&inv_lap)
                    .map(|(a, b)| {
                        let c = a * b;
                        Complex::new(T::lit(c.re), T::lit(c.im))
                    })
                    .collect()
            })
            .collect();
        Preconditioned {
            inv_lap: inv_lap
                .iter()
                .map(|c| Complex::new(T::lit(c.re), T::lit(c.im)))
                .collect(),
            tables,
        }
    }

    /// `out = Δ_ω(Δ₀⁻¹ y)`.
    fn apply(&self, grid: &GridSpec, ginv: &ComplexMatrixField<T>, y: &[T], out: &mut [T]) {
        let spec = ScalarField::from_vec_unchecked(*grid, y.to_vec()).spectrum();
        if grid.complex_dim() == 1 {
            let d = spec.apply_table(&self.tables[0]);
            for (p, o) in out.iter_mut().enumerate() {
                *o = (ginv.at(p)[0] * d.values()[p]).re;
            }
            return;
        }
        let (d11, d22) = spec.apply_real_pair(&self.tables[0], &self.tables[1]);
        let d12 = spec.apply_table(&self.tables[2]);
        for (p, o) in out.iter_mut().enumerate() {
            let gi = ginv.at(p);
            let h12 = d12.values()[p];
            *o = gi[0].re * d11.values()[p]
                + gi[3].re * d22.values()[p]
                + (gi[1] * h12.conj() + gi[2] * h12).re;
        }
    }

    fn unprecondition(&self, grid: &GridSpec, y: Vec<T>) -> ScalarField<T> {
        ScalarField::from_vec_unchecked(*grid, y)
            .spectrum()
            .scaled(&self.inv_lap)
            .to_field()
    }
}

enum StageFailure {
    Positivity(IterateDiagnostics),
    Stall(IterateDiagnostics),
    MaxIters(IterateDiagnostics),
    Linear(Error),
}

impl StageFailure {
    fn into_error(self) -> Error {
        match self {
            StageFailure::Positivity(d) => Error::PositivityLoss(d),
            StageFailure::Stall(d) => Error::LineSearchStall(d),
            StageFailure::MaxIters(d) => Error::MaxIterations(d),
            StageFailure::Linear(e) => e,
        }
    }
}

struct NewtonState<T: Real> {
    phi: ScalarField<T>,
    hess: ComplexMatrixField<T>,
    metric: MetricField<T>,
    resid: ScalarField<T>,
    sup: T,
}

fn diag<T: Real>(s: f64, iter: usize, sup: T, min_eig: T, step: f64) -> IterateDiagnostics {
    IterateDiagnostics {
        s,
        iter,
        residual_sup: sup.as_f64(),
        min_eigen_omega: min_eig.as_f64(),
        step_length: step,
    }
}

fn newton_stage<T: Real>(
    problem: &MAProblem<T>,
    pre: &Preconditioned<T>,
    state: &mut NewtonState<T>,
    f_s: &ScalarField<T>,
    s: f64,
    tol: T,
    records: &mut Vec<IterateDiagnostics>,
    total_iters: &mut usize,
) -> std::result::Result<(), StageFailure> {
    let grid = *problem.grid();
    let bg = &problem.bg;
    state.resid = residual_field(&state.metric, f_s);
    state.sup = state.resid.max_abs();
    records.push(diag(s, 0, state.sup, state.metric.min_eigen(), 0.0));

    let mut iter = 0;
    while state.sup > tol {
        if iter >= problem.max_newton_iters {
            return Err(StageFailure::MaxIters(diag(
                s,
                iter,
                state.sup,
                state.metric.min_eigen(),
                0.0,
            )));
        }
        iter += 1;

        // Δ_ω δφ = -G + c, with c making the right side orthogonal to constants in ωⁿ
        let det_g = state.metric.det(bg);
        let mut rhs = state.resid.map(|v| -v);
        remove_weighted_mean(&mut rhs, &det_g);
        let mut y = vec![T::zero(); grid.len()];
        let ginv = state.metric.inverse_g().clone();
        let opts = GmresOptions {
            rel_tol: problem.linear_rel_tol,
            ..GmresOptions::default()
        };
        let outcome = gmres(
            |v, out| pre.apply(&grid, &ginv, v, out),
            rhs.values(),
            &mut y,
            opts,
        );
        if !outcome.converged && outcome.relative_residual > 0.5 {
            return Err(StageFailure::Linear(Error::LinearSolveStagnation {
                iterations: outcome.iterations,
                relative_residual: outcome.relative_residual,
                at: diag(s, iter, state.sup, state.metric.min_eigen(), 0.0),
            }));
        }
        let dphi = pre.unprecondition(&grid, y);
        let dhess = dphi.spectrum().complex_hessian();

        let prev_min = state.metric.min_eigen();
        let mut t = T::one();
        let mut last_reason_positivity = false;
        let mut accepted = None;
        for _ in 0..=MAX_HALVINGS {
            let trial_hess = state.hess.add(&dhess.scale(t));
            match MetricField::from_hessian(bg, &trial_hess) {
                Ok(m)
                    if m.min_eigen() >= T::lit(0.5) * prev_min
                        && m.min_eigen() > T::lit(POSITIVITY_FLOOR) =>
                {
                    let r = residual_field(&m, f_s);
                    let sup = r.max_abs();
                    if sup <= state.sup {
                        accepted = Some((trial_hess, m, r, sup));
                        break;
                    }
                    last_reason_positivity = false;
                }
                _ => last_reason_positivity = true,
            }
            t = t * T::lit(0.5);
        }
        let Some((hess, metric, resid, sup)) = accepted else {
            let d = diag(s, iter, state.sup, prev_min, t.as_f64());
            return Err(if last_reason_positivity {
                StageFailure::Positivity(d)
            } else {
                StageFailure::Stall(d)
            });
        };
        state.phi = state.phi.zip_map(&dphi, |a, b| a + t * b);
        remove_weighted_mean(&mut state.phi, bg.det_g0());
        state.hess = hess;
        state.metric = metric;
        state.resid = resid;
        state.sup = sup;
        *total_iters += 1;
        records.push(diag(s, iter, sup, state.metric.min_eigen(), t.as_f64()));
    }
    Ok(())
}

/// Damped Newton with continuation `F_s = normalize(sF)`, `s = 1/m, …, 1`.
/// On failure `m` is doubled and the continuation restarted.
pub fn solve_newton<T: Real>(
    problem: MAProblem<T>,
    initial: Option<&ScalarField<T>>,
) -> Result<MASolution<T>> {
    let grid = *problem.grid();
    let bg = problem.bg.clone();
    let start = match initial {
        Some(u) => {
            grid.check_same(u.grid())?;
            u.clone()
        }
        None => ScalarField::zeros(grid),
    };
    let pre = Preconditioned::new(&grid);
    let make_state = |phi: ScalarField<T>| -> Result<NewtonState<T>> {
        let hess = phi.spectrum().complex_hessian();
        let metric = MetricField::from_hessian(&bg, &hess)?;
        Ok(NewtonState {
            resid: ScalarField::zeros(grid),
            sup: T::infinity(),
            phi,
            hess,
            metric,
        })
    };

    // already solved (e.g. F ≡ 0 from zero)
    let mut state = make_state(start.clone())?;
    let r0 = residual_field(&state.metric, &problem.f).max_abs();
    if r0 <= problem.newton_tol {
        let log = SolverLog {
            records: vec![diag(1.0, 0, r0, state.metric.min_eigen(), 0.0)],
            continuation_steps: 0,
        };
        return finish(problem, state.phi, 0, log);
    }

    let mut m = problem.continuation_steps.max(1);
    loop {
        let mut records = Vec::new();
        let mut total = 0;
        let mut failure = None;
        for j in 1..=m {
            let s = j as f64 / m as f64;
            let f_s = if j == m {
                problem.f.clone()
            } else {
                normalize_density(&problem.f.map(|v| v * T::lit(s)), &bg)?
            };
            let tol = if j == m {
                problem.newton_tol
            } else {
                problem.stage_tol.max(problem.newton_tol)
            };
            if let Err(e) = newton_stage(
                &problem,
                &pre,
                &mut state,
                &f_s,
                s,
                tol,
                &mut records,
                &mut total,
            ) {
                failure = Some(e);
                break;
            }
        }
        match failure {
            None => {
                let log = SolverLog {
                    records,
                    continuation_steps: m,
                };
                return finish(problem, state.phi, total, log);
            }
            Some(f) => {
                if m * 2 > MAX_CONTINUATION_STEPS {
                    return Err(f.into_error());
                }
                m *= 2;
                state = make_state(start.clone())?;
            }
        }
    }
}

/// Linear Fourier solve where it applies, Newton otherwise.
pub fn solve<T: Real>(problem: MAProblem<T>) -> Result<MASolution<T>> {
    if problem.grid().complex_dim() == 1 && problem.bg.is_flat() {
        solve_linear_n1(problem)
    } else {
        solve_newton(problem, None)
    }
}

/// The problem whose solution is `φ*` (up to the mean-zero gauge).
pub fn manufactured<T: Real>(
    bg: Arc<BackgroundMetric<T>>,
    phi_star: &ScalarField<T>,
) -> Result<MAProblem<T>> {
    let m = metric_of_potential(&bg, phi_star)?;
    let f = normalize_density(&m.det_ratio().map(|d| d.ln()), &bg)?;
    MAProblem::new(bg, f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kahler::make_flat_background;
    use std::f64::consts::PI;

    fn flat(n: usize, npts: usize) -> Arc<BackgroundMetric<f64>> {
        Arc::new(make_flat_background(GridSpec::new(n, npts).unwrap()))
    }

    #[test]
    fn normalize_constant_and_idempotent() {
        let bg = flat(1, 16);
        let f = ScalarField::constant(*bg.grid(), 5.0);
        assert!(normalize_density(&f, &bg).unwrap().max_abs() < 1e-14);
        let g = ScalarField::from_fn(*bg.grid(), |x: &[f64; 4]| (2.0 * PI * x[0]).sin());
        let g1 = normalize_density(&g, &bg).unwrap();
        assert!(compatibility_defect(&g1, &bg).abs() < 1e-14);
        let g2 = normalize_density(&g1, &bg).unwrap();
        for (a, b) in g1.values().iter().zip(g2.values()) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn incompatible_density_rejected() {
        let bg = flat(1, 16);
        let f = ScalarField::constant(*bg.grid(), 0.1);
        assert!(matches!(
            MAProblem::new(bg, f),
            Err(Error::Incompatible { .. })
        ));
    }

    #[test]
    fn linear_n1_closed_form_in_y() {
        let bg = flat(1, 32);
        let f = ScalarField::from_fn(*bg.grid(), |x: &[f64; 4]| {
            (1.0 + 0.3 * (2.0 * PI * x[1]).sin()).ln()
        });
        let f = normalize_density(&f, &bg).unwrap();
        let sol = solve_linear_n1(MAProblem::new(bg, f).unwrap()).unwrap();
        let err = sol
            .phi
            .values()
            .iter()
            .enumerate()
            .map(|(p, v)| {
                let y = sol.grid().coords::<f64>(p)[1];
                (v + 0.3 / (PI * PI) * (2.0 * PI * y).sin()).abs()
            })
            .fold(0.0, f64::max);
        assert!(err < 1e-12, "{err}");
        assert!(sol.residual_sup < 1e-12);
    }

    #[test]
    fn zero_density_needs_no_iteration() {
        let bg = flat(2, 8);
        let f = ScalarField::zeros(*bg.grid());
        let sol = solve_newton(MAProblem::new(bg, f).unwrap(), None).unwrap();
        assert!(sol.iterations <= 1);
        assert!(sol.phi.max_abs() == 0.0);
    }

    #[test]
    fn newton_matches_linear_path_n1() {
        let bg = flat(1, 32);
        let f = ScalarField::from_fn(*bg.grid(), |x: &[f64; 4]| {
            (1.0 + 0.3 * (2.0 * PI * x[0]).sin()).ln()
        });
        let f = normalize_density(&f, &bg).unwrap();
        let p = MAProblem::new(bg, f).unwrap();
        let lin = solve_linear_n1(p.clone()).unwrap();
        let newt = solve_newton(p, None).unwrap();
        let d = lin.phi.zip_map(&newt.phi, |a, b| a - b).max_abs();
        assert!(d < 1e-10, "{d}");
    }

    #[test]
    fn residual_monotone_within_stages() {
        let bg = flat(2, 8);
        let phi_star = ScalarField::from_fn(*bg.grid(), |x: &[f64; 4]| {
            0.02 * (2.0 * PI * x[0]).sin() * (2.0 * PI * x[3]).cos()
        });
        let sol = solve_newton(manufactured(bg, &phi_star).unwrap(), None).unwrap();
        for w in sol.log.records.windows(2) {
            if w[0].s == w[1].s {
                assert!(w[1].residual_sup <= w[0].residual_sup);
            }
        }
        assert!(sol.residual_sup <= 1e-10);
    }

    #[test]
    fn positivity_failure_in_manufactured() {
        let bg = flat(1, 16);
        let phi = ScalarField::from_fn(*bg.grid(), |x: &[f64; 4]| 0.2 * (2.0 * PI * x[0]).sin());
        assert!(matches!(
            manufactured(bg, &phi),
            Err(Error::Positivity { .. })
        ));
    }
}
