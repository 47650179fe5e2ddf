//! Densities `f ≥ 0` with isolated zeros, their regularizations
//! `f_k = f + 1/k` near the zeros, the quantity `∫|∇f|^{2n}/f^{2n-2} ω₀ⁿ`,
//! and the uniform-Lipschitz study of the corresponding potentials.

use std::path::Path;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::estimate::{h_field, lambda_of};
use crate::grid::{integrate, surrogate_dist_sq, Coords, GridSpec, ScalarField, MAX_REAL_DIM};
use crate::kahler::{grad_norm_sq, BackgroundMetric};
use crate::par::map_ordered;
use crate::scalar::Real;
use crate::solver::{normalize_density, solve, MAProblem, MASolution};

pub const MAX_PATCH_RADIUS: f64 = 0.2;
/// Default relative tolerance of the uniform gradient bound.
pub const DEFAULT_UNIFORM_TOL: f64 = 0.1;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Profile {
    LogType,
    Power { eps0: f64 },
}

#[derive(Clone, Debug)]
pub struct DegenerateDensity<T: Real> {
    pub f: ScalarField<T>,
    pub zero_centers: Vec<Vec<T>>,
    pub profile: Profile,
    pub zero_patch_radius: T,
    /// Blend weight: 0 inside the patches, 1 beyond twice the radius.
    pub outer: ScalarField<T>,
}

/// Quintic smoothstep from 0 at `r` to 1 at `2r`.
fn blend<T: Real>(rho: T, r: T) -> T {
    let u = ((rho - r) / r).max(T::zero()).min(T::one());
    u * u * u * (u * (u * T::lit(6.0) - T::lit(15.0)) + T::lit(10.0))
}

fn to_coords<T: Real>(c: &[T]) -> Coords<T> {
    let mut out = [T::zero(); MAX_REAL_DIM];
    out[..c.len()].copy_from_slice(c);
    out
}

/// Builds `f = Σ_c (1 - b_c) core(ρ_c) + b C` and solves for the constant `C`
/// that gives `∫f ω₀ⁿ = ∫ω₀ⁿ`. Values inside the patches are untouched.
fn build<T: Real>(
    bg: &BackgroundMetric<T>,
    centers: &[Vec<T>],
    radius: T,
    profile: Profile,
    core: impl Fn(T) -> T,
) -> Result<DegenerateDensity<T>> {
    let grid = *bg.grid();
    if !(radius > T::zero() && radius <= T::lit(MAX_PATCH_RADIUS)) {
        return Err(Error::InvalidArgument(format!(
            "patch radius must be in (0, {MAX_PATCH_RADIUS}], got {radius}"
        )));
    }
    if centers.iter().any(|c| c.len() != grid.real_dim()) {
        return Err(Error::InvalidArgument("center has wrong dimension".into()));
    }
    let cs: Vec<Coords<T>> = centers.iter().map(|c| to_coords(c)).collect();
    let mut inner = Vec::with_capacity(grid.len());
    let mut outer = Vec::with_capacity(grid.len());
    for p in 0..grid.len() {
        let x = grid.coords::<T>(p);
        let mut core_part = T::zero();
        let mut patch = T::zero();
        for c in &cs {
            let rho = surrogate_dist_sq(&grid, &x, c).sqrt();
            let w = T::one() - blend(rho, radius);
            if w > T::zero() {
                core_part += w * core(rho);
                patch += w;
            }
        }
        if patch > T::one() + T::lit(1e-12) {
            return Err(Error::NormalizationInfeasible(
                "zero patches overlap".into(),
            ));
        }
        inner.push(core_part);
        outer.push((T::one() - patch).max(T::zero()));
    }
    let inner = ScalarField::from_vec_unchecked(grid, inner);
    let outer = ScalarField::from_vec_unchecked(grid, outer);
    let det0 = bg.det_g0();
    let free = integrate(&outer, det0)?;
    let c = (bg.volume() - integrate(&inner, det0)?) / free;
    if !(free > T::zero()) || !(c > T::zero()) || !c.is_finite() {
        return Err(Error::NormalizationInfeasible(format!(
            "outer constant would be {c}; the patches take too much mass"
        )));
    }
    let f = inner.zip_map(&outer, |a, b| a + b * c);
    Ok(DegenerateDensity {
        f,
        zero_centers: centers.to_vec(),
        profile,
        zero_patch_radius: radius,
        outer,
    })
}

/// `f = ρ^{ε₀}` near each center, `ρ` the surrogate distance.
pub fn make_power_vanishing<T: Real>(
    bg: &BackgroundMetric<T>,
    centers: &[Vec<T>],
    eps0: T,
    radius: T,
) -> Result<DegenerateDensity<T>> {
    if !(eps0 > T::zero()) {
        return Err(Error::InvalidArgument(format!(
            "eps0 must be positive, got {eps0}"
        )));
    }
    build(
        bg,
        centers,
        radius,
        Profile::Power {
            eps0: eps0.as_f64(),
        },
        |rho| rho.powf(eps0),
    )
}

/// `f = |log R²| / |log(ρ² + δ)|` near each center, equal to 1 at the patch
/// edge `ρ = R`; `δ` is the smallest positive normal number.
pub fn make_log_vanishing<T: Real>(
    bg: &BackgroundMetric<T>,
    centers: &[Vec<T>],
    radius: T,
) -> Result<DegenerateDensity<T>> {
    let scale = (radius * radius).ln().abs();
    let delta = T::min_positive_value();
    build(bg, centers, radius, Profile::LogType, |rho| {
        scale / (rho * rho + delta).ln().abs()
    })
}

/// `f_k = (1 - b)(f + 1/k) + b s_k f` with `s_k` restoring the mass, so
/// `f_k = f + 1/k` exactly inside the patches.
pub fn regularize<T: Real>(
    d: &DegenerateDensity<T>,
    bg: &BackgroundMetric<T>,
    k: u64,
) -> Result<ScalarField<T>> {
    if k == 0 {
        return Err(Error::InvalidArgument("k must be >= 1".into()));
    }
    let inv_k = T::one() / T::lit(k as f64);
    let det0 = bg.det_g0();
    let patch = d.outer.map(|b| T::one() - b);
    let bf = d.outer.zip_map(&d.f, |b, f| b * f);
    let patch_mass = integrate(&patch, det0)?;
    let outer_mass = integrate(&bf, det0)?;
    let s = if patch_mass == T::zero() {
        T::one()
    } else {
        T::one() - inv_k * patch_mass / outer_mass
    };
    if !(s > T::zero()) {
        return Err(Error::NormalizationInfeasible(format!(
            "outer scaling {s} is not positive for k = {k}"
        )));
    }
    let values: Vec<T> = (0..d.f.values().len())
        .map(|p| {
            let b = d.outer.values()[p];
            let f = d.f.values()[p];
            (T::one() - b) * (f + inv_k) + b * s * f
        })
        .collect();
    Ok(ScalarField::from_vec_unchecked(*d.f.grid(), values))
}

/// `∫ |∇f|_{ω₀}^{2n} / f^{2n-2} ω₀ⁿ`.
pub fn sobolev_quantity<T: Real>(f: &ScalarField<T>, bg: &BackgroundMetric<T>) -> Result<T> {
    if let Some(index) = f.values().iter().position(|v| !(*v > T::zero())) {
        return Err(Error::NonPositiveDensity {
            index,
            value: f.values()[index].as_f64(),
        });
    }
    let n = bg.grid().complex_dim() as i32;
    let g = grad_norm_sq(f, bg);
    let integrand = g.zip_map(f, |gs, fv| gs.powi(n) / fv.powi(2 * n - 2));
    integrate(&integrand, bg.det_g0())
}

/// `sup |∇ f^{1/n}|_{ω₀}`, the quantity earlier estimates needed bounded.
pub fn classical_driver<T: Real>(f: &ScalarField<T>, bg: &BackgroundMetric<T>) -> T {
    let n = T::of_usize(bg.grid().complex_dim());
    let root = f.map(|v| v.max(T::zero()).powf(T::one() / n));
    grad_norm_sq(&root, bg).max().sqrt()
}

/// Pointwise `|∇u|^{2n}/u^{2n-2}` (`+∞` where `u ≤ 0`).
pub fn sobolev_density<T: Real>(u: &ScalarField<T>, bg: &BackgroundMetric<T>) -> ScalarField<T> {
    let n = bg.grid().complex_dim() as i32;
    grad_norm_sq(u, bg).zip_map(u, |g, v| {
        if v > T::zero() {
            g.powi(n) / v.powi(2 * n - 2)
        } else {
            T::infinity()
        }
    })
}

pub struct RegularizedFamily<T: Real> {
    pub base: DegenerateDensity<T>,
    pub k_values: Vec<u64>,
    pub f_k: Vec<ScalarField<T>>,
    pub sobolev_k: Vec<T>,
    pub solutions: Vec<Option<MASolution<T>>>,
    /// `sup|∇φ_k|_{ω₀}`
    pub grad_sup_k: Vec<T>,
    /// `‖φ_k - φ_{k'}‖_∞` for consecutive entries of `k_values`.
    pub cauchy_gaps: Vec<T>,
    pub failures: Vec<(u64, String)>,
}

/// Regularizes, normalizes and solves for every `k` (up to `workers` at once).
/// `configure` sets the solver knobs of each problem.
pub fn regularized_family<T: Real>(
    base: DegenerateDensity<T>,
    bg: Arc<BackgroundMetric<T>>,
    k_values: &[u64],
    workers: usize,
    configure: impl Fn(MAProblem<T>) -> MAProblem<T> + Sync,
) -> Result<RegularizedFamily<T>> {
    if k_values.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument(
            "k values must be strictly increasing".into(),
        ));
    }
    let mut f_k = Vec::with_capacity(k_values.len());
    let mut sobolev_k = Vec::with_capacity(k_values.len());
    for &k in k_values {
        let fk = regularize(&base, &bg, k)?;
        sobolev_k.push(sobolev_quantity(&fk, &bg)?);
        f_k.push(fk);
    }
    let outcomes = map_ordered(&f_k, workers, |fk| -> Result<MASolution<T>> {
        let f = normalize_density(&fk.map(|v| v.ln()), &bg)?;
        solve(configure(MAProblem::new(bg.clone(), f)?))
    });
    let mut solutions = Vec::with_capacity(k_values.len());
    let mut failures = Vec::new();
    let mut grad_sup_k = Vec::with_capacity(k_values.len());
    for (k, out) in k_values.iter().zip(outcomes) {
        match out {
            Ok(sol) => {
                grad_sup_k.push(grad_norm_sq(&sol.phi, bg.as_ref()).max().sqrt());
                solutions.push(Some(sol));
            }
            Err(e) => {
                grad_sup_k.push(T::nan());
                failures.push((*k, e.to_string()));
                solutions.push(None);
            }
        }
    }
    let cauchy_gaps = solutions
        .windows(2)
        .map(|w| match (&w[0], &w[1]) {
            (Some(a), Some(b)) => a.phi.zip_map(&b.phi, |x, y| x - y).max_abs(),
            _ => T::nan(),
        })
        .collect();
    Ok(RegularizedFamily {
        base,
        k_values: k_values.to_vec(),
        f_k,
        sobolev_k,
        solutions,
        grad_sup_k,
        cauchy_gaps,
        failures,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FamilyRow {
    pub k: u64,
    pub sobolev_k: f64,
    pub grad_sup_k: f64,
    #[serde(rename = "sup_H_k")]
    pub sup_h_k: f64,
    pub gap_to_next: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LipschitzReport {
    pub rows: Vec<FamilyRow>,
    pub sobolev_base: Option<f64>,
    /// `max grad_sup_k / min grad_sup_k`.
    pub grad_ratio: f64,
    /// Max of `grad_sup_k` over the first half of the schedule.
    pub baseline_grad_sup: f64,
    /// Every `grad_sup_k ≤ (1 + tol) · baseline_grad_sup`.
    pub uniform_bound_holds: bool,
    pub gaps_decreasing: bool,
    pub partial: bool,
    pub failures: Vec<(u64, String)>,
}

/// Tabulates the family and checks the uniform gradient bound against the
/// baseline prefix (first half of the schedule) and the strict decrease of
/// the Cauchy gaps.
pub fn lipschitz_study<T: Real>(
    fam: &RegularizedFamily<T>,
    bg: &BackgroundMetric<T>,
    tol: f64,
) -> Result<LipschitzReport> {
    let lambda = lambda_of(bg.k_lower())?;
    let mut rows = Vec::with_capacity(fam.k_values.len());
    for (i, &k) in fam.k_values.iter().enumerate() {
        let sup_h = match &fam.solutions[i] {
            Some(sol) => h_field(sol, lambda).max().as_f64(),
            None => f64::NAN,
        };
        rows.push(FamilyRow {
            k,
            sobolev_k: fam.sobolev_k[i].as_f64(),
            grad_sup_k: fam.grad_sup_k[i].as_f64(),
            sup_h_k: sup_h,
            gap_to_next: fam.cauchy_gaps.get(i).map(|g| g.as_f64()),
        });
    }
    let grads: Vec<f64> = rows
        .iter()
        .map(|r| r.grad_sup_k)
        .filter(|g| g.is_finite())
        .collect();
    let gmax = grads.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let gmin = grads.iter().cloned().fold(f64::INFINITY, f64::min);
    let grad_ratio = if gmin > 0.0 {
        gmax / gmin
    } else if gmax == 0.0 {
        1.0
    } else {
        f64::INFINITY
    };
    let prefix = (rows.len() + 1) / 2;
    let baseline = rows[..prefix]
        .iter()
        .map(|r| r.grad_sup_k)
        .fold(0.0, f64::max);
    let uniform_bound_holds = rows.iter().all(|r| r.grad_sup_k <= (1.0 + tol) * baseline);
    let gaps: Vec<f64> = fam.cauchy_gaps.iter().map(|g| g.as_f64()).collect();
    let gaps_decreasing = gaps.iter().all(|g| g.is_finite())
        && (gaps.windows(2).all(|w| w[1] < w[0]) || gaps.iter().all(|&g| g == 0.0));
    let sobolev_base = sobolev_quantity(&fam.base.f, bg).ok().map(|v| v.as_f64());
    Ok(LipschitzReport {
        rows,
        sobolev_base,
        grad_ratio,
        baseline_grad_sup: baseline,
        uniform_bound_holds,
        gaps_decreasing,
        partial: !fam.failures.is_empty(),
        failures: fam.failures.clone(),
    })
}

/// CSV with columns `k, sobolev_k, grad_sup_k, sup_H_k, gap_to_next`.
pub fn write_family_csv(path: &Path, report: &LipschitzReport) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::io(path, e.into()))?;
    w.write_record(["k", "sobolev_k", "grad_sup_k", "sup_H_k", "gap_to_next"])
        .map_err(|e| Error::io(path, e.into()))?;
    for r in &report.rows {
        w.write_record([
            r.k.to_string(),
            format!("{:e}", r.sobolev_k),
            format!("{:e}", r.grad_sup_k),
            format!("{:e}", r.sup_h_k),
            r.gap_to_next.map(|g| format!("{g:e}")).unwrap_or_default(),
        ])
        .map_err(|e| Error::io(path, e.into()))?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

/// Geometric schedule `{10, 10², …, 10^count}`.
pub fn decade_schedule(count: u32) -> Vec<u64> {
    (1..=count).map(|j| 10u64.pow(j)).collect()
}

/// Grid-offset center used by the studies: `0.5 + h/8` on every axis, so no
/// node sits on the zero.
pub fn offset_center(grid: &GridSpec) -> Vec<f64> {
    vec![0.5 + grid.spacing() / 8.0; grid.real_dim()]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kahler::make_flat_background;

    fn flat(npts: usize) -> BackgroundMetric<f64> {
        make_flat_background(GridSpec::new(1, npts).unwrap())
    }

    #[test]
    fn power_profile_zero_and_mass() {
        let bg = flat(32);
        let d = make_power_vanishing(&bg, &[vec![0.5, 0.5]], 2.0, 0.2).unwrap();
        let idx = bg.grid().flat_index(&[16, 16]);
        assert_eq!(d.f.values()[idx], 0.0);
        assert!((integrate(&d.f, bg.det_g0()).unwrap() - 1.0).abs() < 1e-12);
        assert!(d.f.min() >= 0.0);
    }

    #[test]
    fn two_centers() {
        let bg = flat(32);
        let d = make_power_vanishing(&bg, &[vec![0.25, 0.25], vec![0.75, 0.75]], 0.5, 0.1).unwrap();
        let g = bg.grid();
        assert_eq!(d.f.values()[g.flat_index(&[8, 8])], 0.0);
        assert_eq!(d.f.values()[g.flat_index(&[24, 24])], 0.0);
        assert!((integrate(&d.f, bg.det_g0()).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn oversized_patch_rejected() {
        let bg = flat(16);
        assert!(make_power_vanishing(&bg, &[vec![0.5, 0.5]], 0.5, 0.3).is_err());
    }

    #[test]
    fn regularize_inside_patch_and_mass() {
        let bg = flat(32);
        let d = make_power_vanishing(&bg, &[vec![0.5, 0.5]], 0.5, 0.2).unwrap();
        let idx = bg.grid().flat_index(&[16, 16]);
        for k in [10u64, 100, 1000] {
            let fk = regularize(&d, &bg, k).unwrap();
            assert!(fk.min() > 0.0);
            let rel = (integrate(&fk, bg.det_g0()).unwrap()
                - integrate(&d.f, bg.det_g0()).unwrap())
            .abs();
            assert!(rel < 1e-12, "{rel}");
            for p in 0..fk.values().len() {
                if d.outer.values()[p] == 0.0 {
                    assert_eq!(fk.values()[p], d.f.values()[p] + 1.0 / k as f64);
                }
            }
        }
        assert_eq!(regularize(&d, &bg, 100).unwrap().values()[idx], 0.01);
    }

    #[test]
    fn regularize_without_zeros_is_identity() {
        let bg = flat(16);
        let d = DegenerateDensity {
            f: ScalarField::constant(*bg.grid(), 1.0),
            zero_centers: vec![],
            profile: Profile::Power { eps0: 1.0 },
            zero_patch_radius: 0.1,
            outer: ScalarField::constant(*bg.grid(), 1.0),
        };
        let fk = regularize(&d, &bg, 10).unwrap();
        assert_eq!(fk, d.f);
    }

    #[test]
    fn sobolev_trivial_cases() {
        let bg = flat(16);
        let one = ScalarField::constant(*bg.grid(), 1.0);
        assert_eq!(sobolev_quantity(&one, &bg).unwrap(), 0.0);
        let zero = ScalarField::zeros(*bg.grid());
        assert!(matches!(
            sobolev_quantity(&zero, &bg),
            Err(Error::NonPositiveDensity { .. })
        ));
    }

    #[test]
    fn log_profile_value_next_to_center() {
        let bg = flat(64);
        let g = *bg.grid();
        let h = g.spacing();
        let d = make_log_vanishing(&bg, &[vec![0.5, 0.5]], 0.2).unwrap();
        let idx = g.flat_index(&[33, 32]);
        let rho2 = (std::f64::consts::PI * h).sin().powi(2) / std::f64::consts::PI.powi(2);
        let expect = (0.04f64).ln().abs() / rho2.ln().abs();
        assert!((d.f.values()[idx] - expect).abs() < 1e-14);
        assert!((expect * h.powi(2).ln().abs() / 0.04f64.ln().abs() - 1.0).abs() < 0.01);
    }
}
