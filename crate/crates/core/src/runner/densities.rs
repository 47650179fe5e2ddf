//! Named analytic densities and potentials, and the dependency-stress family.

use std::f64::consts::PI;

use serde::Serialize;

use super::config::{TrigTerm, Wave};
use crate::error::{Error, Result};
use crate::grid::{lp_norm, periodic_dist_sq, Coords, GridSpec, ScalarField, MAX_REAL_DIM};
use crate::kahler::{grad_norm_sq, BackgroundMetric};
use crate::solver::normalize_density;

const ROOT_TOL: f64 = 1e-6;
const ROOT_MAX_ITERS: usize = 60;

/// `Σ amp · Π_a wave_a(2π k_a x_a)`; `k_a` defaults to 1.
pub fn trig_series(grid: GridSpec, terms: &[TrigTerm]) -> Result<ScalarField<f64>> {
    let d = grid.real_dim();
    for t in terms {
        if t.waves.len() != d {
            return Err(Error::Config(format!(
                "trig term needs {d} waves, got {}",
                t.waves.len()
            )));
        }
        if let Some(k) = &t.k {
            if k.len() != d {
                return Err(Error::Config(format!(
                    "trig term needs {d} wavenumbers, got {}",
                    k.len()
                )));
            }
        }
    }
    Ok(ScalarField::from_fn(grid, |x: &Coords<f64>| {
        terms
            .iter()
            .map(|t| {
                let mut v = t.amp;
                for (a, w) in t.waves.iter().enumerate() {
                    let k = t.k.as_ref().map_or(1.0, |k| f64::from(k[a]));
                    let arg = 2.0 * PI * k * x[a];
                    v *= match w {
                        Wave::Sin => arg.sin(),
                        Wave::Cos => arg.cos(),
                        Wave::One => 1.0,
                    };
                }
                v
            })
            .sum()
    }))
}

/// `log(1 + Σ terms)`; the sum must stay above -1 on the grid.
pub fn log_trig_density(grid: GridSpec, terms: &[TrigTerm]) -> Result<ScalarField<f64>> {
    let s = trig_series(grid, terms)?;
    if let Some((index, &v)) = s
        .values()
        .iter()
        .enumerate()
        .find(|(_, &v)| !(1.0 + v > 0.0))
    {
        return Err(Error::NonPositiveDensity {
            index,
            value: 1.0 + v,
        });
    }
    Ok(s.map(|v| (1.0 + v).ln()))
}

pub fn center_or_default(
    grid: &GridSpec,
    center: Option<&Vec<f64>>,
    default: Vec<f64>,
) -> Result<Coords<f64>> {
    let c = center.cloned().unwrap_or(default);
    if c.len() != grid.real_dim() {
        return Err(Error::Config(format!(
            "center needs {} coordinates, got {}",
            grid.real_dim(),
            c.len()
        )));
    }
    let mut out = [0.0; MAX_REAL_DIM];
    out[..c.len()].copy_from_slice(&c);
    Ok(out)
}

/// `A exp(-d₀²/(2w²))` with `d₀` the periodic distance to `center`.
pub fn bump(
    grid: GridSpec,
    center: &Coords<f64>,
    amplitude: f64,
    width: f64,
) -> Result<ScalarField<f64>> {
    if !(width > 0.0) || !amplitude.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "bad bump amplitude {amplitude} / width {width}"
        )));
    }
    let s = 2.0 * width * width;
    Ok(ScalarField::from_fn(grid, |x: &Coords<f64>| {
        amplitude * (-periodic_dist_sq(&grid, x, center) / s).exp()
    }))
}

/// `‖∇F‖_{L^{2n}(e^{2F}ω₀ⁿ)}`.
pub fn weighted_grad_norm(f: &ScalarField<f64>, bg: &BackgroundMetric<f64>) -> Result<f64> {
    let n = bg.grid().complex_dim();
    let g = grad_norm_sq(f, bg).map(f64::sqrt);
    let w = f.zip_map(bg.det_g0(), |fv, d| (2.0 * fv).exp() * d);
    lp_norm(&g, (2 * n) as f64, &w)
}

#[derive(Clone, Debug)]
pub struct StressMember {
    pub a: f64,
    pub amplitude: f64,
    pub width: f64,
    /// Normalized density.
    pub f: ScalarField<f64>,
    pub wgrad: f64,
    pub grad_sup: f64,
    pub sup_f: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StressRow {
    pub a: f64,
    pub amplitude: f64,
    pub width: f64,
    pub wgrad_f_norm: f64,
    pub grad_f_sup: f64,
    pub sup_f: f64,
}

impl StressMember {
    pub fn row(&self) -> StressRow {
        StressRow {
            a: self.a,
            amplitude: self.amplitude,
            width: self.width,
            wgrad_f_norm: self.wgrad,
            grad_f_sup: self.grad_sup,
            sup_f: self.sup_f,
        }
    }
}

fn member(
    bg: &BackgroundMetric<f64>,
    center: &Coords<f64>,
    a: f64,
    amplitude: f64,
    width: f64,
) -> Result<StressMember> {
    let grid = *bg.grid();
    let f = normalize_density(&bump(grid, center, amplitude, width)?, bg)?;
    let wgrad = weighted_grad_norm(&f, bg)?;
    let grad_sup = grad_norm_sq(&f, bg).max().sqrt();
    let sup_f = f.max();
    Ok(StressMember {
        a,
        amplitude,
        width,
        f,
        wgrad,
        grad_sup,
        sup_f,
    })
}

/// Member `a` of the stress family: width `w₁/a`, amplitude chosen by a
/// secant iteration so the weighted gradient norm matches the `a = 1` bump
/// with amplitude `A₁`. The bump sits on the grid node at the torus center.
pub fn stress_family(
    bg: &BackgroundMetric<f64>,
    a: f64,
    base_amplitude: f64,
    base_width: f64,
) -> Result<StressMember> {
    if !(1.0..=100.0).contains(&a) {
        return Err(Error::InvalidArgument(format!(
            "stress parameter must lie in [1, 100], got {a}"
        )));
    }
    let center = [0.5; MAX_REAL_DIM];
    let base = member(bg, &center, 1.0, base_amplitude, base_width)?;
    let width = base_width / a;
    if a == 1.0 {
        return Ok(base);
    }
    let target = base.wgrad;
    let eval = |amp: f64| -> Result<(StressMember, f64)> {
        let m = member(bg, &center, a, amp, width)?;
        let gap = m.wgrad / target - 1.0;
        Ok((m, gap))
    };
    let (mut a0, (_, mut g0)) = (base_amplitude, eval(base_amplitude)?);
    let mut a1 = base_amplitude * if g0 > 0.0 { 0.5 } else { 2.0 };
    let (mut m1, mut g1) = eval(a1)?;
    for _ in 0..ROOT_MAX_ITERS {
        if g1.abs() <= ROOT_TOL {
            return Ok(m1);
        }
        let slope = (g1 - g0) / (a1 - a0);
        if !(slope.is_finite() && slope != 0.0) {
            break;
        }
        // stay positive and avoid wild jumps
        let next = (a1 - g1 / slope).clamp(a1 / 4.0, a1 * 4.0);
        a0 = a1;
        g0 = g1;
        a1 = next;
        (m1, g1) = eval(a1)?;
    }
    Err(Error::RootFind(format!(
        "stress amplitude for a = {a} did not converge (last relative gap {g1:e})"
    )))
}
