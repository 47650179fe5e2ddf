use num_complex::Complex;
use num_traits::Zero;

use crate::error::{Error, Result};
use crate::grid::{surrogate_dist_sq, Coords, ScalarField, MAX_REAL_DIM};
use crate::kahler::{covariant_hessian_holo, grad_norm_sq, BackgroundMetric};
use crate::scalar::Real;

pub const DEFAULT_C0: f64 = 4.0;
pub const MAX_RADIUS: f64 = 0.25;
const MAX_DOUBLINGS: usize = 40;

#[derive(Clone, Debug)]
pub struct CutoffSpec<T: Real> {
    pub x0: Vec<T>,
    pub r: T,
    pub c0: T,
    pub theta: T,
    pub eta: ScalarField<T>,
    pub alpha: T,
}

/// Grid extrema of the cutoff and its derivatives.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CutoffBounds<T: Real> {
    pub eta_min: T,
    pub eta_max: T,
    pub grad_sq_max: T,
    pub hess_max: T,
}

impl<T: Real> CutoffSpec<T> {
    pub fn grad_bound(&self) -> T {
        self.c0 * self.theta * self.theta / (self.r * self.r)
    }

    pub fn hess_bound(&self) -> T {
        self.c0 * self.theta / (self.r * self.r)
    }
}

/// Quintic smoothstep in `t = d²/r²`: 0 on `[0, 1/4]`, 1 on `[9/16, ∞)`.
pub fn ramp<T: Real>(t: T) -> T {
    let lo = T::lit(0.25);
    let hi = T::lit(9.0 / 16.0);
    let u = ((t - lo) / (hi - lo)).max(T::zero()).min(T::one());
    u * u * u * (u * (u * T::lit(6.0) - T::lit(15.0)) + T::lit(10.0))
}

fn theta_for<T: Real>(n: usize, r: T, c0: T) -> T {
    let d = T::lit(10.0) * T::of_usize(n) * c0;
    (T::one() / d).min(r * r / d)
}

/// `max|∇η|²_{g₀}` and `max|∇²η|_{g₀}` over the grid, where the Hessian norm
/// covers both the `ij` and the `ij̄` blocks.
pub fn cutoff_bounds<T: Real>(eta: &ScalarField<T>, bg: &BackgroundMetric<T>) -> CutoffBounds<T> {
    let n = bg.grid().complex_dim();
    let grad_sq_max = grad_norm_sq(eta, bg).max();
    let hol = covariant_hessian_holo(eta, bg);
    let mixed = eta.spectrum().complex_hessian();
    let mut hess_max = T::zero();
    for p in 0..bg.grid().len() {
        let b = bg.inverse_g0().at(p);
        let (h, m) = (hol.at(p), mixed.at(p));
        let mut s: Complex<T> = Complex::zero();
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        let w = b[j * n + i] * b[l * n + k];
                        s += w
                            * (h[i * n + k] * h[j * n + l].conj()
                                + m[i * n + l] * m[j * n + k].conj());
                    }
                }
            }
        }
        hess_max = hess_max.max(s.re.max(T::zero()).sqrt());
    }
    CutoffBounds {
        eta_min: eta.min(),
        eta_max: eta.max(),
        grad_sq_max,
        hess_max,
    }
}

/// `η = 1 - θ·ramp(d₀²/r²)` with `d₀` the periodic surrogate distance to `x0`.
/// `C0` is doubled until both derivative bounds hold on the grid.
pub fn build_cutoff<T: Real>(
    x0: &[T],
    r: T,
    c0: T,
    bg: &BackgroundMetric<T>,
) -> Result<CutoffSpec<T>> {
    let grid = *bg.grid();
    if !(r > T::zero() && r <= T::lit(MAX_RADIUS)) {
        return Err(Error::RadiusTooLarge { r: r.as_f64() });
    }
    if !(c0 >= T::one()) {
        return Err(Error::InvalidArgument(format!("C0 must be >= 1, got {c0}")));
    }
    if x0.len() != grid.real_dim() {
        return Err(Error::InvalidArgument(format!(
            "center has {} coordinates, expected {}",
            x0.len(),
            grid.real_dim()
        )));
    }
    let mut c: Coords<T> = [T::zero(); MAX_REAL_DIM];
    c[..x0.len()].copy_from_slice(x0);
    let shape = ScalarField::from_fn(grid, |x| ramp(surrogate_dist_sq(&grid, x, &c) / (r * r)));

    let mut c0 = c0;
    for _ in 0..MAX_DOUBLINGS {
        let theta = theta_for(grid.complex_dim(), r, c0);
        let eta = shape.map(|h| T::one() - theta * h);
        let spec = CutoffSpec {
            x0: x0.to_vec(),
            r,
            c0,
            theta,
            eta,
            alpha: T::lit(super::ALPHA),
        };
        let b = cutoff_bounds(&spec.eta, bg);
        if b.grad_sq_max <= spec.grad_bound() && b.hess_max <= spec.hess_bound() {
            return Ok(spec);
        }
        c0 = c0 * T::lit(2.0);
    }
    Err(Error::InvalidArgument(format!(
        "no admissible C0 found up to {c0}"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridSpec;
    use crate::kahler::make_flat_background;

    #[test]
    fn theta_arithmetic() {
        let t: f64 = theta_for(1, 0.25, 4.0);
        assert_eq!(t, 0.0625 / 40.0);
        assert_eq!(t, 0.0015625);
    }

    #[test]
    fn ramp_endpoints() {
        assert_eq!(ramp(0.0f64), 0.0);
        assert_eq!(ramp(0.25f64), 0.0);
        assert_eq!(ramp(9.0f64 / 16.0), 1.0);
        assert_eq!(ramp(3.0f64), 1.0);
        let mut prev = 0.0;
        for i in 0..=100 {
            let v = ramp(i as f64 / 100.0);
            assert!(v >= prev);
            prev = v;
        }
    }

    #[test]
    fn radius_rejected() {
        let bg = make_flat_background::<f64>(GridSpec::new(1, 16).unwrap());
        assert!(matches!(
            build_cutoff(&[0.5, 0.5], 0.3, 4.0, &bg),
            Err(Error::RadiusTooLarge { .. })
        ));
    }

    #[test]
    fn certificate_and_values_n1() {
        let grid = GridSpec::new(1, 64).unwrap();
        let bg = make_flat_background::<f64>(grid);
        let cut = build_cutoff(&[0.5, 0.5], 0.25, DEFAULT_C0, &bg).unwrap();
        let n = 1.0;
        let expect = (1.0 / (10.0 * n * cut.c0)).min(0.0625 / (10.0 * n * cut.c0));
        assert_eq!(cut.theta, expect);
        let b = cutoff_bounds(&cut.eta, &bg);
        assert!(b.eta_max <= 1.0 && b.eta_min >= 1.0 - cut.theta);
        assert!(b.grad_sq_max <= cut.grad_bound());
        assert!(b.hess_max <= cut.hess_bound());
        // center and a point at Euclidean distance r
        let at = |x: f64, y: f64| {
            cut.eta.values()[grid.flat_index(&[(x * 64.0) as usize, (y * 64.0) as usize])]
        };
        assert_eq!(at(0.5, 0.5), 1.0);
        assert_eq!(at(0.75, 0.5), 1.0 - cut.theta);
    }
}
