//! Quantities of the gradient estimate: the test function `H`, the Bochner
//! identity residual, the differential inequality for `H`, the cutoff and
//! ABP chain, the integral identity, and the assembled report.

mod abp;
mod cutoff;
mod lemma2;

pub use abp::{abp_check, sphere_points, ABPReport, ABP_BOUNDARY_SAMPLES};
pub use cutoff::{build_cutoff, cutoff_bounds, ramp, CutoffBounds, CutoffSpec, DEFAULT_C0};
pub use lemma2::{ibp_identity_residual, l1_h_bound, L1Bound};

use num_complex::Complex;
use num_traits::Zero;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{lp_norm, ScalarField};
use crate::kahler::{
    covariant_hessian_holo, grad_norm_sq, gradient_vectors, hermitian_grad_pairing, laplacian,
    trace_w_w0, MetricField,
};
use crate::scalar::Real;
use crate::solver::MASolution;

/// Exponent of the cutoff power, `ηH^α`.
pub const ALPHA: f64 = 2.0;

/// `λ = 2K + 10`.
pub fn lambda_of<T: Real>(k: T) -> Result<T> {
    if !(k >= T::zero()) {
        return Err(Error::InvalidArgument(format!(
            "K must be nonnegative, got {k}"
        )));
    }
    Ok(T::lit(2.0) * k + T::lit(10.0))
}

/// `H = e^{-λ(φ - inf φ)} |∇φ|²_{ω₀}`.
pub fn h_field<T: Real>(sol: &MASolution<T>, lambda: T) -> ScalarField<T> {
    let phi = sol.phi_normalized();
    let g = grad_norm_sq(&sol.phi, sol.bg());
    phi.zip_map(&g, |p, gn| (-lambda * p).exp() * gn)
}

/// Both sides of the Bochner identity, evaluated independently.
pub struct BochnerSides<T: Real> {
    pub lhs: ScalarField<T>,
    pub rhs: ScalarField<T>,
}

impl<T: Real> BochnerSides<T> {
    pub fn residual(&self) -> ScalarField<T> {
        self.lhs.zip_map(&self.rhs, |a, b| a - b)
    }

    /// `max|LHS - RHS| / max|LHS|` (0 when both vanish).
    pub fn relative_max(&self) -> T {
        let r = self.residual().max_abs();
        let s = self.lhs.max_abs();
        if s > T::zero() {
            r / s
        } else {
            r
        }
    }
}

/// `Δ_ω|∇φ|²_{ω₀}` against
/// `2Re⟨∇F,∇̄φ⟩ + g^{ij̄}g₀^{kl̄}(φ_{ki}φ_{j̄l̄} + φ_{kj̄}φ_{il̄}) + g^{ij̄}R_{ij̄kl̄}φ_pφ_q̄g₀^{kq̄}g₀^{pl̄}`.
pub fn bochner_sides<T: Real>(sol: &MASolution<T>, metric: &MetricField<T>) -> BochnerSides<T> {
    let bg = sol.bg();
    let grid = *sol.grid();
    let n = grid.complex_dim();
    let phi = &sol.phi;

    let lhs = laplacian(&grad_norm_sq(phi, bg), metric);

    let pairing = hermitian_grad_pairing(sol.f(), phi, bg);
    let spec = phi.spectrum();
    let hol = covariant_hessian_holo(phi, bg);
    let mixed = spec.complex_hessian();
    let grad = gradient_vectors(&spec);

    let mut rhs = Vec::with_capacity(grid.len());
    for pt in 0..grid.len() {
        let a = metric.inverse_g().at(pt);
        let b = bg.inverse_g0().at(pt);
        let hh = hol.at(pt);
        let hm = mixed.at(pt);
        let mut second = Complex::zero();
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        let w = a[j * n + i] * b[l * n + k];
                        second += w
                            * (hh[k * n + i] * hh[j * n + l].conj()
                                + hm[k * n + j] * hm[i * n + l]);
                    }
                }
            }
        }
        let mut curv = Complex::zero();
        if !bg.is_flat() {
            // V^k = g₀^{kq̄} φ_q̄
            let gp = &grad[pt * n..(pt + 1) * n];
            let mut v = [Complex::zero(); 2];
            for k in 0..n {
                for q in 0..n {
                    v[k] += b[q * n + k] * gp[q].conj();
                }
            }
            let r = bg.curvature_at(pt);
            for i in 0..n {
                for j in 0..n {
                    for k in 0..n {
                        for l in 0..n {
                            curv += a[j * n + i]
                                * r[((i * n + j) * n + k) * n + l]
                                * v[k]
                                * v[l].conj();
                        }
                    }
                }
            }
        }
        rhs.push(pairing.values()[pt] + second.re + curv.re);
    }
    BochnerSides {
        lhs,
        rhs: ScalarField::from_vec_unchecked(grid, rhs),
    }
}

/// Pointwise `LHS - RHS` of the Bochner identity.
pub fn bochner_residual<T: Real>(sol: &MASolution<T>) -> Result<ScalarField<T>> {
    let m = sol.metric()?;
    Ok(bochner_sides(sol, &m).residual())
}

/// Pointwise slack of
/// `Δ_ω H ≥ 2e^{-λφ}Re⟨∇F,∇̄φ⟩_{ω₀} + (λ - 2K) H tr_ω ω₀ - λ(n+2) H`.
#[derive(Clone, Debug)]
pub struct SlackField<T: Real> {
    pub slack: ScalarField<T>,
    /// `max|Δ_ω H|`, the scale for the tolerance.
    pub scale: T,
}

impl<T: Real> SlackField<T> {
    pub fn min(&self) -> T {
        self.slack.min()
    }
}

pub fn diff_inequality_slack<T: Real>(sol: &MASolution<T>, lambda: T) -> Result<SlackField<T>> {
    let m = sol.metric()?;
    Ok(slack_with_metric(sol, &m, lambda))
}

fn slack_with_metric<T: Real>(sol: &MASolution<T>, m: &MetricField<T>, lambda: T) -> SlackField<T> {
    let bg = sol.bg();
    let n = T::of_usize(sol.grid().complex_dim());
    let h = h_field(sol, lambda);
    let lap_h = laplacian(&h, m);
    let pairing = hermitian_grad_pairing(sol.f(), &sol.phi, bg);
    let tr = trace_w_w0(m, bg);
    let phi = sol.phi_normalized();
    let two = T::lit(2.0);
    let k = bg.k_lower();
    let values = (0..sol.grid().len())
        .map(|p| {
            let hv = h.values()[p];
            let rhs = (-lambda * phi.values()[p]).exp() * pairing.values()[p]
                + (lambda - two * k) * hv * tr.values()[p]
                - lambda * (n + two) * hv;
            lap_h.values()[p] - rhs
        })
        .collect();
    SlackField {
        slack: ScalarField::from_vec_unchecked(*sol.grid(), values),
        scale: lap_h.max_abs(),
    }
}

/// `|∇F|_{ω₀}` pointwise.
pub fn grad_norm<T: Real>(u: &ScalarField<T>, sol: &MASolution<T>) -> ScalarField<T> {
    grad_norm_sq(u, sol.bg()).map(|v| v.sqrt())
}

#[allow(non_snake_case)]
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EstimateReport {
    pub lambda: f64,
    #[serde(rename = "K")]
    pub k: f64,
    pub sup_F: f64,
    /// `‖∇F‖_{L^{2n}(e^{2F}ω₀ⁿ)}`.
    pub wgrad_F_norm: f64,
    /// `‖∇F‖_{L^∞}`, for comparison with the weighted norm.
    pub grad_F_sup: f64,
    pub sup_H: f64,
    /// `(sup H)^α`, the quantity the cutoff argument works with.
    pub sup_H_alpha: f64,
    pub inf_phi: f64,
    pub c_emp: f64,
    /// `max|LHS - RHS| / max|LHS|` of the Bochner identity.
    pub bochner_residual_max: f64,
    pub diff_ineq_min_slack: f64,
    pub diff_ineq_scale: f64,
    /// `|∇φ|²_{ω₀} ≤ c_emp e^{λ(φ - inf φ)}` at every grid point.
    pub certificate_holds: bool,
}

impl EstimateReport {
    /// Relative slack `min slack / max|Δ_ω H|`.
    pub fn relative_slack(&self) -> f64 {
        if self.diff_ineq_scale > 0.0 {
            self.diff_ineq_min_slack / self.diff_ineq_scale
        } else {
            self.diff_ineq_min_slack
        }
    }
}

pub fn estimate_report<T: Real>(sol: &MASolution<T>) -> Result<EstimateReport> {
    let bg = sol.bg();
    let grid = *sol.grid();
    let n = grid.complex_dim();
    let k = bg.k_lower();
    let lambda = lambda_of(k)?;
    let m = sol.metric()?;
    let f = sol.f();

    let grad_f = grad_norm(f, sol);
    let weight = f.zip_map(bg.det_g0(), |fv, d| (T::lit(2.0) * fv).exp() * d);
    let wgrad = lp_norm(&grad_f, T::of_usize(2 * n), &weight)?;

    let h = h_field(sol, lambda);
    let sup_h = h.max();
    let sides = bochner_sides(sol, &m);
    let slack = slack_with_metric(sol, &m, lambda);

    let grad_phi = grad_norm_sq(&sol.phi, bg);
    let phi = sol.phi_normalized();
    let tol = T::one() + T::lit(1e3) * T::eps();
    let certificate_holds = grad_phi
        .values()
        .iter()
        .zip(phi.values())
        .all(|(&g, &p)| g <= sup_h * (lambda * p).exp() * tol);

    Ok(EstimateReport {
        lambda: lambda.as_f64(),
        k: k.as_f64(),
        sup_F: f.max().as_f64(),
        wgrad_F_norm: wgrad.as_f64(),
        grad_F_sup: grad_f.max().as_f64(),
        sup_H: sup_h.as_f64(),
        sup_H_alpha: sup_h.powf(T::lit(ALPHA)).as_f64(),
        inf_phi: sol.inf_phi.as_f64(),
        c_emp: sup_h.as_f64(),
        bochner_residual_max: sides.relative_max().as_f64(),
        diff_ineq_min_slack: slack.min().as_f64(),
        diff_ineq_scale: slack.scale.as_f64(),
        certificate_holds,
    })
}

/// Maximizer of the trigonometric interpolant of `u`, found by pattern
/// search started at the grid argmax. Returns the point and the value there.
pub fn refine_argmax<T: Real>(u: &ScalarField<T>) -> (Vec<T>, T) {
    let grid = *u.grid();
    let d = grid.real_dim();
    let spec = u.spectrum();
    let start = grid.coords::<T>(u.argmax());
    let mut x: Vec<T> = start[..d].to_vec();
    let mut best = spec.eval_at(&x);
    let mut step = T::lit(0.5 * grid.spacing());
    let wrap = |v: T| {
        let w = v - v.floor();
        if w >= T::one() {
            T::zero()
        } else {
            w
        }
    };
    for _ in 0..200 {
        let mut improved = false;
        for a in 0..d {
            for sign in [T::one(), -T::one()] {
                let mut y = x.clone();
                y[a] = wrap(y[a] + sign * step);
                let v = spec.eval_at(&y);
                if v > best {
                    best = v;
                    x = y;
                    improved = true;
                }
            }
        }
        if !improved {
            step = step * T::lit(0.5);
            if step < T::lit(1e-10) {
                break;
            }
        }
    }
    (x, best)
}

/// Index of the maximum of `H` and its grid coordinates.
pub fn h_argmax<T: Real>(h: &ScalarField<T>) -> (usize, Vec<T>) {
    let idx = h.argmax();
    let x = h.grid().coords::<T>(idx);
    (idx, x[..h.grid().real_dim()].to_vec())
}

/// `e^F = 1 + 0.3 sin(2πx)` on the flat n = 1 torus.
#[cfg(test)]
pub(crate) fn eps03(npts: usize) -> MASolution<f64> {
    use std::f64::consts::PI;
    use std::sync::Arc;
    let grid = crate::grid::GridSpec::new(1, npts).unwrap();
    let bg = Arc::new(crate::kahler::make_flat_background(grid));
    let f = ScalarField::from_fn(grid, |x: &[f64; 4]| {
        (1.0 + 0.3 * (2.0 * PI * x[0]).sin()).ln()
    });
    let f = crate::solver::normalize_density(&f, &bg).unwrap();
    crate::solver::solve(crate::solver::MAProblem::new(bg, f).unwrap()).unwrap()
}

#[cfg(test)]
pub(crate) fn zero_solution(n: usize, npts: usize) -> MASolution<f64> {
    use std::sync::Arc;
    let grid = crate::grid::GridSpec::new(n, npts).unwrap();
    let bg = Arc::new(crate::kahler::make_flat_background(grid));
    crate::solver::solve(crate::solver::MAProblem::new(bg, ScalarField::zeros(grid)).unwrap())
        .unwrap()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn lambda_examples() {
        assert_eq!(lambda_of(0.0).unwrap(), 10.0);
        assert_eq!(lambda_of(2.0).unwrap(), 14.0);
        assert_eq!(lambda_of(0.5).unwrap(), 11.0);
        assert!(lambda_of(-1.0).is_err());
    }

    #[test]
    fn zero_solution_is_trivial() {
        let sol = zero_solution(1, 16);
        assert_eq!(h_field(&sol, 10.0).max_abs(), 0.0);
        assert_eq!(bochner_residual(&sol).unwrap().max_abs(), 0.0);
        assert_eq!(
            diff_inequality_slack(&sol, 10.0).unwrap().slack.max_abs(),
            0.0
        );
        let r = estimate_report(&sol).unwrap();
        assert_eq!(r.c_emp, 0.0);
        assert!(r.certificate_holds);
    }

    #[test]
    fn h_matches_closed_form_and_fine_interpolation() {
        let sol = eps03(64);
        let h = h_field(&sol, 10.0);
        let grid = *sol.grid();
        let phi_exact = |x: f64| -(0.3 / (PI * PI)) * (2.0 * PI * x).sin();
        let inf = -(0.3 / (PI * PI));
        let h_exact = |x: f64| {
            (-10.0 * (phi_exact(x) - inf)).exp() * (0.09 / (PI * PI)) * (2.0 * PI * x).cos().powi(2)
        };
        for p in 0..grid.len() {
            let x = grid.coords::<f64>(p)[0];
            assert!((h.values()[p] - h_exact(x)).abs() < 1e-12);
        }
        // 10× finer sampling of the closed form
        let fine = (0..640)
            .map(|i| h_exact(i as f64 / 640.0))
            .fold(0.0, f64::max);
        assert!(h.max() <= fine + 1e-12);
        assert!((h.max() - fine) / fine > -1e-2);
        let (_, refined) = refine_argmax(&h);
        assert!(refined >= fine - 1e-9, "{refined} vs {fine}");
    }

    #[test]
    fn h_invariant_under_constant_shift() {
        let mut sol = eps03(32);
        let h0 = h_field(&sol, 10.0);
        sol.phi = sol.phi.shifted(0.7);
        let h1 = h_field(&sol, 10.0);
        for (a, b) in h0.values().iter().zip(h1.values()) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn flat_instance_estimates() {
        let sol = eps03(64);
        let r = estimate_report(&sol).unwrap();
        assert_eq!(r.lambda, 10.0);
        assert!(r.bochner_residual_max <= 1e-8);
        assert!(r.diff_ineq_min_slack >= -1e-8 * r.diff_ineq_scale);
        assert!(r.certificate_holds);
        for v in [
            r.sup_F,
            r.wgrad_F_norm,
            r.grad_F_sup,
            r.sup_H,
            r.sup_H_alpha,
            r.inf_phi,
        ] {
            assert!(v.is_finite());
        }
    }

    #[test]
    fn bochner_residual_decays_spectrally() {
        // Poisson-type instance with a narrow-ish bump: not band-limited
        use std::sync::Arc;
        let run = |npts: usize| {
            let grid = crate::grid::GridSpec::new(1, npts).unwrap();
            let bg = Arc::new(crate::kahler::make_flat_background(grid));
            let c = [0.5; 4];
            let f = ScalarField::from_fn(grid, |x: &[f64; 4]| {
                0.3 * (-crate::grid::periodic_dist_sq(&grid, x, &c) / (2.0 * 0.06 * 0.06)).exp()
            });
            let f = crate::solver::normalize_density(&f, &bg).unwrap();
            let sol = crate::solver::solve(crate::solver::MAProblem::new(bg, f).unwrap()).unwrap();
            bochner_sides(&sol, &sol.metric().unwrap()).relative_max()
        };
        let (e32, e64) = (run(32), run(64));
        assert!(e32 / e64 >= 100.0, "{e32} → {e64}");
    }
}
