use num_complex::Complex;
use serde::Serialize;

use super::h_field;
use crate::error::Result;
use crate::grid::integrate;
use crate::herm;
use crate::kahler::gradient_vectors;
use crate::scalar::Real;
use crate::solver::MASolution;

/// Both sides of the closed-torus integral identity
/// `∫(e^{-λφ} - 1)(ωⁿ - ω₀ⁿ) = λ∫e^{-λφ} i∂φ∧∂̄φ∧Σ_k ω^{n-1-k}∧ω₀^k`,
/// with the wedge products written as mixed determinants.
pub fn ibp_sides<T: Real>(sol: &MASolution<T>, lambda: T) -> Result<(T, T)> {
    let grid = *sol.grid();
    let n = grid.complex_dim();
    let bg = sol.bg();
    let m = sol.metric()?;
    let phi = sol.phi_normalized();
    let grad = gradient_vectors(&sol.phi.spectrum());
    let ones = crate::grid::ScalarField::constant(grid, T::one());

    let mut lhs = Vec::with_capacity(grid.len());
    let mut rhs = Vec::with_capacity(grid.len());
    for p in 0..grid.len() {
        let w = (-lambda * phi.values()[p]).exp();
        let g = m.g().at(p);
        let g0 = bg.g0().at(p);
        lhs.push((w - T::one()) * (herm::herm_det(g, n) - herm::herm_det(g0, n)));
        let gp = &grad[p * n..(p + 1) * n];
        let mut pm = [Complex::new(T::zero(), T::zero()); 4];
        for i in 0..n {
            for j in 0..n {
                pm[i * n + j] = gp[i] * gp[j].conj();
            }
        }
        let wedge = if n == 1 {
            pm[0].re
        } else {
            herm::mixed_det(&pm, g, n) + herm::mixed_det(&pm, g0, n)
        };
        rhs.push(lambda * w * wedge);
    }
    let l = integrate(
        &crate::grid::ScalarField::from_vec_unchecked(grid, lhs),
        &ones,
    )?;
    let r = integrate(
        &crate::grid::ScalarField::from_vec_unchecked(grid, rhs),
        &ones,
    )?;
    Ok((l, r))
}

/// `|L - R| / (|L| + |R| + 1)`.
pub fn ibp_identity_residual<T: Real>(sol: &MASolution<T>, lambda: T) -> Result<T> {
    let (l, r) = ibp_sides(sol, lambda)?;
    Ok((l - r).abs() / (l.abs() + r.abs() + T::one()))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct L1Bound {
    pub value: f64,
    pub bound: f64,
}

impl L1Bound {
    pub fn margin(&self) -> f64 {
        self.bound - self.value
    }
}

/// `∫H ω₀ⁿ` and the closed-case bound `n (e^{sup F} + 1) ∫ω₀ⁿ / λ`.
pub fn l1_h_bound<T: Real>(sol: &MASolution<T>, lambda: T) -> Result<L1Bound> {
    let bg = sol.bg();
    let h = h_field(sol, lambda);
    let value = integrate(&h, bg.det_g0())?;
    let n = T::of_usize(sol.grid().complex_dim());
    let bound = n * (sol.f().max().exp() + T::one()) * bg.volume() / lambda;
    Ok(L1Bound {
        value: value.as_f64(),
        bound: bound.as_f64(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimate::{eps03, zero_solution};

    #[test]
    fn zero_solution_is_trivial() {
        let sol = zero_solution(1, 16);
        assert_eq!(ibp_sides(&sol, 10.0).unwrap(), (0.0, 0.0));
        assert_eq!(ibp_identity_residual(&sol, 10.0).unwrap(), 0.0);
        let b = l1_h_bound(&sol, 10.0).unwrap();
        assert_eq!(b.value, 0.0);
        assert!(b.margin() > 0.0);
    }

    #[test]
    fn flat_instance_identity_and_bound() {
        let sol = eps03(64);
        let (l, r) = ibp_sides(&sol, 10.0).unwrap();
        assert!(l > 0.0 && r > 0.0);
        assert!(ibp_identity_residual(&sol, 10.0).unwrap() <= 1e-10);
        let b = l1_h_bound(&sol, 10.0).unwrap();
        assert!(b.value > 0.0 && b.margin() > 0.0);
    }
}
