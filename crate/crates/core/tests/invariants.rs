use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex;
use proptest::prelude::*;

use cma_lab::estimate::{build_cutoff, cutoff_bounds, h_field};
use cma_lab::par::map_ordered;
use cma_lab::solver::{compatibility_defect, normalize_density, solve, MAProblem};
use cma_lab::{complex_hessian, integrate, make_flat_background, partial_z, Field, GridSpec};

/// Random low-mode trigonometric polynomial on the n = 1 torus.
fn band_limited(grid: GridSpec, coeffs: &[(i32, i32, f64, f64)]) -> Field {
    Field::from_fn(grid, |x: &[f64; 4]| {
        coeffs
            .iter()
            .map(|&(kx, ky, a, b)| {
                let t = 2.0 * PI * (f64::from(kx) * x[0] + f64::from(ky) * x[1]);
                a * t.cos() + b * t.sin()
            })
            .sum()
    })
}

fn coeffs() -> impl Strategy<Value = Vec<(i32, i32, f64, f64)>> {
    prop::collection::vec((-3i32..=3, -3i32..=3, -1.0f64..1.0, -1.0f64..1.0), 1..5)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn discrete_integration_by_parts(a in coeffs(), b in coeffs()) {
        let grid = GridSpec::new(1, 16).unwrap();
        let (u, v) = (band_limited(grid, &a), band_limited(grid, &b));
        let (du, dv) = (partial_z(&u, 0).unwrap(), partial_z(&v, 0).unwrap());
        let mut s = Complex::new(0.0, 0.0);
        for p in 0..grid.len() {
            s += du.values()[p] * v.values()[p] + u.values()[p] * dv.values()[p];
        }
        let scale = 1.0 + du.max_abs() * v.max_abs() + u.max_abs() * dv.max_abs();
        prop_assert!(s.norm() / grid.len() as f64 <= 1e-12 * scale);
    }

    #[test]
    fn complex_hessian_is_hermitian(a in coeffs()) {
        let grid = GridSpec::new(1, 16).unwrap();
        let h = complex_hessian(&band_limited(grid, &a));
        prop_assert!(h.hermitian_defect() <= 1e-12 * (1.0 + h.max_abs()));
    }

    #[test]
    fn normalization_is_compatible_and_idempotent(a in coeffs(), shift in -5.0f64..5.0) {
        let grid = GridSpec::new(1, 16).unwrap();
        let bg = make_flat_background(grid);
        let f = band_limited(grid, &a).shifted(shift);
        let f1 = normalize_density(&f, &bg).unwrap();
        prop_assert!(compatibility_defect(&f1, &bg).abs() < 1e-13);
        let f2 = normalize_density(&f1, &bg).unwrap();
        for (x, y) in f1.values().iter().zip(f2.values()) {
            prop_assert!((x - y).abs() < 1e-13);
        }
    }

    #[test]
    fn n1_flat_solution_satisfies_the_equation(a in coeffs(), amp in 0.01f64..0.4) {
        let grid = GridSpec::new(1, 16).unwrap();
        let bg = Arc::new(make_flat_background(grid));
        let raw = band_limited(grid, &a);
        let raw = raw.map(|v| amp * v / (1.0 + raw.max_abs()));
        let f = normalize_density(&raw, &bg).unwrap();
        let sol = solve(MAProblem::new(bg.clone(), f.clone()).unwrap()).unwrap();
        prop_assert!(sol.residual_sup < 1e-10);
        prop_assert!(integrate(&sol.phi, bg.det_g0()).unwrap().abs() < 1e-13);
        // H is invariant under the constant gauge
        let h = h_field(&sol, 10.0);
        let mut shifted = sol.clone();
        shifted.phi = sol.phi.shifted(1.5);
        let h2 = h_field(&shifted, 10.0);
        for (x, y) in h.values().iter().zip(h2.values()) {
            prop_assert!((x - y).abs() <= 1e-14 * (1.0 + x.abs()));
        }
    }

    #[test]
    fn cutoff_certificate_for_random_centers(x in 0.0f64..1.0, y in 0.0f64..1.0, r in 0.05f64..0.25) {
        let grid = GridSpec::new(1, 32).unwrap();
        let bg = make_flat_background(grid);
        let cut = build_cutoff(&[x, y], r, 4.0, &bg).unwrap();
        let b = cutoff_bounds(&cut.eta, &bg);
        let d = 10.0 * cut.c0;
        prop_assert_eq!(cut.theta, (1.0 / d).min(r * r / d));
        prop_assert!(b.eta_min >= 1.0 - cut.theta - 1e-15 && b.eta_max <= 1.0 + 1e-15);
        prop_assert!(b.grad_sq_max <= cut.grad_bound());
        prop_assert!(b.hess_max <= cut.hess_bound());
    }

    #[test]
    fn ordered_map_matches_serial(items in prop::collection::vec(any::<u32>(), 0..50), workers in 1usize..6) {
        let serial: Vec<u64> = items.iter().map(|&v| u64::from(v) * 3 + 1).collect();
        prop_assert_eq!(map_ordered(&items, workers, |&v| u64::from(v) * 3 + 1), serial);
    }
}
