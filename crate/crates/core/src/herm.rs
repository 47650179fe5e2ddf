//! Closed-form dense algebra for the `n×n` (n = 1, 2) Hermitian matrices
//! carried at each grid point. Matrices are row-major slices of length `n²`.
//!
//! Index convention: for a metric matrix `G` with `G[i][j] = g_{ij̄}`, the
//! contravariant metric is `g^{ij̄} = (G⁻¹)[j][i]`, so a contraction
//! `g^{ij̄} A_{ij̄}` is `tr(G⁻¹ A)`.

use num_complex::Complex;
use num_traits::Zero;

use crate::scalar::Real;

pub fn det<T: Real>(m: &[Complex<T>], n: usize) -> Complex<T> {
    match n {
        1 => m[0],
        2 => m[0] * m[3] - m[1] * m[2],
        _ => unreachable!("complex dimension {n} unsupported"),
    }
}

/// Determinant of a Hermitian matrix (real by symmetry).
pub fn herm_det<T: Real>(m: &[Complex<T>], n: usize) -> T {
    det(m, n).re
}

pub fn inverse<T: Real>(m: &[Complex<T>], n: usize, out: &mut [Complex<T>]) {
    match n {
        1 => out[0] = m[0].inv(),
        2 => {
            let inv_det = det(m, n).inv();
            out[0] = m[3] * inv_det;
            out[1] = -m[1] * inv_det;
            out[2] = -m[2] * inv_det;
            out[3] = m[0] * inv_det;
        }
        _ => unreachable!("complex dimension {n} unsupported"),
    }
}

/// `(λ_min, λ_max)` of a Hermitian matrix.
pub fn eigen_range<T: Real>(m: &[Complex<T>], n: usize) -> (T, T) {
    match n {
        1 => (m[0].re, m[0].re),
        2 => {
            let a = m[0].re;
            let d = m[3].re;
            let half = T::lit(0.5);
            let mid = half * (a + d);
            let rad = (half * half * (a - d) * (a - d) + m[1].norm_sqr()).sqrt();
            (mid - rad, mid + rad)
        }
        _ => unreachable!("complex dimension {n} unsupported"),
    }
}

/// Smallest root `μ` of `det(Q - μ G) = 0` for Hermitian `Q` and positive `G`:
/// the minimum of `ζ* Q ζ / ζ* G ζ`.
pub fn min_generalized_eigen<T: Real>(q: &[Complex<T>], g: &[Complex<T>], n: usize) -> T {
    match n {
        1 => q[0].re / g[0].re,
        2 => {
            let (q11, q22, q12) = (q[0].re, q[3].re, q[1]);
            let (g11, g22, g12) = (g[0].re, g[3].re, g[1]);
            let a = g11 * g22 - g12.norm_sqr();
            let b = q11 * g22 + q22 * g11 - T::lit(2.0) * (q12 * g12.conj()).re;
            let c = q11 * q22 - q12.norm_sqr();
            let disc = (b * b - T::lit(4.0) * a * c).max(T::zero()).sqrt();
            // numerically stable smaller root of a μ² - b μ + c
            if b >= T::zero() {
                let big = (b + disc) / (T::lit(2.0) * a);
                if big != T::zero() {
                    c / (a * big)
                } else {
                    T::zero()
                }
            } else {
                (b - disc) / (T::lit(2.0) * a)
            }
        }
        _ => unreachable!("complex dimension {n} unsupported"),
    }
}

/// `tr(A B)`.
pub fn trace_product<T: Real>(a: &[Complex<T>], b: &[Complex<T>], n: usize) -> Complex<T> {
    let mut s = Complex::zero();
    for i in 0..n {
        for j in 0..n {
            s += a[i * n + j] * b[j * n + i];
        }
    }
    s
}

/// Mixed determinant `D(A, B)`, normalized so `D(A, A) = det A` (n = 2).
/// For n = 1 it is the product of the scalars.
pub fn mixed_det<T: Real>(a: &[Complex<T>], b: &[Complex<T>], n: usize) -> T {
    match n {
        1 => (a[0] * b[0]).re,
        2 => {
            let s = a[0] * b[3] + a[3] * b[0] - a[1] * b[2] - a[2] * b[1];
            T::lit(0.5) * s.re
        }
        _ => unreachable!("complex dimension {n} unsupported"),
    }
}

/// `g^{ij̄} u_i conj(v_j)` given `G⁻¹`.
pub fn contract_vectors<T: Real>(
    ginv: &[Complex<T>],
    u: &[Complex<T>],
    v: &[Complex<T>],
    n: usize,
) -> Complex<T> {
    let mut s = Complex::zero();
    for i in 0..n {
        for j in 0..n {
            s += ginv[j * n + i] * u[i] * v[j].conj();
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex<f64> {
        Complex::new(re, im)
    }

    #[test]
    fn inverse_roundtrip_2x2() {
        let m = [c(2.0, 0.0), c(0.3, -0.4), c(0.3, 0.4), c(1.5, 0.0)];
        let mut inv = [Complex::zero(); 4];
        inverse(&m, 2, &mut inv);
        for i in 0..2 {
            for k in 0..2 {
                let s: Complex<f64> = (0..2).map(|j| m[i * 2 + j] * inv[j * 2 + k]).sum();
                let expect = if i == k { 1.0 } else { 0.0 };
                assert!((s - c(expect, 0.0)).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn eigen_range_matches_trace_and_det() {
        let m = [c(2.0, 0.0), c(0.3, -0.4), c(0.3, 0.4), c(1.5, 0.0)];
        let (lo, hi) = eigen_range(&m, 2);
        assert!((lo + hi - 3.5).abs() < 1e-14);
        assert!((lo * hi - herm_det(&m, 2)).abs() < 1e-14);
    }

    #[test]
    fn generalized_eigen_brute_force() {
        let q = [c(-1.0, 0.0), c(0.7, 0.2), c(0.7, -0.2), c(0.4, 0.0)];
        let g = [c(1.3, 0.0), c(0.1, 0.2), c(0.1, -0.2), c(0.9, 0.0)];
        let mu = min_generalized_eigen(&q, &g, 2);
        let mut best = f64::INFINITY;
        for a in 0..200 {
            for b in 0..200 {
                let th = std::f64::consts::PI * a as f64 / 199.0;
                let ph = 2.0 * std::f64::consts::PI * b as f64 / 199.0;
                let z = [c(th.cos(), 0.0), Complex::from_polar(th.sin(), ph)];
                // contract_vectors(M, z, z) = z* M z
                let num = contract_vectors(&q, &z, &z, 2).re;
                let den = contract_vectors(&g, &z, &z, 2).re;
                best = best.min(num / den);
            }
        }
        assert!(mu <= best + 1e-12);
        assert!(best - mu < 1e-3);
    }

    #[test]
    fn mixed_det_is_polarization() {
        let a = [c(2.0, 0.0), c(0.3, -0.4), c(0.3, 0.4), c(1.5, 0.0)];
        assert!((mixed_det(&a, &a, 2) - herm_det(&a, 2)).abs() < 1e-14);
    }
}
