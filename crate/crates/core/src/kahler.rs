//! Background Kähler metrics on the torus (flat or flat + i∂∂̄ψ), their
//! Christoffel symbols and curvature, the bisectional lower bound `K`, and
//! the metric contractions used by the estimate machinery.
//!
//! Curvature convention:
//! `R_{ij̄kl̄} = -∂_k∂_l̄ g_{ij̄} + g^{pq̄} (∂_k g_{iq̄}) (∂_l̄ g_{pj̄})`,
//! under which the curvature term of the Bochner identity is bounded below
//! by `-K tr_ω ω₀ |∇φ|²_{ω₀}`.

use std::f64::consts::PI;

use num_complex::Complex;
use num_traits::Zero;

use crate::error::{Error, Result};
use crate::grid::{ComplexMatrixField, DiffOp, Dz, GridSpec, ScalarField, Spectrum};
use crate::herm;
use crate::scalar::Real;

/// Smallest admissible eigenvalue of `δ + ψ_{ij̄}` for a perturbed background.
pub const PERTURBED_MIN_EIGEN: f64 = 0.1;

/// Number of ξ-directions sampled per point when bounding the n = 2
/// bisectional curvature (the ζ-minimization is exact).
pub const BISECTIONAL_SAMPLES: usize = 512;

/// Anything with a Hermitian metric matrix and its inverse.
pub trait HermitianMetric<T: Real> {
    fn matrix(&self) -> &ComplexMatrixField<T>;
    fn inverse(&self) -> &ComplexMatrixField<T>;
}

#[derive(Clone, Debug)]
pub struct BackgroundMetric<T: Real> {
    grid: GridSpec,
    psi: Option<ScalarField<T>>,
    g0: ComplexMatrixField<T>,
    inverse_g0: ComplexMatrixField<T>,
    /// `Γ^p_{ki}` at `[pt][p][k][i]`.
    christoffel: Vec<Complex<T>>,
    /// `R_{ij̄kl̄}` at `[pt][i][j][k][l]`.
    curvature: Vec<Complex<T>>,
    det_g0: ScalarField<T>,
    k_lower: T,
}

impl<T: Real> HermitianMetric<T> for BackgroundMetric<T> {
    fn matrix(&self) -> &ComplexMatrixField<T> {
        &self.g0
    }
    fn inverse(&self) -> &ComplexMatrixField<T> {
        &self.inverse_g0
    }
}

impl<T: Real> BackgroundMetric<T> {
    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn is_flat(&self) -> bool {
        self.psi.is_none()
    }

    pub fn psi(&self) -> Option<&ScalarField<T>> {
        self.psi.as_ref()
    }

    pub fn g0(&self) -> &ComplexMatrixField<T> {
        &self.g0
    }

    pub fn inverse_g0(&self) -> &ComplexMatrixField<T> {
        &self.inverse_g0
    }

    pub fn det_g0(&self) -> &ScalarField<T> {
        &self.det_g0
    }

    /// Lower bound `K ≥ 0` with bisectional curvature `≥ -K`.
    pub fn k_lower(&self) -> T {
        self.k_lower
    }

    /// `Γ^p_{ki}` at grid point `pt`, laid out `[p][k][i]`.
    pub fn christoffel_at(&self, pt: usize) -> &[Complex<T>] {
        let n3 = self.grid.complex_dim().pow(3);
        &self.christoffel[pt * n3..(pt + 1) * n3]
    }

    /// `R_{ij̄kl̄}` at grid point `pt`, laid out `[i][j][k][l]`.
    pub fn curvature_at(&self, pt: usize) -> &[Complex<T>] {
        let n4 = self.grid.complex_dim().pow(4);
        &self.curvature[pt * n4..(pt + 1) * n4]
    }

    /// `∫ ω₀ⁿ` under the `det g₀` volume convention.
    pub fn volume(&self) -> T {
        self.det_g0.mean()
    }
}

pub fn make_flat_background<T: Real>(grid: GridSpec) -> BackgroundMetric<T> {
    let n = grid.complex_dim();
    BackgroundMetric {
        grid,
        psi: None,
        g0: ComplexMatrixField::identity(grid),
        inverse_g0: ComplexMatrixField::identity(grid),
        christoffel: vec![Complex::zero(); grid.len() * n.pow(3)],
        curvature: vec![Complex::zero(); grid.len() * n.pow(4)],
        det_g0: ScalarField::constant(grid, T::one()),
        k_lower: T::zero(),
    }
}

fn positivity_error<T: Real>(grid: &GridSpec, index: usize, eigenvalue: T) -> Error {
    Error::Positivity {
        index,
        coords: grid.coords::<f64>(index)[..grid.real_dim()].to_vec(),
        eigenvalue: eigenvalue.as_f64(),
    }
}

/// Background `g₀ = δ + ψ_{ij̄}`.
pub fn make_perturbed_background<T: Real>(
    grid: GridSpec,
    psi: &ScalarField<T>,
) -> Result<BackgroundMetric<T>> {
    grid.check_same(psi.grid())?;
    let n = grid.complex_dim();
    let npts = grid.len();
    let spec = psi.spectrum();

    let g0 = ComplexMatrixField::identity(grid).add(&spec.complex_hessian());
    let mut worst = (0usize, T::infinity());
    for p in 0..npts {
        let (lo, _) = herm::eigen_range(g0.at(p), n);
        if lo < worst.1 {
            worst = (p, lo);
        }
    }
    if worst.1 < T::lit(PERTURBED_MIN_EIGEN) {
        return Err(positivity_error(&grid, worst.0, worst.1));
    }

    let mut inverse_g0 = ComplexMatrixField::zeros(grid);
    let mut det = Vec::with_capacity(npts);
    for p in 0..npts {
        let m = g0.at(p).to_vec();
        herm::inverse(&m, n, inverse_g0.at_mut(p));
        det.push(herm::herm_det(&m, n));
    }

    // dg[k][i][q] = ∂_k g_{iq̄}, symmetric in (k, i)
    let dg = third_derivatives(&spec, n);
    // ddg[k][l][i][j] = ∂_k ∂_l̄ g_{ij̄}
    let ddg = fourth_derivatives(&spec, n);

    let n3 = n * n * n;
    let n4 = n3 * n;
    let mut christoffel = vec![Complex::zero(); npts * n3];
    let mut curvature = vec![Complex::zero(); npts * n4];
    for pt in 0..npts {
        let ginv = inverse_g0.at(pt);
        let d = |k: usize, i: usize, q: usize| dg[(k * n + i) * n + q][pt];
        for p in 0..n {
            for k in 0..n {
                for i in 0..n {
                    let mut s = Complex::zero();
                    for q in 0..n {
                        s += ginv[q * n + p] * d(k, i, q);
                    }
                    christoffel[pt * n3 + (p * n + k) * n + i] = s;
                }
            }
        }
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        let mut s = -ddg[((k * n + l) * n + i) * n + j][pt];
                        for p in 0..n {
                            for q in 0..n {
                                s += ginv[q * n + p] * d(k, i, q) * d(l, j, p).conj();
                            }
                        }
                        curvature[pt * n4 + ((i * n + j) * n + k) * n + l] = s;
                    }
                }
            }
        }
    }

    let mut bg = BackgroundMetric {
        grid,
        psi: Some(psi.clone()),
        g0,
        inverse_g0,
        christoffel,
        curvature,
        det_g0: ScalarField::from_vec_unchecked(grid, det),
        k_lower: T::zero(),
    };
    bg.k_lower = bisectional_lower_bound(&bg);
    Ok(bg)
}

fn third_derivatives<T: Real>(spec: &Spectrum<T>, n: usize) -> Vec<Vec<Complex<T>>> {
    let mut out = vec![Vec::new(); n * n * n];
    for k in 0..n {
        for i in k..n {
            for q in 0..n {
                let f = spec
                    .apply(&DiffOp::new(&[Dz::Holo(k), Dz::Holo(i), Dz::Anti(q)]))
                    .values()
                    .to_vec();
                out[(i * n + k) * n + q] = f.clone();
                out[(k * n + i) * n + q] = f;
            }
        }
    }
    out
}

fn fourth_derivatives<T: Real>(spec: &Spectrum<T>, n: usize) -> Vec<Vec<Complex<T>>> {
    let mut out: Vec<Vec<Complex<T>>> = vec![Vec::new(); n.pow(4)];
    for k in 0..n {
        for i in k..n {
            for l in 0..n {
                for j in l..n {
                    let f = spec
                        .apply(&DiffOp::new(&[
                            Dz::Holo(k),
                            Dz::Holo(i),
                            Dz::Anti(l),
                            Dz::Anti(j),
                        ]))
                        .values()
                        .to_vec();
                    for (a, b) in [(k, i), (i, k)] {
                        for (c, d) in [(l, j), (j, l)] {
                            out[((a * n + c) * n + b) * n + d] = f.clone();
                        }
                    }
                }
            }
        }
    }
    out
}

/// `R(ξ, ξ̄, ζ, ζ̄)` for explicit vectors at point `pt`.
pub fn bisectional_value<T: Real>(
    bg: &BackgroundMetric<T>,
    pt: usize,
    xi: &[Complex<T>],
    zeta: &[Complex<T>],
) -> T {
    let n = bg.grid.complex_dim();
    let r = bg.curvature_at(pt);
    let mut s = Complex::zero();
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    s += r[((i * n + j) * n + k) * n + l]
                        * xi[i]
                        * xi[j].conj()
                        * zeta[k]
                        * zeta[l].conj();
                }
            }
        }
    }
    s.re
}

/// `|ξ|²_{g₀} = g_{ij̄} ξ^i ξ̄^j` at point `pt`.
pub fn norm_sq_at<T: Real>(bg: &BackgroundMetric<T>, pt: usize, xi: &[Complex<T>]) -> T {
    let n = bg.grid.complex_dim();
    let g = bg.g0.at(pt);
    let mut s = Complex::zero();
    for i in 0..n {
        for j in 0..n {
            s += g[i * n + j] * xi[i] * xi[j].conj();
        }
    }
    s.re
}

/// Deterministic near-uniform points on the unit 2-sphere (Fibonacci lattice).
fn fibonacci_sphere(count: usize) -> Vec<[f64; 3]> {
    let golden = PI * (3.0 - 5f64.sqrt());
    (0..count)
        .map(|i| {
            let z = 1.0 - 2.0 * (i as f64 + 0.5) / count as f64;
            let r = (1.0 - z * z).sqrt();
            let phi = golden * i as f64;
            [r * phi.cos(), r * phi.sin(), z]
        })
        .collect()
}

/// Minimum of the normalized bisectional curvature at one grid point.
///
/// For n = 2 the direction `ξ` is written through its projector
/// `ξξ* = ½(I + v·σ)` with `v` on the Bloch sphere, which makes the curvature
/// form in `ζ` affine in `v`; the `ζ` minimization is then an exact
/// generalized eigenvalue and only `v` is sampled (Fibonacci set plus a
/// local pattern-search refinement of the best sample).
pub fn bisectional_min_at<T: Real>(bg: &BackgroundMetric<T>, pt: usize) -> T {
    let n = bg.grid.complex_dim();
    if n == 1 {
        let g = bg.g0.at(pt)[0].re;
        return bg.curvature_at(pt)[0].re / (g * g);
    }
    let form = BlochForm::new(bg, pt);
    let samples = fibonacci_sphere(BISECTIONAL_SAMPLES);
    let mut best_v = samples[0];
    let mut best = f64::INFINITY;
    for v in &samples {
        let val = form.eval(v);
        if val < best {
            best = val;
            best_v = *v;
        }
    }
    // pattern search on the sphere around the best sample
    let mut step = (4.0 * PI / BISECTIONAL_SAMPLES as f64).sqrt();
    for _ in 0..40 {
        let (t1, t2) = tangent_basis(&best_v);
        let mut improved = false;
        for (a, b) in [(1.0, 0.0), (-1.0, 0.0), (0.0, 1.0), (0.0, -1.0)] {
            let mut v = [0.0; 3];
            for c in 0..3 {
                v[c] = best_v[c] + step * (a * t1[c] + b * t2[c]);
            }
            let norm = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
            for c in v.iter_mut() {
                *c /= norm;
            }
            let val = form.eval(&v);
            if val < best {
                best = val;
                best_v = v;
                improved = true;
            }
        }
        if !improved {
            step *= 0.5;
            if step < 1e-7 {
                break;
            }
        }
    }
    T::lit(best)
}

fn tangent_basis(v: &[f64; 3]) -> ([f64; 3], [f64; 3]) {
    let a = if v[0].abs() < 0.9 {
        [1.0, 0.0, 0.0]
    } else {
        [0.0, 1.0, 0.0]
    };
    let dot = a[0] * v[0] + a[1] * v[1] + a[2] * v[2];
    let mut t1 = [a[0] - dot * v[0], a[1] - dot * v[1], a[2] - dot * v[2]];
    let nt = (t1[0] * t1[0] + t1[1] * t1[1] + t1[2] * t1[2]).sqrt();
    for c in t1.iter_mut() {
        *c /= nt;
    }
    let t2 = [
        v[1] * t1[2] - v[2] * t1[1],
        v[2] * t1[0] - v[0] * t1[2],
        v[0] * t1[1] - v[1] * t1[0],
    ];
    (t1, t2)
}

/// Curvature form at one point in Bloch coordinates (n = 2), evaluated in f64.
struct BlochForm {
    /// Hermitian 2×2 `Q_a` for a ∈ {I, x, y, z}, as (q11, q22, q12).
    q: [(f64, f64, Complex<f64>); 4],
    g: (f64, f64, Complex<f64>),
    /// `g_{ij̄}` contracted with (I, σx, σy, σz).
    gvec: [f64; 4],
}

impl BlochForm {
    fn new<T: Real>(bg: &BackgroundMetric<T>, pt: usize) -> Self {
        let r = bg.curvature_at(pt);
        let rc = |i: usize, j: usize, k: usize, l: usize| {
            let v = r[((i * 2 + j) * 2 + k) * 2 + l];
            Complex::new(v.re.as_f64(), v.im.as_f64())
        };
        let i1 = Complex::new(0.0, 1.0);
        let one = Complex::new(1.0, 0.0);
        let zero = Complex::new(0.0, 0.0);
        // Pauli matrices indexed [i][j]
        let paulis: [[[Complex<f64>; 2]; 2]; 4] = [
            [[one, zero], [zero, one]],
            [[zero, one], [one, zero]],
            [[zero, -i1], [i1, zero]],
            [[one, zero], [zero, -one]],
        ];
        let mut q = [(0.0, 0.0, zero); 4];
        for (a, s) in paulis.iter().enumerate() {
            let mut m = [[zero; 2]; 2];
            for k in 0..2 {
                for l in 0..2 {
                    let mut acc = zero;
                    for i in 0..2 {
                        for j in 0..2 {
                            acc += rc(i, j, k, l) * s[i][j];
                        }
                    }
                    m[k][l] = acc;
                }
            }
            q[a] = (m[0][0].re, m[1][1].re, m[0][1]);
        }
        let g0 = bg.g0.at(pt);
        let gc =
            |i: usize, j: usize| Complex::new(g0[i * 2 + j].re.as_f64(), g0[i * 2 + j].im.as_f64());
        let mut gvec = [0.0; 4];
        for (a, s) in paulis.iter().enumerate() {
            let mut acc = zero;
            for i in 0..2 {
                for j in 0..2 {
                    acc += gc(i, j) * s[i][j];
                }
            }
            gvec[a] = acc.re;
        }
        BlochForm {
            q,
            g: (gc(0, 0).re, gc(1, 1).re, gc(0, 1)),
            gvec,
        }
    }

    fn eval(&self, v: &[f64; 3]) -> f64 {
        let w = [1.0, v[0], v[1], v[2]];
        let mut q11 = 0.0;
        let mut q22 = 0.0;
        let mut q12 = Complex::new(0.0, 0.0);
        let mut nxi = 0.0;
        for a in 0..4 {
            q11 += w[a] * self.q[a].0;
            q22 += w[a] * self.q[a].1;
            q12 += self.q[a].2 * w[a];
            nxi += w[a] * self.gvec[a];
        }
        // both the form and the norm carry the same factor ½
        let qm = [
            Complex::new(q11, 0.0),
            q12,
            q12.conj(),
            Complex::new(q22, 0.0),
        ];
        let gm = [
            Complex::new(self.g.0, 0.0),
            self.g.2,
            self.g.2.conj(),
            Complex::new(self.g.1, 0.0),
        ];
        herm::min_generalized_eigen(&qm, &gm, 2) / nxi
    }
}

/// `K = max(0, -min R(ξ,ξ̄,ζ,ζ̄)/(|ξ|²|ζ|²))` over the grid.
pub fn bisectional_lower_bound<T: Real>(bg: &BackgroundMetric<T>) -> T {
    if bg.is_flat() {
        return T::zero();
    }
    let mut min = T::infinity();
    for pt in 0..bg.grid.len() {
        min = min.min(bisectional_min_at(bg, pt));
    }
    (-min).max(T::zero())
}

/// `ω = ω₀ + i∂∂̄φ` with its inverse and `det g / det g₀`.
#[derive(Clone, Debug)]
pub struct MetricField<T: Real> {
    grid: GridSpec,
    g: ComplexMatrixField<T>,
    inverse_g: ComplexMatrixField<T>,
    det_ratio: ScalarField<T>,
    min_eigen: T,
}

impl<T: Real> HermitianMetric<T> for MetricField<T> {
    fn matrix(&self) -> &ComplexMatrixField<T> {
        &self.g
    }
    fn inverse(&self) -> &ComplexMatrixField<T> {
        &self.inverse_g
    }
}

impl<T: Real> MetricField<T> {
    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }
    pub fn g(&self) -> &ComplexMatrixField<T> {
        &self.g
    }
    pub fn inverse_g(&self) -> &ComplexMatrixField<T> {
        &self.inverse_g
    }
    pub fn det_ratio(&self) -> &ScalarField<T> {
        &self.det_ratio
    }
    /// Smallest eigenvalue of `g_{ij̄}` over the grid (coordinate frame).
    pub fn min_eigen(&self) -> T {
        self.min_eigen
    }

    /// `det g` (the `ωⁿ` density).
    pub fn det(&self, bg: &BackgroundMetric<T>) -> ScalarField<T> {
        self.det_ratio.zip_map(bg.det_g0(), |a, b| a * b)
    }

    /// Assembles `g = g₀ + hess`. Fails if `g` is not positive definite.
    pub fn from_hessian(bg: &BackgroundMetric<T>, hess: &ComplexMatrixField<T>) -> Result<Self> {
        let grid = *bg.grid();
        grid.check_same(hess.grid())?;
        let n = grid.complex_dim();
        let g = bg.g0().add(hess);
        let mut inverse_g = ComplexMatrixField::zeros(grid);
        let mut ratio = Vec::with_capacity(grid.len());
        let mut worst = (0usize, T::infinity());
        for p in 0..grid.len() {
            let m = g.at(p);
            let (lo, _) = herm::eigen_range(m, n);
            if lo < worst.1 {
                worst = (p, lo);
            }
            herm::inverse(m, n, inverse_g.at_mut(p));
            ratio.push(herm::herm_det(m, n) / bg.det_g0().values()[p]);
        }
        if !(worst.1 > T::zero()) {
            return Err(positivity_error(&grid, worst.0, worst.1));
        }
        Ok(MetricField {
            grid,
            g,
            inverse_g,
            det_ratio: ScalarField::from_vec_unchecked(grid, ratio),
            min_eigen: worst.1,
        })
    }
}

pub fn metric_of_potential<T: Real>(
    bg: &BackgroundMetric<T>,
    phi: &ScalarField<T>,
) -> Result<MetricField<T>> {
    bg.grid().check_same(phi.grid())?;
    MetricField::from_hessian(bg, &phi.spectrum().complex_hessian())
}

/// `tr_ω ω₀ = g^{ij̄} g₀_{ij̄}`.
pub fn trace_w_w0<T: Real>(m: &MetricField<T>, bg: &BackgroundMetric<T>) -> ScalarField<T> {
    let n = m.grid.complex_dim();
    let values = (0..m.grid.len())
        .map(|p| herm::trace_product(m.inverse_g.at(p), bg.g0().at(p), n).re)
        .collect();
    ScalarField::from_vec_unchecked(m.grid, values)
}

/// Complex gradient `(∂_1 u, …, ∂_n u)` per point, row-major.
pub(crate) fn gradient_vectors<T: Real>(spec: &Spectrum<T>) -> Vec<Complex<T>> {
    let n = spec.grid().complex_dim();
    let npts = spec.grid().len();
    let grads = spec.gradient();
    let mut out = vec![Complex::zero(); npts * n];
    for (j, g) in grads.iter().enumerate() {
        for (p, v) in g.values().iter().enumerate() {
            out[p * n + j] = *v;
        }
    }
    out
}

/// `|∇u|²_g = g^{ij̄} u_i u_j̄`.
pub fn grad_norm_sq<T: Real>(
    u: &ScalarField<T>,
    metric: &impl HermitianMetric<T>,
) -> ScalarField<T> {
    let grid = *u.grid();
    let n = grid.complex_dim();
    let grad = gradient_vectors(&u.spectrum());
    let inv = metric.inverse();
    let values = (0..grid.len())
        .map(|p| {
            let gp = &grad[p * n..(p + 1) * n];
            herm::contract_vectors(inv.at(p), gp, gp, n)
                .re
                .max(T::zero())
        })
        .collect();
    ScalarField::from_vec_unchecked(grid, values)
}

/// `2 Re⟨∇u, ∇̄v⟩_g = 2 Re(g^{ij̄} u_i v_j̄)`.
pub fn hermitian_grad_pairing<T: Real>(
    u: &ScalarField<T>,
    v: &ScalarField<T>,
    metric: &impl HermitianMetric<T>,
) -> ScalarField<T> {
    let grid = *u.grid();
    let n = grid.complex_dim();
    let gu = gradient_vectors(&u.spectrum());
    let gv = gradient_vectors(&v.spectrum());
    let inv = metric.inverse();
    let two = T::lit(2.0);
    let values = (0..grid.len())
        .map(|p| {
            two * herm::contract_vectors(
                inv.at(p),
                &gu[p * n..(p + 1) * n],
                &gv[p * n..(p + 1) * n],
                n,
            )
            .re
        })
        .collect();
    ScalarField::from_vec_unchecked(grid, values)
}

/// `Δ_ω u = g^{ij̄} u_{ij̄}`.
pub fn laplacian<T: Real>(u: &ScalarField<T>, metric: &impl HermitianMetric<T>) -> ScalarField<T> {
    let grid = *u.grid();
    let n = grid.complex_dim();
    let hess = u.spectrum().complex_hessian();
    let inv = metric.inverse();
    let values = (0..grid.len())
        .map(|p| herm::trace_product(inv.at(p), hess.at(p), n).re)
        .collect();
    ScalarField::from_vec_unchecked(grid, values)
}

/// `u_{ki} = ∂_k∂_i u - Γ^p_{ki} u_p` (covariant w.r.t. ω₀).
pub fn covariant_hessian_holo<T: Real>(
    u: &ScalarField<T>,
    bg: &BackgroundMetric<T>,
) -> ComplexMatrixField<T> {
    let spec = u.spectrum();
    let mut out = spec.holomorphic_hessian();
    if bg.is_flat() {
        return out;
    }
    let grid = *u.grid();
    let n = grid.complex_dim();
    let grad = gradient_vectors(&spec);
    for pt in 0..grid.len() {
        let gamma = bg.christoffel_at(pt);
        let m = out.at_mut(pt);
        for k in 0..n {
            for i in 0..n {
                let mut s = Complex::zero();
                for p in 0..n {
                    s += gamma[(p * n + k) * n + i] * grad[pt * n + p];
                }
                m[k * n + i] -= s;
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn c(re: f64, im: f64) -> Complex<f64> {
        Complex::new(re, im)
    }

    fn psi_n2(grid: GridSpec, a: f64, swap: bool) -> ScalarField<f64> {
        ScalarField::from_fn(grid, move |x: &[f64; 4]| {
            let (x1, y1, x2, y2) = if swap {
                (x[2], x[3], x[0], x[1])
            } else {
                (x[0], x[1], x[2], x[3])
            };
            let t = 2.0 * PI;
            a * ((t * x1).cos() + (t * y1).sin() * (t * x2).cos() + 0.5 * (t * (x1 + y2)).sin())
        })
    }

    #[test]
    fn flat_background_is_trivial() {
        let bg = make_flat_background::<f64>(GridSpec::new(2, 8).unwrap());
        assert!(bg.is_flat());
        assert_eq!(bg.k_lower(), 0.0);
        assert_eq!(bg.volume(), 1.0);
        assert!(bg.christoffel_at(7).iter().all(|v| v.norm() == 0.0));
        assert!(bg.curvature_at(7).iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn n1_curvature_matches_closed_form() {
        let a = 0.05;
        let grid = GridSpec::new(1, 32).unwrap();
        let psi = ScalarField::from_fn(grid, |x: &[f64; 4]| a * (2.0 * PI * x[0]).sin());
        let bg = make_perturbed_background(grid, &psi).unwrap();
        let mut kmin = f64::INFINITY;
        for p in 0..grid.len() {
            let x = grid.coords::<f64>(p)[0];
            let (s, co) = (2.0 * PI * x).sin_cos();
            // g = 1 + ψ_{zz̄} = 1 - π²a sin, ∂_z g = g'/2, ∂_z∂_z̄ g = g''/4
            let g = 1.0 - PI * PI * a * s;
            let dg = -PI.powi(3) * a * co;
            let r = -PI.powi(4) * a * s + dg * dg / g;
            assert!((bg.g0().at(p)[0] - c(g, 0.0)).norm() < 1e-12);
            assert!((bg.christoffel_at(p)[0] - c(dg / g, 0.0)).norm() < 1e-10);
            assert!(
                (bg.curvature_at(p)[0] - c(r, 0.0)).norm() <= 1e-6 * r.abs().max(1.0),
                "at x = {x}"
            );
            let b = bisectional_min_at(&bg, p);
            assert!((b - r / (g * g)).abs() < 1e-9);
            kmin = kmin.min(r / (g * g));
        }
        assert!((bg.k_lower() - (-kmin).max(0.0)).abs() < 1e-9);
    }

    #[test]
    fn curvature_term_bounded_by_k() {
        let grid = GridSpec::new(2, 8).unwrap();
        let bg = make_perturbed_background(grid, &psi_n2(grid, 0.01, false)).unwrap();
        let k = bg.k_lower();
        assert!(k > 0.0);
        let phi = psi_n2(grid, 0.02, true);
        let m = metric_of_potential(&bg, &phi).unwrap();
        let grad = gradient_vectors(&phi.spectrum());
        let tr = trace_w_w0(&m, &bg);
        let gn = grad_norm_sq(&phi, &bg);
        let n = 2;
        for p in 0..grid.len() {
            let (gi, g0i, r) = (
                m.inverse_g().at(p),
                bg.inverse_g0().at(p),
                bg.curvature_at(p),
            );
            let d = &grad[p * n..(p + 1) * n];
            let mut term = Complex::<f64>::zero();
            for i in 0..n {
                for j in 0..n {
                    for k in 0..n {
                        for l in 0..n {
                            for q in 0..n {
                                for pp in 0..n {
                                    term += gi[j * n + i]
                                        * r[((i * n + j) * n + k) * n + l]
                                        * d[pp]
                                        * d[q].conj()
                                        * g0i[q * n + k]
                                        * g0i[l * n + pp];
                                }
                            }
                        }
                    }
                }
            }
            let bound = -k * tr.values()[p] * gn.values()[p];
            let scale = (k * tr.values()[p] * gn.values()[p]).max(1.0);
            assert!(
                term.re >= bound - 1e-8 * scale,
                "pt {p}: {} < {bound}",
                term.re
            );
        }
    }

    #[test]
    fn laplacian_integrates_to_zero_against_omega_n() {
        let grid = GridSpec::new(2, 8).unwrap();
        let bg = make_perturbed_background(grid, &psi_n2(grid, 0.01, false)).unwrap();
        let m = metric_of_potential(&bg, &psi_n2(grid, 0.02, true)).unwrap();
        let u = ScalarField::from_fn(grid, |x: &[f64; 4]| {
            (2.0 * PI * (x[0] - x[3])).sin()
                + 0.3 * (4.0 * PI * x[1]).cos() * (2.0 * PI * x[2]).sin()
        });
        let total = crate::grid::integrate(&laplacian(&u, &m), &m.det(&bg)).unwrap();
        assert!(total.abs() <= 1e-10, "{total}");
        assert!(laplacian(&ScalarField::constant(grid, 3.0), &m).max_abs() < 1e-12);
    }

    #[test]
    fn rejects_degenerate_perturbation() {
        let grid = GridSpec::new(1, 16).unwrap();
        let psi = ScalarField::from_fn(grid, |x: &[f64; 4]| 0.1 * (2.0 * PI * x[0]).cos());
        assert!(matches!(
            make_perturbed_background(grid, &psi),
            Err(Error::Positivity { .. })
        ));
    }

    #[test]
    fn curvature_has_kahler_symmetries() {
        let grid = GridSpec::new(2, 8).unwrap();
        let bg = make_perturbed_background(grid, &psi_n2(grid, 0.01, false)).unwrap();
        let n = 2;
        let idx = |i: usize, j: usize, k: usize, l: usize| ((i * n + j) * n + k) * n + l;
        for p in (0..grid.len()).step_by(97) {
            let r = bg.curvature_at(p);
            for i in 0..n {
                for j in 0..n {
                    for k in 0..n {
                        for l in 0..n {
                            let v = r[idx(i, j, k, l)];
                            assert!((v - r[idx(k, j, i, l)]).norm() < 1e-9);
                            assert!((v - r[idx(i, l, k, j)]).norm() < 1e-9);
                            assert!((v.conj() - r[idx(j, i, l, k)]).norm() < 1e-9);
                        }
                    }
                }
            }
            let gam = bg.christoffel_at(p);
            for q in 0..n {
                assert!((gam[(q * n) * n + 1] - gam[(q * n + 1) * n]).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn bisectional_min_within_dense_random_oracle() {
        let grid = GridSpec::new(2, 8).unwrap();
        let bg = make_perturbed_background(grid, &psi_n2(grid, 0.01, false)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let unit = |rng: &mut ChaCha8Rng| -> Vec<Complex<f64>> {
            (0..2)
                .map(|_| c(rng.sample(StandardNormal), rng.sample(StandardNormal)))
                .collect()
        };
        for _ in 0..50 {
            let p = rng.gen_range(0..grid.len());
            let ours = bisectional_min_at(&bg, p);
            let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
            for _ in 0..10_000 {
                let xi = unit(&mut rng);
                let zeta = unit(&mut rng);
                let v = bisectional_value(&bg, p, &xi, &zeta)
                    / (norm_sq_at(&bg, p, &xi) * norm_sq_at(&bg, p, &zeta));
                lo = lo.min(v);
                hi = hi.max(v);
            }
            assert!(ours <= lo + 1e-12, "pt {p}: {ours} > {lo}");
            // 5% of the local curvature scale; a near-zero minimum has no relative scale of its own
            let scale = lo.abs().max(hi - lo);
            assert!(
                lo - ours <= 0.05 * scale,
                "pt {p}: {ours} vs {lo} (scale {scale})"
            );
        }
    }

    #[test]
    fn k_lower_invariant_under_coordinate_swap() {
        let grid = GridSpec::new(2, 8).unwrap();
        let k1 = make_perturbed_background(grid, &psi_n2(grid, 0.01, false))
            .unwrap()
            .k_lower();
        let k2 = make_perturbed_background(grid, &psi_n2(grid, 0.01, true))
            .unwrap()
            .k_lower();
        assert!(k1 > 0.0);
        assert!((k1 - k2).abs() <= 1e-6 * k1, "{k1} vs {k2}");
    }

    #[test]
    fn flat_contractions_match_closed_forms() {
        let grid = GridSpec::new(1, 16).unwrap();
        let bg = make_flat_background::<f64>(grid);
        let u = ScalarField::from_fn(grid, |x: &[f64; 4]| (2.0 * PI * x[0]).sin());
        let v = ScalarField::from_fn(grid, |x: &[f64; 4]| (2.0 * PI * x[1]).cos());
        let g = grad_norm_sq(&u, &bg);
        let lap = laplacian(&u, &bg);
        // u_z = π cos(2πx), v_z = iπ sin(2πy) → 2Re(u_z conj(v_z)) = 0
        let pair = hermitian_grad_pairing(&u, &v, &bg);
        for p in 0..grid.len() {
            let x = grid.coords::<f64>(p);
            let co = (2.0 * PI * x[0]).cos();
            assert!((g.values()[p] - PI * PI * co * co).abs() < 1e-11);
            assert!((lap.values()[p] + PI * PI * (2.0 * PI * x[0]).sin()).abs() < 1e-11);
            assert!(pair.values()[p].abs() < 1e-11);
        }
        let m = metric_of_potential(&bg, &ScalarField::zeros(grid)).unwrap();
        assert!(trace_w_w0(&m, &bg)
            .values()
            .iter()
            .all(|&t| (t - 1.0).abs() < 1e-15));
    }

    #[test]
    fn covariant_hessian_symmetric_and_matches_flat_part() {
        let grid = GridSpec::new(2, 8).unwrap();
        let bg = make_perturbed_background(grid, &psi_n2(grid, 0.01, false)).unwrap();
        let u = psi_n2(grid, 1.0, true);
        let h = covariant_hessian_holo(&u, &bg);
        assert!(h.symmetric_defect() < 1e-10);
        // subtracting Γ^p_{ki} u_p by hand recovers the plain second derivatives
        let plain = u.spectrum().holomorphic_hessian();
        let grad = gradient_vectors(&u.spectrum());
        for p in (0..grid.len()).step_by(131) {
            let gam = bg.christoffel_at(p);
            for k in 0..2 {
                for i in 0..2 {
                    let corr: Complex<f64> = (0..2)
                        .map(|q| gam[(q * 2 + k) * 2 + i] * grad[p * 2 + q])
                        .sum();
                    assert!((h.at(p)[k * 2 + i] + corr - plain.at(p)[k * 2 + i]).norm() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn metric_positivity_failure_reports_location() {
        let grid = GridSpec::new(1, 16).unwrap();
        let bg = make_flat_background::<f64>(grid);
        let phi = ScalarField::from_fn(grid, |x: &[f64; 4]| 0.2 * (2.0 * PI * x[0]).cos());
        match metric_of_potential(&bg, &phi) {
            Err(Error::Positivity {
                eigenvalue, coords, ..
            }) => {
                assert!(eigenvalue < 0.0);
                assert!(coords[0].abs() < 1e-12);
            }
            other => panic!("expected positivity error, got {other:?}"),
        }
    }
}
