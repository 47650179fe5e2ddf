//! Fourier-spectral differential operators in complex coordinates.
//!
//! With `z^j = x^j + i y^j` we use `∂_z = (∂_x - i ∂_y)/2` and
//! `∂_z̄ = (∂_x + i ∂_y)/2`. A product of such factors is expanded into real
//! monomials `Π_a ∂_a^{m_a}`, and each monomial gets the symbol
//! `Π_a (2πi k_a)^{m_a}`. Along an axis with odd order the Nyquist mode is
//! zeroed (its derivative is not real); even orders keep it, which makes
//! `∂_z ∂_z̄ = ¼(∂_x² + ∂_y²)` invertible on every non-constant mode.

use num_complex::Complex;

use super::fft::{transform, Direction};
use super::{ComplexField, ComplexMatrixField, GridSpec, ScalarField, MAX_REAL_DIM};
use crate::scalar::Real;

/// One complex first-derivative factor.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Dz {
    /// `∂/∂z^j`
    Holo(usize),
    /// `∂/∂z̄^j`
    Anti(usize),
}

/// Constant-coefficient differential operator expanded in real monomials.
#[derive(Clone, Debug, PartialEq)]
pub struct DiffOp {
    terms: Vec<(Complex<f64>, [u8; MAX_REAL_DIM])>,
}

impl DiffOp {
    pub fn identity() -> Self {
        DiffOp {
            terms: vec![(Complex::new(1.0, 0.0), [0; MAX_REAL_DIM])],
        }
    }

    /// Composition of the given complex derivative factors.
    pub fn new(factors: &[Dz]) -> Self {
        let mut op = Self::identity();
        for f in factors {
            let (j, sign) = match *f {
                Dz::Holo(j) => (j, -1.0),
                Dz::Anti(j) => (j, 1.0),
            };
            let halves = [
                (Complex::new(0.5, 0.0), 2 * j),
                (Complex::new(0.0, 0.5 * sign), 2 * j + 1),
            ];
            let mut next: Vec<(Complex<f64>, [u8; MAX_REAL_DIM])> = Vec::new();
            for (c, exps) in &op.terms {
                for (h, axis) in halves {
                    let mut e = *exps;
                    e[axis] += 1;
                    let coef = c * h;
                    match next.iter_mut().find(|(_, ex)| *ex == e) {
                        Some(slot) => slot.0 += coef,
                        None => next.push((coef, e)),
                    }
                }
            }
            next.retain(|(c, _)| c.norm_sqr() != 0.0);
            op.terms = next;
        }
        op
    }

    /// Flat Laplacian `Σ_j ∂_j ∂_j̄` for complex dimension `n`.
    pub fn flat_laplacian(n: usize) -> Self {
        let mut terms: Vec<(Complex<f64>, [u8; MAX_REAL_DIM])> = Vec::new();
        for j in 0..n {
            terms.extend(DiffOp::new(&[Dz::Holo(j), Dz::Anti(j)]).terms);
        }
        DiffOp { terms }
    }

    /// Highest derivative order along any single axis.
    pub fn max_axis_order(&self) -> u8 {
        self.terms
            .iter()
            .flat_map(|(_, e)| e.iter().copied())
            .max()
            .unwrap_or(0)
    }

    /// Symbol evaluated at every mode in FFT storage order.
    pub fn symbol_table<T: Real>(&self, grid: &GridSpec) -> Vec<Complex<T>> {
        let n = grid.points_per_axis();
        let d = grid.real_dim();
        let max_order = self.max_axis_order() as usize;
        // powers[m][idx] = (2πi k)^m with the Nyquist rule
        let mut powers = vec![vec![Complex::new(1.0f64, 0.0); n]; max_order + 1];
        for m in 1..=max_order {
            for idx in 0..n {
                let nyquist = idx == n / 2;
                powers[m][idx] = if nyquist && m % 2 == 1 {
                    Complex::new(0.0, 0.0)
                } else {
                    let k = grid.wavenumber(idx) as f64;
                    Complex::new(0.0, 2.0 * std::f64::consts::PI * k).powu(m as u32)
                };
            }
        }

        let total = grid.len();
        let mut out = Vec::with_capacity(total);
        let mut multi = [0usize; MAX_REAL_DIM];
        for _ in 0..total {
            let mut s = Complex::new(0.0f64, 0.0);
            for (c, e) in &self.terms {
                let mut t = *c;
                for a in 0..d {
                    if e[a] > 0 {
                        t *= powers[e[a] as usize][multi[a]];
                    }
                }
                s += t;
            }
            out.push(Complex::new(T::lit(s.re), T::lit(s.im)));
            // odometer, last axis fastest
            for a in (0..d).rev() {
                multi[a] += 1;
                if multi[a] < n {
                    break;
                }
                multi[a] = 0;
            }
        }
        out
    }
}

/// Fourier coefficients of a real field.
#[derive(Clone, Debug)]
pub struct Spectrum<T: Real> {
    grid: GridSpec,
    coeffs: Vec<Complex<T>>,
}

impl<T: Real> Spectrum<T> {
    pub fn of(u: &ScalarField<T>) -> Self {
        let mut coeffs: Vec<Complex<T>> = u
            .values()
            .iter()
            .map(|&v| Complex::new(v, T::zero()))
            .collect();
        transform(u.grid(), &mut coeffs, Direction::Forward);
        Spectrum {
            grid: *u.grid(),
            coeffs,
        }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn coeffs(&self) -> &[Complex<T>] {
        &self.coeffs
    }

    pub fn apply(&self, op: &DiffOp) -> ComplexField<T> {
        self.apply_table(&op.symbol_table(&self.grid))
    }

    pub fn apply_table(&self, table: &[Complex<T>]) -> ComplexField<T> {
        let mut buf: Vec<Complex<T>> = self.coeffs.iter().zip(table).map(|(c, s)| c * s).collect();
        transform(&self.grid, &mut buf, Direction::Inverse);
        ComplexField::from_vec(self.grid, buf)
    }

    /// Applies an operator known to map real fields to real fields.
    pub fn apply_real(&self, op: &DiffOp) -> ScalarField<T> {
        self.apply_table(&op.symbol_table(&self.grid)).re()
    }

    /// Two real-valued outputs packed into a single inverse transform.
    pub fn apply_real_pair(
        &self,
        a: &[Complex<T>],
        b: &[Complex<T>],
    ) -> (ScalarField<T>, ScalarField<T>) {
        let i = Complex::new(T::zero(), T::one());
        let mut buf: Vec<Complex<T>> = self
            .coeffs
            .iter()
            .zip(a.iter().zip(b))
            .map(|(c, (sa, sb))| c * (sa + i * sb))
            .collect();
        transform(&self.grid, &mut buf, Direction::Inverse);
        let re = buf.iter().map(|v| v.re).collect();
        let im = buf.iter().map(|v| v.im).collect();
        (
            ScalarField::from_vec_unchecked(self.grid, re),
            ScalarField::from_vec_unchecked(self.grid, im),
        )
    }

    /// Multiplies the coefficients pointwise by a table (e.g. an inverse symbol).
    pub fn scaled(&self, table: &[Complex<T>]) -> Spectrum<T> {
        Spectrum {
            grid: self.grid,
            coeffs: self.coeffs.iter().zip(table).map(|(c, s)| c * s).collect(),
        }
    }

    pub fn to_field(&self) -> ScalarField<T> {
        let mut buf = self.coeffs.clone();
        transform(&self.grid, &mut buf, Direction::Inverse);
        ScalarField::from_vec_unchecked(self.grid, buf.iter().map(|v| v.re).collect())
    }

    /// `∂_{z^j} u` for every complex direction.
    pub fn gradient(&self) -> Vec<ComplexField<T>> {
        (0..self.grid.complex_dim())
            .map(|j| self.apply(&DiffOp::new(&[Dz::Holo(j)])))
            .collect()
    }

    /// `u_{ij̄} = ∂_i ∂_j̄ u`, Hermitian for real `u`.
    pub fn complex_hessian(&self) -> ComplexMatrixField<T> {
        let n = self.grid.complex_dim();
        let mut out = ComplexMatrixField::zeros(self.grid);
        if n == 1 {
            let d = self.apply_real(&DiffOp::new(&[Dz::Holo(0), Dz::Anti(0)]));
            for (p, v) in d.values().iter().enumerate() {
                out.at_mut(p)[0] = Complex::new(*v, T::zero());
            }
            return out;
        }
        let t11 = DiffOp::new(&[Dz::Holo(0), Dz::Anti(0)]).symbol_table(&self.grid);
        let t22 = DiffOp::new(&[Dz::Holo(1), Dz::Anti(1)]).symbol_table(&self.grid);
        let (d11, d22) = self.apply_real_pair(&t11, &t22);
        let d12 = self.apply(&DiffOp::new(&[Dz::Holo(0), Dz::Anti(1)]));
        for p in 0..self.grid.len() {
            let m = out.at_mut(p);
            m[0] = Complex::new(d11.values()[p], T::zero());
            m[1] = d12.values()[p];
            m[2] = d12.values()[p].conj();
            m[3] = Complex::new(d22.values()[p], T::zero());
        }
        out
    }

    /// `u_{ki} = ∂_k ∂_i u` (holomorphic, symmetric).
    pub fn holomorphic_hessian(&self) -> ComplexMatrixField<T> {
        let n = self.grid.complex_dim();
        let mut out = ComplexMatrixField::zeros(self.grid);
        for k in 0..n {
            for i in k..n {
                let d = self.apply(&DiffOp::new(&[Dz::Holo(k), Dz::Holo(i)]));
                for (p, v) in d.values().iter().enumerate() {
                    out.at_mut(p)[k * n + i] = *v;
                    out.at_mut(p)[i * n + k] = *v;
                }
            }
        }
        out
    }
}
