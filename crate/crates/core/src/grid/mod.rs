//! Uniform periodic grids on the torus `ℂⁿ/ℤ^{2n}` and sampled fields.
//!
//! Real axes are ordered `(x¹, y¹, x², y²)` and stored row-major with the last
//! axis fastest. Coordinates are `a/N` for `a = 0..N`.

mod fft;
mod interp;
pub mod snapshot;
pub mod spectral;

use num_complex::Complex;
use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;
pub use spectral::{DiffOp, Dz, Spectrum};

/// Largest supported real dimension (`n = 2`).
pub const MAX_REAL_DIM: usize = 4;

/// A point of the fundamental domain; only the first `2n` entries are used.
pub type Coords<T> = [T; MAX_REAL_DIM];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GridSpec {
    complex_dim: usize,
    points_per_axis: usize,
}

impl GridSpec {
    pub fn new(complex_dim: usize, points_per_axis: usize) -> Result<Self> {
        if !(1..=2).contains(&complex_dim) {
            return Err(Error::InvalidGrid(format!(
                "complex dimension must be 1 or 2, got {complex_dim}"
            )));
        }
        if points_per_axis < 8 || points_per_axis % 2 != 0 {
            return Err(Error::InvalidGrid(format!(
                "points per axis must be even and >= 8, got {points_per_axis}"
            )));
        }
        Ok(GridSpec {
            complex_dim,
            points_per_axis,
        })
    }

    #[inline]
    pub fn complex_dim(&self) -> usize {
        self.complex_dim
    }

    #[inline]
    pub fn points_per_axis(&self) -> usize {
        self.points_per_axis
    }

    #[inline]
    pub fn real_dim(&self) -> usize {
        2 * self.complex_dim
    }

    /// Total number of samples, `N^{2n}`.
    #[inline]
    pub fn len(&self) -> usize {
        self.points_per_axis.pow(self.real_dim() as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> f64 {
        1.0 / self.points_per_axis as f64
    }

    /// Signed wavenumber of FFT index `idx`; the Nyquist index maps to `+N/2`.
    #[inline]
    pub fn wavenumber(&self, idx: usize) -> i64 {
        let n = self.points_per_axis;
        if idx <= n / 2 {
            idx as i64
        } else {
            idx as i64 - n as i64
        }
    }

    pub fn multi_index(&self, mut idx: usize) -> [usize; MAX_REAL_DIM] {
        let n = self.points_per_axis;
        let mut out = [0; MAX_REAL_DIM];
        for a in (0..self.real_dim()).rev() {
            out[a] = idx % n;
            idx /= n;
        }
        out
    }

    pub fn flat_index(&self, multi: &[usize]) -> usize {
        let n = self.points_per_axis;
        multi[..self.real_dim()]
            .iter()
            .fold(0, |acc, &m| acc * n + (m % n))
    }

    pub fn coords<T: Real>(&self, idx: usize) -> Coords<T> {
        let m = self.multi_index(idx);
        let h = T::one() / T::of_usize(self.points_per_axis);
        let mut x = [T::zero(); MAX_REAL_DIM];
        for a in 0..self.real_dim() {
            x[a] = T::of_usize(m[a]) * h;
        }
        x
    }

    pub(crate) fn check_same(&self, other: &GridSpec) -> Result<()> {
        if self != other {
            return Err(Error::GridMismatch {
                left: format!("{self:?}"),
                right: format!("{other:?}"),
            });
        }
        Ok(())
    }
}

/// Wraps a coordinate difference into `[-1/2, 1/2)`.
#[inline]
pub fn periodic_delta<T: Real>(x: T, c: T) -> T {
    let half = T::lit(0.5);
    let d = x - c;
    d - (d + half).floor()
}

/// Squared periodic Euclidean distance in coordinates.
pub fn periodic_dist_sq<T: Real>(grid: &GridSpec, x: &Coords<T>, c: &Coords<T>) -> T {
    (0..grid.real_dim())
        .map(|a| {
            let d = periodic_delta(x[a], c[a]);
            d * d
        })
        .sum()
}

/// Smooth periodic surrogate of the squared distance,
/// `Σ_a sin²(π(x_a - c_a))/π²`. Agrees with the Euclidean value to second
/// order at `c`.
pub fn surrogate_dist_sq<T: Real>(grid: &GridSpec, x: &Coords<T>, c: &Coords<T>) -> T {
    let pi = T::PI();
    (0..grid.real_dim())
        .map(|a| {
            let s = (pi * (x[a] - c[a])).sin();
            s * s / (pi * pi)
        })
        .sum()
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField<T: Real> {
    grid: GridSpec,
    values: Vec<T>,
}

impl<T: Real> ScalarField<T> {
    pub fn new(grid: GridSpec, values: Vec<T>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidArgument(format!(
                "expected {} samples, got {}",
                grid.len(),
                values.len()
            )));
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(ScalarField { grid, values })
    }

    pub(crate) fn from_vec_unchecked(grid: GridSpec, values: Vec<T>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        ScalarField { grid, values }
    }

    pub fn constant(grid: GridSpec, c: T) -> Self {
        ScalarField {
            grid,
            values: vec![c; grid.len()],
        }
    }

    pub fn zeros(grid: GridSpec) -> Self {
        Self::constant(grid, T::zero())
    }

    pub fn from_fn(grid: GridSpec, f: impl Fn(&Coords<T>) -> T) -> Self {
        let values = (0..grid.len()).map(|p| f(&grid.coords(p))).collect();
        ScalarField { grid, values }
    }

    #[inline]
    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    #[inline]
    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [T] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        ScalarField {
            grid: self.grid,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Pointwise combination; panics on grid mismatch (internal use).
    pub fn zip_map(&self, other: &ScalarField<T>, f: impl Fn(T, T) -> T) -> Self {
        assert_eq!(self.grid, other.grid, "grid mismatch");
        ScalarField {
            grid: self.grid,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    pub fn max(&self) -> T {
        self.values.iter().copied().fold(T::neg_infinity(), T::max)
    }

    pub fn min(&self) -> T {
        self.values.iter().copied().fold(T::infinity(), T::min)
    }

    pub fn max_abs(&self) -> T {
        self.values.iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }

    /// Index of the first maximal sample.
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, v) in self.values.iter().enumerate() {
            if *v > self.values[best] {
                best = i;
            }
        }
        best
    }

    pub fn argmin(&self) -> usize {
        let mut best = 0;
        for (i, v) in self.values.iter().enumerate() {
            if *v < self.values[best] {
                best = i;
            }
        }
        best
    }

    /// Unweighted grid mean (flat quadrature).
    pub fn mean(&self) -> T {
        compensated_sum(self.values.iter().copied()) / T::of_usize(self.values.len())
    }

    pub fn shifted(&self, c: T) -> Self {
        self.map(|v| v + c)
    }

    pub fn spectrum(&self) -> Spectrum<T> {
        Spectrum::of(self)
    }

    /// Casts to another scalar type.
    pub fn cast<U: Real>(&self) -> ScalarField<U> {
        ScalarField {
            grid: self.grid,
            values: self.values.iter().map(|v| U::lit(v.as_f64())).collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ComplexField<T: Real> {
    grid: GridSpec,
    values: Vec<Complex<T>>,
}

impl<T: Real> ComplexField<T> {
    pub(crate) fn from_vec(grid: GridSpec, values: Vec<Complex<T>>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        ComplexField { grid, values }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn values(&self) -> &[Complex<T>] {
        &self.values
    }

    pub fn re(&self) -> ScalarField<T> {
        ScalarField::from_vec_unchecked(self.grid, self.values.iter().map(|v| v.re).collect())
    }

    pub fn im(&self) -> ScalarField<T> {
        ScalarField::from_vec_unchecked(self.grid, self.values.iter().map(|v| v.im).collect())
    }

    pub fn max_abs(&self) -> T {
        self.values.iter().fold(T::zero(), |m, v| m.max(v.norm()))
    }
}

/// An `n×n` complex matrix per grid point, row-major per point.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexMatrixField<T: Real> {
    grid: GridSpec,
    entries: Vec<Complex<T>>,
}

impl<T: Real> ComplexMatrixField<T> {
    pub fn zeros(grid: GridSpec) -> Self {
        let n = grid.complex_dim();
        ComplexMatrixField {
            grid,
            entries: vec![Complex::zero(); grid.len() * n * n],
        }
    }

    pub fn identity(grid: GridSpec) -> Self {
        let n = grid.complex_dim();
        let mut out = Self::zeros(grid);
        for p in 0..grid.len() {
            let m = out.at_mut(p);
            for i in 0..n {
                m[i * n + i] = Complex::new(T::one(), T::zero());
            }
        }
        out
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.grid.complex_dim()
    }

    #[inline]
    pub fn at(&self, p: usize) -> &[Complex<T>] {
        let nn = self.dim() * self.dim();
        &self.entries[p * nn..(p + 1) * nn]
    }

    #[inline]
    pub fn at_mut(&mut self, p: usize) -> &mut [Complex<T>] {
        let nn = self.dim() * self.dim();
        &mut self.entries[p * nn..(p + 1) * nn]
    }

    /// Entry `(i, j)` as a complex field.
    pub fn entry(&self, i: usize, j: usize) -> ComplexField<T> {
        let n = self.dim();
        ComplexField::from_vec(
            self.grid,
            (0..self.grid.len())
                .map(|p| self.at(p)[i * n + j])
                .collect(),
        )
    }

    /// Largest `|M - M^*|` entry over the grid.
    pub fn hermitian_defect(&self) -> T {
        let n = self.dim();
        let mut worst = T::zero();
        for p in 0..self.grid.len() {
            let m = self.at(p);
            for i in 0..n {
                for j in 0..n {
                    worst = worst.max((m[i * n + j] - m[j * n + i].conj()).norm());
                }
            }
        }
        worst
    }

    /// Largest `|M - M^T|` entry over the grid.
    pub fn symmetric_defect(&self) -> T {
        let n = self.dim();
        let mut worst = T::zero();
        for p in 0..self.grid.len() {
            let m = self.at(p);
            for i in 0..n {
                for j in 0..n {
                    worst = worst.max((m[i * n + j] - m[j * n + i]).norm());
                }
            }
        }
        worst
    }

    pub fn max_abs(&self) -> T {
        self.entries.iter().fold(T::zero(), |m, v| m.max(v.norm()))
    }

    pub fn add(&self, other: &ComplexMatrixField<T>) -> Self {
        assert_eq!(self.grid, other.grid, "grid mismatch");
        ComplexMatrixField {
            grid: self.grid,
            entries: self
                .entries
                .iter()
                .zip(&other.entries)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    pub fn scale(&self, s: T) -> Self {
        ComplexMatrixField {
            grid: self.grid,
            entries: self.entries.iter().map(|a| a * s).collect(),
        }
    }
}

fn check_axis(grid: &GridSpec, axis: usize) -> Result<()> {
    if axis >= grid.complex_dim() {
        return Err(Error::AxisOutOfRange {
            axis,
            dim: grid.complex_dim(),
        });
    }
    Ok(())
}

/// `∂u/∂z^axis`, Fourier-spectral.
pub fn partial_z<T: Real>(u: &ScalarField<T>, axis: usize) -> Result<ComplexField<T>> {
    check_axis(u.grid(), axis)?;
    Ok(u.spectrum().apply(&DiffOp::new(&[Dz::Holo(axis)])))
}

/// `∂u/∂z̄^axis`, Fourier-spectral.
pub fn partial_zbar<T: Real>(u: &ScalarField<T>, axis: usize) -> Result<ComplexField<T>> {
    check_axis(u.grid(), axis)?;
    Ok(u.spectrum().apply(&DiffOp::new(&[Dz::Anti(axis)])))
}

pub fn complex_hessian<T: Real>(u: &ScalarField<T>) -> ComplexMatrixField<T> {
    u.spectrum().complex_hessian()
}

/// Neumaier summation; plain accumulation drifts by ~1e-11 over 32⁴ nearly
/// equal terms.
pub fn compensated_sum<T: Real>(items: impl IntoIterator<Item = T>) -> T {
    let mut sum = T::zero();
    let mut comp = T::zero();
    for x in items {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            comp += (sum - t) + x;
        } else {
            comp += (x - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// `∫ u · weight` with `∫ 1 = 1` on the unit torus. The weight carries the
/// volume density (`det g₀` for `ω₀ⁿ`).
pub fn integrate<T: Real>(u: &ScalarField<T>, weight: &ScalarField<T>) -> Result<T> {
    u.grid().check_same(weight.grid())?;
    let s = compensated_sum(u.values().iter().zip(weight.values()).map(|(&a, &w)| a * w));
    Ok(s / T::of_usize(u.grid().len()))
}

/// `(∫ |u|^p · weight)^{1/p}`.
pub fn lp_norm<T: Real>(u: &ScalarField<T>, p: T, weight: &ScalarField<T>) -> Result<T> {
    u.grid().check_same(weight.grid())?;
    if !(p >= T::one()) {
        return Err(Error::InvalidArgument(format!("p must be >= 1, got {p}")));
    }
    if let Some(index) = weight.values().iter().position(|w| *w < T::zero()) {
        return Err(Error::NegativeWeight {
            index,
            value: weight.values()[index].as_f64(),
        });
    }
    let s = compensated_sum(
        u.values()
            .iter()
            .zip(weight.values())
            .map(|(&a, &w)| a.abs().powf(p) * w),
    );
    Ok((s / T::of_usize(u.grid().len())).powf(T::one() / p))
}

/// Trigonometric interpolation of `u` at an arbitrary point.
pub fn point_eval<T: Real>(u: &ScalarField<T>, x: &[T]) -> T {
    u.spectrum().eval_at(x)
}
