use num_complex::Complex;
use num_traits::Zero;

use super::Spectrum;
use crate::scalar::Real;

impl<T: Real> Spectrum<T> {
    /// Evaluates the trigonometric interpolant at `x`. The Nyquist mode is
    /// split symmetrically so the interpolant is real and reproduces nodes.
    pub fn eval_at(&self, x: &[T]) -> T {
        let grid = *self.grid();
        let n = grid.points_per_axis();
        let d = grid.real_dim();
        let two_pi = T::lit(2.0) * T::PI();

        let factors: Vec<Vec<Complex<T>>> = (0..d)
            .map(|a| {
                (0..n)
                    .map(|idx| {
                        let k = T::lit(grid.wavenumber(idx) as f64);
                        if idx == n / 2 {
                            Complex::new((two_pi * k * x[a]).cos(), T::zero())
                        } else {
                            Complex::from_polar(T::one(), two_pi * k * x[a])
                        }
                    })
                    .collect()
            })
            .collect();

        // contract the fastest axis first
        let mut cur: Vec<Complex<T>> = self.coeffs().to_vec();
        for a in (0..d).rev() {
            let next: Vec<Complex<T>> = cur
                .chunks_exact(n)
                .map(|line| {
                    line.iter()
                        .zip(&factors[a])
                        .fold(Complex::zero(), |acc, (c, f)| acc + c * f)
                })
                .collect();
            cur = next;
        }
        cur[0].re / T::of_usize(grid.len())
    }
}
