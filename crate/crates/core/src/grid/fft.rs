//! Multi-dimensional complex FFT over the row-major torus layout.

use num_complex::Complex;
use num_traits::Zero;
use rustfft::FftPlanner;

use super::GridSpec;
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Direction {
    Forward,
    Inverse,
}

/// In-place transform along every real axis. The inverse is normalized so that
/// `inverse(forward(u)) == u`.
pub(crate) fn transform<T: Real>(grid: &GridSpec, data: &mut [Complex<T>], dir: Direction) {
    debug_assert_eq!(data.len(), grid.len());
    let n = grid.points_per_axis();
    let d = grid.real_dim();
    let mut planner = FftPlanner::<T>::new();
    let fft = match dir {
        Direction::Forward => planner.plan_fft_forward(n),
        Direction::Inverse => planner.plan_fft_inverse(n),
    };
    let mut scratch = vec![Complex::<T>::zero(); fft.get_inplace_scratch_len()];

    for axis in 0..d {
        let stride = n.pow((d - 1 - axis) as u32);
        if stride == 1 {
            fft.process_with_scratch(data, &mut scratch);
            continue;
        }
        let block = n * stride;
        let mut buf = vec![Complex::<T>::zero(); block];
        for chunk in data.chunks_exact_mut(block) {
            for j in 0..n {
                let row = &chunk[j * stride..(j + 1) * stride];
                for (i, v) in row.iter().enumerate() {
                    buf[i * n + j] = *v;
                }
            }
            fft.process_with_scratch(&mut buf, &mut scratch);
            for j in 0..n {
                let row = &mut chunk[j * stride..(j + 1) * stride];
                for (i, v) in row.iter_mut().enumerate() {
                    *v = buf[i * n + j];
                }
            }
        }
    }

    if dir == Direction::Inverse {
        let scale = T::one() / T::of_usize(data.len());
        for v in data.iter_mut() {
            *v = *v * scale;
        }
    }
}
