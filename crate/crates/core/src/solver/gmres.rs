//! Restarted GMRES with modified Gram-Schmidt and Givens rotations.

use crate::scalar::Real;

#[derive(Clone, Copy, Debug)]
pub struct GmresOptions {
    pub restart: usize,
    pub max_iters: usize,
    pub rel_tol: f64,
}

impl Default for GmresOptions {
    fn default() -> Self {
        GmresOptions {
            restart: 30,
            max_iters: 300,
            rel_tol: 1e-3,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GmresOutcome {
    pub iterations: usize,
    pub relative_residual: f64,
    pub converged: bool,
}

fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

fn norm<T: Real>(a: &[T]) -> T {
    dot(a, a).sqrt()
}

/// Solves `A x = b` starting from `x` (overwritten with the result).
pub fn gmres<T: Real>(
    mut apply: impl FnMut(&[T], &mut [T]),
    b: &[T],
    x: &mut [T],
    opts: GmresOptions,
) -> GmresOutcome {
    let len = b.len();
    let bnorm = norm(b).as_f64();
    if bnorm == 0.0 {
        x.iter_mut().for_each(|v| *v = T::zero());
        return GmresOutcome {
            iterations: 0,
            relative_residual: 0.0,
            converged: true,
        };
    }
    let m = opts.restart.max(1);
    let mut total = 0;
    let mut w = vec![T::zero(); len];
    let mut rel;

    loop {
        apply(x, &mut w);
        let r: Vec<T> = b.iter().zip(&w).map(|(&bi, &wi)| bi - wi).collect();
        let beta = norm(&r);
        rel = beta.as_f64() / bnorm;
        if rel <= opts.rel_tol || total >= opts.max_iters {
            break;
        }
        let mut basis: Vec<Vec<T>> = Vec::with_capacity(m + 1);
        basis.push(r.iter().map(|&v| v / beta).collect());
        let mut h = vec![vec![T::zero(); m]; m + 1];
        let mut cs = vec![T::zero(); m];
        let mut sn = vec![T::zero(); m];
        let mut g = vec![T::zero(); m + 1];
        g[0] = beta;
        let mut k_used = 0;

        for k in 0..m {
            apply(&basis[k], &mut w);
            for (j, v) in basis.iter().enumerate() {
                let hjk = dot(&w, v);
                h[j][k] = hjk;
                for (wi, &vi) in w.iter_mut().zip(v) {
                    *wi -= hjk * vi;
                }
            }
            let hn = norm(&w);
            h[k + 1][k] = hn;
            for j in 0..k {
                let t = cs[j] * h[j][k] + sn[j] * h[j + 1][k];
                h[j + 1][k] = -sn[j] * h[j][k] + cs[j] * h[j + 1][k];
                h[j][k] = t;
            }
            let denom = (h[k][k] * h[k][k] + h[k + 1][k] * h[k + 1][k]).sqrt();
            if denom == T::zero() {
                cs[k] = T::one();
                sn[k] = T::zero();
            } else {
                cs[k] = h[k][k] / denom;
                sn[k] = h[k + 1][k] / denom;
            }
            h[k][k] = cs[k] * h[k][k] + sn[k] * h[k + 1][k];
            h[k + 1][k] = T::zero();
            g[k + 1] = -sn[k] * g[k];
            g[k] = cs[k] * g[k];
            k_used = k + 1;
            total += 1;
            rel = g[k + 1].abs().as_f64() / bnorm;
            if rel <= opts.rel_tol || total >= opts.max_iters || hn == T::zero() {
                break;
            }
            basis.push(w.iter().map(|&v| v / hn).collect());
        }

        // back substitution on the k_used × k_used triangle
        let mut y = vec![T::zero(); k_used];
        for i in (0..k_used).rev() {
            let mut s = g[i];
            for j in i + 1..k_used {
                s -= h[i][j] * y[j];
            }
            y[i] = if h[i][i] != T::zero() {
                s / h[i][i]
            } else {
                T::zero()
            };
        }
        for (j, &yj) in y.iter().enumerate() {
            for (xi, &vi) in x.iter_mut().zip(&basis[j]) {
                *xi += yj * vi;
            }
        }
        if rel <= opts.rel_tol || total >= opts.max_iters {
            apply(x, &mut w);
            let true_rel = norm(
                &b.iter()
                    .zip(&w)
                    .map(|(&bi, &wi)| bi - wi)
                    .collect::<Vec<_>>(),
            )
            .as_f64()
                / bnorm;
            rel = true_rel;
            break;
        }
    }
    GmresOutcome {
        iterations: total,
        relative_residual: rel,
        converged: rel <= opts.rel_tol,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_small_nonsymmetric_system() {
        let a = [[4.0, 1.0, 0.0], [2.0, 5.0, 1.0], [0.0, -1.0, 3.0]];
        let x_true = [1.0, -2.0, 0.5];
        let b: Vec<f64> = a
            .iter()
            .map(|row| row.iter().zip(&x_true).map(|(p, q)| p * q).sum())
            .collect();
        let mut x = vec![0.0; 3];
        let out = gmres(
            |v: &[f64], out: &mut [f64]| {
                for i in 0..3 {
                    out[i] = (0..3).map(|j| a[i][j] * v[j]).sum();
                }
            },
            &b,
            &mut x,
            GmresOptions {
                restart: 3,
                max_iters: 20,
                rel_tol: 1e-13,
            },
        );
        assert!(out.converged);
        for i in 0..3 {
            assert!((x[i] - x_true[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn restart_still_converges() {
        // diagonal with spread spectrum, restart shorter than dimension
        let n = 40;
        let d: Vec<f64> = (0..n).map(|i| 1.0 + i as f64 * 0.1).collect();
        let b = vec![1.0; n];
        let mut x = vec![0.0; n];
        let out = gmres(
            |v: &[f64], out: &mut [f64]| {
                for i in 0..n {
                    out[i] = d[i] * v[i];
                }
            },
            &b,
            &mut x,
            GmresOptions {
                restart: 5,
                max_iters: 500,
                rel_tol: 1e-10,
            },
        );
        assert!(out.converged, "{out:?}");
        for i in 0..n {
            assert!((x[i] - 1.0 / d[i]).abs() < 1e-8);
        }
    }
}
