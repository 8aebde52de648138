//! Small linear algebra kernels used by the deterministic solver.

mod banded;
mod csr;
mod dense;

use thiserror::Error;

pub use banded::{BandedLu, BandedSolver};
pub use csr::CsrMatrix;
pub use dense::DenseMatrix;

use crate::Real;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinalgError {
    #[error("matrix is not square")]
    NotSquare,
    #[error("zero pivot in column {0}")]
    Singular(usize),
    #[error("relative residual {0:e} above solve tolerance")]
    Residual(f64),
}

/// `exp(t A) v` by a truncated Taylor series with `s` substeps, where `s`
/// keeps `t ||A||_1 / s <= 1`.
pub fn expm_action<T: Real>(a: &CsrMatrix<T>, t: T, v: &[T]) -> Vec<T> {
    let norm = (t.abs() * a.norm_one()).as_f64();
    let steps = norm.ceil().max(1.0) as usize;
    let h = t / T::lit(steps as f64);
    let mut x = v.to_vec();
    let mut term = vec![T::zero(); v.len()];
    let mut next = vec![T::zero(); v.len()];
    for _ in 0..steps {
        term.copy_from_slice(&x);
        let mut acc = x.clone();
        for k in 1..=60 {
            a.matvec(&term, &mut next);
            let c = h / T::lit(k as f64);
            let mut term_norm = T::zero();
            let mut acc_norm = T::zero();
            for i in 0..next.len() {
                term[i] = next[i] * c;
                acc[i] += term[i];
                term_norm = term_norm.max(term[i].abs());
                acc_norm = acc_norm.max(acc[i].abs());
            }
            if term_norm <= T::epsilon() * acc_norm * T::lit(0.5) {
                break;
            }
        }
        x = acc;
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn taylor_action_matches_dense_exponential() {
        let n = 10;
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, -2.0 - 0.3 * i as f64));
            if i > 0 {
                t.push((i, i - 1, 1.0));
            }
            if i + 1 < n {
                t.push((i, i + 1, 0.5 + 0.1 * i as f64));
            }
        }
        let a = CsrMatrix::from_triplets(n, n, t);
        let v: Vec<f64> = (0..n).map(|i| 1.0 + (i as f64).cos()).collect();
        for time in [0.0, 0.1, 1.0, 7.5] {
            let dense = DenseMatrix::from_csr(&a).scale(time).expm().unwrap().matvec(&v);
            let action = expm_action(&a, time, &v);
            for (x, y) in dense.iter().zip(&action) {
                assert!((x - y).abs() <= 1e-12 * x.abs().max(1e-3), "t={time}: {x} vs {y}");
            }
        }
    }
}
