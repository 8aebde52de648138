use super::{CsrMatrix, LinalgError};
use crate::Real;

/// LU factors of a banded matrix, computed without pivoting.
///
/// Intended for M-matrices that are diagonally dominant by columns, such as
/// `I - theta dt F`; elimination then stays stable and fill stays in the band.
#[derive(Clone, Debug)]
pub struct BandedLu<T: Real = f64> {
    n: usize,
    lower: usize,
    upper: usize,
    /// row `i` holds columns `i - lower ..= i + upper`
    band: Vec<T>,
}

impl<T: Real> BandedLu<T> {
    pub fn factor(a: &CsrMatrix<T>) -> Result<Self, LinalgError> {
        if a.rows() != a.cols() {
            return Err(LinalgError::NotSquare);
        }
        let n = a.rows();
        let (lower, upper) = a.bandwidths();
        let width = lower + upper + 1;
        let mut band = vec![T::zero(); n * width];
        for r in 0..n {
            for (c, v) in a.row(r) {
                band[r * width + c + lower - r] = v;
            }
        }
        let scale = a.norm_inf().max(T::min_positive_value());
        for k in 0..n {
            let pivot = band[k * width + lower];
            if !(pivot.abs() > T::epsilon() * scale) {
                return Err(LinalgError::Singular(k));
            }
            let last_row = (k + lower).min(n - 1);
            let last_col = (k + upper).min(n - 1);
            for i in k + 1..=last_row {
                let ik = i * width + k + lower - i;
                let m = band[ik] / pivot;
                if m == T::zero() {
                    continue;
                }
                band[ik] = m;
                for j in k + 1..=last_col {
                    let kj = band[k * width + j + lower - k];
                    band[i * width + j + lower - i] -= m * kj;
                }
            }
        }
        Ok(Self { n, lower, upper, band })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Solves `A x = b` in place.
    pub fn solve_in_place(&self, b: &mut [T]) {
        let width = self.lower + self.upper + 1;
        for i in 0..self.n {
            let first = i.saturating_sub(self.lower);
            let mut s = b[i];
            for (k, bk) in b.iter().enumerate().take(i).skip(first) {
                s -= self.band[i * width + k + self.lower - i] * *bk;
            }
            b[i] = s;
        }
        for i in (0..self.n).rev() {
            let last = (i + self.upper).min(self.n - 1);
            let mut s = b[i];
            for (j, bj) in b.iter().enumerate().take(last + 1).skip(i + 1) {
                s -= self.band[i * width + j + self.lower - i] * *bj;
            }
            b[i] = s / self.band[i * width + self.lower];
        }
    }
}

/// Solver for repeated systems `A x = b` with residual control.
#[derive(Clone, Debug)]
pub struct BandedSolver<T: Real = f64> {
    matrix: CsrMatrix<T>,
    lu: BandedLu<T>,
    tolerance: T,
}

impl<T: Real> BandedSolver<T> {
    pub fn new(matrix: CsrMatrix<T>, tolerance: T) -> Result<Self, LinalgError> {
        let lu = BandedLu::factor(&matrix)?;
        Ok(Self { matrix, lu, tolerance })
    }

    /// Solves `A x = b` with one step of iterative refinement and fails when
    /// `||A x - b||_inf > tol * max(||b||_inf, 1)`.
    pub fn solve(&self, b: &[T]) -> Result<Vec<T>, LinalgError> {
        let mut x = b.to_vec();
        self.lu.solve_in_place(&mut x);
        let mut r = vec![T::zero(); b.len()];
        self.matrix.matvec(&x, &mut r);
        for (ri, bi) in r.iter_mut().zip(b) {
            *ri = *bi - *ri;
        }
        self.lu.solve_in_place(&mut r);
        for (xi, di) in x.iter_mut().zip(&r) {
            *xi += *di;
        }
        self.matrix.matvec(&x, &mut r);
        let mut worst = T::zero();
        let mut bnorm = T::one();
        for (ri, bi) in r.iter().zip(b) {
            worst = worst.max((*ri - *bi).abs());
            bnorm = bnorm.max(bi.abs());
        }
        if worst > self.tolerance * bnorm {
            return Err(LinalgError::Residual(worst.as_f64() / bnorm.as_f64()));
        }
        Ok(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tridiagonal_solve() {
        // [2 -1 0; -1 2 -1; 0 -1 2] x = [1 0 1] -> x = [1 1 1]
        let a = CsrMatrix::from_triplets(
            3,
            3,
            vec![
                (0, 0, 2.0),
                (0, 1, -1.0),
                (1, 0, -1.0),
                (1, 1, 2.0),
                (1, 2, -1.0),
                (2, 1, -1.0),
                (2, 2, 2.0),
            ],
        );
        let s = BandedSolver::new(a, 1e-12).unwrap();
        let x: Vec<f64> = s.solve(&[1.0, 0.0, 1.0]).unwrap();
        for v in x {
            assert!((v - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn wide_band_matches_dense_solution() {
        let n = 12;
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 10.0 + i as f64));
            if i >= 4 {
                t.push((i, i - 4, -1.0 - 0.1 * i as f64));
            }
            if i + 3 < n {
                t.push((i, i + 3, -2.0));
            }
        }
        let a = CsrMatrix::from_triplets(n, n, t);
        let x_true: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
        let mut b = vec![0.0; n];
        a.matvec(&x_true, &mut b);
        let x = BandedSolver::new(a, 1e-12).unwrap().solve(&b).unwrap();
        for (u, v) in x.iter().zip(&x_true) {
            assert!((u - v).abs() < 1e-13);
        }
    }

    #[test]
    fn zero_pivot_is_reported() {
        let a = CsrMatrix::from_triplets(2, 2, vec![(0, 1, 1.0), (1, 0, 1.0)]);
        assert!(matches!(BandedLu::factor(&a), Err(LinalgError::Singular(0))));
    }
}
