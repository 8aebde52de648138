use super::{CsrMatrix, LinalgError};
use crate::Real;

/// Square row-major dense matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseMatrix<T: Real = f64> {
    n: usize,
    data: Vec<T>,
}

impl<T: Real> DenseMatrix<T> {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![T::zero(); n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.data[i * n + i] = T::one();
        }
        m
    }

    pub fn from_csr(a: &CsrMatrix<T>) -> Self {
        assert_eq!(a.rows(), a.cols());
        Self {
            n: a.rows(),
            data: a.to_dense(),
        }
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Self {
        let n = rows.len();
        assert!(rows.iter().all(|r| r.len() == n));
        Self {
            n,
            data: rows.iter().flatten().copied().collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.data[i * self.n + j]
    }

    pub fn norm_one(&self) -> T {
        (0..self.n)
            .map(|j| (0..self.n).map(|i| self.get(i, j).abs()).sum::<T>())
            .fold(T::zero(), |m, s| m.max(s))
    }

    pub fn scale(&self, s: T) -> Self {
        Self {
            n: self.n,
            data: self.data.iter().map(|&v| v * s).collect(),
        }
    }

    /// `self + s * other`
    pub fn add_scaled(&self, other: &Self, s: T) -> Self {
        Self {
            n: self.n,
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| a + s * b).collect(),
        }
    }

    pub fn mul(&self, other: &Self) -> Self {
        let n = self.n;
        let mut out = vec![T::zero(); n * n];
        for i in 0..n {
            let row = &mut out[i * n..(i + 1) * n];
            for k in 0..n {
                let a = self.data[i * n + k];
                if a == T::zero() {
                    continue;
                }
                let other_row = &other.data[k * n..(k + 1) * n];
                for (o, &b) in row.iter_mut().zip(other_row) {
                    *o += a * b;
                }
            }
        }
        Self { n, data: out }
    }

    pub fn matvec(&self, x: &[T]) -> Vec<T> {
        (0..self.n)
            .map(|i| self.data[i * self.n..(i + 1) * self.n].iter().zip(x).map(|(&a, &b)| a * b).sum())
            .collect()
    }

    /// Solves `self X = rhs` by LU with partial pivoting.
    pub fn solve(&self, rhs: &Self) -> Result<Self, LinalgError> {
        let n = self.n;
        let mut a = self.data.clone();
        let mut b = rhs.data.clone();
        let scale = self.norm_one().max(T::min_positive_value());
        for k in 0..n {
            let p = (k..n)
                .max_by(|&i, &j| a[i * n + k].abs().partial_cmp(&a[j * n + k].abs()).unwrap())
                .unwrap();
            if !(a[p * n + k].abs() > T::epsilon() * scale) {
                return Err(LinalgError::Singular(k));
            }
            if p != k {
                for c in 0..n {
                    a.swap(k * n + c, p * n + c);
                    b.swap(k * n + c, p * n + c);
                }
            }
            let pivot = a[k * n + k];
            for i in k + 1..n {
                let m = a[i * n + k] / pivot;
                if m == T::zero() {
                    continue;
                }
                for c in k..n {
                    let v = a[k * n + c];
                    a[i * n + c] -= m * v;
                }
                for c in 0..n {
                    let v = b[k * n + c];
                    b[i * n + c] -= m * v;
                }
            }
        }
        for i in (0..n).rev() {
            for c in 0..n {
                let mut s = b[i * n + c];
                for j in i + 1..n {
                    s -= a[i * n + j] * b[j * n + c];
                }
                b[i * n + c] = s / a[i * n + i];
            }
        }
        Ok(Self { n, data: b })
    }

    /// Matrix exponential by Pade(13) scaling and squaring.
    pub fn expm(&self) -> Result<Self, LinalgError> {
        const B: [f64; 14] = [
            64764752532480000.0,
            32382376266240000.0,
            7771770303897600.0,
            1187353796428800.0,
            129060195264000.0,
            10559470521600.0,
            670442572800.0,
            33522128640.0,
            1323241920.0,
            40840800.0,
            960960.0,
            16380.0,
            182.0,
            1.0,
        ];
        const THETA13: f64 = 5.371920351148152;
        let n = self.n;
        let norm = self.norm_one().as_f64();
        let s = if norm > THETA13 {
            (norm / THETA13).log2().ceil().max(0.0) as i32
        } else {
            0
        };
        let a = self.scale(T::lit(0.5f64.powi(s)));
        let b = |i: usize| T::lit(B[i]);
        let id = Self::identity(n);
        let a2 = a.mul(&a);
        let a4 = a2.mul(&a2);
        let a6 = a2.mul(&a4);
        let u_inner = a6
            .scale(b(13))
            .add_scaled(&a4, b(11))
            .add_scaled(&a2, b(9));
        let u_tail = a6
            .scale(b(7))
            .add_scaled(&a4, b(5))
            .add_scaled(&a2, b(3))
            .add_scaled(&id, b(1));
        let u = a.mul(&a6.mul(&u_inner).add_scaled(&u_tail, T::one()));
        let v_inner = a6
            .scale(b(12))
            .add_scaled(&a4, b(10))
            .add_scaled(&a2, b(8));
        let v = a6
            .mul(&v_inner)
            .add_scaled(&a6, b(6))
            .add_scaled(&a4, b(4))
            .add_scaled(&a2, b(2))
            .add_scaled(&id, b(0));
        let p = v.add_scaled(&u, T::one());
        let q = v.add_scaled(&u, -T::one());
        let mut r = q.solve(&p)?;
        for _ in 0..s {
            r = r.mul(&r);
        }
        Ok(r)
    }

    /// Operator 2-norm estimate by power iteration on `M^T M`.
    pub fn norm_two_estimate(&self, iterations: usize) -> T {
        let n = self.n;
        let mut x: Vec<T> = (0..n).map(|i| T::lit(1.0 + (i % 7) as f64 * 0.1)).collect();
        let mut est = T::zero();
        for _ in 0..iterations {
            let y = self.matvec(&x);
            let z: Vec<T> = (0..n).map(|j| (0..n).map(|i| self.get(i, j) * y[i]).sum()).collect();
            let nz = z.iter().map(|&v| v * v).sum::<T>().sqrt();
            if nz == T::zero() {
                return T::zero();
            }
            est = nz.sqrt();
            x = z.into_iter().map(|v| v / nz).collect();
        }
        est
    }
}
