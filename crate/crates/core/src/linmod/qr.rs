//! Householder QR with column pivoting.
//!
//! At step `k` the remaining column of largest Euclidean norm is moved to
//! position `k` before the reflection is applied, so `|R[k,k]|` is
//! non-increasing and the numerical rank is the number of diagonal entries
//! above `RANK_TOLERANCE * |R[0,0]|`.

use nalgebra::{DMatrix, DVector};

/// Relative threshold on `|R[k,k]| / |R[0,0]|` below which a column is
/// treated as linearly dependent on the ones before it.
pub const RANK_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct QrFactorization {
    /// R on and above the diagonal; Householder vectors (with implicit unit
    /// leading entry) below it.
    packed: DMatrix<f64>,
    tau: Vec<f64>,
    /// `perm[k]` is the original index of the column at pivoted position `k`.
    perm: Vec<usize>,
    rank: usize,
}

impl QrFactorization {
    pub fn new(matrix: &DMatrix<f64>) -> Self {
        let (n, p) = matrix.shape();
        let mut a = matrix.clone();
        let mut perm: Vec<usize> = (0..p).collect();
        let mut tau = Vec::with_capacity(p.min(n));
        let mut rank = 0;
        let mut lead = 0.0_f64;

        for k in 0..p.min(n) {
            let data = a.as_mut_slice();
            let (best, best_norm2) = (k..p)
                .map(|j| (j, data[j * n + k..(j + 1) * n].iter().map(|v| v * v).sum::<f64>()))
                .fold((k, -1.0), |acc, cur| if cur.1 > acc.1 { cur } else { acc });
            let norm = best_norm2.sqrt();
            if k == 0 {
                lead = norm;
            }
            if !(norm > RANK_TOLERANCE * lead) || norm == 0.0 {
                break;
            }
            if best != k {
                for i in 0..n {
                    data.swap(k * n + i, best * n + i);
                }
                perm.swap(k, best);
            }

            let x0 = data[k * n + k];
            let beta = if x0 >= 0.0 { -norm } else { norm };
            let t = (beta - x0) / beta;
            let scale = 1.0 / (x0 - beta);
            for i in k + 1..n {
                data[k * n + i] *= scale;
            }
            data[k * n + k] = beta;

            let (head, tail) = data.split_at_mut((k + 1) * n);
            let v = &head[k * n..(k + 1) * n];
            for col in tail.chunks_exact_mut(n) {
                let mut s = col[k];
                for i in k + 1..n {
                    s += v[i] * col[i];
                }
                s *= t;
                col[k] -= s;
                for i in k + 1..n {
                    col[i] -= s * v[i];
                }
            }
            tau.push(t);
            rank += 1;
        }

        Self { packed: a, tau, perm, rank }
    }

    pub fn nrows(&self) -> usize {
        self.packed.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.packed.ncols()
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn is_full_rank(&self) -> bool {
        self.rank == self.ncols()
    }

    /// Original indices of the columns left out of the numerical rank.
    pub fn dependent_columns(&self) -> &[usize] {
        &self.perm[self.rank..]
    }

    /// Applies `Q^T` in place.
    pub fn apply_qt(&self, y: &mut [f64]) {
        let n = self.nrows();
        assert_eq!(y.len(), n, "vector length must equal the row count");
        let data = self.packed.as_slice();
        for (k, &t) in self.tau.iter().enumerate() {
            let v = &data[k * n..(k + 1) * n];
            let mut s = y[k];
            for i in k + 1..n {
                s += v[i] * y[i];
            }
            s *= t;
            y[k] -= s;
            for i in k + 1..n {
                y[i] -= s * v[i];
            }
        }
    }

    /// Residual sum of squares of the least-squares fit of `y` on the
    /// column space, without forming coefficients.
    pub fn residual_sum_of_squares(&self, y: &[f64]) -> f64 {
        let mut z = y.to_vec();
        self.apply_qt(&mut z);
        z[self.rank..].iter().map(|v| v * v).sum()
    }

    fn r(&self, i: usize, j: usize) -> f64 {
        self.packed[(i, j)]
    }

    /// Least-squares coefficients in the original column order. Columns
    /// beyond the rank get coefficient zero.
    pub fn solve(&self, y: &[f64]) -> DVector<f64> {
        let mut z = y.to_vec();
        self.apply_qt(&mut z);
        let r = self.rank;
        let mut b = vec![0.0; r];
        for i in (0..r).rev() {
            let s: f64 = (i + 1..r).map(|j| self.r(i, j) * b[j]).sum();
            b[i] = (z[i] - s) / self.r(i, i);
        }
        let mut beta = DVector::zeros(self.ncols());
        for (k, v) in b.into_iter().enumerate() {
            beta[self.perm[k]] = v;
        }
        beta
    }

    /// `(X^T X)^{-1}` in the original column order, from `R^{-1} R^{-T}`.
    /// Only meaningful for full-rank factorizations.
    pub fn unscaled_covariance(&self) -> DMatrix<f64> {
        let r = self.rank;
        let mut rinv = DMatrix::<f64>::zeros(r, r);
        for j in 0..r {
            rinv[(j, j)] = 1.0 / self.r(j, j);
            for i in (0..j).rev() {
                let s: f64 = (i + 1..=j).map(|k| self.r(i, k) * rinv[(k, j)]).sum();
                rinv[(i, j)] = -s / self.r(i, i);
            }
        }
        let m = &rinv * rinv.transpose();
        let p = self.ncols();
        let mut out = DMatrix::zeros(p, p);
        for a in 0..r {
            for b in 0..r {
                out[(self.perm[a], self.perm[b])] = m[(a, b)];
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reproduces_exact_solution() {
        let x = DMatrix::from_row_slice(4, 2, &[1.0, 0.0, 1.0, 1.0, 1.0, 2.0, 1.0, 3.0]);
        let y = [1.0, 3.0, 5.0, 7.0];
        let qr = QrFactorization::new(&x);
        assert_eq!(qr.rank(), 2);
        let b = qr.solve(&y);
        assert!((b[0] - 1.0).abs() < 1e-12 && (b[1] - 2.0).abs() < 1e-12);
        assert!(qr.residual_sum_of_squares(&y) < 1e-24);
    }

    #[test]
    fn detects_dependent_column() {
        // third column = first + second
        let x = DMatrix::from_row_slice(4, 3, &[1.0, 0.0, 1.0, 1.0, 1.0, 2.0, 1.0, 2.0, 3.0, 1.0, 5.0, 6.0]);
        let qr = QrFactorization::new(&x);
        assert_eq!(qr.rank(), 2);
        assert_eq!(qr.dependent_columns().len(), 1);
    }

    #[test]
    fn more_columns_than_rows() {
        let x = DMatrix::from_row_slice(2, 3, &[1.0, 2.0, 3.0, 4.0, 5.0, 7.0]);
        let qr = QrFactorization::new(&x);
        assert!(!qr.is_full_rank());
    }

    #[test]
    fn covariance_inverts_gram_matrix() {
        let x = DMatrix::from_row_slice(
            5,
            3,
            &[1.0, 0.3, -1.0, 1.0, 1.7, 0.5, 1.0, -0.4, 2.0, 1.0, 2.2, 0.1, 1.0, 0.9, -0.7],
        );
        let qr = QrFactorization::new(&x);
        let inv = qr.unscaled_covariance();
        let prod = x.transpose() * &x * inv;
        assert!((prod - DMatrix::identity(3, 3)).amax() < 1e-12);
    }
}
