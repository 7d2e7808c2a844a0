//! Dense LU factorisation with partial pivoting.
//!
//! The SHS systems handled here have at most a few hundred unknowns, so a
//! plain row-major dense solver is all that is needed.

use crate::error::{Error, Result};

/// Row-major square matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    n: usize,
    data: Vec<f64>,
}

impl Dense {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![0.0; n * n],
        }
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.n + c] = v;
    }

    #[inline]
    pub fn add(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.n + c] += v;
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        self.data
            .chunks_exact(self.n)
            .map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// Infinity norm (max absolute row sum).
    pub fn norm_inf(&self) -> f64 {
        self.data
            .chunks_exact(self.n)
            .map(|row| row.iter().map(|a| a.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// Solves `A x = b`. Pivots smaller than `1e-13 * ||A||_inf` are treated
    /// as singular.
    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        let n = self.n;
        if b.len() != n {
            return Err(Error::Structural(format!(
                "rhs length {} does not match matrix dimension {n}",
                b.len()
            )));
        }
        let scale = self.norm_inf();
        if scale == 0.0 || !scale.is_finite() {
            return Err(Error::Numerical("matrix is zero or non-finite".into()));
        }
        let tiny = 1e-13 * scale;
        let mut a = self.data.clone();
        let mut x = b.to_vec();

        for k in 0..n {
            let (p, pivot) = (k..n)
                .map(|r| (r, a[r * n + k].abs()))
                .fold((k, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
            if pivot <= tiny {
                return Err(Error::Numerical(format!(
                    "singular system (pivot {pivot:e} at column {k})"
                )));
            }
            if p != k {
                for c in 0..n {
                    a.swap(k * n + c, p * n + c);
                }
                x.swap(k, p);
            }
            let akk = a[k * n + k];
            for r in (k + 1)..n {
                let f = a[r * n + k] / akk;
                if f == 0.0 {
                    continue;
                }
                a[r * n + k] = 0.0;
                for c in (k + 1)..n {
                    a[r * n + c] -= f * a[k * n + c];
                }
                x[r] -= f * x[k];
            }
        }
        for k in (0..n).rev() {
            let s: f64 = ((k + 1)..n).map(|c| a[k * n + c] * x[c]).sum();
            x[k] = (x[k] - s) / a[k * n + k];
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical("non-finite solution".into()));
        }
        Ok(x)
    }

    /// Relative residual `||Ax - b|| / (||A|| ||x|| + ||b||)` in the infinity norm.
    pub fn relative_residual(&self, x: &[f64], b: &[f64]) -> f64 {
        let ax = self.mul_vec(x);
        let r = ax
            .iter()
            .zip(b)
            .map(|(l, r)| (l - r).abs())
            .fold(0.0, f64::max);
        let xn = x.iter().map(|v| v.abs()).fold(0.0, f64::max);
        let bn = b.iter().map(|v| v.abs()).fold(0.0, f64::max);
        let denom = self.norm_inf() * xn + bn;
        if denom == 0.0 {
            r
        } else {
            r / denom
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_small_system_with_pivoting() {
        // first pivot is zero, forcing a row swap
        let mut a = Dense::zeros(3);
        let rows = [[0.0, 2.0, 1.0], [1.0, 1.0, 0.0], [3.0, 0.0, 1.0]];
        for (r, row) in rows.iter().enumerate() {
            for (c, v) in row.iter().enumerate() {
                a.set(r, c, *v);
            }
        }
        let b = [5.0, 3.0, 6.0];
        let x = a.solve(&b).unwrap();
        // y = 3 - x, z = 6 - 3x  =>  12 - 5x = 5
        for (got, want) in x.iter().zip([1.4, 1.6, 1.8]) {
            assert!((got - want).abs() < 1e-14, "{x:?}");
        }
        assert!(a.relative_residual(&x, &b) < 1e-15);
    }

    #[test]
    fn singular_matrix_is_rejected() {
        let mut a = Dense::zeros(2);
        a.set(0, 0, 1.0);
        a.set(0, 1, 2.0);
        a.set(1, 0, 2.0);
        a.set(1, 1, 4.0);
        assert!(matches!(a.solve(&[1.0, 2.0]), Err(Error::Numerical(_))));
    }

    #[test]
    fn rhs_length_mismatch() {
        let a = Dense::zeros(2);
        assert!(matches!(a.solve(&[1.0]), Err(Error::Structural(_))));
    }
}
