//! Small dense square matrices and the linear solves used by the one-round
//! algorithm.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{invalid, numerical, Result};

/// Row-major square matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    n: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(n: usize) -> Self {
        Self { n, data: vec![0.0; n * n] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn scaled_identity(n: usize, s: f64) -> Self {
        let mut m = Self::identity(n);
        m.data.iter_mut().for_each(|x| *x *= s);
        m
    }

    pub fn from_rows(rows: &[&[f64]]) -> Result<Self> {
        let n = rows.len();
        let mut data = Vec::with_capacity(n * n);
        for (i, r) in rows.iter().enumerate() {
            if r.len() != n {
                return Err(invalid!("row {i} has length {} in a {n}x{n} matrix", r.len()));
            }
            data.extend_from_slice(r);
        }
        Ok(Self { n, data })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n).map(|i| crate::vector::dot(self.row(i), x)).collect()
    }

    /// `self += s * x xᵀ`
    pub fn add_outer(&mut self, s: f64, x: &[f64]) {
        for (row, xi) in self.data.chunks_mut(self.n).zip(x) {
            let sx = s * xi;
            for (a, xj) in row.iter_mut().zip(x) {
                *a += sx * xj;
            }
        }
    }

    pub fn add_scaled(&mut self, s: f64, other: &Matrix) {
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += s * b;
        }
    }

    pub fn sub(&self, other: &Matrix) -> Matrix {
        let mut out = self.clone();
        out.add_scaled(-1.0, other);
        out
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        (0..self.n).all(|i| {
            (0..i).all(|j| {
                let (a, b) = (self[(i, j)], self[(j, i)]);
                libm::fabs(a - b) <= tol * (1.0 + libm::fabs(a).max(libm::fabs(b)))
            })
        })
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        crate::vector::norm(&self.data)
    }

    /// Cholesky check: fails naming the first pivot that is not positive.
    pub fn check_positive_definite(&self) -> Result<()> {
        let n = self.n;
        let mut l = vec![0.0; n * n];
        let scale = self.norm().max(f64::MIN_POSITIVE);
        for j in 0..n {
            let mut diag = self[(j, j)];
            for k in 0..j {
                diag -= l[j * n + k] * l[j * n + k];
            }
            if !(diag > 1e-13 * scale) {
                return Err(numerical!("matrix not positive definite at pivot {j} (value {diag:e})"));
            }
            let ljj = libm::sqrt(diag);
            l[j * n + j] = ljj;
            for i in j + 1..n {
                let mut s = self[(i, j)];
                for k in 0..j {
                    s -= l[i * n + k] * l[j * n + k];
                }
                l[i * n + j] = s / ljj;
            }
        }
        Ok(())
    }
}

impl core::ops::Index<(usize, usize)> for Matrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.n + j]
    }
}

impl core::ops::IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.n + j]
    }
}

/// LU factorization with partial pivoting.
#[derive(Debug, Clone)]
pub struct Lu {
    n: usize,
    lu: Vec<f64>,
    perm: Vec<usize>,
}

impl Lu {
    pub fn factor(a: &Matrix) -> Result<Self> {
        let n = a.n;
        let mut lu = a.data.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let scale = a.norm();
        if !scale.is_finite() {
            return Err(numerical!("matrix has non-finite entries"));
        }
        for col in 0..n {
            let (piv, piv_abs) = (col..n)
                .map(|r| (r, libm::fabs(lu[r * n + col])))
                .fold((col, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
            if piv_abs <= f64::EPSILON * scale * n as f64 || piv_abs == 0.0 {
                return Err(numerical!("singular matrix at pivot {col} (|pivot| = {piv_abs:e})"));
            }
            if piv != col {
                for j in 0..n {
                    lu.swap(col * n + j, piv * n + j);
                }
                perm.swap(col, piv);
            }
            let p = lu[col * n + col];
            for r in col + 1..n {
                let f = lu[r * n + col] / p;
                lu[r * n + col] = f;
                for j in col + 1..n {
                    lu[r * n + j] -= f * lu[col * n + j];
                }
            }
        }
        Ok(Self { n, lu, perm })
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut x: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            for j in 0..i {
                x[i] -= self.lu[i * n + j] * x[j];
            }
        }
        for i in (0..n).rev() {
            for j in i + 1..n {
                x[i] -= self.lu[i * n + j] * x[j];
            }
            x[i] /= self.lu[i * n + i];
        }
        x
    }
}

/// Solves `a x = b` by partial-pivot elimination.
pub fn solve(a: &Matrix, b: &[f64]) -> Result<Vec<f64>> {
    if b.len() != a.n {
        return Err(invalid!("right-hand side has length {} for a {}x{} system", b.len(), a.n, a.n));
    }
    Ok(Lu::factor(a)?.solve(b))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_small_system() {
        let a = Matrix::from_rows(&[&[0.0, 2.0], &[1.0, 1.0]]).unwrap();
        let x = solve(&a, &[4.0, 3.0]).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-15 && (x[1] - 2.0).abs() < 1e-15);
    }

    #[test]
    fn singular_is_reported() {
        let a = Matrix::from_rows(&[&[1.0, 2.0], &[2.0, 4.0]]).unwrap();
        let err = solve(&a, &[1.0, 1.0]).unwrap_err();
        assert!(alloc::format!("{err}").contains("pivot 1"));
    }

    #[test]
    fn positive_definite_check() {
        assert!(Matrix::identity(3).check_positive_definite().is_ok());
        let indefinite = Matrix::from_rows(&[&[1.0, 2.0], &[2.0, 1.0]]).unwrap();
        let err = indefinite.check_positive_definite().unwrap_err();
        assert!(alloc::format!("{err}").contains("pivot 1"));
    }
}
