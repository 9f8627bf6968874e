use std::ops::{Add, Mul, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{OscError, Result};

/// Condition-number estimate above which a solve is refused.
pub const CONDITION_LIMIT: f64 = 1e12;

/// Dense real `n x n` matrix stored row-major.
///
/// Serializes as nested row arrays, e.g. `[[2.0, 1.0], [1.0, 3.0]]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct SquareMatrix {
    n: usize,
    data: Vec<f64>,
}

impl SquareMatrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn diag(values: &[f64]) -> Self {
        let mut m = Self::zeros(values.len());
        for (i, &d) in values.iter().enumerate() {
            m.set(i, i, d);
        }
        m
    }

    pub fn scalar(value: f64) -> Self {
        Self::diag(&[value])
    }

    /// Builds a matrix from rows, rejecting ragged, empty or non-finite input.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(OscError::Domain("matrix must have at least one row".into()));
        }
        let mut data = Vec::with_capacity(n * n);
        for row in rows {
            if row.len() != n {
                return Err(OscError::DimensionMismatch {
                    expected: n,
                    got: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        let m = Self { n, data };
        m.check_finite()?;
        Ok(m)
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                data.push(f(i, j));
            }
        }
        Self { n, data }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        self.data[i * self.n + j] = value;
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.data.chunks(self.n).map(|r| r.to_vec()).collect()
    }

    pub fn check_finite(&self) -> Result<()> {
        if self.data.iter().all(|v| v.is_finite()) {
            Ok(())
        } else {
            Err(OscError::Domain("matrix has non-finite entries".into()))
        }
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.n, |i, j| self.get(j, i))
    }

    pub fn scale(&self, k: f64) -> Self {
        Self {
            n: self.n,
            data: self.data.iter().map(|v| v * k).collect(),
        }
    }

    /// `self + k * I`
    pub fn shift(&self, k: f64) -> Self {
        let mut m = self.clone();
        for i in 0..self.n {
            m.data[i * self.n + i] += k;
        }
        m
    }

    /// Maximum absolute column sum.
    pub fn norm1(&self) -> f64 {
        (0..self.n)
            .map(|j| (0..self.n).map(|i| self.get(i, j).abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn max_asymmetry(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                worst = worst.max((self.get(i, j) - self.get(j, i)).abs());
            }
        }
        worst
    }

    /// Symmetric to within `1e-13` relative to the largest entry.
    pub fn is_symmetric(&self) -> bool {
        self.max_asymmetry() <= 1e-13 * self.max_abs().max(1.0)
    }

    /// Replaces the matrix by `(M + M^T) / 2`.
    pub fn symmetrize(&mut self) {
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                let avg = 0.5 * (self.get(i, j) + self.get(j, i));
                self.set(i, j, avg);
                self.set(j, i, avg);
            }
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.n);
        self.data
            .chunks(self.n)
            .map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn matmul(&self, other: &Self) -> Self {
        debug_assert_eq!(self.n, other.n);
        let n = self.n;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.data[i * n + k];
                if a == 0.0 {
                    continue;
                }
                for j in 0..n {
                    out.data[i * n + j] += a * other.data[k * n + j];
                }
            }
        }
        out
    }

    /// Largest absolute entry of `self - other`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    pub fn lu(&self) -> Result<LuDecomposition> {
        LuDecomposition::new(self)
    }

    /// Solves `self * X = rhs` for a matrix right-hand side.
    pub fn solve_matrix(&self, rhs: &Self) -> Result<Self> {
        let lu = self.lu()?;
        Ok(lu.solve_matrix(rhs))
    }
}

impl TryFrom<Vec<Vec<f64>>> for SquareMatrix {
    type Error = OscError;

    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self> {
        Self::from_rows(&rows)
    }
}

impl From<SquareMatrix> for Vec<Vec<f64>> {
    fn from(m: SquareMatrix) -> Self {
        m.rows()
    }
}

impl Add for &SquareMatrix {
    type Output = SquareMatrix;
    fn add(self, rhs: &SquareMatrix) -> SquareMatrix {
        SquareMatrix {
            n: self.n,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }
}

impl Sub for &SquareMatrix {
    type Output = SquareMatrix;
    fn sub(self, rhs: &SquareMatrix) -> SquareMatrix {
        SquareMatrix {
            n: self.n,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }
}

impl Mul for &SquareMatrix {
    type Output = SquareMatrix;
    fn mul(self, rhs: &SquareMatrix) -> SquareMatrix {
        self.matmul(rhs)
    }
}

/// LU factorization with partial pivoting, `P A = L U`.
#[derive(Debug, Clone)]
pub struct LuDecomposition {
    n: usize,
    lu: Vec<f64>,
    perm: Vec<usize>,
    condition: f64,
}

impl LuDecomposition {
    /// Factorizes `a` and estimates its 1-norm condition number.
    ///
    /// Matrices with a zero pivot or a condition estimate above
    /// [`CONDITION_LIMIT`] are rejected.
    pub fn new(a: &SquareMatrix) -> Result<Self> {
        let mut dec = Self::factor(a)?;
        // Explicit inverse is affordable at the sizes this crate targets.
        let inv = dec.solve_matrix(&SquareMatrix::identity(a.n));
        let condition = a.norm1() * inv.norm1();
        if !condition.is_finite() || condition > CONDITION_LIMIT {
            return Err(OscError::IllConditioned { condition });
        }
        dec.condition = condition;
        Ok(dec)
    }

    /// Factorization without the conditioning gate; only exact zero pivots fail.
    pub(crate) fn factor(a: &SquareMatrix) -> Result<Self> {
        a.check_finite()?;
        let n = a.n;
        let mut lu = a.data.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let scale = a.max_abs();
        if scale == 0.0 {
            return Err(OscError::IllConditioned {
                condition: f64::INFINITY,
            });
        }
        for k in 0..n {
            let (p, pivot) =
                (k..n)
                    .map(|i| (i, lu[i * n + k].abs()))
                    .fold(
                        (k, -1.0),
                        |best, cur| if cur.1 > best.1 { cur } else { best },
                    );
            if pivot == 0.0 {
                return Err(OscError::IllConditioned {
                    condition: f64::INFINITY,
                });
            }
            if p != k {
                for j in 0..n {
                    lu.swap(k * n + j, p * n + j);
                }
                perm.swap(k, p);
            }
            let d = lu[k * n + k];
            for i in (k + 1)..n {
                let f = lu[i * n + k] / d;
                lu[i * n + k] = f;
                if f != 0.0 {
                    for j in (k + 1)..n {
                        lu[i * n + j] -= f * lu[k * n + j];
                    }
                }
            }
        }
        Ok(Self {
            n,
            lu,
            perm,
            condition: f64::NAN,
        })
    }

    pub fn condition(&self) -> f64 {
        self.condition
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        debug_assert_eq!(b.len(), n);
        let mut x: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let mut s = x[i];
            for j in 0..i {
                s -= self.lu[i * n + j] * x[j];
            }
            x[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for j in (i + 1)..n {
                s -= self.lu[i * n + j] * x[j];
            }
            x[i] = s / self.lu[i * n + i];
        }
        x
    }

    pub fn solve_matrix(&self, rhs: &SquareMatrix) -> SquareMatrix {
        let n = self.n;
        let mut out = SquareMatrix::zeros(n);
        let mut col = vec![0.0; n];
        for j in 0..n {
            for (i, c) in col.iter_mut().enumerate() {
                *c = rhs.get(i, j);
            }
            let x = self.solve(&col);
            for (i, v) in x.into_iter().enumerate() {
                out.set(i, j, v);
            }
        }
        out
    }
}

/// Solves `a x = b` by partially pivoted elimination.
pub fn linear_solve(a: &SquareMatrix, b: &[f64]) -> Result<Vec<f64>> {
    if b.len() != a.dim() {
        return Err(OscError::DimensionMismatch {
            expected: a.dim(),
            got: b.len(),
        });
    }
    if b.iter().any(|v| !v.is_finite()) {
        return Err(OscError::Domain(
            "right-hand side has non-finite entries".into(),
        ));
    }
    Ok(a.lu()?.solve(b))
}

pub(crate) fn add_vec(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

pub(crate) fn sub_vec(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
pub(crate) fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solve_identity() {
        let x = linear_solve(&SquareMatrix::identity(2), &[3.0, -1.0]).unwrap();
        assert_eq!(x, vec![3.0, -1.0]);
    }

    #[test]
    fn solve_diagonal() {
        let x = linear_solve(&SquareMatrix::diag(&[2.0, 4.0]), &[2.0, 4.0]).unwrap();
        assert_eq!(x, vec![1.0, 1.0]);
    }

    #[test]
    fn solve_symmetric_2x2() {
        let a = SquareMatrix::from_rows(&[vec![2.0, 1.0], vec![1.0, 3.0]]).unwrap();
        let x = linear_solve(&a, &[5.0, 10.0]).unwrap();
        // substitution check first, then the known answer
        let back = a.mul_vec(&x);
        assert!(max_abs_diff(&back, &[5.0, 10.0]) < 1e-14);
        assert!(max_abs_diff(&x, &[1.0, 3.0]) < 1e-14);
    }

    #[test]
    fn singular_is_rejected_with_condition() {
        let a = SquareMatrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0]]).unwrap();
        match linear_solve(&a, &[1.0, 1.0]) {
            Err(OscError::IllConditioned { condition }) => assert!(condition > CONDITION_LIMIT),
            other => panic!("expected ill-conditioned error, got {other:?}"),
        }
    }

    #[test]
    fn nearly_singular_is_rejected() {
        let a = SquareMatrix::from_rows(&[vec![1.0, 1.0], vec![1.0, 1.0 + 1e-14]]).unwrap();
        assert!(matches!(
            linear_solve(&a, &[1.0, 1.0]),
            Err(OscError::IllConditioned { .. })
        ));
    }

    #[test]
    fn ragged_rows_are_rejected() {
        assert!(SquareMatrix::from_rows(&[vec![1.0, 2.0], vec![3.0]]).is_err());
        assert!(SquareMatrix::from_rows(&[vec![f64::NAN]]).is_err());
    }

    #[test]
    fn pivoting_handles_zero_leading_entry() {
        let a = SquareMatrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        let x = linear_solve(&a, &[2.0, 3.0]).unwrap();
        assert_eq!(x, vec![3.0, 2.0]);
    }

    #[test]
    fn serde_nested_rows() {
        let a = SquareMatrix::from_rows(&[vec![2.0, 1.0], vec![1.0, 3.0]]).unwrap();
        let s = serde_json::to_string(&a).unwrap();
        assert_eq!(s, "[[2.0,1.0],[1.0,3.0]]");
        let back: SquareMatrix = serde_json::from_str(&s).unwrap();
        assert_eq!(back, a);
        assert!(serde_json::from_str::<SquareMatrix>("[[1.0],[2.0,3.0]]").is_err());
    }
}
