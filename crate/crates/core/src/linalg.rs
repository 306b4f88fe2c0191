//! Small dense complex matrices for gate, channel and superoperator data.
//!
//! Matrices are indexed `(row, col)` with `row` the output basis index and
//! `col` the input basis index. For an operator on qubits `(p1, .., pm)` the
//! local basis index is `Σ_k bit(p_k) · 2^(k-1)`: the first listed qubit is the
//! least significant bit.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Add, Index, IndexMut, Mul, Sub};

use num_traits::{One, Zero};

use crate::{Error, Result, C64};

#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    dim: usize,
    data: Vec<C64>,
}

impl Matrix {
    pub fn zeros(dim: usize) -> Self {
        Matrix { dim, data: vec![C64::zero(); dim * dim] }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m[(i, i)] = C64::one();
        }
        m
    }

    pub fn diagonal(entries: &[C64]) -> Self {
        let mut m = Self::zeros(entries.len());
        for (i, &d) in entries.iter().enumerate() {
            m[(i, i)] = d;
        }
        m
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(dim * dim);
        for r in 0..dim {
            for c in 0..dim {
                data.push(f(r, c));
            }
        }
        Matrix { dim, data }
    }

    /// Builds a matrix from row slices; every row must have as many entries as there are rows.
    pub fn from_rows<R: AsRef<[C64]>>(rows: &[R]) -> Result<Self> {
        let dim = rows.len();
        let mut data = Vec::with_capacity(dim * dim);
        for row in rows {
            let row = row.as_ref();
            if row.len() != dim {
                return Err(Error::Shape(alloc::format!("row of length {} in a matrix with {} rows", row.len(), dim)));
            }
            data.extend_from_slice(row);
        }
        Ok(Matrix { dim, data })
    }

    /// Builds a matrix from real row data.
    pub fn from_real_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let rows: Vec<Vec<C64>> = rows.iter().map(|r| r.as_ref().iter().map(|&x| C64::new(x, 0.0)).collect()).collect();
        Self::from_rows(&rows)
    }

    /// Builds a matrix from a flat row-major slice of `dim * dim` entries.
    pub fn from_row_major(dim: usize, data: &[C64]) -> Result<Self> {
        if data.len() != dim * dim {
            return Err(Error::Shape(alloc::format!("{} entries for a {dim}x{dim} matrix", data.len())));
        }
        Ok(Matrix { dim, data: data.to_vec() })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of qubits the matrix acts on, if the dimension is a power of two.
    pub fn num_qubits(&self) -> Option<usize> {
        if self.dim.is_power_of_two() {
            Some(self.dim.trailing_zeros() as usize)
        } else {
            None
        }
    }

    /// Row-major entries.
    #[inline]
    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.dim, |r, c| self[(c, r)].conj())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.dim, |r, c| self[(c, r)])
    }

    pub fn conj(&self) -> Self {
        Matrix { dim: self.dim, data: self.data.iter().map(|z| z.conj()).collect() }
    }

    pub fn scale(&self, s: C64) -> Self {
        Matrix { dim: self.dim, data: self.data.iter().map(|z| z * s).collect() }
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim).map(|i| self[(i, i)]).sum()
    }

    /// `low ⊗ high` in the internal ordering: `low` acts on the least
    /// significant local bits, `high` on the bits above them.
    pub fn kron(low: &Matrix, high: &Matrix) -> Matrix {
        let dl = low.dim;
        Matrix::from_fn(dl * high.dim, |r, c| low[(r % dl, c % dl)] * high[(r / dl, c / dl)])
    }

    pub fn max_abs_diff(&self, other: &Matrix) -> f64 {
        assert_eq!(self.dim, other.dim);
        self.data.iter().zip(&other.data).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }

    /// `max |M†M - I|`.
    pub fn unitarity_error(&self) -> f64 {
        (&self.adjoint() * self).max_abs_diff(&Matrix::identity(self.dim))
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        self.unitarity_error() <= tol
    }

    pub fn is_diagonal(&self) -> bool {
        (0..self.dim).all(|r| (0..self.dim).all(|c| r == c || self[(r, c)].is_zero()))
    }

    /// For a matrix with at most one nonzero per row and per column, returns
    /// for each column its row and value. Zero columns are paired with the
    /// rows left over.
    pub fn monomial_form(&self) -> Option<Vec<(usize, C64)>> {
        let mut out: Vec<Option<(usize, C64)>> = vec![None; self.dim];
        let mut seen = vec![false; self.dim];
        for (c, slot) in out.iter_mut().enumerate() {
            for r in 0..self.dim {
                let v = self[(r, c)];
                if !v.is_zero() {
                    if slot.is_some() || seen[r] {
                        return None;
                    }
                    seen[r] = true;
                    *slot = Some((r, v));
                }
            }
        }
        let mut free = (0..self.dim).filter(|&r| !seen[r]);
        Some(
            out.into_iter()
                .map(|hit| hit.unwrap_or_else(|| (free.next().expect("one free row per zero column"), C64::zero())))
                .collect(),
        )
    }

    pub fn apply_vec(&self, v: &[C64]) -> Vec<C64> {
        assert_eq!(v.len(), self.dim);
        (0..self.dim).map(|r| (0..self.dim).map(|c| self[(r, c)] * v[c]).sum()).collect()
    }

    /// Induced 1-norm (maximum absolute column sum).
    pub fn norm_one(&self) -> f64 {
        (0..self.dim).map(|c| (0..self.dim).map(|r| self[(r, c)].norm()).sum::<f64>()).fold(0.0, f64::max)
    }

    /// Inverse by LU decomposition with partial pivoting, together with the
    /// 1-norm condition number. `None` when a pivot vanishes.
    pub fn inverse_with_condition(&self) -> Option<(Matrix, f64)> {
        let n = self.dim;
        let mut lu = self.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let scale = self.data.iter().map(|z| z.norm()).fold(0.0, f64::max);
        if scale == 0.0 {
            return None;
        }
        for k in 0..n {
            let (p, pmax) =
                (k..n).map(|r| (r, lu[(r, k)].norm())).fold((k, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
            if pmax <= scale * 1e-300 {
                return None;
            }
            if p != k {
                for c in 0..n {
                    lu.data.swap(k * n + c, p * n + c);
                }
                perm.swap(k, p);
            }
            let pivot = lu[(k, k)];
            for r in (k + 1)..n {
                let f = lu[(r, k)] / pivot;
                lu[(r, k)] = f;
                if f.is_zero() {
                    continue;
                }
                for c in (k + 1)..n {
                    let t = lu[(k, c)];
                    lu[(r, c)] -= f * t;
                }
            }
        }
        let mut inv = Matrix::zeros(n);
        for col in 0..n {
            // Solve L y = P e_col, then U x = y.
            let mut x: Vec<C64> = (0..n).map(|i| if perm[i] == col { C64::one() } else { C64::zero() }).collect();
            for i in 0..n {
                for j in 0..i {
                    let t = lu[(i, j)] * x[j];
                    x[i] -= t;
                }
            }
            for i in (0..n).rev() {
                for j in (i + 1)..n {
                    let t = lu[(i, j)] * x[j];
                    x[i] -= t;
                }
                x[i] /= lu[(i, i)];
            }
            for (r, v) in x.into_iter().enumerate() {
                inv[(r, col)] = v;
            }
        }
        let cond = self.norm_one() * inv.norm_one();
        if !cond.is_finite() {
            return None;
        }
        Some((inv, cond))
    }
}

/// Uniform sample from `[0, 1)` with 53 random bits.
pub fn uniform01<R: rand_core::RngCore + ?Sized>(rng: &mut R) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Standard normal sample by the Box-Muller transform.
pub fn standard_normal<R: rand_core::RngCore + ?Sized>(rng: &mut R) -> f64 {
    use num_traits::Float;
    let u1 = 1.0 - uniform01(rng);
    let u2 = uniform01(rng);
    Float::sqrt(-2.0 * Float::ln(u1)) * Float::cos(2.0 * core::f64::consts::PI * u2)
}

/// Haar-like random unitary: Gram-Schmidt orthonormalization of a complex
/// Gaussian matrix, column by column.
pub fn random_unitary<R: rand_core::RngCore + ?Sized>(dim: usize, rng: &mut R) -> Matrix {
    use num_traits::Float;
    let mut cols: Vec<Vec<C64>> = Vec::with_capacity(dim);
    while cols.len() < dim {
        let mut v: Vec<C64> = (0..dim).map(|_| C64::new(standard_normal(rng), standard_normal(rng))).collect();
        for u in &cols {
            let proj: C64 = u.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
            for (x, y) in v.iter_mut().zip(u) {
                *x -= proj * y;
            }
        }
        let norm = Float::sqrt(v.iter().map(|z| z.norm_sqr()).sum::<f64>());
        if norm < 1e-8 {
            continue;
        }
        v.iter_mut().for_each(|z| *z /= norm);
        cols.push(v);
    }
    Matrix::from_fn(dim, |r, c| cols[c][r])
}

impl Index<(usize, usize)> for Matrix {
    type Output = C64;
    #[inline]
    fn index(&self, (r, c): (usize, usize)) -> &C64 {
        &self.data[r * self.dim + c]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    #[inline]
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut C64 {
        &mut self.data[r * self.dim + c]
    }
}

impl Mul for &Matrix {
    type Output = Matrix;
    fn mul(self, rhs: &Matrix) -> Matrix {
        assert_eq!(self.dim, rhs.dim);
        let n = self.dim;
        Matrix::from_fn(n, |r, c| (0..n).map(|k| self[(r, k)] * rhs[(k, c)]).sum())
    }
}

impl Add for &Matrix {
    type Output = Matrix;
    fn add(self, rhs: &Matrix) -> Matrix {
        assert_eq!(self.dim, rhs.dim);
        Matrix { dim: self.dim, data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect() }
    }
}

impl Sub for &Matrix {
    type Output = Matrix;
    fn sub(self, rhs: &Matrix) -> Matrix {
        assert_eq!(self.dim, rhs.dim);
        Matrix { dim: self.dim, data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect() }
    }
}
