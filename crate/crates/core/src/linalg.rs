//! Small dense complex matrices.
//!
//! Device matrices in this crate have at most a few dozen ports, so every
//! routine here is a straightforward dense O(n³) loop over a row-major
//! buffer. Nothing is blocked or vectorised.

use num_complex::Complex64;
use std::ops::{Index, IndexMut};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Row-major dense complex matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl CMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![ZERO; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = ONE;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    /// Build from a row-major buffer. Panics if the length is wrong.
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<Complex64>) -> Self {
        assert_eq!(data.len(), rows * cols, "buffer length does not match shape");
        Self { rows, cols, data }
    }

    pub fn diagonal(values: &[Complex64]) -> Self {
        let mut m = Self::zeros(values.len(), values.len());
        for (i, v) in values.iter().enumerate() {
            m[(i, i)] = *v;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[Complex64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn matmul(&self, rhs: &CMatrix) -> CMatrix {
        assert_eq!(self.cols, rhs.rows, "matmul shape mismatch");
        let mut out = CMatrix::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == ZERO {
                    continue;
                }
                let rrow = rhs.row(k);
                let orow = &mut out.data[i * rhs.cols..(i + 1) * rhs.cols];
                for (o, b) in orow.iter_mut().zip(rrow) {
                    *o += a * b;
                }
            }
        }
        out
    }

    pub fn matvec(&self, v: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(self.cols, v.len(), "matvec shape mismatch");
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn add(&self, rhs: &CMatrix) -> CMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        let data = self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect();
        CMatrix::from_row_major(self.rows, self.cols, data)
    }

    pub fn sub(&self, rhs: &CMatrix) -> CMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        let data = self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect();
        CMatrix::from_row_major(self.rows, self.cols, data)
    }

    pub fn scale(&self, s: f64) -> CMatrix {
        let data = self.data.iter().map(|a| a * s).collect();
        CMatrix::from_row_major(self.rows, self.cols, data)
    }

    /// Sub-matrix picking the given rows and columns, in the given order.
    pub fn select(&self, rows: &[usize], cols: &[usize]) -> CMatrix {
        CMatrix::from_fn(rows.len(), cols.len(), |i, j| self[(rows[i], cols[j])])
    }

    /// Largest entrywise modulus.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, rhs: &CMatrix) -> f64 {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        self.data
            .iter()
            .zip(&rhs.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Induced 1-norm (maximum absolute column sum).
    pub fn norm_1(&self) -> f64 {
        (0..self.cols)
            .map(|j| (0..self.rows).map(|i| self[(i, j)].norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }
}

impl Index<(usize, usize)> for CMatrix {
    type Output = Complex64;

    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for CMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

/// LU factorisation with partial pivoting, `P A = L U`.
#[derive(Clone, Debug)]
pub struct Lu {
    n: usize,
    // Unit-lower L below the diagonal, U on and above.
    factors: CMatrix,
    perm: Vec<usize>,
    norm_1: f64,
}

impl Lu {
    /// Returns `None` when an exactly zero pivot is met.
    pub fn factor(a: &CMatrix) -> Option<Lu> {
        assert!(a.is_square(), "LU of a non-square matrix");
        let n = a.rows();
        let norm_1 = a.norm_1();
        let mut f = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();

        for k in 0..n {
            let (p, pivot_mag) = (k..n)
                .map(|i| (i, f[(i, k)].norm()))
                .fold((k, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
            if pivot_mag == 0.0 {
                return None;
            }
            if p != k {
                for j in 0..n {
                    let tmp = f[(k, j)];
                    f[(k, j)] = f[(p, j)];
                    f[(p, j)] = tmp;
                }
                perm.swap(k, p);
            }
            let pivot = f[(k, k)];
            for i in k + 1..n {
                let l = f[(i, k)] / pivot;
                f[(i, k)] = l;
                if l == ZERO {
                    continue;
                }
                for j in k + 1..n {
                    let u = f[(k, j)];
                    f[(i, j)] -= l * u;
                }
            }
        }
        Some(Lu {
            n,
            factors: f,
            perm,
            norm_1,
        })
    }

    /// Solve `A X = B` for a matrix right-hand side.
    pub fn solve(&self, b: &CMatrix) -> CMatrix {
        assert_eq!(b.rows(), self.n);
        let n = self.n;
        let mut x = b.select(&self.perm, &(0..b.cols()).collect::<Vec<_>>());
        for c in 0..b.cols() {
            for i in 0..n {
                let mut s = x[(i, c)];
                for k in 0..i {
                    s -= self.factors[(i, k)] * x[(k, c)];
                }
                x[(i, c)] = s;
            }
            for i in (0..n).rev() {
                let mut s = x[(i, c)];
                for k in i + 1..n {
                    s -= self.factors[(i, k)] * x[(k, c)];
                }
                x[(i, c)] = s / self.factors[(i, i)];
            }
        }
        x
    }

    pub fn inverse(&self) -> CMatrix {
        self.solve(&CMatrix::identity(self.n))
    }

    /// Reciprocal 1-norm condition number measured against unit scale,
    /// `1 / (max(‖A‖₁, 1) ‖A⁻¹‖₁)`.
    ///
    /// Closure systems have the form `I − M` with `‖M‖ ≤ 1`, so their natural
    /// scale is one. Flooring `‖A‖₁` at one keeps a tiny 1×1 system from
    /// reporting perfect conditioning. The inverse is formed explicitly; for
    /// the handful of internal ports a closure has, that is cheaper than an
    /// estimator.
    pub fn rcond(&self) -> f64 {
        if self.n == 0 {
            return 1.0;
        }
        let inv_norm = self.inverse().norm_1();
        if !inv_norm.is_finite() {
            return 0.0;
        }
        1.0 / (self.norm_1.max(1.0) * inv_norm)
    }
}

/// Spectral radius of a square matrix.
///
/// Plain vector power iteration stalls when several eigenvalues share the
/// largest modulus, which is the normal situation for symmetric cavity
/// blocks. Instead this iterates on the matrix itself: `ρ = lim ‖M^k‖^{1/k}`,
/// with `k` doubled by squaring at each step and the running scale kept in
/// log form. Iteration stops once successive estimates agree to `tol`
/// (relative).
pub fn spectral_radius(m: &CMatrix, tol: f64) -> f64 {
    assert!(m.is_square());
    if m.rows() == 0 {
        return 0.0;
    }
    if m.rows() == 1 {
        return m[(0, 0)].norm();
    }
    let mut power = m.clone();
    // log ‖M^k‖ accumulated across normalisations
    let mut log_scale = 0.0_f64;
    let mut k = 1.0_f64;
    let mut prev = f64::NAN;
    for iteration in 0..64 {
        let norm = power.max_abs();
        if norm == 0.0 {
            return 0.0;
        }
        power = power.scale(1.0 / norm);
        log_scale += norm.ln();
        let estimate = (log_scale / k).exp();
        // early powers can plateau before the asymptotic regime starts
        if iteration >= 8 && (estimate - prev).abs() <= tol * estimate.max(f64::MIN_POSITIVE) {
            return estimate;
        }
        prev = estimate;
        power = power.matmul(&power);
        log_scale *= 2.0;
        k *= 2.0;
    }
    prev
}
