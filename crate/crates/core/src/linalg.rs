//! Small dense helpers: Hermitian eigenproblems, tiny Hermitian systems and
//! blocked `A^* B` accumulation over long node lists.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

pub(crate) const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Eigen-decomposition of a Hermitian matrix, eigenvalues in descending
/// order with matching eigenvector columns.
pub(crate) fn hermitian_eigen(m: DMatrix<Complex64>) -> (Vec<f64>, DMatrix<Complex64>) {
    let n = m.nrows();
    if n == 0 {
        return (Vec::new(), m);
    }
    let sym = (&m + m.adjoint()) * Complex64::new(0.5, 0.0);
    let eig = sym.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

/// Smallest eigenvalue of a `d×d` Hermitian matrix stored row-major.
pub(crate) fn min_eigenvalue(g: &[Complex64], d: usize) -> f64 {
    if d == 1 {
        return g[0].re;
    }
    if d == 2 {
        let (a, c) = (g[0].re, g[3].re);
        let b2 = g[1].norm_sqr();
        let tr = a + c;
        let disc = ((a - c) * (a - c) + 4.0 * b2).sqrt();
        return 0.5 * (tr - disc);
    }
    let m = DMatrix::from_row_slice(d, d, g);
    let (vals, _) = hermitian_eigen(m);
    *vals.last().unwrap()
}

/// Determinant of a Hermitian matrix (real).
pub(crate) fn det_hermitian(g: &[Complex64], d: usize) -> f64 {
    match d {
        1 => g[0].re,
        2 => g[0].re * g[3].re - g[1].norm_sqr(),
        _ => DMatrix::from_row_slice(d, d, g).determinant().re,
    }
}

/// `b^* G^{-1} b` for a positive-definite Hermitian `G`.
pub(crate) fn inverse_quad_form(g: &[Complex64], d: usize, b: &[Complex64]) -> Result<f64> {
    match d {
        1 => {
            if g[0].re <= 0.0 {
                return Err(Error::NotPositiveDefinite { min_eigenvalue: g[0].re });
            }
            Ok(b[0].norm_sqr() / g[0].re)
        }
        _ => {
            let m = DMatrix::from_row_slice(d, d, g);
            let chol = m.cholesky().ok_or_else(|| Error::NotPositiveDefinite { min_eigenvalue: min_eigenvalue(g, d) })?;
            let rhs = nalgebra::DVector::from_column_slice(b);
            let x = chol.solve(&rhs);
            Ok(rhs.iter().zip(x.iter()).map(|(bi, xi)| (bi.conj() * xi).re).sum())
        }
    }
}

/// Row-major complex block stored as split real/imaginary planes so that
/// products can run through real GEMM.
pub(crate) struct SplitBlock {
    pub rows: usize,
    pub cols: usize,
    pub re: Vec<f64>,
    pub im: Vec<f64>,
}

impl SplitBlock {
    pub fn new(rows: usize, cols: usize) -> Self {
        SplitBlock { rows, cols, re: vec![0.0; rows * cols], im: vec![0.0; rows * cols] }
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, z: Complex64) {
        let k = r * self.cols + c;
        self.re[k] = z.re;
        self.im[k] = z.im;
    }

    /// Shrinks the logical row count (the buffers are reused chunk to chunk).
    pub fn truncate_rows(&mut self, rows: usize) {
        self.rows = rows;
    }
}

/// Dense complex matrix in split row-major planes (right-hand factor of
/// [`mul_sub`]).
pub(crate) struct SplitMatrix {
    pub rows: usize,
    pub cols: usize,
    pub re: Vec<f64>,
    pub im: Vec<f64>,
}

impl SplitMatrix {
    pub fn from_dmatrix(m: &DMatrix<Complex64>) -> Self {
        let (rows, cols) = m.shape();
        let mut re = Vec::with_capacity(rows * cols);
        let mut im = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                re.push(m[(r, c)].re);
                im.push(m[(r, c)].im);
            }
        }
        SplitMatrix { rows, cols, re, im }
    }
}

#[allow(clippy::too_many_arguments)]
fn dgemm_rm(m: usize, k: usize, n: usize, alpha: f64, a: &[f64], b: &[f64], beta: f64, c: &mut [f64]) {
    if m == 0 || n == 0 {
        return;
    }
    // all operands row-major and contiguous
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            alpha,
            a.as_ptr(),
            k as isize,
            1,
            b.as_ptr(),
            n as isize,
            1,
            beta,
            c.as_mut_ptr(),
            n as isize,
            1,
        );
    }
}

/// `out = beta·out + sign·(a · b)` for a `rows×k` block `a` and `k×n`
/// matrix `b`; `out` must be `rows×n`.
pub(crate) fn mul_sub(a: &SplitBlock, b: &SplitMatrix, out: &mut SplitBlock, sign: f64, beta: f64) {
    assert_eq!(a.cols, b.rows);
    assert_eq!(out.cols, b.cols);
    assert_eq!(a.rows, out.rows);
    let (m, k, n) = (a.rows, a.cols, b.cols);
    let (ar, ai) = (&a.re[..m * k], &a.im[..m * k]);
    let (or, oi) = (&mut out.re[..m * n], &mut out.im[..m * n]);
    dgemm_rm(m, k, n, sign, ar, &b.re, beta, or);
    dgemm_rm(m, k, n, -sign, ai, &b.im, 1.0, or);
    dgemm_rm(m, k, n, sign, ar, &b.im, beta, oi);
    dgemm_rm(m, k, n, sign, ai, &b.re, 1.0, oi);
}

/// Accumulator for `Σ_chunks A_chunk^* B_chunk`.
pub(crate) struct AdjointProduct {
    m: usize,
    n: usize,
    re: Vec<f64>,
    im: Vec<f64>,
}

impl AdjointProduct {
    pub fn new(m: usize, n: usize) -> Self {
        AdjointProduct { m, n, re: vec![0.0; m * n], im: vec![0.0; m * n] }
    }

    /// Adds `A^* B` where `A` is `rows×m` and `B` is `rows×n`.
    pub fn add(&mut self, a: &SplitBlock, b: &SplitBlock) {
        assert_eq!(a.rows, b.rows);
        assert_eq!(a.cols, self.m);
        assert_eq!(b.cols, self.n);
        let k = a.rows;
        if k == 0 {
            return;
        }
        let (m, n) = (self.m, self.n);
        // A^T as an m×k view of the row-major k×m block: rs = 1, cs = m
        let gemm = |alpha: f64, x: &[f64], y: &[f64], out: &mut [f64]| unsafe {
            matrixmultiply::dgemm(
                m,
                k,
                n,
                alpha,
                x.as_ptr(),
                1,
                m as isize,
                y.as_ptr(),
                n as isize,
                1,
                1.0,
                out.as_mut_ptr(),
                n as isize,
                1,
            );
        };
        // (Ar - i Ai)^T (Br + i Bi)
        gemm(1.0, &a.re, &b.re, &mut self.re);
        gemm(1.0, &a.im, &b.im, &mut self.re);
        gemm(1.0, &a.re, &b.im, &mut self.im);
        gemm(-1.0, &a.im, &b.re, &mut self.im);
    }

    pub fn finish(self) -> DMatrix<Complex64> {
        DMatrix::from_fn(self.m, self.n, |i, j| Complex64::new(self.re[i * self.n + j], self.im[i * self.n + j]))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn adjoint_product_matches_naive() {
        let rows = 7;
        let (m, n) = (3, 4);
        let f = |r: usize, c: usize, s: f64| Complex64::new((r as f64 * 0.3 + c as f64 + s).sin(), (r as f64 - c as f64 * s).cos());
        let mut acc = AdjointProduct::new(m, n);
        let mut a = SplitBlock::new(rows, m);
        let mut b = SplitBlock::new(rows, n);
        for r in 0..rows {
            for c in 0..m {
                a.set(r, c, f(r, c, 0.1));
            }
            for c in 0..n {
                b.set(r, c, f(r, c, 0.7));
            }
        }
        acc.add(&a, &b);
        let got = acc.finish();
        for i in 0..m {
            for j in 0..n {
                let want: Complex64 = (0..rows).map(|r| f(r, i, 0.1).conj() * f(r, j, 0.7)).sum();
                assert!((got[(i, j)] - want).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn block_product_matches_naive() {
        let (rows, k, n) = (5, 3, 4);
        let f = |r: usize, c: usize, s: f64| Complex64::new((r as f64 + c as f64 * s).cos(), (r as f64 * s - c as f64).sin());
        let mut a = SplitBlock::new(rows, k);
        for r in 0..rows {
            for c in 0..k {
                a.set(r, c, f(r, c, 0.3));
            }
        }
        let b = DMatrix::from_fn(k, n, |r, c| f(r, c, 1.7));
        let mut out = SplitBlock::new(rows, n);
        for r in 0..rows {
            for c in 0..n {
                out.set(r, c, f(r, c, 2.9));
            }
        }
        mul_sub(&a, &SplitMatrix::from_dmatrix(&b), &mut out, -1.0, 1.0);
        for r in 0..rows {
            for c in 0..n {
                let want = f(r, c, 2.9) - (0..k).map(|q| f(r, q, 0.3) * b[(q, c)]).sum::<Complex64>();
                let got = Complex64::new(out.re[r * n + c], out.im[r * n + c]);
                assert!((got - want).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn small_hermitian_helpers() {
        let g = [Complex64::new(2.0, 0.0), Complex64::new(0.5, 0.5), Complex64::new(0.5, -0.5), Complex64::new(3.0, 0.0)];
        assert!((det_hermitian(&g, 2) - 5.5).abs() < 1e-14);
        let lo = min_eigenvalue(&g, 2);
        let (vals, _) = hermitian_eigen(DMatrix::from_row_slice(2, 2, &g));
        assert!((lo - vals[1]).abs() < 1e-12);
        // b = e1 : (G^{-1})_{11} = 3 / 5.5
        let q = inverse_quad_form(&g, 2, &[Complex64::new(1.0, 0.0), ZERO]).unwrap();
        assert!((q - 3.0 / 5.5).abs() < 1e-12);
    }
}
