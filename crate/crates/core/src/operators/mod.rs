//! Truncated Bergman projection, Hankel and multiplication operators on an
//! orthonormal polynomial basis, their singular values, and kernel-section
//! probes for compactness.

mod symbol;

pub use symbol::{Smoothness, SymbolFn};

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use crate::domains::{DomainSpec, QuadratureGrid};
use crate::error::{Error, Result};
use crate::kernel::{orthonormalize_with, BlockEvaluator, IndexSet, OrthonormalBasis, CHUNK, DEFAULT_GRAM_CUTOFF};
use crate::linalg::{hermitian_eigen, mul_sub, AdjointProduct, SplitBlock, SplitMatrix, ZERO};

/// Degree gap between the columns of a Hankel truncation and the frame its
/// projection uses.
pub const DEFAULT_GUARD: usize = 5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum OperatorKind {
    Hankel,
    Multiplication,
}

/// Singular data of `T e_j` for the basis functions `e_j`.
#[derive(Clone, Debug, Serialize)]
pub struct OperatorTruncation {
    pub kind: OperatorKind,
    pub symbol: String,
    pub degree: usize,
    /// Frame degree used by the projection (Hankel only).
    pub frame_degree: Option<usize>,
    /// Column Gram matrix `⟨T e_k, T e_j⟩` (row `j`, column `k`).
    #[serde(skip)]
    pub gram: DMatrix<Complex64>,
    /// Coordinates of `T e_j` (columns) in an orthonormal basis of the
    /// range: `Σ V^*` from `gram = V Σ² V^*`.
    #[serde(skip)]
    pub matrix: DMatrix<Complex64>,
    pub singular_values: Vec<f64>,
}

impl OperatorTruncation {
    fn from_gram(kind: OperatorKind, symbol: &SymbolFn, degree: usize, frame_degree: Option<usize>, gram: DMatrix<Complex64>) -> Result<Self> {
        let k = gram.nrows();
        for j in 0..k {
            let v = gram[(j, j)].re;
            if v < -1e-10 {
                return Err(Error::QuadratureInconsistency(format!("column {j} has negative squared norm {v:e}")));
            }
        }
        let (vals, vecs) = hermitian_eigen(gram.clone());
        let top = vals.first().copied().unwrap_or(0.0).max(1.0);
        if let Some(&lo) = vals.last() {
            if lo < -1e-9 * top {
                return Err(Error::QuadratureInconsistency(format!("column Gram has eigenvalue {lo:e}")));
            }
        }
        let singular_values: Vec<f64> = vals.iter().map(|v| v.max(0.0).sqrt()).collect();
        let matrix = DMatrix::from_fn(k, k, |r, c| vecs[(c, r)].conj() * singular_values[r]);
        Ok(OperatorTruncation { kind, symbol: symbol.name.clone(), degree, frame_degree, gram, matrix, singular_values })
    }

    pub fn sigma0(&self) -> f64 {
        self.singular_values.first().copied().unwrap_or(0.0)
    }

    /// Number of singular values strictly above `tau`.
    pub fn count_above(&self, tau: f64) -> usize {
        self.singular_values.iter().filter(|&&s| s > tau).count()
    }

    /// `‖T f‖` for `f = Σ c_k e_k`.
    pub fn apply_norm(&self, c: &[Complex64]) -> f64 {
        let mut q = ZERO;
        for j in 0..c.len() {
            for k in 0..c.len() {
                q += c[j].conj() * self.gram[(j, k)] * c[k];
            }
        }
        q.re.max(0.0).sqrt()
    }

    /// CSV rows `N,k,sigma`.
    pub fn spectrum_csv(&self, header: bool) -> String {
        let mut out = if header { String::from("N,k,sigma\n") } else { String::new() };
        for (k, s) in self.singular_values.iter().enumerate() {
            out.push_str(&format!("{},{},{:.17e}\n", self.degree, k, s));
        }
        out
    }
}

fn check_grid(basis: &OrthonormalBasis, grid: &QuadratureGrid) -> Result<()> {
    if basis.dim() != grid.dim() {
        return Err(Error::DimensionMismatch { expected: basis.dim(), got: grid.dim() });
    }
    if basis.grid_checksum != grid.checksum() {
        return Err(Error::InvalidParameter("basis was orthonormalized on a different grid".into()));
    }
    Ok(())
}

fn symbol_rows(symbol: &SymbolFn, grid: &QuadratureGrid, start: usize, end: usize, e: &mut SplitBlock) -> Result<()> {
    let k = e.cols;
    for i in start..end {
        let v = symbol.eval(grid.node(i));
        if !v.re.is_finite() || !v.im.is_finite() {
            return Err(Error::InvalidParameter(format!("symbol {} is not finite at node {i}", symbol.name)));
        }
        let r = i - start;
        for c in 0..k {
            let x = Complex64::new(e.re[r * k + c], e.im[r * k + c]) * v;
            e.set(r, c, x);
        }
    }
    Ok(())
}

/// Orthogonal projection of a grid function onto the span of the basis,
/// with grid inner products.
pub fn project(basis: &OrthonormalBasis, grid: &QuadratureGrid, f: &[Complex64]) -> Result<Vec<Complex64>> {
    check_grid(basis, grid)?;
    if f.len() != grid.len() {
        return Err(Error::DimensionMismatch { expected: grid.len(), got: f.len() });
    }
    let k = basis.len();
    let mut eval = BlockEvaluator::new(basis);
    let mut block = SplitBlock::new(CHUNK, k);
    let mut coef = vec![ZERO; k];
    let n = grid.len();
    let mut start = 0;
    while start < n {
        let end = (start + CHUNK).min(n);
        eval.fill(grid, start, end, false, &mut block);
        for i in start..end {
            let w = grid.weight(i);
            for c in 0..k {
                let e = Complex64::new(block.re[(i - start) * k + c], block.im[(i - start) * k + c]);
                coef[c] += e.conj() * f[i] * w;
            }
        }
        start = end;
    }
    let mut out = vec![ZERO; n];
    start = 0;
    while start < n {
        let end = (start + CHUNK).min(n);
        eval.fill(grid, start, end, false, &mut block);
        for i in start..end {
            out[i] = (0..k).map(|c| Complex64::new(block.re[(i - start) * k + c], block.im[(i - start) * k + c]) * coef[c]).sum();
        }
        start = end;
    }
    Ok(out)
}

/// Multiplication operator `M_φ` on the basis, singular values from the
/// column Gram in grid norm.
pub fn mult_matrix(symbol: &SymbolFn, basis: &OrthonormalBasis, grid: &QuadratureGrid) -> Result<OperatorTruncation> {
    check_grid(basis, grid)?;
    let k = basis.len();
    let mut eval = BlockEvaluator::new(basis);
    let mut block = SplitBlock::new(CHUNK, k);
    let mut acc = AdjointProduct::new(k, k);
    let n = grid.len();
    let mut start = 0;
    while start < n {
        let end = (start + CHUNK).min(n);
        eval.fill(grid, start, end, true, &mut block);
        symbol_rows(symbol, grid, start, end, &mut block)?;
        acc.add(&block, &block);
        start = end;
    }
    OperatorTruncation::from_gram(OperatorKind::Multiplication, symbol, basis.degree_cap(), None, acc.finish())
}

/// Hankel operator `H_φ e_j = φ e_j − P(φ e_j)`, with `P` the grid
/// projection onto `frame` (a higher-degree basis on the same grid). The
/// column Gram is accumulated from the explicit residuals, so holomorphic
/// symbols give exact zeros rather than differences of nearly equal norms.
pub fn hankel(symbol: &SymbolFn, basis: &OrthonormalBasis, frame: &OrthonormalBasis, grid: &QuadratureGrid) -> Result<OperatorTruncation> {
    check_grid(basis, grid)?;
    check_grid(frame, grid)?;
    let (k, kf) = (basis.len(), frame.len());
    let mut ev = BlockEvaluator::new(basis);
    let mut fv = BlockEvaluator::new(frame);
    let mut cols = SplitBlock::new(CHUNK, k);
    let mut fr = SplitBlock::new(CHUNK, kf);
    let n = grid.len();

    let mut coeff = AdjointProduct::new(kf, k);
    let mut start = 0;
    while start < n {
        let end = (start + CHUNK).min(n);
        ev.fill(grid, start, end, true, &mut cols);
        symbol_rows(symbol, grid, start, end, &mut cols)?;
        fv.fill(grid, start, end, true, &mut fr);
        coeff.add(&fr, &cols);
        start = end;
    }
    let a = SplitMatrix::from_dmatrix(&coeff.finish());

    let mut acc = AdjointProduct::new(k, k);
    start = 0;
    while start < n {
        let end = (start + CHUNK).min(n);
        ev.fill(grid, start, end, true, &mut cols);
        symbol_rows(symbol, grid, start, end, &mut cols)?;
        fv.fill(grid, start, end, true, &mut fr);
        mul_sub(&fr, &a, &mut cols, -1.0, 1.0);
        acc.add(&cols, &cols);
        start = end;
    }
    OperatorTruncation::from_gram(OperatorKind::Hankel, symbol, basis.degree_cap(), Some(frame.degree_cap()), acc.finish())
}

/// Builds the degree-`N` basis and the degree-`N+guard` frame on `grid` and
/// returns the Hankel truncation.
pub fn hankel_matrix(
    dom: &DomainSpec,
    grid: &QuadratureGrid,
    symbol: &SymbolFn,
    degree: usize,
    guard: usize,
    index_set: IndexSet,
) -> Result<(OperatorTruncation, OrthonormalBasis)> {
    let basis = orthonormalize_with(dom, grid, degree, DEFAULT_GRAM_CUTOFF, index_set)?;
    let frame = orthonormalize_with(dom, grid, degree + guard, DEFAULT_GRAM_CUTOFF, index_set)?;
    let h = hankel(symbol, &basis, &frame, grid)?;
    Ok((h, basis))
}

/// `‖H s_ζ‖` for the truncated normalized kernel sections
/// `s_ζ = Σ_k conj(e_k(ζ)) e_k / √B_N(ζ,ζ)`.
pub fn weak_null_probe(trunc: &OperatorTruncation, basis: &OrthonormalBasis, centers: &[Vec<Complex64>]) -> Result<Vec<f64>> {
    if trunc.gram.nrows() != basis.len() {
        return Err(Error::DimensionMismatch { expected: trunc.gram.nrows(), got: basis.len() });
    }
    centers
        .iter()
        .map(|z| {
            if z.len() != basis.dim() {
                return Err(Error::DimensionMismatch { expected: basis.dim(), got: z.len() });
            }
            let v = basis.eval(z);
            let b: f64 = v.iter().map(|c| c.norm_sqr()).sum();
            if !(b > 0.0) {
                return Err(Error::InvalidParameter("truncated kernel vanishes at probe centre".into()));
            }
            let c: Vec<Complex64> = v.iter().map(|x| x.conj() / b.sqrt()).collect();
            Ok(trunc.apply_norm(&c))
        })
        .collect()
}

/// CSV of a probe trace: `t,norm`.
pub fn probe_csv(ts: &[f64], values: &[f64]) -> String {
    let mut out = String::from("t,norm\n");
    for (t, v) in ts.iter().zip(values) {
        out.push_str(&format!("{t:.17e},{v:.17e}\n"));
    }
    out
}

/// Ratio of the mean of the last quarter of a trace to the mean of its
/// first quarter; 0 when the whole trace is below `floor`.
pub fn tail_trend(values: &[f64], floor: f64) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let q = (values.len() / 4).max(1);
    let first = values[..q].iter().sum::<f64>() / q as f64;
    let last = values[values.len() - q..].iter().sum::<f64>() / q as f64;
    if first.max(last) <= floor {
        return 0.0;
    }
    last / first.max(floor)
}

/// Compactness verdict from the growth of `#{σ > ½σ₀}` with the degree and
/// from the decay of the kernel-section probes.
#[derive(Clone, Debug, Serialize)]
pub struct CompactnessIndicator {
    /// `(N, count of σ_k > ½σ₀)` per truncation.
    pub counts: Vec<(usize, usize)>,
    pub sigma0: Vec<(usize, f64)>,
    /// Largest tail trend over the probe traces.
    pub probe_trend: f64,
    pub count_grows: bool,
    pub probe_decays: bool,
    pub compact: bool,
    /// `σ₀` stable (within 5%) across the truncations.
    pub bounded: bool,
}

/// Operators with `σ₀` below this are treated as zero.
pub const ZERO_OPERATOR: f64 = 1e-8;

pub fn compactness_indicator(spectra: &[&OperatorTruncation], probes: &[Vec<f64>]) -> CompactnessIndicator {
    let counts: Vec<(usize, usize)> = spectra
        .iter()
        .map(|t| {
            let s0 = t.sigma0();
            (t.degree, if s0 > ZERO_OPERATOR { t.count_above(0.5 * s0) } else { 0 })
        })
        .collect();
    let sigma0: Vec<(usize, f64)> = spectra.iter().map(|t| (t.degree, t.sigma0())).collect();
    let top = sigma0.iter().map(|s| s.1).fold(0.0, f64::max);
    let probe_trend = probes.iter().map(|p| tail_trend(p, ZERO_OPERATOR)).fold(0.0, f64::max);
    let probe_decays = probe_trend < 0.5;
    let count_grows = match (counts.first(), counts.last()) {
        (Some(&(n0, c0)), Some(&(n1, c1))) if n1 > n0 && top > ZERO_OPERATOR => {
            c1 >= c0 + 2 && 2 * (c1 - c0) >= n1 - n0
        }
        _ => false,
    };
    let bounded = match (sigma0.first(), sigma0.last()) {
        (Some(a), Some(b)) => (a.1 - b.1).abs() <= 0.05 * top.max(ZERO_OPERATOR),
        _ => true,
    };
    CompactnessIndicator { counts, sigma0, probe_trend, count_grows, probe_decays, compact: !count_grows && probe_decays, bounded }
}

#[cfg(test)]
mod tests;
