use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::domains::{DomainKind, DomainSpec, QuadratureGrid};
use crate::error::{Error, Result};
use crate::linalg::{hermitian_eigen, mul_sub, AdjointProduct, SplitBlock, SplitMatrix, ZERO};

/// Relative eigenvalue cutoff of the scaled Gram matrix.
pub const DEFAULT_GRAM_CUTOFF: f64 = 1e-10;

pub(crate) const CHUNK: usize = 1024;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum IndexSet {
    /// `|α| ≤ N`
    Total,
    /// `max_j α_j ≤ N`
    PerVariable,
}

impl IndexSet {
    pub fn default_for(dom: &DomainSpec) -> Self {
        match dom.kind {
            DomainKind::Polydisc if dom.dim > 1 => IndexSet::PerVariable,
            _ => IndexSet::Total,
        }
    }
}

/// Monomials `z^α` over a multi-index set, ordered by total degree and then
/// lexicographically.
#[derive(Clone, Debug)]
pub struct MonomialSet {
    dim: usize,
    cap: usize,
    exps: Vec<u32>,
}

impl MonomialSet {
    pub fn new(dim: usize, cap: usize, set: IndexSet) -> Self {
        let mut all: Vec<Vec<u32>> = Vec::new();
        let mut idx = vec![0u32; dim];
        loop {
            let ok = match set {
                IndexSet::Total => idx.iter().sum::<u32>() as usize <= cap,
                IndexSet::PerVariable => true,
            };
            if ok {
                all.push(idx.clone());
            }
            let mut k = dim;
            let done = loop {
                if k == 0 {
                    break true;
                }
                k -= 1;
                idx[k] += 1;
                if idx[k] as usize <= cap {
                    break false;
                }
                idx[k] = 0;
            };
            if done {
                break;
            }
        }
        all.sort_by(|a, b| {
            let (sa, sb): (u32, u32) = (a.iter().sum(), b.iter().sum());
            sa.cmp(&sb).then_with(|| b.cmp(a))
        });
        MonomialSet { dim, cap, exps: all.into_iter().flatten().collect() }
    }

    pub fn len(&self) -> usize {
        self.exps.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.exps.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn cap(&self) -> usize {
        self.cap
    }

    pub fn exponent(&self, a: usize) -> &[u32] {
        &self.exps[a * self.dim..(a + 1) * self.dim]
    }

    fn powers(&self, z: &[Complex64]) -> Vec<Complex64> {
        let n = self.cap + 1;
        let mut p = vec![Complex64::new(1.0, 0.0); self.dim * n];
        for j in 0..self.dim {
            for k in 1..n {
                p[j * n + k] = p[j * n + k - 1] * z[j];
            }
        }
        p
    }

    pub fn eval_into(&self, z: &[Complex64], out: &mut [Complex64]) {
        let n = self.cap + 1;
        let p = self.powers(z);
        for (a, o) in out.iter_mut().enumerate().take(self.len()) {
            let e = self.exponent(a);
            let mut v = p[e[0] as usize];
            for j in 1..self.dim {
                v *= p[j * n + e[j] as usize];
            }
            *o = v;
        }
    }

    pub fn eval(&self, z: &[Complex64]) -> Vec<Complex64> {
        let mut out = vec![ZERO; self.len()];
        self.eval_into(z, &mut out);
        out
    }

    /// Values and holomorphic partials `∂_j z^α`, the latter as `len × dim`
    /// row-major.
    pub fn eval_with_partials(&self, z: &[Complex64]) -> (Vec<Complex64>, Vec<Complex64>) {
        let n = self.cap + 1;
        let p = self.powers(z);
        let d = self.dim;
        let mut vals = vec![ZERO; self.len()];
        let mut parts = vec![ZERO; self.len() * d];
        for a in 0..self.len() {
            let e = self.exponent(a);
            let mut v = Complex64::new(1.0, 0.0);
            for j in 0..d {
                v *= p[j * n + e[j] as usize];
            }
            vals[a] = v;
            for j in 0..d {
                if e[j] == 0 {
                    continue;
                }
                let mut g = Complex64::new(e[j] as f64, 0.0) * p[j * n + e[j] as usize - 1];
                for i in 0..d {
                    if i != j {
                        g *= p[i * n + e[i] as usize];
                    }
                }
                parts[a * d + j] = g;
            }
        }
        (vals, parts)
    }
}

/// Orthonormal basis of the polynomial truncation of A²(Ω) on a grid:
/// `φ_k = Σ_α coeffs[α, k] z^α`.
#[derive(Clone, Debug)]
pub struct OrthonormalBasis {
    pub monomials: MonomialSet,
    pub coeffs: DMatrix<Complex64>,
    pub index_set: IndexSet,
    pub cutoff: f64,
    /// Smallest retained eigenvalue of the diagonally scaled Gram matrix,
    /// relative to the largest.
    pub smallest_retained: f64,
    /// Directions dropped below the cutoff.
    pub dropped: usize,
    /// `max |⟨φ_k, φ_l⟩ − δ_kl|` on the grid.
    pub gram_deviation: f64,
    pub grid_checksum: String,
}

impl OrthonormalBasis {
    pub fn len(&self) -> usize {
        self.coeffs.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.ncols() == 0
    }

    pub fn dim(&self) -> usize {
        self.monomials.dim()
    }

    pub fn degree_cap(&self) -> usize {
        self.monomials.cap()
    }

    /// `φ_k(z)` for all k.
    pub fn eval(&self, z: &[Complex64]) -> Vec<Complex64> {
        let m = self.monomials.eval(z);
        self.combine(&m)
    }

    fn combine(&self, m: &[Complex64]) -> Vec<Complex64> {
        let mut out = vec![ZERO; self.len()];
        for (a, ma) in m.iter().enumerate() {
            if *ma == ZERO {
                continue;
            }
            for (k, o) in out.iter_mut().enumerate() {
                *o += self.coeffs[(a, k)] * ma;
            }
        }
        out
    }

    /// `φ_k(z)` and `∂_j φ_k(z)` (row-major `len × dim`).
    pub fn eval_with_partials(&self, z: &[Complex64]) -> (Vec<Complex64>, Vec<Complex64>) {
        let d = self.dim();
        let (m, mp) = self.monomials.eval_with_partials(z);
        let vals = self.combine(&m);
        let mut parts = vec![ZERO; self.len() * d];
        for a in 0..m.len() {
            for j in 0..d {
                let g = mp[a * d + j];
                if g == ZERO {
                    continue;
                }
                for k in 0..self.len() {
                    parts[k * d + j] += self.coeffs[(a, k)] * g;
                }
            }
        }
        (vals, parts)
    }

    /// Long-format CSV: `alpha1..alphad,function,re,im`.
    pub fn to_csv(&self) -> String {
        let d = self.dim();
        let mut out = String::new();
        for j in 1..=d {
            out.push_str(&format!("alpha{j},"));
        }
        out.push_str("function,re,im\n");
        for a in 0..self.monomials.len() {
            let e = self.monomials.exponent(a);
            for k in 0..self.len() {
                let c = self.coeffs[(a, k)];
                for v in e {
                    out.push_str(&format!("{v},"));
                }
                out.push_str(&format!("{k},{:.17e},{:.17e}\n", c.re, c.im));
            }
        }
        out
    }
}

/// Evaluates an orthonormal basis on consecutive chunks of grid nodes,
/// optionally scaled by the square roots of the quadrature weights.
pub(crate) struct BlockEvaluator<'a> {
    basis: &'a OrthonormalBasis,
    coeffs: SplitMatrix,
    mono: SplitBlock,
    row: Vec<Complex64>,
}

impl<'a> BlockEvaluator<'a> {
    pub fn new(basis: &'a OrthonormalBasis) -> Self {
        let m = basis.monomials.len();
        BlockEvaluator { basis, coeffs: SplitMatrix::from_dmatrix(&basis.coeffs), mono: SplitBlock::new(CHUNK, m), row: vec![ZERO; m] }
    }

    /// Fills `out` (capacity `CHUNK × len`) with rows `start..end`.
    pub fn fill(&mut self, grid: &QuadratureGrid, start: usize, end: usize, weighted: bool, out: &mut SplitBlock) {
        let rows = end - start;
        self.mono.truncate_rows(rows);
        out.truncate_rows(rows);
        for i in start..end {
            self.basis.monomials.eval_into(grid.node(i), &mut self.row);
            let sw = if weighted { grid.weight(i).sqrt() } else { 1.0 };
            for (c, v) in self.row.iter().enumerate() {
                self.mono.set(i - start, c, v * sw);
            }
        }
        mul_sub(&self.mono, &self.coeffs, out, 1.0, 0.0);
    }
}

/// Grid Gram matrix `G[a,b] = Σ_i w_i conj(f_a(z_i)) f_b(z_i)` of the
/// functions produced by `fill` (which writes `cols` values per node).
pub(crate) fn grid_gram(
    grid: &QuadratureGrid,
    cols: usize,
    mut fill: impl FnMut(&[Complex64], &mut [Complex64]),
) -> DMatrix<Complex64> {
    let mut acc = AdjointProduct::new(cols, cols);
    let mut block = SplitBlock::new(CHUNK, cols);
    let mut row = vec![ZERO; cols];
    let n = grid.len();
    let mut start = 0;
    while start < n {
        let end = (start + CHUNK).min(n);
        block.truncate_rows(end - start);
        for i in start..end {
            fill(grid.node(i), &mut row);
            let sw = grid.weight(i).sqrt();
            for (c, v) in row.iter().enumerate() {
                block.set(i - start, c, v * sw);
            }
        }
        acc.add(&block, &block);
        start = end;
    }
    acc.finish()
}

pub fn orthonormalize(dom: &DomainSpec, grid: &QuadratureGrid, degree_cap: usize, cutoff: f64) -> Result<OrthonormalBasis> {
    orthonormalize_with(dom, grid, degree_cap, cutoff, IndexSet::default_for(dom))
}

/// Orthonormalizes the monomials of the index set on the grid by a spectral
/// decomposition of the diagonally scaled Gram matrix, dropping (and
/// reporting) directions below `cutoff` relative to the largest eigenvalue.
pub fn orthonormalize_with(
    dom: &DomainSpec,
    grid: &QuadratureGrid,
    degree_cap: usize,
    cutoff: f64,
    index_set: IndexSet,
) -> Result<OrthonormalBasis> {
    if !(cutoff > 0.0) {
        return Err(Error::InvalidParameter("Gram cutoff must be positive".into()));
    }
    if grid.dim() != dom.dim {
        return Err(Error::DimensionMismatch { expected: dom.dim, got: grid.dim() });
    }
    let monomials = MonomialSet::new(dom.dim, degree_cap, index_set);
    let m = monomials.len();
    let gram = grid_gram(grid, m, |z, row| monomials.eval_into(z, row));
    let scale: Vec<f64> = (0..m)
        .map(|a| {
            let g = gram[(a, a)].re;
            if g > 0.0 {
                1.0 / g.sqrt()
            } else {
                0.0
            }
        })
        .collect();
    let scaled = DMatrix::from_fn(m, m, |a, b| gram[(a, b)] * scale[a] * scale[b]);
    let (vals, vecs) = hermitian_eigen(scaled);
    let top = vals.first().copied().unwrap_or(0.0);
    if !(top > 0.0) {
        return Err(Error::QuadratureInconsistency("Gram matrix has no positive eigenvalue".into()));
    }
    let kept: Vec<usize> = (0..m).filter(|&k| vals[k] > cutoff * top).collect();
    let coeffs = DMatrix::from_fn(m, kept.len(), |a, c| {
        let k = kept[c];
        vecs[(a, k)] * (scale[a] / vals[k].sqrt())
    });
    // C^* G C should be the identity
    let check = coeffs.adjoint() * &gram * &coeffs;
    let mut dev: f64 = 0.0;
    for i in 0..check.nrows() {
        for j in 0..check.ncols() {
            let target = if i == j { 1.0 } else { 0.0 };
            dev = dev.max((check[(i, j)] - target).norm());
        }
    }
    Ok(OrthonormalBasis {
        smallest_retained: kept.last().map(|&k| vals[k] / top).unwrap_or(0.0),
        dropped: m - kept.len(),
        monomials,
        coeffs,
        index_set,
        cutoff,
        gram_deviation: dev,
        grid_checksum: grid.checksum(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domains::{build_grid, GridScheme};
    use std::f64::consts::PI;

    #[test]
    fn index_sets() {
        assert_eq!(MonomialSet::new(2, 2, IndexSet::Total).len(), 6);
        assert_eq!(MonomialSet::new(2, 2, IndexSet::PerVariable).len(), 9);
        let s = MonomialSet::new(2, 1, IndexSet::Total);
        assert_eq!(s.exponent(0), &[0, 0]);
        assert_eq!(s.exponent(1), &[1, 0]);
        assert_eq!(s.exponent(2), &[0, 1]);
    }

    #[test]
    fn partials_match_differences() {
        let s = MonomialSet::new(2, 3, IndexSet::Total);
        let z = [Complex64::new(0.3, -0.2), Complex64::new(-0.1, 0.4)];
        let (_, parts) = s.eval_with_partials(&z);
        let h = 1e-6;
        for j in 0..2 {
            let mut zp = z;
            let mut zm = z;
            zp[j] += h;
            zm[j] -= h;
            let (vp, vm) = (s.eval(&zp), s.eval(&zm));
            for a in 0..s.len() {
                let fd = (vp[a] - vm[a]) / (2.0 * h);
                assert!((fd - parts[a * 2 + j]).norm() < 1e-8);
            }
        }
    }

    #[test]
    fn disc_constant_function() {
        let dom = DomainSpec::disc();
        let g = build_grid(&dom, 0.2, GridScheme::Polar).unwrap();
        let b = orthonormalize(&dom, &g, 0, DEFAULT_GRAM_CUTOFF).unwrap();
        let v = b.eval(&[Complex64::new(0.4, 0.1)]);
        assert!((v[0].norm() - 1.0 / PI.sqrt()).abs() < 1e-13);
    }

    #[test]
    fn disc_monomial_normalisation() {
        // polar oracle: ∫_disc |z|^{2k} dμ = π/(k+1)
        let dom = DomainSpec::disc();
        let g = build_grid(&dom, 0.2, GridScheme::Polar).unwrap();
        let b = orthonormalize(&dom, &g, 3, DEFAULT_GRAM_CUTOFF).unwrap();
        assert_eq!(b.len(), 4);
        assert!(b.gram_deviation < 1e-12);
        let z = Complex64::new(0.5, 0.2);
        // the orthonormal functions may mix within a degenerate eigenspace,
        // so compare the partial kernel sum instead of individual functions
        let got: f64 = b.eval(&[z]).iter().map(|c| c.norm_sqr()).sum();
        let want: f64 = (0..4).map(|k| (k as f64 + 1.0) / PI * z.norm_sqr().powi(k)).sum();
        assert!((got - want).abs() < 1e-12, "{got} vs {want}");
    }

    #[test]
    fn ball_linear_norms() {
        let dom = DomainSpec::ball(2);
        let g = build_grid(&dom, 0.5, GridScheme::Polar).unwrap();
        let gram = grid_gram(&g, 3, |z, row| MonomialSet::new(2, 1, IndexSet::Total).eval_into(z, row));
        assert!((gram[(1, 1)].re - PI * PI / 6.0).abs() < 1e-12);
        assert!((gram[(2, 2)].re - PI * PI / 6.0).abs() < 1e-12);
        assert!(gram[(1, 2)].norm() < 1e-13);
        assert!(gram[(0, 1)].norm() < 1e-13);
    }

    #[test]
    fn ill_conditioned_directions_are_dropped() {
        // a coarse Cartesian grid cannot separate high-degree monomials
        let dom = DomainSpec::disc();
        let g = build_grid(&dom, 0.5, GridScheme::TensorMidpoint).unwrap();
        let b = orthonormalize(&dom, &g, 12, DEFAULT_GRAM_CUTOFF).unwrap();
        assert!(b.dropped > 0);
        assert!(b.len() + b.dropped == 13);
        assert!(b.gram_deviation < 1e-6);
    }
}
