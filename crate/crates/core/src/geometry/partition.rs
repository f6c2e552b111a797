use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use super::{GeodesicField, Net};
use crate::error::{Error, Result};
use crate::linalg::ZERO;

/// C¹ ramp: 1 up to `inner`, 0 from `outer` on, cubic in between.
fn ramp(d: f64, inner: f64, outer: f64) -> f64 {
    if d <= inner {
        1.0
    } else if d >= outer {
        0.0
    } else {
        let s = (d - inner) / (outer - inner);
        1.0 - s * s * (3.0 - 2.0 * s)
    }
}

/// Normalized cutoffs `χ̂_m = χ_m / Σ_n χ_n` on grid nodes, stored sparsely
/// per net centre as `(node, value, distance to the centre)`.
#[derive(Clone, Debug, Serialize)]
pub struct PartitionOfUnity {
    pub inner: f64,
    pub outer: f64,
    pub cutoffs: Vec<Vec<(u32, f64, f64)>>,
    pub max_sum_error: f64,
}

impl PartitionOfUnity {
    /// Profiles ramp in graph distance from `inner` to `outer`; `inner`
    /// should be at least the covering radius of the net.
    pub fn build(field: &GeodesicField, net: &Net, inner: f64, outer: f64) -> Result<Self> {
        if !(inner > 0.0 && outer > inner) {
            return Err(Error::InvalidParameter(format!("need 0 < inner < outer, got {inner}, {outer}")));
        }
        let raw: Vec<Vec<(u32, f64, f64)>> = net
            .centers
            .par_iter()
            .map(|&c| {
                field
                    .bounded_from_node(c, outer)
                    .into_iter()
                    .filter_map(|(i, d)| {
                        let v = ramp(d, inner, outer);
                        (v > 0.0).then_some((i as u32, v, d))
                    })
                    .collect()
            })
            .collect();
        let mut sums = vec![0.0; field.len()];
        for list in &raw {
            for &(i, v, _) in list {
                sums[i as usize] += v;
            }
        }
        if let Some(node) = sums.iter().position(|&s| s <= 0.0) {
            return Err(Error::CoveringViolated { node });
        }
        let cutoffs: Vec<Vec<(u32, f64, f64)>> =
            raw.into_iter().map(|list| list.into_iter().map(|(i, v, d)| (i, v / sums[i as usize], d)).collect()).collect();
        let mut check = vec![0.0; field.len()];
        for list in &cutoffs {
            for &(i, v, _) in list {
                check[i as usize] += v;
            }
        }
        let max_sum_error = check.iter().map(|s| (s - 1.0).abs()).fold(0.0, f64::max);
        Ok(PartitionOfUnity { inner, outer, cutoffs, max_sum_error })
    }

    pub fn len(&self) -> usize {
        self.cutoffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cutoffs.is_empty()
    }

    /// Dense values of `χ̂_m` on the grid.
    pub fn dense(&self, m: usize, nodes: usize) -> Vec<f64> {
        let mut out = vec![0.0; nodes];
        for &(i, v, _) in &self.cutoffs[m] {
            out[i as usize] = v;
        }
        out
    }

    /// True when every positive value of `χ̂_m` sits strictly inside
    /// `B(ζ_m, outer)`.
    pub fn support_ok(&self) -> bool {
        self.cutoffs.iter().all(|list| list.iter().all(|&(_, v, d)| v <= 0.0 || d < self.outer))
    }

    pub fn values_in_unit_interval(&self) -> bool {
        self.cutoffs.iter().all(|list| list.iter().all(|&(_, v, _)| (0.0..=1.0 + 1e-15).contains(&v)))
    }
}

/// `∂̄ f` at every node (d components each) from a least-squares linear fit
/// over the closest-shell graph neighbours.
pub fn grid_dbar(field: &GeodesicField, values: &[Complex64]) -> Vec<Vec<Complex64>> {
    let grid = field.grid();
    let d = grid.dim();
    let n2 = 2 * d;
    (0..grid.len())
        .into_par_iter()
        .map(|i| {
            let z = grid.node(i);
            let nbrs: Vec<usize> = field.near_neighbors(i).collect();
            if nbrs.len() < n2 {
                return vec![ZERO; d];
            }
            let mut a = DMatrix::<f64>::zeros(nbrs.len(), n2);
            let mut re = DVector::<f64>::zeros(nbrs.len());
            let mut im = DVector::<f64>::zeros(nbrs.len());
            for (r, &j) in nbrs.iter().enumerate() {
                let q = grid.node(j);
                for k in 0..d {
                    a[(r, 2 * k)] = q[k].re - z[k].re;
                    a[(r, 2 * k + 1)] = q[k].im - z[k].im;
                }
                let df = values[j] - values[i];
                re[r] = df.re;
                im[r] = df.im;
            }
            let ata = a.transpose() * &a;
            let Some(chol) = ata.cholesky() else {
                return vec![ZERO; d];
            };
            let gr = chol.solve(&(a.transpose() * re));
            let gi = chol.solve(&(a.transpose() * im));
            (0..d)
                .map(|k| {
                    let dx = Complex64::new(gr[2 * k], gi[2 * k]);
                    let dy = Complex64::new(gr[2 * k + 1], gi[2 * k + 1]);
                    (dx + Complex64::i() * dy) * 0.5
                })
                .collect()
        })
        .collect()
}
