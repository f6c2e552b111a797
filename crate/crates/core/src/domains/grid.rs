//! Deterministic quadrature grids on model domains.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{gauss_legendre_unit, DomainKind, DomainSpec};
use crate::error::{Error, Result};

/// Hard cap on the number of candidate lattice points scanned.
const MAX_CANDIDATES: usize = 60_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GridScheme {
    /// Midpoint rule on a Cartesian lattice clipped to the domain.
    TensorMidpoint,
    /// Shifted Halton points with equal weights.
    QuasiRandom,
    /// Product rule in polar coordinates (Reinhardt domains only): uniform
    /// angles times Gauss–Legendre in the squared moduli. Exact for
    /// polynomials in `z, z̄` of moderate degree.
    Polar,
}

impl GridScheme {
    /// Tensor grids in low dimension, quasi-random nodes from d = 3 on.
    pub fn default_for(dom: &DomainSpec) -> Self {
        if dom.dim >= 3 {
            GridScheme::QuasiRandom
        } else {
            GridScheme::TensorMidpoint
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            GridScheme::TensorMidpoint => "tensor-midpoint",
            GridScheme::QuasiRandom => "quasi-random",
            GridScheme::Polar => "polar",
        }
    }
}

/// Integer lattice coordinates of a tensor grid (`2d` per node).
#[derive(Clone, Debug)]
pub struct Lattice {
    pub spacing: f64,
    pub half_extent: i32,
    pub indices: Vec<i32>,
}

#[derive(Clone, Debug)]
pub struct QuadratureGrid {
    dim: usize,
    coords: Vec<Complex64>,
    weights: Vec<f64>,
    resolution: f64,
    scheme: GridScheme,
    seed: u64,
    domain_volume: f64,
    volume_tolerance: f64,
    lattice: Option<Lattice>,
}

impl QuadratureGrid {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn node(&self, i: usize) -> &[Complex64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn nodes(&self) -> impl Iterator<Item = &[Complex64]> {
        self.coords.chunks_exact(self.dim)
    }

    pub fn weight(&self, i: usize) -> f64 {
        self.weights[i]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    pub fn scheme(&self) -> GridScheme {
        self.scheme
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn domain_volume(&self) -> f64 {
        self.domain_volume
    }

    /// Relative tolerance within which the total weight matches μ(Ω).
    pub fn volume_tolerance(&self) -> f64 {
        self.volume_tolerance
    }

    pub fn lattice(&self) -> Option<&Lattice> {
        self.lattice.as_ref()
    }

    /// SHA-256 over node coordinates and weights (provenance).
    pub fn checksum(&self) -> String {
        let mut h = Sha256::new();
        for c in &self.coords {
            h.update(c.re.to_le_bytes());
            h.update(c.im.to_le_bytes());
        }
        for w in &self.weights {
            h.update(w.to_le_bytes());
        }
        format!("{:x}", h.finalize())
    }

    /// CSV with columns `re1,im1,...,red,imd,weight`.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for j in 1..=self.dim {
            out.push_str(&format!("re{j},im{j},"));
        }
        out.push_str("weight\n");
        for (i, z) in self.nodes().enumerate() {
            for c in z {
                out.push_str(&format!("{:.17e},{:.17e},", c.re, c.im));
            }
            out.push_str(&format!("{:.17e}\n", self.weights[i]));
        }
        out
    }
}

pub fn build_grid(dom: &DomainSpec, resolution: f64, scheme: GridScheme) -> Result<QuadratureGrid> {
    build_grid_seeded(dom, resolution, scheme, 0)
}

/// Builds a grid; `seed` only affects the quasi-random scheme.
pub fn build_grid_seeded(dom: &DomainSpec, resolution: f64, scheme: GridScheme, seed: u64) -> Result<QuadratureGrid> {
    if !(resolution > 0.0) || !resolution.is_finite() {
        return Err(Error::InvalidParameter(format!("resolution must be positive, got {resolution}")));
    }
    let grid = match scheme {
        GridScheme::TensorMidpoint => tensor_midpoint(dom, resolution)?,
        GridScheme::QuasiRandom => quasi_random(dom, resolution, seed)?,
        GridScheme::Polar => polar(dom, resolution)?,
    };
    if grid.is_empty() {
        return Err(Error::GridTooCoarse(format!("resolution {resolution} produced no nodes")));
    }
    Ok(grid)
}

fn axis_bound(dom: &DomainSpec) -> f64 {
    if dom.is_reinhardt() {
        1.0
    } else {
        dom.bound_radius
    }
}

fn tensor_midpoint(dom: &DomainSpec, h: f64) -> Result<QuadratureGrid> {
    let real_dim = 2 * dom.dim;
    let half = (axis_bound(dom) / h).ceil() as i64;
    let side = (2 * half) as usize;
    let candidates = (side as f64).powi(real_dim as i32);
    if candidates > MAX_CANDIDATES as f64 {
        return Err(Error::InvalidParameter(format!(
            "resolution {h} needs {candidates:.3e} lattice candidates (cap {MAX_CANDIDATES})"
        )));
    }
    let cell = h.powi(real_dim as i32);
    let mut coords = Vec::new();
    let mut weights = Vec::new();
    let mut indices = Vec::new();
    let mut idx = vec![-half; real_dim];
    let mut z = vec![Complex64::new(0.0, 0.0); dom.dim];
    loop {
        for j in 0..dom.dim {
            z[j] = Complex64::new((idx[2 * j] as f64 + 0.5) * h, (idx[2 * j + 1] as f64 + 0.5) * h);
        }
        if dom.contains_unchecked(&z) {
            coords.extend_from_slice(&z);
            weights.push(cell);
            indices.extend(idx.iter().map(|&i| i as i32));
        }
        // odometer, last axis fastest
        let mut k = real_dim;
        loop {
            if k == 0 {
                let vol = dom.volume();
                let tol = tensor_tolerance(dom, h);
                return Ok(QuadratureGrid {
                    dim: dom.dim,
                    coords,
                    weights,
                    resolution: h,
                    scheme: GridScheme::TensorMidpoint,
                    seed: 0,
                    domain_volume: vol,
                    volume_tolerance: tol,
                    lattice: Some(Lattice { spacing: h, half_extent: half as i32, indices }),
                });
            }
            k -= 1;
            idx[k] += 1;
            if idx[k] < half {
                break;
            }
            idx[k] = -half;
        }
    }
}

/// The clipped midpoint rule misses O(h) boundary cells whose signed
/// contributions largely cancel; `d·h/4` bounds the observed relative error
/// on the unit-scale models with a wide margin.
fn tensor_tolerance(dom: &DomainSpec, h: f64) -> f64 {
    let scale = axis_bound(dom);
    (dom.dim as f64 * h / (4.0 * scale)).max(1e-12)
}

const PRIMES: [u64; 16] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53];

fn radical_inverse(mut k: u64, base: u64) -> f64 {
    let inv = 1.0 / base as f64;
    let mut out = 0.0;
    let mut f = inv;
    while k > 0 {
        out += (k % base) as f64 * f;
        k /= base;
        f *= inv;
    }
    out
}

fn quasi_random(dom: &DomainSpec, h: f64, seed: u64) -> Result<QuadratureGrid> {
    let real_dim = 2 * dom.dim;
    if real_dim > PRIMES.len() {
        return Err(Error::Unsupported(format!("quasi-random grids up to d = {}", PRIMES.len() / 2)));
    }
    let vol = dom.volume();
    let target = (vol / h.powi(real_dim as i32)).round();
    if target < 1.0 {
        return Err(Error::GridTooCoarse(format!("resolution {h} gives fewer than one node")));
    }
    if target > 5e6 {
        return Err(Error::InvalidParameter(format!("resolution {h} asks for {target:.3e} quasi-random nodes")));
    }
    let target = target as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shift: Vec<f64> = (0..real_dim).map(|_| rng.random::<f64>()).collect();
    let a = axis_bound(dom);
    let mut coords = Vec::with_capacity(target * dom.dim);
    let mut z = vec![Complex64::new(0.0, 0.0); dom.dim];
    let max_tries = 1000 * target as u64 + 1000;
    let mut k = 1u64;
    let mut accepted = 0;
    while accepted < target && k < max_tries {
        for j in 0..dom.dim {
            let u = (radical_inverse(k, PRIMES[2 * j]) + shift[2 * j]).fract();
            let v = (radical_inverse(k, PRIMES[2 * j + 1]) + shift[2 * j + 1]).fract();
            z[j] = Complex64::new(a * (2.0 * u - 1.0), a * (2.0 * v - 1.0));
        }
        if dom.contains_unchecked(&z) {
            coords.extend_from_slice(&z);
            accepted += 1;
        }
        k += 1;
    }
    let w = vol / accepted.max(1) as f64;
    Ok(QuadratureGrid {
        dim: dom.dim,
        coords,
        weights: vec![w; accepted],
        resolution: h,
        scheme: GridScheme::QuasiRandom,
        seed,
        domain_volume: vol,
        // equal weights sum to the (possibly estimated) volume exactly
        volume_tolerance: if matches!(dom.kind, DomainKind::Convex { .. }) { 0.01 } else { 1e-12 },
        lattice: None,
    })
}

/// `(s, weight)` pairs covering the modulus region in squared-modulus
/// coordinates `s_j = |z_j|^2`, with the factor `(1/2)^d` of `r dr = ds/2`
/// already included.
fn modulus_rule(dom: &DomainSpec, n_s: usize) -> Result<Vec<(Vec<f64>, f64)>> {
    let d = dom.dim;
    let half_d = 0.5f64.powi(d as i32);
    let mut out = Vec::new();
    match &dom.kind {
        DomainKind::Disc | DomainKind::Polydisc => {
            let (x, w) = gauss_legendre_unit(n_s);
            for_each_multi(d, n_s, |ix| {
                let s: Vec<f64> = ix.iter().map(|&i| x[i]).collect();
                let wt: f64 = ix.iter().map(|&i| w[i]).product();
                out.push((s, wt * half_d));
            });
        }
        DomainKind::Ball => {
            // collapsed coordinates of the simplex Σ s_j < 1
            let n = n_s + d;
            let (x, w) = gauss_legendre_unit(n);
            for_each_multi(d, n, |ix| {
                let mut s = vec![0.0; d];
                let mut rest = 1.0;
                let mut jac = 1.0;
                let mut wt = 1.0;
                for j in 0..d {
                    let u = x[ix[j]];
                    // ds_j = rest du_j
                    jac *= rest;
                    s[j] = u * rest;
                    wt *= w[ix[j]];
                    rest *= 1.0 - u;
                }
                out.push((s, wt * jac * half_d));
            });
        }
        DomainKind::Egg { m } => {
            let m = *m as usize;
            let (xu, wu) = gauss_legendre_unit(n_s);
            let nv = (m + 1) * n_s + 1;
            let (xv, wv) = gauss_legendre_unit(nv);
            for (v, wvv) in xv.iter().zip(&wv) {
                let span = 1.0 - v.powi(m as i32);
                for (u, wuu) in xu.iter().zip(&wu) {
                    out.push((vec![span * u, *v], wuu * wvv * span * half_d));
                }
            }
        }
        DomainKind::Convex { .. } => {
            return Err(Error::Unsupported("polar grids need a Reinhardt domain".into()));
        }
    }
    Ok(out)
}

fn for_each_multi(d: usize, n: usize, mut f: impl FnMut(&[usize])) {
    let mut ix = vec![0usize; d];
    loop {
        f(&ix);
        let mut k = d;
        loop {
            if k == 0 {
                return;
            }
            k -= 1;
            ix[k] += 1;
            if ix[k] < n {
                break;
            }
            ix[k] = 0;
        }
    }
}

/// Angular count `ceil(2π/res)`, radial count `ceil(n_θ/4) + 2`.
pub(crate) fn polar_counts(resolution: f64) -> (usize, usize) {
    let n_theta = ((2.0 * PI / resolution).ceil() as usize).max(4);
    (n_theta, n_theta.div_ceil(4) + 2)
}

fn polar(dom: &DomainSpec, res: f64) -> Result<QuadratureGrid> {
    let (n_theta, n_s) = polar_counts(res);
    let radial = modulus_rule(dom, n_s)?;
    let d = dom.dim;
    let total = radial.len() as f64 * (n_theta as f64).powi(d as i32);
    if total > 2e7 {
        return Err(Error::InvalidParameter(format!("polar resolution {res} asks for {total:.3e} nodes")));
    }
    let angles: Vec<Complex64> =
        (0..n_theta).map(|k| Complex64::from_polar(1.0, 2.0 * PI * (k as f64 + 0.5) / n_theta as f64)).collect();
    let w_theta = (2.0 * PI / n_theta as f64).powi(d as i32);
    let mut coords = Vec::with_capacity(total as usize * d);
    let mut weights = Vec::with_capacity(total as usize);
    for (s, w) in &radial {
        let r: Vec<f64> = s.iter().map(|v| v.max(0.0).sqrt()).collect();
        for_each_multi(d, n_theta, |ix| {
            for j in 0..d {
                coords.push(angles[ix[j]] * r[j]);
            }
            weights.push(w * w_theta);
        });
    }
    Ok(QuadratureGrid {
        dim: d,
        coords,
        weights,
        resolution: res,
        scheme: GridScheme::Polar,
        seed: 0,
        domain_volume: dom.volume(),
        volume_tolerance: 1e-12,
        lattice: None,
    })
}
