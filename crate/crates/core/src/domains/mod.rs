//! Model domains in C^d: membership, boundary gaps, volumes and boundary
//! approach rays.

mod grid;
mod quadrature;

pub use grid::{build_grid, build_grid_seeded, GridScheme, Lattice, QuadratureGrid};
pub use quadrature::gauss_legendre_unit;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Seed of the hit-ratio volume estimate for `convex` domains.
pub const CONVEX_VOLUME_SEED: u64 = 0x5eed_b0a1;
/// Number of samples used by the hit-ratio volume estimate.
pub const CONVEX_VOLUME_SAMPLES: usize = 400_000;

/// One real defining inequality `x·Qx + b·x + c < 0`, where
/// `x = (Re z1, Im z1, Re z2, Im z2, ...)`. `quadratic == None` means `Q = 0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RealQuadratic {
    #[serde(default)]
    pub quadratic: Option<Vec<Vec<f64>>>,
    pub linear: Vec<f64>,
    pub constant: f64,
}

impl RealQuadratic {
    pub fn value(&self, x: &[f64]) -> f64 {
        let mut v = self.constant;
        for (b, xi) in self.linear.iter().zip(x) {
            v += b * xi;
        }
        if let Some(q) = &self.quadratic {
            for (i, row) in q.iter().enumerate() {
                for (j, qij) in row.iter().enumerate() {
                    v += x[i] * qij * x[j];
                }
            }
        }
        v
    }

    fn gradient_norm(&self, x: &[f64]) -> f64 {
        let mut g = self.linear.clone();
        if let Some(q) = &self.quadratic {
            for i in 0..g.len() {
                for j in 0..g.len() {
                    g[i] += (q[i][j] + q[j][i]) * x[j];
                }
            }
        }
        g.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    fn largest_curvature(&self) -> f64 {
        match &self.quadratic {
            None => 0.0,
            Some(q) => {
                let n = q.len();
                let m = DMatrix::from_fn(n, n, |i, j| 0.5 * (q[i][j] + q[j][i]));
                m.symmetric_eigen().eigenvalues.iter().cloned().fold(f64::MIN, f64::max)
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum DomainKind {
    Disc,
    Ball,
    Polydisc,
    /// `{|z1|^2 + |z2|^(2m) < 1}`.
    Egg { m: u32 },
    Convex { constraints: Vec<RealQuadratic> },
}

/// A bounded open domain with a stored bounding radius and interior anchor.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DomainSpec {
    pub kind: DomainKind,
    pub dim: usize,
    pub label: String,
    pub bound_radius: f64,
    pub anchor: Vec<Complex64>,
}

pub(crate) fn real_coords(z: &[Complex64]) -> Vec<f64> {
    z.iter().flat_map(|c| [c.re, c.im]).collect()
}

pub(crate) fn norm2(z: &[Complex64]) -> f64 {
    z.iter().map(|c| c.norm_sqr()).sum()
}

impl DomainSpec {
    pub fn disc() -> Self {
        Self::reinhardt(DomainKind::Disc, 1, "disc".into())
    }

    pub fn ball(dim: usize) -> Self {
        Self::reinhardt(DomainKind::Ball, dim, format!("ball{dim}"))
    }

    pub fn polydisc(dim: usize) -> Self {
        Self::reinhardt(DomainKind::Polydisc, dim, format!("polydisc{dim}"))
    }

    pub fn egg(m: u32) -> Self {
        Self::reinhardt(DomainKind::Egg { m }, 2, format!("egg{m}"))
    }

    fn reinhardt(kind: DomainKind, dim: usize, label: String) -> Self {
        let bound_radius = match kind {
            DomainKind::Polydisc => (dim as f64).sqrt(),
            DomainKind::Egg { .. } => 2f64.sqrt(),
            _ => 1.0,
        };
        DomainSpec { kind, dim, label, bound_radius, anchor: vec![Complex64::new(0.0, 0.0); dim] }
    }

    /// A domain cut out by real affine/quadratic inequalities. The anchor must
    /// be interior and every member must lie within `bound_radius`.
    pub fn convex(
        dim: usize,
        constraints: Vec<RealQuadratic>,
        anchor: Vec<Complex64>,
        bound_radius: f64,
        label: impl Into<String>,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidParameter("dimension must be positive".into()));
        }
        if constraints.is_empty() {
            return Err(Error::InvalidParameter("convex domain needs at least one constraint".into()));
        }
        for c in &constraints {
            if c.linear.len() != 2 * dim {
                return Err(Error::DimensionMismatch { expected: 2 * dim, got: c.linear.len() });
            }
            if let Some(q) = &c.quadratic {
                if q.len() != 2 * dim || q.iter().any(|r| r.len() != 2 * dim) {
                    return Err(Error::InvalidParameter("quadratic block must be 2d x 2d".into()));
                }
            }
        }
        if !(bound_radius > 0.0) {
            return Err(Error::InvalidParameter("bound_radius must be positive".into()));
        }
        let dom = DomainSpec {
            kind: DomainKind::Convex { constraints },
            dim,
            label: label.into(),
            bound_radius,
            anchor,
        };
        if !dom.contains(&dom.anchor)? {
            return Err(Error::InvalidParameter("anchor is not an interior point".into()));
        }
        Ok(dom)
    }

    fn check_dim(&self, z: &[Complex64]) -> Result<()> {
        if z.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: z.len() });
        }
        if z.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::InvalidParameter("point has non-finite coordinates".into()));
        }
        Ok(())
    }

    /// Defining function: negative inside, zero on the boundary.
    pub fn defining_value(&self, z: &[Complex64]) -> f64 {
        match &self.kind {
            DomainKind::Disc | DomainKind::Ball => norm2(z) - 1.0,
            DomainKind::Polydisc => z.iter().map(|c| c.norm_sqr()).fold(f64::MIN, f64::max) - 1.0,
            DomainKind::Egg { m } => z[0].norm_sqr() + z[1].norm_sqr().powi(*m as i32) - 1.0,
            DomainKind::Convex { constraints } => {
                let x = real_coords(z);
                constraints.iter().map(|c| c.value(&x)).fold(f64::MIN, f64::max)
            }
        }
    }

    pub fn contains(&self, z: &[Complex64]) -> Result<bool> {
        self.check_dim(z)?;
        Ok(self.contains_unchecked(z))
    }

    pub(crate) fn contains_unchecked(&self, z: &[Complex64]) -> bool {
        self.defining_value(z) < 0.0 && norm2(z) < self.bound_radius * self.bound_radius
    }

    /// Euclidean distance to the boundary (exact on disc/ball/polydisc and the
    /// egg up to root-finding accuracy, a guaranteed lower bound on convex
    /// domains).
    pub fn boundary_gap(&self, z: &[Complex64]) -> Result<f64> {
        if !self.contains(z)? {
            return Err(Error::OutsideDomain);
        }
        Ok(self.boundary_gap_unchecked(z))
    }

    pub(crate) fn boundary_gap_unchecked(&self, z: &[Complex64]) -> f64 {
        match &self.kind {
            DomainKind::Disc | DomainKind::Ball => 1.0 - norm2(z).sqrt(),
            DomainKind::Polydisc => z.iter().map(|c| 1.0 - c.norm()).fold(f64::MAX, f64::min),
            DomainKind::Egg { m } => egg_gap(z[0].norm(), z[1].norm(), *m),
            DomainKind::Convex { constraints } => {
                let x = real_coords(z);
                constraints
                    .iter()
                    .map(|c| {
                        let rho = c.value(&x);
                        let g = c.gradient_norm(&x);
                        let lam = c.largest_curvature();
                        if lam <= 0.0 {
                            if g > 0.0 {
                                -rho / g
                            } else {
                                f64::INFINITY
                            }
                        } else {
                            (-g + (g * g - 4.0 * lam * rho).sqrt()) / (2.0 * lam)
                        }
                    })
                    .fold(f64::INFINITY, f64::min)
                    .min(self.bound_radius - norm2(z).sqrt())
            }
        }
    }

    /// Lebesgue measure: closed form on the Reinhardt models, a seeded
    /// hit-ratio estimate on convex domains.
    pub fn volume(&self) -> f64 {
        use std::f64::consts::PI;
        let d = self.dim as i32;
        match &self.kind {
            DomainKind::Disc => PI,
            DomainKind::Ball => PI.powi(d) / (1..=self.dim).map(|k| k as f64).product::<f64>(),
            DomainKind::Polydisc => PI.powi(d),
            DomainKind::Egg { m } => PI * PI * (*m as f64) / (*m as f64 + 1.0),
            DomainKind::Convex { .. } => {
                let mut rng = ChaCha8Rng::seed_from_u64(CONVEX_VOLUME_SEED);
                let r = self.bound_radius;
                let mut z = vec![Complex64::new(0.0, 0.0); self.dim];
                let mut hits = 0usize;
                for _ in 0..CONVEX_VOLUME_SAMPLES {
                    for c in z.iter_mut() {
                        *c = Complex64::new(rng.random_range(-r..r), rng.random_range(-r..r));
                    }
                    if self.contains_unchecked(&z) {
                        hits += 1;
                    }
                }
                (2.0 * r).powi(2 * d) * hits as f64 / CONVEX_VOLUME_SAMPLES as f64
            }
        }
    }

    /// Domains with a transitive automorphism group, on which charts exist.
    pub fn is_homogeneous(&self) -> bool {
        matches!(self.kind, DomainKind::Disc | DomainKind::Ball | DomainKind::Polydisc)
    }

    pub fn has_closed_form_kernel(&self) -> bool {
        self.is_homogeneous()
    }

    pub fn is_reinhardt(&self) -> bool {
        !matches!(self.kind, DomainKind::Convex { .. })
    }

    /// Resolution at which `build_grid` with the tensor scheme reaches its
    /// documented accuracy.
    pub fn default_resolution(&self) -> f64 {
        match (&self.kind, self.dim) {
            (DomainKind::Convex { .. }, _) => self.bound_radius / 25.0,
            (_, 1) => 0.01,
            _ => 0.1,
        }
    }

    /// Canonical boundary approach directions (unit vectors).
    ///
    /// In one variable these are `count` equally spaced angles. In higher
    /// dimension the coordinate axes come first, then the diagonal, then
    /// seeded random directions.
    pub fn rays(&self, count: usize, seed: u64) -> Vec<Vec<Complex64>> {
        if self.dim == 1 {
            return (0..count)
                .map(|k| vec![Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * k as f64 / count as f64)])
                .collect();
        }
        let mut out = Vec::with_capacity(count);
        for j in 0..self.dim {
            let mut v = vec![Complex64::new(0.0, 0.0); self.dim];
            v[j] = Complex64::new(1.0, 0.0);
            out.push(v);
        }
        let s = 1.0 / (self.dim as f64).sqrt();
        out.push(vec![Complex64::new(s, 0.0); self.dim]);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        while out.len() < count {
            let mut v: Vec<Complex64> = (0..self.dim)
                .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
                .collect();
            let n = norm2(&v).sqrt();
            if n < 1e-3 {
                continue;
            }
            v.iter_mut().for_each(|c| *c /= n);
            out.push(v);
        }
        out.truncate(count);
        out
    }

    /// Distance from the anchor to the boundary along `dir`.
    pub fn ray_exit(&self, dir: &[Complex64]) -> f64 {
        let at = |s: f64| -> Vec<Complex64> { self.anchor.iter().zip(dir).map(|(a, v)| a + v * s).collect() };
        let (mut lo, mut hi) = (0.0, 2.0 * self.bound_radius + norm2(&self.anchor).sqrt());
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            if self.contains_unchecked(&at(mid)) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    }

    /// Point at boundary parameter `t ∈ [0,1)` on the ray `dir`.
    pub fn ray_point(&self, dir: &[Complex64], t: f64) -> Vec<Complex64> {
        let s = self.ray_exit(dir) * t;
        self.anchor.iter().zip(dir).map(|(a, v)| a + v * s).collect()
    }
}

/// Distance from `(a, b)` (moduli) to the curve `x^2 + y^(2m) = 1` in the
/// closed quarter plane.
fn egg_gap(a: f64, b: f64, m: u32) -> f64 {
    let curve = |y: f64| -> (f64, f64) { ((1.0 - y.powi(2 * m as i32)).max(0.0).sqrt(), y) };
    let dist = |y: f64| -> f64 {
        let (x, yy) = curve(y);
        ((x - a).powi(2) + (yy - b).powi(2)).sqrt()
    };
    let samples = 2000;
    let mut best = (f64::MAX, 0.0);
    for k in 0..=samples {
        let y = k as f64 / samples as f64;
        let dv = dist(y);
        if dv < best.0 {
            best = (dv, y);
        }
    }
    let step = 1.0 / samples as f64;
    let (mut lo, mut hi) = ((best.1 - step).max(0.0), (best.1 + step).min(1.0));
    let g = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..100 {
        let x1 = hi - g * (hi - lo);
        let x2 = lo + g * (hi - lo);
        if dist(x1) < dist(x2) {
            hi = x2;
        } else {
            lo = x1;
        }
    }
    best.0.min(dist(0.5 * (lo + hi))) * (1.0 - 1e-12)
}
