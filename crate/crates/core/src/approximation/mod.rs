//! Local holomorphic approximation on Bergman balls: the functional ω,
//! boundary scans, the cutoff decomposition φ = φ₁ + φ₂, the ∂̄ energy of a
//! symbol, and holomorphy tests along boundary discs.

mod decompose;
mod scan;

pub use decompose::{decompose, DecomposeOptions, Decomposition, DecompositionAudit, ShellStat};
pub use scan::{boundary_parameters, boundary_scan, ScanParams, ScanReport, ScanRow, DECAY_THRESHOLD, RESOLVED_GAP_CELLS};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::Serialize;

use crate::domains::DomainSpec;
use crate::error::{Error, Result};
use crate::geometry::{GeodesicField, MetricBall};
use crate::kernel::{IndexSet, MonomialSet};
use crate::linalg::{inverse_quad_form, ZERO};
use crate::operators::SymbolFn;

/// Default degree of the polynomial competitors.
pub const DEFAULT_DEGREE: usize = 6;

/// Relative singular-value cutoff of the least-squares solve.
pub const RANK_CUTOFF: f64 = 1e-12;

/// Balls with fewer than this many nodes per unknown are not admissible.
pub const NODES_PER_UNKNOWN: usize = 10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum MeasureMode {
    /// `∫_B |φ − h|² dV`
    BergmanVolume,
    /// `μ(B)⁻¹ ∫_B |φ − h|² dμ`
    LiNormalized,
}

impl MeasureMode {
    pub fn name(self) -> &'static str {
        match self {
            MeasureMode::BergmanVolume => "bergman-volume",
            MeasureMode::LiNormalized => "li-normalized",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "bergman-volume" | "dv" => Ok(MeasureMode::BergmanVolume),
            "li-normalized" | "li" => Ok(MeasureMode::LiNormalized),
            _ => Err(Error::InvalidParameter(format!("unknown measure mode {s:?}"))),
        }
    }
}

/// Polynomial `Σ c_α (z − ζ)^α`.
#[derive(Clone, Debug)]
pub struct Approximant {
    pub center: Vec<Complex64>,
    pub monomials: MonomialSet,
    pub coeffs: Vec<Complex64>,
}

impl Approximant {
    pub fn eval(&self, z: &[Complex64]) -> Complex64 {
        let shifted: Vec<Complex64> = z.iter().zip(&self.center).map(|(a, b)| a - b).collect();
        let mut row = vec![ZERO; self.monomials.len()];
        self.monomials.eval_into(&shifted, &mut row);
        row.iter().zip(&self.coeffs).map(|(a, b)| a * b).sum()
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct OmegaValue {
    pub center: Vec<Complex64>,
    pub radius: f64,
    pub mode: MeasureMode,
    pub value: f64,
    pub degree: usize,
    pub nodes: usize,
    pub unknowns: usize,
    pub rank: usize,
    /// Ratio of the largest to the smallest retained singular value of the
    /// column-scaled design matrix.
    pub condition: f64,
    #[serde(skip)]
    pub approximant: Approximant,
}

impl OmegaValue {
    pub fn admissible(&self) -> bool {
        self.nodes >= NODES_PER_UNKNOWN * self.unknowns
    }
}

/// Number of polynomial competitors of total degree `≤ degree` in `dim`
/// variables.
pub fn unknowns(dim: usize, degree: usize) -> usize {
    MonomialSet::new(dim, degree, IndexSet::Total).len()
}

/// Weighted least-squares distance from `φ` to polynomials of degree
/// `≤ degree` centred at the ball centre.
pub fn omega(field: &GeodesicField, ball: &MetricBall, symbol: &SymbolFn, degree: usize, mode: MeasureMode) -> Result<OmegaValue> {
    if ball.is_empty() {
        return Err(Error::EmptyBall { radius: ball.radius });
    }
    let grid = field.grid();
    let weights: Vec<f64> = ball
        .members
        .iter()
        .map(|&i| match mode {
            MeasureMode::BergmanVolume => grid.weight(i) * field.node_density(i),
            MeasureMode::LiNormalized => grid.weight(i) / ball.lebesgue_mass,
        })
        .collect();
    let values: Vec<Complex64> = ball.members.iter().map(|&i| symbol.eval(grid.node(i))).collect();
    let points: Vec<&[Complex64]> = ball.members.iter().map(|&i| grid.node(i)).collect();
    let mut out = least_squares(&ball.center, &points, &weights, &values, degree)?;
    out.radius = ball.radius;
    out.mode = mode;
    Ok(out)
}

fn least_squares(
    center: &[Complex64],
    points: &[&[Complex64]],
    weights: &[f64],
    values: &[Complex64],
    degree: usize,
) -> Result<OmegaValue> {
    let dim = center.len();
    let monomials = MonomialSet::new(dim, degree, IndexSet::Total);
    let n = monomials.len();
    let m = points.len();
    if weights.iter().all(|&w| !(w > 0.0)) {
        return Err(Error::InvalidParameter("all least-squares weights vanish".into()));
    }
    if let Some(k) = values.iter().position(|v| !v.re.is_finite() || !v.im.is_finite()) {
        return Err(Error::InvalidParameter(format!("symbol is not finite at ball node {k}")));
    }
    let mut a = DMatrix::<Complex64>::zeros(m, n);
    let mut b = DVector::<Complex64>::zeros(m);
    let mut row = vec![ZERO; n];
    let mut shifted = vec![ZERO; dim];
    for (r, p) in points.iter().enumerate() {
        for j in 0..dim {
            shifted[j] = p[j] - center[j];
        }
        monomials.eval_into(&shifted, &mut row);
        let sw = weights[r].max(0.0).sqrt();
        for c in 0..n {
            a[(r, c)] = row[c] * sw;
        }
        b[r] = values[r] * sw;
    }
    let scale: Vec<f64> = (0..n)
        .map(|c| {
            let s = a.column(c).norm();
            if s > 0.0 {
                1.0 / s
            } else {
                0.0
            }
        })
        .collect();
    for c in 0..n {
        a.column_mut(c).scale_mut(scale[c]);
    }

    // thin QR, then an SVD of the small triangular factor
    let (q, r) = if m >= n {
        let qr = a.clone().qr();
        (qr.q(), qr.r())
    } else {
        (DMatrix::identity(m, m), a.clone())
    };
    let qb = q.adjoint() * &b;
    let svd = r.svd(true, true);
    let (u, vt) = (svd.u.as_ref().unwrap(), svd.v_t.as_ref().unwrap());
    let top = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let mut y = DVector::<Complex64>::zeros(n);
    let mut rank = 0;
    let mut smallest = f64::INFINITY;
    if top > 0.0 {
        for (k, &s) in svd.singular_values.iter().enumerate() {
            if s > RANK_CUTOFF * top {
                rank += 1;
                smallest = smallest.min(s);
                let proj = u.column(k).dotc(&qb) / s;
                y += vt.row(k).adjoint() * proj;
            }
        }
    }
    let coeffs: Vec<Complex64> = (0..n).map(|c| y[c] * scale[c]).collect();
    let fitted = &a * &y;
    let value: f64 = (&b - fitted).iter().map(|v| v.norm_sqr()).sum();
    Ok(OmegaValue {
        center: center.to_vec(),
        radius: 0.0,
        mode: MeasureMode::BergmanVolume,
        value,
        degree,
        nodes: m,
        unknowns: n,
        rank,
        condition: if rank > 0 { top / smallest } else { f64::INFINITY },
        approximant: Approximant { center: center.to_vec(), monomials, coeffs },
    })
}

/// `∫_B ‖∂̄φ‖²_g dV`, the (0,1)-form norm taken with the inverse metric.
pub fn dbar_functional(field: &GeodesicField, ball: &MetricBall, symbol: &SymbolFn) -> Result<f64> {
    let grid = field.grid();
    let engine = field.engine();
    let d = grid.dim();
    let mut total = 0.0;
    for &i in &ball.members {
        let z = grid.node(i);
        let a = symbol.dbar(z)?;
        let g = engine.metric_matrix_unchecked(z);
        let conj: Vec<Complex64> = a.iter().map(|c| c.conj()).collect();
        total += inverse_quad_form(&g, d, &conj)? * field.node_density(i) * grid.weight(i);
    }
    Ok(total)
}

/// Largest defining-function residual accepted for a boundary disc.
pub const BOUNDARY_TOLERANCE: f64 = 1e-8;

/// Mean of `|∂̄_w (φ∘F)(w)|` over sample points of the unit disc, by central
/// differences. `F` must map the disc into the boundary.
pub fn variety_test(
    dom: &DomainSpec,
    symbol: &SymbolFn,
    disc_map: &dyn Fn(Complex64) -> Vec<Complex64>,
    samples: usize,
) -> Result<f64> {
    if samples == 0 {
        return Err(Error::InvalidParameter("need at least one sample".into()));
    }
    let pts = disc_samples(samples);
    let h = 1e-5;
    for &w in &pts {
        for q in [w, w + h, w - h, w + Complex64::new(0.0, h), w - Complex64::new(0.0, h)] {
            let z = disc_map(q);
            if z.len() != dom.dim {
                return Err(Error::DimensionMismatch { expected: dom.dim, got: z.len() });
            }
            let residual = dom.defining_value(&z).abs();
            if residual > BOUNDARY_TOLERANCE {
                return Err(Error::NotOnBoundary { residual });
            }
        }
    }
    let f = |w: Complex64| symbol.eval(&disc_map(w));
    let mut total = 0.0;
    for &w in &pts {
        let dx = (f(w + h) - f(w - h)) / (2.0 * h);
        let dy = (f(w + Complex64::new(0.0, h)) - f(w - Complex64::new(0.0, h))) / (2.0 * h);
        total += ((dx + Complex64::i() * dy) * 0.5).norm();
    }
    Ok(total / pts.len() as f64)
}

/// Deterministic points on concentric circles of radius ≤ 0.8.
fn disc_samples(count: usize) -> Vec<Complex64> {
    let rings = (count as f64).sqrt().ceil() as usize;
    let per = count.div_ceil(rings);
    let mut out = Vec::with_capacity(count);
    'outer: for k in 0..rings {
        let r = 0.8 * (k + 1) as f64 / rings as f64;
        for j in 0..per {
            if out.len() == count {
                break 'outer;
            }
            let a = 2.0 * std::f64::consts::PI * (j as f64 + 0.5 * k as f64) / per as f64;
            out.push(Complex64::from_polar(r, a));
        }
    }
    out
}

/// Analytic disc in a face of the polydisc: coordinate `fixed` is held at
/// `e^{iθ}`, coordinate `free` runs over the unit disc, the rest are 0.
pub fn polydisc_face_disc(dim: usize, fixed: usize, theta: f64, free: usize) -> impl Fn(Complex64) -> Vec<Complex64> {
    move |w| {
        let mut z = vec![ZERO; dim];
        z[fixed] = Complex64::from_polar(1.0, theta);
        z[free] = w;
        z
    }
}
