use num_complex::Complex64;
use serde::Serialize;

use super::GeodesicField;
use crate::domains::{norm2, DomainKind, DomainSpec};
use crate::error::{Error, Result};
use crate::kernel::KernelEngine;

/// Default scaling of the chart coordinates.
pub const DEFAULT_CHART_SCALE: f64 = 0.5;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
enum ChartKind {
    Ball,
    Polydisc,
}

/// `Φ_ζ(w) = ψ_ζ(ρ w)` for the automorphism `ψ_ζ` of a homogeneous model
/// domain with `ψ_ζ(0) = ζ`, defined on the unit ball of `C^d`.
#[derive(Clone, Debug, Serialize)]
pub struct ChartMap {
    kind: ChartKind,
    pub center: Vec<Complex64>,
    pub scale: f64,
}

/// Chart centred at `zeta` with the default scale.
pub fn chart(dom: &DomainSpec, zeta: &[Complex64]) -> Result<ChartMap> {
    ChartMap::new(dom, zeta, DEFAULT_CHART_SCALE)
}

fn dot(z: &[Complex64], w: &[Complex64]) -> Complex64 {
    z.iter().zip(w).map(|(a, b)| a * b.conj()).sum()
}

impl ChartMap {
    pub fn new(dom: &DomainSpec, zeta: &[Complex64], scale: f64) -> Result<Self> {
        let kind = match dom.kind {
            DomainKind::Disc | DomainKind::Ball => ChartKind::Ball,
            DomainKind::Polydisc => ChartKind::Polydisc,
            _ => return Err(Error::Unsupported(format!("no automorphism chart on {}", dom.label))),
        };
        if !(scale > 0.0 && scale <= 1.0) {
            return Err(Error::InvalidParameter(format!("chart scale must lie in (0,1], got {scale}")));
        }
        if !dom.contains(zeta)? {
            return Err(Error::OutsideDomain);
        }
        Ok(ChartMap { kind, center: zeta.to_vec(), scale })
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    fn check(&self, w: &[Complex64]) -> Result<()> {
        if w.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: w.len() });
        }
        if norm2(w) >= 1.0 {
            return Err(Error::InvalidParameter("chart coordinates must lie in the unit ball".into()));
        }
        Ok(())
    }

    pub fn forward(&self, w: &[Complex64]) -> Result<Vec<Complex64>> {
        self.check(w)?;
        Ok(self.forward_unchecked(w))
    }

    pub(crate) fn forward_unchecked(&self, w: &[Complex64]) -> Vec<Complex64> {
        let a = &self.center;
        let rho = self.scale;
        match self.kind {
            ChartKind::Polydisc => {
                a.iter().zip(w).map(|(&a, &w)| (w * rho + a) / (a.conj() * w * rho + 1.0)).collect()
            }
            ChartKind::Ball => {
                // (a + ρ P_a w + s_a ρ Q_a w) / (1 + ρ⟨w,a⟩)
                let a2 = norm2(a);
                let denom = dot(w, a) * rho + 1.0;
                if a2 == 0.0 {
                    return w.iter().map(|&v| v * rho).collect();
                }
                let s = (1.0 - a2).sqrt();
                let coef = dot(w, a) / a2;
                a.iter()
                    .zip(w)
                    .map(|(&aj, &wj)| {
                        let p = aj * coef;
                        let q = wj - p;
                        (aj + p * rho + q * (s * rho)) / denom
                    })
                    .collect()
            }
        }
    }

    /// Inverse map from the image back to chart coordinates.
    pub fn inverse(&self, z: &[Complex64]) -> Vec<Complex64> {
        let a = &self.center;
        let rho = self.scale;
        match self.kind {
            ChartKind::Polydisc => a.iter().zip(z).map(|(&a, &z)| (z - a) / ((Complex64::new(1.0, 0.0) - a.conj() * z) * rho)).collect(),
            ChartKind::Ball => {
                // the involution ψ_a(z) = (a − P_a z − s_a Q_a z)/(1 − ⟨z,a⟩), then w = −ψ_a(z)/ρ
                let a2 = norm2(a);
                if a2 == 0.0 {
                    return z.iter().map(|&v| v / rho).collect();
                }
                let s = (1.0 - a2).sqrt();
                let coef = dot(z, a) / a2;
                let denom = Complex64::new(1.0, 0.0) - dot(z, a);
                a.iter()
                    .zip(z)
                    .map(|(&aj, &zj)| {
                        let p = aj * coef;
                        let q = zj - p;
                        -(aj - p - q * s) / (denom * rho)
                    })
                    .collect()
            }
        }
    }

    /// Complex Jacobian determinant `det Φ'_ζ(w)`.
    pub fn jacobian_det(&self, w: &[Complex64]) -> Complex64 {
        let a = &self.center;
        let rho = self.scale;
        match self.kind {
            ChartKind::Polydisc => a
                .iter()
                .zip(w)
                .map(|(&a, &w)| {
                    let q = a.conj() * w * rho + 1.0;
                    rho * (1.0 - a.norm_sqr()) / (q * q)
                })
                .product(),
            ChartKind::Ball => {
                let d = a.len() as i32;
                let q = dot(w, a) * rho + 1.0;
                let num = rho.powi(d) * (1.0 - norm2(a)).powf((d as f64 + 1.0) / 2.0);
                Complex64::new(num, 0.0) / q.powi(d + 1)
            }
        }
    }

    /// `∂_w log |det Φ'_ζ(w)|`.
    pub fn log_det_gradient(&self, w: &[Complex64]) -> Vec<Complex64> {
        let a = &self.center;
        let rho = self.scale;
        match self.kind {
            ChartKind::Polydisc => a.iter().zip(w).map(|(&a, &w)| -(a.conj() * rho) / (a.conj() * w * rho + 1.0)).collect(),
            ChartKind::Ball => {
                let c = (a.len() as f64 + 1.0) / 2.0;
                let q = dot(w, a) * rho + 1.0;
                a.iter().map(|aj| -(aj.conj() * (c * rho)) / q).collect()
            }
        }
    }

    /// Largest `|∂̄ Φ_k|` over the samples, by central differences.
    pub fn cauchy_riemann_residual(&self, samples: &[Vec<Complex64>]) -> f64 {
        let h = 1e-6;
        let mut worst: f64 = 0.0;
        for w in samples {
            for j in 0..self.dim() {
                let shifted = |dz: Complex64| {
                    let mut p = w.clone();
                    p[j] += dz;
                    self.forward_unchecked(&p)
                };
                let (xp, xm) = (shifted(Complex64::new(h, 0.0)), shifted(Complex64::new(-h, 0.0)));
                let (yp, ym) = (shifted(Complex64::new(0.0, h)), shifted(Complex64::new(0.0, -h)));
                for k in 0..self.dim() {
                    let dx = (xp[k] - xm[k]) / (2.0 * h);
                    let dy = (yp[k] - ym[k]) / (2.0 * h);
                    worst = worst.max(((dx + Complex64::i() * dy) * 0.5).norm());
                }
            }
        }
        worst
    }
}

/// `β_ζ(u,w) = B(Φ(u),Φ(w)) det Φ'(u) conj(det Φ'(w))`.
pub fn beta(chart: &ChartMap, engine: &KernelEngine, u: &[Complex64], w: &[Complex64]) -> Result<Complex64> {
    let zu = chart.forward(u)?;
    let zw = chart.forward(w)?;
    let b = engine.kernel(&zu, &zw)?;
    Ok(b * chart.jacobian_det(u) * chart.jacobian_det(w).conj())
}

/// `(min, max)` of `β_ζ(w,w)` over the samples.
pub fn beta_bracket(chart: &ChartMap, engine: &KernelEngine, samples: &[Vec<Complex64>]) -> Result<(f64, f64)> {
    let mut lo = f64::INFINITY;
    let mut hi: f64 = 0.0;
    for w in samples {
        let v = beta(chart, engine, w, w)?.re;
        lo = lo.min(v);
        hi = hi.max(v);
    }
    Ok((lo, hi))
}

/// `(min, max)` of `dist(Φ(w1),Φ(w2)) / |w1 − w2|` over sample pairs.
pub fn chart_lipschitz_bracket(
    field: &GeodesicField,
    chart: &ChartMap,
    pairs: &[(Vec<Complex64>, Vec<Complex64>)],
) -> Result<(f64, f64)> {
    let mut lo = f64::INFINITY;
    let mut hi: f64 = 0.0;
    for (w1, w2) in pairs {
        let e: f64 = w1.iter().zip(w2).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt();
        if e == 0.0 {
            continue;
        }
        let d = field.distance(&chart.forward(w1)?, &chart.forward(w2)?)?;
        lo = lo.min(d / e);
        hi = hi.max(d / e);
    }
    Ok((lo, hi))
}
