//! Bergman kernel, Bergman metric, volume density and normalized kernel
//! sections, by closed form on the homogeneous models and by orthonormalized
//! monomials otherwise.

mod basis;

pub use basis::{orthonormalize, orthonormalize_with, IndexSet, MonomialSet, OrthonormalBasis, DEFAULT_GRAM_CUTOFF};
pub(crate) use basis::{BlockEvaluator, CHUNK};

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;

use crate::domains::{DomainKind, DomainSpec};
use crate::error::{Error, Result};
use crate::linalg::{det_hermitian, inverse_quad_form, min_eigenvalue, ZERO};

#[derive(Clone, Debug)]
pub enum KernelMode {
    ClosedForm,
    Numerical(Arc<OrthonormalBasis>),
}

/// Hermitian matrix `g_{jk̄} = ∂_j ∂̄_k log B(z,z)` at a point, row-major.
#[derive(Clone, Debug)]
pub struct MetricTensor {
    pub point: Vec<Complex64>,
    pub dim: usize,
    pub g: Vec<Complex64>,
    pub det: f64,
}

impl MetricTensor {
    pub fn entry(&self, j: usize, k: usize) -> Complex64 {
        self.g[j * self.dim + k]
    }

    /// Squared length `Σ g_{jk̄} v_j conj(v_k)` of a tangent vector.
    pub fn length_sqr(&self, v: &[Complex64]) -> f64 {
        hermitian_length_sqr(&self.g, self.dim, v)
    }

    /// Squared `g`-norm of a (1,0)-form with coefficients `b`.
    pub fn form_norm_sqr(&self, b: &[Complex64]) -> Result<f64> {
        inverse_quad_form(&self.g, self.dim, b)
    }

    /// Squared `g`-norm of a (0,1)-form `Σ a_k dz̄_k`.
    pub fn antiform_norm_sqr(&self, a: &[Complex64]) -> Result<f64> {
        let conj: Vec<Complex64> = a.iter().map(|c| c.conj()).collect();
        inverse_quad_form(&self.g, self.dim, &conj)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        min_eigenvalue(&self.g, self.dim)
    }
}

pub(crate) fn hermitian_length_sqr(g: &[Complex64], d: usize, v: &[Complex64]) -> f64 {
    let mut s = 0.0;
    for j in 0..d {
        for k in 0..d {
            s += (g[j * d + k] * v[j] * v[k].conj()).re;
        }
    }
    s
}

#[derive(Clone, Debug)]
pub struct KernelEngine {
    pub domain: DomainSpec,
    pub mode: KernelMode,
}

fn hdot(z: &[Complex64], w: &[Complex64]) -> Complex64 {
    z.iter().zip(w).map(|(a, b)| a * b.conj()).sum()
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// Local data of `log B(z,z)`: value, holomorphic gradient and complex
/// Hessian.
struct LogKernelJet {
    diag: f64,
    grad: Vec<Complex64>,
    hess: Vec<Complex64>,
}

impl KernelEngine {
    /// Classical closed forms on disc, ball and polydisc.
    pub fn closed_form(domain: DomainSpec) -> Result<Self> {
        if !domain.has_closed_form_kernel() {
            return Err(Error::Unsupported(format!("no closed-form kernel on {}", domain.label)));
        }
        Ok(KernelEngine { domain, mode: KernelMode::ClosedForm })
    }

    pub fn numerical(domain: DomainSpec, basis: OrthonormalBasis) -> Result<Self> {
        if basis.dim() != domain.dim {
            return Err(Error::DimensionMismatch { expected: domain.dim, got: basis.dim() });
        }
        Ok(KernelEngine { domain, mode: KernelMode::Numerical(Arc::new(basis)) })
    }

    pub fn dim(&self) -> usize {
        self.domain.dim
    }

    pub fn is_closed_form(&self) -> bool {
        matches!(self.mode, KernelMode::ClosedForm)
    }

    pub fn basis(&self) -> Option<&OrthonormalBasis> {
        match &self.mode {
            KernelMode::Numerical(b) => Some(b),
            KernelMode::ClosedForm => None,
        }
    }

    fn interior(&self, z: &[Complex64]) -> Result<()> {
        if !self.domain.contains(z)? {
            return Err(Error::OutsideDomain);
        }
        Ok(())
    }

    pub fn kernel(&self, z: &[Complex64], w: &[Complex64]) -> Result<Complex64> {
        self.interior(z)?;
        self.interior(w)?;
        self.kernel_unchecked(z, w)
    }

    pub(crate) fn kernel_unchecked(&self, z: &[Complex64], w: &[Complex64]) -> Result<Complex64> {
        let one = Complex64::new(1.0, 0.0);
        match &self.mode {
            KernelMode::ClosedForm => match self.domain.kind {
                DomainKind::Disc | DomainKind::Ball => {
                    let d = self.dim();
                    let q = one - hdot(z, w);
                    if q.norm() == 0.0 {
                        return Err(Error::OutsideDomain);
                    }
                    Ok(Complex64::new(factorial(d) / PI.powi(d as i32), 0.0) / q.powu(d as u32 + 1))
                }
                DomainKind::Polydisc => {
                    let mut v = one;
                    for (a, b) in z.iter().zip(w) {
                        let q = one - a * b.conj();
                        if q.norm() == 0.0 {
                            return Err(Error::OutsideDomain);
                        }
                        v /= q * q * PI;
                    }
                    Ok(v)
                }
                _ => unreachable!("closed form checked at construction"),
            },
            KernelMode::Numerical(b) => {
                let fz = b.eval(z);
                let fw = b.eval(w);
                Ok(fz.iter().zip(&fw).map(|(a, c)| a * c.conj()).sum())
            }
        }
    }

    /// `B(z,z)`.
    pub fn diag(&self, z: &[Complex64]) -> Result<f64> {
        self.interior(z)?;
        Ok(self.diag_unchecked(z))
    }

    pub(crate) fn diag_unchecked(&self, z: &[Complex64]) -> f64 {
        match &self.mode {
            KernelMode::ClosedForm => self.kernel_unchecked(z, z).map(|v| v.re).unwrap_or(f64::INFINITY),
            KernelMode::Numerical(b) => b.eval(z).iter().map(|c| c.norm_sqr()).sum(),
        }
    }

    fn log_jet(&self, z: &[Complex64]) -> LogKernelJet {
        let d = self.dim();
        match &self.mode {
            KernelMode::ClosedForm => {
                let mut grad = vec![ZERO; d];
                let mut hess = vec![ZERO; d * d];
                match self.domain.kind {
                    DomainKind::Polydisc => {
                        for j in 0..d {
                            let t = 1.0 - z[j].norm_sqr();
                            grad[j] = z[j].conj() * (2.0 / t);
                            hess[j * d + j] = Complex64::new(2.0 / (t * t), 0.0);
                        }
                    }
                    _ => {
                        let c = d as f64 + 1.0;
                        let t = 1.0 - z.iter().map(|v| v.norm_sqr()).sum::<f64>();
                        for j in 0..d {
                            grad[j] = z[j].conj() * (c / t);
                            for k in 0..d {
                                let delta = if j == k { 1.0 / t } else { 0.0 };
                                hess[j * d + k] = (z[j].conj() * z[k] / (t * t) + delta) * c;
                            }
                        }
                    }
                }
                LogKernelJet { diag: self.diag_unchecked(z), grad, hess }
            }
            KernelMode::Numerical(b) => {
                // B = Σ|φ|², ∂_j B = Σ ∂_jφ conj φ, ∂_j ∂̄_k B = Σ ∂_jφ conj(∂_kφ)
                let (vals, parts) = b.eval_with_partials(z);
                let diag: f64 = vals.iter().map(|c| c.norm_sqr()).sum();
                let mut db = vec![ZERO; d];
                let mut ddb = vec![ZERO; d * d];
                for (n, v) in vals.iter().enumerate() {
                    let p = &parts[n * d..(n + 1) * d];
                    for j in 0..d {
                        db[j] += p[j] * v.conj();
                        for k in 0..d {
                            ddb[j * d + k] += p[j] * p[k].conj();
                        }
                    }
                }
                let grad: Vec<Complex64> = db.iter().map(|g| g / diag).collect();
                let mut hess = vec![ZERO; d * d];
                for j in 0..d {
                    for k in 0..d {
                        hess[j * d + k] = ddb[j * d + k] / diag - grad[j] * grad[k].conj();
                    }
                }
                LogKernelJet { diag, grad, hess }
            }
        }
    }

    /// Metric from exact derivatives (analytic in closed-form mode,
    /// differentiated polynomials in numerical mode).
    pub fn metric_exact(&self, z: &[Complex64]) -> Result<MetricTensor> {
        self.interior(z)?;
        let jet = self.log_jet(z);
        self.finish_metric(z, jet.hess)
    }

    /// Metric without the interior check or the positivity test; used on
    /// bulk edge and node evaluations.
    pub(crate) fn metric_matrix_unchecked(&self, z: &[Complex64]) -> Vec<Complex64> {
        self.log_jet(z).hess
    }

    fn finish_metric(&self, z: &[Complex64], g: Vec<Complex64>) -> Result<MetricTensor> {
        let d = self.dim();
        let lo = min_eigenvalue(&g, d);
        if !(lo > 0.0) {
            return Err(Error::NotPositiveDefinite { min_eigenvalue: lo });
        }
        Ok(MetricTensor { point: z.to_vec(), dim: d, det: det_hermitian(&g, d), g })
    }

    /// Metric at `ζ`. Closed-form mode uses analytic second derivatives; the
    /// numerical mode differentiates `log B(z,z)` by central differences with
    /// step `h` and one Richardson extrapolation, refusing points with
    /// `boundary_gap < 10 h`.
    pub fn metric(&self, zeta: &[Complex64], h: f64) -> Result<MetricTensor> {
        self.interior(zeta)?;
        if self.is_closed_form() {
            return self.metric_exact(zeta);
        }
        if !(h > 0.0) {
            return Err(Error::InvalidParameter("difference step must be positive".into()));
        }
        let gap = self.domain.boundary_gap_unchecked(zeta);
        if gap < 10.0 * h {
            return Err(Error::NearBoundary { gap, required: 10.0 * h });
        }
        let coarse = self.fd_levi(zeta, h);
        let fine = self.fd_levi(zeta, h / 2.0);
        let g: Vec<Complex64> = fine.iter().zip(&coarse).map(|(f, c)| (f * 4.0 - c) / 3.0).collect();
        self.finish_metric(zeta, g)
    }

    /// Levi form of `log B(z,z)` from the real Hessian by central differences.
    fn fd_levi(&self, z: &[Complex64], h: f64) -> Vec<Complex64> {
        let d = self.dim();
        let n = 2 * d;
        let lb = |x: &[f64]| -> f64 {
            let p: Vec<Complex64> = (0..d).map(|j| Complex64::new(x[2 * j], x[2 * j + 1])).collect();
            self.diag_unchecked(&p).ln()
        };
        let x0: Vec<f64> = z.iter().flat_map(|c| [c.re, c.im]).collect();
        let f0 = lb(&x0);
        let mut hess = vec![0.0; n * n];
        for a in 0..n {
            for b in a..n {
                let v = if a == b {
                    let mut xp = x0.clone();
                    let mut xm = x0.clone();
                    xp[a] += h;
                    xm[a] -= h;
                    (lb(&xp) - 2.0 * f0 + lb(&xm)) / (h * h)
                } else {
                    let shifted = |sa: f64, sb: f64| {
                        let mut x = x0.clone();
                        x[a] += sa * h;
                        x[b] += sb * h;
                        lb(&x)
                    };
                    (shifted(1.0, 1.0) - shifted(1.0, -1.0) - shifted(-1.0, 1.0) + shifted(-1.0, -1.0)) / (4.0 * h * h)
                };
                hess[a * n + b] = v;
                hess[b * n + a] = v;
            }
        }
        // ∂_j ∂̄_k = ¼[(∂xj∂xk + ∂yj∂yk) + i(∂xj∂yk − ∂yj∂xk)]
        let mut g = vec![ZERO; d * d];
        for j in 0..d {
            for k in 0..d {
                let (xj, yj, xk, yk) = (2 * j, 2 * j + 1, 2 * k, 2 * k + 1);
                let re = hess[xj * n + xk] + hess[yj * n + yk];
                let im = hess[xj * n + yk] - hess[yj * n + xk];
                g[j * d + k] = Complex64::new(0.25 * re, 0.25 * im);
            }
        }
        g
    }

    /// `det[g_{jk̄}]`, the density of the Bergman volume against Lebesgue
    /// measure.
    pub fn volume_density(&self, zeta: &[Complex64]) -> Result<f64> {
        Ok(self.metric_exact(zeta)?.det)
    }

    /// `∂_j log B(z,z)`.
    pub fn log_gradient(&self, z: &[Complex64]) -> Result<Vec<Complex64>> {
        self.interior(z)?;
        Ok(self.log_jet(z).grad)
    }

    /// `‖∂ log B(z,z)‖²_g`, the self-bounded-gradient integrand.
    pub fn log_gradient_norm_sqr(&self, z: &[Complex64]) -> Result<f64> {
        self.interior(z)?;
        let jet = self.log_jet(z);
        let m = self.finish_metric(z, jet.hess)?;
        let _ = jet.diag;
        m.form_norm_sqr(&jet.grad)
    }

    /// Normalized kernel section `s_ζ(z) = B(z,ζ)/√B(ζ,ζ)`.
    pub fn s_section(&self, zeta: &[Complex64], z: &[Complex64]) -> Result<Complex64> {
        let b = self.kernel(z, zeta)?;
        Ok(b / self.diag_unchecked(zeta).sqrt())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domains::{build_grid, GridScheme};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn disc_numeric(n: usize) -> KernelEngine {
        let dom = DomainSpec::disc();
        let g = build_grid(&dom, 0.05, GridScheme::Polar).unwrap();
        let b = orthonormalize(&dom, &g, n, DEFAULT_GRAM_CUTOFF).unwrap();
        KernelEngine::numerical(dom, b).unwrap()
    }

    #[test]
    fn closed_form_values_at_origin() {
        let disc = KernelEngine::closed_form(DomainSpec::disc()).unwrap();
        assert!((disc.kernel(&[c(0.0, 0.0)], &[c(0.0, 0.0)]).unwrap().re - 1.0 / PI).abs() < 1e-15);
        let bidisc = KernelEngine::closed_form(DomainSpec::polydisc(2)).unwrap();
        let o = [c(0.0, 0.0), c(0.0, 0.0)];
        assert!((bidisc.kernel(&o, &o).unwrap().re - 1.0 / (PI * PI)).abs() < 1e-15);
        let ball = KernelEngine::closed_form(DomainSpec::ball(2)).unwrap();
        assert!((ball.kernel(&o, &o).unwrap().re - 2.0 / (PI * PI)).abs() < 1e-15);
    }

    #[test]
    fn closed_form_rejects_egg() {
        assert!(matches!(KernelEngine::closed_form(DomainSpec::egg(2)), Err(Error::Unsupported(_))));
    }

    #[test]
    fn metric_examples() {
        let disc = KernelEngine::closed_form(DomainSpec::disc()).unwrap();
        assert!((disc.metric(&[c(0.0, 0.0)], 1e-3).unwrap().g[0].re - 2.0).abs() < 1e-14);
        let g = disc.metric(&[c(0.5, 0.0)], 1e-3).unwrap().g[0].re;
        assert!((g - 2.0 / 0.5625).abs() < 1e-12);
        let ball = KernelEngine::closed_form(DomainSpec::ball(2)).unwrap();
        let m = ball.metric(&[c(0.0, 0.0), c(0.0, 0.0)], 1e-3).unwrap();
        assert!((m.entry(0, 0).re - 3.0).abs() < 1e-14 && m.entry(0, 1).norm() < 1e-15);
        assert!((m.det - 9.0).abs() < 1e-12);
        let bidisc = KernelEngine::closed_form(DomainSpec::polydisc(2)).unwrap();
        assert!((bidisc.volume_density(&[c(0.0, 0.0), c(0.0, 0.0)]).unwrap() - 4.0).abs() < 1e-14);
        assert!((disc.volume_density(&[c(0.0, 0.0)]).unwrap() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn ball_metric_matches_finite_differences_of_closed_form() {
        // independent route: numerical Levi form of the closed-form log-kernel
        let ball = KernelEngine::closed_form(DomainSpec::ball(2)).unwrap();
        let z = [c(0.3, -0.1), c(0.2, 0.25)];
        let exact = ball.metric_exact(&z).unwrap();
        let fd = ball.fd_levi(&z, 1e-4);
        for (a, b) in exact.g.iter().zip(&fd) {
            assert!((a - b).norm() < 1e-5, "{a} vs {b}");
        }
    }

    #[test]
    fn s_section_examples() {
        let disc = KernelEngine::closed_form(DomainSpec::disc()).unwrap();
        let o = [c(0.0, 0.0)];
        assert!((disc.s_section(&o, &o).unwrap().re - 1.0 / PI.sqrt()).abs() < 1e-14);
        let v = disc.s_section(&[c(0.9, 0.0)], &o).unwrap();
        assert!((v.re - 0.19 / PI.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn s_section_has_unit_norm_on_polar_grid() {
        let disc = KernelEngine::closed_form(DomainSpec::disc()).unwrap();
        let g = build_grid(&DomainSpec::disc(), 0.02, GridScheme::Polar).unwrap();
        for zeta in [0.0, 0.5, 0.8] {
            let zeta = [c(zeta, 0.0)];
            let n: f64 = g.nodes().zip(g.weights()).map(|(z, w)| w * disc.s_section(&zeta, z).unwrap().norm_sqr()).sum();
            assert!((n - 1.0).abs() < 1e-6, "{n}");
        }
    }

    #[test]
    fn numerical_kernel_hermitian_and_monotone() {
        let e = disc_numeric(20);
        let (z, w) = ([c(0.3, 0.4)], [c(-0.5, 0.1)]);
        let a = e.kernel(&z, &w).unwrap();
        let b = e.kernel(&w, &z).unwrap();
        assert!((a - b.conj()).norm() <= 1e-12);
        let mut prev = 0.0;
        for n in [0, 5, 10, 20] {
            let v = disc_numeric(n).diag(&z).unwrap();
            assert!(v >= prev);
            prev = v;
        }
    }

    #[test]
    fn numerical_metric_routes_agree() {
        let e = disc_numeric(40);
        let z = [c(0.4, 0.2)];
        let exact = e.metric_exact(&z).unwrap().g[0].re;
        let fd = e.metric(&z, 1e-3).unwrap().g[0].re;
        let closed = 2.0 / (1.0 - 0.2f64).powi(2);
        assert!((exact - closed).abs() / closed < 1e-6);
        assert!((fd - exact).abs() / exact < 1e-6, "{fd} vs {exact}");
    }

    #[test]
    fn near_boundary_refused() {
        let e = disc_numeric(10);
        assert!(matches!(e.metric(&[c(0.995, 0.0)], 1e-3), Err(Error::NearBoundary { .. })));
    }

    #[test]
    fn sbg_integrand_on_disc() {
        let disc = KernelEngine::closed_form(DomainSpec::disc()).unwrap();
        assert!((disc.log_gradient_norm_sqr(&[c(0.5, 0.0)]).unwrap() - 0.5).abs() < 1e-14);
    }
}
