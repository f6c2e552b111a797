use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};

type Eval = Arc<dyn Fn(&[Complex64]) -> Complex64 + Send + Sync>;
type Dbar = Arc<dyn Fn(&[Complex64]) -> Vec<Complex64> + Send + Sync>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Smoothness {
    L2,
    ContinuousOnClosure,
    C1,
}

/// Operator symbol: a function on the domain, optionally with an analytic
/// `∂̄` (one component per coordinate).
#[derive(Clone)]
pub struct SymbolFn {
    pub name: String,
    pub smoothness: Smoothness,
    /// True when the symbol is known to be holomorphic.
    pub holomorphic: bool,
    eval: Eval,
    dbar: Option<Dbar>,
}

impl fmt::Debug for SymbolFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SymbolFn")
            .field("name", &self.name)
            .field("smoothness", &self.smoothness)
            .field("holomorphic", &self.holomorphic)
            .field("analytic_dbar", &self.dbar.is_some())
            .finish()
    }
}

/// Step of the central differences used for `∂̄` without an analytic form.
const FD_STEP: f64 = 1e-5;

impl SymbolFn {
    pub fn new(
        name: impl Into<String>,
        smoothness: Smoothness,
        eval: impl Fn(&[Complex64]) -> Complex64 + Send + Sync + 'static,
    ) -> Self {
        SymbolFn { name: name.into(), smoothness, holomorphic: false, eval: Arc::new(eval), dbar: None }
    }

    pub fn with_dbar(mut self, dbar: impl Fn(&[Complex64]) -> Vec<Complex64> + Send + Sync + 'static) -> Self {
        self.dbar = Some(Arc::new(dbar));
        self.smoothness = Smoothness::C1;
        self
    }

    pub fn holomorphic(mut self) -> Self {
        self.holomorphic = true;
        self
    }

    pub fn eval(&self, z: &[Complex64]) -> Complex64 {
        (self.eval)(z)
    }

    pub fn has_analytic_dbar(&self) -> bool {
        self.dbar.is_some()
    }

    /// `∂̄φ`; analytic when available, central differences for other C¹
    /// symbols, refused otherwise.
    pub fn dbar(&self, z: &[Complex64]) -> Result<Vec<Complex64>> {
        if self.holomorphic {
            return Ok(vec![Complex64::new(0.0, 0.0); z.len()]);
        }
        if let Some(d) = &self.dbar {
            return Ok(d(z));
        }
        if self.smoothness != Smoothness::C1 {
            return Err(Error::Unsupported(format!("∂̄ of the non-C¹ symbol {}", self.name)));
        }
        Ok(self.dbar_fd(z, FD_STEP))
    }

    /// `∂̄_k φ = ½(∂_{x_k} + i ∂_{y_k}) φ` by central differences.
    pub fn dbar_fd(&self, z: &[Complex64], h: f64) -> Vec<Complex64> {
        let mut p = z.to_vec();
        (0..z.len())
            .map(|k| {
                let z0 = p[k];
                p[k] = z0 + h;
                let xp = self.eval(&p);
                p[k] = z0 - h;
                let xm = self.eval(&p);
                p[k] = z0 + Complex64::new(0.0, h);
                let yp = self.eval(&p);
                p[k] = z0 - Complex64::new(0.0, h);
                let ym = self.eval(&p);
                p[k] = z0;
                let dx = (xp - xm) / (2.0 * h);
                let dy = (yp - ym) / (2.0 * h);
                (dx + Complex64::i() * dy) * 0.5
            })
            .collect()
    }

    /// Largest deviation between the analytic `∂̄` and central differences
    /// over the samples (0 when no analytic form is attached).
    pub fn dbar_consistency(&self, samples: &[Vec<Complex64>]) -> f64 {
        let Some(d) = &self.dbar else { return 0.0 };
        let mut worst: f64 = 0.0;
        for z in samples {
            let a = d(z);
            let b = self.dbar_fd(z, FD_STEP);
            for (x, y) in a.iter().zip(&b) {
                worst = worst.max((x - y).norm());
            }
        }
        worst
    }

    pub fn constant(c: Complex64) -> Self {
        SymbolFn::new(format!("{c}"), Smoothness::C1, move |_| c).holomorphic()
    }

    /// `conj(z_j)` (index from 0).
    pub fn conj_coord(j: usize) -> Self {
        SymbolFn::new(format!("conj(z{})", j + 1), Smoothness::C1, move |z| z[j].conj()).with_dbar(move |z| {
            let mut v = vec![Complex64::new(0.0, 0.0); z.len()];
            v[j] = Complex64::new(1.0, 0.0);
            v
        })
    }

    /// `z_j^k`.
    pub fn coord_power(j: usize, k: u32) -> Self {
        SymbolFn::new(format!("z{}^{k}", j + 1), Smoothness::C1, move |z| z[j].powu(k)).holomorphic()
    }

    /// `|z_j|²`.
    pub fn abs2(j: usize) -> Self {
        SymbolFn::new(format!("abs2(z{})", j + 1), Smoothness::C1, move |z| Complex64::new(z[j].norm_sqr(), 0.0))
            .with_dbar(move |z| {
                let mut v = vec![Complex64::new(0.0, 0.0); z.len()];
                v[j] = z[j];
                v
            })
    }

    /// Smooth bump `exp(1 − 1/(1 − |z − c|²/R²))` supported in the
    /// Euclidean ball of radius `R` about `c`.
    pub fn bump(center: Vec<Complex64>, radius: f64) -> Self {
        let c2 = center.clone();
        let r2 = radius * radius;
        let profile = move |z: &[Complex64], c: &[Complex64]| -> (f64, f64) {
            let s: f64 = z.iter().zip(c).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>() / r2;
            if s >= 1.0 {
                return (0.0, 0.0);
            }
            let q = 1.0 - s;
            let v = (1.0 - 1.0 / q).exp();
            // d/d(|z−c|²)
            (v, -v / (q * q * r2))
        };
        SymbolFn::new(format!("bump(r={radius})"), Smoothness::C1, move |z| Complex64::new(profile(z, &center).0, 0.0))
            .with_dbar(move |z| {
                let (_, dv) = profile(z, &c2);
                z.iter().zip(&c2).map(|(a, b)| (a - b) * dv).collect()
            })
    }

    /// Pointwise sum.
    pub fn sum(a: SymbolFn, b: SymbolFn) -> Self {
        let name = format!("{}+{}", a.name, b.name);
        let smooth = if a.smoothness == Smoothness::C1 && b.smoothness == Smoothness::C1 {
            Smoothness::C1
        } else if a.smoothness == Smoothness::L2 || b.smoothness == Smoothness::L2 {
            Smoothness::L2
        } else {
            Smoothness::ContinuousOnClosure
        };
        let holo = a.holomorphic && b.holomorphic;
        let both = a.dbar.is_some() || a.holomorphic;
        let both = both && (b.dbar.is_some() || b.holomorphic);
        let (ea, eb) = (a.clone(), b.clone());
        let mut s = SymbolFn::new(name, smooth, move |z| ea.eval(z) + eb.eval(z));
        s.holomorphic = holo;
        if both && !holo {
            s = s.with_dbar(move |z| {
                let da = a.dbar(z).unwrap();
                let db = b.dbar(z).unwrap();
                da.iter().zip(&db).map(|(x, y)| x + y).collect()
            });
        }
        s
    }
}
