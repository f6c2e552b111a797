//! Estimates of the comparison constants between the Bergman kernel, the
//! metric, its volume form and Lebesgue measure, the self-bounded-gradient
//! constant, and the equivalence conditions tying them together.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::domains::QuadratureGrid;
use crate::error::{Error, Result};
use crate::geometry::{chart, GeodesicField};
use crate::kernel::KernelEngine;
use crate::operators::SymbolFn;

/// Nodes closer to the boundary than this many grid resolutions are left out
/// of sup estimates (capped by `MAX_ADMISSIBLE_GAP`).
pub const ADMISSIBLE_GAP_FACTOR: f64 = 10.0;

pub const MAX_ADMISSIBLE_GAP: f64 = 0.05;

/// Smallest boundary gap of the nodes used for sup estimates.
pub fn admissible_gap(grid: &QuadratureGrid) -> f64 {
    (ADMISSIBLE_GAP_FACTOR * grid.resolution()).min(MAX_ADMISSIBLE_GAP)
}

#[derive(Clone, Debug, Serialize)]
pub struct ConstantEstimate {
    pub name: String,
    /// `max(max, 1/min)` for two-sided brackets, the sup otherwise.
    pub value: f64,
    pub min: f64,
    pub max: f64,
    pub samples: usize,
    pub description: String,
    /// Relative change under grid refinement, when measured.
    pub stability: Option<f64>,
}

impl ConstantEstimate {
    fn bracket(name: &str, description: String, values: &[f64]) -> Self {
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        ConstantEstimate {
            name: name.into(),
            value: max.max(1.0 / min),
            min,
            max,
            samples: values.len(),
            description,
            stability: None,
        }
    }

    fn sup(name: &str, description: String, values: &[f64]) -> Self {
        let mut c = Self::bracket(name, description, values);
        c.value = c.max;
        c
    }

    pub fn is_finite(&self) -> bool {
        self.value.is_finite() && self.samples > 0
    }

    /// Records the relative change against an estimate on a finer grid.
    pub fn with_refinement(mut self, finer: &ConstantEstimate) -> Self {
        self.stability = Some((finer.value - self.value).abs() / self.value.abs().max(f64::MIN_POSITIVE));
        self
    }
}

/// `|B(z,ζ)|² / (B(z,z) B(ζ,ζ))`.
pub fn kernel_ratio(engine: &KernelEngine, z: &[Complex64], zeta: &[Complex64]) -> Result<f64> {
    let b = engine.kernel(z, zeta)?;
    Ok(b.norm_sqr() / (engine.diag(z)? * engine.diag(zeta)?))
}

/// Off-diagonal kernel bound over pairs at graph distance `< r0`.
pub fn off_diagonal_check(field: &GeodesicField, centers: &[Vec<Complex64>], r0: f64) -> Result<ConstantEstimate> {
    let engine = field.engine();
    let grid = field.grid();
    let mut ratios = Vec::new();
    for zeta in centers {
        ratios.push(kernel_ratio(engine, zeta, zeta)?);
        let ball = field.ball(zeta, r0)?;
        for &i in &ball.members {
            ratios.push(kernel_ratio(engine, grid.node(i), zeta)?);
        }
    }
    Ok(ConstantEstimate::bracket("C3", format!("|B(z,ζ)|²/(B(z,z)B(ζ,ζ)) for dist(z,ζ) < {r0}"), &ratios))
}

/// Mean-value constant: `u(ζ) r^{2d} / (B(ζ,ζ) ∫_{B(ζ,r)} u dμ)` for
/// `u = |f|²`.
pub fn mean_value_check(field: &GeodesicField, f: &SymbolFn, r: f64, centers: &[Vec<Complex64>]) -> Result<ConstantEstimate> {
    let engine = field.engine();
    let grid = field.grid();
    let d = grid.dim() as i32;
    let mut ratios = Vec::new();
    for zeta in centers {
        let ball = match field.ball(zeta, r) {
            Ok(b) => b,
            Err(Error::EmptyBall { .. }) => continue,
            Err(e) => return Err(e),
        };
        let mass: f64 = ball.members.iter().map(|&i| f.eval(grid.node(i)).norm_sqr() * grid.weight(i)).sum();
        let u = f.eval(zeta).norm_sqr();
        ratios.push(if u == 0.0 { 0.0 } else { u * r.powi(2 * d) / (engine.diag(zeta)? * mass) });
    }
    Ok(ConstantEstimate::sup("C4", format!("mean-value ratio for |{}|² on balls of radius {r}", f.name), &ratios))
}

#[derive(Clone, Debug, Serialize)]
pub struct MassRow {
    pub center: Vec<Complex64>,
    /// `Σ_i w_i |B(z_i, ζ)|²` over the whole grid.
    pub total: f64,
    pub diagonal: f64,
    pub ball_mass: f64,
    /// `total / ball_mass`.
    pub ratio: f64,
}

/// Ratio of the total kernel mass to the mass on the ball `B(ζ, r)`.
pub fn mass_positivity_check(field: &GeodesicField, centers: &[Vec<Complex64>], r: f64) -> Result<Vec<MassRow>> {
    let engine = field.engine();
    let grid = field.grid();
    centers
        .iter()
        .map(|zeta| {
            let ball = field.ball(zeta, r)?;
            let mass = |i: usize| -> Result<f64> { Ok(engine.kernel_unchecked(grid.node(i), zeta)?.norm_sqr() * grid.weight(i)) };
            let total = (0..grid.len()).into_par_iter().map(mass).collect::<Result<Vec<_>>>()?.into_iter().sum::<f64>();
            let ball_mass = ball.members.iter().map(|&i| mass(i)).sum::<Result<f64>>()?;
            Ok(MassRow { center: zeta.clone(), total, diagonal: engine.diag(zeta)?, ball_mass, ratio: total / ball_mass })
        })
        .collect()
}

/// Bracket of `det g(z) / B(z,z)`.
pub fn volume_comparison_check(engine: &KernelEngine, samples: &[Vec<Complex64>]) -> Result<ConstantEstimate> {
    let ratios = samples
        .iter()
        .map(|z| Ok(engine.volume_density(z)? / engine.diag(z)?))
        .collect::<Result<Vec<f64>>>()?;
    Ok(ConstantEstimate::bracket("C5", "det g(z) / B(z,z)".into(), &ratios))
}

#[derive(Clone, Debug, Serialize)]
pub struct SbgReport {
    pub estimate: ConstantEstimate,
    /// `(smallest admitted boundary gap, running sup)` from the interior
    /// outward in dyadic gap shells.
    pub running_sup: Vec<(f64, f64)>,
    /// The running sup settles (increments shrink geometrically).
    pub converging: bool,
    pub verdict: String,
}

/// `sup ‖∂ log B‖²_g` over nodes with boundary gap at least
/// `admissible_gap(grid)`.
pub fn sbg_check(engine: &KernelEngine, grid: &QuadratureGrid) -> Result<SbgReport> {
    let dom = &engine.domain;
    let min_gap = admissible_gap(grid);
    let vals: Vec<(f64, f64)> = (0..grid.len())
        .into_par_iter()
        .filter_map(|i| {
            let z = grid.node(i);
            let gap = dom.boundary_gap_unchecked(z);
            (gap >= min_gap).then(|| engine.log_gradient_norm_sqr(z).map(|q| (gap, q)))
        })
        .collect::<Result<Vec<_>>>()?;
    if vals.is_empty() {
        return Err(Error::GridTooCoarse("no node is far enough from the boundary".into()));
    }
    let top_gap = vals.iter().map(|v| v.0).fold(0.0, f64::max);
    let mut running_sup = Vec::new();
    let mut g = top_gap / 2.0;
    loop {
        let lower = g.max(min_gap);
        let s = vals.iter().filter(|v| v.0 >= lower).map(|v| v.1).fold(0.0, f64::max);
        running_sup.push((lower, s));
        if lower <= min_gap {
            break;
        }
        g /= 2.0;
    }
    let q: Vec<f64> = vals.iter().map(|v| v.1).collect();
    let estimate = ConstantEstimate::sup("Q", format!("sup ‖∂ log B‖²_g over nodes with boundary gap ≥ {min_gap}"), &q);
    let n = running_sup.len();
    let converging = if n >= 3 {
        let d1 = running_sup[n - 2].1 - running_sup[n - 3].1;
        let d2 = running_sup[n - 1].1 - running_sup[n - 2].1;
        d2 <= 0.75 * d1 || d2 <= 1e-3 * estimate.value
    } else {
        true
    };
    let verdict = if converging && estimate.is_finite() {
        "consistent with self bounded gradient"
    } else {
        "running sup still growing toward the boundary"
    };
    Ok(SbgReport { estimate, running_sup, converging, verdict: verdict.into() })
}

#[derive(Clone, Debug, Serialize)]
pub struct ConditionResult {
    pub id: u8,
    pub description: String,
    pub estimate: Option<ConstantEstimate>,
    /// Reason for skipping the condition, if it was skipped.
    pub skipped: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct T91Report {
    pub conditions: Vec<ConditionResult>,
    pub verdict: String,
}

/// Bracket of `det g(z) · μ(B(ζ,r))` over `z ∈ B(ζ,r)`: the comparison of
/// Bergman volume with normalized Lebesgue measure on metric balls.
pub fn volume_equivalence(field: &GeodesicField, centers: &[Vec<Complex64>], r: f64) -> Result<ConstantEstimate> {
    let mut ratios = Vec::new();
    for zeta in centers {
        let ball = field.ball(zeta, r)?;
        for &i in &ball.members {
            ratios.push(field.node_density(i) * ball.lebesgue_mass);
        }
    }
    Ok(ConstantEstimate::bracket("volume-equivalence", format!("det g(z) μ(B(ζ,{r})) for z ∈ B(ζ,{r})"), &ratios))
}

/// Sample points in the chart source for the Jacobian-gradient condition.
fn chart_samples(dim: usize) -> Vec<Vec<Complex64>> {
    let mut out = vec![vec![Complex64::new(0.0, 0.0); dim]];
    for j in 0..dim {
        for k in 0..4 {
            let mut w = vec![Complex64::new(0.0, 0.0); dim];
            w[j] = Complex64::from_polar(0.5, k as f64 * std::f64::consts::FRAC_PI_2);
            out.push(w);
        }
    }
    out
}

/// The five equivalent conditions: self-bounded gradient, kernel
/// comparability on balls, `B(ζ,ζ) μ(B(ζ,r))` bounds, volume
/// equivalence, and bounded Jacobian log-gradients of the charts.
pub fn t91_equivalences(field: &GeodesicField, centers: &[Vec<Complex64>], r: f64) -> Result<T91Report> {
    let engine = field.engine();
    let grid = field.grid();
    let dom = field.domain();
    let mut conditions = Vec::new();

    let sbg = sbg_check(engine, grid)?;
    conditions.push(ConditionResult {
        id: 1,
        description: "log B has self bounded gradient".into(),
        estimate: Some(sbg.estimate),
        skipped: None,
    });

    let mut c2 = Vec::new();
    let mut c3 = Vec::new();
    for zeta in centers {
        let ball = field.ball(zeta, r)?;
        let b0 = engine.diag(zeta)?;
        for &i in &ball.members {
            c2.push(engine.diag_unchecked(grid.node(i)) / b0);
        }
        c3.push(b0 * ball.lebesgue_mass);
    }
    conditions.push(ConditionResult {
        id: 2,
        description: "B(z,z)/B(ζ,ζ) bounded on balls".into(),
        estimate: Some(ConstantEstimate::bracket("C2", format!("B(z,z)/B(ζ,ζ) for z ∈ B(ζ,{r})"), &c2)),
        skipped: None,
    });
    conditions.push(ConditionResult {
        id: 3,
        description: "B(ζ,ζ) comparable to 1/μ(B(ζ,r))".into(),
        estimate: Some(ConstantEstimate::bracket("C3-volume", format!("B(ζ,ζ) μ(B(ζ,{r}))"), &c3)),
        skipped: None,
    });
    conditions.push(ConditionResult {
        id: 4,
        description: "dV comparable to dμ/μ(B(ζ,r)) on balls".into(),
        estimate: Some(volume_equivalence(field, centers, r)?),
        skipped: None,
    });

    let samples = chart_samples(dom.dim);
    let mut grads = Vec::new();
    let mut skipped = None;
    for zeta in centers {
        match chart(dom, zeta) {
            Ok(ch) => {
                for w in &samples {
                    let g = ch.log_det_gradient(w);
                    grads.push(g.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt());
                }
            }
            Err(Error::Unsupported(msg)) => {
                skipped = Some(msg);
                break;
            }
            Err(e) => return Err(e),
        }
    }
    conditions.push(if let Some(msg) = skipped {
        ConditionResult { id: 5, description: "charts with bounded ∂ log|det Φ'|".into(), estimate: None, skipped: Some(msg) }
    } else {
        ConditionResult {
            id: 5,
            description: "charts with bounded ∂ log|det Φ'|".into(),
            estimate: Some(ConstantEstimate::sup("L", "sup |∂_w log|det Φ'_ζ(w)||".into(), &grads)),
            skipped: None,
        }
    });

    let checked: Vec<bool> = conditions.iter().filter_map(|c| c.estimate.as_ref().map(|e| e.is_finite())).collect();
    let verdict = if checked.iter().all(|&f| f) {
        "all finite"
    } else if checked.iter().all(|&f| !f) {
        "all infinite"
    } else {
        "inconsistent"
    };
    Ok(T91Report { conditions, verdict: verdict.into() })
}
