use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use super::{omega, unknowns, MeasureMode, NODES_PER_UNKNOWN};
use crate::error::{Error, Result};
use crate::geometry::GeodesicField;
use crate::operators::{tail_trend, SymbolFn};

/// Tail trends below this count as decaying. ω is a squared norm, so this is
/// the square of the threshold applied to operator probe norms.
pub const DECAY_THRESHOLD: f64 = 0.25;

/// Scan centres closer to the boundary than this many grid cells are not
/// resolved: the ball is thinner than the grid in the normal direction.
pub const RESOLVED_GAP_CELLS: f64 = 2.0;

/// Values below this are treated as zero when forming trends.
const TREND_FLOOR: f64 = 1e-10;

#[derive(Clone, Debug)]
pub struct ScanParams {
    pub radius: f64,
    pub degree: usize,
    pub mode: MeasureMode,
    /// Unit directions from the domain anchor.
    pub rays: Vec<Vec<Complex64>>,
    /// Boundary parameters in `(0, 1)`, increasing.
    pub ts: Vec<f64>,
}

/// `steps` parameters from `t_min` to `t_max`, equally spaced in
/// `log(1 − t)`.
pub fn boundary_parameters(steps: usize, t_min: f64, t_max: f64) -> Vec<f64> {
    if steps == 1 {
        return vec![t_min];
    }
    let (a, b) = ((1.0 - t_min).ln(), (1.0 - t_max).ln());
    (0..steps).map(|k| 1.0 - (a + (b - a) * k as f64 / (steps - 1) as f64).exp()).collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct ScanRow {
    pub ray: usize,
    pub t: f64,
    pub center: Vec<Complex64>,
    pub radius: f64,
    pub degree: usize,
    pub mode: MeasureMode,
    pub omega: Option<f64>,
    pub nodes: usize,
    pub admissible: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct ScanReport {
    pub rows: Vec<ScanRow>,
    /// Tail trend over the admissible prefix of each ray.
    pub ray_trends: Vec<f64>,
    pub tail_trend: f64,
    pub sup: f64,
    pub admissible_rows: usize,
    pub decaying: bool,
}

impl ScanReport {
    pub fn to_csv(&self) -> String {
        let d = self.rows.first().map_or(0, |r| r.center.len());
        let mut out = String::from("ray,t");
        for j in 1..=d {
            out.push_str(&format!(",re{j},im{j}"));
        }
        out.push_str(",r,D,mode,omega,admissible\n");
        for r in &self.rows {
            out.push_str(&format!("{},{:.17e}", r.ray, r.t));
            for z in &r.center {
                out.push_str(&format!(",{:.17e},{:.17e}", z.re, z.im));
            }
            let w = r.omega.map_or_else(|| "nan".to_string(), |v| format!("{v:.17e}"));
            out.push_str(&format!(",{},{},{},{},{}\n", r.radius, r.degree, r.mode.name(), w, r.admissible as u8));
        }
        out
    }

    /// Admissible ω values of one ray, in scan order up to the first
    /// inadmissible point.
    pub fn admissible_prefix(&self, ray: usize) -> Vec<f64> {
        self.rows
            .iter()
            .filter(|r| r.ray == ray)
            .take_while(|r| r.admissible)
            .filter_map(|r| r.omega)
            .collect()
    }
}

/// ω along rays toward the boundary. Balls with fewer than ten nodes per
/// unknown, or centres within two grid cells of the boundary, are flagged and
/// left out of the summary.
pub fn boundary_scan(field: &GeodesicField, symbol: &SymbolFn, params: &ScanParams) -> Result<ScanReport> {
    if !(params.radius > 0.0) {
        return Err(Error::InvalidParameter("scan radius must be positive".into()));
    }
    if params.rays.is_empty() || params.ts.is_empty() {
        return Err(Error::InvalidParameter("scan needs rays and boundary parameters".into()));
    }
    if params.ts.iter().any(|&t| !(0.0..1.0).contains(&t)) {
        return Err(Error::InvalidParameter("boundary parameters must lie in [0, 1)".into()));
    }
    let dom = field.domain();
    let dim = dom.dim;
    let need = NODES_PER_UNKNOWN * unknowns(dim, params.degree);
    let min_gap = RESOLVED_GAP_CELLS * field.grid().resolution();
    let jobs: Vec<(usize, f64)> = (0..params.rays.len()).flat_map(|k| params.ts.iter().map(move |&t| (k, t))).collect();
    let rows: Vec<Result<ScanRow>> = jobs
        .par_iter()
        .map(|&(k, t)| {
            let dir = &params.rays[k];
            if dir.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: dir.len() });
            }
            let center = dom.ray_point(dir, t);
            let mut row = ScanRow {
                ray: k,
                t,
                center: center.clone(),
                radius: params.radius,
                degree: params.degree,
                mode: params.mode,
                omega: None,
                nodes: 0,
                admissible: false,
            };
            let ball = match field.ball(&center, params.radius) {
                Ok(b) => b,
                Err(Error::EmptyBall { .. }) | Err(Error::OutsideDomain) => return Ok(row),
                Err(e) => return Err(e),
            };
            row.nodes = ball.len();
            let w = omega(field, &ball, symbol, params.degree, params.mode)?;
            row.omega = Some(w.value);
            row.admissible = ball.len() >= need && dom.boundary_gap(&center)? >= min_gap;
            Ok(row)
        })
        .collect();
    let rows = rows.into_iter().collect::<Result<Vec<_>>>()?;
    let mut report = ScanReport { rows, ray_trends: Vec::new(), tail_trend: 0.0, sup: 0.0, admissible_rows: 0, decaying: true };
    report.admissible_rows = report.rows.iter().filter(|r| r.admissible).count();
    report.sup = report.rows.iter().filter(|r| r.admissible).filter_map(|r| r.omega).fold(0.0, f64::max);
    report.ray_trends = (0..params.rays.len()).map(|k| tail_trend(&report.admissible_prefix(k), TREND_FLOOR)).collect();
    report.tail_trend = report.ray_trends.iter().copied().fold(0.0, f64::max);
    report.decaying = report.tail_trend < DECAY_THRESHOLD;
    Ok(report)
}
