use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use super::{omega, Approximant, MeasureMode, NODES_PER_UNKNOWN};
use crate::error::{Error, Result};
use crate::geometry::{grid_dbar, GeodesicField, Net, PartitionOfUnity};
use crate::linalg::inverse_quad_form;
use crate::operators::SymbolFn;

#[derive(Clone, Copy, Debug)]
pub struct DecomposeOptions {
    /// Radius of the approximation balls.
    pub radius: f64,
    pub degree: usize,
    /// Width of the distance shells used to summarize ε toward the boundary.
    pub shell_width: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ShellStat {
    pub shell: usize,
    pub centers: usize,
    pub max_epsilon: f64,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct DecompositionAudit {
    /// `max |φ₁ + φ₂ − φ|` over nodes.
    pub identity_error: f64,
    pub partition_sum_error: f64,
    /// Largest `∫_{B(ζ,r/2)} |φ₂|² dV / max ε²` over centres whose nearby fits
    /// are all admissible.
    pub phi2_bracket: f64,
    /// Same for the finite-difference `‖∂̄φ₁‖²_g`.
    pub dbar_bracket: f64,
    /// Largest of the two local masses where every nearby ε vanishes.
    pub null_mass: f64,
    pub pairs_audited: usize,
    pub pairs_passed: usize,
    pub pairs_skipped: usize,
    /// Largest `‖h_n − h_m‖ / (ε_n + ε_m)` over audited pairs.
    pub pair_ratio: f64,
    pub shells: Vec<ShellStat>,
    /// Max ε of the first shell over that of the last admissible shell.
    pub shell_decay: Option<f64>,
    pub warnings: Vec<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Decomposition {
    pub centers: Vec<usize>,
    pub epsilons: Vec<f64>,
    pub admissible: Vec<bool>,
    #[serde(skip)]
    pub approximants: Vec<Approximant>,
    #[serde(skip)]
    pub phi: Vec<Complex64>,
    #[serde(skip)]
    pub phi1: Vec<Complex64>,
    #[serde(skip)]
    pub phi2: Vec<Complex64>,
    #[serde(skip)]
    pub dbar_phi1: Vec<Vec<Complex64>>,
    pub audit: DecompositionAudit,
}

/// Tiny ε values are treated as zero when forming ratios.
const EPS_FLOOR: f64 = 1e-12;

/// `φ₁ = Σ χ̂_m h_m` with `h_m` the best polynomial approximant of `φ` on
/// `B(ζ_m, r)`, `φ₂ = φ − φ₁`, and the audits of the decomposition.
pub fn decompose(
    field: &GeodesicField,
    net: &Net,
    partition: &PartitionOfUnity,
    symbol: &SymbolFn,
    opts: DecomposeOptions,
) -> Result<Decomposition> {
    if partition.len() != net.len() {
        return Err(Error::DimensionMismatch { expected: net.len(), got: partition.len() });
    }
    if !(opts.radius > 0.0 && opts.shell_width > 0.0) {
        return Err(Error::InvalidParameter("radius and shell width must be positive".into()));
    }
    let grid = field.grid();
    let n = grid.len();
    let d = grid.dim();

    let fits: Vec<Result<(f64, bool, Approximant)>> = net
        .centers
        .par_iter()
        .map(|&c| {
            let ball = field.node_ball(c, opts.radius)?;
            let w = omega(field, &ball, symbol, opts.degree, MeasureMode::BergmanVolume)?;
            let ok = w.nodes >= NODES_PER_UNKNOWN * w.unknowns;
            Ok((w.value.sqrt(), ok, w.approximant))
        })
        .collect();
    let fits = fits.into_iter().collect::<Result<Vec<_>>>()?;
    let epsilons: Vec<f64> = fits.iter().map(|f| f.0).collect();
    let admissible: Vec<bool> = fits.iter().map(|f| f.1).collect();
    let approximants: Vec<Approximant> = fits.into_iter().map(|f| f.2).collect();

    let phi: Vec<Complex64> = (0..n).map(|i| symbol.eval(grid.node(i))).collect();
    let mut phi1 = vec![Complex64::new(0.0, 0.0); n];
    for (m, list) in partition.cutoffs.iter().enumerate() {
        for &(i, v, _) in list {
            phi1[i as usize] += approximants[m].eval(grid.node(i as usize)) * v;
        }
    }
    let phi2: Vec<Complex64> = phi.iter().zip(&phi1).map(|(a, b)| a - b).collect();
    let identity_error = (0..n).map(|i| (phi1[i] + phi2[i] - phi[i]).norm()).fold(0.0, f64::max);
    let dbar_phi1 = grid_dbar(field, &phi1);
    let engine = field.engine();
    let dbar_norm: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| {
            let g = engine.metric_matrix_unchecked(grid.node(i));
            let conj: Vec<Complex64> = dbar_phi1[i].iter().map(|c| c.conj()).collect();
            inverse_quad_form(&g, d, &conj).unwrap_or(f64::NAN)
        })
        .collect();

    let mut audit = DecompositionAudit { identity_error, partition_sum_error: partition.max_sum_error, ..Default::default() };

    // which cutoffs touch each node
    let mut touching: Vec<Vec<u32>> = vec![Vec::new(); n];
    for (m, list) in partition.cutoffs.iter().enumerate() {
        for &(i, v, _) in list {
            if v > 0.0 {
                touching[i as usize].push(m as u32);
            }
        }
    }

    // local masses on half balls
    let local: Vec<(f64, f64, f64, bool)> = net
        .centers
        .par_iter()
        .map(|&c| {
            let half = field.bounded_from_node(c, 0.5 * opts.radius);
            let mut m2 = 0.0;
            let mut md = 0.0;
            let mut eps: f64 = 0.0;
            let mut ok = true;
            for &(i, dist) in &half {
                if dist >= 0.5 * opts.radius {
                    continue;
                }
                let dv = grid.weight(i) * field.node_density(i);
                m2 += phi2[i].norm_sqr() * dv;
                md += dbar_norm[i] * dv;
                for &k in &touching[i] {
                    eps = eps.max(epsilons[k as usize]);
                    ok &= admissible[k as usize];
                }
            }
            (m2, md, eps * eps, ok)
        })
        .collect();
    // underdetermined fits near the boundary interpolate exactly and say
    // nothing about the brackets
    for (m2, md, e2, _) in local.into_iter().filter(|l| l.3) {
        if e2.sqrt() > EPS_FLOOR {
            audit.phi2_bracket = audit.phi2_bracket.max(m2 / e2);
            audit.dbar_bracket = audit.dbar_bracket.max(md / e2);
        } else {
            audit.null_mass = audit.null_mass.max(m2).max(md);
        }
    }

    // approximant gaps for overlapping supports, on B(ζ_n, r − d(ζ_n, ζ_m))
    let mut pairs = Vec::new();
    for list in &touching {
        for (a, &p) in list.iter().enumerate() {
            for &q in &list[a + 1..] {
                pairs.push((p.min(q) as usize, p.max(q) as usize));
            }
        }
    }
    pairs.sort_unstable();
    pairs.dedup();
    let results: Vec<Option<(f64, f64)>> = pairs
        .par_iter()
        .map(|&(p, q)| {
            let (cp, cq) = (net.centers[p], net.centers[q]);
            let reach = field.bounded_from_node(cp, opts.radius);
            let dpq = reach.iter().find(|&&(i, _)| i == cq).map(|&(_, d)| d)?;
            let r2 = opts.radius - dpq;
            let mut gap = 0.0;
            let mut count = 0;
            for &(i, dist) in &reach {
                if dist < r2 {
                    let z = grid.node(i);
                    let diff = approximants[p].eval(z) - approximants[q].eval(z);
                    gap += diff.norm_sqr() * grid.weight(i) * field.node_density(i);
                    count += 1;
                }
            }
            (count > 0).then(|| (gap.sqrt(), epsilons[p] + epsilons[q]))
        })
        .collect();
    for ((p, q), r) in pairs.iter().zip(results) {
        match r {
            None => {
                audit.pairs_skipped += 1;
                if audit.warnings.len() < 8 {
                    audit.warnings.push(format!("pair ({p}, {q}): overlap ball has no nodes"));
                }
            }
            Some((gap, bound)) => {
                audit.pairs_audited += 1;
                // exact inequality up to rounding in the sums
                if gap <= bound * (1.0 + 1e-9) + 1e-14 {
                    audit.pairs_passed += 1;
                }
                if bound > EPS_FLOOR {
                    audit.pair_ratio = audit.pair_ratio.max(gap / bound);
                }
            }
        }
    }
    if audit.pairs_skipped > 8 {
        audit.warnings.push(format!("{} pairs skipped in total", audit.pairs_skipped));
    }

    // ε by distance shell from the first net centre
    let from_anchor = field.distances_from_node(net.centers[0]);
    let mut shells: Vec<ShellStat> = Vec::new();
    for (m, &c) in net.centers.iter().enumerate() {
        if !admissible[m] || !from_anchor[c].is_finite() {
            continue;
        }
        let s = (from_anchor[c] / opts.shell_width).floor() as usize;
        if shells.len() <= s {
            shells.extend((shells.len()..=s).map(|k| ShellStat { shell: k, centers: 0, max_epsilon: 0.0 }));
        }
        shells[s].centers += 1;
        shells[s].max_epsilon = shells[s].max_epsilon.max(epsilons[m]);
    }
    shells.retain(|s| s.centers > 0);
    if shells.len() >= 2 {
        let (first, last) = (shells[0].max_epsilon, shells[shells.len() - 1].max_epsilon);
        audit.shell_decay = Some(if last > 0.0 { first / last } else { f64::INFINITY });
    }
    audit.shells = shells;

    Ok(Decomposition {
        centers: net.centers.clone(),
        epsilons,
        admissible,
        approximants,
        phi,
        phi1,
        phi2,
        dbar_phi1,
        audit,
    })
}
