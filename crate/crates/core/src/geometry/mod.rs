//! Bergman distance on a neighbour graph over grid nodes, metric balls,
//! separated nets, covering multiplicities, automorphism charts and
//! partitions of unity.

mod chart;
mod graph;
mod partition;

pub use chart::{beta, beta_bracket, chart, chart_lipschitz_bracket, ChartMap, DEFAULT_CHART_SCALE};
pub use graph::{GeodesicField, GeodesicOptions};
pub use partition::{grid_dbar, PartitionOfUnity};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};

/// Nodes of a grid whose graph distance to the centre is `< radius`.
#[derive(Clone, Debug, Serialize)]
pub struct MetricBall {
    pub center: Vec<Complex64>,
    pub radius: f64,
    pub members: Vec<usize>,
    pub distances: Vec<f64>,
    pub lebesgue_mass: f64,
    pub volume_mass: f64,
}

impl MetricBall {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

impl GeodesicField {
    /// Metric ball around an arbitrary interior point.
    pub fn ball(&self, center: &[Complex64], r: f64) -> Result<MetricBall> {
        if !(r > 0.0) {
            return Err(Error::InvalidParameter(format!("ball radius must be positive, got {r}")));
        }
        let dist = self.point_distances(center, r)?;
        self.collect_ball(center.to_vec(), r, &dist)
    }

    /// Metric ball around grid node `i`.
    pub fn node_ball(&self, i: usize, r: f64) -> Result<MetricBall> {
        if !(r > 0.0) {
            return Err(Error::InvalidParameter(format!("ball radius must be positive, got {r}")));
        }
        let dist = self.bounded_from_node(i, r);
        self.collect_ball(self.grid().node(i).to_vec(), r, &dist)
    }

    fn collect_ball(&self, center: Vec<Complex64>, r: f64, dist: &[(usize, f64)]) -> Result<MetricBall> {
        let mut hits: Vec<(usize, f64)> = dist.iter().copied().filter(|&(_, d)| d < r).collect();
        if hits.is_empty() {
            return Err(Error::EmptyBall { radius: r });
        }
        hits.sort_unstable_by_key(|&(i, _)| i);
        let grid = self.grid();
        let mut leb = 0.0;
        let mut vol = 0.0;
        for &(i, _) in &hits {
            leb += grid.weight(i);
            vol += grid.weight(i) * self.node_density(i);
        }
        Ok(MetricBall {
            center,
            radius: r,
            members: hits.iter().map(|h| h.0).collect(),
            distances: hits.iter().map(|h| h.1).collect(),
            lebesgue_mass: leb,
            volume_mass: vol,
        })
    }

    /// Greedy farthest-first `r`-separated net; ties go to the lowest node
    /// index and the first centre is the node nearest the domain anchor.
    pub fn build_net(&self, r: f64) -> Result<Net> {
        if !(r > 0.0) {
            return Err(Error::InvalidParameter(format!("net separation must be positive, got {r}")));
        }
        let n = self.len();
        let mut nearest = vec![f64::INFINITY; n];
        let mut owner = vec![u32::MAX; n];
        let mut centers = Vec::new();
        let mut next = self.nearest_node(&self.domain().anchor);
        loop {
            centers.push(next);
            self.relax_from(next, &mut nearest, &mut owner, centers.len() as u32 - 1);
            let mut best = (f64::NEG_INFINITY, usize::MAX);
            for (i, &d) in nearest.iter().enumerate() {
                if d > best.0 {
                    best = (d, i);
                }
            }
            if best.0 < r {
                break;
            }
            next = best.1;
        }
        Ok(Net { separation: r, centers, nearest_center: owner, cover_distance: nearest })
    }

    /// `max_x #{centres within R of x}`.
    pub fn multiplicity(&self, net: &Net, big_r: f64) -> usize {
        let counts = self.center_counts(net, big_r);
        counts.into_iter().max().unwrap_or(0) as usize
    }

    fn center_counts(&self, net: &Net, big_r: f64) -> Vec<u32> {
        let reached: Vec<Vec<usize>> = net
            .centers
            .par_iter()
            .map(|&c| self.bounded_from_node(c, big_r).into_iter().filter(|&(_, d)| d < big_r).map(|(i, _)| i).collect())
            .collect();
        let mut counts = vec![0u32; self.len()];
        for list in reached {
            for i in list {
                counts[i] += 1;
            }
        }
        counts
    }

    /// Exact separation and covering audit on the graph.
    pub fn audit_net(&self, net: &Net) -> NetAudit {
        let r = net.separation;
        let mut is_center = vec![false; self.len()];
        for &c in &net.centers {
            is_center[c] = true;
        }
        let closest: Vec<f64> = net
            .centers
            .par_iter()
            .map(|&c| {
                self.bounded_from_node(c, r)
                    .into_iter()
                    .filter(|&(i, _)| i != c && is_center[i])
                    .map(|(_, d)| d)
                    .fold(f64::INFINITY, f64::min)
            })
            .collect();
        let min_separation = closest.into_iter().fold(f64::INFINITY, f64::min);
        let max_cover = net.cover_distance.iter().copied().fold(0.0, f64::max);
        NetAudit {
            centers: net.centers.len(),
            min_separation,
            max_cover_distance: max_cover,
            separated: min_separation >= r,
            covered: max_cover < r,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Net {
    pub separation: f64,
    pub centers: Vec<usize>,
    /// Index into `centers` of the closest centre of every node.
    pub nearest_center: Vec<u32>,
    /// Graph distance from every node to its closest centre.
    pub cover_distance: Vec<f64>,
}

impl Net {
    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    /// Multiplicities for several radii, as `(R, L)` pairs.
    pub fn multiplicity_table(&self, field: &GeodesicField, radii: &[f64]) -> Vec<(f64, usize)> {
        radii.iter().map(|&r| (r, field.multiplicity(self, r))).collect()
    }

    /// CSV: one row per centre with its coordinates and the indices of the
    /// nodes it covers (nearest-centre assignment).
    pub fn to_csv(&self, field: &GeodesicField) -> String {
        let grid = field.grid();
        let d = grid.dim();
        let mut members: Vec<Vec<usize>> = vec![Vec::new(); self.centers.len()];
        for (i, &c) in self.nearest_center.iter().enumerate() {
            if (c as usize) < members.len() {
                members[c as usize].push(i);
            }
        }
        let mut out = String::from("center,node");
        for j in 1..=d {
            out.push_str(&format!(",re{j},im{j}"));
        }
        out.push_str(",members\n");
        for (m, &c) in self.centers.iter().enumerate() {
            out.push_str(&format!("{m},{c}"));
            for z in grid.node(c) {
                out.push_str(&format!(",{:.17e},{:.17e}", z.re, z.im));
            }
            let list: Vec<String> = members[m].iter().map(|i| i.to_string()).collect();
            out.push_str(&format!(",{}\n", list.join(" ")));
        }
        out
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct NetAudit {
    pub centers: usize,
    pub min_separation: f64,
    pub max_cover_distance: f64,
    pub separated: bool,
    pub covered: bool,
}

impl MetricBall {
    /// CSV of the member nodes with their coordinates and graph distance.
    pub fn to_csv(&self, field: &GeodesicField) -> String {
        let grid = field.grid();
        let mut out = String::from("node");
        for j in 1..=grid.dim() {
            out.push_str(&format!(",re{j},im{j}"));
        }
        out.push_str(",distance,weight\n");
        for (&i, &d) in self.members.iter().zip(&self.distances) {
            out.push_str(&i.to_string());
            for z in grid.node(i) {
                out.push_str(&format!(",{:.17e},{:.17e}", z.re, z.im));
            }
            out.push_str(&format!(",{:.17e},{:.17e}\n", d, grid.weight(i)));
        }
        out
    }
}
