use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap};
use std::sync::{Arc, Mutex};

use num_complex::Complex64;
use rayon::prelude::*;

use crate::domains::{gauss_legendre_unit, norm2, DomainSpec, QuadratureGrid};
use crate::error::{Error, Result};
use crate::kernel::{hermitian_length_sqr, KernelEngine};
use crate::linalg::det_hermitian;

/// Quadrature nodes for straight-segment lengths.
const SEGMENT_NODES: usize = 8;

/// Largest dense lattice lookup table (entries) before giving up.
const MAX_LOOKUP: f64 = 6.4e7;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GeodesicOptions {
    /// Neighbour count per real dimension; on lattice grids all offsets up
    /// to the distance of the `k·2d`-th nearest one are used (ties kept).
    pub neighbors_per_real_dim: usize,
}

impl Default for GeodesicOptions {
    fn default() -> Self {
        GeodesicOptions { neighbors_per_real_dim: 8 }
    }
}

impl GeodesicOptions {
    /// Wider stencils in one variable, where they are cheap and cut the
    /// direction bias of lattice paths to about 0.2% on ball masses.
    pub fn default_for(dim: usize) -> Self {
        GeodesicOptions { neighbors_per_real_dim: if dim == 1 { 48 } else { 8 } }
    }
}

/// Shortest-path approximation of the Bergman distance on a neighbour graph
/// over grid nodes, edge lengths by the midpoint rule.
pub struct GeodesicField {
    engine: KernelEngine,
    grid: Arc<QuadratureGrid>,
    options: GeodesicOptions,
    offsets: Vec<usize>,
    targets: Vec<u32>,
    lengths: Vec<f64>,
    near: Vec<u16>,
    density: Vec<f64>,
    locator: Locator,
    skipped_edges: usize,
    cache: Mutex<HashMap<usize, Arc<Vec<f64>>>>,
    segment_rule: (Vec<f64>, Vec<f64>),
}

enum Locator {
    Lattice { spacing: f64, half: i64, side: i64, radius2: i64, table: Vec<u32>, stencil: Vec<Vec<i64>> },
    Cells(CellIndex),
}

#[derive(Clone, Copy, PartialEq)]
struct Item(f64, u32);

impl Eq for Item {}

impl Ord for Item {
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0).then_with(|| other.1.cmp(&self.1))
    }
}

impl PartialOrd for Item {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

fn lattice_stencil(real_dim: usize, wanted: usize) -> (i64, Vec<Vec<i64>>) {
    let mut reach = 1i64;
    loop {
        let mut all = Vec::new();
        let mut o = vec![-reach; real_dim];
        loop {
            let n2: i64 = o.iter().map(|v| v * v).sum();
            if n2 > 0 {
                all.push((n2, o.clone()));
            }
            let mut k = real_dim;
            let mut done = true;
            while k > 0 {
                k -= 1;
                o[k] += 1;
                if o[k] <= reach {
                    done = false;
                    break;
                }
                o[k] = -reach;
            }
            if done {
                break;
            }
        }
        all.sort();
        if all.len() >= wanted {
            let cut = all[wanted - 1].0;
            // the box must contain the whole sphere of that radius
            if cut <= reach * reach {
                let stencil: Vec<Vec<i64>> = all.into_iter().filter(|(n2, _)| *n2 <= cut).map(|(_, o)| o).collect();
                return (cut, stencil);
            }
        }
        reach += 1;
    }
}

fn edge_length(engine: &KernelEngine, a: &[Complex64], b: &[Complex64]) -> f64 {
    let d = a.len();
    let mid: Vec<Complex64> = a.iter().zip(b).map(|(x, y)| (x + y) * 0.5).collect();
    let delta: Vec<Complex64> = a.iter().zip(b).map(|(x, y)| y - x).collect();
    let g = engine.metric_matrix_unchecked(&mid);
    let l2 = hermitian_length_sqr(&g, d, &delta);
    if l2 > 0.0 && l2.is_finite() {
        l2.sqrt()
    } else {
        f64::NAN
    }
}

impl GeodesicField {
    pub fn new(engine: &KernelEngine, grid: Arc<QuadratureGrid>, options: GeodesicOptions) -> Result<Self> {
        if grid.dim() != engine.dim() {
            return Err(Error::DimensionMismatch { expected: engine.dim(), got: grid.dim() });
        }
        if options.neighbors_per_real_dim == 0 {
            return Err(Error::InvalidParameter("neighbour count must be positive".into()));
        }
        let d = grid.dim();
        let real_dim = 2 * d;
        let wanted = options.neighbors_per_real_dim * real_dim;
        let n = grid.len();
        let locator = match grid.lattice() {
            Some(lat) => {
                let half = lat.half_extent as i64;
                let side = 2 * half;
                if (side as f64).powi(real_dim as i32) > MAX_LOOKUP {
                    return Err(Error::InvalidParameter("lattice too fine for the neighbour table".into()));
                }
                let mut table = vec![u32::MAX; (side as usize).pow(real_dim as u32)];
                for i in 0..n {
                    let idx = &lat.indices[i * real_dim..(i + 1) * real_dim];
                    table[flat(idx.iter().map(|&v| v as i64), half, side)] = i as u32;
                }
                let (radius2, stencil) = lattice_stencil(real_dim, wanted);
                Locator::Lattice { spacing: lat.spacing, half, side, radius2, table, stencil }
            }
            None => Locator::Cells(CellIndex::new(&grid)),
        };

        let per_node: Vec<(Vec<(u32, f64)>, u16)> = (0..n)
            .into_par_iter()
            .map(|i| {
                let z = grid.node(i);
                match &locator {
                    Locator::Lattice { half, side, table, stencil, .. } => {
                        let lat = grid.lattice().unwrap();
                        let idx = &lat.indices[i * real_dim..(i + 1) * real_dim];
                        let mut out = Vec::with_capacity(stencil.len());
                        let mut near = 0u16;
                        for o in stencil {
                            let mut inside = true;
                            let cell: Vec<i64> = idx
                                .iter()
                                .zip(o)
                                .map(|(&a, &b)| {
                                    let v = a as i64 + b;
                                    if v < -half || v >= *half {
                                        inside = false;
                                    }
                                    v
                                })
                                .collect();
                            if !inside {
                                continue;
                            }
                            let j = table[flat(cell.into_iter(), *half, *side)];
                            if j == u32::MAX {
                                continue;
                            }
                            let len = edge_length(engine, z, grid.node(j as usize));
                            out.push((j, len));
                            if o.iter().map(|v| v * v).sum::<i64>() <= 2 {
                                near += 1;
                            }
                        }
                        (out, near)
                    }
                    Locator::Cells(cells) => {
                        let nbrs = cells.nearest(&grid, z, wanted + 1);
                        let out: Vec<(u32, f64)> = nbrs
                            .into_iter()
                            .filter(|&(j, _)| j != i)
                            .take(wanted)
                            .map(|(j, _)| (j as u32, edge_length(engine, z, grid.node(j))))
                            .collect();
                        let near = out.len().min(2 * real_dim) as u16;
                        (out, near)
                    }
                }
            })
            .collect();

        // k-nearest lists are not symmetric; take the union of both directions.
        let per_node = if matches!(locator, Locator::Cells(_)) { symmetrize(&grid, per_node) } else { per_node };

        let mut offsets = Vec::with_capacity(n + 1);
        let mut targets = Vec::new();
        let mut lengths = Vec::new();
        let mut near = Vec::with_capacity(n);
        let mut skipped = 0;
        offsets.push(0);
        for (list, nr) in per_node {
            let mut kept_near = 0u16;
            for (k, (j, len)) in list.into_iter().enumerate() {
                if len.is_nan() {
                    skipped += 1;
                    continue;
                }
                if k < nr as usize {
                    kept_near += 1;
                }
                targets.push(j);
                lengths.push(len);
            }
            near.push(kept_near);
            offsets.push(targets.len());
        }
        let density: Vec<f64> = (0..n)
            .into_par_iter()
            .map(|i| det_hermitian(&engine.metric_matrix_unchecked(grid.node(i)), d))
            .collect();
        Ok(GeodesicField {
            engine: engine.clone(),
            grid,
            options,
            offsets,
            targets,
            lengths,
            near,
            density,
            locator,
            skipped_edges: skipped,
            cache: Mutex::new(HashMap::new()),
            segment_rule: gauss_legendre_unit(SEGMENT_NODES),
        })
    }

    pub fn grid(&self) -> &QuadratureGrid {
        &self.grid
    }

    pub fn grid_arc(&self) -> Arc<QuadratureGrid> {
        self.grid.clone()
    }

    pub fn engine(&self) -> &KernelEngine {
        &self.engine
    }

    pub fn domain(&self) -> &DomainSpec {
        &self.engine.domain
    }

    pub fn options(&self) -> GeodesicOptions {
        self.options
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    pub fn edge_count(&self) -> usize {
        self.targets.len()
    }

    /// Edges dropped because the metric was not positive along them.
    pub fn skipped_edges(&self) -> usize {
        self.skipped_edges
    }

    /// Volume density (determinant of the metric) at node `i`.
    pub fn node_density(&self, i: usize) -> f64 {
        self.density[i]
    }

    pub fn neighbors(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.offsets[i]..self.offsets[i + 1];
        self.targets[r.clone()].iter().zip(&self.lengths[r]).map(|(&j, &l)| (j as usize, l))
    }

    /// Closest-shell neighbours, used for finite-difference gradients.
    pub fn near_neighbors(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        let s = self.offsets[i];
        self.targets[s..s + self.near[i] as usize].iter().map(|&j| j as usize)
    }

    /// Largest edge length in the graph.
    pub fn max_edge_length(&self) -> f64 {
        self.lengths.iter().copied().fold(0.0, f64::max)
    }

    /// Euclidean-nearest node (lowest index on ties).
    pub fn nearest_node(&self, p: &[Complex64]) -> usize {
        let links = self.euclidean_candidates(p);
        let mut best = (f64::INFINITY, usize::MAX);
        for j in links {
            let d2 = dist2(p, self.grid.node(j));
            if d2 < best.0 || (d2 == best.0 && j < best.1) {
                best = (d2, j);
            }
        }
        if best.1 == usize::MAX {
            // far from every node: fall back to a full scan
            for j in 0..self.len() {
                let d2 = dist2(p, self.grid.node(j));
                if d2 < best.0 {
                    best = (d2, j);
                }
            }
        }
        best.1
    }

    fn euclidean_candidates(&self, p: &[Complex64]) -> Vec<usize> {
        match &self.locator {
            Locator::Lattice { spacing, half, side, radius2, table, .. } => {
                let real: Vec<f64> = p.iter().flat_map(|c| [c.re, c.im]).collect();
                let reach = (*radius2 as f64).sqrt().ceil() as i64 + 1;
                let base: Vec<i64> = real.iter().map(|x| (x / spacing - 0.5).round() as i64).collect();
                let mut out = Vec::new();
                let mut o = vec![-reach; base.len()];
                loop {
                    let cell: Vec<i64> = base.iter().zip(&o).map(|(a, b)| a + b).collect();
                    if cell.iter().all(|&v| v >= -half && v < *half) {
                        let j = table[flat(cell.into_iter(), *half, *side)];
                        if j != u32::MAX {
                            out.push(j as usize);
                        }
                    }
                    let mut k = o.len();
                    let mut done = true;
                    while k > 0 {
                        k -= 1;
                        o[k] += 1;
                        if o[k] <= reach {
                            done = false;
                            break;
                        }
                        o[k] = -reach;
                    }
                    if done {
                        break;
                    }
                }
                out.sort_unstable();
                out
            }
            Locator::Cells(cells) => {
                let k = self.options.neighbors_per_real_dim * 2 * self.grid.dim();
                let mut v: Vec<usize> = cells.nearest(&self.grid, p, k).into_iter().map(|(j, _)| j).collect();
                v.sort_unstable();
                v
            }
        }
    }

    /// Graph links of an off-grid point: all nodes within the stencil
    /// radius on lattices, the k nearest otherwise.
    fn virtual_links(&self, p: &[Complex64]) -> Vec<(usize, f64)> {
        let cand = self.euclidean_candidates(p);
        let limit = match &self.locator {
            Locator::Lattice { spacing, radius2, .. } => (*radius2 as f64) * spacing * spacing * (1.0 + 1e-9),
            Locator::Cells(_) => f64::INFINITY,
        };
        let mut out = Vec::new();
        for j in cand {
            let q = self.grid.node(j);
            let d2 = dist2(p, q);
            if d2 == 0.0 {
                out.push((j, 0.0));
            } else if d2 <= limit {
                let len = edge_length(&self.engine, p, q);
                if !len.is_nan() {
                    out.push((j, len));
                }
            }
        }
        out
    }

    fn dijkstra(&self, seeds: &[(usize, f64)], bound: f64, dist: &mut [f64], mut visit: impl FnMut(usize, f64) -> bool) {
        let mut heap = BinaryHeap::new();
        for &(j, d) in seeds {
            if d < dist[j] {
                dist[j] = d;
                heap.push(Item(d, j as u32));
            }
        }
        while let Some(Item(d, u)) = heap.pop() {
            let u = u as usize;
            if d > dist[u] {
                continue;
            }
            if d >= bound {
                break;
            }
            if !visit(u, d) {
                break;
            }
            for (v, len) in self.neighbors(u) {
                let nd = d + len;
                if nd < dist[v] {
                    dist[v] = nd;
                    heap.push(Item(nd, v as u32));
                }
            }
        }
    }

    /// Graph links of an interior point, or an error when it has none.
    fn attach(&self, p: &[Complex64]) -> Result<Vec<(usize, f64)>> {
        let links = self.virtual_links(p);
        if links.is_empty() {
            return Err(Error::Disconnected("query point has no graph neighbours".into()));
        }
        Ok(links)
    }

    /// Metric length of the straight segment from `a` to `b` by
    /// Gauss-Legendre quadrature. The model domains are convex, so the segment
    /// is an admissible path and its length bounds the distance from above.
    pub fn segment_length(&self, a: &[Complex64], b: &[Complex64]) -> f64 {
        let d = a.len();
        let delta: Vec<Complex64> = a.iter().zip(b).map(|(x, y)| y - x).collect();
        let (nodes, weights) = &self.segment_rule;
        let mut z = vec![Complex64::new(0.0, 0.0); d];
        let mut total = 0.0;
        for (s, w) in nodes.iter().zip(weights) {
            for j in 0..d {
                z[j] = a[j] + delta[j] * *s;
            }
            let g = self.engine.metric_matrix_unchecked(&z);
            total += w * hermitian_length_sqr(&g, d, &delta).max(0.0).sqrt();
        }
        total
    }

    /// Graph overestimates are searched this far beyond the bound so the
    /// segment shortcut can pull nodes back in.
    fn search_slack(&self) -> f64 {
        if self.grid.dim() == 1 {
            1.1
        } else {
            1.5
        }
    }

    /// `(node, distance)` pairs with distance `< bound` from an interior
    /// point, unordered. The distance is the shorter of the graph path and
    /// the straight segment.
    pub(crate) fn point_distances(&self, p: &[Complex64], bound: f64) -> Result<Vec<(usize, f64)>> {
        self.check_point(p)?;
        let seeds = self.attach(p)?;
        let mut dist = vec![f64::INFINITY; self.len()];
        let mut reached = Vec::new();
        self.dijkstra(&seeds, bound * self.search_slack(), &mut dist, |u, d| {
            reached.push((u, d));
            true
        });
        Ok(reached
            .into_par_iter()
            .map(|(u, d)| (u, d.min(self.segment_length(p, self.grid.node(u)))))
            .filter(|&(_, d)| d < bound)
            .collect())
    }

    pub(crate) fn bounded_from_node(&self, i: usize, bound: f64) -> Vec<(usize, f64)> {
        let mut dist = vec![f64::INFINITY; self.len()];
        let mut out = Vec::new();
        self.dijkstra(&[(i, 0.0)], bound, &mut dist, |u, d| {
            out.push((u, d));
            true
        });
        out
    }

    /// Pruned update of a running nearest-source distance array.
    pub(crate) fn relax_from(&self, i: usize, nearest: &mut [f64], owner: &mut [u32], tag: u32) {
        let mut heap = BinaryHeap::new();
        nearest[i] = 0.0;
        owner[i] = tag;
        heap.push(Item(0.0, i as u32));
        while let Some(Item(d, u)) = heap.pop() {
            let u = u as usize;
            if d > nearest[u] {
                continue;
            }
            for (v, len) in self.neighbors(u) {
                let nd = d + len;
                if nd < nearest[v] {
                    nearest[v] = nd;
                    owner[v] = tag;
                    heap.push(Item(nd, v as u32));
                }
            }
        }
    }

    /// Full single-source distances from node `i` (cached per source).
    pub fn distances_from_node(&self, i: usize) -> Arc<Vec<f64>> {
        if let Some(v) = self.cache.lock().unwrap().get(&i) {
            return v.clone();
        }
        let mut dist = vec![f64::INFINITY; self.len()];
        self.dijkstra(&[(i, 0.0)], f64::INFINITY, &mut dist, |_, _| true);
        let v = Arc::new(dist);
        self.cache.lock().unwrap().entry(i).or_insert_with(|| v.clone()).clone()
    }

    pub fn node_distance(&self, i: usize, j: usize) -> Result<f64> {
        let d = self.distances_from_node(i)[j];
        if d.is_finite() {
            Ok(d)
        } else {
            Err(Error::Disconnected(format!("nodes {i} and {j} are not connected")))
        }
    }

    fn check_point(&self, p: &[Complex64]) -> Result<()> {
        if !self.domain().contains(p)? {
            return Err(Error::OutsideDomain);
        }
        Ok(())
    }

    /// Distance between two interior points: the shorter of the graph path
    /// (with both points linked into the graph) and the straight segment.
    pub fn distance(&self, a: &[Complex64], b: &[Complex64]) -> Result<f64> {
        self.check_point(a)?;
        self.check_point(b)?;
        if a == b {
            return Ok(0.0);
        }
        let seeds = self.attach(a)?;
        let exit: HashMap<usize, f64> = self.attach(b)?.into_iter().collect();
        let mut dist = vec![f64::INFINITY; self.len()];
        let mut best = self.segment_length(a, b);
        self.dijkstra(&seeds, f64::INFINITY, &mut dist, |u, d| {
            if d >= best {
                return false;
            }
            if let Some(l) = exit.get(&u) {
                best = best.min(d + l);
            }
            true
        });
        Ok(best)
    }

}

fn dist2(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum()
}

fn flat(idx: impl Iterator<Item = i64>, half: i64, side: i64) -> usize {
    let mut k = 0i64;
    for v in idx {
        k = k * side + (v + half);
    }
    k as usize
}

fn symmetrize(grid: &QuadratureGrid, lists: Vec<(Vec<(u32, f64)>, u16)>) -> Vec<(Vec<(u32, f64)>, u16)> {
    let n = lists.len();
    let mut all: Vec<Vec<(u32, f64)>> = lists.iter().map(|(l, _)| l.clone()).collect();
    for (i, (l, _)) in lists.iter().enumerate() {
        for &(j, len) in l {
            all[j as usize].push((i as u32, len));
        }
    }
    let real_dim = 2 * grid.dim();
    (0..n)
        .map(|i| {
            let z = grid.node(i);
            let mut l = std::mem::take(&mut all[i]);
            l.sort_by(|a, b| {
                dist2(z, grid.node(a.0 as usize)).total_cmp(&dist2(z, grid.node(b.0 as usize))).then(a.0.cmp(&b.0))
            });
            l.dedup_by_key(|e| e.0);
            let near = l.len().min(2 * real_dim) as u16;
            (l, near)
        })
        .collect()
}

/// Uniform cell hash for k-nearest queries on unstructured node sets.
struct CellIndex {
    size: f64,
    radius: f64,
    cells: HashMap<Vec<i64>, Vec<u32>>,
}

impl CellIndex {
    fn new(grid: &QuadratureGrid) -> Self {
        let real_dim = 2 * grid.dim();
        let per_node = (grid.total_weight() / grid.len() as f64).powf(1.0 / real_dim as f64);
        let size = 2.0 * per_node;
        let mut cells: HashMap<Vec<i64>, Vec<u32>> = HashMap::new();
        for (i, z) in grid.nodes().enumerate() {
            cells.entry(Self::key(z, size)).or_default().push(i as u32);
        }
        let radius = grid.nodes().map(norm2).fold(0.0, f64::max).sqrt();
        CellIndex { size, radius, cells }
    }

    fn key(z: &[Complex64], size: f64) -> Vec<i64> {
        z.iter().flat_map(|c| [(c.re / size).floor() as i64, (c.im / size).floor() as i64]).collect()
    }

    /// `k` nearest nodes by Euclidean distance, sorted (index breaks ties).
    fn nearest(&self, grid: &QuadratureGrid, p: &[Complex64], k: usize) -> Vec<(usize, f64)> {
        let base = Self::key(p, self.size);
        let real_dim = base.len();
        let mut found: Vec<(usize, f64)> = Vec::new();
        let extent = (norm2(p).sqrt() + 2.0 * self.radius) / self.size + 2.0;
        let mut shell = 0i64;
        loop {
            let mut o = vec![-shell; real_dim];
            loop {
                if o.iter().any(|v| v.abs() == shell) {
                    let cell: Vec<i64> = base.iter().zip(&o).map(|(a, b)| a + b).collect();
                    if let Some(list) = self.cells.get(&cell) {
                        for &j in list {
                            found.push((j as usize, dist2(p, grid.node(j as usize))));
                        }
                    }
                }
                let mut q = real_dim;
                let mut done = true;
                while q > 0 {
                    q -= 1;
                    o[q] += 1;
                    if o[q] <= shell {
                        done = false;
                        break;
                    }
                    o[q] = -shell;
                }
                if done {
                    break;
                }
            }
            found.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
            let covered = shell as f64 * self.size;
            if (found.len() >= k && found[k - 1].1 <= covered * covered) || shell as f64 > extent {
                found.truncate(k);
                return found;
            }
            shell += 1;
        }
    }
}
