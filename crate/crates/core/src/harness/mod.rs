//! Configuration, symbol parsing and the command runner behind the CLI.
//! Every command writes CSV tables and a JSON summary with a provenance
//! block; identical configurations give byte-identical files.

mod config;
mod symbol;

pub use config::ExperimentConfig;
pub use symbol::parse_symbol;

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use num_complex::Complex64;
use serde::Serialize;

use crate::approximation::{
    boundary_parameters, boundary_scan, decompose, polydisc_face_disc, variety_test, DecomposeOptions, ScanParams,
};
use crate::diagnostics::{sbg_check, t91_equivalences};
use crate::domains::{build_grid_seeded, DomainKind, DomainSpec, GridScheme, QuadratureGrid};
use crate::error::{Error, Result};
use crate::geometry::{GeodesicField, GeodesicOptions, PartitionOfUnity};
use crate::kernel::{orthonormalize, IndexSet, KernelEngine, DEFAULT_GRAM_CUTOFF};
use crate::operators::{compactness_indicator, hankel_matrix, weak_null_probe, OperatorTruncation};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Kernel,
    Metric,
    Distance,
    Net,
    Hankel,
    OmegaScan,
    Decompose,
    SbgCheck,
    T91,
    Variety,
    Report,
}

impl Command {
    pub const ALL: [Command; 11] = [
        Command::Kernel,
        Command::Metric,
        Command::Distance,
        Command::Net,
        Command::Hankel,
        Command::OmegaScan,
        Command::Decompose,
        Command::SbgCheck,
        Command::T91,
        Command::Variety,
        Command::Report,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::Kernel => "kernel",
            Command::Metric => "metric",
            Command::Distance => "distance",
            Command::Net => "net",
            Command::Hankel => "hankel",
            Command::OmegaScan => "omega-scan",
            Command::Decompose => "decompose",
            Command::SbgCheck => "sbg-check",
            Command::T91 => "t91",
            Command::Variety => "variety",
            Command::Report => "report",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Command::ALL.into_iter().find(|c| c.name() == s).ok_or_else(|| Error::UnknownCommand(s.to_string()))
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Provenance {
    pub config_hash: String,
    pub grid_checksum: Option<String>,
    pub version: String,
    pub domain: String,
}

#[derive(Serialize)]
struct Summary<'a, T: Serialize> {
    command: &'a str,
    provenance: &'a Provenance,
    warnings: &'a [String],
    result: T,
}

/// Files written by a command, relative to the output directory.
#[derive(Clone, Debug, Default)]
pub struct RunOutput {
    pub files: Vec<String>,
    pub warnings: Vec<String>,
}

struct Writer {
    dir: PathBuf,
    out: RunOutput,
}

impl Writer {
    fn file(&mut self, name: &str, body: &str) -> Result<()> {
        fs::write(self.dir.join(name), body)?;
        self.out.files.push(name.to_string());
        Ok(())
    }

    fn summary<T: Serialize>(&mut self, cmd: Command, prov: &Provenance, result: T) -> Result<()> {
        let s = Summary { command: cmd.name(), provenance: prov, warnings: &self.out.warnings, result };
        let mut text = serde_json::to_string_pretty(&s).map_err(|e| Error::Config(e.to_string()))?;
        text.push('\n');
        let name = format!("{}.json", cmd.name());
        fs::write(self.dir.join(&name), text)?;
        self.out.files.push(name);
        Ok(())
    }
}

/// Everything a command may need, built lazily from the config.
struct Context<'a> {
    cfg: &'a ExperimentConfig,
    dom: DomainSpec,
}

impl<'a> Context<'a> {
    fn resolution(&self) -> f64 {
        self.cfg.resolution.unwrap_or_else(|| self.dom.default_resolution())
    }

    fn scheme(&self) -> Result<GridScheme> {
        Ok(self.cfg.grid_scheme()?.unwrap_or_else(|| GridScheme::default_for(&self.dom)))
    }

    fn grid(&self) -> Result<QuadratureGrid> {
        build_grid_seeded(&self.dom, self.resolution(), self.scheme()?, self.cfg.seed)
    }

    fn numerical(&self) -> bool {
        self.cfg.kernel == "numerical"
    }

    fn engine(&self) -> Result<KernelEngine> {
        kernel_engine(self.cfg)
    }

    fn field(&self) -> Result<GeodesicField> {
        let grid = self.grid()?;
        let engine = self.engine()?;
        let opts = match self.cfg.neighbors_per_real_dim {
            Some(k) => GeodesicOptions { neighbors_per_real_dim: k },
            None => GeodesicOptions::default_for(self.dom.dim),
        };
        GeodesicField::new(&engine, Arc::new(grid), opts)
    }

    fn provenance(&self, grid: Option<&QuadratureGrid>) -> Provenance {
        Provenance {
            config_hash: self.cfg.hash(),
            grid_checksum: grid.map(|g| g.checksum()),
            version: env!("CARGO_PKG_VERSION").to_string(),
            domain: self.dom.label.clone(),
        }
    }

    fn ts(&self) -> Vec<f64> {
        boundary_parameters(self.cfg.steps, self.cfg.t_min, self.cfg.t_max)
    }

    fn rays(&self) -> Vec<Vec<Complex64>> {
        self.dom.rays(self.cfg.rays, self.cfg.seed)
    }

    /// Anchor followed by ray points.
    fn scan_points(&self) -> Vec<(Option<usize>, f64, Vec<Complex64>)> {
        let mut out = vec![(None, 0.0, self.dom.anchor.clone())];
        for (k, dir) in self.rays().iter().enumerate() {
            for t in self.ts() {
                out.push((Some(k), t, self.dom.ray_point(dir, t)));
            }
        }
        out
    }
}

fn coord_header(prefix: &str, d: usize) -> String {
    (1..=d).map(|j| format!("re_{prefix}{j},im_{prefix}{j}")).collect::<Vec<_>>().join(",")
}

fn coords(z: &[Complex64]) -> String {
    z.iter().map(|c| format!("{:.17e},{:.17e}", c.re, c.im)).collect::<Vec<_>>().join(",")
}

fn ray_label(r: Option<usize>) -> String {
    r.map_or_else(|| "anchor".to_string(), |k| k.to_string())
}

/// Bergman distance from the origin where it has a closed form.
fn exact_distance_from_origin(dom: &DomainSpec, z: &[Complex64]) -> Option<f64> {
    if dom.anchor.iter().any(|c| c.norm() != 0.0) {
        return None;
    }
    match dom.kind {
        DomainKind::Disc | DomainKind::Ball => {
            let r = z.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
            Some(((dom.dim + 1) as f64).sqrt() * r.atanh())
        }
        DomainKind::Polydisc => Some(z.iter().map(|c| 2.0 * c.norm().atanh().powi(2)).sum::<f64>().sqrt()),
        _ => None,
    }
}

/// Runs one command and writes its artifacts into `out`.
pub fn run(cfg: &ExperimentConfig, cmd: Command, out: &Path) -> Result<RunOutput> {
    cfg.validate()?;
    fs::create_dir_all(out)?;
    let ctx = Context { cfg, dom: cfg.domain_spec()? };
    let mut w = Writer { dir: out.to_path_buf(), out: RunOutput::default() };
    match cmd {
        Command::Kernel => run_kernel(&ctx, &mut w)?,
        Command::Metric => run_metric(&ctx, &mut w)?,
        Command::Distance => run_distance(&ctx, &mut w)?,
        Command::Net => run_net(&ctx, &mut w)?,
        Command::Hankel => run_hankel(&ctx, &mut w)?,
        Command::OmegaScan => run_omega(&ctx, &mut w)?,
        Command::Decompose => run_decompose(&ctx, &mut w)?,
        Command::SbgCheck => run_sbg(&ctx, &mut w)?,
        Command::T91 => run_t91(&ctx, &mut w)?,
        Command::Variety => run_variety(&ctx, &mut w)?,
        Command::Report => run_report(&ctx, &mut w)?,
    }
    Ok(w.out)
}

#[derive(Serialize)]
struct KernelSummary {
    points: usize,
    pairs: usize,
    closed_form: bool,
    /// Largest relative deviation from the closed form (numerical mode).
    max_relative_error: Option<f64>,
}

fn run_kernel(ctx: &Context, w: &mut Writer) -> Result<()> {
    let grid = if ctx.numerical() { Some(basis_grid(&ctx.dom, ctx.cfg)?) } else { None };
    let engine = ctx.engine()?;
    let exact = KernelEngine::closed_form(ctx.dom.clone()).ok().filter(|_| !engine.is_closed_form());
    let pts = ctx.scan_points();
    let d = ctx.dom.dim;
    let mut csv = format!("{},{},re_B,im_B\n", coord_header("z", d), coord_header("w", d));
    let mut worst: f64 = 0.0;
    for (_, _, z) in &pts {
        for (_, _, v) in &pts {
            let b = engine.kernel(z, v)?;
            if let Some(e) = &exact {
                let want = e.kernel(z, v)?;
                worst = worst.max((b - want).norm() / want.norm());
            }
            writeln!(csv, "{},{},{:.17e},{:.17e}", coords(z), coords(v), b.re, b.im).unwrap();
        }
    }
    w.file("kernel.csv", &csv)?;
    let prov = ctx.provenance(grid.as_ref());
    let summary = KernelSummary {
        points: pts.len(),
        pairs: pts.len() * pts.len(),
        closed_form: engine.is_closed_form(),
        max_relative_error: exact.map(|_| worst),
    };
    w.summary(Command::Kernel, &prov, summary)
}

#[derive(Serialize)]
struct MetricSummary {
    points: usize,
    refused: usize,
    step: f64,
    min_eigenvalue: f64,
}

fn run_metric(ctx: &Context, w: &mut Writer) -> Result<()> {
    let engine = ctx.engine()?;
    let d = ctx.dom.dim;
    let h = (ctx.resolution() / 10.0).max(1e-4);
    let mut csv = format!("ray,t,{}", coord_header("z", d));
    for j in 1..=d {
        for k in 1..=d {
            write!(csv, ",re_g{j}{k},im_g{j}{k}").unwrap();
        }
    }
    csv.push_str(",det,min_eigenvalue,status\n");
    let mut refused = 0;
    let mut lo = f64::INFINITY;
    let pts = ctx.scan_points();
    for (ray, t, z) in &pts {
        write!(csv, "{},{:.17e},{}", ray_label(*ray), t, coords(z)).unwrap();
        match engine.metric(z, h) {
            Ok(m) => {
                for v in &m.g {
                    write!(csv, ",{:.17e},{:.17e}", v.re, v.im).unwrap();
                }
                let e = m.min_eigenvalue();
                lo = lo.min(e);
                writeln!(csv, ",{:.17e},{:.17e},ok", m.det, e).unwrap();
            }
            Err(Error::NearBoundary { .. }) => {
                refused += 1;
                csv.push_str(&",nan,nan".repeat(d * d));
                csv.push_str(",nan,nan,near-boundary\n");
            }
            Err(e) => return Err(e),
        }
    }
    if refused > 0 {
        w.out.warnings.push(format!("{refused} points too close to the boundary for the difference step {h}"));
    }
    w.file("metric.csv", &csv)?;
    let prov = ctx.provenance(None);
    w.summary(Command::Metric, &prov, MetricSummary { points: pts.len(), refused, step: h, min_eigenvalue: lo })
}

#[derive(Serialize)]
struct DistanceSummary {
    nodes: usize,
    edges: usize,
    max_relative_error: Option<f64>,
}

fn run_distance(ctx: &Context, w: &mut Writer) -> Result<()> {
    let field = ctx.field()?;
    let d = ctx.dom.dim;
    let anchor = ctx.dom.anchor.clone();
    let mut csv = format!("ray,t,{},distance,exact\n", coord_header("z", d));
    let mut worst: Option<f64> = None;
    for (ray, t, z) in ctx.scan_points().into_iter().skip(1) {
        let dist = field.distance(&anchor, &z)?;
        let exact = exact_distance_from_origin(&ctx.dom, &z);
        if let Some(e) = exact {
            let rel = (dist - e).abs() / e;
            worst = Some(worst.map_or(rel, |v: f64| v.max(rel)));
        }
        let ex = exact.map_or_else(|| "nan".to_string(), |e| format!("{e:.17e}"));
        writeln!(csv, "{},{:.17e},{},{:.17e},{}", ray_label(ray), t, coords(&z), dist, ex).unwrap();
    }
    w.file("distance.csv", &csv)?;
    let prov = ctx.provenance(Some(field.grid()));
    w.summary(Command::Distance, &prov, DistanceSummary { nodes: field.len(), edges: field.edge_count(), max_relative_error: worst })
}

#[derive(Serialize)]
struct NetSummary {
    separation: f64,
    audit: crate::geometry::NetAudit,
    multiplicity: Vec<(f64, usize)>,
    ball_radius: f64,
    ball_nodes: usize,
    ball_lebesgue_mass: f64,
    ball_volume_mass: f64,
}

fn run_net(ctx: &Context, w: &mut Writer) -> Result<()> {
    let field = ctx.field()?;
    let net = field.build_net(ctx.cfg.net_separation)?;
    let audit = field.audit_net(&net);
    let multiplicity = net.multiplicity_table(&field, &ctx.cfg.multiplicity_radii);
    let ball = field.ball(&ctx.dom.anchor, ctx.cfg.radius)?;
    w.file("net.csv", &net.to_csv(&field))?;
    w.file("ball.csv", &ball.to_csv(&field))?;
    let prov = ctx.provenance(Some(field.grid()));
    let s = NetSummary {
        separation: net.separation,
        audit,
        multiplicity,
        ball_radius: ball.radius,
        ball_nodes: ball.len(),
        ball_lebesgue_mass: ball.lebesgue_mass,
        ball_volume_mass: ball.volume_mass,
    };
    w.summary(Command::Net, &prov, s)
}

/// Kernel engine selected by `cfg.kernel`: closed form, or the orthonormal
/// monomial basis of degree `cfg.degree` on the basis grid.
pub fn kernel_engine(cfg: &ExperimentConfig) -> Result<KernelEngine> {
    let dom = cfg.domain_spec()?;
    if cfg.kernel != "numerical" {
        return KernelEngine::closed_form(dom);
    }
    let grid = basis_grid(&dom, cfg)?;
    let basis = orthonormalize(&dom, &grid, cfg.degree, DEFAULT_GRAM_CUTOFF)?;
    KernelEngine::numerical(dom, basis)
}

/// Grid for basis Gram matrices (numerical kernels, operator matrices): the
/// polar product rule where the domain allows it, which integrates the
/// monomial products exactly.
pub fn basis_grid(dom: &DomainSpec, cfg: &ExperimentConfig) -> Result<QuadratureGrid> {
    let polar = matches!(dom.kind, DomainKind::Disc | DomainKind::Ball | DomainKind::Polydisc | DomainKind::Egg { .. });
    let res = cfg.basis_resolution.unwrap_or(if dom.dim == 1 { 0.04 } else { 0.2 });
    let scheme = if polar { GridScheme::Polar } else { GridScheme::default_for(dom) };
    build_grid_seeded(dom, res, scheme, cfg.seed)
}

#[derive(Serialize)]
struct HankelSummary {
    symbol: String,
    grid_nodes: usize,
    spectra: Vec<OperatorTruncation>,
    indicator: crate::operators::CompactnessIndicator,
}

fn run_hankel(ctx: &Context, w: &mut Writer) -> Result<()> {
    let symbol = parse_symbol(&ctx.cfg.symbol, ctx.dom.dim)?;
    let grid = basis_grid(&ctx.dom, ctx.cfg)?;
    let set = IndexSet::default_for(&ctx.dom);
    let mut spectra = Vec::new();
    let mut last_basis = None;
    let mut csv = String::from("N,k,sigma\n");
    for n in ctx.cfg.degree_sweep() {
        let (h, basis) = hankel_matrix(&ctx.dom, &grid, &symbol, n, ctx.cfg.guard, set)?;
        csv.push_str(&h.spectrum_csv(false));
        spectra.push(h);
        last_basis = Some(basis);
    }
    w.file("spectra.csv", &csv)?;
    let basis = last_basis.expect("degree sweep is never empty");
    let top = spectra.last().unwrap();
    let mut probes = Vec::new();
    let mut pcsv = String::from("ray,t,norm\n");
    for (k, dir) in ctx.rays().iter().enumerate() {
        let centers: Vec<Vec<Complex64>> = ctx.cfg.probe_ts.iter().map(|&t| ctx.dom.ray_point(dir, t)).collect();
        let vals = weak_null_probe(top, &basis, &centers)?;
        for (t, v) in ctx.cfg.probe_ts.iter().zip(&vals) {
            writeln!(pcsv, "{k},{t:.17e},{v:.17e}").unwrap();
        }
        probes.push(vals);
    }
    w.file("probe.csv", &pcsv)?;
    let refs: Vec<&OperatorTruncation> = spectra.iter().collect();
    let indicator = compactness_indicator(&refs, &probes);
    let prov = ctx.provenance(Some(&grid));
    w.summary(Command::Hankel, &prov, HankelSummary { symbol: symbol.name.clone(), grid_nodes: grid.len(), spectra, indicator })
}

#[derive(Serialize)]
struct RadiusTrend {
    radius: f64,
    tail_trend: f64,
    sup: f64,
    decaying: bool,
    admissible_rows: usize,
}

#[derive(Serialize)]
struct OmegaSummary {
    symbol: String,
    degree: usize,
    mode: String,
    radius: f64,
    tail_trend: f64,
    ray_trends: Vec<f64>,
    sup: f64,
    decaying: bool,
    admissible_rows: usize,
    sweep: Vec<RadiusTrend>,
}

fn run_omega(ctx: &Context, w: &mut Writer) -> Result<()> {
    let field = ctx.field()?;
    let symbol = parse_symbol(&ctx.cfg.symbol, ctx.dom.dim)?;
    let mode = ctx.cfg.measure_mode()?;
    let mut radii = vec![ctx.cfg.radius];
    radii.extend(ctx.cfg.radius_sweep.iter().copied().filter(|&r| r != ctx.cfg.radius));
    let mut csv = String::new();
    let mut main = None;
    let mut sweep = Vec::new();
    for (k, &r) in radii.iter().enumerate() {
        let params = ScanParams { radius: r, degree: ctx.cfg.approx_degree, mode, rays: ctx.rays(), ts: ctx.ts() };
        let rep = boundary_scan(&field, &symbol, &params)?;
        let body = rep.to_csv();
        csv.push_str(if k == 0 { &body } else { body.split_once('\n').map_or("", |x| x.1) });
        sweep.push(RadiusTrend {
            radius: r,
            tail_trend: rep.tail_trend,
            sup: rep.sup,
            decaying: rep.decaying,
            admissible_rows: rep.admissible_rows,
        });
        if k == 0 {
            main = Some(rep);
        }
    }
    w.file("scan.csv", &csv)?;
    let rep = main.unwrap();
    let excluded = rep.rows.len() - rep.admissible_rows;
    if excluded > 0 {
        w.out.warnings.push(format!("{excluded} scan points had too few ball nodes and were excluded"));
    }
    let prov = ctx.provenance(Some(field.grid()));
    let s = OmegaSummary {
        symbol: symbol.name.clone(),
        degree: ctx.cfg.approx_degree,
        mode: mode.name().into(),
        radius: ctx.cfg.radius,
        tail_trend: rep.tail_trend,
        ray_trends: rep.ray_trends,
        sup: rep.sup,
        decaying: rep.decaying,
        admissible_rows: rep.admissible_rows,
        sweep,
    };
    w.summary(Command::OmegaScan, &prov, s)
}

#[derive(Serialize)]
struct DecomposeSummary {
    symbol: String,
    radius: f64,
    separation: f64,
    partition_inner: f64,
    partition_outer: f64,
    centers: usize,
    audit: crate::approximation::DecompositionAudit,
}

fn run_decompose(ctx: &Context, w: &mut Writer) -> Result<()> {
    let field = ctx.field()?;
    let symbol = parse_symbol(&ctx.cfg.symbol, ctx.dom.dim)?;
    let r = ctx.cfg.radius;
    // supports of the cutoffs lie in B(ζ_m, r/2), so overlapping ones have
    // centres closer than r
    let sep = r / 3.0;
    let net = field.build_net(sep)?;
    let pou = PartitionOfUnity::build(&field, &net, sep, r / 2.0)?;
    let dec = decompose(&field, &net, &pou, &symbol, DecomposeOptions { radius: r, degree: ctx.cfg.approx_degree, shell_width: r })?;
    let grid = field.grid();
    let d = ctx.dom.dim;
    let mut csv = format!("center,node,{},epsilon,admissible\n", coord_header("z", d));
    for (m, &c) in dec.centers.iter().enumerate() {
        writeln!(csv, "{m},{c},{},{:.17e},{}", coords(grid.node(c)), dec.epsilons[m], dec.admissible[m] as u8).unwrap();
    }
    w.file("decomposition.csv", &csv)?;
    w.out.warnings.extend(dec.audit.warnings.iter().cloned());
    let prov = ctx.provenance(Some(grid));
    let s = DecomposeSummary {
        symbol: symbol.name.clone(),
        radius: r,
        separation: sep,
        partition_inner: pou.inner,
        partition_outer: pou.outer,
        centers: dec.centers.len(),
        audit: dec.audit,
    };
    w.summary(Command::Decompose, &prov, s)
}

#[derive(Serialize)]
struct SbgSummary {
    coarse: crate::diagnostics::SbgReport,
    fine: crate::diagnostics::SbgReport,
    verdict: String,
}

fn run_sbg(ctx: &Context, w: &mut Writer) -> Result<()> {
    let grid = ctx.grid()?;
    let engine = ctx.engine()?;
    let fine_grid = build_grid_seeded(&ctx.dom, grid.resolution() / 2.0, grid.scheme(), ctx.cfg.seed)?;
    let coarse = sbg_check(&engine, &grid)?;
    let fine = sbg_check(&engine, &fine_grid)?;
    let coarse_est = coarse.estimate.clone().with_refinement(&fine.estimate);
    let mut csv = String::from("resolution,min_gap,running_sup\n");
    for (rep, res) in [(&coarse, grid.resolution()), (&fine, fine_grid.resolution())] {
        for (g, s) in &rep.running_sup {
            writeln!(csv, "{res:.17e},{g:.17e},{s:.17e}").unwrap();
        }
    }
    w.file("sbg.csv", &csv)?;
    let verdict = if coarse.converging && fine.converging && fine.estimate.is_finite() {
        "consistent with self bounded gradient"
    } else {
        "not consistent with self bounded gradient on the admissible nodes"
    };
    let prov = ctx.provenance(Some(&grid));
    let coarse = crate::diagnostics::SbgReport { estimate: coarse_est, ..coarse };
    w.summary(Command::SbgCheck, &prov, SbgSummary { coarse, fine, verdict: verdict.into() })
}

fn run_t91(ctx: &Context, w: &mut Writer) -> Result<()> {
    let field = ctx.field()?;
    let centers: Vec<Vec<Complex64>> =
        ctx.scan_points().into_iter().filter(|(_, t, _)| *t <= 0.9).map(|(_, _, z)| z).collect();
    let rep = t91_equivalences(&field, &centers, ctx.cfg.radius)?;
    for c in &rep.conditions {
        if let Some(msg) = &c.skipped {
            w.out.warnings.push(format!("condition ({}) skipped: {msg}", c.id));
        }
    }
    let mut csv = String::from("condition,constant,min,max,samples,status\n");
    for c in &rep.conditions {
        match &c.estimate {
            Some(e) => writeln!(csv, "{},{:.17e},{:.17e},{:.17e},{},ok", c.id, e.value, e.min, e.max, e.samples).unwrap(),
            None => writeln!(csv, "{},nan,nan,nan,0,skipped", c.id).unwrap(),
        }
    }
    w.file("t91.csv", &csv)?;
    let prov = ctx.provenance(Some(field.grid()));
    w.summary(Command::T91, &prov, rep)
}

#[derive(Serialize)]
struct VarietySummary {
    symbol: String,
    fixed_coordinate: usize,
    free_coordinate: usize,
    theta: f64,
    samples: usize,
    residual: f64,
    holomorphic_along_disc: bool,
}

fn run_variety(ctx: &Context, w: &mut Writer) -> Result<()> {
    if ctx.dom.kind != DomainKind::Polydisc || ctx.dom.dim < 2 {
        return Err(Error::Unsupported(format!("no boundary discs are tabulated for {}", ctx.dom.label)));
    }
    let d = ctx.dom.dim;
    let (fixed, free) = (ctx.cfg.fixed_coordinate, ctx.cfg.free_coordinate);
    if fixed == 0 || free == 0 || fixed > d || free > d || fixed == free {
        return Err(Error::Config("fixed and free coordinates must be distinct and within the dimension".into()));
    }
    let symbol = parse_symbol(&ctx.cfg.symbol, d)?;
    let disc = polydisc_face_disc(d, fixed - 1, ctx.cfg.theta, free - 1);
    let residual = variety_test(&ctx.dom, &symbol, &disc, ctx.cfg.variety_samples)?;
    let prov = ctx.provenance(None);
    let s = VarietySummary {
        symbol: symbol.name.clone(),
        fixed_coordinate: fixed,
        free_coordinate: free,
        theta: ctx.cfg.theta,
        samples: ctx.cfg.variety_samples,
        residual,
        holomorphic_along_disc: residual <= 1e-8,
    };
    w.summary(Command::Variety, &prov, s)
}

/// Collects the JSON summaries already in the output directory.
fn run_report(ctx: &Context, w: &mut Writer) -> Result<()> {
    let mut names: Vec<String> = fs::read_dir(&w.dir)?
        .filter_map(|e| e.ok())
        .map(|e| e.file_name().to_string_lossy().into_owned())
        .filter(|n| n.ends_with(".json") && n != "report.json")
        .collect();
    names.sort();
    let mut sections = serde_json::Map::new();
    for n in &names {
        let text = fs::read_to_string(w.dir.join(n))?;
        let value: serde_json::Value =
            serde_json::from_str(&text).map_err(|e| Error::Parse { position: e.column(), message: format!("{n}: {e}") })?;
        sections.insert(n.trim_end_matches(".json").to_string(), value);
    }
    if names.is_empty() {
        w.out.warnings.push("no summaries found; run other commands first".into());
    }
    let prov = ctx.provenance(None);
    w.summary(Command::Report, &prov, sections)
}

#[cfg(test)]
mod tests;
