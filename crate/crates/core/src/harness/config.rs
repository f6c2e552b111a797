use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::approximation::MeasureMode;
use crate::domains::{DomainSpec, GridScheme};
use crate::error::{Error, Result};

/// Flat key-value experiment description. Missing keys take the defaults
/// below; unknown keys are rejected.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// `disc`, `ball`, `polydisc` or `egg`.
    pub domain: String,
    pub dim: usize,
    /// Exponent of the egg `|z1|² + |z2|^{2m} < 1`.
    pub egg_m: u32,
    /// `closed-form` or `numerical`.
    pub kernel: String,
    /// Grid spacing; the domain default when absent.
    pub resolution: Option<f64>,
    /// `tensor-midpoint`, `quasi-random` or `polar`; per-domain default when
    /// absent.
    pub scheme: Option<String>,
    pub seed: u64,
    /// Basis degree for numerical kernels and operator truncations.
    pub degree: usize,
    /// Degree sweep for operator spectra; `[degree]` when empty.
    pub degrees: Vec<usize>,
    pub guard: usize,
    /// Resolution of the grid for numerical kernels and operator matrices
    /// (polar where available).
    pub basis_resolution: Option<f64>,
    pub radius: f64,
    pub radius_sweep: Vec<f64>,
    pub approx_degree: usize,
    pub mode: String,
    pub symbol: String,
    pub rays: usize,
    pub steps: usize,
    pub t_min: f64,
    pub t_max: f64,
    pub probe_ts: Vec<f64>,
    pub net_separation: f64,
    pub multiplicity_radii: Vec<f64>,
    /// Angle of the fixed coordinate of the boundary disc.
    pub theta: f64,
    /// 1-based coordinate held on the unit circle by the boundary disc.
    pub fixed_coordinate: usize,
    /// 1-based coordinate running over the disc.
    pub free_coordinate: usize,
    pub variety_samples: usize,
    pub neighbors_per_real_dim: Option<usize>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            domain: "disc".into(),
            dim: 1,
            egg_m: 2,
            kernel: "closed-form".into(),
            resolution: None,
            scheme: None,
            seed: 0,
            degree: 20,
            degrees: Vec::new(),
            guard: 5,
            basis_resolution: None,
            radius: 1.0,
            radius_sweep: vec![0.5, 1.0, 1.5],
            approx_degree: 6,
            mode: "bergman-volume".into(),
            symbol: "conj(z1)".into(),
            rays: 4,
            steps: 8,
            t_min: 0.3,
            t_max: 0.95,
            probe_ts: vec![0.5, 0.7, 0.9, 0.95],
            net_separation: 0.5,
            multiplicity_radii: vec![1.0, 2.0],
            theta: 0.0,
            fixed_coordinate: 1,
            free_coordinate: 2,
            variety_samples: 64,
            neighbors_per_real_dim: None,
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// SHA-256 of the compact JSON serialization (fields in declaration
    /// order).
    pub fn hash(&self) -> String {
        let text = serde_json::to_string(self).expect("config fields are plain values");
        let digest = Sha256::digest(text.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.dim == 0 {
            return bad("dim must be positive".into());
        }
        // TOML integers are signed
        if self.seed > i64::MAX as u64 {
            return bad(format!("seed must be at most {}", i64::MAX));
        }
        for (name, v) in [
            ("radius", self.radius),
            ("t_max", self.t_max),
            ("t_min", self.t_min),
            ("net_separation", self.net_separation),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return bad(format!("{name} must be positive, got {v}"));
            }
        }
        if let Some(r) = self.resolution {
            if !(r > 0.0) {
                return bad(format!("resolution must be positive, got {r}"));
            }
        }
        if let Some(r) = self.basis_resolution {
            if !(r > 0.0) {
                return bad(format!("basis_resolution must be positive, got {r}"));
            }
        }
        if self.radius_sweep.iter().chain(&self.multiplicity_radii).any(|&r| !(r > 0.0)) {
            return bad("radii must be positive".into());
        }
        if !(self.t_min < self.t_max && self.t_max < 1.0) {
            return bad("need 0 < t_min < t_max < 1".into());
        }
        if self.probe_ts.iter().any(|&t| !(0.0..1.0).contains(&t)) {
            return bad("probe parameters must lie in [0, 1)".into());
        }
        if self.rays == 0 || self.steps == 0 || self.degree == 0 || self.variety_samples == 0 {
            return bad("rays, steps, degree and variety_samples must be positive".into());
        }
        if self.neighbors_per_real_dim == Some(0) {
            return bad("neighbors_per_real_dim must be positive".into());
        }
        self.domain_spec()?;
        self.grid_scheme()?;
        self.measure_mode()?;
        if !matches!(self.kernel.as_str(), "closed-form" | "numerical") {
            return bad(format!("kernel must be closed-form or numerical, got {:?}", self.kernel));
        }
        Ok(())
    }

    pub fn domain_spec(&self) -> Result<DomainSpec> {
        match self.domain.as_str() {
            "disc" => Ok(DomainSpec::disc()),
            "ball" => Ok(DomainSpec::ball(self.dim)),
            "polydisc" | "bidisc" => Ok(DomainSpec::polydisc(self.dim)),
            "egg" => {
                if self.egg_m == 0 {
                    return Err(Error::Config("egg_m must be positive".into()));
                }
                Ok(DomainSpec::egg(self.egg_m))
            }
            other => Err(Error::Config(format!("unknown domain {other:?}"))),
        }
    }

    pub fn grid_scheme(&self) -> Result<Option<GridScheme>> {
        match self.scheme.as_deref() {
            None => Ok(None),
            Some("tensor-midpoint") => Ok(Some(GridScheme::TensorMidpoint)),
            Some("quasi-random") => Ok(Some(GridScheme::QuasiRandom)),
            Some("polar") => Ok(Some(GridScheme::Polar)),
            Some(other) => Err(Error::Config(format!("unknown grid scheme {other:?}"))),
        }
    }

    pub fn measure_mode(&self) -> Result<MeasureMode> {
        MeasureMode::parse(&self.mode).map_err(|_| Error::Config(format!("unknown measure mode {:?}", self.mode)))
    }

    /// Degrees of the operator sweep.
    pub fn degree_sweep(&self) -> Vec<usize> {
        if self.degrees.is_empty() {
            vec![self.degree]
        } else {
            self.degrees.clone()
        }
    }
}
