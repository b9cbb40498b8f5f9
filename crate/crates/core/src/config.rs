//! Run configuration: defaults, flat TOML files, environment and flag overrides.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::path::Path;

pub const SEED_ENV: &str = "GBLAB_SEED";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Json,
    Csv,
    Text,
}

impl std::str::FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            "text" => Ok(Format::Text),
            other => Err(Error::Input(format!("unknown format '{other}'"))),
        }
    }
}

/// Every knob of a verification run. Defaults reproduce the acceptance runs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub format: Format,
    /// Monte Carlo samples per solid-angle estimate.
    pub samples: usize,
    pub pfaffian_cases: usize,
    pub flatform_cases: usize,
    pub tiling_coframes: usize,
    pub sphere_resolution: usize,
    pub gauss_bonnet_resolution: usize,
    pub thom_resolution: usize,
    pub thom_radius: f64,
    pub rotation_resolution: usize,
    pub rotation_scale: f64,
    pub disk_resolution: usize,
    pub ball_resolution: usize,
    pub hazzidakis_resolution: usize,
    pub convergence_resolutions: Vec<usize>,
    pub shifted_rectangles: usize,

    pub tol_pfaffian_det: f64,
    pub tol_pfaffian_conjugation: f64,
    pub tol_pfaffian_definition: f64,
    pub tol_thom: f64,
    pub tol_sphere_volume: f64,
    pub tol_gauss_bonnet_sphere: f64,
    pub tol_gauss_bonnet_torus: f64,
    pub tol_rotation_index: f64,
    pub tol_disk: f64,
    pub tol_ball: f64,
    pub tol_flat_match: f64,
    pub tol_flat_residual: f64,
    pub tol_hazzidakis: f64,
    pub tol_order: f64,
    pub tol_tiling: f64,
    pub tol_euclidean_cell: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0xC0FFEE,
            format: Format::Json,
            samples: 1_000_000,
            pfaffian_cases: 100,
            flatform_cases: 100,
            tiling_coframes: 4,
            sphere_resolution: 61,
            gauss_bonnet_resolution: 201,
            thom_resolution: 121,
            thom_radius: 6.0,
            rotation_resolution: 401,
            rotation_scale: 40.0,
            disk_resolution: 401,
            ball_resolution: 201,
            hazzidakis_resolution: 513,
            convergence_resolutions: vec![65, 129, 257, 513],
            shifted_rectangles: 64,
            tol_pfaffian_det: 1e-9,
            tol_pfaffian_conjugation: 1e-8,
            tol_pfaffian_definition: 1e-10,
            tol_thom: 1e-8,
            tol_sphere_volume: 1e-3,
            tol_gauss_bonnet_sphere: 1e-3,
            tol_gauss_bonnet_torus: 1e-10,
            tol_rotation_index: 1e-5,
            tol_disk: 1e-6,
            tol_ball: 1e-4,
            tol_flat_match: 1e-8,
            tol_flat_residual: 1e-7,
            tol_hazzidakis: 1e-6,
            tol_order: 0.2,
            tol_tiling: 4e-3,
            tol_euclidean_cell: 2e-3,
        }
    }
}

impl RunConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(s).map_err(|e| Error::Input(format!("config: {}", e.message().trim())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Input(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text).map_err(|e| Error::Input(format!("{}: {e}", path.display())))
    }

    /// Applies `GBLAB_SEED` when set; decimal or `0x`-prefixed hex.
    pub fn apply_env(&mut self) -> Result<()> {
        if let Ok(v) = std::env::var(SEED_ENV) {
            self.seed = parse_seed(&v)?;
        }
        Ok(())
    }

    pub fn tolerances(&self) -> [(&'static str, f64); 16] {
        [
            ("tol_pfaffian_det", self.tol_pfaffian_det),
            ("tol_pfaffian_conjugation", self.tol_pfaffian_conjugation),
            ("tol_pfaffian_definition", self.tol_pfaffian_definition),
            ("tol_thom", self.tol_thom),
            ("tol_sphere_volume", self.tol_sphere_volume),
            ("tol_gauss_bonnet_sphere", self.tol_gauss_bonnet_sphere),
            ("tol_gauss_bonnet_torus", self.tol_gauss_bonnet_torus),
            ("tol_rotation_index", self.tol_rotation_index),
            ("tol_disk", self.tol_disk),
            ("tol_ball", self.tol_ball),
            ("tol_flat_match", self.tol_flat_match),
            ("tol_flat_residual", self.tol_flat_residual),
            ("tol_hazzidakis", self.tol_hazzidakis),
            ("tol_order", self.tol_order),
            ("tol_tiling", self.tol_tiling),
            ("tol_euclidean_cell", self.tol_euclidean_cell),
        ]
    }

    pub fn validate(&self) -> Result<()> {
        for (name, t) in self.tolerances() {
            if !(t > 0.0 && t.is_finite()) {
                return Err(Error::Input(format!("{name} must be positive, got {t}")));
            }
        }
        let grids = [
            ("sphere_resolution", self.sphere_resolution),
            ("gauss_bonnet_resolution", self.gauss_bonnet_resolution),
            ("thom_resolution", self.thom_resolution),
            ("rotation_resolution", self.rotation_resolution),
            ("disk_resolution", self.disk_resolution),
            ("ball_resolution", self.ball_resolution),
            ("hazzidakis_resolution", self.hazzidakis_resolution),
        ];
        for (name, r) in grids.iter().copied().chain(self.convergence_resolutions.iter().map(|&r| ("convergence_resolutions", r))) {
            if r < 3 {
                return Err(Error::Input(format!("{name} must be at least 3, got {r}")));
            }
        }
        if self.convergence_resolutions.len() < 2 {
            return Err(Error::Input("convergence_resolutions needs at least two entries".into()));
        }
        if self.samples == 0 || self.pfaffian_cases == 0 || self.flatform_cases == 0 {
            return Err(Error::Input("sample and case counts must be positive".into()));
        }
        if !(self.thom_radius > 0.0 && self.rotation_scale > 0.0) {
            return Err(Error::Input("thom_radius and rotation_scale must be positive".into()));
        }
        Ok(())
    }
}

pub fn parse_seed(s: &str) -> Result<u64> {
    let t = s.trim();
    let parsed = match t.strip_prefix("0x").or_else(|| t.strip_prefix("0X")) {
        Some(hex) => u64::from_str_radix(hex, 16),
        None => t.parse(),
    };
    parsed.map_err(|_| Error::Input(format!("invalid seed '{s}'")))
}
