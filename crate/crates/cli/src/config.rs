//! Run configuration: a versioned JSON document merged with command-line
//! overrides. Flags always win over the file.

use anyhow::{bail, Context, Result};
use rabi_core::ModelParams;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

pub const CONFIG_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_version")]
    pub version: u32,
    pub model: ParamsConfig,
    /// Pre-quench Hamiltonian; n_tr always follows `model`.
    #[serde(default = "ParamsConfig::quench_default")]
    pub quench_initial: ParamsConfig,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_out")]
    pub output_dir: PathBuf,
    /// Decomposition cache; defaults to <output_dir>/cache.
    #[serde(default)]
    pub cache_dir: Option<PathBuf>,
    /// n_tr convergence mode: when set, n_tr is chosen by doubling until the
    /// target quantity moves less than this relative tolerance.
    #[serde(default)]
    pub ntr_auto_tol: Option<f64>,
    /// Hard ceiling for the doubling schedule (exit code 4 when reached).
    #[serde(default = "default_ntr_cap")]
    pub ntr_cap: usize,
    /// Worker threads for sweep fan-out; defaults to the hardware count.
    /// Results are gathered in input order either way.
    #[serde(default)]
    pub parallelism: Option<usize>,
    #[serde(default)]
    pub levelstats: LevelStatsOptions,
    #[serde(default)]
    pub quench_stats: QuenchStatsOptions,
    #[serde(default)]
    pub gaussianity: GaussianityOptions,
    #[serde(default)]
    pub wigner: WignerOptions,
    #[serde(default)]
    pub classical: ClassicalOptions,
    #[serde(default)]
    pub sweep: SweepOptions,
    #[serde(default)]
    pub potentials: PotentialsOptions,
}

fn default_version() -> u32 {
    CONFIG_VERSION
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}

fn default_ntr_cap() -> usize {
    1024
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsConfig {
    pub omega: f64,
    pub g: f64,
    pub lambda: f64,
    #[serde(default = "default_ntr")]
    pub n_tr: usize,
}

fn default_ntr() -> usize {
    64
}

impl ParamsConfig {
    pub fn quench_default() -> Self {
        ParamsConfig { omega: 1.0, g: 0.1, lambda: 0.0, n_tr: default_ntr() }
    }

    pub fn to_params(self) -> Result<ModelParams> {
        ModelParams::new(self.omega, self.g, self.lambda, self.n_tr)
            .map_err(|e| anyhow::anyhow!("invalid model parameters: {e}"))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LevelStatsOptions {
    pub e_min: f64,
    pub e_max: f64,
    /// Histogram bins; omit for Freedman-Diaconis.
    #[serde(default)]
    pub bins: Option<usize>,
}

impl Default for LevelStatsOptions {
    fn default() -> Self {
        LevelStatsOptions { e_min: 0.0, e_max: 250.0, bins: None }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuenchStatsOptions {
    #[serde(default = "default_observable")]
    pub observable: String,
    #[serde(default = "default_samples")]
    pub n_samples: usize,
    #[serde(default = "default_tmax")]
    pub t_max: f64,
}

fn default_observable() -> String {
    "n".to_string()
}

fn default_samples() -> usize {
    10_000
}

fn default_tmax() -> f64 {
    1e6
}

impl Default for QuenchStatsOptions {
    fn default() -> Self {
        QuenchStatsOptions {
            observable: default_observable(),
            n_samples: default_samples(),
            t_max: default_tmax(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaussianityOptions {
    #[serde(default = "default_samples")]
    pub n_samples: usize,
    #[serde(default = "default_tmax")]
    pub t_max: f64,
}

impl Default for GaussianityOptions {
    fn default() -> Self {
        GaussianityOptions { n_samples: default_samples(), t_max: default_tmax() }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WignerOptions {
    /// Evolution time of the quenched state; ignored when an eigenstate is
    /// selected.
    #[serde(default = "default_wigner_time")]
    pub time: f64,
    /// Use the eigenstate with energy closest to this instead of the evolved
    /// state.
    #[serde(default)]
    pub eigenstate_energy: Option<f64>,
    /// Grid half-width; defaults to 2g + 5.
    #[serde(default)]
    pub half_width: Option<f64>,
    #[serde(default = "default_grid_points")]
    pub points: usize,
    #[serde(default)]
    pub format: WignerFormat,
}

fn default_wigner_time() -> f64 {
    500_000.0
}

fn default_grid_points() -> usize {
    512
}

impl Default for WignerOptions {
    fn default() -> Self {
        WignerOptions {
            time: default_wigner_time(),
            eigenstate_energy: None,
            half_width: None,
            points: default_grid_points(),
            format: WignerFormat::Csv,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WignerFormat {
    #[default]
    Csv,
    Binary,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassicalOptions {
    #[serde(default)]
    pub mode: ClassicalMode,
    #[serde(default)]
    pub x: f64,
    #[serde(default)]
    pub p: f64,
    #[serde(default)]
    pub z: f64,
    #[serde(default = "default_dphi")]
    pub dphi: f64,
    #[serde(default = "default_tend")]
    pub t_end: f64,
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default = "default_rtol")]
    pub rtol: f64,
    /// Surface coordinate for sections: x | p | z | dphi.
    #[serde(default = "default_surface")]
    pub surface_coord: String,
    #[serde(default)]
    pub surface_level: f64,
    #[serde(default = "default_lyapunov_t")]
    pub lyapunov_t: f64,
}

fn default_dphi() -> f64 {
    std::f64::consts::FRAC_PI_2
}

fn default_tend() -> f64 {
    1e3
}

fn default_dt() -> f64 {
    0.05
}

fn default_rtol() -> f64 {
    1e-10
}

fn default_surface() -> String {
    "z".to_string()
}

fn default_lyapunov_t() -> f64 {
    1e4
}

impl Default for ClassicalOptions {
    fn default() -> Self {
        ClassicalOptions {
            mode: ClassicalMode::Trajectory,
            x: 0.0,
            p: 0.0,
            z: 0.0,
            dphi: default_dphi(),
            t_end: default_tend(),
            dt: default_dt(),
            rtol: default_rtol(),
            surface_coord: default_surface(),
            surface_level: 0.0,
            lyapunov_t: default_lyapunov_t(),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClassicalMode {
    #[default]
    Trajectory,
    Section,
    Lyapunov,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepOptions {
    #[serde(default = "default_gmin")]
    pub g_min: f64,
    #[serde(default = "default_gmax")]
    pub g_max: f64,
    #[serde(default = "default_gsteps")]
    pub g_steps: usize,
    #[serde(default = "default_samples")]
    pub n_samples: usize,
    #[serde(default = "default_tmax")]
    pub t_max: f64,
}

fn default_gmin() -> f64 {
    1.0
}

fn default_gmax() -> f64 {
    10.0
}

fn default_gsteps() -> usize {
    10
}

impl Default for SweepOptions {
    fn default() -> Self {
        SweepOptions {
            g_min: default_gmin(),
            g_max: default_gmax(),
            g_steps: default_gsteps(),
            n_samples: default_samples(),
            t_max: default_tmax(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialsOptions {
    #[serde(default = "default_xmin")]
    pub x_min: f64,
    #[serde(default = "default_xmax")]
    pub x_max: f64,
    #[serde(default = "default_xpoints")]
    pub points: usize,
}

fn default_xmin() -> f64 {
    -25.0
}

fn default_xmax() -> f64 {
    25.0
}

fn default_xpoints() -> usize {
    2001
}

impl Default for PotentialsOptions {
    fn default() -> Self {
        PotentialsOptions { x_min: default_xmin(), x_max: default_xmax(), points: default_xpoints() }
    }
}

impl RunConfig {
    pub fn built_in_default() -> Self {
        RunConfig {
            version: CONFIG_VERSION,
            model: ParamsConfig { omega: 1.0, g: 10.0, lambda: 2.0, n_tr: default_ntr() },
            quench_initial: ParamsConfig::quench_default(),
            seed: 0,
            output_dir: default_out(),
            cache_dir: None,
            ntr_auto_tol: None,
            ntr_cap: default_ntr_cap(),
            parallelism: None,
            levelstats: LevelStatsOptions::default(),
            quench_stats: QuenchStatsOptions::default(),
            gaussianity: GaussianityOptions::default(),
            wigner: WignerOptions::default(),
            classical: ClassicalOptions::default(),
            sweep: SweepOptions::default(),
            potentials: PotentialsOptions::default(),
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config {}", path.display()))?;
        let cfg: RunConfig = serde_json::from_str(&text)
            .with_context(|| format!("config {} does not match the schema", path.display()))?;
        if cfg.version != CONFIG_VERSION {
            bail!(
                "config {} has version {}, this build expects {}",
                path.display(),
                cfg.version,
                CONFIG_VERSION
            );
        }
        Ok(cfg)
    }

    pub fn cache_dir(&self) -> PathBuf {
        self.cache_dir.clone().unwrap_or_else(|| self.output_dir.join("cache"))
    }
}
