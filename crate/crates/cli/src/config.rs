use std::fs;
use std::path::{Path, PathBuf};

use clap::Args;
use gsc_core::{
    Boundary, EntropyConvention, FeatureConfig, QuadratureConfig, SolverConfig, WindowSpec,
};
use serde::{Deserialize, Serialize};

use crate::CliError;

pub const DEFAULT_LOOKS: f64 = 4.0;
pub const DEFAULT_SEED: u64 = 42;

/// Settings shared by every command. Loaded from an optional TOML file, then
/// overridden by command-line flags.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
pub struct RunConfig {
    /// Unset means: take the looks recorded in the input.
    pub looks: Option<f64>,
    pub window: usize,
    pub boundary: Boundary,
    pub stride: usize,
    pub seed: Option<u64>,
    /// 0 lets the pool pick one worker per core.
    pub threads: usize,
    pub entropy: EntropyConvention,
    pub quadrature: QuadratureConfig,
    pub solver: SolverConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        let window = WindowSpec::default();
        Self {
            looks: None,
            window: window.side,
            boundary: window.boundary,
            stride: window.stride,
            seed: None,
            threads: 0,
            entropy: EntropyConvention::default(),
            quadrature: QuadratureConfig::default(),
            solver: SolverConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Default, Args)]
pub struct SharedArgs {
    /// TOML file with default settings; flags take precedence.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Number of looks (defaults to the value recorded in the input).
    #[arg(long)]
    pub looks: Option<f64>,
    /// Odd window side in pixels.
    #[arg(long)]
    pub window: Option<usize>,
    #[arg(long, value_name = "reflect|valid")]
    pub boundary: Option<Boundary>,
    #[arg(long)]
    pub stride: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads, 0 for one per core.
    #[arg(long)]
    pub threads: Option<usize>,
    /// Relative tolerance of the adaptive quadrature.
    #[arg(long = "rel-tol")]
    pub rel_tol: Option<f64>,
    #[arg(long, value_name = "negentropy|differential")]
    pub entropy: Option<EntropyConvention>,
    /// Largest |alpha| before a window is declared textureless.
    #[arg(long = "texture-cap")]
    pub texture_cap: Option<f64>,
}

impl SharedArgs {
    pub fn resolve(&self) -> Result<RunConfig, CliError> {
        let mut cfg = match &self.config {
            Some(path) => load(path)?,
            None => RunConfig::default(),
        };
        if self.looks.is_some() {
            cfg.looks = self.looks;
        }
        if let Some(v) = self.window {
            cfg.window = v;
        }
        if let Some(v) = self.boundary {
            cfg.boundary = v;
        }
        if let Some(v) = self.stride {
            cfg.stride = v;
        }
        if self.seed.is_some() {
            cfg.seed = self.seed;
        }
        if let Some(v) = self.threads {
            cfg.threads = v;
        }
        if let Some(v) = self.rel_tol {
            cfg.quadrature.relative_tolerance = v;
        }
        if let Some(v) = self.entropy {
            cfg.entropy = v;
        }
        if let Some(v) = self.texture_cap {
            cfg.solver.texture_cap = v;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn load(path: &Path) -> Result<RunConfig, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::usage(format!("cannot read config {}: {e}", path.display())))?;
    toml::from_str(&text)
        .map_err(|e| CliError::usage(format!("invalid config {}: {e}", path.display())))
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        if let Some(l) = self.looks {
            if !(l > 0.0 && l.is_finite()) {
                return Err(CliError::usage(format!("looks must be positive, got {l}")));
            }
        }
        self.features()
            .window
            .validate(self.solver.min_sample_size)
            .and(self.solver.validate())
            .and(self.quadrature.validate())
            .map_err(|e| CliError::usage(e.to_string()))
    }

    pub fn looks_or(&self, fallback: f64) -> f64 {
        self.looks.unwrap_or(fallback)
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(DEFAULT_SEED)
    }

    pub fn features(&self) -> FeatureConfig {
        FeatureConfig {
            window: WindowSpec {
                side: self.window,
                boundary: self.boundary,
                stride: self.stride,
            },
            solver: self.solver,
            quadrature: self.quadrature,
            entropy: self.entropy,
        }
    }

    pub fn pool(&self) -> Result<rayon::ThreadPool, CliError> {
        rayon::ThreadPoolBuilder::new()
            .num_threads(self.threads)
            .build()
            .map_err(|e| {
                CliError::usage(format!("cannot start {} worker threads: {e}", self.threads))
            })
    }
}
