//! Flags, the flat config file, and defaults.
//!
//! Every flag has a config key of the same name with `-` replaced by `_`.
//! Flags override the file and the file overrides the defaults.

use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use gaussglass::acceptance::Level;
use gaussglass::montecarlo::{McConfig, Scheme};
use serde::Deserialize;

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Quantity {
    Annealed,
    Rs,
    Shell,
    Susceptibility,
    #[value(name = "rsb_check", alias = "rsb-check")]
    RsbCheck,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VerifyLevel {
    Fast,
    Full,
}

impl From<VerifyLevel> for Level {
    fn from(l: VerifyLevel) -> Level {
        match l {
            VerifyLevel::Fast => Level::Fast,
            VerifyLevel::Full => Level::Full,
        }
    }
}

/// Contents of a `--config` file. Unknown keys are rejected.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub beta: Option<f64>,
    pub lambda: Option<f64>,
    pub n: Option<usize>,
    pub seed: Option<u64>,
    pub samples: Option<usize>,
    pub threads: Option<usize>,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
    pub directions: Option<usize>,
    pub radial_points: Option<usize>,
    pub quantity: Option<Quantity>,
    pub beta_min: Option<f64>,
    pub beta_max: Option<f64>,
    pub beta_steps: Option<usize>,
    pub lambda_min: Option<f64>,
    pub lambda_max: Option<f64>,
    pub lambda_steps: Option<usize>,
    pub levels: Option<usize>,
    pub restarts: Option<usize>,
    pub q_max: Option<f64>,
    pub q_bar: Option<f64>,
    pub t_end: Option<f64>,
    pub steps: Option<usize>,
    pub mc: Option<bool>,
    pub t_grid: Option<usize>,
    pub level: Option<VerifyLevel>,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let Some(path) = path else {
            return Ok(FileConfig::default());
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::Usage(format!("bad config {}: {e}", path.display())))
    }
}

#[derive(Debug, Clone, Default, Args)]
pub struct Common {
    /// Inverse temperature.
    #[arg(long, allow_negative_numbers = true)]
    pub beta: Option<f64>,
    /// Confining parameter, below 1.
    #[arg(long, allow_negative_numbers = true)]
    pub lambda: Option<f64>,
    /// Number of sites.
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Disorder samples.
    #[arg(long)]
    pub samples: Option<usize>,
    /// Worker threads; defaults to the hardware parallelism.
    #[arg(long)]
    pub threads: Option<usize>,
    /// Output file; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Flat TOML file with defaults for any flag.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Directions per radial Monte Carlo estimate.
    #[arg(long)]
    pub directions: Option<usize>,
    /// Radial quadrature nodes.
    #[arg(long)]
    pub radial_points: Option<usize>,
}

/// Fully resolved common settings.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub beta: f64,
    pub lambda: f64,
    pub n: usize,
    pub seed: u64,
    pub samples: usize,
    pub threads: Option<usize>,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
    pub directions: usize,
    pub radial_points: usize,
}

impl Common {
    pub fn resolve(&self, file: &FileConfig) -> Resolved {
        Resolved {
            beta: self.beta.or(file.beta).unwrap_or(0.5),
            lambda: self.lambda.or(file.lambda).unwrap_or(0.0),
            n: self.n.or(file.n).unwrap_or(2),
            seed: self.seed.or(file.seed).unwrap_or(0),
            samples: self.samples.or(file.samples).unwrap_or(200),
            threads: self.threads.or(file.threads),
            out: self.out.clone().or_else(|| file.out.clone()),
            format: self.format.or(file.format),
            directions: self.directions.or(file.directions).unwrap_or(1024),
            radial_points: self.radial_points.or(file.radial_points).unwrap_or(512),
        }
    }
}

impl Resolved {
    pub fn mc_config(&self) -> McConfig {
        McConfig {
            n_disorder: self.samples,
            n_directions: self.directions,
            radial_points: self.radial_points,
            seed: self.seed,
            scheme: Scheme::QuadratureIfSmall,
        }
    }
}

#[derive(Debug, Clone, Default, Args)]
pub struct ScanArgs {
    #[arg(long, value_enum)]
    pub quantity: Option<Quantity>,
    #[arg(long, allow_negative_numbers = true)]
    pub beta_min: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub beta_max: Option<f64>,
    #[arg(long)]
    pub beta_steps: Option<usize>,
    #[arg(long, allow_negative_numbers = true)]
    pub lambda_min: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub lambda_max: Option<f64>,
    #[arg(long)]
    pub lambda_steps: Option<usize>,
    #[command(flatten)]
    pub rsb: RsbArgs,
}

#[derive(Debug, Clone, Copy)]
pub struct Range {
    pub min: f64,
    pub max: f64,
    pub steps: usize,
}

impl Range {
    pub fn new(min: f64, max: f64, steps: usize) -> Result<Self, CliError> {
        if steps == 0 || !min.is_finite() || !max.is_finite() || max < min {
            return Err(CliError::Usage(format!("bad range [{min}, {max}] with {steps} steps")));
        }
        Ok(Range { min, max, steps })
    }

    pub fn value(&self, i: usize) -> f64 {
        if self.steps == 1 {
            self.min
        } else {
            self.min + (self.max - self.min) * i as f64 / (self.steps - 1) as f64
        }
    }
}

pub struct ScanSpec {
    pub quantity: Quantity,
    pub beta: Range,
    pub lambda: Range,
    pub rsb: RsbSettings,
}

impl ScanArgs {
    pub fn resolve(&self, file: &FileConfig) -> Result<ScanSpec, CliError> {
        Ok(ScanSpec {
            quantity: self.quantity.or(file.quantity).unwrap_or(Quantity::Rs),
            beta: Range::new(
                self.beta_min.or(file.beta_min).unwrap_or(0.05),
                self.beta_max.or(file.beta_max).unwrap_or(3.0),
                self.beta_steps.or(file.beta_steps).unwrap_or(60),
            )?,
            lambda: Range::new(
                self.lambda_min.or(file.lambda_min).unwrap_or(-1.0),
                self.lambda_max.or(file.lambda_max).unwrap_or(0.9),
                self.lambda_steps.or(file.lambda_steps).unwrap_or(40),
            )?,
            rsb: self.rsb.resolve(file),
        })
    }
}

#[derive(Debug, Clone, Default, Args)]
pub struct RsbArgs {
    /// Levels of the piecewise order parameter.
    #[arg(long)]
    pub levels: Option<usize>,
    /// Random starts of the infimum search.
    #[arg(long)]
    pub restarts: Option<usize>,
    /// Upper end of the search range for the largest overlap.
    #[arg(long)]
    pub q_max: Option<f64>,
}

#[derive(Debug, Clone, Copy)]
pub struct RsbSettings {
    pub levels: usize,
    pub restarts: usize,
    pub q_max: f64,
}

impl RsbArgs {
    pub fn resolve(&self, file: &FileConfig) -> RsbSettings {
        RsbSettings {
            levels: self.levels.or(file.levels).unwrap_or(3),
            restarts: self.restarts.or(file.restarts).unwrap_or(16),
            q_max: self.q_max.or(file.q_max).unwrap_or(10.0),
        }
    }
}

#[derive(Debug, Clone, Default, Args)]
pub struct FluctuationArgs {
    /// Trial overlap; the replica symmetric optimum when absent.
    #[arg(long)]
    pub q_bar: Option<f64>,
    #[arg(long)]
    pub t_end: Option<f64>,
    /// Integration steps.
    #[arg(long)]
    pub steps: Option<usize>,
    /// Also estimate the second moment of the rescaled overlap at size `--n`.
    #[arg(long)]
    pub mc: bool,
}

#[derive(Debug, Clone, Default, Args)]
pub struct SumRuleArgs {
    /// Trial overlap; the replica symmetric optimum when absent.
    #[arg(long)]
    pub q_bar: Option<f64>,
    /// Points of the interpolation grid in `t`.
    #[arg(long)]
    pub t_grid: Option<usize>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct VerifyArgs {
    #[arg(long, value_enum)]
    pub level: Option<VerifyLevel>,
}
