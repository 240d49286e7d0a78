//! TOML run configurations.

use std::path::{Path, PathBuf};

use serde::Deserialize;
use thiserror::Error;

use crate::kernels::{regularize_alpha_1d, ALPHA_ONE_EPSILON};
use crate::mesh::Datum;
use crate::scheme1d::FluxOrder;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("malformed configuration: {0}")]
    Parse(String),
    #[error("dimension must be 1 or 2, got {0}")]
    InvalidDimension(u32),
    #[error("alpha-out-of-range-1d: alpha must lie in [1, 2) in one dimension, got {0}")]
    AlphaOutOfRange1d(f64),
    #[error("alpha-out-of-range-2d: alpha must lie in (0, 2) in two dimensions, got {0}")]
    AlphaOutOfRange2d(f64),
    #[error("beta must be non-negative, got {0}")]
    NegativeBeta(f64),
    #[error("R must be positive, got {0}")]
    InvalidHalfWidth(f64),
    #[error("N must be at least 2, got {0}")]
    InvalidCells(usize),
    #[error("dt must be positive, got {0}")]
    NonPositiveDt(f64),
    #[error("flux_order must be 1 or 2, got {0}")]
    InvalidFluxOrder(u32),
    #[error("flux_order = 2 is only available in one dimension")]
    SecondOrderIn2d,
    #[error("give exactly one of t_final or [steady]")]
    Horizon,
    #[error("t_final must be non-negative, got {0}")]
    NegativeTime(f64),
    #[error("steady tol and t_max must be positive")]
    InvalidSteady,
    #[error("unrecognised datum '{0}'")]
    InvalidDatum(String),
    #[error("unrecognised reference '{0}'")]
    InvalidReference(String),
    #[error("threads must be positive")]
    InvalidThreads,
}

/// Initial data named in a configuration.
#[derive(Debug, Clone, PartialEq)]
pub enum DatumSpec {
    Builtin(Datum),
    /// A field CSV in the format written by `emit_csv`.
    File(PathBuf),
}

impl DatumSpec {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let t = text.trim();
        let bad = || ConfigError::InvalidDatum(text.to_string());
        match t {
            "uniform" => return Ok(DatumSpec::Builtin(Datum::Uniform)),
            "gaussian" => return Ok(DatumSpec::Builtin(Datum::Gaussian)),
            _ => {}
        }
        if let Some(path) = t.strip_prefix("file:") {
            if path.is_empty() {
                return Err(bad());
            }
            return Ok(DatumSpec::File(PathBuf::from(path)));
        }
        if let Some(arg) = t.strip_prefix("heat-kernel-at(").and_then(|r| r.strip_suffix(')')) {
            let t0: f64 = arg.trim().parse().map_err(|_| bad())?;
            if !(t0 > 0.0) {
                return Err(bad());
            }
            return Ok(DatumSpec::Builtin(Datum::HeatKernelAt(t0)));
        }
        Err(bad())
    }
}

/// Profile that the L1/L2 and entropy diagnostics compare against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ReferenceSpec {
    #[default]
    None,
    /// Cauchy-type equilibrium of the alpha = 1 Levy-Fokker-Planck equation.
    LfpSteady,
    /// Gaussian equilibrium of the classical Fokker-Planck equation.
    GaussianSteady,
    /// The alpha = 1 heat kernel, shifted by the datum time if any.
    HeatKernel,
}

impl ReferenceSpec {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        match text.trim() {
            "none" => Ok(Self::None),
            "lfp-steady" => Ok(Self::LfpSteady),
            "gaussian-steady" => Ok(Self::GaussianSteady),
            "heat-kernel" => Ok(Self::HeatKernel),
            other => Err(ConfigError::InvalidReference(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Horizon {
    Final(f64),
    Steady { tol: f64, t_max: f64 },
}

/// A validated run configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub dimension: usize,
    /// As used by the scheme, after the 1D `alpha = 1` regularisation.
    pub alpha: f64,
    pub beta: f64,
    pub half_width: f64,
    pub cells: usize,
    pub dt: f64,
    pub horizon: Horizon,
    pub flux_order: FluxOrder,
    pub datum: DatumSpec,
    pub reference: ReferenceSpec,
    pub snapshots: Vec<f64>,
    pub output: PathBuf,
    pub threads: Option<usize>,
    /// Diagnostics are recorded every `stride` steps.
    pub stride: usize,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSteady {
    tol: Option<f64>,
    t_max: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    dimension: u32,
    alpha: f64,
    #[serde(default)]
    beta: f64,
    #[serde(rename = "R")]
    half_width: f64,
    #[serde(rename = "N")]
    cells: usize,
    dt: f64,
    t_final: Option<f64>,
    steady: Option<RawSteady>,
    #[serde(default = "default_flux_order")]
    flux_order: u32,
    #[serde(default = "default_datum")]
    datum: String,
    #[serde(default)]
    reference: Option<String>,
    #[serde(default)]
    snapshots: Vec<f64>,
    #[serde(default = "default_output")]
    output: PathBuf,
    threads: Option<usize>,
    #[serde(default = "default_stride")]
    stride: usize,
}

fn default_flux_order() -> u32 {
    1
}

fn default_datum() -> String {
    "uniform".into()
}

fn default_output() -> PathBuf {
    PathBuf::from("out")
}

fn default_stride() -> usize {
    1
}

/// Default stopping tolerance of steady-state runs.
pub const DEFAULT_STEADY_TOL: f64 = 1e-8;

pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| ConfigError::Parse(e.message().to_string()))?;
    let dimension = match raw.dimension {
        1 => 1,
        2 => 2,
        d => return Err(ConfigError::InvalidDimension(d)),
    };
    let alpha = if dimension == 1 {
        if !(raw.alpha >= 1.0 && raw.alpha < 2.0) {
            return Err(ConfigError::AlphaOutOfRange1d(raw.alpha));
        }
        if raw.alpha == 1.0 {
            log::info!("alpha = 1 in one dimension is run as 1 + {ALPHA_ONE_EPSILON:e}");
        }
        regularize_alpha_1d(raw.alpha)
    } else {
        if !(raw.alpha > 0.0 && raw.alpha < 2.0) {
            return Err(ConfigError::AlphaOutOfRange2d(raw.alpha));
        }
        raw.alpha
    };
    if !(raw.beta >= 0.0) {
        return Err(ConfigError::NegativeBeta(raw.beta));
    }
    if !(raw.half_width > 0.0 && raw.half_width.is_finite()) {
        return Err(ConfigError::InvalidHalfWidth(raw.half_width));
    }
    if raw.cells < 2 {
        return Err(ConfigError::InvalidCells(raw.cells));
    }
    if !(raw.dt > 0.0 && raw.dt.is_finite()) {
        return Err(ConfigError::NonPositiveDt(raw.dt));
    }
    let flux_order = match raw.flux_order {
        1 => FluxOrder::First,
        2 => FluxOrder::Second,
        k => return Err(ConfigError::InvalidFluxOrder(k)),
    };
    if flux_order == FluxOrder::Second && dimension == 2 {
        return Err(ConfigError::SecondOrderIn2d);
    }
    let horizon = match (raw.t_final, raw.steady) {
        (Some(t), None) => {
            if !(t >= 0.0) {
                return Err(ConfigError::NegativeTime(t));
            }
            Horizon::Final(t)
        }
        (None, Some(s)) => {
            let tol = s.tol.unwrap_or(DEFAULT_STEADY_TOL);
            if !(tol > 0.0 && s.t_max > 0.0) {
                return Err(ConfigError::InvalidSteady);
            }
            Horizon::Steady { tol, t_max: s.t_max }
        }
        _ => return Err(ConfigError::Horizon),
    };
    if raw.threads == Some(0) {
        return Err(ConfigError::InvalidThreads);
    }
    let reference = match raw.reference {
        Some(r) => ReferenceSpec::parse(&r)?,
        None => ReferenceSpec::None,
    };
    Ok(RunConfig {
        dimension,
        alpha,
        beta: raw.beta,
        half_width: raw.half_width,
        cells: raw.cells,
        dt: raw.dt,
        horizon,
        flux_order,
        datum: DatumSpec::parse(&raw.datum)?,
        reference,
        snapshots: raw.snapshots,
        output: raw.output,
        threads: raw.threads,
        stride: raw.stride.max(1),
    })
}

/// Reads and validates a configuration file. Relative `file:` datum paths
/// and the output directory are resolved against the file's directory.
pub fn load_config(path: &Path) -> Result<RunConfig, Box<dyn std::error::Error>> {
    let text = std::fs::read_to_string(path)?;
    let mut config = parse_config(&text)?;
    let base = path.parent().unwrap_or(Path::new("."));
    if let DatumSpec::File(p) = &config.datum {
        if p.is_relative() {
            config.datum = DatumSpec::File(base.join(p));
        }
    }
    if config.output.is_relative() {
        config.output = base.join(&config.output);
    }
    Ok(config)
}
