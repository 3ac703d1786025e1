//! Experiment configuration files.

use std::f64::consts::TAU;
use std::fmt;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anosov::metric::{CartesianMetric, Surface, WarpedMetric};
use anosov::profile::ExprProfile;
use serde::Deserialize;
use sha2::{Digest, Sha256};

/// A configuration problem, tied to the offending field.
#[derive(Debug)]
pub struct ConfigError {
    pub field: String,
    pub message: String,
}

impl ConfigError {
    pub fn new(field: impl Into<String>, message: impl fmt::Display) -> Self {
        Self {
            field: field.into(),
            message: message.to_string(),
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "config field `{}`: {}", self.field, self.message)
    }
}

impl std::error::Error for ConfigError {}

pub type ConfigResult<T> = Result<T, ConfigError>;

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum MetricConfig {
    /// `dt^2 + f(t)^2 dtheta^2` on `[t_min, t_max] x (R / period)`.
    Warped {
        profile: String,
        t_min: f64,
        t_max: f64,
        #[serde(default = "tau")]
        period: f64,
    },
    FlatDisk {
        #[serde(default = "one")]
        radius: f64,
    },
    /// `exp(2 phi(x, y)) (dx^2 + dy^2)` on a disk.
    Conformal {
        phi: String,
        #[serde(default = "one")]
        radius: f64,
    },
    Cartesian {
        g11: String,
        g12: String,
        g22: String,
        #[serde(default = "one")]
        radius: f64,
    },
    /// Stereographic chart of the unit sphere, restricted to a disk.
    SphereCap {
        #[serde(default = "one")]
        radius: f64,
    },
    /// Another TOML file holding a metric table, relative to the config.
    File { path: PathBuf },
}

fn tau() -> f64 {
    TAU
}

fn one() -> f64 {
    1.0
}

impl MetricConfig {
    /// Follows `file` references, reading paths relative to `base`.
    pub fn resolve(&self, base: &Path, field: &str) -> ConfigResult<MetricConfig> {
        let mut current = self.clone();
        let mut dir = base.to_path_buf();
        for _ in 0..8 {
            let MetricConfig::File { path } = &current else {
                return Ok(current);
            };
            let full = dir.join(path);
            let text = std::fs::read_to_string(&full).map_err(|e| {
                ConfigError::new(
                    format!("{field}.path"),
                    format!("cannot read {}: {e}", full.display()),
                )
            })?;
            current = toml::from_str(&text).map_err(|e| {
                ConfigError::new(format!("{field}.path"), format!("{}: {e}", full.display()))
            })?;
            dir = full.parent().map(Path::to_path_buf).unwrap_or_default();
        }
        Err(ConfigError::new(
            field,
            "metric file references nest too deeply",
        ))
    }

    fn check_radius(radius: f64, field: &str) -> ConfigResult<()> {
        if radius > 0.0 && radius.is_finite() {
            Ok(())
        } else {
            Err(ConfigError::new(
                format!("{field}.radius"),
                "must be positive",
            ))
        }
    }

    /// The warped metric, for configs of that kind.
    pub fn warped(&self, field: &str) -> ConfigResult<WarpedMetric> {
        let MetricConfig::Warped {
            profile,
            t_min,
            t_max,
            period,
        } = self
        else {
            return Err(ConfigError::new(
                format!("{field}.kind"),
                "a warped metric is required here",
            ));
        };
        if !(t_min < t_max) {
            return Err(ConfigError::new(
                format!("{field}.t_max"),
                "must exceed t_min",
            ));
        }
        if !(*period > 0.0) {
            return Err(ConfigError::new(
                format!("{field}.period"),
                "must be positive",
            ));
        }
        let p = ExprProfile::parse(profile)
            .map_err(|e| ConfigError::new(format!("{field}.profile"), e))?;
        WarpedMetric::new(Arc::new(p), *t_min, *t_max, *period)
            .map_err(|e| ConfigError::new(format!("{field}.profile"), e))
    }

    /// Disk metrics as a Cartesian metric and radius.
    pub fn disk(&self, field: &str) -> ConfigResult<(CartesianMetric, f64)> {
        let (m, radius) = match self {
            MetricConfig::FlatDisk { radius } => (CartesianMetric::euclidean(), *radius),
            MetricConfig::Conformal { phi, radius } => (
                CartesianMetric::conformal(phi)
                    .map_err(|e| ConfigError::new(format!("{field}.phi"), e))?,
                *radius,
            ),
            MetricConfig::Cartesian {
                g11,
                g12,
                g22,
                radius,
            } => (
                CartesianMetric::parse(g11, g12, g22)
                    .map_err(|e| ConfigError::new(format!("{field}.g11"), e))?,
                *radius,
            ),
            MetricConfig::SphereCap { radius } => {
                (CartesianMetric::stereographic_sphere(), *radius)
            }
            _ => {
                return Err(ConfigError::new(
                    format!("{field}.kind"),
                    "a disk metric is required here",
                ))
            }
        };
        Self::check_radius(radius, field)?;
        Ok((m, radius))
    }

    pub fn surface(&self, field: &str) -> ConfigResult<Surface> {
        match self {
            MetricConfig::Warped { .. } => {
                Surface::warped(self.warped(field)?).map_err(|e| ConfigError::new(field, e))
            }
            MetricConfig::File { .. } => Err(ConfigError::new(field, "unresolved metric file")),
            _ => {
                let (m, r) = self.disk(field)?;
                Surface::disk(Arc::new(m), r).map_err(|e| ConfigError::new(field, e))
            }
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LensConfig {
    pub samples: usize,
    #[serde(default = "default_t_max")]
    pub t_max: f64,
    #[serde(default = "default_tol")]
    pub tol: f64,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PointConfig {
    #[serde(default)]
    pub component: usize,
    pub s: f64,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairConfig {
    pub x: PointConfig,
    pub y: PointConfig,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub x: PointConfig,
    pub y: PointConfig,
    pub n_max: i64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DistanceConfig {
    #[serde(default)]
    pub pairs: Vec<PairConfig>,
    /// Extra pairs drawn from the seeded boundary sampler.
    #[serde(default)]
    pub random_pairs: usize,
    #[serde(default = "default_classes")]
    pub classes: Vec<i64>,
    pub sweep: Option<SweepConfig>,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_scan")]
    pub scan: usize,
    #[serde(default = "default_distance_t_max")]
    pub t_max: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PrescribeConfig {
    #[serde(default = "default_radial")]
    pub radial: usize,
    #[serde(default = "default_radial")]
    pub angular: usize,
    /// Curvature change as an expression in `x, y`.
    #[serde(default = "default_h")]
    pub h: String,
    #[serde(default = "default_dimension")]
    pub dimension: usize,
    #[serde(default = "default_newton_tol")]
    pub tol: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    #[serde(default = "default_gap_tol")]
    pub gap_tol: f64,
    /// Number of halvings of `h` in the scaling sweep.
    #[serde(default)]
    pub sweep: usize,
    /// Replace the metric by the disk tuned to carry a kernel.
    #[serde(default)]
    pub tuned_kernel: bool,
    /// Also write the operator in coordinate format.
    #[serde(default)]
    pub export_operator: bool,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExtendConfig {
    pub delta0: f64,
    pub epsilon: f64,
    pub ell: f64,
    pub delta: f64,
    #[serde(default = "one")]
    pub r0: f64,
    #[serde(default = "one")]
    pub kappa0: f64,
    #[serde(default = "tau")]
    pub period: f64,
    #[serde(default = "yes")]
    pub mollify: bool,
    #[serde(default = "default_extend_samples")]
    pub samples: usize,
    /// Warp rates for the threshold sweep.
    #[serde(default)]
    pub ells: Vec<f64>,
    /// Take the band from the outer circle of `[metric]` (warped) instead of
    /// the flat model band given by `r0` and `kappa0`.
    #[serde(default)]
    pub from_metric: bool,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiagnoseConfig {
    #[serde(default = "default_diag_samples")]
    pub samples: usize,
    #[serde(default = "default_times")]
    pub times: Vec<f64>,
    #[serde(default = "default_conjugate_samples")]
    pub conjugate_samples: usize,
    #[serde(default = "default_conjugate_time")]
    pub conjugate_time: f64,
    #[serde(default = "default_lyapunov_time")]
    pub lyapunov_time: f64,
    #[serde(default = "default_boundary_checks")]
    pub boundary_checks: usize,
    #[serde(default = "default_tol")]
    pub tol: f64,
}

fn yes() -> bool {
    true
}
fn default_t_max() -> f64 {
    50.0
}
fn default_tol() -> f64 {
    1e-10
}
fn default_classes() -> Vec<i64> {
    vec![0]
}
fn default_scan() -> usize {
    2048
}
fn default_distance_t_max() -> f64 {
    60.0
}
fn default_radial() -> usize {
    64
}
fn default_h() -> String {
    "0".into()
}
fn default_dimension() -> usize {
    2
}
fn default_newton_tol() -> f64 {
    1e-10
}
fn default_max_iter() -> usize {
    20
}
fn default_gap_tol() -> f64 {
    1e-6
}
fn default_extend_samples() -> usize {
    2000
}
fn default_diag_samples() -> usize {
    2000
}
fn default_times() -> Vec<f64> {
    vec![5.0, 10.0, 20.0, 40.0]
}
fn default_conjugate_samples() -> usize {
    64
}
fn default_conjugate_time() -> f64 {
    20.0
}
fn default_lyapunov_time() -> f64 {
    50.0
}
fn default_boundary_checks() -> usize {
    256
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub threads: Option<usize>,
    /// Output directory, overridden by `--out`.
    pub out: Option<PathBuf>,
    pub metric: Option<MetricConfig>,
    pub compare_metric: Option<MetricConfig>,
    pub lens: Option<LensConfig>,
    pub distance: Option<DistanceConfig>,
    pub prescribe: Option<PrescribeConfig>,
    pub extend: Option<ExtendConfig>,
    pub diagnose: Option<DiagnoseConfig>,
}

/// A parsed config together with what is needed to reproduce it.
#[derive(Debug, Clone)]
pub struct Loaded {
    pub config: ExperimentConfig,
    /// Hex sha256 of the config file bytes.
    pub hash: String,
    pub dir: PathBuf,
}

impl Loaded {
    pub fn read(path: &Path) -> ConfigResult<Self> {
        let bytes = std::fs::read(path).map_err(|e| {
            ConfigError::new("--config", format!("cannot read {}: {e}", path.display()))
        })?;
        let text = String::from_utf8(bytes.clone())
            .map_err(|_| ConfigError::new("--config", "config is not UTF-8"))?;
        let config: ExperimentConfig = toml::from_str(&text).map_err(|e| parse_error(e, &text))?;
        let hash = Sha256::digest(&bytes)
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect();
        let dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        let mut loaded = Self { config, hash, dir };
        loaded.resolve_files()?;
        Ok(loaded)
    }

    fn resolve_files(&mut self) -> ConfigResult<()> {
        if let Some(m) = &self.config.metric {
            self.config.metric = Some(m.resolve(&self.dir, "metric")?);
        }
        if let Some(m) = &self.config.compare_metric {
            self.config.compare_metric = Some(m.resolve(&self.dir, "compare_metric")?);
        }
        Ok(())
    }

    pub fn metric(&self) -> ConfigResult<&MetricConfig> {
        self.config
            .metric
            .as_ref()
            .ok_or_else(|| ConfigError::new("metric", "missing table"))
    }
}

/// Converts a TOML error into a field diagnostic. The key path comes from the
/// parser's message when it names a key, otherwise from the line the error
/// span points at and the table header above it.
fn parse_error(e: toml::de::Error, text: &str) -> ConfigError {
    let msg = e.message().to_string();
    let names_key = ["unknown field", "missing field", "duplicate field"]
        .iter()
        .any(|p| msg.starts_with(p));
    let named = names_key.then(|| msg.split('`').nth(1)).flatten();
    let field = match (named, e.span()) {
        (Some(k), Some(span)) if span.start > 0 => match table_at(text, span.start) {
            Some(t) => format!("{t}.{k}"),
            None => k.to_string(),
        },
        (Some(k), _) => k.to_string(),
        (None, Some(span)) => key_at(text, span.start, &msg).unwrap_or_else(|| "<document>".into()),
        (None, None) => "<document>".into(),
    };
    ConfigError::new(field, e.to_string().trim_end())
}

/// Name of the table whose header is at or above `offset`.
fn table_at(text: &str, offset: usize) -> Option<String> {
    let end = text[offset.min(text.len())..]
        .find('\n')
        .map_or(text.len(), |i| offset + i);
    text[..end]
        .lines()
        .rev()
        .map(str::trim)
        .find(|l| l.starts_with('['))
        .map(|l| l.trim_matches(|c| c == '[' || c == ']').trim().to_string())
}

fn key_at(text: &str, offset: usize, message: &str) -> Option<String> {
    let before = &text[..offset.min(text.len())];
    let line_start = before.rfind('\n').map_or(0, |i| i + 1);
    let line = text[line_start..].lines().next()?.trim();
    if let Some(header) = line.strip_prefix('[') {
        // errors inside tagged tables point at the header; find the key whose
        // value the message quotes
        let table = header.trim_end_matches(']').trim();
        let quoted = message.split('"').nth(1).filter(|_| message.contains('"'));
        let key = quoted.and_then(|q| {
            text[line_start..]
                .lines()
                .skip(1)
                .take_while(|l| !l.trim_start().starts_with('['))
                .find(|l| {
                    l.split_once('=')
                        .is_some_and(|(_, v)| v.trim().trim_matches('"') == q)
                })
                .map(|l| l.split('=').next().unwrap_or("").trim().to_string())
        });
        return Some(match key {
            Some(k) => format!("{table}.{k}"),
            None => table.to_string(),
        });
    }
    let key = line.split('=').next()?.trim();
    if key.is_empty() {
        return None;
    }
    let table = before[..line_start]
        .lines()
        .rev()
        .map(str::trim)
        .find(|l| l.starts_with('['))
        .map(|l| l.trim_matches(|c| c == '[' || c == ']').trim().to_string());
    Some(match table {
        Some(t) => format!("{t}.{key}"),
        None => key.to_string(),
    })
}

/// Fetches a required subcommand table.
pub fn section<'a, T>(value: &'a Option<T>, name: &str) -> ConfigResult<&'a T> {
    value
        .as_ref()
        .ok_or_else(|| ConfigError::new(name, "missing table required by this subcommand"))
}

pub fn positive(value: f64, field: &str) -> ConfigResult<()> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(ConfigError::new(
            field,
            format!("must be positive, got {value}"),
        ))
    }
}
