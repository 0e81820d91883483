//! JSON experiment configuration. Every field has a default or is optional, so
//! the serialized form of a loaded config is its fully resolved echo.

use std::path::{Path, PathBuf};

use fredholm::baselines::DensitySpec;
use fredholm::downstream::Task;
use fredholm::selection::ValidationFamily;
use serde::{Deserialize, Serialize};

use crate::CliError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub p: Option<DataSource>,
    #[serde(default)]
    pub q: Option<DataSource>,
    #[serde(default)]
    pub method: MethodConfig,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub validation: ValidationConfig,
    #[serde(default)]
    pub cv: CvConfig,
    #[serde(default)]
    pub resample: Option<ResampleConfig>,
    #[serde(default)]
    pub bench: Option<BenchConfig>,
    #[serde(default)]
    pub downstream: Option<DownstreamConfig>,
}

/// Where a sample comes from. A density source is both a sample (drawn with a
/// seed derived from the run seed) and, where needed, a known function.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum DataSource {
    Csv {
        path: PathBuf,
        #[serde(default)]
        label_column: Option<usize>,
    },
    Density {
        density: DensitySpec,
        #[serde(default)]
        n: Option<usize>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum MethodConfig {
    Fire {
        #[serde(default)]
        setting: SettingConfig,
        /// RKHS kernel bandwidth as a multiple of the smoothing bandwidth.
        #[serde(default = "one")]
        rkhs_width_factor: f64,
    },
    Tikde,
    Lsif,
}

impl Default for MethodConfig {
    fn default() -> Self {
        Self::Fire {
            setting: SettingConfig::default(),
            rkhs_width_factor: 1.0,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum SettingConfig {
    #[default]
    Type1,
    Combined {
        gamma: f64,
    },
    RkhsLoss,
    Type15 {
        bandwidth_ratio: f64,
    },
    /// `q` is known; requires `q` to be a density source.
    Type2,
    Spectral,
}

fn one() -> f64 {
    1.0
}

/// Parameter grids. Unset grids use the method defaults; an unset `t` grid is
/// `t0 · 2^j`, `j = 0, …, 9`, from the pooled sample.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    #[serde(default)]
    pub t: Option<Vec<f64>>,
    #[serde(default)]
    pub lambda: Option<Vec<f64>>,
    /// TIKDE thresholds relative to `max p̂`.
    #[serde(default)]
    pub epsilon: Option<Vec<f64>>,
    #[serde(default)]
    pub cutoff_k: Option<Vec<usize>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ValidationConfig {
    /// Unset: halfspaces for classification runs, linear functions otherwise.
    #[serde(default)]
    pub family: Option<ValidationFamily>,
    #[serde(default = "default_count")]
    pub count: usize,
    /// Unset: derived from the run seed.
    #[serde(default)]
    pub seed: Option<u64>,
    /// Anchor points for kernel families (random `q` points).
    #[serde(default = "default_anchors")]
    pub anchors: usize,
}

fn default_count() -> usize {
    20
}

fn default_anchors() -> usize {
    100
}

impl Default for ValidationConfig {
    fn default() -> Self {
        Self {
            family: None,
            count: default_count(),
            seed: None,
            anchors: default_anchors(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CvConfig {
    #[serde(default = "default_folds")]
    pub folds: usize,
    /// Cross-validate on at most this many `p` points.
    #[serde(default)]
    pub max_p: Option<usize>,
    /// Score against at most this many `q` points.
    #[serde(default)]
    pub max_q: Option<usize>,
    /// `cv` command: fraction of each sample used for selection; the rest
    /// measures the selected estimator.
    #[serde(default = "default_fraction")]
    pub cv_fraction: f64,
}

fn default_folds() -> usize {
    5
}

fn default_fraction() -> f64 {
    0.8
}

impl Default for CvConfig {
    fn default() -> Self {
        Self {
            folds: default_folds(),
            max_p: None,
            max_q: None,
            cv_fraction: default_fraction(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum ResampleConfig {
    /// Keep row `i` with probability `sigmoid((a⟨x_i − x̄, e₁⟩ − b) / σ_v)`.
    Pca { a: f64, b: f64 },
    /// Keep rows whose label is listed.
    Label { keep: Vec<String> },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BenchMethod {
    Fire,
    Tikde,
    Lsif,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchConfig {
    /// Sizes of the `p` sample.
    pub ladder: Vec<usize>,
    #[serde(default = "default_reps")]
    pub reps: usize,
    /// Fresh `p` points on which the L2 error to the true ratio is measured.
    #[serde(default = "default_eval")]
    pub eval_points: usize,
    #[serde(default = "default_methods")]
    pub methods: Vec<BenchMethod>,
}

fn default_reps() -> usize {
    20
}

fn default_eval() -> usize {
    2000
}

fn default_methods() -> Vec<BenchMethod> {
    vec![BenchMethod::Fire, BenchMethod::Tikde, BenchMethod::Lsif]
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightSource {
    /// Ratio estimated from the `p` and `q` features.
    #[default]
    Estimated,
    /// All weights one; weighted and unweighted fits coincide.
    Uniform,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DownstreamConfig {
    pub task: Task,
    /// Labeled training-subset sizes.
    pub ladder: Vec<usize>,
    #[serde(default = "one")]
    pub c: f64,
    #[serde(default = "default_epochs")]
    pub epochs: usize,
    #[serde(default)]
    pub weights: WeightSource,
    /// Classification: label mapped to `+1` (default: the larger of the two
    /// labels in string order).
    #[serde(default)]
    pub positive_label: Option<String>,
}

fn default_epochs() -> usize {
    2000
}

fn config_error(reason: impl Into<String>) -> CliError {
    CliError::Config(reason.into())
}

fn positive_grid<T: Copy + Into<f64>>(name: &str, values: &Option<Vec<T>>) -> Result<(), CliError> {
    if let Some(v) = values {
        if v.is_empty() {
            return Err(config_error(format!("grid.{name} is empty")));
        }
        if v.iter().any(|x| !((*x).into() > 0.0 && (*x).into().is_finite())) {
            return Err(config_error(format!("grid.{name} values must be positive and finite")));
        }
    }
    Ok(())
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| config_error(format!("invalid config: {e}")))
    }

    /// Read a config file; relative CSV paths are resolved against its directory.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| config_error(format!("cannot read config {}: {e}", path.display())))?;
        let mut cfg = Self::from_json(&text)?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        let base = std::path::absolute(&base).unwrap_or(base);
        for src in [&mut cfg.p, &mut cfg.q].into_iter().flatten() {
            if let DataSource::Csv { path, .. } = src {
                if path.is_relative() {
                    *path = base.join(&*path);
                }
            }
        }
        Ok(cfg)
    }

    /// Checks that do not depend on the command.
    pub fn validate(&self) -> Result<(), CliError> {
        positive_grid("t", &self.grid.t)?;
        positive_grid("lambda", &self.grid.lambda)?;
        positive_grid("epsilon", &self.grid.epsilon)?;
        if let Some(c) = &self.grid.cutoff_k {
            if c.is_empty() || c.contains(&0) {
                return Err(config_error("grid.cutoff_k values must be at least 1"));
            }
        }
        if self.validation.count == 0 {
            return Err(config_error("validation.count must be at least 1"));
        }
        if self.validation.anchors == 0 {
            return Err(config_error("validation.anchors must be at least 1"));
        }
        if self.cv.folds < 2 {
            return Err(config_error("cv.folds must be at least 2"));
        }
        if !(self.cv.cv_fraction > 0.0 && self.cv.cv_fraction < 1.0) {
            return Err(config_error("cv.cv_fraction must lie in (0, 1)"));
        }
        if matches!(self.cv.max_p, Some(0)) || matches!(self.cv.max_q, Some(0)) {
            return Err(config_error("cv.max_p and cv.max_q must be at least 1"));
        }
        match &self.method {
            MethodConfig::Fire {
                setting,
                rkhs_width_factor,
            } => {
                if !(*rkhs_width_factor > 0.0 && rkhs_width_factor.is_finite()) {
                    return Err(config_error("method.rkhs_width_factor must be positive"));
                }
                match setting {
                    SettingConfig::Combined { gamma } if !(0.0..=1.0).contains(gamma) => {
                        return Err(config_error("method.setting.gamma must lie in [0, 1]"));
                    }
                    SettingConfig::Type15 { bandwidth_ratio } if !(*bandwidth_ratio > 0.0 && bandwidth_ratio.is_finite()) => {
                        return Err(config_error("method.setting.bandwidth_ratio must be positive"));
                    }
                    SettingConfig::Type2 if !matches!(self.q, None | Some(DataSource::Density { .. })) => {
                        return Err(config_error("type2 needs q given as a density"));
                    }
                    _ => {}
                }
            }
            MethodConfig::Tikde | MethodConfig::Lsif => {}
        }
        for (role, src) in [("p", &self.p), ("q", &self.q)] {
            if let Some(DataSource::Density { density, n }) = src {
                density
                    .validate()
                    .map_err(|e| config_error(format!("{role}.density: {e}")))?;
                if *n == Some(0) {
                    return Err(config_error(format!("{role}.n must be at least 1")));
                }
            }
        }
        if let Some(ResampleConfig::Label { keep }) = &self.resample {
            if keep.is_empty() {
                return Err(config_error("resample.keep must list at least one label"));
            }
        }
        if let Some(b) = &self.bench {
            if b.ladder.is_empty() || b.ladder.contains(&0) {
                return Err(config_error("bench.ladder sizes must be at least 1"));
            }
            if b.reps == 0 || b.eval_points == 0 || b.methods.is_empty() {
                return Err(config_error("bench.reps, bench.eval_points and bench.methods must be nonempty"));
            }
        }
        if let Some(d) = &self.downstream {
            if d.ladder.is_empty() || d.ladder.contains(&0) {
                return Err(config_error("downstream.ladder sizes must be at least 1"));
            }
            if !(d.c > 0.0 && d.c.is_finite()) {
                return Err(config_error("downstream.c must be positive"));
            }
            if d.epochs == 0 {
                return Err(config_error("downstream.epochs must be at least 1"));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_fills_defaults() {
        let cfg = ExperimentConfig::from_json(r#"{"p": {"source": "csv", "path": "a.csv"}}"#).unwrap();
        assert_eq!(cfg.cv.folds, 5);
        assert_eq!(cfg.validation.count, 20);
        assert_eq!(cfg.method, MethodConfig::default());
        let echo = serde_json::to_string(&cfg).unwrap();
        assert_eq!(ExperimentConfig::from_json(&echo).unwrap(), cfg);
    }

    #[test]
    fn rejects_unknown_fields_and_bad_grids() {
        assert!(ExperimentConfig::from_json(r#"{"sed": 1}"#).is_err());
        let cfg = ExperimentConfig::from_json(r#"{"grid": {"lambda": [1e-3, -1]}}"#).unwrap();
        assert!(cfg.validate().is_err());
        let cfg = ExperimentConfig::from_json(r#"{"bench": {"ladder": [0]}}"#).unwrap();
        assert!(cfg.validate().is_err());
        let cfg = ExperimentConfig::from_json(
            r#"{"method": {"method": "fire", "setting": {"type": "combined", "gamma": 2}}}"#,
        )
        .unwrap();
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn type2_needs_a_density() {
        let cfg = ExperimentConfig::from_json(
            r#"{"q": {"source": "csv", "path": "q.csv"},
                "method": {"method": "fire", "setting": {"type": "type2"}}}"#,
        )
        .unwrap();
        assert!(cfg.validate().is_err());
    }
}
