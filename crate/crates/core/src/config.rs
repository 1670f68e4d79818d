//! Run configuration, read from TOML.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::asset::AssetId;
use crate::calendar::Month;
use crate::dataset::DEFAULT_FILE_PATTERN;
use crate::ingest::BarFormat;
use crate::netrank::{Aggregate, PageRankOptions};
use crate::returns::AdfOptions;
use crate::sweep::{Estimator, SweepOptions};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("cannot parse config {path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    pub dir: PathBuf,
    /// Regex over file names with `asset` and `yyyymm` captures.
    pub pattern: String,
    pub format: BarFormat,
    /// Fixed asset universe; defaults to every asset with a file.
    pub assets: Option<Vec<AssetId>>,
}

impl Default for DataConfig {
    fn default() -> Self {
        DataConfig { dir: PathBuf::from("data"), pattern: DEFAULT_FILE_PATTERN.to_string(), format: BarFormat::histdata(), assets: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AdfWindow {
    Month,
    #[default]
    Year,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisConfig {
    /// `YYYY-MM..YYYY-MM`; defaults to every month with a file.
    pub months: Option<String>,
    /// Estimator tags such as `corr_s1` or `granger_s4`.
    pub estimators: Vec<String>,
    pub aggregate: Aggregate,
    pub top: usize,
    /// Nominal level for cross-month persistence.
    pub persistence_level: f64,
    pub adf_window: AdfWindow,
    pub adf: AdfOptions,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        AnalysisConfig {
            months: None,
            estimators: Estimator::all().iter().map(|e| e.tag()).collect(),
            aggregate: Aggregate::Score,
            top: 10,
            persistence_level: 0.01,
            adf_window: AdfWindow::Year,
            adf: AdfOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub data: DataConfig,
    pub analysis: AnalysisConfig,
    pub sweep: SweepOptions,
    pub pagerank: PageRankOptions,
    pub output: Option<PathBuf>,
}

impl Config {
    pub fn from_toml(text: &str, origin: &Path) -> Result<Self, ConfigError> {
        let mut config: Config = toml::from_str(text).map_err(|e| ConfigError::Parse { path: origin.to_path_buf(), message: e.to_string() })?;
        if let Some(base) = origin.parent() {
            if config.data.dir.is_relative() {
                config.data.dir = base.join(&config.data.dir);
            }
            if let Some(out) = config.output.as_mut() {
                if out.is_relative() {
                    *out = base.join(&*out);
                }
            }
        }
        config.validate()?;
        Ok(config)
    }

    /// Reads a TOML file; relative paths inside it resolve against its directory.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.to_path_buf(), source })?;
        Self::from_toml(&text, path)
    }

    pub fn estimators(&self) -> Result<Vec<Estimator>, ConfigError> {
        self.analysis.estimators.iter().map(|t| t.parse().map_err(|e| ConfigError::Invalid(format!("{e}")))).collect()
    }

    pub fn months(&self) -> Result<Option<Vec<Month>>, ConfigError> {
        self.analysis
            .months
            .as_deref()
            .map(|s| Month::parse_range(s).map_err(|e| ConfigError::Invalid(format!("months: {e}"))))
            .transpose()
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: &str| Err(ConfigError::Invalid(m.to_string()));
        self.data.format.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        if self.estimators()?.is_empty() {
            return bad("no estimators selected");
        }
        self.months()?;
        if self.sweep.tau == 0 {
            return bad("tau must be at least 1");
        }
        let alpha = self.sweep.significance.alpha;
        if !(alpha > 0.0 && alpha < 1.0) {
            return bad("significance alpha must lie in (0, 1)");
        }
        if self.sweep.significance.tests == Some(0) {
            return bad("significance tests must be positive");
        }
        let level = self.analysis.persistence_level;
        if !(level > 0.0 && level < 1.0) {
            return bad("persistence_level must lie in (0, 1)");
        }
        if !(0.0..1.0).contains(&self.pagerank.damping) {
            return bad("damping must lie in [0, 1)");
        }
        if !(self.pagerank.tol > 0.0) || self.pagerank.max_iter == 0 {
            return bad("pagerank tol and max_iter must be positive");
        }
        if self.analysis.top == 0 {
            return bad("top must be positive");
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip() {
        let c = Config::default();
        c.validate().unwrap();
        assert_eq!(c.estimators().unwrap().len(), 7);
        let text = toml::to_string(&c).unwrap();
        assert_eq!(Config::from_toml(&text, Path::new("x.toml")).unwrap(), c);
    }

    #[test]
    fn partial_file() {
        let text = r#"
            output = "out"
            [data]
            dir = "bars"
            [data.format]
            delimiter = ","
            [analysis]
            months = "2016-01..2016-03"
            estimators = ["corr_s3", "granger_s4"]
            [sweep]
            tau = 2
            [pagerank]
            damping = 0.9
        "#;
        let c = Config::from_toml(text, Path::new("/cfg/run.toml")).unwrap();
        assert_eq!(c.data.dir, PathBuf::from("/cfg/bars"));
        assert_eq!(c.output, Some(PathBuf::from("/cfg/out")));
        assert_eq!(c.data.format.delimiter, ',');
        assert_eq!(c.data.format.tz_offset_minutes, -300);
        assert_eq!(c.months().unwrap().unwrap().len(), 3);
        assert_eq!(c.sweep.tau, 2);
        assert_eq!(c.sweep.corr.min_samples, 100);
        assert_eq!(c.pagerank.max_iter, 200);
    }

    #[test]
    fn rejects_bad_values() {
        for text in [
            "[analysis]\nestimators = [\"pcorr_s1\"]",
            "[sweep]\ntau = 0",
            "[pagerank]\ndamping = 1.0",
            "[analysis]\nmonths = \"2016-13..2017-01\"",
            "unknown = 1",
        ] {
            assert!(Config::from_toml(text, Path::new("c.toml")).is_err(), "{text}");
        }
    }
}
