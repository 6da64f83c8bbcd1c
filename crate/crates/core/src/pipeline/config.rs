//! Study configuration, read from TOML.
//!
//! ```toml
//! input = "data/quarterly.csv"
//! output = "out/study"
//! response = "inflation"
//! pool = "paper"            # or a list such as ["gap:0", "gap:3"]
//! kernel = "uniform"
//! bandwidth = "hall-sheather"
//!
//! [series]
//! inflation = { column = "cpi", role = "price_level" }
//! gap = { column = "gdp", role = "gdp_level" }
//! ```
//!
//! Relative paths are resolved against the directory of the config file.

use std::path::{Path, PathBuf};

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::hp::DEFAULT_LAMBDA;
use crate::inference::{BandwidthRule, Kernel, DEFAULT_ALPHA};
use crate::qr::QuantileLevel;
use crate::selection::{CandidatePool, MAX_POOL};
use crate::timeseries::Period;

/// How a raw input column becomes an analysis series.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    /// Price index; the series is its quarterly log growth.
    PriceLevel,
    /// Already a rate; used as is.
    Rate,
    /// Real GDP level; the series is the HP gap of its logarithm.
    GdpLevel,
    /// Inflation expectations, used as is.
    Expectations,
    /// Imported price index; the series is its quarterly log growth.
    ImportedIndex,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeriesSpec {
    pub column: String,
    pub role: Role,
}

/// A named preset or an explicit list of `name:lag` entries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PoolSpec {
    Preset(String),
    List(Vec<String>),
}

impl Default for PoolSpec {
    fn default() -> Self {
        PoolSpec::Preset("extended".into())
    }
}

impl PoolSpec {
    pub fn build(&self, max_size: Option<usize>) -> Result<CandidatePool> {
        let pool = match self {
            PoolSpec::Preset(name) => CandidatePool::preset(name)?,
            PoolSpec::List(items) => CandidatePool::parse(items)?,
        };
        match max_size {
            Some(k) => pool.with_max_size(k),
            None => Ok(pool),
        }
    }
}

pub fn default_lower_grid() -> Vec<f64> {
    (1..=20).map(|k| k as f64 / 100.0).collect()
}

pub fn default_upper_grid() -> Vec<f64> {
    (80..=99).map(|k| k as f64 / 100.0).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StudyConfig {
    pub input: PathBuf,
    pub output: PathBuf,
    pub response: String,
    /// Empty means every input column is used as a rate under its own name.
    pub series: IndexMap<String, SeriesSpec>,
    pub hp_lambda: f64,
    pub pool: PoolSpec,
    pub max_subset: Option<usize>,
    pub lower_grid: Vec<f64>,
    pub upper_grid: Vec<f64>,
    pub alpha: f64,
    pub kernel: Kernel,
    pub bandwidth: BandwidthRule,
    pub seed: u64,
    /// First period of the second descriptive sub-table.
    pub split: Option<Period>,
    /// Response cut-off for the above-threshold dependence sample.
    pub threshold: f64,
    pub max_lag: usize,
    pub strict: bool,
    /// Write the per-subset AIC log for every quantile.
    pub audit: bool,
}

impl Default for StudyConfig {
    fn default() -> Self {
        StudyConfig {
            input: PathBuf::new(),
            output: PathBuf::from("qtail-out"),
            response: "inflation".into(),
            series: IndexMap::new(),
            hp_lambda: DEFAULT_LAMBDA,
            pool: PoolSpec::default(),
            max_subset: None,
            lower_grid: default_lower_grid(),
            upper_grid: default_upper_grid(),
            alpha: DEFAULT_ALPHA,
            kernel: Kernel::Uniform,
            bandwidth: BandwidthRule::HallSheather,
            seed: 0,
            split: Some(Period::new(2009, 1).expect("valid period")),
            threshold: 0.01,
            max_lag: 4,
            strict: false,
            audit: false,
        }
    }
}

impl StudyConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    /// Reads a config file, resolving relative paths against its directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = StudyConfig::from_toml(&text)?;
        let base = path.parent().unwrap_or(Path::new(""));
        for p in [&mut cfg.input, &mut cfg.output] {
            if p.is_relative() && !p.as_os_str().is_empty() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }

    /// Combined quantile grid in increasing order.
    pub fn quantiles(&self) -> Result<Vec<QuantileLevel>> {
        let mut taus: Vec<f64> = self.lower_grid.iter().chain(&self.upper_grid).copied().collect();
        if taus.is_empty() {
            return Err(Error::Config("quantile grid is empty".into()));
        }
        taus.sort_by(f64::total_cmp);
        if let Some(w) = taus.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::Config(format!("quantile {} listed twice", w[0])));
        }
        taus.into_iter().map(QuantileLevel::new).collect()
    }

    pub fn candidate_pool(&self) -> Result<CandidatePool> {
        self.pool.build(self.max_subset)
    }

    pub fn validate(&self) -> Result<()> {
        if self.input.as_os_str().is_empty() {
            return Err(Error::Config("no input file given".into()));
        }
        if self.output.as_os_str().is_empty() {
            return Err(Error::Config("no output directory given".into()));
        }
        self.quantiles()?;
        let pool = self.candidate_pool()?;
        debug_assert!(pool.len() <= MAX_POOL);
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::Config(format!("alpha must lie in (0, 1), got {}", self.alpha)));
        }
        if !(self.hp_lambda > 0.0 && self.hp_lambda.is_finite()) {
            return Err(Error::InvalidLambda(self.hp_lambda));
        }
        if !self.threshold.is_finite() {
            return Err(Error::Config("threshold must be finite".into()));
        }
        if !self.series.is_empty() && !self.series.contains_key(&self.response) {
            return Err(Error::Config(format!(
                "response {:?} is not among the configured series",
                self.response
            )));
        }
        Ok(())
    }

    /// SHA-256 of the configuration with the output path blanked, so that
    /// the same study written to two places hashes identically.
    pub fn fingerprint(&self) -> String {
        let mut c = self.clone();
        c.output = PathBuf::new();
        let json = serde_json::to_vec(&c).expect("config serializes");
        hex(&Sha256::digest(&json))
    }
}

pub(crate) fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}
