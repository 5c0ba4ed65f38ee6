use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::Deserialize;

/// Defaults read from `--config run.toml`. Every key is optional and only
/// fills in options that were not given on the command line.
///
/// ```toml
/// input = "tables/"          # directory with supply/use/demand/registry CSVs
/// model = "out/model.json"
/// out = "out/"
/// mode = "unified"           # or "verbatim"
/// horizon = 10
/// shocks = ["UKR:maize", "UKR:wheat"]
/// shock_all_products = "UKR"
/// threads = 8                # 0 = all cores
/// format = "binary"          # sweep chunks: "binary" or "csv"
/// chunk_len = 125
/// threshold = 1.0
/// sweep = "out/sweep/"
/// addr = "127.0.0.1:8080"
/// ```
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub input: Option<PathBuf>,
    pub model: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub mode: Option<String>,
    pub horizon: Option<usize>,
    pub shocks: Option<Vec<String>>,
    pub shock_all_products: Option<String>,
    pub threads: Option<usize>,
    pub format: Option<String>,
    pub chunk_len: Option<usize>,
    pub threshold: Option<f64>,
    pub sweep: Option<PathBuf>,
    pub addr: Option<String>,
}

impl RunConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
        toml::from_str(&text).map_err(|e| ConfigError(format!("{}: {e}", path.display())).into())
    }
}

/// A malformed configuration file; reported with exit code 1.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "invalid configuration {}", self.0)
    }
}

impl std::error::Error for ConfigError {}
