//! Run configuration: a TOML file with `[data]`, `[output]`, `[tokenizer]`,
//! `[model]` and `[train]` sections. Unknown keys are rejected. Relative
//! paths resolve against the directory of the config file.

use std::path::{Path, PathBuf};

use docembed::model::ModelConfig;
use docembed::text::TokenizerConfig;
use docembed::train::TrainConfig;
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    /// One document per line; an optional `label<TAB>` prefix is ignored.
    pub corpus: PathBuf,
    /// Pre-trained word vectors; random initialisation when absent.
    pub vectors: Option<PathBuf>,
    /// `text` or `binary`; sniffed from the file when absent.
    pub vector_format: Option<String>,
    pub min_count: u64,
    /// Bound of the uniform random word vectors; `0.5 / dim` when absent.
    pub init_scale: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    /// Receives `model.cne`, `vocab.txt`, `train.log` and `config.toml`.
    pub dir: PathBuf,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { dir: "run".into() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub data: DataConfig,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub tokenizer: TokenizerConfig,
    #[serde(default)]
    pub model: ModelConfig,
    #[serde(default)]
    pub train: TrainConfig,
}

fn config_error(e: impl std::fmt::Display) -> CliError {
    CliError::Config(e.to_string())
}

/// Applies `section.key=value` overrides to a parsed table. Values are read
/// as TOML when possible and as plain strings otherwise.
pub fn apply_overrides(table: &mut toml::Table, overrides: &[String]) -> Result<(), CliError> {
    for item in overrides {
        let (key, raw) = item
            .split_once('=')
            .ok_or_else(|| config_error(format!("override `{item}` is not key=value")))?;
        let value = toml::from_str::<toml::Table>(&format!("v = {raw}"))
            .ok()
            .and_then(|mut t| t.remove("v"))
            .unwrap_or_else(|| toml::Value::String(raw.to_string()));
        let parts: Vec<&str> = key.trim().split('.').collect();
        let (last, path) = parts.split_last().expect("split yields one part");
        let mut cursor = &mut *table;
        for p in path {
            cursor = cursor
                .entry(p.to_string())
                .or_insert_with(|| toml::Value::Table(toml::Table::new()))
                .as_table_mut()
                .ok_or_else(|| config_error(format!("`{p}` in `{key}` is not a section")))?;
        }
        cursor.insert(last.to_string(), value);
    }
    Ok(())
}

impl RunConfig {
    pub fn parse(text: &str, overrides: &[String], base: &Path) -> Result<Self, CliError> {
        let mut table: toml::Table = toml::from_str(text).map_err(config_error)?;
        apply_overrides(&mut table, overrides)?;
        let mut config: RunConfig = table.try_into().map_err(config_error)?;
        config.resolve_paths(base);
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path, overrides: &[String]) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| config_error(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text, overrides, path.parent().unwrap_or(Path::new(".")))
    }

    fn resolve_paths(&mut self, base: &Path) {
        let join = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        join(&mut self.data.corpus);
        if let Some(v) = &mut self.data.vectors {
            join(v);
        }
        join(&mut self.output.dir);
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.data.corpus.as_os_str().is_empty() {
            return Err(config_error("data.corpus is required"));
        }
        if self.data.min_count == 0 {
            return Err(config_error("data.min_count must be >= 1"));
        }
        if matches!(self.data.init_scale, Some(b) if !(b.is_finite() && b > 0.0)) {
            return Err(config_error("data.init_scale must be a positive number"));
        }
        self.model.validate().map_err(config_error)?;
        self.train.validate().map_err(config_error)?;
        Ok(())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}

impl Default for DataConfig {
    fn default() -> Self {
        Self {
            corpus: PathBuf::new(),
            vectors: None,
            vector_format: None,
            min_count: 5,
            init_scale: None,
        }
    }
}
