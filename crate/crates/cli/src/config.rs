use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use swapsim_core::{DummyConfig, RiskConfig, SwapConfig, SweepConfig, TableSpec};
use toml::{Table, Value};

use crate::CliError;

/// Input microdata: a CSV and its schema file. Relative paths are taken
/// from the directory of the config file.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataSection {
    pub csv: PathBuf,
    pub schema: PathBuf,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScoreSection {
    /// Seed for breaking ties between equal scores.
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TabulateSection {
    pub row: String,
    pub col: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub row_bins: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub col_bins: Vec<String>,
    /// Restrict to one tract; otherwise the whole dataset plus a V per tract.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tract: Option<String>,
}

impl TabulateSection {
    pub fn spec(&self) -> TableSpec {
        TableSpec {
            row: self.row.clone(),
            col: self.col.clone(),
            row_bins: self.row_bins.clone(),
            col_bins: self.col_bins.clone(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RateGrid {
    pub start: f64,
    pub end: f64,
    pub step: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    /// Explicit rates; alternatively give `grid`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rates: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<RateGrid>,
    pub replications: usize,
    pub tables: Vec<TableSpec>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub tracts: Vec<String>,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default = "one")]
    pub workers: usize,
}

fn one() -> usize {
    1
}

/// Everything a run can be configured with. Unused sections are ignored by
/// subcommands that do not need them.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub data: Option<DataSection>,
    /// Dummy-data generator, used when there is no `[data]` section.
    #[serde(default)]
    pub generate: DummyConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub risk: Option<RiskConfig>,
    #[serde(default)]
    pub score: ScoreSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub swap: Option<SwapConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tabulate: Option<TabulateSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSection>,
}

impl RunConfig {
    /// The `[swap]` section with `[risk]` filled in for targeted runs that
    /// do not carry their own.
    pub fn swap_config(&self) -> SwapConfig {
        let mut cfg = self.swap.clone().unwrap_or_default();
        if cfg.risk.is_none() && cfg.mode == swapsim_core::SwapMode::Targeted {
            cfg.risk = self.risk.clone();
        }
        cfg
    }

    pub fn risk_config(&self) -> Result<RiskConfig, CliError> {
        self.risk
            .clone()
            .ok_or_else(|| CliError::Config("risk: section is required".into()))
    }

    pub fn sweep_config(&self) -> Result<SweepConfig, CliError> {
        let s = self
            .sweep
            .as_ref()
            .ok_or_else(|| CliError::Config("sweep: section is required".into()))?;
        let rates = match (&s.rates, &s.grid) {
            (Some(r), None) => r.clone(),
            (None, Some(g)) => {
                if !(g.step > 0.0 && g.end >= g.start) {
                    return Err(CliError::Config(
                        "sweep.grid: need step > 0 and end >= start".into(),
                    ));
                }
                SweepConfig::rate_grid(g.start, g.end, g.step)
            }
            _ => {
                return Err(CliError::Config(
                    "sweep.rates: give exactly one of rates or grid".into(),
                ))
            }
        };
        Ok(SweepConfig {
            rates,
            replications: s.replications,
            base_swap: self.swap_config(),
            tables: s.tables.clone(),
            tracts: s.tracts.clone(),
            master_seed: s.master_seed,
            workers: s.workers,
        })
    }
}

/// Parses a command-line value as a TOML value, falling back to a plain
/// string for bare words.
fn parse_value(raw: &str) -> Value {
    toml::from_str::<Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| Value::String(raw.to_string()))
}

fn set_dotted(root: &mut Table, key: &str, value: Value) -> Result<(), CliError> {
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(CliError::Config(format!("{key}: malformed override key")));
    }
    let (last, parents) = parts.split_last().expect("split yields one part");
    let mut table = root;
    for (i, part) in parents.iter().enumerate() {
        let entry = table
            .entry(part.to_string())
            .or_insert_with(|| Value::Table(Table::new()));
        table = entry.as_table_mut().ok_or_else(|| {
            CliError::Config(format!("{}: is not a section", parts[..=i].join(".")))
        })?;
    }
    table.insert(last.to_string(), value);
    Ok(())
}

/// A `key=value` override as given on the command line.
#[derive(Debug, Clone, Serialize)]
pub struct Override {
    pub key: String,
    pub value: String,
}

impl std::str::FromStr for Override {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (key, value) = s
            .split_once('=')
            .ok_or_else(|| format!("expected key=value, got `{s}`"))?;
        Ok(Override {
            key: key.trim().to_string(),
            value: value.trim().to_string(),
        })
    }
}

/// Reads the config file (if any), applies overrides in order and parses the
/// result. Relative data paths are resolved against the config directory.
pub fn resolve(path: Option<&Path>, overrides: &[Override]) -> Result<RunConfig, CliError> {
    let mut table = match path {
        Some(p) => {
            let text = fs::read_to_string(p)
                .map_err(|e| CliError::Config(format!("cannot read {}: {e}", p.display())))?;
            toml::from_str::<Table>(&text)
                .map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?
        }
        None => Table::new(),
    };
    for o in overrides {
        set_dotted(&mut table, &o.key, parse_value(&o.value))?;
    }
    let mut cfg = RunConfig::deserialize(Value::Table(table))
        .map_err(|e| CliError::Config(e.to_string().trim_end().to_string()))?;
    if let (Some(data), Some(dir)) = (&mut cfg.data, path.and_then(Path::parent)) {
        data.csv = dir.join(&data.csv);
        data.schema = dir.join(&data.schema);
    }
    Ok(cfg)
}
