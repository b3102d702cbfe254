//! Browser bindings for three interactive views:
//!
//! - [`dummy_tracts`]: per-tract Poor × Young V of freshly generated dummy data.
//! - [`sweep_trajectories`]: mean V per tract across swap rates.
//! - [`table_association`]: chi-square and Cramér's V of a typed-in table.
//!
//! Each takes and returns JSON so the page needs no generated type glue.
//! The `*_json` functions hold the logic and are usable from native Rust.

use serde::{Deserialize, Serialize};
use swapsim_core::risk::RiskConfig;
use swapsim_core::simulate::{convergence_summary, run_sweep, SweepConfig};
use swapsim_core::synthgen::{combined_vs_tract_v_share, POOR, YOUNG};
use swapsim_core::tabulate::{
    cramers_v, AssociationResult, ContingencyTable, TableSpec, Tabulator,
};
use swapsim_core::{generate_dummy, DummyConfig, SwapConfig};
use wasm_bindgen::prelude::*;

fn parse<'a, T: Deserialize<'a>>(json: &'a str) -> Result<T, String> {
    serde_json::from_str(json).map_err(|e| format!("bad input: {e}"))
}

fn to_json(value: &impl Serialize) -> Result<String, String> {
    serde_json::to_string(value).map_err(|e| e.to_string())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataParams {
    pub n_tracts: usize,
    pub persons_per_tract: usize,
    pub slope_low: f64,
    pub slope_high: f64,
    pub seed: u64,
}

impl Default for DataParams {
    fn default() -> Self {
        let d = DummyConfig::default();
        Self {
            n_tracts: 20,
            persons_per_tract: d.persons_per_tract,
            slope_low: d.slope_low,
            slope_high: d.slope_high,
            seed: d.seed,
        }
    }
}

impl DataParams {
    fn dummy_config(&self) -> Result<DummyConfig, String> {
        let cfg = DummyConfig {
            n_tracts: self.n_tracts,
            persons_per_tract: self.persons_per_tract,
            slope_low: self.slope_low,
            slope_high: self.slope_high,
            seed: self.seed,
            ..DummyConfig::default()
        };
        cfg.validate().map_err(|e| e.to_string())?;
        Ok(cfg)
    }
}

#[derive(Debug, Serialize)]
pub struct TractV {
    pub tract: String,
    pub v: Option<f64>,
}

#[derive(Debug, Serialize)]
pub struct DummySummary {
    pub tracts: Vec<TractV>,
    pub combined_v: Option<f64>,
    pub cross_tract_mean_v: Option<f64>,
    /// Share of tracts with V below the combined V.
    pub share_below_combined: f64,
}

pub fn dummy_tracts_json(params: &str) -> Result<String, String> {
    let p: DataParams = parse(params)?;
    let ds = generate_dummy(&p.dummy_config()?).map_err(|e| e.to_string())?;
    let tab =
        Tabulator::new(ds.schema(), &TableSpec::new(POOR, YOUNG)).map_err(|e| e.to_string())?;
    let tracts: Vec<TractV> = tab
        .tabulate_by_tract(&ds)
        .iter()
        .zip(ds.tract_ids())
        .map(|(t, id)| TractV {
            tract: ds.tract_label(id).to_string(),
            v: cramers_v(t).v,
        })
        .collect();
    let defined: Vec<f64> = tracts.iter().filter_map(|t| t.v).collect();
    to_json(&DummySummary {
        combined_v: cramers_v(&tab.tabulate(&ds)).v,
        cross_tract_mean_v: (!defined.is_empty())
            .then(|| defined.iter().sum::<f64>() / defined.len() as f64),
        share_below_combined: combined_vs_tract_v_share(&ds).map_err(|e| e.to_string())?,
        tracts,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepParams {
    pub data: DataParams,
    pub max_rate: f64,
    pub steps: usize,
    pub replications: usize,
    pub targeted: bool,
    pub master_seed: u64,
}

impl Default for SweepParams {
    fn default() -> Self {
        Self {
            data: DataParams::default(),
            max_rate: 0.2,
            steps: 10,
            replications: 10,
            targeted: false,
            master_seed: 1,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct Trajectory {
    pub tract: String,
    pub mean_v: Vec<Option<f64>>,
}

#[derive(Debug, Serialize)]
pub struct SweepSummary {
    pub rates: Vec<f64>,
    pub trajectories: Vec<Trajectory>,
    pub cross_tract_mean_v: Option<f64>,
    pub shrink_fraction: f64,
}

pub fn sweep_trajectories_json(params: &str) -> Result<String, String> {
    let p: SweepParams = parse(params)?;
    if p.steps == 0 || !(p.max_rate > 0.0 && p.max_rate <= 1.0) {
        return Err("need steps >= 1 and 0 < max_rate <= 1".into());
    }
    let ds = generate_dummy(&p.data.dummy_config()?).map_err(|e| e.to_string())?;
    let base_swap = if p.targeted {
        SwapConfig::targeted(0.0, RiskConfig::log_frequency(&["age", "income"]), 0)
    } else {
        SwapConfig::non_targeted(0.0, 0)
    };
    let cfg = SweepConfig {
        rates: (0..=p.steps)
            .map(|i| p.max_rate * i as f64 / p.steps as f64)
            .collect(),
        replications: p.replications,
        base_swap: SwapConfig {
            require_distinct_tracts: true,
            ..base_swap
        },
        tables: vec![TableSpec::new(POOR, YOUNG)],
        tracts: Vec::new(),
        master_seed: p.master_seed,
        workers: 1,
    };
    let res = run_sweep(&ds, &cfg).map_err(|e| e.to_string())?;
    let summary = convergence_summary(&res, 0).map_err(|e| e.to_string())?;
    to_json(&SweepSummary {
        trajectories: res
            .tracts
            .iter()
            .enumerate()
            .map(|(t, info)| Trajectory {
                tract: info.tract.clone(),
                mean_v: res.trajectory(t, 0),
            })
            .collect(),
        cross_tract_mean_v: res.baselines[0]
            .cross_tract_mean_v
            .first()
            .and_then(|p| p.value),
        shrink_fraction: summary.shrink_fraction,
        rates: res.rates,
    })
}

/// `{"rows": [[a, b], [c, d]]}` with non-negative integer counts.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TableInput {
    pub rows: Vec<Vec<u64>>,
}

pub fn table_association_json(input: &str) -> Result<String, String> {
    let t: TableInput = parse(input)?;
    let cols = t.rows.first().map_or(0, Vec::len);
    if t.rows.is_empty() || cols == 0 || t.rows.iter().any(|r| r.len() != cols) {
        return Err("rows must be a non-empty rectangular array".into());
    }
    let result: AssociationResult = cramers_v(&ContingencyTable::from_counts(&t.rows));
    to_json(&result)
}

#[wasm_bindgen]
pub fn dummy_tracts(params: &str) -> Result<String, JsError> {
    dummy_tracts_json(params).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn sweep_trajectories(params: &str) -> Result<String, JsError> {
    sweep_trajectories_json(params).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn table_association(input: &str) -> Result<String, JsError> {
    table_association_json(input).map_err(|e| JsError::new(&e))
}
