//! Replicated swap-rate sweeps.
//!
//! Every (rate, replication) pair swaps the original dataset once with a
//! seed derived from `(master_seed, rate, replication)`, tabulates each
//! requested table in every tract and records Cramér's V and the share of
//! baseline ones that changed. [`SweepResult`] is computed from that raw log
//! alone, so external tools can rebuild it exactly.

use std::io::Write;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::microdata::{Dataset, PumaId, TractId};
use crate::risk;
use crate::swap::{self, ones_changed_between, SwapConfig, SwapMode};
use crate::tabulate::{cramers_v, ContingencyTable, TableSpec, Tabulator};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    /// Strictly increasing swap rates in `[0, 1]`.
    pub rates: Vec<f64>,
    pub replications: usize,
    /// Template swap; its `rate` and `seed` are overridden per replication.
    pub base_swap: SwapConfig,
    pub tables: Vec<TableSpec>,
    /// Tract labels to report. Empty means every tract.
    #[serde(default)]
    pub tracts: Vec<String>,
    #[serde(default)]
    pub master_seed: u64,
    /// Worker threads; 0 means one per available core.
    #[serde(default = "default_workers")]
    pub workers: usize,
}

fn default_workers() -> usize {
    1
}

impl SweepConfig {
    /// Evenly spaced rates `start, start + step, ..., end` (inclusive,
    /// rounded to 1e-9 to avoid accumulated drift).
    pub fn rate_grid(start: f64, end: f64, step: f64) -> Vec<f64> {
        let count = ((end - start) / step + 1e-9).floor() as usize + 1;
        (0..count)
            .map(|i| ((start + step * i as f64) * 1e9).round() / 1e9)
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.rates.is_empty() {
            return Err(Error::config("sweep.rates", "must not be empty"));
        }
        if self.rates.iter().any(|r| !(0.0..=1.0).contains(r)) {
            return Err(Error::config(
                "sweep.rates",
                "every rate must lie in [0, 1]",
            ));
        }
        if self.rates.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::config("sweep.rates", "must be strictly increasing"));
        }
        if self.replications < 1 {
            return Err(Error::config("sweep.replications", "must be at least 1"));
        }
        if self.tables.is_empty() {
            return Err(Error::config(
                "sweep.tables",
                "at least one table is required",
            ));
        }
        SwapConfig {
            rate: self.rates[0],
            ..self.base_swap.clone()
        }
        .validate()
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of one replication. Keyed on the rate value rather than its
/// position so that inserting rates leaves existing cells unchanged.
pub fn replication_seed(master_seed: u64, rate: f64, replication: usize) -> u64 {
    let h = splitmix64(master_seed);
    let h = splitmix64(h ^ rate.to_bits());
    splitmix64(h ^ replication as u64)
}

/// One (tract, rate, table, replication) observation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicationRecord {
    pub tract: String,
    pub rate: f64,
    pub spec: String,
    pub replication: usize,
    pub v: Option<f64>,
    pub ones_changed: Option<f64>,
    #[serde(skip)]
    key: (usize, usize, usize),
}

impl ReplicationRecord {
    pub fn defined(&self) -> bool {
        self.v.is_some()
    }
}

/// Per-swap diagnostics of one (rate, replication).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SwapRecord {
    pub rate: f64,
    pub replication: usize,
    pub seed: u64,
    pub selected: usize,
    pub pairs: usize,
    pub achieved_rate: f64,
    pub unmatched_selected: usize,
}

/// Everything observed during a sweep, sorted by (rate, replication, table,
/// tract).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicationLog {
    pub records: Vec<ReplicationRecord>,
    pub swaps: Vec<SwapRecord>,
    #[serde(skip)]
    frame: Option<Frame>,
}

#[derive(Debug, Clone, PartialEq)]
struct Frame {
    rates: Vec<f64>,
    replications: usize,
    specs: Vec<String>,
    tracts: Vec<TractInfo>,
    baselines: Vec<Baseline>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TractInfo {
    pub tract: String,
    pub puma: String,
}

/// Unswapped reference values for one table spec.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Baseline {
    pub spec: String,
    /// Unswapped V per reported tract, aligned with [`SweepResult::tracts`].
    pub unswapped_v: Vec<Option<f64>>,
    /// Per PUMA: mean unswapped V over all of its tracts with defined V.
    pub cross_tract_mean_v: Vec<PumaValue>,
    /// Per PUMA: V of the table pooled over the whole PUMA.
    pub combined_v: Vec<PumaValue>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PumaValue {
    pub puma: String,
    pub value: Option<f64>,
}

impl Baseline {
    pub fn cross_tract_mean_for(&self, puma: &str) -> Option<f64> {
        self.cross_tract_mean_v
            .iter()
            .find(|p| p.puma == puma)
            .and_then(|p| p.value)
    }
}

/// Aggregates over the replications of one (tract, rate, table) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellStats {
    pub tract: String,
    pub rate: f64,
    pub spec: String,
    /// `None` when no replication produced a defined V.
    pub mean_v: Option<f64>,
    pub se_v: Option<f64>,
    pub n_defined: usize,
    pub ones_changed_mean: Option<f64>,
    pub ones_changed_se: Option<f64>,
    pub n_ones_defined: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateDiagnostics {
    pub rate: f64,
    pub mean_selected: f64,
    pub mean_achieved_rate: f64,
    pub mean_unmatched_selected: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub rates: Vec<f64>,
    pub replications: usize,
    pub specs: Vec<String>,
    pub tracts: Vec<TractInfo>,
    /// Ordered by rate, then table, then tract.
    pub cells: Vec<CellStats>,
    pub baselines: Vec<Baseline>,
    pub diagnostics: Vec<RateDiagnostics>,
}

impl SweepResult {
    fn index(&self, tract: usize, rate: usize, spec: usize) -> usize {
        (rate * self.specs.len() + spec) * self.tracts.len() + tract
    }

    pub fn cell(&self, tract: usize, rate: usize, spec: usize) -> &CellStats {
        &self.cells[self.index(tract, rate, spec)]
    }

    pub fn tract_position(&self, label: &str) -> Option<usize> {
        self.tracts.iter().position(|t| t.tract == label)
    }

    /// Mean-V trajectory of one tract across all rates.
    pub fn trajectory(&self, tract: usize, spec: usize) -> Vec<Option<f64>> {
        (0..self.rates.len())
            .map(|r| self.cell(tract, r, spec).mean_v)
            .collect()
    }

    /// Long-format CSV: `tract,rate,spec,statistic,value`. Reference lines
    /// use an empty rate; PUMA-level references put `puma:<label>` in the
    /// tract column. Undefined values are written as empty fields.
    pub fn write_long_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        wtr.write_record(["tract", "rate", "spec", "statistic", "value"])?;
        let fmt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        for c in &self.cells {
            let rate = c.rate.to_string();
            for (stat, value) in [
                ("mean_v", fmt(c.mean_v)),
                ("se_v", fmt(c.se_v)),
                ("n_defined", c.n_defined.to_string()),
                ("ones_changed_mean", fmt(c.ones_changed_mean)),
                ("ones_changed_se", fmt(c.ones_changed_se)),
                ("n_ones_defined", c.n_ones_defined.to_string()),
            ] {
                wtr.write_record([c.tract.as_str(), &rate, &c.spec, stat, &value])?;
            }
        }
        for b in &self.baselines {
            for (t, v) in self.tracts.iter().zip(&b.unswapped_v) {
                wtr.write_record([t.tract.as_str(), "", &b.spec, "unswapped_v", &fmt(*v)])?;
            }
            for p in &b.cross_tract_mean_v {
                let tract = format!("puma:{}", p.puma);
                wtr.write_record([
                    tract.as_str(),
                    "",
                    &b.spec,
                    "cross_tract_mean_v",
                    &fmt(p.value),
                ])?;
            }
            for p in &b.combined_v {
                let tract = format!("puma:{}", p.puma);
                wtr.write_record([tract.as_str(), "", &b.spec, "combined_v", &fmt(p.value)])?;
            }
        }
        wtr.flush().map_err(|e| Error::io("<csv writer>", e))?;
        Ok(())
    }
}

impl ReplicationLog {
    /// CSV with one row per observation:
    /// `tract,rate,spec,replication,v,defined,ones_changed`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        wtr.write_record([
            "tract",
            "rate",
            "spec",
            "replication",
            "v",
            "defined",
            "ones_changed",
        ])?;
        for r in &self.records {
            wtr.write_record([
                r.tract.clone(),
                r.rate.to_string(),
                r.spec.clone(),
                r.replication.to_string(),
                r.v.map(|v| v.to_string()).unwrap_or_default(),
                r.defined().to_string(),
                r.ones_changed.map(|v| v.to_string()).unwrap_or_default(),
            ])?;
        }
        wtr.flush().map_err(|e| Error::io("<csv writer>", e))?;
        Ok(())
    }

    /// Collapses the log into per-cell aggregates.
    pub fn aggregate(&self) -> SweepResult {
        let frame = self
            .frame
            .as_ref()
            .expect("log produced by raw_replication_log");
        let (nr, ns, nt) = (frame.rates.len(), frame.specs.len(), frame.tracts.len());
        let mut v_values: Vec<Vec<f64>> = vec![Vec::new(); nr * ns * nt];
        let mut ones_values: Vec<Vec<f64>> = vec![Vec::new(); nr * ns * nt];
        for rec in &self.records {
            let (r, s, t) = rec.key;
            let idx = (r * ns + s) * nt + t;
            if let Some(v) = rec.v {
                v_values[idx].push(v);
            }
            if let Some(o) = rec.ones_changed {
                ones_values[idx].push(o);
            }
        }
        let mut cells = Vec::with_capacity(nr * ns * nt);
        for r in 0..nr {
            for s in 0..ns {
                for t in 0..nt {
                    let idx = (r * ns + s) * nt + t;
                    let (mean_v, se_v) = mean_se(&v_values[idx]);
                    let (ones_mean, ones_se) = mean_se(&ones_values[idx]);
                    cells.push(CellStats {
                        tract: frame.tracts[t].tract.clone(),
                        rate: frame.rates[r],
                        spec: frame.specs[s].clone(),
                        mean_v,
                        se_v,
                        n_defined: v_values[idx].len(),
                        ones_changed_mean: ones_mean,
                        ones_changed_se: ones_se,
                        n_ones_defined: ones_values[idx].len(),
                    });
                }
            }
        }
        let diagnostics = frame
            .rates
            .iter()
            .map(|&rate| {
                let rows: Vec<&SwapRecord> = self.swaps.iter().filter(|s| s.rate == rate).collect();
                let avg = |f: &dyn Fn(&SwapRecord) -> f64| {
                    rows.iter().map(|s| f(s)).sum::<f64>() / rows.len().max(1) as f64
                };
                RateDiagnostics {
                    rate,
                    mean_selected: avg(&|s| s.selected as f64),
                    mean_achieved_rate: avg(&|s| s.achieved_rate),
                    mean_unmatched_selected: avg(&|s| s.unmatched_selected as f64),
                }
            })
            .collect();
        SweepResult {
            rates: frame.rates.clone(),
            replications: frame.replications,
            specs: frame.specs.clone(),
            tracts: frame.tracts.clone(),
            cells,
            baselines: frame.baselines.clone(),
            diagnostics,
        }
    }
}

/// Mean and standard error (sample sd / sqrt(n)) of `values`, summed in
/// order. Values are shifted by the first element, which makes a constant
/// sample return that constant and a zero standard error exactly. A single
/// value has standard error 0.
pub fn mean_se(values: &[f64]) -> (Option<f64>, Option<f64>) {
    let Some(&first) = values.first() else {
        return (None, None);
    };
    let n = values.len() as f64;
    let shifted_mean = values.iter().map(|v| v - first).sum::<f64>() / n;
    let mean = first + shifted_mean;
    if values.len() == 1 {
        return (Some(mean), Some(0.0));
    }
    let ss: f64 = values
        .iter()
        .map(|v| {
            let d = (v - first) - shifted_mean;
            d * d
        })
        .sum();
    let sd = (ss / (n - 1.0)).sqrt();
    (Some(mean), Some(sd / n.sqrt()))
}

struct Prepared<'a> {
    ds: &'a Dataset,
    cfg: &'a SweepConfig,
    tabulators: Vec<Tabulator>,
    matching: Vec<usize>,
    scores: Option<Vec<f64>>,
    /// Reported tracts, as dataset tract ids.
    tracts: Vec<TractId>,
    /// Baseline tables per spec, indexed by tract id.
    baseline_tables: Vec<Vec<ContingencyTable>>,
}

fn prepare<'a>(ds: &'a Dataset, cfg: &'a SweepConfig) -> Result<Prepared<'a>> {
    cfg.validate()?;
    let tabulators = cfg
        .tables
        .iter()
        .map(|spec| Tabulator::new(ds.schema(), spec))
        .collect::<Result<Vec<_>>>()?;
    let matching = cfg
        .base_swap
        .matching_variables
        .iter()
        .map(|v| ds.schema().variable_index(v))
        .collect::<Result<Vec<_>>>()?;
    let scores = match cfg.base_swap.mode {
        SwapMode::Targeted => Some(risk::score(
            ds,
            cfg.base_swap.risk.as_ref().expect("validated"),
        )?),
        SwapMode::NonTargeted => None,
    };
    let tracts = if cfg.tracts.is_empty() {
        ds.tract_ids().collect()
    } else {
        cfg.tracts
            .iter()
            .map(|t| ds.tract_id(t))
            .collect::<Result<Vec<_>>>()?
    };
    let baseline_tables = tabulators.iter().map(|t| t.tabulate_by_tract(ds)).collect();
    Ok(Prepared {
        ds,
        cfg,
        tabulators,
        matching,
        scores,
        tracts,
        baseline_tables,
    })
}

impl Prepared<'_> {
    fn frame(&self) -> Frame {
        let ds = self.ds;
        let specs: Vec<String> = self.cfg.tables.iter().map(TableSpec::label).collect();
        let tracts = self
            .tracts
            .iter()
            .map(|&t| TractInfo {
                tract: ds.tract_label(t).to_string(),
                puma: ds.puma_label(ds.tract_puma(t)).to_string(),
            })
            .collect();
        let baselines = specs
            .iter()
            .zip(&self.baseline_tables)
            .zip(&self.tabulators)
            .map(|((spec, tables), tab)| {
                let unswapped_v = self
                    .tracts
                    .iter()
                    .map(|t| cramers_v(&tables[t.index()]).v)
                    .collect();
                let per_puma = |f: &dyn Fn(PumaId) -> Option<f64>| -> Vec<PumaValue> {
                    ds.puma_ids()
                        .map(|p| PumaValue {
                            puma: ds.puma_label(p).to_string(),
                            value: f(p),
                        })
                        .collect()
                };
                let cross_tract_mean_v = per_puma(&|p| {
                    let vs: Vec<f64> = ds
                        .tracts_in_puma(p)
                        .filter_map(|t| cramers_v(&tables[t.index()]).v)
                        .collect();
                    mean_se(&vs).0
                });
                let combined_v = per_puma(&|p| cramers_v(&tab.tabulate(ds.subset_by_puma_id(p))).v);
                Baseline {
                    spec: spec.clone(),
                    unswapped_v,
                    cross_tract_mean_v,
                    combined_v,
                }
            })
            .collect();
        Frame {
            rates: self.cfg.rates.clone(),
            replications: self.cfg.replications,
            specs,
            tracts,
            baselines,
        }
    }

    fn run_one(
        &self,
        rate_index: usize,
        replication: usize,
        specs: &[String],
    ) -> Result<(Vec<ReplicationRecord>, SwapRecord)> {
        let rate = self.cfg.rates[rate_index];
        let seed = replication_seed(self.cfg.master_seed, rate, replication);
        let swap_cfg = SwapConfig {
            rate,
            seed,
            ..self.cfg.base_swap.clone()
        };
        let outcome =
            swap::swap_prepared(self.ds, &swap_cfg, &self.matching, self.scores.as_deref())?;
        let mut records = Vec::with_capacity(specs.len() * self.tracts.len());
        for (s, tab) in self.tabulators.iter().enumerate() {
            let tables = tab.tabulate_by_tract(&outcome.dataset);
            for (t_pos, &t) in self.tracts.iter().enumerate() {
                let after = &tables[t.index()];
                records.push(ReplicationRecord {
                    tract: self.ds.tract_label(t).to_string(),
                    rate,
                    spec: specs[s].clone(),
                    replication,
                    v: cramers_v(after).v,
                    ones_changed: ones_changed_between(&self.baseline_tables[s][t.index()], after),
                    key: (rate_index, s, t_pos),
                });
            }
        }
        let swap_record = SwapRecord {
            rate,
            replication,
            seed,
            selected: outcome.selected,
            pairs: outcome.swapped_household_pairs.len(),
            achieved_rate: outcome.achieved_rate,
            unmatched_selected: outcome.unmatched_selected,
        };
        Ok((records, swap_record))
    }
}

fn resolve_workers(requested: usize) -> usize {
    if requested == 0 {
        std::thread::available_parallelism().map_or(1, |n| n.get())
    } else {
        requested
    }
}

/// Runs every replication and returns the full observation log.
/// The result does not depend on `cfg.workers`.
pub fn raw_replication_log(ds: &Dataset, cfg: &SweepConfig) -> Result<ReplicationLog> {
    let prepared = prepare(ds, cfg)?;
    let frame = prepared.frame();
    let jobs = cfg.rates.len() * cfg.replications;
    let workers = resolve_workers(cfg.workers).min(jobs).max(1);

    type JobOutput = Result<(Vec<ReplicationRecord>, SwapRecord)>;
    let slots: Vec<Mutex<Option<JobOutput>>> = (0..jobs).map(|_| Mutex::new(None)).collect();
    let next = AtomicUsize::new(0);
    let work = || loop {
        let job = next.fetch_add(1, Ordering::Relaxed);
        if job >= jobs {
            break;
        }
        let out = prepared.run_one(job / cfg.replications, job % cfg.replications, &frame.specs);
        *slots[job].lock().expect("slot lock") = Some(out);
    };
    if workers == 1 {
        work();
    } else {
        std::thread::scope(|scope| {
            for _ in 0..workers {
                scope.spawn(work);
            }
        });
    }

    let mut records = Vec::with_capacity(jobs * frame.specs.len() * frame.tracts.len());
    let mut swaps = Vec::with_capacity(jobs);
    for slot in slots {
        let (recs, swap) = slot.into_inner().expect("slot lock").expect("job ran")?;
        records.extend(recs);
        swaps.push(swap);
    }
    // jobs are (rate, replication) ordered; reorder records to (rate, rep, spec, tract)
    records.sort_by_key(|r| (r.key.0, r.replication, r.key.1, r.key.2));
    Ok(ReplicationLog {
        records,
        swaps,
        frame: Some(frame),
    })
}

pub fn run_sweep(ds: &Dataset, cfg: &SweepConfig) -> Result<SweepResult> {
    Ok(raw_replication_log(ds, cfg)?.aggregate())
}

/// Movement of one tract's mean V relative to its PUMA's cross-tract mean.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TractDrift {
    pub tract: String,
    pub unswapped_v: Option<f64>,
    /// Mean V at the smallest rate minus the cross-tract mean.
    pub start_distance: f64,
    /// Mean V at the largest rate minus the cross-tract mean.
    pub end_distance: f64,
    /// Whether the unswapped V lies below the cross-tract mean.
    pub below_mean: bool,
    pub shrank: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceSummary {
    pub spec: String,
    pub tracts: Vec<TractDrift>,
    /// Share of tracts whose absolute distance strictly shrank.
    pub shrink_fraction: f64,
    pub shrink_fraction_below: Option<f64>,
    pub shrink_fraction_above: Option<f64>,
}

/// Per-tract drift between the smallest and largest rate for table `spec`.
/// Tracts with an undefined mean V at either end are omitted.
pub fn convergence_summary(res: &SweepResult, spec: usize) -> Result<ConvergenceSummary> {
    if res.rates.len() < 2 {
        return Err(Error::InsufficientRates(res.rates.len()));
    }
    let baseline = &res.baselines[spec];
    let last = res.rates.len() - 1;
    let mut tracts = Vec::new();
    for (t, info) in res.tracts.iter().enumerate() {
        let Some(center) = baseline.cross_tract_mean_for(&info.puma) else {
            continue;
        };
        let (Some(start), Some(end)) =
            (res.cell(t, 0, spec).mean_v, res.cell(t, last, spec).mean_v)
        else {
            continue;
        };
        let unswapped_v = baseline.unswapped_v[t];
        let start_distance = start - center;
        let end_distance = end - center;
        tracts.push(TractDrift {
            tract: info.tract.clone(),
            unswapped_v,
            start_distance,
            end_distance,
            below_mean: unswapped_v.is_some_and(|v| v < center),
            shrank: end_distance.abs() < start_distance.abs(),
        });
    }
    let fraction = |filter: &dyn Fn(&TractDrift) -> bool| -> Option<f64> {
        let group: Vec<&TractDrift> = tracts.iter().filter(|d| filter(d)).collect();
        (!group.is_empty())
            .then(|| group.iter().filter(|d| d.shrank).count() as f64 / group.len() as f64)
    };
    Ok(ConvergenceSummary {
        spec: res.specs[spec].clone(),
        shrink_fraction: fraction(&|_| true).unwrap_or(0.0),
        shrink_fraction_below: fraction(&|d| d.below_mean),
        shrink_fraction_above: fraction(&|d| !d.below_mean),
        tracts,
    })
}

/// Reproducibility block written next to sweep outputs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepMetadata {
    pub code_version: String,
    pub config: SweepConfig,
    pub master_seed: u64,
    pub seed_rule: String,
    pub persons: usize,
    pub households: usize,
}

impl SweepMetadata {
    pub fn new(ds: &Dataset, cfg: &SweepConfig) -> Self {
        Self {
            code_version: env!("CARGO_PKG_VERSION").to_string(),
            config: cfg.clone(),
            master_seed: cfg.master_seed,
            seed_rule:
                "splitmix64(splitmix64(splitmix64(master_seed) ^ rate.to_bits()) ^ replication)"
                    .into(),
            persons: ds.len(),
            households: ds.households().len(),
        }
    }
}

#[derive(Serialize)]
pub struct SweepReport<'a> {
    pub metadata: &'a SweepMetadata,
    pub result: &'a SweepResult,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mean_se_constant_sample() {
        let x = 0.123_456_789_f64;
        let (m, se) = mean_se(&[x; 150]);
        assert_eq!(m, Some(x));
        assert_eq!(se, Some(0.0));
    }

    #[test]
    fn mean_se_small() {
        let (m, se) = mean_se(&[1.0, 2.0, 3.0, 4.0]);
        assert!((m.unwrap() - 2.5).abs() < 1e-15);
        let sd = (5.0f64 / 3.0).sqrt();
        assert!((se.unwrap() - sd / 2.0).abs() < 1e-15);
        assert_eq!(mean_se(&[]), (None, None));
        assert_eq!(mean_se(&[7.0]), (Some(7.0), Some(0.0)));
    }

    #[test]
    fn rate_grid_is_clean() {
        let g = SweepConfig::rate_grid(0.0, 0.2, 0.01);
        assert_eq!(g.len(), 21);
        assert_eq!(g[7], 0.07);
        assert_eq!(g[20], 0.2);
        assert_eq!(SweepConfig::rate_grid(0.05, 0.15, 0.005).len(), 21);
    }

    #[test]
    fn seeds_are_distinct_and_stable() {
        let a = replication_seed(1, 0.05, 0);
        assert_eq!(a, replication_seed(1, 0.05, 0));
        assert_ne!(a, replication_seed(1, 0.05, 1));
        assert_ne!(a, replication_seed(1, 0.06, 0));
        assert_ne!(a, replication_seed(2, 0.05, 0));
    }
}
