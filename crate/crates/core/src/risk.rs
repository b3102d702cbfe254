//! Per-record disclosure-risk scores, top-risk selection and at-risk cell
//! detection.
//!
//! Both scorers are oriented so that a lower score means a riskier record.

use std::io::Write;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::microdata::Dataset;
use crate::tabulate::ContingencyTable;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Scorer {
    /// Sum over risk variables of `ln(count of the person's level / n)`.
    #[default]
    LogFrequency,
    /// Minus the number of risk variables on which the person falls in the
    /// bottom or top `q` quantile.
    QuantileExtremity,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RiskConfig {
    #[serde(default)]
    pub scorer: Scorer,
    pub risk_variables: Vec<String>,
    /// Tail fraction for [`Scorer::QuantileExtremity`].
    #[serde(default = "default_q")]
    pub q: f64,
}

fn default_q() -> f64 {
    0.05
}

impl RiskConfig {
    pub fn log_frequency(vars: &[&str]) -> Self {
        Self {
            scorer: Scorer::LogFrequency,
            risk_variables: vars.iter().map(|s| s.to_string()).collect(),
            q: default_q(),
        }
    }

    pub fn quantile_extremity(vars: &[&str], q: f64) -> Self {
        Self {
            scorer: Scorer::QuantileExtremity,
            risk_variables: vars.iter().map(|s| s.to_string()).collect(),
            q,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.risk_variables.is_empty() {
            return Err(Error::config("risk.risk_variables", "must not be empty"));
        }
        if self.scorer == Scorer::QuantileExtremity && !(self.q > 0.0 && self.q < 0.5) {
            return Err(Error::config(
                "risk.q",
                format!("must lie in (0, 0.5), got {}", self.q),
            ));
        }
        Ok(())
    }
}

/// One person's score and its position in the tie-broken ranking
/// (0 = riskiest).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskScore {
    pub person_id: String,
    pub score: f64,
    pub rank: usize,
}

fn resolve(ds: &Dataset, cfg: &RiskConfig) -> Result<Vec<usize>> {
    cfg.validate()?;
    cfg.risk_variables
        .iter()
        .map(|v| ds.schema().variable_index(v))
        .collect()
}

fn level_counts(ds: &Dataset, var: usize) -> Vec<u64> {
    let mut counts = vec![0u64; ds.schema().variable(var).level_count()];
    for p in ds.persons() {
        counts[p.values[var] as usize] += 1;
    }
    counts
}

/// Log relative-frequency score of every person, with frequencies taken over
/// the whole dataset.
pub fn log_frequency_score(ds: &Dataset, cfg: &RiskConfig) -> Result<Vec<f64>> {
    let vars = resolve(ds, cfg)?;
    let log_n = (ds.len() as f64).ln();
    // Products of counts stay exact well past any realistic dataset, so
    // persons with equal frequency products get bit-identical scores.
    let mut products = vec![1.0f64; ds.len()];
    for &var in &vars {
        let counts = level_counts(ds, var);
        for (prod, p) in products.iter_mut().zip(ds.persons()) {
            *prod *= counts[p.values[var] as usize] as f64;
        }
    }
    let offset = vars.len() as f64 * log_n;
    Ok(products
        .into_iter()
        .map(|prod| prod.ln() - offset)
        .collect())
}

/// Negated count of quantile-extreme attributes.
///
/// A level is in the bottom tail when the share of persons at or below it is
/// at most `q`, and in the top tail when the share at or above it is at most
/// `q`. Tied values are therefore all extreme or all not.
pub fn quantile_extremity_score(ds: &Dataset, cfg: &RiskConfig) -> Result<Vec<f64>> {
    let vars = resolve(ds, cfg)?;
    for &v in &vars {
        if !ds.schema().variable(v).ordered {
            return Err(Error::UnorderedVariable(
                ds.schema().variable(v).name.clone(),
            ));
        }
    }
    let n = ds.len() as f64;
    let limit = cfg.q * n * (1.0 + 1e-12);
    let mut scores = vec![0.0; ds.len()];
    for var in vars {
        let counts = level_counts(ds, var);
        let mut extreme = vec![false; counts.len()];
        let mut below = 0u64;
        for (level, &c) in counts.iter().enumerate() {
            below += c;
            if below as f64 <= limit {
                extreme[level] = true;
            }
        }
        let mut above = 0u64;
        for (level, &c) in counts.iter().enumerate().rev() {
            above += c;
            if above as f64 <= limit {
                extreme[level] = true;
            }
        }
        for (s, p) in scores.iter_mut().zip(ds.persons()) {
            if extreme[p.values[var] as usize] {
                *s -= 1.0;
            }
        }
    }
    Ok(scores)
}

/// Scores with whichever scorer `cfg` names.
pub fn score(ds: &Dataset, cfg: &RiskConfig) -> Result<Vec<f64>> {
    match cfg.scorer {
        Scorer::LogFrequency => log_frequency_score(ds, cfg),
        Scorer::QuantileExtremity => quantile_extremity_score(ds, cfg),
    }
}

/// Person indices from riskiest to safest. Equal scores are ordered by a
/// uniform random permutation drawn from `rng`.
pub fn risk_order<R: Rng + ?Sized>(scores: &[f64], rng: &mut R) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.shuffle(rng);
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    order
}

/// The `m` persons with the lowest scores; ties at the cutoff are broken
/// uniformly at random.
pub fn select_top_risk<R: Rng + ?Sized>(
    scores: &[f64],
    m: usize,
    rng: &mut R,
) -> Result<Vec<usize>> {
    if m > scores.len() {
        return Err(Error::CountTooLarge {
            requested: m,
            available: scores.len(),
        });
    }
    let mut order = risk_order(scores, rng);
    order.truncate(m);
    Ok(order)
}

/// Tie-broken ranking with person ids attached, riskiest first.
pub fn rank_scores<R: Rng + ?Sized>(ds: &Dataset, scores: &[f64], rng: &mut R) -> Vec<RiskScore> {
    risk_order(scores, rng)
        .into_iter()
        .enumerate()
        .map(|(rank, p)| RiskScore {
            person_id: ds.persons()[p].id.clone(),
            score: scores[p],
            rank,
        })
        .collect()
}

/// CSV with columns `person_id,score,rank`.
pub fn write_scores_csv<W: Write>(writer: W, ranking: &[RiskScore]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    for r in ranking {
        wtr.serialize(r)?;
    }
    wtr.flush().map_err(|e| Error::io("<csv writer>", e))?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AtRiskCell {
    pub row: usize,
    pub col: usize,
    pub count: u64,
}

/// Small-count thresholds flagged by default: cells holding 1 or 2 persons.
pub const DEFAULT_AT_RISK_COUNTS: [u64; 2] = [1, 2];

/// Cells whose count is one of `thresholds`, in row-major order.
pub fn find_at_risk_cells(table: &ContingencyTable, thresholds: &[u64]) -> Vec<AtRiskCell> {
    table
        .cells()
        .filter(|(_, _, c)| thresholds.contains(c))
        .map(|(row, col, count)| AtRiskCell { row, col, count })
        .collect()
}
