//! Household swapping engines.
//!
//! A swap selects `floor(n * rate)` persons, either uniformly or by
//! disclosure risk, visits them in random order and, for each one whose
//! household is still unswapped, exchanges tracts with a randomly drawn
//! compatible household: same PUMA, same size, same multiset of matching
//! variable values, not yet swapped. Person attributes are never touched.

use std::collections::{HashMap, HashSet};
use std::io::Write;

use rand::seq::{index, IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::microdata::{Dataset, Level, PumaId, TractId};
use crate::risk::{self, RiskConfig};
use crate::tabulate::{ContingencyTable, TableSpec, Tabulator};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SwapMode {
    #[default]
    NonTargeted,
    Targeted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SwapConfig {
    /// Fraction of persons selected to seed swaps.
    pub rate: f64,
    /// Variables on which swapped households must agree.
    #[serde(default)]
    pub matching_variables: Vec<String>,
    #[serde(default)]
    pub mode: SwapMode,
    /// Required for [`SwapMode::Targeted`].
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub risk: Option<RiskConfig>,
    #[serde(default)]
    pub seed: u64,
    /// Reject partners that currently sit in the same tract.
    #[serde(default)]
    pub require_distinct_tracts: bool,
}

impl Default for SwapConfig {
    fn default() -> Self {
        Self {
            rate: 0.0,
            matching_variables: Vec::new(),
            mode: SwapMode::NonTargeted,
            risk: None,
            seed: 0,
            require_distinct_tracts: false,
        }
    }
}

impl SwapConfig {
    pub fn non_targeted(rate: f64, seed: u64) -> Self {
        Self {
            rate,
            seed,
            ..Self::default()
        }
    }

    pub fn targeted(rate: f64, risk: RiskConfig, seed: u64) -> Self {
        Self {
            rate,
            seed,
            mode: SwapMode::Targeted,
            risk: Some(risk),
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.rate) {
            return Err(Error::config(
                "swap.rate",
                format!("must lie in [0, 1], got {}", self.rate),
            ));
        }
        match (self.mode, &self.risk) {
            (SwapMode::Targeted, None) => Err(Error::config(
                "swap.risk",
                "targeted mode needs a risk configuration",
            )),
            (SwapMode::Targeted, Some(r)) => r.validate(),
            _ => Ok(()),
        }
    }
}

/// Number of persons selected at `rate`.
pub fn selection_count(n: usize, rate: f64) -> usize {
    ((n as f64 * rate) + 1e-9).floor().min(n as f64) as usize
}

#[derive(Debug, Clone)]
pub struct SwapOutcome {
    pub dataset: Dataset,
    /// Household index pairs that exchanged tracts.
    pub swapped_household_pairs: Vec<(usize, usize)>,
    /// Persons selected to seed swaps.
    pub selected: usize,
    /// Fraction of all persons living in a swapped household.
    pub achieved_rate: f64,
    /// Selected persons whose household found no compatible partner.
    pub unmatched_selected: usize,
}

impl SwapOutcome {
    /// Audit CSV: one row per pair with the tracts each household held
    /// before the swap.
    pub fn write_pairs_csv<W: Write>(&self, before: &Dataset, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        wtr.write_record([
            "household_a",
            "household_b",
            "tract_a_before",
            "tract_b_before",
        ])?;
        for &(a, b) in &self.swapped_household_pairs {
            wtr.write_record([
                before.households()[a].id.as_str(),
                before.households()[b].id.as_str(),
                before.tract_label(before.household_tract(a)),
                before.tract_label(before.household_tract(b)),
            ])?;
        }
        wtr.flush().map_err(|e| Error::io("<csv writer>", e))?;
        Ok(())
    }
}

/// Sorted multiset of the matching-variable values over a household's
/// members, flattened member by member.
fn matching_key(ds: &Dataset, household: usize, vars: &[usize]) -> Vec<Level> {
    let mut members: Vec<Vec<Level>> = ds.households()[household]
        .members
        .iter()
        .map(|&p| vars.iter().map(|&v| ds.persons()[p].values[v]).collect())
        .collect();
    members.sort_unstable();
    members.concat()
}

fn resolve_vars(ds: &Dataset, names: &[String]) -> Result<Vec<usize>> {
    names
        .iter()
        .map(|n| ds.schema().variable_index(n))
        .collect()
}

/// Households grouped by (PUMA, size, matching key), holding only those
/// still available for swapping.
#[derive(Debug, Clone)]
struct CandidateIndex {
    bucket_of: Vec<usize>,
    position: Vec<usize>,
    buckets: Vec<Vec<usize>>,
}

impl CandidateIndex {
    fn new(ds: &Dataset, vars: &[usize]) -> Self {
        let mut ids: HashMap<(PumaId, usize, Vec<Level>), usize> = HashMap::new();
        let mut buckets: Vec<Vec<usize>> = Vec::new();
        let mut bucket_of = Vec::with_capacity(ds.households().len());
        let mut position = Vec::with_capacity(ds.households().len());
        for (h, hh) in ds.households().iter().enumerate() {
            let key = (hh.puma, hh.size(), matching_key(ds, h, vars));
            let b = *ids.entry(key).or_insert_with(|| {
                buckets.push(Vec::new());
                buckets.len() - 1
            });
            bucket_of.push(b);
            position.push(buckets[b].len());
            buckets[b].push(h);
        }
        Self {
            bucket_of,
            position,
            buckets,
        }
    }

    fn remove(&mut self, h: usize) {
        let b = self.bucket_of[h];
        let pos = self.position[h];
        let bucket = &mut self.buckets[b];
        bucket.swap_remove(pos);
        if let Some(&moved) = bucket.get(pos) {
            self.position[moved] = pos;
        }
    }

    fn peers(&self, h: usize) -> &[usize] {
        &self.buckets[self.bucket_of[h]]
    }

    /// Uniform draw among peers of `h` accepted by `ok`.
    fn draw<R: Rng>(&self, h: usize, rng: &mut R, ok: impl Fn(usize) -> bool) -> Option<usize> {
        let peers = self.peers(h);
        if peers.len() < 2 {
            return None;
        }
        for _ in 0..16 {
            let c = peers[rng.random_range(0..peers.len())];
            if c != h && ok(c) {
                return Some(c);
            }
        }
        let valid: Vec<usize> = peers.iter().copied().filter(|&c| c != h && ok(c)).collect();
        valid.choose(rng).copied()
    }
}

/// Unswapped households compatible with `household`: same PUMA, same size,
/// equal multiset of values over `matching_variables`, excluding itself.
/// Returned in ascending index order.
pub fn compatible_candidates(
    ds: &Dataset,
    household: &str,
    matching_variables: &[String],
    swapped: &HashSet<usize>,
) -> Result<Vec<usize>> {
    let h = ds.household_index(household)?;
    let vars = resolve_vars(ds, matching_variables)?;
    let index = CandidateIndex::new(ds, &vars);
    let mut out: Vec<usize> = index
        .peers(h)
        .iter()
        .copied()
        .filter(|&c| c != h && !swapped.contains(&c))
        .collect();
    out.sort_unstable();
    Ok(out)
}

/// Runs one swap of `ds` under `cfg`. Deterministic in `(ds, cfg)`.
pub fn swap(ds: &Dataset, cfg: &SwapConfig) -> Result<SwapOutcome> {
    cfg.validate()?;
    let vars = resolve_vars(ds, &cfg.matching_variables)?;
    let scores = match cfg.mode {
        SwapMode::Targeted => Some(risk::score(ds, cfg.risk.as_ref().expect("validated"))?),
        SwapMode::NonTargeted => None,
    };
    swap_prepared(ds, cfg, &vars, scores.as_deref())
}

/// Swap with matching variables already resolved and, for targeted mode,
/// risk scores already computed. Used by the sweep to avoid rescoring the
/// same dataset every replication.
pub(crate) fn swap_prepared(
    ds: &Dataset,
    cfg: &SwapConfig,
    vars: &[usize],
    scores: Option<&[f64]>,
) -> Result<SwapOutcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let n = ds.len();
    let m = selection_count(n, cfg.rate);

    let mut selected = match cfg.mode {
        SwapMode::NonTargeted => index::sample(&mut rng, n, m).into_vec(),
        SwapMode::Targeted => {
            let scores = scores.expect("targeted swap needs scores");
            risk::select_top_risk(scores, m, &mut rng)?
        }
    };
    selected.shuffle(&mut rng);

    let mut index = CandidateIndex::new(ds, vars);
    let mut tracts: Vec<TractId> = ds.household_tracts().to_vec();
    let mut swapped = vec![false; ds.households().len()];
    let mut pairs = Vec::new();
    let mut unmatched = 0;

    for &p in &selected {
        let h = ds.persons()[p].household;
        if swapped[h] {
            continue;
        }
        let own_tract = tracts[h];
        let partner = if cfg.require_distinct_tracts {
            index.draw(h, &mut rng, |c| tracts[c] != own_tract)
        } else {
            index.draw(h, &mut rng, |_| true)
        };
        let Some(partner) = partner else {
            unmatched += 1;
            continue;
        };
        tracts.swap(h, partner);
        swapped[h] = true;
        swapped[partner] = true;
        index.remove(h);
        index.remove(partner);
        pairs.push((h, partner));
    }

    let moved: usize = pairs
        .iter()
        .map(|&(a, b)| ds.households()[a].size() + ds.households()[b].size())
        .sum();
    Ok(SwapOutcome {
        dataset: ds.with_household_tracts(tracts),
        swapped_household_pairs: pairs,
        selected: m,
        achieved_rate: if n == 0 { 0.0 } else { moved as f64 / n as f64 },
        unmatched_selected: unmatched,
    })
}

/// Share of the before-table's cells equal to 1 whose count differs in the
/// after-table. `None` when the before-table has no such cell.
pub fn ones_changed_between(before: &ContingencyTable, after: &ContingencyTable) -> Option<f64> {
    let mut ones = 0usize;
    let mut changed = 0usize;
    for ((_, _, b), &a) in before.cells().zip(after.counts()) {
        if b == 1 {
            ones += 1;
            if a != 1 {
                changed += 1;
            }
        }
    }
    (ones > 0).then(|| changed as f64 / ones as f64)
}

/// [`ones_changed_between`] on the `row_var` × `col_var` tables of one tract
/// before and after a swap.
pub fn ones_changed_proportion(
    before: &Dataset,
    after: &Dataset,
    tract: &str,
    row_var: &str,
    col_var: &str,
) -> Result<f64> {
    let t_before = before.tract_id(tract)?;
    let t_after = after.tract_id(tract)?;
    let tab = Tabulator::new(before.schema(), &TableSpec::new(row_var, col_var))?;
    let b = tab.tabulate(before.subset_by_tract_id(t_before));
    let a = tab.tabulate(after.subset_by_tract_id(t_after));
    ones_changed_between(&b, &a).ok_or(Error::NoOnesInTable)
}

/// Replaces the tract layout with `tracts_per_puma` synthetic tracts per
/// PUMA, assigning households by a seeded random near-equal partition.
/// Tracts are labelled `<puma>-<k>`.
pub fn assign_synthetic_tracts(ds: &Dataset, tracts_per_puma: usize, seed: u64) -> Result<Dataset> {
    if tracts_per_puma == 0 {
        return Err(Error::config("tracts_per_puma", "must be at least 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut labels = Vec::new();
    let mut tract_puma = Vec::new();
    let mut household_tract = vec![TractId(0); ds.households().len()];
    for puma in ds.puma_ids() {
        let mut members: Vec<usize> = (0..ds.households().len())
            .filter(|&h| ds.households()[h].puma == puma)
            .collect();
        members.shuffle(&mut rng);
        let first = labels.len();
        for k in 0..tracts_per_puma {
            labels.push(format!("{}-{}", ds.puma_label(puma), k + 1));
            tract_puma.push(puma);
        }
        for (i, h) in members.into_iter().enumerate() {
            household_tract[h] = TractId((first + i % tracts_per_puma) as u32);
        }
    }
    Ok(ds.with_tract_layout(labels, tract_puma, household_tract))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::microdata::{AttributeSchema, DatasetBuilder, GeographyColumns, Variable};
    use crate::tabulate::cross_tab;

    fn two_singles() -> Dataset {
        let schema = AttributeSchema::new(
            GeographyColumns::default(),
            vec![Variable::integer_range("x", 0, 1)],
        )
        .unwrap();
        let mut b = DatasetBuilder::new(schema);
        b.push("p1", "h1", "P", "A", vec![0]).unwrap();
        b.push("p2", "h2", "P", "B", vec![1]).unwrap();
        b.build().unwrap()
    }

    #[test]
    fn rate_zero_is_identity() {
        let ds = two_singles();
        let out = swap(&ds, &SwapConfig::non_targeted(0.0, 3)).unwrap();
        assert_eq!(out.dataset, ds);
        assert!(out.swapped_household_pairs.is_empty());
        assert_eq!(out.achieved_rate, 0.0);
    }

    #[test]
    fn forced_pairing() {
        let ds = two_singles();
        let out = swap(&ds, &SwapConfig::non_targeted(1.0, 11)).unwrap();
        assert_eq!(out.swapped_household_pairs.len(), 1);
        assert_eq!(out.achieved_rate, 1.0);
        assert_eq!(out.unmatched_selected, 0);
        assert_eq!(out.dataset.tract_label(out.dataset.person_tract(0)), "B");
        assert_eq!(out.dataset.tract_label(out.dataset.person_tract(1)), "A");
    }

    #[test]
    fn matching_blocks_incompatible_pairs() {
        let ds = two_singles();
        let cfg = SwapConfig {
            matching_variables: vec!["x".into()],
            ..SwapConfig::non_targeted(1.0, 5)
        };
        let out = swap(&ds, &cfg).unwrap();
        assert!(out.swapped_household_pairs.is_empty());
        assert_eq!(out.unmatched_selected, 2);
    }

    #[test]
    fn invalid_rate() {
        let ds = two_singles();
        let err = swap(&ds, &SwapConfig::non_targeted(1.5, 0)).unwrap_err();
        assert!(matches!(err, Error::InvalidConfig { ref field, .. } if field == "swap.rate"));
        let cfg = SwapConfig {
            mode: SwapMode::Targeted,
            ..SwapConfig::non_targeted(0.5, 0)
        };
        assert!(matches!(swap(&ds, &cfg), Err(Error::InvalidConfig { .. })));
    }

    #[test]
    fn distinct_tracts_required() {
        let schema = AttributeSchema::new(
            GeographyColumns::default(),
            vec![Variable::integer_range("x", 0, 1)],
        )
        .unwrap();
        let mut b = DatasetBuilder::new(schema);
        b.push("p1", "h1", "P", "A", vec![0]).unwrap();
        b.push("p2", "h2", "P", "A", vec![1]).unwrap();
        let ds = b.build().unwrap();
        let cfg = SwapConfig {
            require_distinct_tracts: true,
            ..SwapConfig::non_targeted(1.0, 1)
        };
        let out = swap(&ds, &cfg).unwrap();
        assert!(out.swapped_household_pairs.is_empty());
        assert_eq!(out.unmatched_selected, 2);
    }

    #[test]
    fn candidates_edge_cases() {
        let schema = AttributeSchema::new(
            GeographyColumns::default(),
            vec![Variable::integer_range("x", 0, 1)],
        )
        .unwrap();
        let mut b = DatasetBuilder::new(schema);
        b.push("p1", "h1", "P", "A", vec![0]).unwrap();
        b.push("p2", "h2", "P", "B", vec![1]).unwrap();
        b.push("p3", "h3", "P", "B", vec![1]).unwrap();
        b.push("p4", "h3", "P", "B", vec![0]).unwrap();
        b.push("p5", "h4", "Q", "C", vec![0]).unwrap();
        let ds = b.build().unwrap();
        let none = HashSet::new();
        assert_eq!(
            compatible_candidates(&ds, "h1", &[], &none).unwrap(),
            vec![1]
        );
        assert!(compatible_candidates(&ds, "h3", &[], &none)
            .unwrap()
            .is_empty());
        assert!(compatible_candidates(&ds, "h1", &["x".into()], &none)
            .unwrap()
            .is_empty());
        assert!(compatible_candidates(&ds, "h1", &[], &HashSet::from([1]))
            .unwrap()
            .is_empty());
        assert!(matches!(
            compatible_candidates(&ds, "h9", &[], &none),
            Err(Error::UnknownHousehold(_))
        ));
    }

    #[test]
    fn ones_changed_basic() {
        let ds = two_singles();
        assert!(ones_changed_proportion(&ds, &ds, "A", "x", "x").is_err());
        let t = ContingencyTable::from_counts(&[vec![1, 0], vec![0, 3]]);
        assert_eq!(ones_changed_between(&t, &t), Some(0.0));
        let moved = ContingencyTable::from_counts(&[vec![0, 0], vec![0, 3]]);
        assert_eq!(ones_changed_between(&t, &moved), Some(1.0));
        assert_eq!(ones_changed_between(&moved, &t), None);
    }

    #[test]
    fn single_one_swapped_away() {
        let schema = AttributeSchema::new(
            GeographyColumns::default(),
            vec![
                Variable::integer_range("x", 0, 1),
                Variable::integer_range("y", 0, 1),
            ],
        )
        .unwrap();
        let mut b = DatasetBuilder::new(schema);
        b.push("p1", "h1", "P", "A", vec![0, 0]).unwrap();
        b.push("p2", "h2", "P", "B", vec![1, 1]).unwrap();
        let ds = b.build().unwrap();
        let out = swap(&ds, &SwapConfig::non_targeted(1.0, 2)).unwrap();
        assert_eq!(
            ones_changed_proportion(&ds, &out.dataset, "A", "x", "y").unwrap(),
            1.0
        );
        assert_eq!(
            cross_tab(&ds, "x", "y").unwrap(),
            cross_tab(&out.dataset, "x", "y").unwrap()
        );
    }

    #[test]
    fn synthetic_tracts_partition_each_puma() {
        let schema = AttributeSchema::new(
            GeographyColumns::default(),
            vec![Variable::integer_range("x", 0, 1)],
        )
        .unwrap();
        let mut b = DatasetBuilder::new(schema);
        for i in 0..30 {
            let puma = if i < 20 { "P" } else { "Q" };
            b.push(i.to_string(), &i.to_string(), puma, puma, vec![0])
                .unwrap();
        }
        let ds = b.build().unwrap();
        let syn = assign_synthetic_tracts(&ds, 4, 9).unwrap();
        assert_eq!(syn.tract_count(), 8);
        let sizes: Vec<usize> = syn
            .tract_ids()
            .map(|t| syn.subset_by_tract_id(t).len())
            .collect();
        assert_eq!(sizes.iter().sum::<usize>(), 30);
        assert_eq!(&sizes[..4], &[5, 5, 5, 5]);
        assert!(sizes[4..].iter().all(|&s| s == 2 || s == 3));
        for h in 0..syn.households().len() {
            assert_eq!(
                syn.tract_puma(syn.household_tract(h)),
                syn.households()[h].puma
            );
        }
    }
}
