mod common;

use std::collections::HashSet;

use proptest::prelude::*;
use swapsim_core::risk::RiskConfig;
use swapsim_core::swap::{
    compatible_candidates, ones_changed_between, selection_count, swap, SwapConfig,
};
use swapsim_core::tabulate::{cross_tab, ContingencyTable};
use swapsim_core::Dataset;

fn config(seed: u64, rate: f64, matching: &[&str], distinct: bool, targeted: bool) -> SwapConfig {
    let mut cfg = if targeted {
        SwapConfig::targeted(rate, RiskConfig::log_frequency(&["a", "b"]), seed)
    } else {
        SwapConfig::non_targeted(rate, seed)
    };
    cfg.matching_variables = matching.iter().map(|s| s.to_string()).collect();
    cfg.require_distinct_tracts = distinct;
    cfg
}

/// Sorted rows of (person id, values).
fn attribute_rows(ds: &Dataset) -> Vec<(String, Vec<u16>)> {
    let mut rows: Vec<_> = ds
        .persons()
        .iter()
        .map(|p| (p.id.clone(), p.values.clone()))
        .collect();
    rows.sort();
    rows
}

fn household_multiset(ds: &Dataset, h: usize, vars: &[usize]) -> Vec<Vec<u16>> {
    let mut m: Vec<Vec<u16>> = ds.households()[h]
        .members
        .iter()
        .map(|&p| vars.iter().map(|&v| ds.persons()[p].values[v]).collect())
        .collect();
    m.sort();
    m
}

fn swap_strategy() -> impl Strategy<Value = (u64, u64, f64, usize, bool, bool)> {
    (
        any::<u64>(),
        any::<u64>(),
        0.0f64..=1.0,
        0usize..4,
        any::<bool>(),
        any::<bool>(),
    )
}

fn matching_for(k: usize) -> Vec<&'static str> {
    common::VARS[..k].to_vec()
}

proptest! {
    #[test]
    fn attributes_untouched((data_seed, seed, rate, k, distinct, targeted) in swap_strategy()) {
        let ds = common::random_dataset(data_seed, 30);
        let out = swap(&ds, &config(seed, rate, &matching_for(k), distinct, targeted)).unwrap();
        prop_assert_eq!(attribute_rows(&ds), attribute_rows(&out.dataset));
        // household membership is unchanged too
        for (a, b) in ds.households().iter().zip(out.dataset.households()) {
            prop_assert_eq!(&a.members, &b.members);
        }
    }

    #[test]
    fn puma_tables_invariant((data_seed, seed, rate, k, distinct, targeted) in swap_strategy()) {
        let ds = common::random_dataset(data_seed, 30);
        let out = swap(&ds, &config(seed, rate, &matching_for(k), distinct, targeted)).unwrap();
        for puma in ds.puma_ids() {
            for (r, c) in [("a", "b"), ("a", "c"), ("b", "c")] {
                let before = cross_tab(ds.subset_by_puma_id(puma), r, c).unwrap();
                let after = cross_tab(out.dataset.subset_by_puma_id(puma), r, c).unwrap();
                prop_assert_eq!(before.counts(), after.counts());
            }
        }
    }

    #[test]
    fn tract_tables_on_matching_variables_invariant((data_seed, seed, rate, _k, distinct, targeted) in swap_strategy()) {
        let ds = common::random_dataset(data_seed, 30);
        let out = swap(&ds, &config(seed, rate, &["a", "b"], distinct, targeted)).unwrap();
        for t in ds.tract_ids() {
            let before = cross_tab(ds.subset_by_tract_id(t), "a", "b").unwrap();
            let after = cross_tab(out.dataset.subset_by_tract_id(t), "a", "b").unwrap();
            prop_assert_eq!(before.counts(), after.counts());
        }
    }

    #[test]
    fn pairs_are_symmetric_disjoint_and_compatible((data_seed, seed, rate, k, distinct, targeted) in swap_strategy()) {
        let ds = common::random_dataset(data_seed, 30);
        let out = swap(&ds, &config(seed, rate, &matching_for(k), distinct, targeted)).unwrap();
        let vars: Vec<usize> = (0..k).collect();
        let mut seen = HashSet::new();
        for &(a, b) in &out.swapped_household_pairs {
            prop_assert!(a != b);
            prop_assert!(seen.insert(a) && seen.insert(b));
            prop_assert_eq!(out.dataset.household_tract(a), ds.household_tract(b));
            prop_assert_eq!(out.dataset.household_tract(b), ds.household_tract(a));
            prop_assert_eq!(ds.households()[a].puma, ds.households()[b].puma);
            prop_assert_eq!(ds.households()[a].size(), ds.households()[b].size());
            prop_assert_eq!(household_multiset(&ds, a, &vars), household_multiset(&ds, b, &vars));
            if distinct {
                prop_assert_ne!(ds.household_tract(a), ds.household_tract(b));
            }
        }
        for h in 0..ds.households().len() {
            if !seen.contains(&h) {
                prop_assert_eq!(out.dataset.household_tract(h), ds.household_tract(h));
            }
        }
        let moved: usize = seen.iter().map(|&h| ds.households()[h].size()).sum();
        prop_assert!((out.achieved_rate - moved as f64 / ds.len() as f64).abs() < 1e-12);
        prop_assert_eq!(out.selected, selection_count(ds.len(), rate));
    }

    #[test]
    fn rate_zero_is_identity(data_seed in any::<u64>(), seed in any::<u64>(), targeted in any::<bool>()) {
        let ds = common::random_dataset(data_seed, 30);
        let out = swap(&ds, &config(seed, 0.0, &["a"], false, targeted)).unwrap();
        prop_assert!(out.swapped_household_pairs.is_empty());
        prop_assert_eq!(out.dataset.household_tracts(), ds.household_tracts());
        prop_assert_eq!(out.achieved_rate, 0.0);
    }

    #[test]
    fn same_seed_same_outcome((data_seed, seed, rate, k, distinct, targeted) in swap_strategy()) {
        let ds = common::random_dataset(data_seed, 30);
        let cfg = config(seed, rate, &matching_for(k), distinct, targeted);
        let a = swap(&ds, &cfg).unwrap();
        let b = swap(&ds, &cfg).unwrap();
        prop_assert_eq!(a.swapped_household_pairs, b.swapped_household_pairs);
        prop_assert_eq!(a.dataset.household_tracts(), b.dataset.household_tracts());
    }

    #[test]
    fn candidates_match_exhaustive_scan(data_seed in any::<u64>(), k in 0usize..4, swapped_mask in any::<u64>()) {
        let ds = common::random_dataset(data_seed, 30);
        let matching: Vec<String> = matching_for(k).iter().map(|s| s.to_string()).collect();
        let vars: Vec<usize> = (0..k).collect();
        let swapped: HashSet<usize> = (0..ds.households().len()).filter(|h| swapped_mask >> (h % 64) & 1 == 1).collect();
        for h in 0..ds.households().len() {
            let got = compatible_candidates(&ds, &ds.households()[h].id, &matching, &swapped).unwrap();
            let target = household_multiset(&ds, h, &vars);
            let oracle: Vec<usize> = (0..ds.households().len())
                .filter(|&c| c != h && !swapped.contains(&c))
                .filter(|&c| ds.households()[c].puma == ds.households()[h].puma)
                .filter(|&c| ds.households()[c].size() == ds.households()[h].size())
                .filter(|&c| household_multiset(&ds, c, &vars) == target)
                .collect();
            prop_assert_eq!(got, oracle);
        }
    }

    #[test]
    fn ones_changed_matches_diff(before in prop::collection::vec(0u64..4, 12), after in prop::collection::vec(0u64..4, 12)) {
        let rows = |v: &[u64]| v.chunks(4).map(|c| c.to_vec()).collect::<Vec<_>>();
        let b = ContingencyTable::from_counts(&rows(&before));
        let a = ContingencyTable::from_counts(&rows(&after));
        let ones: Vec<usize> = (0..12).filter(|&i| before[i] == 1).collect();
        let expect = (!ones.is_empty()).then(|| {
            ones.iter().filter(|&&i| after[i] != 1).count() as f64 / ones.len() as f64
        });
        prop_assert_eq!(ones_changed_between(&b, &a), expect);
    }
}

#[test]
fn single_targeted_selection_is_the_riskiest_person() {
    for data_seed in 0..50 {
        let ds = common::random_dataset(data_seed, 40);
        let risk = RiskConfig::log_frequency(&["a", "b", "c"]);
        let scores = swapsim_core::risk::score(&ds, &risk).unwrap();
        let min = scores.iter().cloned().fold(f64::INFINITY, f64::min);
        let riskiest: Vec<usize> = (0..ds.len()).filter(|&p| scores[p] == min).collect();
        if riskiest.len() != 1 {
            continue;
        }
        let out = swap(
            &ds,
            &SwapConfig::targeted(1.0 / ds.len() as f64, risk, data_seed),
        )
        .unwrap();
        assert_eq!(out.selected, 1);
        let h = ds.persons()[riskiest[0]].household;
        let partners =
            compatible_candidates(&ds, &ds.households()[h].id, &[], &HashSet::new()).unwrap();
        match out.swapped_household_pairs.as_slice() {
            [(a, b)] => {
                assert_eq!(*a, h);
                assert!(partners.contains(b));
            }
            [] => assert!(partners.is_empty()),
            more => panic!("one selection produced {} pairs", more.len()),
        }
    }
}

#[test]
fn unswappable_household_reported_unmatched() {
    // every household is unique in its PUMA by size, so nothing can match
    use swapsim_core::{AttributeSchema, DatasetBuilder, GeographyColumns, Variable};
    let schema = AttributeSchema::new(
        GeographyColumns::default(),
        vec![Variable::integer_range("x", 0, 1)],
    )
    .unwrap();
    let mut b = DatasetBuilder::new(schema);
    let mut id = 0;
    for (h, size) in [(0, 1), (1, 2), (2, 3)] {
        for _ in 0..size {
            b.push(
                id.to_string(),
                &format!("h{h}"),
                "P",
                &format!("T{h}"),
                vec![0],
            )
            .unwrap();
            id += 1;
        }
    }
    let ds = b.build().unwrap();
    let out = swap(&ds, &SwapConfig::non_targeted(1.0, 1)).unwrap();
    assert!(out.swapped_household_pairs.is_empty());
    assert_eq!(out.unmatched_selected, 6);
}
