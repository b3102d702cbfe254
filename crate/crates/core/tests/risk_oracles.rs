mod common;

use std::collections::HashMap;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use swapsim_core::risk::{
    find_at_risk_cells, log_frequency_score, quantile_extremity_score, risk_order, select_top_risk,
    AtRiskCell, RiskConfig,
};
use swapsim_core::synthgen::{generate_dummy, DummyConfig};
use swapsim_core::tabulate::{bin_variable, cross_tab};
use swapsim_core::{AttributeSchema, Dataset, DatasetBuilder, GeographyColumns, Variable};

fn married_male_fixture() -> Dataset {
    let schema = AttributeSchema::new(
        GeographyColumns::default(),
        vec![
            Variable::new("marital", vec!["married".into(), "single".into()], false),
            Variable::new("sex", vec!["male".into(), "female".into()], false),
        ],
    )
    .unwrap();
    let mut b = DatasetBuilder::new(schema);
    // 10 of 50 married, 25 of 50 male; person 0 is a married male
    for i in 0..50u16 {
        let marital = u16::from(i >= 10);
        let sex = u16::from(!(i < 5 || (10..30).contains(&i)));
        b.push(i.to_string(), &i.to_string(), "P", "T", vec![marital, sex])
            .unwrap();
    }
    b.build().unwrap()
}

#[test]
fn married_male_worked_example() {
    let ds = married_male_fixture();
    let scores = log_frequency_score(&ds, &RiskConfig::log_frequency(&["marital", "sex"])).unwrap();
    let expect = 0.2f64.ln() + 0.5f64.ln();
    assert!((scores[0] - expect).abs() < 1e-9);
    // 0.2 * 0.5 = 0.1
    assert!((scores[0] + std::f64::consts::LN_10).abs() < 1e-9);
}

/// Exhaustive tally: count matching records for every person and variable.
fn brute_force_scores(ds: &Dataset, vars: &[usize]) -> Vec<f64> {
    let n = ds.len() as f64;
    ds.persons()
        .iter()
        .map(|p| {
            vars.iter()
                .map(|&v| {
                    let same = ds
                        .persons()
                        .iter()
                        .filter(|q| q.values[v] == p.values[v])
                        .count();
                    (same as f64 / n).ln()
                })
                .sum()
        })
        .collect()
}

#[test]
fn two_variable_all_combinations_match_tally() {
    let schema = AttributeSchema::new(
        GeographyColumns::default(),
        vec![
            Variable::integer_range("x", 0, 1),
            Variable::integer_range("y", 0, 1),
        ],
    )
    .unwrap();
    let mut b = DatasetBuilder::new(schema);
    let combos = [(0, 0, 7), (0, 1, 3), (1, 0, 2), (1, 1, 11)];
    let mut id = 0;
    for (x, y, count) in combos {
        for _ in 0..count {
            b.push(id.to_string(), &id.to_string(), "P", "T", vec![x, y])
                .unwrap();
            id += 1;
        }
    }
    let ds = b.build().unwrap();
    let scores = log_frequency_score(&ds, &RiskConfig::log_frequency(&["x", "y"])).unwrap();
    let oracle = brute_force_scores(&ds, &[0, 1]);
    for (s, o) in scores.iter().zip(&oracle) {
        assert!((s - o).abs() < 1e-12);
    }
    let mut distinct: Vec<i64> = scores.iter().map(|s| (s * 1e9) as i64).collect();
    distinct.sort();
    distinct.dedup();
    assert_eq!(distinct.len(), 4);
}

#[test]
fn two_extreme_attributes_score_minus_two() {
    let schema = AttributeSchema::new(
        GeographyColumns::default(),
        vec![
            Variable::integer_range("income", 0, 19),
            Variable::integer_range("toilets", 0, 19),
            Variable::integer_range("rooms", 0, 19),
        ],
    )
    .unwrap();
    let mut b = DatasetBuilder::new(schema);
    for i in 0..20u16 {
        // person 19: top income, bottom toilets, middling rooms
        let values = vec![i, 19 - i, (i + 10) % 20];
        b.push(i.to_string(), &i.to_string(), "P", "T", values)
            .unwrap();
    }
    let ds = b.build().unwrap();
    let cfg = RiskConfig::quantile_extremity(&["income", "toilets", "rooms"], 0.1);
    let scores = quantile_extremity_score(&ds, &cfg).unwrap();
    assert_eq!(scores[19], -2.0);
    // person 10 sits mid-range on income and toilets, bottom on rooms
    assert_eq!(scores[10], -1.0);
    assert_eq!(scores[5], 0.0);
}

#[test]
fn top_risk_matches_sort_oracle() {
    let scores = [0.5, -3.0, 1.2, -0.7, -2.2, 0.0, 4.0];
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut picked = select_top_risk(&scores, 3, &mut rng).unwrap();
    picked.sort();
    let mut oracle: Vec<usize> = (0..scores.len()).collect();
    oracle.sort_by(|&a, &b| scores[a].partial_cmp(&scores[b]).unwrap());
    let mut oracle = oracle[..3].to_vec();
    oracle.sort();
    assert_eq!(picked, oracle);
}

#[test]
fn at_risk_cells_on_dummy_tract_match_scan() {
    let ds = generate_dummy(&DummyConfig::default()).unwrap();
    let ds = bin_variable(&ds, "income", &[40, 80, 120, 160, 200]).unwrap();
    let table = cross_tab(ds.subset_by_tract("T07").unwrap(), "age", "income").unwrap();
    let found = find_at_risk_cells(&table, &[1, 2]);
    let mut scan = Vec::new();
    for i in 0..table.rows() {
        for j in 0..table.cols() {
            let c = table.get(i, j);
            if c == 1 || c == 2 {
                scan.push(AtRiskCell {
                    row: i,
                    col: j,
                    count: c,
                });
            }
        }
    }
    assert!(!scan.is_empty());
    assert_eq!(found, scan);
}

proptest! {
    #[test]
    fn log_frequency_matches_tally(seed in any::<u64>()) {
        let ds = common::random_dataset(seed, 25);
        let scores = log_frequency_score(&ds, &RiskConfig::log_frequency(&["a", "c"])).unwrap();
        let oracle = brute_force_scores(&ds, &[0, 2]);
        for (s, o) in scores.iter().zip(&oracle) {
            prop_assert!((s - o).abs() < 1e-12);
            prop_assert!(*s <= 0.0);
        }
    }

    /// A person on a rarer level scores lower than one on a common level.
    #[test]
    fn rarer_level_lowers_score(common_count in 2usize..20, rare_count in 1usize..20) {
        prop_assume!(rare_count < common_count);
        let schema = AttributeSchema::new(
            GeographyColumns::default(),
            vec![Variable::integer_range("x", 0, 1), Variable::integer_range("y", 0, 1)],
        ).unwrap();
        let mut b = DatasetBuilder::new(schema);
        for i in 0..(common_count + rare_count) {
            let x = u16::from(i >= common_count);
            b.push(i.to_string(), &i.to_string(), "P", "T", vec![x, (i % 2) as u16]).unwrap();
        }
        let ds = b.build().unwrap();
        let s = log_frequency_score(&ds, &RiskConfig::log_frequency(&["x", "y"])).unwrap();
        // person 0 (common x) and the first rare person share y when parity matches
        let rare = (common_count..common_count + rare_count).find(|&i| i % 2 == 0);
        if let Some(r) = rare {
            prop_assert!(s[r] < s[0]);
        }
    }

    #[test]
    fn ranking_invariant_to_log_base(seed in any::<u64>(), base in 1.1f64..100.0, m in 0usize..10) {
        let ds = common::random_dataset(seed, 20);
        let natural = log_frequency_score(&ds, &RiskConfig::log_frequency(&["a", "b", "c"])).unwrap();
        let rebased: Vec<f64> = natural.iter().map(|s| s / base.ln()).collect();
        let m = m.min(ds.len());
        let a = select_top_risk(&natural, m, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        let b = select_top_risk(&rebased, m, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn selection_deterministic_and_nested(scores in prop::collection::vec(-50.0f64..0.0, 1..60), seed in any::<u64>(), m1 in 0usize..60, m2 in 0usize..60) {
        let (lo, hi) = (m1.min(m2).min(scores.len()), m1.max(m2).min(scores.len()));
        let first = select_top_risk(&scores, lo, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        let again = select_top_risk(&scores, lo, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        prop_assert_eq!(&first, &again);
        let wider = select_top_risk(&scores, hi, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        prop_assert_eq!(&wider[..lo], &first[..]);
        let order = risk_order(&scores, &mut ChaCha8Rng::seed_from_u64(seed));
        prop_assert!(order.windows(2).all(|w| scores[w[0]] <= scores[w[1]]));
    }
}

#[test]
fn at_risk_counts_are_map_consistent() {
    let ds = common::random_dataset(3, 40);
    let t = cross_tab(&ds, "a", "b").unwrap();
    let cells = find_at_risk_cells(&t, &[1]);
    let mut tally: HashMap<(u16, u16), u64> = HashMap::new();
    for p in ds.persons() {
        *tally.entry((p.values[0], p.values[1])).or_default() += 1;
    }
    let mut ones: Vec<(usize, usize)> = tally
        .iter()
        .filter(|(_, &c)| c == 1)
        .map(|(&(a, b), _)| (a as usize, b as usize))
        .collect();
    ones.sort();
    assert_eq!(
        cells.iter().map(|c| (c.row, c.col)).collect::<Vec<_>>(),
        ones
    );
}
