#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use swapsim_core::{AttributeSchema, Dataset, DatasetBuilder, GeographyColumns, Variable};

pub const VARS: [&str; 3] = ["a", "b", "c"];

/// Small random dataset: up to `max_households` households of 1-3 persons
/// spread over 1-2 PUMAs with 1-3 tracts each, three variables with 2-4
/// levels (all ordered).
pub fn random_dataset(seed: u64, max_households: usize) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let levels: Vec<usize> = (0..3).map(|_| rng.random_range(2..=4)).collect();
    let schema = AttributeSchema::new(
        GeographyColumns::default(),
        VARS.iter()
            .zip(&levels)
            .map(|(name, &k)| Variable::integer_range(*name, 0, k as i64 - 1))
            .collect(),
    )
    .unwrap();
    let pumas = rng.random_range(1..=2);
    let tracts: Vec<usize> = (0..pumas).map(|_| rng.random_range(1..=3)).collect();
    let households = rng.random_range(2..=max_households);
    let mut b = DatasetBuilder::new(schema);
    let mut person = 0;
    for h in 0..households {
        let puma = rng.random_range(0..pumas);
        let tract = rng.random_range(0..tracts[puma]);
        let size = rng.random_range(1..=3);
        for _ in 0..size {
            let values = levels
                .iter()
                .map(|&k| rng.random_range(0..k) as u16)
                .collect();
            b.push(
                person.to_string(),
                &format!("h{h}"),
                &format!("P{puma}"),
                &format!("P{puma}T{tract}"),
                values,
            )
            .unwrap();
            person += 1;
        }
    }
    b.build().unwrap()
}
