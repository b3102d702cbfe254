//! Dummy microdata with a tract-dependent Age–Income relationship.
//!
//! Every tract `t` draws a slope `b_t`; each resident gets an age and an
//! income `round(b_t * age) + eps` with Poisson noise. Binary `poor` and
//! `young` flags are derived from dataset-wide empirical quantiles, so the
//! Poor × Young association differs from tract to tract.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson, Uniform};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::microdata::{
    AttributeSchema, Dataset, DatasetBuilder, GeographyColumns, Level, Variable,
};
use crate::tabulate::{cramers_v, TableSpec, Tabulator};

pub const AGE: &str = "age";
pub const INCOME: &str = "income";
pub const POOR: &str = "poor";
pub const YOUNG: &str = "young";

/// Parameters of the dummy generator. The default slope bounds and noise
/// mean come from a grid search (see `examples/calibrate.rs`): with them a
/// little over half of the tracts show a weaker Poor × Young association
/// than the pooled table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DummyConfig {
    pub n_tracts: usize,
    pub persons_per_tract: usize,
    /// Bounds of the uniform slope draw per tract.
    pub slope_low: f64,
    pub slope_high: f64,
    /// Inclusive bounds of the uniform integer age draw.
    pub age_min: i64,
    pub age_max: i64,
    /// Mean of the Poisson income noise.
    pub noise_mean: f64,
    /// Target share flagged poor.
    pub poor_quantile: f64,
    /// Target share flagged young.
    pub young_quantile: f64,
    pub seed: u64,
}

impl Default for DummyConfig {
    fn default() -> Self {
        Self {
            n_tracts: 50,
            persons_per_tract: 200,
            slope_low: 2.0,
            slope_high: 3.0,
            age_min: 18,
            age_max: 90,
            noise_mean: 1.0,
            poor_quantile: 0.235,
            young_quantile: 0.327,
            seed: 2016,
        }
    }
}

impl DummyConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_tracts < 1 {
            return Err(Error::config("generate.n_tracts", "must be at least 1"));
        }
        if self.persons_per_tract < 1 {
            return Err(Error::config(
                "generate.persons_per_tract",
                "must be at least 1",
            ));
        }
        if self.slope_low >= self.slope_high
            || !self.slope_low.is_finite()
            || !self.slope_high.is_finite()
        {
            return Err(Error::config(
                "generate.slope_low",
                format!(
                    "slope bounds must be finite with low < high, got ({}, {})",
                    self.slope_low, self.slope_high
                ),
            ));
        }
        if self.age_min >= self.age_max {
            return Err(Error::config("generate.age_min", "must be below age_max"));
        }
        if !(self.noise_mean > 0.0 && self.noise_mean.is_finite()) {
            return Err(Error::config("generate.noise_mean", "must be positive"));
        }
        for (field, q) in [
            ("generate.poor_quantile", self.poor_quantile),
            ("generate.young_quantile", self.young_quantile),
        ] {
            if !(q > 0.0 && q < 1.0) {
                return Err(Error::config(field, format!("must lie in (0, 1), got {q}")));
            }
        }
        Ok(())
    }
}

/// Cut `c` such that the share of values strictly below `c` is as close as
/// possible to `q`; ties go to the smaller cut.
pub fn quantile_cut(values: &[i64], q: f64) -> i64 {
    let mut sorted = values.to_vec();
    sorted.sort_unstable();
    let n = sorted.len() as f64;
    let mut best = sorted[0];
    let mut best_gap = q;
    let mut i = 0;
    while i < sorted.len() {
        let v = sorted[i];
        while i < sorted.len() && sorted[i] == v {
            i += 1;
        }
        // cut just above v: share below is i / n
        let cut = v + 1;
        let gap = (i as f64 / n - q).abs();
        if gap < best_gap {
            best_gap = gap;
            best = cut;
        }
    }
    best
}

pub fn generate_dummy(cfg: &DummyConfig) -> Result<Dataset> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let slope = Uniform::new(cfg.slope_low, cfg.slope_high)
        .map_err(|e| Error::config("generate.slope_low", e.to_string()))?;
    let noise = Poisson::new(cfg.noise_mean)
        .map_err(|e| Error::config("generate.noise_mean", e.to_string()))?;

    let n = cfg.n_tracts * cfg.persons_per_tract;
    let mut ages = Vec::with_capacity(n);
    let mut incomes = Vec::with_capacity(n);
    for _ in 0..cfg.n_tracts {
        let b: f64 = slope.sample(&mut rng);
        for _ in 0..cfg.persons_per_tract {
            let age = rng.random_range(cfg.age_min..=cfg.age_max);
            let eps = noise.sample(&mut rng) as i64;
            ages.push(age);
            incomes.push((b * age as f64).round() as i64 + eps);
        }
    }

    let poor_cut = quantile_cut(&incomes, cfg.poor_quantile);
    let young_cut = quantile_cut(&ages, cfg.young_quantile);
    let income_min = *incomes.iter().min().expect("n >= 1");
    let income_max = (*incomes.iter().max().expect("n >= 1")).max(income_min + 1);

    let flag = || vec!["no".to_string(), "yes".to_string()];
    let schema = AttributeSchema::new(
        GeographyColumns::default(),
        vec![
            Variable::integer_range(AGE, cfg.age_min, cfg.age_max),
            Variable::integer_range(INCOME, income_min, income_max),
            Variable::new(POOR, flag(), true),
            Variable::new(YOUNG, flag(), true),
        ],
    )?;

    let tract_width = cfg.n_tracts.to_string().len().max(2);
    let person_width = n.to_string().len();
    let mut builder = DatasetBuilder::new(schema);
    for (i, (&age, &income)) in ages.iter().zip(&incomes).enumerate() {
        let tract = format!("T{:0w$}", i / cfg.persons_per_tract + 1, w = tract_width);
        let id = format!("{:0w$}", i + 1, w = person_width);
        let values: Vec<Level> = vec![
            (age - cfg.age_min) as Level,
            (income - income_min) as Level,
            (income < poor_cut) as Level,
            (age < young_cut) as Level,
        ];
        builder.push(id.clone(), &id, "P1", &tract, values)?;
    }
    builder.build()
}

/// Fraction of tracts whose Poor × Young Cramér's V lies strictly below the
/// V of the table pooled over all tracts. Tracts with undefined V do not
/// count as below.
pub fn combined_vs_tract_v_share(ds: &Dataset) -> Result<f64> {
    let tab = Tabulator::new(ds.schema(), &TableSpec::new(POOR, YOUNG))?;
    let combined = cramers_v(&tab.tabulate(ds)).v;
    let Some(combined) = combined else {
        return Ok(0.0);
    };
    let tables = tab.tabulate_by_tract(ds);
    let below = tables
        .iter()
        .filter(|t| cramers_v(t).v.is_some_and(|v| v < combined))
        .count();
    Ok(below as f64 / tables.len() as f64)
}

pub const SEX: &str = "sex";
pub const MARITAL: &str = "marital";
pub const RACE: &str = "race";

const MARITAL_LEVELS: [&str; 5] = [
    "married",
    "widowed",
    "divorced",
    "separated",
    "never_married",
];
const RACE_LEVELS: [&str; 5] = ["white", "black", "asian", "other", "multiple"];
const RACE_WEIGHTS: [f64; 5] = [0.75, 0.13, 0.04, 0.05, 0.03];
const HOUSEHOLD_SIZE_WEIGHTS: [f64; 5] = [0.28, 0.34, 0.16, 0.13, 0.09];
/// Oldest single-year age; the top level stands for this age and above.
const AGE_TOP: i64 = 94;

/// Parameters of a public-use-style person file with artificial tracts:
/// households of one to five persons with age, sex, marital status and
/// race, spread over `tracts_per_puma` random tracts in each PUMA.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PumsLikeConfig {
    pub pumas: usize,
    pub households_per_puma: usize,
    pub tracts_per_puma: usize,
    pub seed: u64,
}

impl Default for PumsLikeConfig {
    fn default() -> Self {
        Self {
            pumas: 2,
            households_per_puma: 1500,
            tracts_per_puma: 10,
            seed: 2011,
        }
    }
}

fn marital_weights(age: i64) -> [f64; 5] {
    match age {
        ..=17 => [0.0, 0.0, 0.0, 0.0, 1.0],
        18..=24 => [0.10, 0.002, 0.01, 0.01, 0.878],
        25..=39 => [0.50, 0.005, 0.08, 0.03, 0.385],
        40..=64 => [0.60, 0.04, 0.17, 0.03, 0.16],
        _ => [0.50, 0.30, 0.12, 0.01, 0.07],
    }
}

fn weighted<R: Rng>(rng: &mut R, weights: &[f64]) -> usize {
    let total: f64 = weights.iter().sum();
    let mut x = rng.random::<f64>() * total;
    for (i, w) in weights.iter().enumerate() {
        if x < *w {
            return i;
        }
        x -= w;
    }
    weights.len() - 1
}

/// Generates a PUMS-like dataset and assigns synthetic tracts with
/// [`crate::swap::assign_synthetic_tracts`].
pub fn generate_pums_like(cfg: &PumsLikeConfig) -> Result<Dataset> {
    if cfg.pumas < 1 || cfg.households_per_puma < 1 || cfg.tracts_per_puma < 1 {
        return Err(Error::config("pums_like", "counts must be at least 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let labels = |l: &[&str]| l.iter().map(|s| s.to_string()).collect::<Vec<_>>();
    let schema = AttributeSchema::new(
        GeographyColumns::default(),
        vec![
            Variable::integer_range(AGE, 0, AGE_TOP),
            Variable::new(SEX, labels(&["male", "female"]), false),
            Variable::new(MARITAL, labels(&MARITAL_LEVELS), false),
            Variable::new(RACE, labels(&RACE_LEVELS), false),
        ],
    )?;
    let mut builder = DatasetBuilder::new(schema);
    let adult_age = |rng: &mut ChaCha8Rng| -> i64 {
        // heavier in working ages with a long upper tail
        let a = 18.0 + 77.0 * rng.random::<f64>().powf(1.3);
        (a as i64).min(AGE_TOP)
    };
    let mut person = 0usize;
    for puma in 0..cfg.pumas {
        let puma_label = format!("P{}", puma + 1);
        for h in 0..cfg.households_per_puma {
            let household = format!("{}-h{}", puma_label, h + 1);
            let size = weighted(&mut rng, &HOUSEHOLD_SIZE_WEIGHTS) + 1;
            let race = weighted(&mut rng, &RACE_WEIGHTS) as Level;
            let head_age = adult_age(&mut rng);
            let head_sex = rng.random_range(0..2u16);
            let head_marital = weighted(&mut rng, &marital_weights(head_age));
            let mut members = vec![(head_age, head_sex, head_marital)];
            if size >= 2 && head_marital == 0 {
                let spouse_age = (head_age + rng.random_range(-6..=6)).clamp(18, AGE_TOP);
                members.push((spouse_age, 1 - head_sex, 0));
            }
            while members.len() < size {
                let child = head_age >= 20 && rng.random::<f64>() < 0.75;
                let age = if child {
                    rng.random_range(0..=(head_age - 18).min(30)).min(AGE_TOP)
                } else {
                    adult_age(&mut rng)
                };
                let sex = rng.random_range(0..2u16);
                members.push((age, sex, weighted(&mut rng, &marital_weights(age))));
            }
            for (age, sex, marital) in members {
                person += 1;
                builder.push(
                    person.to_string(),
                    &household,
                    &puma_label,
                    &puma_label,
                    vec![age as Level, sex, marital as Level, race],
                )?;
            }
        }
    }
    let ds = builder.build()?;
    crate::swap::assign_synthetic_tracts(&ds, cfg.tracts_per_puma, cfg.seed ^ 0x0074_7261_6374)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> DummyConfig {
        DummyConfig {
            n_tracts: 5,
            persons_per_tract: 40,
            ..DummyConfig::default()
        }
    }

    #[test]
    fn quantile_cut_picks_closest_share() {
        let v: Vec<i64> = (0..100).collect();
        assert_eq!(quantile_cut(&v, 0.233), 23);
        assert_eq!(quantile_cut(&v, 0.238), 24);
        let tied = [1, 1, 1, 2, 3, 3, 3, 3, 3, 3];
        assert_eq!(quantile_cut(&tied, 0.3), 2);
        assert_eq!(quantile_cut(&tied, 0.4), 3);
    }

    #[test]
    fn shape_and_single_person_households() {
        let ds = generate_dummy(&small()).unwrap();
        assert_eq!(ds.len(), 200);
        assert_eq!(ds.tract_count(), 5);
        assert_eq!(ds.puma_count(), 1);
        assert!(ds.households().iter().all(|h| h.size() == 1));
    }

    #[test]
    fn deterministic_in_seed() {
        let a = generate_dummy(&small()).unwrap();
        let b = generate_dummy(&small()).unwrap();
        assert_eq!(a, b);
        let c = generate_dummy(&DummyConfig {
            seed: 99,
            ..small()
        })
        .unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn invalid_configs() {
        for cfg in [
            DummyConfig {
                n_tracts: 0,
                ..small()
            },
            DummyConfig {
                persons_per_tract: 0,
                ..small()
            },
            DummyConfig {
                slope_low: 2.0,
                slope_high: 1.0,
                ..small()
            },
            DummyConfig {
                noise_mean: 0.0,
                ..small()
            },
            DummyConfig {
                poor_quantile: 1.0,
                ..small()
            },
            DummyConfig {
                young_quantile: 0.0,
                ..small()
            },
        ] {
            assert!(matches!(
                generate_dummy(&cfg),
                Err(Error::InvalidConfig { .. })
            ));
        }
    }

    #[test]
    fn derived_flags_follow_thresholds() {
        let ds = generate_dummy(&small()).unwrap();
        let s = ds.schema();
        let (age, income, poor, young) = (
            s.variable_index(AGE).unwrap(),
            s.variable_index(INCOME).unwrap(),
            s.variable_index(POOR).unwrap(),
            s.variable_index(YOUNG).unwrap(),
        );
        // flags must be monotone in the underlying value
        let max_poor = ds
            .persons()
            .iter()
            .filter(|p| p.values[poor] == 1)
            .map(|p| p.values[income])
            .max();
        let min_rich = ds
            .persons()
            .iter()
            .filter(|p| p.values[poor] == 0)
            .map(|p| p.values[income])
            .min();
        assert!(max_poor < min_rich);
        let max_young = ds
            .persons()
            .iter()
            .filter(|p| p.values[young] == 1)
            .map(|p| p.values[age])
            .max();
        let min_old = ds
            .persons()
            .iter()
            .filter(|p| p.values[young] == 0)
            .map(|p| p.values[age])
            .min();
        assert!(max_young < min_old);
    }

    #[test]
    fn identical_tracts_share_is_zero() {
        let one = generate_dummy(&DummyConfig {
            n_tracts: 1,
            ..small()
        })
        .unwrap();
        assert_eq!(combined_vs_tract_v_share(&one).unwrap(), 0.0);

        // replicate the single tract three times
        let mut b = DatasetBuilder::new(one.schema().clone());
        for copy in 0..3 {
            for p in one.persons() {
                let id = format!("{copy}-{}", p.id);
                b.push(id.clone(), &id, "P1", &format!("T{copy}"), p.values.clone())
                    .unwrap();
            }
        }
        let copies = b.build().unwrap();
        assert_eq!(combined_vs_tract_v_share(&copies).unwrap(), 0.0);
    }
}
