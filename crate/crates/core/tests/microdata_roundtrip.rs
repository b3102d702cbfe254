mod common;

use proptest::prelude::*;
use swapsim_core::microdata::load_csv_from_reader;
use swapsim_core::{AttributeSchema, Error};

proptest! {
    #[test]
    fn csv_round_trip(seed in any::<u64>()) {
        let ds = common::random_dataset(seed, 25);
        let mut buf = Vec::new();
        ds.write_csv(&mut buf).unwrap();
        let back = load_csv_from_reader(buf.as_slice(), ds.schema().clone()).unwrap();
        prop_assert_eq!(back.len(), ds.len());
        for (a, b) in ds.persons().iter().zip(back.persons()) {
            prop_assert_eq!(a, b);
        }
        prop_assert_eq!(back.household_tracts(), ds.household_tracts());
        let mut again = Vec::new();
        back.write_csv(&mut again).unwrap();
        prop_assert_eq!(buf, again);
    }

    #[test]
    fn schema_toml_round_trip(seed in any::<u64>()) {
        let ds = common::random_dataset(seed, 5);
        let text = ds.schema().to_toml_string();
        let back = AttributeSchema::from_toml_str(&text).unwrap();
        prop_assert_eq!(&back, ds.schema());
    }
}

#[test]
fn unknown_level_names_row_and_column() {
    let ds = common::random_dataset(1, 5);
    let csv = "person,household,puma,tract,a,b,c\n1,h1,P0,P0T0,0,0,0\n2,h2,P0,P0T0,0,9,0\n";
    match load_csv_from_reader(csv.as_bytes(), ds.schema().clone()) {
        Err(Error::UnknownLevel { row, column, label }) => {
            assert_eq!(row, 2);
            assert_eq!(column, "b");
            assert_eq!(label, "9");
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn household_split_across_tracts_is_rejected() {
    let ds = common::random_dataset(1, 5);
    let csv = "person,household,puma,tract,a,b,c\n1,h1,P0,P0T0,0,0,0\n2,h1,P0,P0T1,0,1,0\n";
    assert!(matches!(
        load_csv_from_reader(csv.as_bytes(), ds.schema().clone()),
        Err(Error::HouseholdSpansTracts { .. })
    ));
}

#[test]
fn files_round_trip_through_disk() {
    let dir = tempfile::tempdir().unwrap();
    let ds = swapsim_core::generate_dummy(&swapsim_core::DummyConfig {
        n_tracts: 3,
        persons_per_tract: 40,
        ..Default::default()
    })
    .unwrap();
    let csv = dir.path().join("data.csv");
    let schema = dir.path().join("schema.toml");
    ds.save_csv(&csv).unwrap();
    ds.schema().save(&schema).unwrap();
    let back = swapsim_core::load_csv(&csv, AttributeSchema::load(&schema).unwrap()).unwrap();
    assert_eq!(back.persons(), ds.persons());
    assert_eq!(back.tract_count(), 3);
    assert!(matches!(
        swapsim_core::load_csv(dir.path().join("missing.csv"), back.schema().clone()),
        Err(Error::Io { .. })
    ));
}
