//! Household data swapping on categorical microdata and a replicated
//! simulation harness that tracks Cramér's V across swap rates.
//!
//! Modules, bottom-up:
//! - [`microdata`]: schema, person and household records, CSV ingestion.
//! - [`tabulate`]: contingency tables, chi-square, Cramér's V, binning.
//! - [`risk`]: disclosure-risk scores and at-risk cells.
//! - [`swap`]: non-targeted and targeted household swaps.
//! - [`synthgen`]: dummy data with tract-dependent Age–Income slopes.
//! - [`simulate`]: swap-rate sweeps with per-tract aggregates.
//!
//! ```no_run
//! use swapsim_core::simulate::{convergence_summary, run_sweep, SweepConfig};
//! use swapsim_core::{generate_dummy, DummyConfig, SwapConfig, TableSpec};
//!
//! # fn main() -> swapsim_core::Result<()> {
//! let ds = generate_dummy(&DummyConfig::default())?;
//! let cfg = SweepConfig {
//!     rates: SweepConfig::rate_grid(0.0, 0.2, 0.01),
//!     replications: 150,
//!     base_swap: SwapConfig { require_distinct_tracts: true, ..SwapConfig::non_targeted(0.0, 0) },
//!     tables: vec![TableSpec::new("poor", "young")],
//!     tracts: vec![],
//!     master_seed: 2016,
//!     workers: 0,
//! };
//! let result = run_sweep(&ds, &cfg)?;
//! println!("{:.0}% of tracts converged", convergence_summary(&result, 0)?.shrink_fraction * 100.0);
//! # Ok(())
//! # }
//! ```

pub mod error;
pub mod microdata;
pub mod risk;
pub mod simulate;
pub mod swap;
pub mod synthgen;
pub mod tabulate;

pub use error::{Error, Result};
pub use microdata::{
    load_csv, load_csv_from_reader, AttributeSchema, Dataset, DatasetBuilder, DatasetView,
    GeographyColumns, Household, Level, PersonRecord, PumaId, TractId, Variable,
};
pub use risk::{RiskConfig, Scorer};
pub use simulate::{run_sweep, SweepConfig, SweepResult};
pub use swap::{swap, SwapConfig, SwapMode, SwapOutcome};
pub use synthgen::{generate_dummy, DummyConfig};
pub use tabulate::{cramers_v, cross_tab, ContingencyTable, TableSpec};
