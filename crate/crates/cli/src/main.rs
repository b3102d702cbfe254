//! `swapsim`: run household swapping experiments from a TOML config.
//!
//! Exit codes: 0 success, 2 usage, 3 configuration, 4 data or I/O.

mod config;

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use serde::Serialize;
use swapsim_core::risk::{rank_scores, score, write_scores_csv};
use swapsim_core::simulate::{
    convergence_summary, raw_replication_log, SweepMetadata, SweepReport,
};
use swapsim_core::tabulate::{cramers_v, AssociationResult, Tabulator};
use swapsim_core::{generate_dummy, load_csv, swap, AttributeSchema, Dataset, Error};

use config::{Override, RunConfig};

/// `println!` that ignores a closed stdout, e.g. when piped into `head`.
macro_rules! say {
    ($($arg:tt)*) => {{
        use std::io::Write;
        let _ = writeln!(std::io::stdout(), $($arg)*);
    }};
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("{0}")]
    Data(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 3,
            CliError::Data(_) => 4,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidConfig { field, reason } => {
                CliError::Config(format!("{field}: {reason}"))
            }
            // raised when the config names something the data lacks
            Error::MissingVariable(_)
            | Error::SameVariable(_)
            | Error::UnorderedVariable(_)
            | Error::InvalidBoundaries { .. }
            | Error::UnknownTract(_)
            | Error::UnknownPuma(_) => CliError::Config(e.to_string()),
            other => CliError::Data(other.to_string()),
        }
    }
}

#[derive(Parser, Debug)]
#[command(
    name = "swapsim",
    version,
    about = "Household data swapping experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Common {
    /// TOML config file.
    #[arg(long, short)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, short, env = "SWAPSIM_OUT", default_value = "swapsim-out")]
    out: PathBuf,
    /// Override a config value, e.g. `--set swap.rate=0.05`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<Override>,
    /// Seed of this command's randomness.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate dummy microdata (data.csv + schema.toml).
    Generate {
        #[command(flatten)]
        common: Common,
    },
    /// Score every person by disclosure risk.
    Score {
        #[command(flatten)]
        common: Common,
    },
    /// Swap once and write the swapped data with an audit of pairs.
    Swap {
        #[command(flatten)]
        common: Common,
        /// Swap rate in [0, 1].
        #[arg(long)]
        rate: Option<f64>,
    },
    /// Cross-tabulate two variables and report Cramér's V.
    Tabulate {
        #[command(flatten)]
        common: Common,
    },
    /// Run a replicated swap-rate sweep.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Worker threads; 0 uses every core.
        #[arg(long)]
        workers: Option<usize>,
    },
}

#[derive(Serialize)]
struct Manifest<'a> {
    subcommand: &'a str,
    code_version: &'a str,
    config_path: Option<&'a Path>,
    output_dir: &'a Path,
    overrides: &'a [Override],
    data: DataSummary,
    outputs: Vec<String>,
}

#[derive(Serialize)]
struct DataSummary {
    source: String,
    persons: usize,
    households: usize,
    tracts: usize,
}

struct Run<'a> {
    name: &'static str,
    common: &'a Common,
    overrides: Vec<Override>,
    cfg: RunConfig,
    outputs: Vec<String>,
}

fn data_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Data(format!("{}: {e}", path.display()))
}

impl<'a> Run<'a> {
    fn new(
        name: &'static str,
        common: &'a Common,
        flag_overrides: Vec<Override>,
    ) -> Result<Self, CliError> {
        // explicit flags win over --set
        let mut overrides = common.overrides.clone();
        overrides.extend(flag_overrides);
        let cfg = config::resolve(common.config.as_deref(), &overrides)?;
        fs::create_dir_all(&common.out).map_err(|e| data_err(&common.out, e))?;
        Ok(Self {
            name,
            common,
            overrides,
            cfg,
            outputs: Vec::new(),
        })
    }

    fn path(&mut self, file: &str) -> PathBuf {
        self.outputs.push(file.to_string());
        self.common.out.join(file)
    }

    fn create(&mut self, file: &str) -> Result<BufWriter<File>, CliError> {
        let path = self.path(file);
        File::create(&path)
            .map(BufWriter::new)
            .map_err(|e| data_err(&path, e))
    }

    fn write_json(&mut self, file: &str, value: &impl Serialize) -> Result<(), CliError> {
        let w = self.create(file)?;
        serde_json::to_writer_pretty(w, value).map_err(|e| CliError::Data(e.to_string()))
    }

    fn dataset(&self) -> Result<(Dataset, String), CliError> {
        match &self.cfg.data {
            Some(d) => {
                let schema = AttributeSchema::load(&d.schema)?;
                Ok((load_csv(&d.csv, schema)?, d.csv.display().to_string()))
            }
            None => {
                self.cfg.generate.validate()?;
                Ok((generate_dummy(&self.cfg.generate)?, "generated".into()))
            }
        }
    }

    /// Writes the resolved config and manifest. Called last so the manifest
    /// lists every output.
    fn finish(mut self, ds: &Dataset, source: String) -> Result<(), CliError> {
        let resolved = toml::to_string(&self.cfg).map_err(|e| CliError::Data(e.to_string()))?;
        let path = self.path("resolved_config.toml");
        fs::write(&path, resolved).map_err(|e| data_err(&path, e))?;
        self.outputs.push("manifest.json".into());
        let manifest = Manifest {
            subcommand: self.name,
            code_version: env!("CARGO_PKG_VERSION"),
            config_path: self.common.config.as_deref(),
            output_dir: &self.common.out,
            overrides: &self.overrides,
            data: DataSummary {
                source,
                persons: ds.len(),
                households: ds.households().len(),
                tracts: ds.tract_count(),
            },
            outputs: self.outputs.clone(),
        };
        let path = self.common.out.join("manifest.json");
        let w = File::create(&path).map_err(|e| data_err(&path, e))?;
        serde_json::to_writer_pretty(w, &manifest).map_err(|e| CliError::Data(e.to_string()))?;
        for f in &self.outputs {
            say!("{}", self.common.out.join(f).display());
        }
        Ok(())
    }
}

fn seed_override(key: &str, seed: Option<u64>) -> Vec<Override> {
    seed.map(|s| Override {
        key: key.into(),
        value: s.to_string(),
    })
    .into_iter()
    .collect()
}

fn generate(common: &Common) -> Result<(), CliError> {
    let mut run = Run::new(
        "generate",
        common,
        seed_override("generate.seed", common.seed),
    )?;
    run.cfg.data = None;
    run.cfg.generate.validate()?;
    let ds = generate_dummy(&run.cfg.generate)?;
    ds.write_csv(run.create("data.csv")?)?;
    let path = run.path("schema.toml");
    ds.schema().save(&path)?;
    run.finish(&ds, "generated".into())
}

fn score_cmd(common: &Common) -> Result<(), CliError> {
    let run = Run::new("score", common, seed_override("score.seed", common.seed))?;
    let risk_cfg = run.cfg.risk_config()?;
    risk_cfg.validate()?;
    let (ds, source) = run.dataset()?;
    let scores = score(&ds, &risk_cfg)?;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(run.cfg.score.seed);
    let ranking = rank_scores(&ds, &scores, &mut rng);
    let mut run = run;
    write_scores_csv(run.create("scores.csv")?, &ranking)?;
    run.finish(&ds, source)
}

#[derive(Serialize)]
struct SwapSummary {
    persons: usize,
    selected: usize,
    pairs: usize,
    achieved_rate: f64,
    unmatched_selected: usize,
}

fn swap_cmd(common: &Common, rate: Option<f64>) -> Result<(), CliError> {
    let mut flags = seed_override("swap.seed", common.seed);
    if let Some(r) = rate {
        flags.push(Override {
            key: "swap.rate".into(),
            value: r.to_string(),
        });
    }
    let mut run = Run::new("swap", common, flags)?;
    let swap_cfg = run.cfg.swap_config();
    swap_cfg.validate()?;
    let (ds, source) = run.dataset()?;
    let out = swap(&ds, &swap_cfg)?;
    out.dataset.write_csv(run.create("swapped.csv")?)?;
    let path = run.path("schema.toml");
    ds.schema().save(&path)?;
    out.write_pairs_csv(&ds, run.create("pairs.csv")?)?;
    run.write_json(
        "swap_summary.json",
        &SwapSummary {
            persons: ds.len(),
            selected: out.selected,
            pairs: out.swapped_household_pairs.len(),
            achieved_rate: out.achieved_rate,
            unmatched_selected: out.unmatched_selected,
        },
    )?;
    run.finish(&ds, source)
}

#[derive(Serialize)]
struct TractAssociation {
    tract: String,
    n: u64,
    #[serde(flatten)]
    association: AssociationResult,
}

fn tabulate_cmd(common: &Common) -> Result<(), CliError> {
    let mut run = Run::new(
        "tabulate",
        common,
        seed_override("generate.seed", common.seed),
    )?;
    let section = run
        .cfg
        .tabulate
        .clone()
        .ok_or_else(|| CliError::Config("tabulate: section is required".into()))?;
    let (ds, source) = run.dataset()?;
    let tab = Tabulator::new(ds.schema(), &section.spec())?;
    let labels = |v: &swapsim_core::Variable| v.levels.clone();
    let (row_labels, col_labels) = (labels(tab.row_variable()), labels(tab.col_variable()));
    let (scope, table) = match &section.tract {
        Some(t) => (t.clone(), tab.tabulate(ds.subset_by_tract(t)?)),
        None => ("all".to_string(), tab.tabulate(&ds)),
    };
    table.write_csv(run.create("table.csv")?, &row_labels, &col_labels)?;
    let overall = TractAssociation {
        tract: scope,
        n: table.n(),
        association: cramers_v(&table),
    };
    run.write_json("association.json", &overall)?;
    if section.tract.is_none() {
        let mut wtr = run.create("tract_v.csv")?;
        let rows: Vec<TractAssociation> = tab
            .tabulate_by_tract(&ds)
            .iter()
            .zip(ds.tract_ids())
            .map(|(t, id)| TractAssociation {
                tract: ds.tract_label(id).to_string(),
                n: t.n(),
                association: cramers_v(t),
            })
            .collect();
        use std::io::Write;
        writeln!(wtr, "tract,n,chi_square,v,effective_k,effective_r")
            .map_err(|e| CliError::Data(e.to_string()))?;
        for r in rows {
            let a = r.association;
            writeln!(
                wtr,
                "{},{},{},{},{},{}",
                r.tract,
                r.n,
                a.chi_square,
                a.v.map(|v| v.to_string()).unwrap_or_default(),
                a.effective_k,
                a.effective_r
            )
            .map_err(|e| CliError::Data(e.to_string()))?;
        }
    }
    say!(
        "V = {}",
        overall
            .association
            .v
            .map_or("undefined".into(), |v| format!("{v:.6}"))
    );
    run.finish(&ds, source)
}

fn sweep_cmd(common: &Common, workers: Option<usize>) -> Result<(), CliError> {
    let mut flags = seed_override("sweep.master_seed", common.seed);
    if let Some(w) = workers {
        flags.push(Override {
            key: "sweep.workers".into(),
            value: w.to_string(),
        });
    }
    let mut run = Run::new("sweep", common, flags)?;
    let sweep_cfg = run.cfg.sweep_config()?;
    sweep_cfg.validate()?;
    let (ds, source) = run.dataset()?;
    let log = raw_replication_log(&ds, &sweep_cfg)?;
    let res = log.aggregate();
    res.write_long_csv(run.create("sweep_long.csv")?)?;
    log.write_csv(run.create("sweep_raw.csv")?)?;
    let metadata = SweepMetadata::new(&ds, &sweep_cfg);
    run.write_json(
        "sweep_report.json",
        &SweepReport {
            metadata: &metadata,
            result: &res,
        },
    )?;
    if res.rates.len() >= 2 {
        let summaries = (0..res.specs.len())
            .map(|s| convergence_summary(&res, s))
            .collect::<Result<Vec<_>, _>>()?;
        for s in &summaries {
            say!(
                "{}: {:.0}% of tracts moved toward the cross-tract mean",
                s.spec,
                s.shrink_fraction * 100.0
            );
        }
        run.write_json("convergence.json", &summaries)?;
    }
    run.finish(&ds, source)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let result = match &cli.command {
        Command::Generate { common } => generate(common),
        Command::Score { common } => score_cmd(common),
        Command::Swap { common, rate } => swap_cmd(common, *rate),
        Command::Tabulate { common } => tabulate_cmd(common),
        Command::Sweep { common, workers } => sweep_cmd(common, *workers),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("swapsim: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
