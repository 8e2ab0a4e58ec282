//! Experiment configuration: dataset specs, query-density schedules, and the
//! knobs shared by the CLI flags and the declarative JSON config file.

use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use gtclone_core::bounds::LogBase;
use gtclone_core::datasets::{
    ingest, synth, DistanceDistribution, IngestFormat, IngestKind, SynthSpec,
};
use gtclone_core::model::TargetDatabase;

/// Where the target database comes from.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DatasetSpec {
    Ingest {
        path: PathBuf,
        /// One of `signed_edges`, `ratings`, `sequences`, `binary_adjacency`.
        format: String,
        #[serde(default)]
        n: Option<usize>,
        #[serde(default)]
        g: Option<usize>,
        #[serde(default)]
        pad: bool,
    },
    Synth {
        g: usize,
        n: usize,
        c: u16,
        /// `constant:K`, `uniform:LO..HI`, or `mixture:W@LO..HI,…`.
        dist: String,
        seed: u64,
    },
}

impl DatasetSpec {
    /// Parse the inline synth grammar
    /// `g=200;n=10000;c=3;dist=mixture:0.72@1..18,0.2@19..100;seed=7`
    /// (semicolon-separated because mixture modes use commas).
    pub fn parse_synth(text: &str) -> Result<DatasetSpec> {
        let mut g = None;
        let mut n = None;
        let mut c = None;
        let mut dist = None;
        let mut seed = 0u64;
        for field in text.split(';').filter(|f| !f.trim().is_empty()) {
            let (key, value) = field
                .split_once('=')
                .with_context(|| format!("synth field {field:?} is not key=value"))?;
            match key.trim() {
                "g" => g = Some(value.parse().context("bad g")?),
                "n" => n = Some(value.parse().context("bad n")?),
                "c" => c = Some(value.parse().context("bad c")?),
                "dist" => dist = Some(value.to_string()),
                "seed" => seed = value.parse().context("bad seed")?,
                other => bail!("unknown synth field {other:?}"),
            }
        }
        Ok(DatasetSpec::Synth {
            g: g.context("synth spec needs g")?,
            n: n.context("synth spec needs n")?,
            c: c.context("synth spec needs c")?,
            dist: dist.context("synth spec needs dist")?,
            seed,
        })
    }

    /// Load or generate the database. Returns the database, a short label,
    /// and the number of clamped synthetic distances (0 for ingestion).
    pub fn load(&self) -> Result<(TargetDatabase, String, usize)> {
        match self {
            DatasetSpec::Ingest {
                path,
                format,
                n,
                g,
                pad,
            } => {
                let kind: IngestKind = format.parse()?;
                let mut fmt = IngestFormat::new(kind);
                fmt.options.explicit_n = *n;
                fmt.options.explicit_g = *g;
                fmt.options.pad = *pad;
                let file = File::open(path)
                    .with_context(|| format!("open dataset {}", path.display()))?;
                let out = ingest(&fmt, BufReader::new(file))
                    .with_context(|| format!("ingest {}", path.display()))?;
                let label = path
                    .file_stem()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_else(|| "dataset".into());
                Ok((out.database, label, 0))
            }
            DatasetSpec::Synth { g, n, c, dist, seed } => {
                let dist: DistanceDistribution = dist.parse()?;
                let spec = SynthSpec {
                    g: *g,
                    n: *n,
                    c: *c,
                    dist,
                    seed: *seed,
                };
                let (db, report) = synth(&spec)?;
                Ok((db, format!("synth_g{g}_n{n}_c{c}"), report.clamped))
            }
        }
    }
}

/// One tier of the query-density schedule: rows drawn at `1/(2·d_hat)`
/// density. `rows = None` makes the tier unbounded (only valid last).
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq)]
pub struct Tier {
    pub d_hat: u64,
    #[serde(default)]
    pub rows: Option<u64>,
}

/// A full schedule; a plain single-`d_hat` run is one unbounded tier.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct Schedule {
    pub tiers: Vec<Tier>,
}

/// Default per-tier row budget when a tiered spec omits one.
pub const DEFAULT_TIER_ROWS: u64 = 5000;

impl Schedule {
    pub fn single(d_hat: u64) -> Schedule {
        Schedule {
            tiers: vec![Tier { d_hat, rows: None }],
        }
    }

    /// Parse `13` (single) or `13:5000,50:5000,378` (tiered; the last tier
    /// may omit its budget and runs to the cutoff).
    pub fn parse(text: &str) -> Result<Schedule> {
        let mut tiers = Vec::new();
        for part in text.split(',') {
            let (d_hat, rows) = match part.split_once(':') {
                Some((d, r)) => (
                    d.parse().with_context(|| format!("bad d_hat in {part:?}"))?,
                    Some(r.parse().with_context(|| format!("bad row budget in {part:?}"))?),
                ),
                None => (part.parse().with_context(|| format!("bad d_hat {part:?}"))?, None),
            };
            tiers.push(Tier { d_hat, rows });
        }
        let schedule = Schedule { tiers };
        schedule.validate()?;
        Ok(schedule)
    }

    pub fn validate(&self) -> Result<()> {
        if self.tiers.is_empty() {
            bail!("schedule needs at least one tier");
        }
        for tier in &self.tiers {
            if tier.d_hat == 0 {
                bail!("d_hat must be >= 1");
            }
            if tier.rows == Some(0) {
                bail!("tier row budget must be >= 1");
            }
        }
        for tier in &self.tiers[..self.tiers.len() - 1] {
            if tier.rows.is_none() {
                bail!("only the last tier may omit its row budget");
            }
        }
        Ok(())
    }

    /// Fill interior tiers that omitted a budget with the default.
    pub fn with_default_budgets(mut self) -> Schedule {
        let last = self.tiers.len() - 1;
        for (i, tier) in self.tiers.iter_mut().enumerate() {
            if i != last && tier.rows.is_none() {
                tier.rows = Some(DEFAULT_TIER_ROWS);
            }
        }
        self
    }

    pub fn is_single(&self) -> bool {
        self.tiers.len() == 1
    }

    /// First tier's density, used as the default batch size.
    pub fn lead_d_hat(&self) -> u64 {
        self.tiers[0].d_hat
    }

    /// Label used in output paths and the summary CSV.
    pub fn label(&self) -> String {
        if self.is_single() {
            format!("dhat_{}", self.tiers[0].d_hat)
        } else {
            let parts: Vec<String> = self
                .tiers
                .iter()
                .map(|t| match t.rows {
                    Some(r) => format!("{}x{}", t.d_hat, r),
                    None => format!("{}", t.d_hat),
                })
                .collect();
            format!("tiered_{}", parts.join("_"))
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq, Default, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum MatrixChoice {
    /// Streaming Bernoulli rows; supports incremental growth and tiers.
    #[default]
    Bernoulli,
    /// Fixed 2t x n equal-column-weight matrix with t from the row bound.
    Exact,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq, Default, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum LogBaseChoice {
    Natural,
    /// Conservative choice backing the distinguishing-probability argument.
    #[default]
    Base2,
}

impl From<LogBaseChoice> for LogBase {
    fn from(v: LogBaseChoice) -> LogBase {
        match v {
            LogBaseChoice::Natural => LogBase::Natural,
            LogBaseChoice::Base2 => LogBase::Base2,
        }
    }
}

pub const DEFAULT_CUTOFF_MULT: u64 = 100_000;

/// Everything one attack experiment needs. Serializable so a run can be
/// described by a single JSON file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub dataset: DatasetSpec,
    /// One experiment arm per schedule, run independently on the same data.
    pub schedules: Vec<Schedule>,
    #[serde(default)]
    pub seed: u64,
    /// The per-string query budget is `cutoff_mult * c` shifted queries.
    #[serde(default = "default_cutoff_mult")]
    pub cutoff_mult: u64,
    #[serde(default)]
    pub matrix: MatrixChoice,
    /// Log base for the exact construction's row bound.
    #[serde(default)]
    pub log_base: LogBaseChoice,
    /// Rows between error-curve samples; defaults to the arm's lead d_hat.
    #[serde(default)]
    pub batch_rows: Option<u64>,
    #[serde(default)]
    pub threads: Option<usize>,
    /// Output directory for the experiment CSVs; a CLI `--out` overrides it.
    #[serde(default)]
    pub out: Option<PathBuf>,
}

fn default_cutoff_mult() -> u64 {
    DEFAULT_CUTOFF_MULT
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.schedules.is_empty() {
            bail!("need at least one d_hat schedule");
        }
        for s in &self.schedules {
            s.validate()?;
            if self.matrix == MatrixChoice::Exact && !s.is_single() {
                bail!("tiered schedules require the bernoulli matrix");
            }
        }
        if self.batch_rows == Some(0) {
            bail!("batch size must be >= 1");
        }
        Ok(())
    }

    pub fn from_json_file(path: &Path) -> Result<ExperimentConfig> {
        let file = File::open(path).with_context(|| format!("open config {}", path.display()))?;
        let cfg: ExperimentConfig =
            serde_json::from_reader(BufReader::new(file)).context("parse config JSON")?;
        cfg.validate()?;
        Ok(cfg)
    }
}
