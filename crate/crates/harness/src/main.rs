use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use gtclone_core::bounds::LogBase;
use gtclone_core::datasets;
use gtclone_harness::{
    emit_bounds_table, read_stats_csv, run_attack_experiment, run_baseline_experiment,
    write_experiment_outputs, BoundsRow, DatasetSpec, ExperimentConfig, ExperimentResult,
    LogBaseChoice, MatrixChoice, Schedule, DEFAULT_CUTOFF_MULT,
};

/// Group-testing database cloning: bounds, attacks, and experiment CSVs.
#[derive(Parser)]
#[command(name = "gtclone", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the baseline and attack query bounds for dataset parameters.
    Bounds(BoundsArgs),
    /// Summarize a database file as one stats CSV row.
    Stats(StatsArgs),
    /// Generate a synthetic database file with a controlled distance profile.
    Synth(SynthArgs),
    /// Run the incremental cloning attack and emit experiment CSVs.
    Attack(AttackArgs),
    /// Run the exhaustive per-position baseline attack.
    Baseline(BaselineArgs),
}

#[derive(Args)]
struct BoundsArgs {
    /// Inline row `name,n,d,g,c`; repeatable.
    #[arg(long = "row", value_name = "NAME,N,D,G,C")]
    rows: Vec<String>,
    /// Stats CSV produced by the `stats` subcommand (d is taken from d_max).
    #[arg(long)]
    stats: Option<PathBuf>,
    /// Log base for the row bound; the published tables use natural.
    #[arg(long, value_enum, default_value = "natural")]
    log_base: LogBaseChoice,
    /// Single-string random-guess count `n,c,eps` (needs c <= n^(1-eps));
    /// repeatable, printed as its own CSV block.
    #[arg(long = "guess", value_name = "N,C,EPS")]
    guesses: Vec<String>,
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct DatasetArgs {
    /// Input database file.
    #[arg(long, requires = "format", conflicts_with = "synth")]
    input: Option<PathBuf>,
    /// Input format: signed_edges | ratings | sequences | binary_adjacency.
    #[arg(long)]
    format: Option<String>,
    /// Explicit string length (otherwise inferred from the data).
    #[arg(long)]
    n: Option<usize>,
    /// Explicit string count (otherwise inferred from the data).
    #[arg(long)]
    g: Option<usize>,
    /// Pad ragged sequence records with a fresh color.
    #[arg(long)]
    pad: bool,
    /// Inline synthetic spec, e.g. `g=200;n=10000;c=3;dist=constant:13;seed=7`.
    #[arg(long)]
    synth: Option<String>,
}

impl DatasetArgs {
    fn to_spec(&self) -> Result<DatasetSpec> {
        match (&self.input, &self.synth) {
            (Some(path), None) => Ok(DatasetSpec::Ingest {
                path: path.clone(),
                format: self.format.clone().context("--input needs --format")?,
                n: self.n,
                g: self.g,
                pad: self.pad,
            }),
            (None, Some(spec)) => DatasetSpec::parse_synth(spec),
            (None, None) => bail!("pass either --input/--format or --synth"),
            (Some(_), Some(_)) => bail!("--input and --synth are mutually exclusive"),
        }
    }
}

#[derive(Args)]
struct StatsArgs {
    #[command(flatten)]
    dataset: DatasetArgs,
    /// Row label; defaults to the input file stem.
    #[arg(long)]
    name: Option<String>,
    /// Output file; stdout when omitted. A header row is written first.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    g: usize,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    c: u16,
    /// `constant:K`, `uniform:LO..HI`, or `mixture:W@LO..HI,…`.
    #[arg(long)]
    dist: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output database file (sequences format).
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct AttackArgs {
    /// JSON config file mirroring the experiment configuration; replaces
    /// every flag except --out.
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    dataset: DatasetArgs,
    /// Target distance d_hat; repeatable for sweeps.
    #[arg(long = "dhat")]
    d_hats: Vec<u64>,
    /// Tiered schedule `DHAT:ROWS,DHAT:ROWS,DHAT`; repeatable.
    #[arg(long = "tiers")]
    tiers: Vec<String>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Per-string budget is cutoff-mult * c shifted queries.
    #[arg(long, default_value_t = DEFAULT_CUTOFF_MULT)]
    cutoff_mult: u64,
    #[arg(long, value_enum, default_value = "bernoulli")]
    matrix: MatrixChoice,
    /// Log base for the exact construction's row bound.
    #[arg(long, value_enum, default_value = "base2")]
    log_base: LogBaseChoice,
    /// Rows between error-curve samples; defaults to the arm's d_hat.
    #[arg(long)]
    batch: Option<u64>,
    /// Worker threads; defaults to all cores.
    #[arg(long)]
    threads: Option<usize>,
    /// Output directory for the experiment CSVs; may come from --config.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BaselineArgs {
    #[command(flatten)]
    dataset: DatasetArgs,
    /// Output directory for the experiment CSVs.
    #[arg(long)]
    out: PathBuf,
}

fn main() {
    if let Err(err) = run(Cli::parse()) {
        eprintln!("error: {err:#}");
        std::process::exit(1);
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Bounds(args) => cmd_bounds(args),
        Command::Stats(args) => cmd_stats(args),
        Command::Synth(args) => cmd_synth(args),
        Command::Attack(args) => cmd_attack(args),
        Command::Baseline(args) => cmd_baseline(args),
    }
}

fn open_sink(path: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("create {}", p.display()))?,
        )),
        None => Box::new(io::stdout().lock()),
    })
}

fn cmd_bounds(args: BoundsArgs) -> Result<()> {
    let mut rows: Vec<BoundsRow> = Vec::new();
    if let Some(stats) = &args.stats {
        rows.extend(read_stats_csv(stats)?);
    }
    for text in &args.rows {
        rows.push(BoundsRow::parse(text)?);
    }
    if rows.is_empty() && args.guesses.is_empty() {
        bail!("nothing to do: pass --row, --stats, and/or --guess");
    }
    let log_base: LogBase = args.log_base.into();
    let mut sink = open_sink(&args.out)?;
    if !rows.is_empty() {
        emit_bounds_table(&rows, log_base, &mut sink)?;
    }
    if !args.guesses.is_empty() {
        writeln!(sink, "n,c,eps,guesses")?;
        for text in &args.guesses {
            let parts: Vec<&str> = text.split(',').map(str::trim).collect();
            if parts.len() != 3 {
                bail!("--guess {text:?} must be n,c,eps");
            }
            let n: u64 = parts[0].parse().context("bad n")?;
            let c: u64 = parts[1].parse().context("bad c")?;
            let eps: f64 = parts[2].parse().context("bad eps")?;
            let g = gtclone_core::bounds::chvatal_guess_count(n, c, eps)?;
            writeln!(sink, "{n},{c},{eps:?},{g:?}")?;
        }
    }
    sink.flush()?;
    Ok(())
}

fn cmd_stats(args: StatsArgs) -> Result<()> {
    let spec = args.dataset.to_spec()?;
    let (db, label, clamped) = spec.load()?;
    if clamped > 0 {
        eprintln!("warning: {clamped} synthetic distances clamped to n");
    }
    let name = args.name.unwrap_or(label);
    let mut sink = open_sink(&args.out)?;
    writeln!(sink, "name,g,n,c,d_max,d_mean,d_median")?;
    datasets::emit_stats(&db, &name, &mut sink)?;
    sink.flush()?;
    Ok(())
}

fn cmd_synth(args: SynthArgs) -> Result<()> {
    let spec = DatasetSpec::Synth {
        g: args.g,
        n: args.n,
        c: args.c,
        dist: args.dist,
        seed: args.seed,
    };
    let (db, _, clamped) = spec.load()?;
    if clamped > 0 {
        eprintln!("warning: {clamped} synthetic distances clamped to n");
    }
    let mut sink = BufWriter::new(
        File::create(&args.out).with_context(|| format!("create {}", args.out.display()))?,
    );
    datasets::write_sequences(&db, &mut sink)?;
    sink.flush()?;
    println!(
        "wrote {} strings of length {} over {} colors to {}",
        db.len(),
        db.string_len(),
        db.alphabet().size(),
        args.out.display()
    );
    Ok(())
}

fn cmd_attack(args: AttackArgs) -> Result<()> {
    let cfg = match &args.config {
        Some(path) => ExperimentConfig::from_json_file(path)?,
        None => {
            let mut schedules: Vec<Schedule> =
                args.d_hats.iter().map(|&d| Schedule::single(d)).collect();
            for text in &args.tiers {
                schedules.push(Schedule::parse(text)?);
            }
            ExperimentConfig {
                dataset: args.dataset.to_spec()?,
                schedules,
                seed: args.seed,
                cutoff_mult: args.cutoff_mult,
                matrix: args.matrix,
                log_base: args.log_base,
                batch_rows: args.batch,
                threads: args.threads,
                out: None,
            }
        }
    };
    let out = args
        .out
        .clone()
        .or_else(|| cfg.out.clone())
        .context("pass --out or set \"out\" in the config file")?;
    let result = run_attack_experiment(&cfg)?;
    report_result(&result, &out)
}

fn cmd_baseline(args: BaselineArgs) -> Result<()> {
    let cfg = ExperimentConfig {
        dataset: args.dataset.to_spec()?,
        schedules: vec![Schedule::single(1)], // ignored by the baseline
        seed: 0,
        cutoff_mult: DEFAULT_CUTOFF_MULT,
        matrix: MatrixChoice::Bernoulli,
        log_base: LogBaseChoice::Base2,
        batch_rows: None,
        threads: None,
        out: None,
    };
    let result = run_baseline_experiment(&cfg)?;
    report_result(&result, &args.out)
}

fn report_result(result: &ExperimentResult, out: &Path) -> Result<()> {
    if result.clamped_distances > 0 {
        eprintln!(
            "warning: {} synthetic distances clamped to n",
            result.clamped_distances
        );
    }
    write_experiment_outputs(result, out)?;
    println!(
        "dataset {}: g={} n={} c={}",
        result.dataset_label, result.g, result.n, result.c
    );
    for arm in &result.arms {
        let s = &arm.summary;
        println!(
            "  {}: cloned {}/{} ({:.1}%), mean tests {:.1}, median tests {}, cutoff hits {}",
            arm.label, s.cloned, s.strings, s.percent_cloned, s.mean_tests, s.median_tests,
            s.cutoff_hits
        );
    }
    println!("wrote CSVs under {}", out.display());
    Ok(())
}
