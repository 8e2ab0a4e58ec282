//! The experiment driver: runs the incremental attack over a whole database
//! for each configured query-density schedule, and the exhaustive baseline.
//!
//! Rows are generated once per chunk and shared read-only by a worker pool;
//! every per-string engine consumes the identical row sequence (the whole
//! point of a nonadaptive attack), so results are independent of scheduling
//! and byte-identical across reruns.

use std::sync::Arc;

use anyhow::{bail, Context, Result};
use rayon::prelude::*;

use gtclone_core::attack::{
    baseline_attack, CloneConfig, CloneReport, RowSource, StringAttack,
};
use gtclone_core::bounds::{row_bound, BoundInputs};
use gtclone_core::matrix::{bernoulli_row, TestMatrix};
use gtclone_core::model::{Position, TargetDatabase};
use gtclone_core::oracle::Oracle;

use crate::config::{ExperimentConfig, MatrixChoice, Schedule};

/// Cap on memory held by one chunk of generated rows. Purely a throughput
/// knob; output is identical for any chunking.
const CHUNK_BYTES: u64 = 1 << 26;

/// Rows per parallel dispatch, sized so a chunk stays within the byte budget
/// even when rows are heavy (expected weight is about n/(2·d_hat)).
fn chunk_rows(n: u64, lead_d_hat: u64) -> u64 {
    let expected_weight = (n / (2 * lead_d_hat)).max(1);
    (CHUNK_BYTES / (4 * expected_weight)).clamp(16, 512)
}

/// Bernoulli stream whose density follows a tier schedule: row `k` falls in
/// the tier whose cumulative row budget contains `k`, and is still a pure
/// function of `(seed, k)` given the schedule.
pub struct TieredStream {
    n: u32,
    seed: u64,
    /// `(first_row, d_hat)` per tier, in order; the last tier is unbounded.
    starts: Vec<(u64, u64)>,
}

impl TieredStream {
    pub fn new(n: u32, seed: u64, schedule: &Schedule) -> TieredStream {
        let schedule = schedule.clone().with_default_budgets();
        let mut starts = Vec::with_capacity(schedule.tiers.len());
        let mut cursor = 0u64;
        for tier in &schedule.tiers {
            starts.push((cursor, tier.d_hat));
            cursor = cursor.saturating_add(tier.rows.unwrap_or(u64::MAX));
        }
        TieredStream { n, seed, starts }
    }

    pub fn d_hat_for(&self, k: u64) -> u64 {
        let idx = match self.starts.binary_search_by_key(&k, |&(start, _)| start) {
            Ok(i) => i,
            Err(i) => i - 1,
        };
        self.starts[idx].1
    }
}

impl RowSource for TieredStream {
    fn n(&self) -> u32 {
        self.n
    }

    fn row(&self, k: u64) -> Option<Vec<Position>> {
        Some(bernoulli_row(self.n, self.d_hat_for(k), self.seed, k))
    }
}

/// Per-arm aggregates; recomputable from the per-string reports.
#[derive(Debug, Clone, PartialEq)]
pub struct ArmSummary {
    pub strings: u64,
    pub cloned: u64,
    pub percent_cloned: f64,
    /// Mean over all strings; cutoff-limited strings contribute their
    /// (undervalued) budget-capped counts.
    pub mean_tests: f64,
    /// Lower median over all strings.
    pub median_tests: u64,
    pub cutoff_hits: u64,
}

#[derive(Debug, Clone)]
pub struct ArmResult {
    pub label: String,
    pub reports: Vec<CloneReport>,
    /// `(tests, percent cloned)`; non-decreasing by construction.
    pub curve: Vec<(u64, f64)>,
    pub summary: ArmSummary,
}

#[derive(Debug, Clone)]
pub struct ExperimentResult {
    pub dataset_label: String,
    /// Synthetic distances clamped to n during generation.
    pub clamped_distances: usize,
    pub g: u64,
    pub n: u64,
    pub c: u16,
    pub arms: Vec<ArmResult>,
}

/// Run the incremental attack for every schedule in the config. Fully
/// deterministic in `(config, dataset)`.
pub fn run_attack_experiment(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    cfg.validate()?;
    let (db, dataset_label, clamped) = cfg.dataset.load()?;
    let db = Arc::new(db);
    let run = || -> Result<Vec<ArmResult>> {
        cfg.schedules
            .iter()
            .map(|schedule| run_arm(&db, schedule, cfg))
            .collect()
    };
    let arms = match cfg.threads {
        Some(threads) => rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .context("build worker pool")?
            .install(run),
        None => run(),
    }?;
    Ok(ExperimentResult {
        dataset_label,
        clamped_distances: clamped,
        g: db.len() as u64,
        n: db.string_len() as u64,
        c: db.alphabet().size(),
        arms,
    })
}

fn run_arm(db: &Arc<TargetDatabase>, schedule: &Schedule, cfg: &ExperimentConfig) -> Result<ArmResult> {
    let oracle = Oracle::new(db.clone());
    let c = db.alphabet().size();
    let offsets = c as u64 - 1;
    let cutoff = cfg
        .cutoff_mult
        .checked_mul(c as u64)
        .context("cutoff overflow")?;
    let batch = cfg.batch_rows.unwrap_or(schedule.lead_d_hat()).max(1);
    let clone_cfg = CloneConfig::new(cutoff, batch);

    // Row supply: an unbounded tiered stream, or the fixed matrix the row
    // bound prescribes for the arm's density.
    enum Supply {
        Stream(TieredStream),
        Matrix(TestMatrix),
    }
    let supply = match cfg.matrix {
        MatrixChoice::Bernoulli => Supply::Stream(TieredStream::new(
            db.string_len() as u32,
            cfg.seed,
            schedule,
        )),
        MatrixChoice::Exact => {
            let d = schedule.lead_d_hat();
            let t = row_bound(&BoundInputs {
                n: db.string_len() as u64,
                d,
                g: db.len() as u64,
                c: c as u64,
                log_base: cfg.log_base.into(),
            })?;
            Supply::Matrix(
                TestMatrix::build_exact(db.string_len() as u32, t, d, cfg.seed)
                    .context("exact matrix construction")?,
            )
        }
    };
    let (source, source_rows): (&dyn RowSource, Option<u64>) = match &supply {
        Supply::Stream(s) => (s, None),
        Supply::Matrix(m) => (m, Some(m.rows() as u64)),
    };

    let mut engines: Vec<StringAttack> = (0..db.len())
        .map(|i| StringAttack::new(&oracle, i, &clone_cfg))
        .collect();

    let rows_by_cutoff = cutoff / offsets;
    let max_rows = source_rows.map_or(rows_by_cutoff, |r| r.min(rows_by_cutoff));
    let chunk = chunk_rows(db.string_len() as u64, schedule.lead_d_hat());
    let mut next_row = 0u64;
    while next_row < max_rows && engines.iter().any(|e| !e.finished()) {
        let take = chunk.min(max_rows - next_row);
        let rows: Vec<Vec<Position>> = (next_row..next_row + take)
            .map(|k| source.row(k).expect("row within bounds"))
            .collect();
        engines.par_iter_mut().try_for_each(|engine| {
            for row in &rows {
                if engine.finished() {
                    break;
                }
                if !engine.budget_allows_row() {
                    engine.mark_cutoff();
                    break;
                }
                engine.consume_row(row)?;
                if engine.rows_consumed() % batch == 0 {
                    engine.sample_curve();
                }
            }
            Ok::<(), gtclone_core::attack::AttackError>(())
        })?;
        next_row += take;
    }
    for engine in engines.iter_mut() {
        // The loop stops at the global row cap; strings still running are out
        // of budget (cutoff) unless a finite matrix simply ran out of rows.
        if !engine.finished() && !engine.budget_allows_row() {
            engine.mark_cutoff();
        }
    }
    let reports: Vec<CloneReport> = engines.into_iter().map(|e| e.into_report()).collect();
    let curve = percent_cloned_curve(&reports);
    let summary = summarize(&reports);
    Ok(ArmResult {
        label: schedule.label(),
        reports,
        curve,
        summary,
    })
}

/// The exhaustive per-position attack over the same dataset: always exactly
/// `(c-1)·n` shifted queries and a 100% clone rate. Reconstruction is checked
/// against the ground truth before reporting.
pub fn run_baseline_experiment(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    let (db, dataset_label, clamped) = cfg.dataset.load()?;
    let db = Arc::new(db);
    let oracle = Oracle::new(db.clone());
    let outcome = baseline_attack(&oracle)?;
    for (i, (rec, truth)) in outcome
        .reconstructed
        .iter()
        .zip(db.strings())
        .enumerate()
    {
        if rec != truth {
            bail!("baseline reconstruction diverged from ground truth at string {i}");
        }
    }
    let tests = outcome.shifted_queries;
    let reports: Vec<CloneReport> = db
        .strings()
        .iter()
        .enumerate()
        .map(|(i, x)| CloneReport {
            string_index: i,
            distance: x.distance() as u64,
            tests_used: tests,
            cloned: true,
            hit_cutoff: false,
            error_curve: vec![(0, x.distance() as u64), (tests, 0)],
        })
        .collect();
    let curve = vec![(0, 0.0), (tests, 100.0)];
    let summary = summarize(&reports);
    Ok(ExperimentResult {
        dataset_label,
        clamped_distances: clamped,
        g: db.len() as u64,
        n: db.string_len() as u64,
        c: db.alphabet().size(),
        arms: vec![ArmResult {
            label: "baseline".into(),
            reports,
            curve,
            summary,
        }],
    })
}

/// Percentage of strings cloned within `T` tests, sampled at every point
/// where it changes (plus the endpoints).
fn percent_cloned_curve(reports: &[CloneReport]) -> Vec<(u64, f64)> {
    let g = reports.len() as f64;
    let mut clone_points: Vec<u64> = reports
        .iter()
        .filter(|r| r.cloned)
        .map(|r| r.tests_used)
        .collect();
    clone_points.sort_unstable();
    let max_tests = reports.iter().map(|r| r.tests_used).max().unwrap_or(0);
    let mut curve = Vec::new();
    let mut done = 0u64;
    let mut idx = 0;
    // Count strings cloned at zero tests first, then walk the jumps.
    while idx < clone_points.len() && clone_points[idx] == 0 {
        done += 1;
        idx += 1;
    }
    curve.push((0, 100.0 * done as f64 / g));
    while idx < clone_points.len() {
        let t = clone_points[idx];
        while idx < clone_points.len() && clone_points[idx] == t {
            done += 1;
            idx += 1;
        }
        curve.push((t, 100.0 * done as f64 / g));
    }
    if max_tests > curve.last().map_or(0, |&(t, _)| t) {
        let last = curve.last().map_or(0.0, |&(_, p)| p);
        curve.push((max_tests, last));
    }
    curve
}

fn summarize(reports: &[CloneReport]) -> ArmSummary {
    let strings = reports.len() as u64;
    let cloned = reports.iter().filter(|r| r.cloned).count() as u64;
    let cutoff_hits = reports.iter().filter(|r| r.hit_cutoff).count() as u64;
    let mut tests: Vec<u64> = reports.iter().map(|r| r.tests_used).collect();
    tests.sort_unstable();
    let mean_tests = tests.iter().sum::<u64>() as f64 / strings as f64;
    let median_tests = tests[(strings as usize - 1) / 2];
    ArmSummary {
        strings,
        cloned,
        percent_cloned: 100.0 * cloned as f64 / strings as f64,
        mean_tests,
        median_tests,
        cutoff_hits,
    }
}
