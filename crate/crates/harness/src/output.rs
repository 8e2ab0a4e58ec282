//! CSV emission for experiment results, plus the stats-CSV reader the
//! `bounds` subcommand accepts.
//!
//! Schemas:
//!   per_string.csv  = string_index,distance,tests_used,cloned,hit_cutoff
//!   curve.csv       = tests,percent_cloned
//!   scatter.csv     = distance,tests_used
//!   error_curve.csv = string_index,tests,error
//!   summary.csv     = arm,strings,cloned,percent_cloned,mean_tests,median_tests,cutoff_hits

use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use anyhow::{Context, Result};

use crate::experiment::{ArmResult, ExperimentResult};
use crate::table::BoundsRow;

/// Write every arm's four CSVs under `out/<arm_label>/`, the cross-arm
/// summary, and a small gnuplot script.
pub fn write_experiment_outputs(result: &ExperimentResult, out: &Path) -> Result<()> {
    fs::create_dir_all(out).with_context(|| format!("create {}", out.display()))?;
    for arm in &result.arms {
        let dir = out.join(&arm.label);
        fs::create_dir_all(&dir)?;
        write_arm(arm, &dir)?;
    }
    let mut summary = BufWriter::new(File::create(out.join("summary.csv"))?);
    writeln!(
        summary,
        "arm,strings,cloned,percent_cloned,mean_tests,median_tests,cutoff_hits"
    )?;
    for arm in &result.arms {
        let s = &arm.summary;
        writeln!(
            summary,
            "{},{},{},{:?},{:?},{},{}",
            arm.label, s.strings, s.cloned, s.percent_cloned, s.mean_tests, s.median_tests,
            s.cutoff_hits
        )?;
    }
    summary.flush()?;
    write_gnuplot(result, out)?;
    Ok(())
}

fn write_arm(arm: &ArmResult, dir: &Path) -> Result<()> {
    let mut per_string = BufWriter::new(File::create(dir.join("per_string.csv"))?);
    writeln!(per_string, "string_index,distance,tests_used,cloned,hit_cutoff")?;
    for r in &arm.reports {
        writeln!(
            per_string,
            "{},{},{},{},{}",
            r.string_index, r.distance, r.tests_used, r.cloned, r.hit_cutoff
        )?;
    }
    per_string.flush()?;

    let mut curve = BufWriter::new(File::create(dir.join("curve.csv"))?);
    writeln!(curve, "tests,percent_cloned")?;
    for &(tests, pct) in &arm.curve {
        writeln!(curve, "{},{:?}", tests, pct)?;
    }
    curve.flush()?;

    let mut scatter = BufWriter::new(File::create(dir.join("scatter.csv"))?);
    writeln!(scatter, "distance,tests_used")?;
    for r in &arm.reports {
        writeln!(scatter, "{},{}", r.distance, r.tests_used)?;
    }
    scatter.flush()?;

    let mut errors = BufWriter::new(File::create(dir.join("error_curve.csv"))?);
    writeln!(errors, "string_index,tests,error")?;
    for r in &arm.reports {
        for &(tests, error) in &r.error_curve {
            writeln!(errors, "{},{},{}", r.string_index, tests, error)?;
        }
    }
    errors.flush()?;
    Ok(())
}

fn write_gnuplot(result: &ExperimentResult, out: &Path) -> Result<()> {
    let mut gp = BufWriter::new(File::create(out.join("plots.gp"))?);
    writeln!(gp, "# gnuplot -p plots.gp  (run from this directory)")?;
    writeln!(gp, "set datafile separator ','")?;
    writeln!(gp, "set key bottom right")?;
    writeln!(gp, "set xlabel 'tests'")?;
    writeln!(gp, "set ylabel 'percent cloned'")?;
    let plots: Vec<String> = result
        .arms
        .iter()
        .map(|arm| {
            format!(
                "'{}/curve.csv' skip 1 using 1:2 with steps title '{}'",
                arm.label, arm.label
            )
        })
        .collect();
    writeln!(gp, "plot {}", plots.join(", \\\n     "))?;
    writeln!(gp, "pause -1 'percent cloned; press enter for tests vs distance'")?;
    writeln!(gp, "set xlabel 'distance from reference'")?;
    writeln!(gp, "set ylabel 'tests to clone'")?;
    let scatters: Vec<String> = result
        .arms
        .iter()
        .map(|arm| {
            format!(
                "'{}/scatter.csv' skip 1 using 1:2 with points title '{}'",
                arm.label, arm.label
            )
        })
        .collect();
    writeln!(gp, "plot {}", scatters.join(", \\\n     "))?;
    gp.into_inner()?.flush()?;
    Ok(())
}

/// Read rows written by the `stats` subcommand
/// (`name,g,n,c,d_max,d_mean,d_median`) into bounds-table inputs, taking
/// `d = d_max`.
pub fn read_stats_csv(path: &Path) -> Result<Vec<BoundsRow>> {
    let file = File::open(path).with_context(|| format!("open stats csv {}", path.display()))?;
    let mut rows = Vec::new();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        let t = line.trim();
        if t.is_empty() || t.starts_with("name,") {
            continue;
        }
        let parts: Vec<&str> = t.split(',').collect();
        if parts.len() != 7 {
            anyhow::bail!("stats line {}: expected 7 fields, got {}", idx + 1, parts.len());
        }
        rows.push(BoundsRow {
            name: parts[0].to_string(),
            g: parts[1].parse().context("bad g")?,
            n: parts[2].parse().context("bad n")?,
            c: parts[3].parse().context("bad c")?,
            d: parts[4].parse().context("bad d_max")?,
        });
    }
    Ok(rows)
}
