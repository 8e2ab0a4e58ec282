//! Dataset ingestion, synthetic database generation, and stats emission.
//!
//! Four text formats cover the natural shapes of the case-study data:
//! signed edge lists (trust/distrust networks), user-item ratings, aligned
//! symbol sequences, and plain binary adjacency lists. External symbols are
//! remapped to the contiguous internal alphabet at this boundary (signs
//! `{0, 1, -1}` become `{0, 1, 2}`; sequence characters map through the
//! declared alphabet). Proprietary corpora are not bundled: synthetic
//! databases with controlled distance profiles stand in for them.

use std::io::{self, BufRead, Write};
use std::str::FromStr;

use thiserror::Error;

use crate::model::{
    compute_stats, Alphabet, DatabaseStats, ModelError, Offset, Position, ReferenceString,
    Symbol, TargetDatabase, TargetString,
};
use crate::rng::{Domain, SubstreamRng};

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("i/o: {0}")]
    Io(#[from] io::Error),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("line {line}: conflicting duplicate: {msg}")]
    Conflict { line: usize, msg: String },
    #[error("line {line}: unknown symbol {symbol:?}")]
    UnknownSymbol { line: usize, symbol: char },
    #[error("line {line}: record length {got} does not match reference length {expected} (padding disabled)")]
    Ragged { line: usize, expected: usize, got: usize },
    #[error("line {line}: record longer than the reference ({got} > {expected})")]
    TooLong { line: usize, expected: usize, got: usize },
    #[error("sequences input must start with a '#alphabet <symbols>' header")]
    MissingAlphabet,
    #[error("cannot infer database shape from an empty input; pass explicit n and g")]
    CannotInferShape,
    #[error("invalid specification: {0}")]
    BadSpec(String),
    #[error("serialization supports at most 36 colors, database has {0}")]
    AlphabetTooWide(u16),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Recognized input shapes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IngestKind {
    /// Lines `src dst sign`, sign in {1, -1}: c = 3, all-zero reference.
    SignedEdges,
    /// Lines `user item rating`, rating in 1..=5: c = 6, all-zero reference.
    Ratings,
    /// `#alphabet …` header, then one record per line, first record is the
    /// reference.
    Sequences,
    /// Lines `src dst`: c = 2, all-zero reference.
    BinaryAdjacency,
}

impl FromStr for IngestKind {
    type Err = DatasetError;

    fn from_str(s: &str) -> Result<Self, DatasetError> {
        match s {
            "signed_edges" => Ok(IngestKind::SignedEdges),
            "ratings" => Ok(IngestKind::Ratings),
            "sequences" => Ok(IngestKind::Sequences),
            "binary_adjacency" => Ok(IngestKind::BinaryAdjacency),
            other => Err(DatasetError::BadSpec(format!("unknown format {other:?}"))),
        }
    }
}

/// Per-format knobs.
#[derive(Debug, Clone, Default)]
pub struct IngestOptions {
    /// String length; inferred as max id + 1 for edge-like formats when
    /// absent. Required for trailing isolated nodes.
    pub explicit_n: Option<usize>,
    /// String count; defaults to `n` for adjacency formats and to
    /// max user + 1 for ratings.
    pub explicit_g: Option<usize>,
    /// Sequences only: pad shorter records with a fresh color instead of
    /// rejecting ragged input.
    pub pad: bool,
}

#[derive(Debug, Clone)]
pub struct IngestFormat {
    pub kind: IngestKind,
    pub options: IngestOptions,
}

impl IngestFormat {
    pub fn new(kind: IngestKind) -> Self {
        IngestFormat {
            kind,
            options: IngestOptions::default(),
        }
    }
}

/// A record of ingestion-time padding, kept so reporting can exclude padded
/// positions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PadRecord {
    pub string_index: usize,
    /// Positions `original_len..n` were filled with the pad color.
    pub original_len: usize,
}

#[derive(Debug)]
pub struct Ingested {
    pub database: TargetDatabase,
    pub pads: Vec<PadRecord>,
}

pub fn ingest<R: BufRead>(fmt: &IngestFormat, source: R) -> Result<Ingested, DatasetError> {
    match fmt.kind {
        IngestKind::SignedEdges => ingest_edges(source, &fmt.options, true),
        IngestKind::BinaryAdjacency => ingest_edges(source, &fmt.options, false),
        IngestKind::Ratings => ingest_ratings(source, &fmt.options),
        IngestKind::Sequences => ingest_sequences(source, &fmt.options),
    }
}

fn is_skippable(line: &str) -> bool {
    let t = line.trim();
    t.is_empty() || t.starts_with('#')
}

fn parse_id(token: &str, line: usize) -> Result<u32, DatasetError> {
    token.parse::<u32>().map_err(|_| DatasetError::Parse {
        line,
        msg: format!("expected a node id, got {token:?}"),
    })
}

/// Signed edge lists and binary adjacency share a parser; the sign column is
/// simply absent (and the external `-1` remaps to internal color 2).
fn ingest_edges<R: BufRead>(
    source: R,
    opts: &IngestOptions,
    signed: bool,
) -> Result<Ingested, DatasetError> {
    let mut edges: Vec<(usize, u32, u32, Offset)> = Vec::new();
    let mut max_id: Option<u32> = None;
    for (idx, line) in source.lines().enumerate() {
        let line = line?;
        let lineno = idx + 1;
        if is_skippable(&line) {
            continue;
        }
        let mut parts = line.split_whitespace();
        let src = parse_id(parts.next().unwrap_or(""), lineno)?;
        let dst = parse_id(
            parts.next().ok_or(DatasetError::Parse {
                line: lineno,
                msg: "missing destination id".into(),
            })?,
            lineno,
        )?;
        let offset: Offset = if signed {
            match parts.next() {
                Some("1") => 1,
                Some("-1") => 2,
                other => {
                    return Err(DatasetError::Parse {
                        line: lineno,
                        msg: format!("expected sign 1 or -1, got {other:?}"),
                    })
                }
            }
        } else {
            1
        };
        if let Some(extra) = parts.next() {
            return Err(DatasetError::Parse {
                line: lineno,
                msg: format!("trailing field {extra:?}"),
            });
        }
        max_id = Some(max_id.map_or(src.max(dst), |m| m.max(src).max(dst)));
        edges.push((lineno, src, dst, offset));
    }
    let n = match (opts.explicit_n, max_id) {
        (Some(n), _) => n,
        (None, Some(m)) => m as usize + 1,
        (None, None) => return Err(DatasetError::CannotInferShape),
    };
    let g = opts.explicit_g.unwrap_or(n);
    let c: u16 = if signed { 3 } else { 2 };
    let alphabet = Alphabet::new(c)?;
    let mut rows: Vec<std::collections::BTreeMap<Position, Offset>> =
        vec![Default::default(); g];
    for &(lineno, src, dst, offset) in &edges {
        if src as usize >= g {
            return Err(DatasetError::Parse {
                line: lineno,
                msg: format!("source id {src} outside {g} strings"),
            });
        }
        if dst as usize >= n {
            return Err(DatasetError::Parse {
                line: lineno,
                msg: format!("destination id {dst} outside length {n}"),
            });
        }
        if let Some(&prev) = rows[src as usize].get(&dst) {
            if prev != offset {
                return Err(DatasetError::Conflict {
                    line: lineno,
                    msg: format!("edge ({src}, {dst}) has both signs"),
                });
            }
        } else {
            rows[src as usize].insert(dst, offset);
        }
    }
    let reference = ReferenceString::zeros(n)?;
    let strings = rows
        .into_iter()
        .map(|m| TargetString::from_diffs(m, n, alphabet))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Ingested {
        database: TargetDatabase::new(alphabet, reference, strings)?,
        pads: Vec::new(),
    })
}

fn ingest_ratings<R: BufRead>(source: R, opts: &IngestOptions) -> Result<Ingested, DatasetError> {
    let mut entries: Vec<(usize, u32, u32, Offset)> = Vec::new(); // (line, user, item, rating)
    let mut max_user: Option<u32> = None;
    let mut max_item: Option<u32> = None;
    for (idx, line) in source.lines().enumerate() {
        let line = line?;
        let lineno = idx + 1;
        if is_skippable(&line) {
            continue;
        }
        let mut parts = line.split_whitespace();
        let user = parse_id(parts.next().unwrap_or(""), lineno)?;
        let item = parse_id(
            parts.next().ok_or(DatasetError::Parse {
                line: lineno,
                msg: "missing item id".into(),
            })?,
            lineno,
        )?;
        let rating: u8 = parts
            .next()
            .and_then(|t| t.parse().ok())
            .filter(|r| (1..=5).contains(r))
            .ok_or(DatasetError::Parse {
                line: lineno,
                msg: "expected rating in 1..=5".into(),
            })?;
        max_user = Some(max_user.map_or(user, |m| m.max(user)));
        max_item = Some(max_item.map_or(item, |m| m.max(item)));
        entries.push((lineno, user, item, rating));
    }
    let n = match (opts.explicit_n, max_item) {
        (Some(n), _) => n,
        (None, Some(m)) => m as usize + 1,
        (None, None) => return Err(DatasetError::CannotInferShape),
    };
    let g = match (opts.explicit_g, max_user) {
        (Some(g), _) => g,
        (None, Some(m)) => m as usize + 1,
        (None, None) => return Err(DatasetError::CannotInferShape),
    };
    let alphabet = Alphabet::new(6)?;
    let mut rows: Vec<std::collections::BTreeMap<Position, Offset>> =
        vec![Default::default(); g];
    for (lineno, user, item, rating) in entries {
        if user as usize >= g {
            return Err(DatasetError::Parse {
                line: lineno,
                msg: format!("user id {user} outside {g} strings"),
            });
        }
        if item as usize >= n {
            return Err(DatasetError::Parse {
                line: lineno,
                msg: format!("item id {item} outside length {n}"),
            });
        }
        if let Some(&prev) = rows[user as usize].get(&item) {
            if prev != rating {
                return Err(DatasetError::Conflict {
                    line: lineno,
                    msg: format!("pair ({user}, {item}) rated twice with different values"),
                });
            }
        } else {
            // Rating k is offset k over the all-zero reference.
            rows[user as usize].insert(item, rating);
        }
    }
    let reference = ReferenceString::zeros(n)?;
    let strings = rows
        .into_iter()
        .map(|m| TargetString::from_diffs(m, n, alphabet))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Ingested {
        database: TargetDatabase::new(alphabet, reference, strings)?,
        pads: Vec::new(),
    })
}

fn ingest_sequences<R: BufRead>(
    source: R,
    opts: &IngestOptions,
) -> Result<Ingested, DatasetError> {
    let mut lines = source.lines().enumerate();
    // Header: first non-empty line must declare the alphabet.
    let symbols: Vec<char> = loop {
        let Some((_, line)) = lines.next() else {
            return Err(DatasetError::MissingAlphabet);
        };
        let line = line?;
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        let Some(rest) = t.strip_prefix("#alphabet") else {
            return Err(DatasetError::MissingAlphabet);
        };
        let symbols: Vec<char> = rest.trim().chars().filter(|c| !c.is_whitespace()).collect();
        if symbols.len() < 2 {
            return Err(DatasetError::BadSpec(
                "alphabet needs at least 2 symbols".into(),
            ));
        }
        break symbols;
    };
    let lookup = |ch: char, line: usize| -> Result<Symbol, DatasetError> {
        symbols
            .iter()
            .position(|&s| s == ch)
            .map(|p| p as Symbol)
            .ok_or(DatasetError::UnknownSymbol { line, symbol: ch })
    };
    let mut reference: Option<(usize, Vec<Symbol>)> = None;
    let mut records: Vec<(usize, Vec<Symbol>)> = Vec::new();
    for (idx, line) in lines {
        let line = line?;
        let lineno = idx + 1;
        if is_skippable(&line) {
            continue;
        }
        let decoded = line
            .trim()
            .chars()
            .map(|ch| lookup(ch, lineno))
            .collect::<Result<Vec<Symbol>, _>>()?;
        if reference.is_none() {
            reference = Some((lineno, decoded));
        } else {
            records.push((lineno, decoded));
        }
    }
    let Some((_, reference_symbols)) = reference else {
        return Err(DatasetError::CannotInferShape);
    };
    if records.is_empty() {
        return Err(DatasetError::CannotInferShape);
    }
    let n = reference_symbols.len();
    let base_c = symbols.len() as u16;
    let pad_symbol = base_c as Symbol; // the fresh color, if needed
    let mut pads = Vec::new();
    let mut padded_records = Vec::with_capacity(records.len());
    for (i, (lineno, mut rec)) in records.into_iter().enumerate() {
        if rec.len() > n {
            return Err(DatasetError::TooLong {
                line: lineno,
                expected: n,
                got: rec.len(),
            });
        }
        if rec.len() < n {
            if !opts.pad {
                return Err(DatasetError::Ragged {
                    line: lineno,
                    expected: n,
                    got: rec.len(),
                });
            }
            pads.push(PadRecord {
                string_index: i,
                original_len: rec.len(),
            });
            rec.resize(n, pad_symbol);
        }
        padded_records.push(rec);
    }
    let c = if pads.is_empty() { base_c } else { base_c + 1 };
    let alphabet = Alphabet::new(c)?;
    let reference = ReferenceString::new(reference_symbols, alphabet)?;
    let strings = padded_records
        .into_iter()
        .map(|rec| TargetString::from_dense(&rec, &reference, alphabet))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Ingested {
        database: TargetDatabase::new(alphabet, reference, strings)?,
        pads,
    })
}

/// Distance profile for synthetic databases.
#[derive(Debug, Clone, PartialEq)]
pub enum DistanceDistribution {
    Constant(u64),
    UniformRange { lo: u64, hi: u64 },
    /// Weighted mixture of uniform integer ranges, one per mode.
    MixtureOfModes { modes: Vec<Mode> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mode {
    pub weight: f64,
    pub lo: u64,
    pub hi: u64,
}

impl DistanceDistribution {
    pub fn validate(&self) -> Result<(), DatasetError> {
        let bad = |msg: &str| Err(DatasetError::BadSpec(msg.into()));
        match self {
            DistanceDistribution::Constant(_) => Ok(()),
            DistanceDistribution::UniformRange { lo, hi } => {
                if lo > hi {
                    return bad("uniform range has lo > hi");
                }
                Ok(())
            }
            DistanceDistribution::MixtureOfModes { modes } => {
                if modes.is_empty() {
                    return bad("mixture needs at least one mode");
                }
                let mut total = 0.0;
                for m in modes {
                    if m.lo > m.hi {
                        return bad("mixture mode has lo > hi");
                    }
                    if !(m.weight > 0.0 && m.weight.is_finite()) {
                        return bad("mixture weights must be positive");
                    }
                    total += m.weight;
                }
                if total <= 0.0 {
                    return bad("mixture weights must sum to a positive value");
                }
                Ok(())
            }
        }
    }

    pub fn sample(&self, rng: &mut SubstreamRng) -> u64 {
        match self {
            DistanceDistribution::Constant(k) => *k,
            DistanceDistribution::UniformRange { lo, hi } => rng.uniform_in(*lo, *hi),
            DistanceDistribution::MixtureOfModes { modes } => {
                let total: f64 = modes.iter().map(|m| m.weight).sum();
                let u = rng.next_u64() as f64 / (u64::MAX as f64 + 1.0);
                let mut acc = 0.0;
                for m in modes {
                    acc += m.weight / total;
                    if u < acc {
                        return rng.uniform_in(m.lo, m.hi);
                    }
                }
                let last = modes.last().expect("validated non-empty");
                rng.uniform_in(last.lo, last.hi)
            }
        }
    }

    /// `P(X <= x)`, in closed form.
    pub fn cdf(&self, x: u64) -> f64 {
        match self {
            DistanceDistribution::Constant(k) => {
                if x >= *k {
                    1.0
                } else {
                    0.0
                }
            }
            DistanceDistribution::UniformRange { lo, hi } => range_cdf(x, *lo, *hi),
            DistanceDistribution::MixtureOfModes { modes } => {
                let total: f64 = modes.iter().map(|m| m.weight).sum();
                modes
                    .iter()
                    .map(|m| m.weight / total * range_cdf(x, m.lo, m.hi))
                    .sum()
            }
        }
    }

    /// Smallest `x` with `CDF(x) >= q`.
    pub fn quantile(&self, q: f64) -> u64 {
        let max = self.max_value();
        (0..=max).find(|&x| self.cdf(x) >= q).unwrap_or(max)
    }

    pub fn max_value(&self) -> u64 {
        match self {
            DistanceDistribution::Constant(k) => *k,
            DistanceDistribution::UniformRange { hi, .. } => *hi,
            DistanceDistribution::MixtureOfModes { modes } => {
                modes.iter().map(|m| m.hi).max().unwrap_or(0)
            }
        }
    }
}

fn range_cdf(x: u64, lo: u64, hi: u64) -> f64 {
    if x < lo {
        0.0
    } else if x >= hi {
        1.0
    } else {
        (x - lo + 1) as f64 / (hi - lo + 1) as f64
    }
}

/// Spec grammar: `constant:K`, `uniform:LO..HI`, or
/// `mixture:W@LO..HI,W@LO..HI,…`.
impl FromStr for DistanceDistribution {
    type Err = DatasetError;

    fn from_str(s: &str) -> Result<Self, DatasetError> {
        let bad = |msg: String| DatasetError::BadSpec(msg);
        let (kind, rest) = s
            .split_once(':')
            .ok_or_else(|| bad(format!("distance spec {s:?} needs kind:params")))?;
        let parse_range = |txt: &str| -> Result<(u64, u64), DatasetError> {
            let (lo, hi) = txt
                .split_once("..")
                .ok_or_else(|| bad(format!("range {txt:?} needs LO..HI")))?;
            Ok((
                lo.parse().map_err(|_| bad(format!("bad range start {lo:?}")))?,
                hi.parse().map_err(|_| bad(format!("bad range end {hi:?}")))?,
            ))
        };
        let dist = match kind {
            "constant" => DistanceDistribution::Constant(
                rest.parse()
                    .map_err(|_| bad(format!("bad constant {rest:?}")))?,
            ),
            "uniform" => {
                let (lo, hi) = parse_range(rest)?;
                DistanceDistribution::UniformRange { lo, hi }
            }
            "mixture" => {
                let modes = rest
                    .split(',')
                    .map(|part| {
                        let (w, range) = part
                            .split_once('@')
                            .ok_or_else(|| bad(format!("mode {part:?} needs WEIGHT@LO..HI")))?;
                        let weight: f64 =
                            w.parse().map_err(|_| bad(format!("bad weight {w:?}")))?;
                        let (lo, hi) = parse_range(range)?;
                        Ok(Mode { weight, lo, hi })
                    })
                    .collect::<Result<Vec<_>, DatasetError>>()?;
                DistanceDistribution::MixtureOfModes { modes }
            }
            other => return Err(bad(format!("unknown distance kind {other:?}"))),
        };
        dist.validate()?;
        Ok(dist)
    }
}

#[derive(Debug, Clone)]
pub struct SynthSpec {
    pub g: usize,
    pub n: usize,
    pub c: u16,
    pub dist: DistanceDistribution,
    pub seed: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SynthReport {
    /// Sampled distances that exceeded `n` and were clamped.
    pub clamped: usize,
}

/// Generate a synthetic database: all-zero reference; per string, a distance
/// drawn from the profile, that many distinct positions chosen uniformly,
/// each with a uniform nonzero offset. String `i` is driven by substream
/// `(seed, i)`, so output is deterministic in the seed.
pub fn synth(spec: &SynthSpec) -> Result<(TargetDatabase, SynthReport), DatasetError> {
    if spec.g == 0 || spec.n == 0 {
        return Err(DatasetError::BadSpec("need g >= 1 and n >= 1".into()));
    }
    spec.dist.validate()?;
    let alphabet = Alphabet::new(spec.c)?;
    let reference = ReferenceString::zeros(spec.n)?;
    let mut report = SynthReport::default();
    let mut strings = Vec::with_capacity(spec.g);
    for i in 0..spec.g {
        let mut rng = SubstreamRng::new(spec.seed, Domain::SynthString, i as u64);
        let mut distance = spec.dist.sample(&mut rng);
        if distance > spec.n as u64 {
            distance = spec.n as u64;
            report.clamped += 1;
        }
        let positions = rng.sample_distinct(spec.n as u64, distance);
        let diffs: Vec<(Position, Offset)> = positions
            .into_iter()
            .map(|j| {
                let l = 1 + rng.uniform_below(alphabet.offsets() as u64);
                (j as Position, l as Offset)
            })
            .collect();
        strings.push(TargetString::from_diffs(diffs, spec.n, alphabet)?);
    }
    Ok((
        TargetDatabase::new(alphabet, reference, strings)?,
        report,
    ))
}

/// One stats CSV row: `name,g,n,c,d_max,d_mean,d_median`.
pub fn emit_stats<W: Write>(
    db: &TargetDatabase,
    name: &str,
    sink: &mut W,
) -> Result<DatabaseStats, DatasetError> {
    let stats = compute_stats(db);
    writeln!(
        sink,
        "{},{},{},{},{},{:?},{}",
        name, stats.g, stats.n, stats.c, stats.d_max, stats.d_mean, stats.d_median
    )?;
    Ok(stats)
}

const SERIAL_SYMBOLS: &[u8] = b"0123456789ABCDEFGHIJKLMNOPQRSTUVWXYZ";

/// Serialize a database in the sequences format (alphabet header, reference,
/// then one dense record per string). Inverse of ingesting with
/// [`IngestKind::Sequences`].
pub fn write_sequences<W: Write>(db: &TargetDatabase, sink: &mut W) -> Result<(), DatasetError> {
    let c = db.alphabet().size();
    if c as usize > SERIAL_SYMBOLS.len() {
        return Err(DatasetError::AlphabetTooWide(c));
    }
    let glyphs = &SERIAL_SYMBOLS[..c as usize];
    sink.write_all(b"#alphabet ")?;
    sink.write_all(glyphs)?;
    sink.write_all(b"\n")?;
    let encode = |symbols: &[Symbol], out: &mut Vec<u8>| {
        out.clear();
        out.extend(symbols.iter().map(|&s| glyphs[s as usize]));
        out.push(b'\n');
    };
    let mut buf = Vec::with_capacity(db.string_len() + 1);
    encode(db.reference().symbols(), &mut buf);
    sink.write_all(&buf)?;
    for x in db.strings() {
        let dense = x.materialize(db.reference(), db.alphabet())?;
        encode(&dense, &mut buf);
        sink.write_all(&buf)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ingest_str(fmt: &IngestFormat, text: &str) -> Result<Ingested, DatasetError> {
        ingest(fmt, text.as_bytes())
    }

    #[test]
    fn signed_edges_toy_example() {
        let fmt = IngestFormat::new(IngestKind::SignedEdges);
        let out = ingest_str(&fmt, "0 1 1\n1 0 -1\n").unwrap();
        let db = &out.database;
        assert_eq!((db.len(), db.string_len()), (2, 2));
        assert_eq!(db.alphabet().size(), 3);
        assert_eq!(db.strings()[0].offset_at(1), Some(1));
        assert_eq!(db.strings()[1].offset_at(0), Some(2));
        let mut csv = Vec::new();
        let stats = emit_stats(db, "toy", &mut csv).unwrap();
        assert_eq!(String::from_utf8(csv).unwrap(), "toy,2,2,3,1,1.0,1\n");
        assert_eq!(stats.d_max, 1);
    }

    #[test]
    fn signed_edges_conflicting_sign_is_an_error() {
        let fmt = IngestFormat::new(IngestKind::SignedEdges);
        let err = ingest_str(&fmt, "0 1 1\n0 1 -1\n").unwrap_err();
        assert!(matches!(err, DatasetError::Conflict { .. }), "{err}");
        // Same-sign duplicates are fine.
        assert!(ingest_str(&fmt, "0 1 1\n0 1 1\n").is_ok());
    }

    #[test]
    fn signed_edges_comments_and_explicit_n() {
        let mut fmt = IngestFormat::new(IngestKind::SignedEdges);
        fmt.options.explicit_n = Some(5);
        let out = ingest_str(&fmt, "# trust graph\n0 1 1\n").unwrap();
        assert_eq!(out.database.string_len(), 5);
        assert_eq!(out.database.len(), 5);
    }

    #[test]
    fn ratings_empty_with_declared_shape() {
        let mut fmt = IngestFormat::new(IngestKind::Ratings);
        fmt.options.explicit_n = Some(3);
        fmt.options.explicit_g = Some(1);
        let out = ingest_str(&fmt, "").unwrap();
        assert_eq!(out.database.len(), 1);
        assert_eq!(out.database.strings()[0].distance(), 0);
        assert_eq!(out.database.alphabet().size(), 6);
    }

    #[test]
    fn ratings_rows_store_ratings_as_offsets() {
        let fmt = IngestFormat::new(IngestKind::Ratings);
        let out = ingest_str(&fmt, "0 0 5\n0 2 1\n1 1 3\n").unwrap();
        let db = &out.database;
        assert_eq!(db.string_len(), 3);
        assert_eq!(db.len(), 2);
        assert_eq!(db.strings()[0].offset_at(0), Some(5));
        assert_eq!(db.strings()[0].offset_at(2), Some(1));
        assert_eq!(db.strings()[1].offset_at(1), Some(3));
    }

    #[test]
    fn ratings_rejects_out_of_range() {
        let fmt = IngestFormat::new(IngestKind::Ratings);
        assert!(matches!(
            ingest_str(&fmt, "0 0 6\n"),
            Err(DatasetError::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn sequences_roundtrip_with_equal_targets() {
        let fmt = IngestFormat::new(IngestKind::Sequences);
        let out = ingest_str(&fmt, "#alphabet ACGT\nACGTA\nACGTA\nACGTA\n").unwrap();
        let db = &out.database;
        assert_eq!(db.len(), 2);
        assert!(db.strings().iter().all(|x| x.distance() == 0));
        assert_eq!(db.alphabet().size(), 4);
    }

    #[test]
    fn sequences_diffs_are_modular_offsets() {
        let fmt = IngestFormat::new(IngestKind::Sequences);
        // Reference ACGT; target with T where reference has A: offset 3.
        let out = ingest_str(&fmt, "#alphabet ACGT\nAAAA\nTAAA\n").unwrap();
        assert_eq!(out.database.strings()[0].offset_at(0), Some(3));
    }

    #[test]
    fn sequences_unknown_symbol_reports_line() {
        let fmt = IngestFormat::new(IngestKind::Sequences);
        let err = ingest_str(&fmt, "#alphabet ACGT\nACGT\nACXT\n").unwrap_err();
        assert!(matches!(err, DatasetError::UnknownSymbol { line: 3, symbol: 'X' }), "{err}");
    }

    #[test]
    fn sequences_ragged_rejected_without_padding() {
        let fmt = IngestFormat::new(IngestKind::Sequences);
        let err = ingest_str(&fmt, "#alphabet AC\nACAC\nAC\n").unwrap_err();
        assert!(matches!(err, DatasetError::Ragged { line: 3, .. }), "{err}");
    }

    #[test]
    fn sequences_padding_adds_a_fresh_color() {
        let mut fmt = IngestFormat::new(IngestKind::Sequences);
        fmt.options.pad = true;
        let out = ingest_str(&fmt, "#alphabet AC\nACAC\nAC\nCCCC\n").unwrap();
        let db = &out.database;
        // Base alphabet has 2 symbols; the pad color bumps c to 3.
        assert_eq!(db.alphabet().size(), 3);
        assert_eq!(out.pads, vec![PadRecord { string_index: 0, original_len: 2 }]);
        // The padded positions hold symbol 2 = pad color.
        let dense = db.strings()[0]
            .materialize(db.reference(), db.alphabet())
            .unwrap();
        assert_eq!(dense, vec![0, 1, 2, 2]);
    }

    #[test]
    fn synth_constant_zero_copies_reference() {
        let spec = SynthSpec {
            g: 5,
            n: 20,
            c: 3,
            dist: DistanceDistribution::Constant(0),
            seed: 1,
        };
        let (db, report) = synth(&spec).unwrap();
        assert_eq!(report.clamped, 0);
        assert!(db.strings().iter().all(|x| x.distance() == 0));
    }

    #[test]
    fn synth_constant_distance_shows_in_stats() {
        let spec = SynthSpec {
            g: 10,
            n: 100,
            c: 3,
            dist: DistanceDistribution::Constant(5),
            seed: 2,
        };
        let (db, _) = synth(&spec).unwrap();
        let stats = compute_stats(&db);
        assert_eq!((stats.d_max, stats.d_median), (5, 5));
        assert_eq!(stats.d_mean, 5.0);
        let mut csv = Vec::new();
        emit_stats(&db, "fixed", &mut csv).unwrap();
        assert_eq!(String::from_utf8(csv).unwrap(), "fixed,10,100,3,5,5.0,5\n");
    }

    #[test]
    fn synth_is_deterministic_and_clamps() {
        let spec = SynthSpec {
            g: 4,
            n: 10,
            c: 4,
            dist: DistanceDistribution::Constant(50),
            seed: 9,
        };
        let (db1, r1) = synth(&spec).unwrap();
        let (db2, _) = synth(&spec).unwrap();
        assert_eq!(r1.clamped, 4);
        for (a, b) in db1.strings().iter().zip(db2.strings()) {
            assert_eq!(a, b);
            assert_eq!(a.distance(), 10);
        }
    }

    #[test]
    fn mixture_quantiles_match_samples() {
        let dist: DistanceDistribution = "mixture:0.72@1..18,0.20@19..100,0.08@101..378"
            .parse()
            .unwrap();
        // Closed-form median is 13 by construction.
        assert_eq!(dist.quantile(0.5), 13);
        assert_eq!(dist.max_value(), 378);
        let spec = SynthSpec {
            g: 2000,
            n: 10_000,
            c: 3,
            dist: dist.clone(),
            seed: 3,
        };
        let (db, _) = synth(&spec).unwrap();
        let stats = compute_stats(&db);
        // Sampling tolerance around the analytic quantiles.
        assert!(
            (stats.d_median as i64 - 13).abs() <= 2,
            "median {}",
            stats.d_median
        );
        assert!(stats.d_max <= 378);
        assert!(stats.d_max >= dist.quantile(0.99));
    }

    #[test]
    fn distance_spec_parsing() {
        assert_eq!(
            "constant:13".parse::<DistanceDistribution>().unwrap(),
            DistanceDistribution::Constant(13)
        );
        assert_eq!(
            "uniform:5..50".parse::<DistanceDistribution>().unwrap(),
            DistanceDistribution::UniformRange { lo: 5, hi: 50 }
        );
        assert!("mixture:".parse::<DistanceDistribution>().is_err());
        assert!("uniform:9..2".parse::<DistanceDistribution>().is_err());
        assert!("gauss:3".parse::<DistanceDistribution>().is_err());
    }

    #[test]
    fn serialize_then_ingest_roundtrips() {
        let spec = SynthSpec {
            g: 8,
            n: 60,
            c: 3,
            dist: DistanceDistribution::UniformRange { lo: 0, hi: 9 },
            seed: 4,
        };
        let (db, _) = synth(&spec).unwrap();
        let mut file = Vec::new();
        write_sequences(&db, &mut file).unwrap();
        let fmt = IngestFormat::new(IngestKind::Sequences);
        let back = ingest(&fmt, &file[..]).unwrap();
        assert_eq!(back.database.len(), db.len());
        assert_eq!(back.database.alphabet().size(), db.alphabet().size());
        for (a, b) in back.database.strings().iter().zip(db.strings()) {
            assert_eq!(a, b);
        }
        // Stats match exactly after the roundtrip.
        let mut s1 = Vec::new();
        let mut s2 = Vec::new();
        emit_stats(&db, "x", &mut s1).unwrap();
        emit_stats(&back.database, "x", &mut s2).unwrap();
        assert_eq!(s1, s2);
    }
}
