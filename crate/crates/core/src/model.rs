//! Domain types shared by every module: alphabets, reference strings, sparse
//! target strings, databases, and their summary statistics.
//!
//! Database strings are stored as sparse offset maps against the reference
//! string `R`: a string with no recorded diffs *is* `R`. Real string/vector
//! databases are sparse and lengths reach tens of millions of positions, so
//! dense per-string storage is off the table.

use std::collections::BTreeMap;

use thiserror::Error;

/// A symbol ("color") in `0..c-1`.
pub type Symbol = u8;

/// A 0-based string position.
pub type Position = u32;

/// A color offset in `1..=c-1`: position `j` holds `(R[j] + offset) mod c`.
pub type Offset = u8;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ModelError {
    #[error("alphabet must have at least 2 colors, got {0}")]
    AlphabetTooSmall(u16),
    #[error("alphabet size {0} exceeds the supported maximum of 256")]
    AlphabetTooLarge(u32),
    #[error("reference string must be non-empty")]
    EmptyReference,
    #[error("symbol {symbol} at position {position} is outside alphabet of size {c}")]
    SymbolOutOfRange { symbol: u32, position: u64, c: u16 },
    #[error("diff position {position} is outside string length {n}")]
    PositionOutOfRange { position: u64, n: u64 },
    #[error("diff offset {offset} at position {position} is outside 1..={max}")]
    OffsetOutOfRange { offset: u16, position: u64, max: u16 },
    #[error("string {index} has length {len}, database length is {n}")]
    LengthMismatch { index: usize, len: u64, n: u64 },
    #[error("database must contain at least one string")]
    EmptyDatabase,
}

/// Contiguous integer alphabet `{0, .., c-1}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Alphabet {
    c: u16,
}

impl Alphabet {
    /// `c >= 2`; single-color databases are trivially known.
    pub fn new(c: u16) -> Result<Self, ModelError> {
        if c < 2 {
            return Err(ModelError::AlphabetTooSmall(c));
        }
        if c > 256 {
            return Err(ModelError::AlphabetTooLarge(c as u32));
        }
        Ok(Alphabet { c })
    }

    #[inline]
    pub fn size(&self) -> u16 {
        self.c
    }

    #[inline]
    pub fn contains(&self, s: Symbol) -> bool {
        (s as u16) < self.c
    }

    /// Number of nonzero color offsets, `c - 1`.
    #[inline]
    pub fn offsets(&self) -> u16 {
        self.c - 1
    }

    /// `(s + offset) mod c`.
    #[inline]
    pub fn shift(&self, s: Symbol, offset: Offset) -> Symbol {
        (((s as u16) + (offset as u16)) % self.c) as Symbol
    }
}

/// The public reference string `R` all database strings are expressed against.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReferenceString {
    symbols: Vec<Symbol>,
}

impl ReferenceString {
    pub fn new(symbols: Vec<Symbol>, alphabet: Alphabet) -> Result<Self, ModelError> {
        if symbols.is_empty() {
            return Err(ModelError::EmptyReference);
        }
        for (j, &s) in symbols.iter().enumerate() {
            if !alphabet.contains(s) {
                return Err(ModelError::SymbolOutOfRange {
                    symbol: s as u32,
                    position: j as u64,
                    c: alphabet.size(),
                });
            }
        }
        Ok(ReferenceString { symbols })
    }

    /// All-zero reference of length `n` (the usual choice for adjacency and
    /// rating databases).
    pub fn zeros(n: usize) -> Result<Self, ModelError> {
        if n == 0 {
            return Err(ModelError::EmptyReference);
        }
        Ok(ReferenceString {
            symbols: vec![0; n],
        })
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        false // construction rejects empty strings
    }

    #[inline]
    pub fn symbol(&self, j: Position) -> Symbol {
        self.symbols[j as usize]
    }

    #[inline]
    pub fn symbols(&self) -> &[Symbol] {
        &self.symbols
    }
}

/// One database string, stored as its differences from the reference:
/// `diffs[j] = l` means `X[j] = (R[j] + l) mod c`; absent positions match `R`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TargetString {
    diffs: BTreeMap<Position, Offset>,
}

impl TargetString {
    /// A string equal to the reference.
    pub fn equal_to_reference() -> Self {
        TargetString::default()
    }

    pub fn from_diffs<I: IntoIterator<Item = (Position, Offset)>>(
        diffs: I,
        n: usize,
        alphabet: Alphabet,
    ) -> Result<Self, ModelError> {
        let mut map = BTreeMap::new();
        for (j, l) in diffs {
            if j as usize >= n {
                return Err(ModelError::PositionOutOfRange {
                    position: j as u64,
                    n: n as u64,
                });
            }
            if l == 0 || l as u16 > alphabet.offsets() {
                return Err(ModelError::OffsetOutOfRange {
                    offset: l as u16,
                    position: j as u64,
                    max: alphabet.offsets(),
                });
            }
            map.insert(j, l);
        }
        Ok(TargetString { diffs: map })
    }

    /// Number of positions where this string differs from the reference.
    #[inline]
    pub fn distance(&self) -> usize {
        self.diffs.len()
    }

    #[inline]
    pub fn offset_at(&self, j: Position) -> Option<Offset> {
        self.diffs.get(&j).copied()
    }

    #[inline]
    pub fn diffs(&self) -> impl Iterator<Item = (Position, Offset)> + '_ {
        self.diffs.iter().map(|(&j, &l)| (j, l))
    }

    /// The defect positions for one color offset: `{ j : X[j] = (R[j]+l) mod c }`.
    pub fn defects_with_offset(&self, l: Offset) -> Vec<Position> {
        self.diffs
            .iter()
            .filter(|&(_, &m)| m == l)
            .map(|(&j, _)| j)
            .collect()
    }

    /// All defect positions (the string's difference set `D`).
    pub fn defect_positions(&self) -> Vec<Position> {
        self.diffs.keys().copied().collect()
    }

    /// Expand into a dense symbol sequence against `r`.
    pub fn materialize(
        &self,
        r: &ReferenceString,
        alphabet: Alphabet,
    ) -> Result<Vec<Symbol>, ModelError> {
        let n = r.len();
        let mut out = r.symbols().to_vec();
        for (&j, &l) in &self.diffs {
            if j as usize >= n {
                return Err(ModelError::PositionOutOfRange {
                    position: j as u64,
                    n: n as u64,
                });
            }
            if l == 0 || l as u16 > alphabet.offsets() {
                return Err(ModelError::OffsetOutOfRange {
                    offset: l as u16,
                    position: j as u64,
                    max: alphabet.offsets(),
                });
            }
            out[j as usize] = alphabet.shift(r.symbol(j), l);
        }
        Ok(out)
    }

    /// Re-sparsify a dense string against `r` (inverse of [`materialize`]).
    pub fn from_dense(
        dense: &[Symbol],
        r: &ReferenceString,
        alphabet: Alphabet,
    ) -> Result<Self, ModelError> {
        if dense.len() != r.len() {
            return Err(ModelError::LengthMismatch {
                index: 0,
                len: dense.len() as u64,
                n: r.len() as u64,
            });
        }
        let c = alphabet.size();
        let mut diffs = BTreeMap::new();
        for (j, &s) in dense.iter().enumerate() {
            if !alphabet.contains(s) {
                return Err(ModelError::SymbolOutOfRange {
                    symbol: s as u32,
                    position: j as u64,
                    c,
                });
            }
            let rj = r.symbol(j as Position);
            if s != rj {
                let l = ((s as u16 + c - rj as u16) % c) as Offset;
                diffs.insert(j as Position, l);
            }
        }
        Ok(TargetString { diffs })
    }
}

/// The database under attack: `g` strings over one alphabet, sharing the
/// reference. Immutable after construction; share freely across workers.
#[derive(Debug, Clone)]
pub struct TargetDatabase {
    alphabet: Alphabet,
    reference: ReferenceString,
    strings: Vec<TargetString>,
}

impl TargetDatabase {
    pub fn new(
        alphabet: Alphabet,
        reference: ReferenceString,
        strings: Vec<TargetString>,
    ) -> Result<Self, ModelError> {
        if strings.is_empty() {
            return Err(ModelError::EmptyDatabase);
        }
        let n = reference.len();
        for (i, x) in strings.iter().enumerate() {
            for (j, l) in x.diffs() {
                if j as usize >= n {
                    return Err(ModelError::PositionOutOfRange {
                        position: j as u64,
                        n: n as u64,
                    });
                }
                if l == 0 || l as u16 > alphabet.offsets() {
                    return Err(ModelError::OffsetOutOfRange {
                        offset: l as u16,
                        position: j as u64,
                        max: alphabet.offsets(),
                    });
                }
            }
            let _ = i;
        }
        Ok(TargetDatabase {
            alphabet,
            reference,
            strings,
        })
    }

    #[inline]
    pub fn alphabet(&self) -> Alphabet {
        self.alphabet
    }

    #[inline]
    pub fn reference(&self) -> &ReferenceString {
        &self.reference
    }

    #[inline]
    pub fn strings(&self) -> &[TargetString] {
        &self.strings
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.strings.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        false // construction rejects empty databases
    }

    #[inline]
    pub fn string_len(&self) -> usize {
        self.reference.len()
    }

    /// Maximum per-string distance from the reference (the sparsity bound `d`).
    pub fn max_distance(&self) -> usize {
        self.strings.iter().map(|x| x.distance()).max().unwrap_or(0)
    }
}

/// Summary statistics of a database's distances from the reference.
#[derive(Debug, Clone, PartialEq)]
pub struct DatabaseStats {
    pub g: u64,
    pub n: u64,
    pub c: u16,
    pub d_max: u64,
    pub d_mean: f64,
    pub d_median: u64,
}

/// Distance statistics over the database. The median of an even count is the
/// lower of the two middle values.
pub fn compute_stats(db: &TargetDatabase) -> DatabaseStats {
    let mut distances: Vec<u64> = db.strings().iter().map(|x| x.distance() as u64).collect();
    distances.sort_unstable();
    let g = distances.len() as u64;
    let d_max = *distances.last().expect("database is non-empty");
    let d_mean = distances.iter().sum::<u64>() as f64 / g as f64;
    let d_median = distances[(g as usize - 1) / 2]; // lower median
    DatabaseStats {
        g,
        n: db.string_len() as u64,
        c: db.alphabet().size(),
        d_max,
        d_mean,
        d_median,
    }
}
