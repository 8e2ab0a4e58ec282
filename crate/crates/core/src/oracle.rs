//! The simulated data owner. Answers each query with the per-string matching
//! score; for binary databases it can also answer with a single overlap bit.
//!
//! The oracle is stateless and deterministic and never refuses queries
//! (budget accounting is the caller's concern). It answers in the clear, but
//! callers see only what a score-revealing comparison protocol would leak:
//! the response vector, nothing else.
//!
//! Scores are computed through the sparse representations (a query that
//! shifts `w` positions against a string with `d` diffs costs `O(w log d)`,
//! not `O(n)`); the dense definition — count positions where the query equals
//! the materialized string — is kept as the reference path and cross-checked
//! in tests.

use std::sync::Arc;

use thiserror::Error;

use crate::model::{Offset, Position, ReferenceString, Symbol, TargetDatabase, TargetString};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum OracleError {
    #[error("query length {got} does not match database string length {expected}")]
    LengthMismatch { expected: u64, got: u64 },
    #[error("query symbol {symbol} at position {position} outside alphabet of size {c}")]
    SymbolOutOfRange { symbol: u16, position: u64, c: u16 },
    #[error("query offset {offset} invalid for alphabet of size {c}")]
    OffsetOutOfRange { offset: u16, c: u16 },
    #[error("query position {position} outside string length {n}")]
    PositionOutOfRange { position: u64, n: u64 },
    #[error("string index {index} outside database of {g} strings")]
    BadStringIndex { index: usize, g: usize },
    #[error("overlap-bit mode requires c = 2 and an all-zero reference")]
    ModeError,
}

#[derive(Debug, Clone)]
enum QueryRepr {
    /// Explicit symbol sequence.
    Dense(Vec<Symbol>),
    /// The reference with `(R[j] + offset) mod c` written at each listed
    /// position. Sorted positions. An empty list is the reference query.
    Shifted { positions: Arc<Vec<Position>>, offset: Offset },
}

/// A single comparison query `Q`.
#[derive(Debug, Clone)]
pub struct QueryString {
    n: u64,
    repr: QueryRepr,
}

impl QueryString {
    pub fn dense(symbols: Vec<Symbol>) -> Self {
        QueryString {
            n: symbols.len() as u64,
            repr: QueryRepr::Dense(symbols),
        }
    }

    /// Query equal to the reference except shifted by `offset` at `positions`
    /// (which must be sorted and in-range for the target database).
    pub fn shifted(n: u64, positions: Arc<Vec<Position>>, offset: Offset) -> Self {
        debug_assert!(positions.windows(2).all(|w| w[0] < w[1]));
        QueryString {
            n,
            repr: QueryRepr::Shifted { positions, offset },
        }
    }

    /// The reference query: no shifted positions at all.
    pub fn reference(n: u64) -> Self {
        QueryString::shifted(n, Arc::new(Vec::new()), 1)
    }

    pub fn len(&self) -> u64 {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Expand to a dense symbol sequence against `r`.
    pub fn materialize(&self, r: &ReferenceString, c: u16) -> Vec<Symbol> {
        match &self.repr {
            QueryRepr::Dense(symbols) => symbols.clone(),
            QueryRepr::Shifted { positions, offset } => {
                let mut out = r.symbols().to_vec();
                for &j in positions.iter() {
                    out[j as usize] =
                        (((r.symbol(j) as u16) + (*offset as u16)) % c) as Symbol;
                }
                out
            }
        }
    }
}

/// Scores of one query against every database string.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResponseVector {
    pub scores: Vec<u64>,
}

/// Number of positions where `q` equals `x` materialized against `r`.
pub fn score(
    q: &QueryString,
    x: &TargetString,
    r: &ReferenceString,
    c: u16,
) -> Result<u64, OracleError> {
    let n = r.len() as u64;
    if q.len() != n {
        return Err(OracleError::LengthMismatch { expected: n, got: q.len() });
    }
    match &q.repr {
        QueryRepr::Dense(symbols) => {
            for (j, &s) in symbols.iter().enumerate() {
                if s as u16 >= c {
                    return Err(OracleError::SymbolOutOfRange {
                        symbol: s as u16,
                        position: j as u64,
                        c,
                    });
                }
            }
            let mut matches = 0u64;
            let mut diffs = x.diffs().peekable();
            for (j, &s) in symbols.iter().enumerate() {
                let xj = match diffs.peek() {
                    Some(&(pos, l)) if pos as usize == j => {
                        diffs.next();
                        (((r.symbol(pos) as u16) + (l as u16)) % c) as Symbol
                    }
                    _ => r.symbol(j as Position),
                };
                if s == xj {
                    matches += 1;
                }
            }
            Ok(matches)
        }
        QueryRepr::Shifted { positions, offset } => {
            if *offset == 0 || *offset as u16 >= c {
                return Err(OracleError::OffsetOutOfRange { offset: *offset as u16, c });
            }
            if let Some(&last) = positions.last() {
                if last as u64 >= n {
                    return Err(OracleError::PositionOutOfRange { position: last as u64, n });
                }
            }
            Ok(score_shifted(positions, *offset, x, n))
        }
    }
}

/// Sparse fast path: score of the query that shifts `positions` by `offset`,
/// against `x`. Runs in `O(|positions| · log d)`.
///
/// Splitting the shifted positions by what `x` holds there — `b0` of them
/// match the reference, `b_l` carry exactly offset `l` — the score is
/// `(n - distance) - b0 + b_offset`: shifting a reference-matching position
/// loses a match, shifting onto the string's own offset gains one.
fn score_shifted(positions: &[Position], offset: Offset, x: &TargetString, n: u64) -> u64 {
    let mut b0 = 0u64;
    let mut b_match = 0u64;
    for &j in positions {
        match x.offset_at(j) {
            None => b0 += 1,
            Some(l) if l == offset => b_match += 1,
            Some(_) => {}
        }
    }
    n - x.distance() as u64 - b0 + b_match
}

/// The data owner.
#[derive(Clone)]
pub struct Oracle {
    db: Arc<TargetDatabase>,
}

impl Oracle {
    pub fn new(db: Arc<TargetDatabase>) -> Self {
        Oracle { db }
    }

    pub fn database(&self) -> &TargetDatabase {
        &self.db
    }

    pub fn string_count(&self) -> usize {
        self.db.len()
    }

    pub fn string_len(&self) -> u64 {
        self.db.string_len() as u64
    }

    pub fn color_count(&self) -> u16 {
        self.db.alphabet().size()
    }

    /// Score `q` against every string in the database.
    pub fn respond(&self, q: &QueryString) -> Result<ResponseVector, OracleError> {
        let r = self.db.reference();
        let c = self.db.alphabet().size();
        let scores = self
            .db
            .strings()
            .iter()
            .map(|x| score(q, x, r, c))
            .collect::<Result<Vec<u64>, _>>()?;
        Ok(ResponseVector { scores })
    }

    /// Score `q` against string `i` only.
    pub fn score_string(&self, q: &QueryString, i: usize) -> Result<u64, OracleError> {
        let x = self.string(i)?;
        score(q, x, self.db.reference(), self.db.alphabet().size())
    }

    /// Fast path used by attack drivers: the shifted query defined by a test
    /// row, against string `i`. Positions must be sorted and in-range.
    pub fn score_row(&self, positions: &[Position], offset: Offset, i: usize) -> u64 {
        debug_assert!(positions.last().is_none_or(|&j| (j as u64) < self.string_len()));
        debug_assert!(offset > 0 && (offset as u16) < self.color_count());
        score_shifted(positions, offset, &self.db.strings()[i], self.string_len())
    }

    /// Single-bit overlap mode for binary databases with an all-zero
    /// reference: does the 1-support of `q` intersect the diffs of string `i`?
    pub fn overlap_bit(&self, q: &QueryString, i: usize) -> Result<bool, OracleError> {
        if self.color_count() != 2 || self.db.reference().symbols().iter().any(|&s| s != 0) {
            return Err(OracleError::ModeError);
        }
        let n = self.string_len();
        if q.len() != n {
            return Err(OracleError::LengthMismatch { expected: n, got: q.len() });
        }
        let x = self.string(i)?;
        match &q.repr {
            QueryRepr::Dense(symbols) => {
                for (j, &s) in symbols.iter().enumerate() {
                    if s > 1 {
                        return Err(OracleError::SymbolOutOfRange {
                            symbol: s as u16,
                            position: j as u64,
                            c: 2,
                        });
                    }
                    if s == 1 && x.offset_at(j as Position).is_some() {
                        return Ok(true);
                    }
                }
                Ok(false)
            }
            QueryRepr::Shifted { positions, offset } => {
                if *offset != 1 {
                    return Err(OracleError::OffsetOutOfRange { offset: *offset as u16, c: 2 });
                }
                Ok(positions.iter().any(|&j| x.offset_at(j).is_some()))
            }
        }
    }

    fn string(&self, i: usize) -> Result<&TargetString, OracleError> {
        self.db.strings().get(i).ok_or(OracleError::BadStringIndex {
            index: i,
            g: self.db.len(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Alphabet;

    fn db_from(
        c: u16,
        n: usize,
        diffs: Vec<Vec<(Position, Offset)>>,
    ) -> Arc<TargetDatabase> {
        let a = Alphabet::new(c).unwrap();
        let r = ReferenceString::zeros(n).unwrap();
        let strings = diffs
            .into_iter()
            .map(|d| TargetString::from_diffs(d, n, a).unwrap())
            .collect();
        Arc::new(TargetDatabase::new(a, r, strings).unwrap())
    }

    #[test]
    fn score_worked_instance() {
        // X = [1,0,2,0] against R = [0,0,0,0], c = 3.
        let db = db_from(3, 4, vec![vec![(0, 1), (2, 2)]]);
        let oracle = Oracle::new(db);
        let q = QueryString::dense(vec![1, 1, 0, 0]);
        assert_eq!(oracle.score_string(&q, 0).unwrap(), 2);
    }

    #[test]
    fn score_self_match_is_n() {
        let db = db_from(4, 6, vec![vec![(1, 3), (4, 2)]]);
        let oracle = Oracle::new(db.clone());
        let x = &db.strings()[0];
        let dense = x.materialize(db.reference(), db.alphabet()).unwrap();
        assert_eq!(oracle.score_string(&QueryString::dense(dense), 0).unwrap(), 6);
    }

    #[test]
    fn score_total_mismatch_is_zero() {
        // X = [1,1], query [2,2] over c = 3: no agreement anywhere.
        let db = db_from(3, 2, vec![vec![(0, 1), (1, 1)]]);
        let oracle = Oracle::new(db);
        assert_eq!(oracle.score_string(&QueryString::dense(vec![2, 2]), 0).unwrap(), 0);
    }

    #[test]
    fn reference_query_scores_n_minus_distance() {
        let db = db_from(3, 8, vec![vec![], vec![(0, 1)], vec![(1, 2), (5, 1), (7, 2)]]);
        let oracle = Oracle::new(db);
        let resp = oracle.respond(&QueryString::reference(8)).unwrap();
        assert_eq!(resp.scores, vec![8, 7, 5]);
    }

    #[test]
    fn shifted_and_dense_paths_agree() {
        let db = db_from(4, 16, vec![vec![(0, 1), (3, 3), (9, 2), (15, 1)]]);
        let oracle = Oracle::new(db.clone());
        for offset in 1..=3u8 {
            for positions in [vec![], vec![0], vec![0, 3, 4, 9, 10], vec![15]] {
                let q = QueryString::shifted(16, Arc::new(positions), offset);
                let dense = QueryString::dense(q.materialize(db.reference(), 4));
                assert_eq!(
                    oracle.score_string(&q, 0).unwrap(),
                    oracle.score_string(&dense, 0).unwrap()
                );
            }
        }
    }

    #[test]
    fn score_symmetric_after_materialization() {
        let a = Alphabet::new(3).unwrap();
        let r = ReferenceString::zeros(5).unwrap();
        let x = TargetString::from_diffs([(1, 2), (3, 1)], 5, a).unwrap();
        let y = TargetString::from_diffs([(0, 1), (3, 1)], 5, a).unwrap();
        let qx = QueryString::dense(x.materialize(&r, a).unwrap());
        let qy = QueryString::dense(y.materialize(&r, a).unwrap());
        assert_eq!(score(&qx, &y, &r, 3).unwrap(), score(&qy, &x, &r, 3).unwrap());
    }

    #[test]
    fn respond_rejects_length_mismatch() {
        let db = db_from(3, 4, vec![vec![]]);
        let oracle = Oracle::new(db);
        assert_eq!(
            oracle.respond(&QueryString::dense(vec![0, 0])),
            Err(OracleError::LengthMismatch { expected: 4, got: 2 })
        );
    }

    #[test]
    fn overlap_bit_cases() {
        let db = db_from(2, 6, vec![vec![(2, 1), (4, 1)], vec![]]);
        let oracle = Oracle::new(db);
        let q = |support: Vec<u32>| QueryString::shifted(6, Arc::new(support), 1);
        // Disjoint supports.
        assert!(!oracle.overlap_bit(&q(vec![0, 1, 5]), 0).unwrap());
        // All-zero query.
        assert!(!oracle.overlap_bit(&q(vec![]), 0).unwrap());
        // Superset of the string's support.
        assert!(oracle.overlap_bit(&q(vec![1, 2, 3, 4]), 0).unwrap());
        // Empty string never overlaps.
        assert!(!oracle.overlap_bit(&q(vec![0, 1, 2, 3, 4, 5]), 1).unwrap());
    }

    #[test]
    fn overlap_bit_requires_binary_mode() {
        let db = db_from(3, 4, vec![vec![]]);
        let oracle = Oracle::new(db);
        let q = QueryString::reference(4);
        assert_eq!(oracle.overlap_bit(&q, 0), Err(OracleError::ModeError));
    }
}
