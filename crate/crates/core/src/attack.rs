//! The nonadaptive cloning attack: query-plan generation, recovery of
//! per-row offset counts from raw scores, test classification, elimination
//! decoding, the incremental per-string cloning loop, the exhaustive
//! per-position baseline, and the single-bit binary specialization.
//!
//! Terminology: a `(row, offset)` test is CLEAR when none of the row's
//! positions carries that offset in the target string, and TRIGGERED
//! otherwise. A clear test proves every position it covers does not deviate
//! by that offset, which is what elimination decoding consumes. (Classical
//! group-testing writing calls the clear case a "positive" test; the
//! inverted vocabulary avoids that trap.)

use std::sync::Arc;

use thiserror::Error;

use crate::matrix::{BernoulliStream, TestMatrix};
use crate::model::{Alphabet, Offset, Position, ReferenceString, Symbol, TargetString};
use crate::oracle::{Oracle, OracleError, QueryString};

#[derive(Debug, Error)]
pub enum AttackError {
    /// The recovery equation produced a non-integral or negative count:
    /// responses were corrupted, permuted, or answered by a different oracle.
    #[error("inconsistent oracle responses{}: {detail} (b_k={b_k}, r={r}, responses={responses:?})",
            row.map(|k| format!(" at row {k}")).unwrap_or_default())]
    OracleInconsistency {
        row: Option<u64>,
        b_k: u64,
        r: u64,
        responses: Vec<u64>,
        detail: String,
    },
    #[error("query plan: matrix spans {matrix_n} columns, reference has length {reference_n}")]
    PlanShapeMismatch { matrix_n: u64, reference_n: u64 },
    #[error(transparent)]
    Oracle(#[from] OracleError),
}

/// The precomputed, nonadaptive query set: the reference query plus one
/// shifted query per (matrix row, color offset). Built entirely before any
/// response is seen.
pub struct QueryPlan {
    matrix: Arc<TestMatrix>,
    reference: Arc<ReferenceString>,
    alphabet: Alphabet,
    rows: Vec<Arc<Vec<Position>>>,
}

impl QueryPlan {
    pub fn build(
        matrix: Arc<TestMatrix>,
        reference: Arc<ReferenceString>,
        alphabet: Alphabet,
    ) -> Result<Self, AttackError> {
        if matrix.n() as u64 != reference.len() as u64 {
            return Err(AttackError::PlanShapeMismatch {
                matrix_n: matrix.n() as u64,
                reference_n: reference.len() as u64,
            });
        }
        let rows = (0..matrix.rows())
            .map(|k| Arc::new(matrix.row_positions(k)))
            .collect();
        Ok(QueryPlan {
            matrix,
            reference,
            alphabet,
            rows,
        })
    }

    #[inline]
    pub fn matrix(&self) -> &TestMatrix {
        &self.matrix
    }

    #[inline]
    pub fn reference(&self) -> &ReferenceString {
        &self.reference
    }

    #[inline]
    pub fn alphabet(&self) -> Alphabet {
        self.alphabet
    }

    pub fn reference_query(&self) -> QueryString {
        QueryString::reference(self.reference.len() as u64)
    }

    /// `Q_{k,l}`: the reference shifted by `l` exactly at row `k`'s positions.
    pub fn query(&self, row: usize, offset: Offset) -> QueryString {
        debug_assert!(offset >= 1 && offset as u16 <= self.alphabet.offsets());
        QueryString::shifted(self.reference.len() as u64, self.rows[row].clone(), offset)
    }

    pub fn row_positions(&self, row: usize) -> &Arc<Vec<Position>> {
        &self.rows[row]
    }

    /// Total queries in the plan: `1 + rows·(c-1)`.
    pub fn query_count(&self) -> u64 {
        1 + self.matrix.rows() as u64 * self.alphabet.offsets() as u64
    }

    /// All queries, reference first, then row-major by offset.
    pub fn iter_queries(&self) -> impl Iterator<Item = QueryString> + '_ {
        let shifted = (0..self.matrix.rows()).flat_map(move |k| {
            (1..=self.alphabet.offsets() as Offset).map(move |l| self.query(k, l))
        });
        std::iter::once(self.reference_query()).chain(shifted)
    }
}

/// Per-row split of the tested positions by what the target holds there:
/// `b0` of them match the reference, `by_offset[l-1]` carry offset `l`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OffsetCounts {
    pub b0: u64,
    pub by_offset: Vec<u64>,
}

impl OffsetCounts {
    pub fn total(&self) -> u64 {
        self.b0 + self.by_offset.iter().sum::<u64>()
    }
}

/// Solve the response equations for one row. With `b_k` ones in the row,
/// reference score `r`, and the `c-1` shifted-query scores, the
/// reference-matching count is `(b_k + (c-1)·r - Σ responses) / c` and each
/// offset count follows as `response - r + b0`. Everything must come out
/// integral, nonnegative, and summing to `b_k`, or the responses are not
/// those of a consistent score oracle.
pub fn recover_offset_counts(
    b_k: u64,
    r: u64,
    responses: &[u64],
    c: u16,
) -> Result<OffsetCounts, AttackError> {
    assert!(c >= 2, "need at least 2 colors");
    assert_eq!(responses.len(), c as usize - 1, "need c-1 responses");
    let fail = |detail: &str| AttackError::OracleInconsistency {
        row: None,
        b_k,
        r,
        responses: responses.to_vec(),
        detail: detail.to_string(),
    };
    let sum: i128 = responses.iter().map(|&x| x as i128).sum();
    let numerator = b_k as i128 + (c as i128 - 1) * r as i128 - sum;
    if numerator < 0 {
        return Err(fail("negative reference-matching count"));
    }
    if numerator % c as i128 != 0 {
        return Err(fail("count equation not divisible by c"));
    }
    let b0 = (numerator / c as i128) as u64;
    let mut by_offset = Vec::with_capacity(responses.len());
    for &resp in responses {
        let bl = resp as i128 - r as i128 + b0 as i128;
        if bl < 0 {
            return Err(fail("negative offset count"));
        }
        by_offset.push(bl as u64);
    }
    let counts = OffsetCounts { b0, by_offset };
    if counts.total() != b_k {
        return Err(fail("offset counts do not sum to the row weight"));
    }
    Ok(counts)
}

/// Outcome of one `(row, offset)` test.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TestFlag {
    /// No tested position carries this offset; every covered position is
    /// proven not to deviate by it.
    Clear,
    /// At least one tested position carries this offset.
    Triggered,
}

/// Classify each offset of a row from its recovered counts.
pub fn classify_row(counts: &OffsetCounts) -> Vec<TestFlag> {
    counts
        .by_offset
        .iter()
        .map(|&bl| if bl == 0 { TestFlag::Clear } else { TestFlag::Triggered })
        .collect()
}

/// Per-position candidate offsets that have not been eliminated. Survivor
/// sets only shrink; for a consistent oracle the true offset of every
/// defective position is always among its survivors.
pub struct ReconstructionState {
    n: u32,
    offsets: u16,
    words: usize,
    /// `offsets` bit-planes of `n` bits each; plane `l-1` bit `j` is alive
    /// while `(j, l)` remains a candidate.
    planes: Vec<u64>,
    survivor_count: Vec<u8>,
    unresolved: u64,
}

impl ReconstructionState {
    /// Fresh state: every `(position, offset)` pair alive.
    pub fn new(n: u32, alphabet: Alphabet) -> Self {
        let offsets = alphabet.offsets();
        let words = (n as usize).div_ceil(64);
        let mut planes = vec![u64::MAX; words * offsets as usize];
        // Mask tail bits beyond n in each plane.
        let rem = n as usize % 64;
        if rem != 0 {
            for l in 0..offsets as usize {
                planes[l * words + words - 1] = (1u64 << rem) - 1;
            }
        }
        ReconstructionState {
            n,
            offsets,
            words,
            planes,
            survivor_count: vec![offsets as u8; n as usize],
            unresolved: if offsets >= 2 { n as u64 } else { 0 },
        }
    }

    #[inline]
    pub fn is_alive(&self, j: Position, offset: Offset) -> bool {
        let plane = (offset as usize - 1) * self.words;
        self.planes[plane + (j as usize >> 6)] & (1u64 << (j & 63)) != 0
    }

    /// Kill `(j, offset)` for every `j` in `positions`; positions whose
    /// survivor set actually changed are appended to `changed`.
    pub fn apply_clear_into(
        &mut self,
        positions: &[Position],
        offset: Offset,
        changed: &mut Vec<Position>,
    ) {
        let plane = (offset as usize - 1) * self.words;
        for &j in positions {
            let word = plane + (j as usize >> 6);
            let mask = 1u64 << (j & 63);
            if self.planes[word] & mask != 0 {
                self.planes[word] &= !mask;
                let cnt = &mut self.survivor_count[j as usize];
                *cnt -= 1;
                if *cnt == 1 {
                    self.unresolved -= 1;
                }
                changed.push(j);
            }
        }
    }

    pub fn apply_clear(&mut self, positions: &[Position], offset: Offset) {
        let mut scratch = Vec::new();
        self.apply_clear_into(positions, offset, &mut scratch);
    }

    /// Positions with two or more surviving offsets.
    #[inline]
    pub fn unresolved_count(&self) -> u64 {
        self.unresolved
    }

    #[inline]
    pub fn survivor_count_at(&self, j: Position) -> u8 {
        self.survivor_count[j as usize]
    }

    /// Smallest surviving offset at `j`, if any survive.
    pub fn smallest_survivor(&self, j: Position) -> Option<Offset> {
        if self.survivor_count[j as usize] == 0 {
            return None;
        }
        let word = j as usize >> 6;
        let mask = 1u64 << (j & 63);
        (1..=self.offsets as Offset)
            .find(|&l| self.planes[(l as usize - 1) * self.words + word] & mask != 0)
    }

    pub fn survivors_at(&self, j: Position) -> Vec<Offset> {
        let word = j as usize >> 6;
        let mask = 1u64 << (j & 63);
        (1..=self.offsets as Offset)
            .filter(|&l| self.planes[(l as usize - 1) * self.words + word] & mask != 0)
            .collect()
    }

    /// Best-guess symbol at `j`: the reference if nothing survives, the
    /// unique survivor's shift if one does, the smallest survivor's shift
    /// when several do (the deterministic ambiguity rule).
    pub fn resolved_symbol(&self, j: Position, r: &ReferenceString, alphabet: Alphabet) -> Symbol {
        match self.smallest_survivor(j) {
            None => r.symbol(j),
            Some(l) => alphabet.shift(r.symbol(j), l),
        }
    }

    /// The full best-guess string.
    pub fn resolved_string(&self, r: &ReferenceString, alphabet: Alphabet) -> Vec<Symbol> {
        (0..self.n).map(|j| self.resolved_symbol(j, r, alphabet)).collect()
    }

    /// The best guess as a sparse string against `r`.
    pub fn resolved_target(&self) -> TargetString {
        let mut diffs = Vec::new();
        for j in 0..self.n {
            if let Some(l) = self.smallest_survivor(j) {
                diffs.push((j, l));
            }
        }
        // Offsets come from live planes, so they are in range by construction.
        TargetString::from_diffs(
            diffs,
            self.n as usize,
            Alphabet::new(self.offsets + 1).expect("valid alphabet"),
        )
        .expect("survivor offsets are in range")
    }
}

/// One-shot elimination decoding: start from the all-alive state and apply
/// every CLEAR flag. `flags[k][l-1]` is the outcome of test `(k, l)`.
pub fn eliminate_decode(
    m: &TestMatrix,
    flags: &[Vec<TestFlag>],
    _r: &ReferenceString,
    alphabet: Alphabet,
) -> ReconstructionState {
    let mut state = ReconstructionState::new(m.n(), alphabet);
    for (k, row_flags) in flags.iter().enumerate() {
        let positions = m.row_positions(k);
        for (idx, flag) in row_flags.iter().enumerate() {
            if *flag == TestFlag::Clear {
                state.apply_clear(&positions, (idx + 1) as Offset);
            }
        }
    }
    state
}

/// When the incremental loop declares a string cloned.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum StopRule {
    /// Stop when the resolved string equals the ground truth (simulation
    /// mode; what the experiments measure).
    #[default]
    ExactMatch,
    /// Truth-free: stop when no position has two or more survivors. Zero
    /// ambiguity does not certify correctness against false survivors, so
    /// this is informational only.
    ZeroAmbiguity,
}

/// Parameters of one incremental cloning run.
#[derive(Debug, Clone, Copy)]
pub struct CloneConfig {
    /// Maximum shifted queries to spend per string.
    pub cutoff: u64,
    /// Rows consumed between error-curve samples.
    pub batch_rows: u64,
    pub stop: StopRule,
}

impl CloneConfig {
    pub fn new(cutoff: u64, batch_rows: u64) -> Self {
        CloneConfig {
            cutoff,
            batch_rows: batch_rows.max(1),
            stop: StopRule::ExactMatch,
        }
    }
}

/// Per-string outcome of an attack run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CloneReport {
    pub string_index: usize,
    /// Distance of the ground truth from the reference.
    pub distance: u64,
    /// Shifted queries consumed; the one-time reference query is excluded.
    pub tests_used: u64,
    pub cloned: bool,
    pub hit_cutoff: bool,
    /// `(tests_used, hamming error of the resolved string)` samples.
    pub error_curve: Vec<(u64, u64)>,
}

/// Incremental decoding state for one string. Feed it rows in stream order;
/// it issues the per-row shifted queries against the oracle, recovers counts,
/// classifies, eliminates, and tracks the error against the ground truth.
pub struct StringAttack<'a> {
    oracle: &'a Oracle,
    string_index: usize,
    alphabet: Alphabet,
    reference_score: u64,
    distance: u64,
    state: ReconstructionState,
    /// Bitmap: resolved symbol currently equals the truth.
    correct: Vec<u64>,
    error: u64,
    tests_used: u64,
    rows_consumed: u64,
    cutoff: u64,
    stop: StopRule,
    cloned: bool,
    stopped: bool,
    hit_cutoff: bool,
    error_curve: Vec<(u64, u64)>,
    changed: Vec<Position>,
    responses: Vec<u64>,
}

impl<'a> StringAttack<'a> {
    /// Set up the run and account the one-time reference query's score.
    pub fn new(oracle: &'a Oracle, string_index: usize, cfg: &CloneConfig) -> Self {
        let db = oracle.database();
        let alphabet = db.alphabet();
        let reference = db.reference();
        let n = reference.len() as u32;
        let truth_sparse = &db.strings()[string_index];
        let distance = truth_sparse.distance() as u64;
        let reference_score = n as u64 - distance;
        let state = ReconstructionState::new(n, alphabet);
        // Every position initially resolves to offset 1, so the only correct
        // positions are the true offset-1 defects. Kept sparse: the dense
        // truth would cost O(n) memory per in-flight string.
        let words = (n as usize).div_ceil(64);
        let mut correct = vec![0u64; words];
        let offset_one = truth_sparse.defects_with_offset(1);
        for &j in &offset_one {
            correct[j as usize >> 6] |= 1u64 << (j & 63);
        }
        let error = n as u64 - offset_one.len() as u64;
        let mut attack = StringAttack {
            oracle,
            string_index,
            alphabet,
            reference_score,
            distance,
            state,
            correct,
            error,
            tests_used: 0,
            rows_consumed: 0,
            cutoff: cfg.cutoff,
            stop: cfg.stop,
            cloned: false,
            stopped: false,
            hit_cutoff: false,
            error_curve: Vec::new(),
            changed: Vec::new(),
            responses: Vec::with_capacity(alphabet.offsets() as usize),
        };
        attack.error_curve.push((0, attack.error));
        attack.check_stop();
        attack
    }

    #[inline]
    pub fn finished(&self) -> bool {
        self.stopped || self.hit_cutoff
    }

    #[inline]
    pub fn tests_used(&self) -> u64 {
        self.tests_used
    }

    #[inline]
    pub fn rows_consumed(&self) -> u64 {
        self.rows_consumed
    }

    #[inline]
    pub fn current_error(&self) -> u64 {
        self.error
    }

    pub fn state(&self) -> &ReconstructionState {
        &self.state
    }

    /// Would consuming another row stay within the query budget?
    pub fn budget_allows_row(&self) -> bool {
        self.tests_used + self.alphabet.offsets() as u64 <= self.cutoff
    }

    /// Mark the run as stopped by the cutoff.
    pub fn mark_cutoff(&mut self) {
        if !self.stopped {
            self.hit_cutoff = true;
        }
    }

    /// Consume the next stream row: issue its `c-1` shifted queries, recover
    /// the counts, and eliminate on every clear outcome.
    pub fn consume_row(&mut self, positions: &[Position]) -> Result<(), AttackError> {
        debug_assert!(!self.finished());
        let offsets = self.alphabet.offsets();
        self.responses.clear();
        for l in 1..=offsets as Offset {
            self.responses
                .push(self.oracle.score_row(positions, l, self.string_index));
        }
        let counts = recover_offset_counts(
            positions.len() as u64,
            self.reference_score,
            &self.responses,
            self.alphabet.size(),
        )
        .map_err(|e| match e {
            AttackError::OracleInconsistency {
                b_k, r, responses, detail, ..
            } => AttackError::OracleInconsistency {
                row: Some(self.rows_consumed),
                b_k,
                r,
                responses,
                detail,
            },
            other => other,
        })?;
        for (idx, flag) in classify_row(&counts).into_iter().enumerate() {
            if flag != TestFlag::Clear {
                continue;
            }
            let offset = (idx + 1) as Offset;
            // Soundness: a clear test never covers a true defective of its
            // offset, so elimination can never evict the truth.
            debug_assert!(positions
                .iter()
                .all(|&j| self.truth().offset_at(j) != Some(offset)));
            self.changed.clear();
            let mut changed = std::mem::take(&mut self.changed);
            self.state.apply_clear_into(positions, offset, &mut changed);
            for &j in &changed {
                self.refresh_position(j);
            }
            self.changed = changed;
        }
        self.tests_used += offsets as u64;
        self.rows_consumed += 1;
        self.check_stop();
        Ok(())
    }

    fn truth(&self) -> &TargetString {
        &self.oracle.database().strings()[self.string_index]
    }

    fn truth_symbol(&self, j: Position) -> Symbol {
        let reference = self.oracle.database().reference();
        match self.truth().offset_at(j) {
            None => reference.symbol(j),
            Some(l) => self.alphabet.shift(reference.symbol(j), l),
        }
    }

    fn refresh_position(&mut self, j: Position) {
        let reference = self.oracle.database().reference();
        let now_correct =
            self.state.resolved_symbol(j, reference, self.alphabet) == self.truth_symbol(j);
        let word = j as usize >> 6;
        let mask = 1u64 << (j & 63);
        let was_correct = self.correct[word] & mask != 0;
        if now_correct && !was_correct {
            self.correct[word] |= mask;
            self.error -= 1;
        } else if !now_correct && was_correct {
            // Survivor sets shrink and always contain the truth, so under
            // the smallest-offset rule correctness is never lost.
            debug_assert!(false, "per-position correctness regressed at {j}");
            self.correct[word] &= !mask;
            self.error += 1;
        }
    }

    fn check_stop(&mut self) {
        let done = match self.stop {
            StopRule::ExactMatch => self.error == 0,
            StopRule::ZeroAmbiguity => self.state.unresolved_count() == 0,
        };
        if done {
            self.stopped = true;
            // The truth-free rule can stop on a wrong answer (false
            // survivors); the report only claims a clone when the
            // resolution actually matches.
            self.cloned = self.error == 0;
        }
    }

    /// Record an error-curve sample at the current query count.
    pub fn sample_curve(&mut self) {
        if self.error_curve.last() != Some(&(self.tests_used, self.error)) {
            debug_assert!(self
                .error_curve
                .last()
                .is_none_or(|&(_, e)| self.error <= e));
            self.error_curve.push((self.tests_used, self.error));
        }
    }

    pub fn into_report(mut self) -> CloneReport {
        self.sample_curve();
        CloneReport {
            string_index: self.string_index,
            distance: self.distance,
            tests_used: self.tests_used,
            cloned: self.cloned,
            hit_cutoff: self.hit_cutoff,
            error_curve: self.error_curve,
        }
    }
}

/// A deterministic supply of test rows.
pub trait RowSource: Sync {
    fn n(&self) -> u32;
    /// Row `k`, or `None` when a finite source is exhausted.
    fn row(&self, k: u64) -> Option<Vec<Position>>;
}

impl RowSource for BernoulliStream {
    fn n(&self) -> u32 {
        BernoulliStream::n(self)
    }

    fn row(&self, k: u64) -> Option<Vec<Position>> {
        Some(BernoulliStream::row(self, k))
    }
}

impl RowSource for TestMatrix {
    fn n(&self) -> u32 {
        TestMatrix::n(self)
    }

    fn row(&self, k: u64) -> Option<Vec<Position>> {
        (k < self.rows() as u64).then(|| self.row_positions(k as usize))
    }
}

/// Clone one string by consuming stream rows until it is reconstructed
/// exactly or the query budget runs out. Identical `(stream, cutoff)` inputs
/// consume an identical query sequence for every string, which is what makes
/// the whole database attack nonadaptive.
pub fn clone_string_incremental<S: RowSource>(
    source: &S,
    oracle: &Oracle,
    string_index: usize,
    cfg: &CloneConfig,
) -> Result<CloneReport, AttackError> {
    let mut attack = StringAttack::new(oracle, string_index, cfg);
    let mut k = 0u64;
    while !attack.finished() {
        if !attack.budget_allows_row() {
            attack.mark_cutoff();
            break;
        }
        let Some(row) = source.row(k) else {
            break; // finite source exhausted
        };
        attack.consume_row(&row)?;
        k += 1;
        if k.is_multiple_of(cfg.batch_rows) {
            attack.sample_curve();
        }
    }
    Ok(attack.into_report())
}

/// Result of the exhaustive per-position attack.
#[derive(Debug, Clone)]
pub struct BaselineOutcome {
    pub reconstructed: Vec<TargetString>,
    /// Always `(c-1)·n`; the reference query is excluded as usual.
    pub shifted_queries: u64,
}

/// The baseline: probe every `(position, offset)` pair with a single-position
/// flip of the reference. A flip that gains a match (scores `r_i + 1`)
/// pins that position's offset; positions with no gaining flip match the
/// reference. Reconstruction is always exact.
pub fn baseline_attack(oracle: &Oracle) -> Result<BaselineOutcome, AttackError> {
    let n = oracle.string_len();
    let c = oracle.color_count();
    let g = oracle.string_count();
    let reference_scores = oracle.respond(&QueryString::reference(n))?.scores;
    let mut diffs: Vec<Vec<(Position, Offset)>> = vec![Vec::new(); g];
    let mut shifted_queries = 0u64;
    for j in 0..n as Position {
        for l in 1..c {
            let q = QueryString::shifted(n, Arc::new(vec![j]), l as Offset);
            let scores = oracle.respond(&q)?.scores;
            shifted_queries += 1;
            for (i, &s) in scores.iter().enumerate() {
                if s == reference_scores[i] + 1 {
                    diffs[i].push((j, l as Offset));
                }
            }
        }
    }
    let alphabet = oracle.database().alphabet();
    let reconstructed = diffs
        .into_iter()
        .map(|d| {
            TargetString::from_diffs(d, n as usize, alphabet)
                .expect("flip probes stay in range")
        })
        .collect();
    debug_assert_eq!(shifted_queries, (c as u64 - 1) * n);
    Ok(BaselineOutcome {
        reconstructed,
        shifted_queries,
    })
}

/// Binary specialization: rows become subset queries answered with a single
/// overlap bit. Positions covered by any no-overlap row are eliminated; what
/// survives is the reconstructed support.
pub fn binary_overlap_attack(
    m: &TestMatrix,
    oracle: &Oracle,
    string_index: usize,
) -> Result<Vec<Position>, AttackError> {
    let n = oracle.string_len();
    let mut eliminated = vec![0u64; (n as usize).div_ceil(64)];
    for k in 0..m.rows() {
        let positions = m.row_positions(k);
        let q = QueryString::shifted(n, Arc::new(positions.clone()), 1);
        if !oracle.overlap_bit(&q, string_index)? {
            for j in positions {
                eliminated[j as usize >> 6] |= 1u64 << (j & 63);
            }
        }
    }
    Ok((0..n as Position)
        .filter(|&j| eliminated[j as usize >> 6] & (1u64 << (j & 63)) == 0)
        .collect())
}
