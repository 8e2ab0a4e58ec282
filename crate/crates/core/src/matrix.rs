//! Nonadaptive group-testing matrices: construction, verification, and dump.
//!
//! Two randomized constructions are provided. The exact construction gives
//! every column the same weight (`t/d` ones placed uniformly without
//! replacement among `2t` rows) and is the one the distinguishing-probability
//! analysis applies to. The Bernoulli construction sets each entry to 1
//! independently with probability `1/(2·d_hat)` and has the prefix property:
//! row `k` is a pure function of `(seed, k)`, so a matrix can be extended
//! without disturbing earlier rows, and every string in a database sees the
//! same test sequence.
//!
//! Rows are stored either as dense bitmaps or as sorted position lists,
//! chosen by the total bit footprint: verification workloads live at small
//! `n` where word-parallel intersection pays off, while attack workloads
//! reach `n` in the tens of millions with row weight around `n/(2·d_hat)`.

use std::io::{self, BufRead, Write};

use thiserror::Error;

use crate::rng::{bernoulli_threshold, Domain, SubstreamRng};

/// Row-major bit budget below which rows are kept as dense bitmaps.
const DENSE_BIT_BUDGET: u64 = 1 << 22;

#[derive(Debug, Error)]
pub enum MatrixError {
    #[error("t={t} is not a positive multiple of d={d}")]
    NotMultipleOfSparsity { t: u64, d: u64 },
    #[error("sparsity parameter must be >= 1")]
    ZeroSparsity,
    #[error("disjunctness check needs {subsets} distinguishing checks, cap is {cap}")]
    InstanceTooLarge { subsets: u128, cap: u64 },
    #[error("matrix dump i/o: {0}")]
    Io(#[from] io::Error),
    #[error("matrix dump parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

/// Construction metadata.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatrixKind {
    /// Per-column uniform selection of `t/d` rows out of `2t`.
    Exact { d: u64, t: u64 },
    /// Independent entries with probability `1/(2·d_hat)`.
    Bernoulli { d_hat: u64 },
}

impl MatrixKind {
    pub fn name(&self) -> &'static str {
        match self {
            MatrixKind::Exact { .. } => "exact",
            MatrixKind::Bernoulli { .. } => "bernoulli",
        }
    }

    /// The construction parameter recorded in dumps: `d` or `d_hat`.
    pub fn param(&self) -> u64 {
        match *self {
            MatrixKind::Exact { d, .. } => d,
            MatrixKind::Bernoulli { d_hat } => d_hat,
        }
    }
}

enum RowStore {
    Dense { words_per_row: usize, bits: Vec<u64> },
    Sparse(Vec<Vec<u32>>),
}

/// A 0-1 test matrix over `n` columns.
pub struct TestMatrix {
    n: u32,
    seed: u64,
    kind: MatrixKind,
    store: RowStore,
    weights: Vec<u32>,
}

/// A hypothesized set of defective columns (size at most `d`).
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct DefectSet {
    columns: Vec<u32>,
}

impl DefectSet {
    pub fn new<I: IntoIterator<Item = u32>>(columns: I) -> Self {
        let mut columns: Vec<u32> = columns.into_iter().collect();
        columns.sort_unstable();
        columns.dedup();
        DefectSet { columns }
    }

    pub fn columns(&self) -> &[u32] {
        &self.columns
    }

    pub fn len(&self) -> usize {
        self.columns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.columns.is_empty()
    }

    pub fn contains(&self, j: u32) -> bool {
        self.columns.binary_search(&j).is_ok()
    }
}

impl TestMatrix {
    /// The exact construction: a `2t × n` matrix where every column gets
    /// exactly `t/d` ones, placed uniformly without replacement. Column `j`
    /// is driven by its own substream of `(seed, j)`, so matrices are
    /// bit-identical for equal inputs no matter how construction is ordered.
    pub fn build_exact(n: u32, t: u64, d: u64, seed: u64) -> Result<TestMatrix, MatrixError> {
        if d == 0 {
            return Err(MatrixError::ZeroSparsity);
        }
        if t == 0 || !t.is_multiple_of(d) {
            return Err(MatrixError::NotMultipleOfSparsity { t, d });
        }
        let rows = 2 * t;
        let per_column = t / d;
        let mut store = RowStore::with_capacity(n, rows as usize);
        for j in 0..n {
            let mut rng = SubstreamRng::new(seed, Domain::ExactColumn, j as u64);
            for k in rng.sample_distinct(rows, per_column) {
                store.set(k as usize, j, n);
            }
        }
        store.ensure_rows(rows as usize);
        let weights = store.compute_weights(rows as usize, n);
        Ok(TestMatrix {
            n,
            seed,
            kind: MatrixKind::Exact { d, t },
            store,
            weights,
        })
    }

    /// The streaming construction: `num_rows` rows with independent
    /// `Bernoulli(1/(2·d_hat))` entries. Extending the matrix preserves all
    /// earlier rows (each row depends only on `(seed, row_index)`).
    pub fn build_bernoulli(n: u32, d_hat: u64, num_rows: usize, seed: u64) -> TestMatrix {
        assert!(d_hat >= 1, "d_hat must be >= 1");
        let mut m = TestMatrix {
            n,
            seed,
            kind: MatrixKind::Bernoulli { d_hat },
            store: RowStore::with_capacity(n, num_rows),
            weights: Vec::with_capacity(num_rows),
        };
        m.extend_rows(num_rows);
        m
    }

    /// Append more Bernoulli rows. Panics on exact-construction matrices,
    /// which have a fixed shape.
    pub fn extend_rows(&mut self, additional: usize) {
        let MatrixKind::Bernoulli { d_hat } = self.kind else {
            panic!("only bernoulli matrices can grow");
        };
        let start = self.rows();
        let total = start + additional;
        if (total as u64) * (self.n as u64) > DENSE_BIT_BUDGET {
            self.store.promote_to_sparse(start, self.n);
        }
        for k in start..total {
            let row = bernoulli_row(self.n, d_hat, self.seed, k as u64);
            self.weights.push(row.len() as u32);
            self.store.push_row(&row, self.n);
        }
    }

    #[inline]
    pub fn n(&self) -> u32 {
        self.n
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.weights.len()
    }

    #[inline]
    pub fn seed(&self) -> u64 {
        self.seed
    }

    #[inline]
    pub fn kind(&self) -> MatrixKind {
        self.kind
    }

    /// Number of ones in row `k` (the cached `b_k`).
    #[inline]
    pub fn row_weight(&self, k: usize) -> u32 {
        self.weights[k]
    }

    #[inline]
    pub fn row_contains(&self, k: usize, j: u32) -> bool {
        self.store.contains(k, j, self.n)
    }

    /// Sorted positions of the ones in row `k`.
    pub fn row_positions(&self, k: usize) -> Vec<u32> {
        self.store.row_to_vec(k, self.n)
    }

    /// Ones per column; the exact construction makes these all equal `t/d`.
    pub fn column_weights(&self) -> Vec<u64> {
        let mut w = vec![0u64; self.n as usize];
        for k in 0..self.rows() {
            for j in self.row_positions(k) {
                w[j as usize] += 1;
            }
        }
        w
    }

    /// Does row `k` avoid every column of `d_set`?
    fn row_avoids(&self, k: usize, d_set: &DefectSet) -> bool {
        match &self.store {
            RowStore::Dense { words_per_row, bits } => {
                let base = k * words_per_row;
                d_set
                    .columns()
                    .iter()
                    .all(|&j| bits[base + (j as usize >> 6)] & (1u64 << (j & 63)) == 0)
            }
            RowStore::Sparse(rows) => {
                let row = &rows[k];
                if row.len() <= d_set.len() {
                    row.iter().all(|&j| !d_set.contains(j))
                } else {
                    d_set.columns().iter().all(|&j| row.binary_search(&j).is_err())
                }
            }
        }
    }

    /// Is every column outside `d_set` witnessed non-defective by some row
    /// that contains it and avoids `d_set`? For the empty set this asks that
    /// no column be all-zero.
    pub fn is_distinguishing(&self, d_set: &DefectSet) -> bool {
        debug_assert!(d_set.columns().iter().all(|&j| j < self.n));
        let words = (self.n as usize).div_ceil(64);
        let mut covered = vec![0u64; words];
        for k in 0..self.rows() {
            if self.weights[k] == 0 || !self.row_avoids(k, d_set) {
                continue;
            }
            match &self.store {
                RowStore::Dense { words_per_row, bits } => {
                    let base = k * words_per_row;
                    for (w, &b) in covered.iter_mut().zip(&bits[base..base + words_per_row]) {
                        *w |= b;
                    }
                }
                RowStore::Sparse(rows) => {
                    for &j in &rows[k] {
                        covered[j as usize >> 6] |= 1u64 << (j & 63);
                    }
                }
            }
        }
        for &j in d_set.columns() {
            covered[j as usize >> 6] |= 1u64 << (j & 63);
        }
        // All n bits set?
        let full_words = self.n as usize / 64;
        if covered[..full_words].iter().any(|&w| w != u64::MAX) {
            return false;
        }
        let rem = self.n as usize % 64;
        rem == 0 || covered[full_words] == (1u64 << rem) - 1
    }

    /// [`is_distinguishing`] for every set in the collection.
    pub fn is_collection_distinguished(&self, coll: &[DefectSet]) -> bool {
        coll.iter().all(|d| self.is_distinguishing(d))
    }

    /// [`is_distinguishing`] for every column subset of size `d`. Costs
    /// `choose(n, d)` checks; refuses instances above `max_subsets`.
    pub fn is_d_disjunct(&self, d: usize, max_subsets: u64) -> Result<bool, MatrixError> {
        let subsets = binomial(self.n as u128, d as u128);
        if subsets > max_subsets as u128 {
            return Err(MatrixError::InstanceTooLarge {
                subsets,
                cap: max_subsets,
            });
        }
        let n = self.n as usize;
        if d > n {
            return Ok(true); // no subsets of that size: vacuous
        }
        let mut subset: Vec<u32> = (0..d as u32).collect();
        loop {
            if !self.is_distinguishing(&DefectSet::new(subset.iter().copied())) {
                return Ok(false);
            }
            // Next lexicographic combination of size d from 0..n.
            let mut i = d;
            loop {
                if i == 0 {
                    return Ok(true);
                }
                i -= 1;
                if subset[i] < (n - d + i) as u32 {
                    subset[i] += 1;
                    for k in i + 1..d {
                        subset[k] = subset[k - 1] + 1;
                    }
                    break;
                }
            }
        }
    }

    /// Write the dump format: a header line then one line of sorted column
    /// indices per row.
    pub fn write_dump<W: Write>(&self, w: &mut W) -> Result<(), MatrixError> {
        writeln!(
            w,
            "gtmatrix {} n={} rows={} seed={} param={}",
            self.kind.name(),
            self.n,
            self.rows(),
            self.seed,
            self.kind.param()
        )?;
        for k in 0..self.rows() {
            let row = self.row_positions(k);
            let mut line = String::with_capacity(row.len() * 6);
            for (i, j) in row.iter().enumerate() {
                if i > 0 {
                    line.push(' ');
                }
                line.push_str(&j.to_string());
            }
            writeln!(w, "{line}")?;
        }
        Ok(())
    }

    /// Read a dump produced by [`write_dump`].
    pub fn read_dump<R: BufRead>(r: &mut R) -> Result<TestMatrix, MatrixError> {
        let mut header = String::new();
        r.read_line(&mut header)?;
        let parse = |line: usize, msg: &str| MatrixError::Parse {
            line,
            msg: msg.to_string(),
        };
        let mut parts = header.split_whitespace();
        if parts.next() != Some("gtmatrix") {
            return Err(parse(1, "missing gtmatrix header"));
        }
        let kind_name = parts.next().ok_or_else(|| parse(1, "missing kind"))?.to_string();
        let mut n = None;
        let mut rows = None;
        let mut seed = None;
        let mut param = None;
        for field in parts {
            let (key, value) = field
                .split_once('=')
                .ok_or_else(|| parse(1, "malformed header field"))?;
            let value: u64 = value
                .parse()
                .map_err(|_| parse(1, "non-numeric header value"))?;
            match key {
                "n" => n = Some(value),
                "rows" => rows = Some(value),
                "seed" => seed = Some(value),
                "param" => param = Some(value),
                _ => return Err(parse(1, "unknown header field")),
            }
        }
        let (Some(n), Some(rows), Some(seed), Some(param)) = (n, rows, seed, param) else {
            return Err(parse(1, "incomplete header"));
        };
        let kind = match kind_name.as_str() {
            "exact" => MatrixKind::Exact { d: param, t: rows / 2 },
            "bernoulli" => MatrixKind::Bernoulli { d_hat: param },
            _ => return Err(parse(1, "unknown matrix kind")),
        };
        let n = n as u32;
        let mut store = RowStore::with_capacity(n, rows as usize);
        let mut weights = Vec::with_capacity(rows as usize);
        for (idx, line) in r.lines().enumerate() {
            let line = line?;
            let lineno = idx + 2;
            if idx as u64 >= rows {
                if line.trim().is_empty() {
                    continue;
                }
                return Err(parse(lineno, "more rows than header declares"));
            }
            let mut row: Vec<u32> = Vec::new();
            for token in line.split_whitespace() {
                let j: u32 = token
                    .parse()
                    .map_err(|_| parse(lineno, "non-numeric column index"))?;
                if j >= n {
                    return Err(parse(lineno, "column index out of range"));
                }
                row.push(j);
            }
            if row.windows(2).any(|w| w[0] >= w[1]) {
                return Err(parse(lineno, "row indices not strictly increasing"));
            }
            weights.push(row.len() as u32);
            store.push_row(&row, n);
        }
        if weights.len() as u64 != rows {
            return Err(parse(weights.len() + 1, "fewer rows than header declares"));
        }
        Ok(TestMatrix {
            n,
            seed,
            kind,
            store,
            weights,
        })
    }
}

/// Row `row_index` of the Bernoulli stream for `(n, d_hat, seed)`: sorted
/// positions whose entries came up 1. Pure function; this is what gives the
/// construction its prefix property.
pub fn bernoulli_row(n: u32, d_hat: u64, seed: u64, row_index: u64) -> Vec<u32> {
    let threshold = bernoulli_threshold(1.0 / (2.0 * d_hat as f64));
    let mut rng = SubstreamRng::new(seed, Domain::BernoulliRow, row_index);
    let mut row = Vec::new();
    for j in 0..n {
        if rng.bernoulli(threshold) {
            row.push(j);
        }
    }
    row
}

/// An unbounded Bernoulli row stream; `row(k)` is pure in `k`.
#[derive(Debug, Clone)]
pub struct BernoulliStream {
    n: u32,
    d_hat: u64,
    seed: u64,
}

impl BernoulliStream {
    pub fn new(n: u32, d_hat: u64, seed: u64) -> Self {
        assert!(d_hat >= 1, "d_hat must be >= 1");
        BernoulliStream { n, d_hat, seed }
    }

    #[inline]
    pub fn n(&self) -> u32 {
        self.n
    }

    #[inline]
    pub fn d_hat(&self) -> u64 {
        self.d_hat
    }

    pub fn row(&self, k: u64) -> Vec<u32> {
        bernoulli_row(self.n, self.d_hat, self.seed, k)
    }
}

impl RowStore {
    fn with_capacity(n: u32, rows: usize) -> RowStore {
        if (rows as u64) * (n as u64) <= DENSE_BIT_BUDGET {
            let words_per_row = (n as usize).div_ceil(64);
            RowStore::Dense {
                words_per_row,
                bits: Vec::with_capacity(words_per_row * rows),
            }
        } else {
            RowStore::Sparse(Vec::with_capacity(rows))
        }
    }

    fn set(&mut self, k: usize, j: u32, n: u32) {
        match self {
            RowStore::Dense { words_per_row, bits } => {
                let needed = (k + 1) * *words_per_row;
                if bits.len() < needed {
                    bits.resize(needed, 0);
                }
                bits[k * *words_per_row + (j as usize >> 6)] |= 1u64 << (j & 63);
            }
            RowStore::Sparse(rows) => {
                if rows.len() <= k {
                    rows.resize_with(k + 1, Vec::new);
                }
                rows[k].push(j);
                let _ = n;
            }
        }
    }

    fn push_row(&mut self, row: &[u32], n: u32) {
        match self {
            RowStore::Dense { words_per_row, bits } => {
                let base = bits.len();
                bits.resize(base + *words_per_row, 0);
                for &j in row {
                    bits[base + (j as usize >> 6)] |= 1u64 << (j & 63);
                }
                let _ = n;
            }
            RowStore::Sparse(rows) => rows.push(row.to_vec()),
        }
    }

    fn contains(&self, k: usize, j: u32, _n: u32) -> bool {
        match self {
            RowStore::Dense { words_per_row, bits } => {
                bits[k * words_per_row + (j as usize >> 6)] & (1u64 << (j & 63)) != 0
            }
            RowStore::Sparse(rows) => rows[k].binary_search(&j).is_ok(),
        }
    }

    fn row_to_vec(&self, k: usize, _n: u32) -> Vec<u32> {
        match self {
            RowStore::Dense { words_per_row, bits } => {
                let base = k * words_per_row;
                let mut out = Vec::new();
                for (w, &word) in bits[base..base + words_per_row].iter().enumerate() {
                    let mut word = word;
                    while word != 0 {
                        let bit = word.trailing_zeros();
                        out.push((w as u32) * 64 + bit);
                        word &= word - 1;
                    }
                }
                out
            }
            RowStore::Sparse(rows) => rows[k].clone(),
        }
    }

    /// Pad trailing all-zero rows so exactly `rows` rows exist.
    fn ensure_rows(&mut self, rows: usize) {
        match self {
            RowStore::Dense { words_per_row, bits } => {
                bits.resize(rows * *words_per_row, 0);
            }
            RowStore::Sparse(sparse) => {
                if sparse.len() < rows {
                    sparse.resize_with(rows, Vec::new);
                }
            }
        }
    }

    fn promote_to_sparse(&mut self, rows: usize, n: u32) {
        if let RowStore::Dense { .. } = self {
            let converted: Vec<Vec<u32>> = (0..rows).map(|k| self.row_to_vec(k, n)).collect();
            *self = RowStore::Sparse(converted);
        }
    }

    fn compute_weights(&self, rows: usize, n: u32) -> Vec<u32> {
        match self {
            RowStore::Dense { words_per_row, bits } => (0..rows)
                .map(|k| {
                    bits[k * words_per_row..(k + 1) * words_per_row]
                        .iter()
                        .map(|w| w.count_ones())
                        .sum()
                })
                .collect(),
            RowStore::Sparse(sparse) => {
                let _ = n;
                (0..rows).map(|k| sparse[k].len() as u32).collect()
            }
        }
    }
}

fn binomial(n: u128, k: u128) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.saturating_mul(n - i) / (i + 1);
    }
    acc
}
