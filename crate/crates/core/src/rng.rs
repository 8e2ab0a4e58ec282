//! Deterministic, seedable randomness for matrix construction and synthesis.
//!
//! Every random object in this crate is derived from a `(seed, domain, index)`
//! triple, so content never depends on construction order or thread schedule:
//! column `j` of a matrix, row `k` of a stream, and string `i` of a synthetic
//! database each get their own substream. The generator is xoshiro256++ with
//! SplitMix64 key expansion — integer-only, so results are identical on every
//! platform.

/// Substream domains. Keeps substreams for different purposes disjoint even
/// when they share a seed and an index.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Domain {
    /// Per-column row selection in the exact matrix construction.
    ExactColumn,
    /// Per-row entry sampling in the Bernoulli construction.
    BernoulliRow,
    /// Per-string sampling in synthetic database generation.
    SynthString,
    /// Miscellaneous test/driver streams.
    Misc,
}

impl Domain {
    fn tag(self) -> u64 {
        match self {
            Domain::ExactColumn => 0x45584143, // "EXAC"
            Domain::BernoulliRow => 0x4245524e, // "BERN"
            Domain::SynthString => 0x53594e54, // "SYNT"
            Domain::Misc => 0x4d495343,        // "MISC"
        }
    }
}

#[inline]
fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e3779b97f4a7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// xoshiro256++ seeded from a `(seed, domain, index)` triple.
#[derive(Debug, Clone)]
pub struct SubstreamRng {
    s: [u64; 4],
}

impl SubstreamRng {
    pub fn new(seed: u64, domain: Domain, index: u64) -> Self {
        // Expand the triple through SplitMix64 so related triples do not
        // produce correlated states (per the xoshiro authors' seeding advice).
        let mut key = seed ^ domain.tag().rotate_left(32) ^ index.wrapping_mul(0x9e3779b97f4a7c15);
        let mut s = [0u64; 4];
        for word in &mut s {
            *word = splitmix64(&mut key);
        }
        // All-zero state is invalid for xoshiro; splitmix output makes this
        // practically impossible, but guard anyway.
        if s == [0, 0, 0, 0] {
            s[0] = 1;
        }
        SubstreamRng { s }
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        let result = self.s[0]
            .wrapping_add(self.s[3])
            .rotate_left(23)
            .wrapping_add(self.s[0]);
        let t = self.s[1] << 17;
        self.s[2] ^= self.s[0];
        self.s[3] ^= self.s[1];
        self.s[1] ^= self.s[2];
        self.s[0] ^= self.s[3];
        self.s[2] ^= t;
        self.s[3] = self.s[3].rotate_left(45);
        result
    }

    /// Unbiased uniform draw in `[0, bound)` by rejection.
    #[inline]
    pub fn uniform_below(&mut self, bound: u64) -> u64 {
        assert!(bound > 0, "uniform_below(0)");
        // Zone rejection: accept draws below the largest multiple of `bound`.
        let zone = u64::MAX - (u64::MAX % bound + 1) % bound;
        loop {
            let v = self.next_u64();
            if v <= zone {
                return v % bound;
            }
        }
    }

    /// Uniform draw in the inclusive range `[lo, hi]`.
    #[inline]
    pub fn uniform_in(&mut self, lo: u64, hi: u64) -> u64 {
        debug_assert!(lo <= hi);
        lo + self.uniform_below(hi - lo + 1)
    }

    /// Bernoulli trial with the given probability, via a single integer
    /// compare against a precomputed threshold (see [`bernoulli_threshold`]).
    #[inline]
    pub fn bernoulli(&mut self, threshold: u64) -> bool {
        self.next_u64() < threshold
    }

    /// Sample `k` distinct values from `[0, m)` (Floyd's algorithm), returned
    /// sorted. O(k) draws and memory regardless of `m`.
    pub fn sample_distinct(&mut self, m: u64, k: u64) -> Vec<u64> {
        assert!(k <= m, "cannot sample {k} distinct values from [0, {m})");
        let mut chosen: Vec<u64> = Vec::with_capacity(k as usize);
        for i in (m - k)..m {
            let r = self.uniform_below(i + 1);
            if chosen.contains(&r) {
                chosen.push(i);
            } else {
                chosen.push(r);
            }
        }
        chosen.sort_unstable();
        debug_assert!(chosen.windows(2).all(|w| w[0] < w[1]));
        chosen
    }
}

/// Threshold for [`SubstreamRng::bernoulli`]: a draw below this value occurs
/// with probability `p`. Requires `0 <= p <= 1`; computed with one IEEE-exact
/// multiply so it is identical on every platform.
pub fn bernoulli_threshold(p: f64) -> u64 {
    assert!((0.0..=1.0).contains(&p), "probability out of range: {p}");
    if p >= 1.0 {
        return u64::MAX;
    }
    // p < 1 so p * 2^64 < 2^64 and the cast cannot saturate surprisingly.
    (p * (u64::MAX as f64 + 1.0)) as u64
}
