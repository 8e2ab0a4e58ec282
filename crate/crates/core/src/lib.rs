//! Cloning sparse string/vector databases through nonadaptive comparison
//! queries, by reduction to combinatorial group testing.
//!
//! A data owner holds `g` strings of length `n` over `c` colors, each close
//! to a public reference string, and answers comparison queries with a
//! per-string matching score. This crate builds the fixed query set — one
//! reference query plus `c-1` color-shifted queries per test-matrix row —
//! decodes the scores back into per-row offset counts, and reconstructs
//! every string by elimination. It also provides the closed-form query
//! bounds, brute-force verifiers used as test oracles, dataset ingestion,
//! and synthetic database generation.

pub mod attack;
pub mod bounds;
pub mod datasets;
pub mod matrix;
pub mod model;
pub mod oracle;
pub mod rng;

pub use attack::{
    baseline_attack, binary_overlap_attack, clone_string_incremental, eliminate_decode,
    recover_offset_counts, AttackError, BaselineOutcome, CloneConfig, CloneReport, OffsetCounts,
    QueryPlan, ReconstructionState, RowSource, StopRule, StringAttack, TestFlag,
};
pub use bounds::{
    baseline_query_count, chvatal_guess_count, mastermind_query_count, row_bound, BoundInputs,
    BoundsError, LogBase,
};
pub use datasets::{
    emit_stats, ingest, synth, write_sequences, DatasetError, DistanceDistribution, IngestFormat,
    IngestKind, IngestOptions, Ingested, SynthSpec,
};
pub use matrix::{BernoulliStream, DefectSet, MatrixError, MatrixKind, TestMatrix};
pub use model::{
    compute_stats, Alphabet, DatabaseStats, ModelError, Offset, Position, ReferenceString, Symbol,
    TargetDatabase, TargetString,
};
pub use oracle::{score, Oracle, OracleError, QueryString, ResponseVector};
