//! Cross-module checks: the response identity that ties the oracle to the
//! count-recovery equations, and elimination decoding against brute-force
//! enumeration across matrix strengths.

use std::sync::Arc;

use gtclone_core::attack::{classify_row, eliminate_decode, recover_offset_counts, TestFlag};
use gtclone_core::bounds::{row_bound, BoundInputs, LogBase};
use gtclone_core::matrix::{DefectSet, TestMatrix};
use gtclone_core::model::{
    Alphabet, Offset, Position, ReferenceString, TargetDatabase, TargetString,
};
use gtclone_core::oracle::{score, Oracle, QueryString};
use gtclone_core::rng::{Domain, SubstreamRng};

struct Instance {
    alphabet: Alphabet,
    reference: ReferenceString,
    truth: TargetString,
    matrix: TestMatrix,
    oracle: Oracle,
}

/// Random single-string instance over an exact matrix with `t` spanning from
/// minimal to the full row bound.
fn random_instance(rng: &mut SubstreamRng, seed: u64, full_strength: bool) -> Instance {
    let n = 4 + rng.uniform_below(7) as u32;
    let c = 2 + rng.uniform_below(2) as u16;
    let d = (1 + rng.uniform_below(3)).min(n as u64);
    let dist = rng.uniform_below(d + 1);
    let alphabet = Alphabet::new(c).unwrap();
    let reference = ReferenceString::zeros(n as usize).unwrap();
    let diffs: Vec<(Position, Offset)> = rng
        .sample_distinct(n as u64, dist)
        .into_iter()
        .map(|j| (j as Position, (1 + rng.uniform_below(c as u64 - 1)) as Offset))
        .collect();
    let truth = TargetString::from_diffs(diffs, n as usize, alphabet).unwrap();
    let t_full = row_bound(&BoundInputs {
        n: n as u64,
        d,
        g: 1,
        c: c as u64,
        log_base: LogBase::Base2,
    })
    .unwrap();
    let t = if full_strength {
        t_full
    } else {
        d * (1 + rng.uniform_below(t_full / d))
    };
    let matrix = TestMatrix::build_exact(n, t, d, seed).unwrap();
    let db = Arc::new(
        TargetDatabase::new(alphabet, reference.clone(), vec![truth.clone()]).unwrap(),
    );
    let oracle = Oracle::new(db);
    Instance {
        alphabet,
        reference,
        truth,
        matrix,
        oracle,
    }
}

fn observe(inst: &Instance) -> (u64, Vec<Vec<u64>>) {
    let n = inst.reference.len() as u64;
    let c = inst.alphabet.size();
    let r = inst
        .oracle
        .score_string(&QueryString::reference(n), 0)
        .unwrap();
    let responses = (0..inst.matrix.rows())
        .map(|k| {
            let row = inst.matrix.row_positions(k);
            (1..c).map(|l| inst.oracle.score_row(&row, l as Offset, 0)).collect()
        })
        .collect();
    (r, responses)
}

/// All strings whose full response vector equals the observed one.
fn consistent_strings(inst: &Instance, r: u64, responses: &[Vec<u64>]) -> Vec<TargetString> {
    let n = inst.reference.len() as u32;
    let c = inst.alphabet.size();
    let offsets = c as u32 - 1;
    let dist = n as u64 - r;
    let mut found = Vec::new();
    let mut subset: Vec<u32> = (0..dist as u32).collect();
    loop {
        for code in 0..(offsets as u64).pow(dist as u32) {
            let mut x = code;
            let diffs: Vec<(Position, Offset)> = subset
                .iter()
                .map(|&j| {
                    let l = (x % offsets as u64 + 1) as Offset;
                    x /= offsets as u64;
                    (j, l)
                })
                .collect();
            let cand = TargetString::from_diffs(diffs, n as usize, inst.alphabet).unwrap();
            let ok = (0..inst.matrix.rows()).all(|k| {
                let positions = Arc::new(inst.matrix.row_positions(k));
                (1..c).all(|l| {
                    let q = QueryString::shifted(n as u64, positions.clone(), l as Offset);
                    score(&q, &cand, &inst.reference, c).unwrap()
                        == responses[k][l as usize - 1]
                })
            });
            if ok {
                found.push(cand);
            }
        }
        if dist == 0 {
            break;
        }
        let mut i = dist as usize;
        loop {
            if i == 0 {
                return found;
            }
            i -= 1;
            if subset[i] < n - dist as u32 + i as u32 {
                subset[i] += 1;
                for t in i + 1..dist as usize {
                    subset[t] = subset[t - 1] + 1;
                }
                break;
            }
        }
    }
    found
}

fn per_offset_defect_sets(truth: &TargetString, c: u16) -> Vec<DefectSet> {
    (1..c)
        .map(|l| DefectSet::new(truth.defects_with_offset(l as Offset)))
        .collect()
}

#[test]
fn response_identity_bridges_oracle_and_recovery() {
    // For every (row, offset, string) of a simulated run, the score equals
    // r - b_{k,0,i} + b_{k,l,i} with the counts taken from ground truth, and
    // the recovery equations invert it exactly.
    let mut rng = SubstreamRng::new(42, Domain::Misc, 0);
    for seed in 0..100u64 {
        let inst = random_instance(&mut rng, seed, false);
        let (r, responses) = observe(&inst);
        let c = inst.alphabet.size();
        for (k, row_responses) in responses.iter().enumerate() {
            let row = inst.matrix.row_positions(k);
            let b0 = row
                .iter()
                .filter(|&&j| inst.truth.offset_at(j).is_none())
                .count() as u64;
            for l in 1..c {
                let bl = row
                    .iter()
                    .filter(|&&j| inst.truth.offset_at(j) == Some(l as Offset))
                    .count() as u64;
                assert_eq!(
                    row_responses[l as usize - 1],
                    r - b0 + bl,
                    "seed {seed} row {k} offset {l}"
                );
            }
            let counts =
                recover_offset_counts(row.len() as u64, r, row_responses, c).unwrap();
            assert_eq!(counts.b0, b0, "seed {seed} row {k}");
        }
    }
}

#[test]
fn elimination_never_evicts_the_truth() {
    let mut rng = SubstreamRng::new(43, Domain::Misc, 1);
    for seed in 0..200u64 {
        let inst = random_instance(&mut rng, seed, false);
        let (r, responses) = observe(&inst);
        let c = inst.alphabet.size();
        let flags: Vec<Vec<TestFlag>> = responses
            .iter()
            .enumerate()
            .map(|(k, resp)| {
                let row = inst.matrix.row_positions(k);
                classify_row(&recover_offset_counts(row.len() as u64, r, resp, c).unwrap())
            })
            .collect();
        let state = eliminate_decode(&inst.matrix, &flags, &inst.reference, inst.alphabet);
        for (j, l) in inst.truth.diffs() {
            assert!(state.is_alive(j, l), "seed {seed}: truth defect ({j},{l}) evicted");
        }
    }
}

#[test]
fn distinguished_instances_decode_exactly_and_uniquely() {
    // Across matrix strengths: whenever the matrix distinguishes the truth's
    // per-offset defect sets, the full-response consistent set is a singleton
    // and elimination returns exactly that string. The truth is always
    // consistent regardless of strength.
    let mut rng = SubstreamRng::new(44, Domain::Misc, 2);
    let mut distinguished = 0;
    let mut weak = 0;
    for seed in 0..400u64 {
        let inst = random_instance(&mut rng, seed, false);
        let (r, responses) = observe(&inst);
        let c = inst.alphabet.size();
        let consistent = consistent_strings(&inst, r, &responses);
        assert!(
            consistent.contains(&inst.truth),
            "seed {seed}: truth not consistent with its own responses"
        );
        if !inst
            .matrix
            .is_collection_distinguished(&per_offset_defect_sets(&inst.truth, c))
        {
            weak += 1;
            continue;
        }
        distinguished += 1;
        assert_eq!(consistent.len(), 1, "seed {seed}: distinguished but ambiguous");
        let flags: Vec<Vec<TestFlag>> = responses
            .iter()
            .enumerate()
            .map(|(k, resp)| {
                let row = inst.matrix.row_positions(k);
                classify_row(&recover_offset_counts(row.len() as u64, r, resp, c).unwrap())
            })
            .collect();
        let state = eliminate_decode(&inst.matrix, &flags, &inst.reference, inst.alphabet);
        assert_eq!(
            state.resolved_string(&inst.reference, inst.alphabet),
            inst.truth
                .materialize(&inst.reference, inst.alphabet)
                .unwrap(),
            "seed {seed}: distinguished instance decoded wrong"
        );
        assert_eq!(state.unresolved_count(), 0, "seed {seed}");
    }
    // The sweep must exercise both regimes to mean anything.
    assert!(distinguished >= 100, "only {distinguished} distinguished instances");
    assert!(weak >= 20, "only {weak} weak instances");
}

#[test]
fn full_strength_matrices_are_reliably_distinguished() {
    let mut rng = SubstreamRng::new(45, Domain::Misc, 3);
    let mut ok = 0;
    let trials = 150;
    for seed in 0..trials {
        let inst = random_instance(&mut rng, seed, true);
        let c = inst.alphabet.size();
        if inst
            .matrix
            .is_collection_distinguished(&per_offset_defect_sets(&inst.truth, c))
        {
            ok += 1;
        }
    }
    // Failure probability is at most (c-1)/n per instance; with these sizes
    // the observed rate should be essentially perfect.
    assert!(ok >= trials - 2, "{ok}/{trials} distinguished");
}
