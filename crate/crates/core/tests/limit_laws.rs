//! Structure of the laws `P_j` on randomized bounded profiles.

mod common;

use std::collections::BTreeSet;

use num_integer::Integer;
use proptest::prelude::*;
use rankone::limits::{
    disjointness_certificate, limit_distribution, profile_invariants, sets_se, tail_checks, LimitProfile, Verdict,
};
use rankone::{Execution, Stage};

const R: usize = 7;

fn random_profile(seed: u64) -> LimitProfile {
    let mut rng = common::rng(seed);
    let stages: Vec<Stage> = (0..=R + 1).map(|_| common::random_stage(&mut rng, 2..=3, 3)).collect();
    LimitProfile::new(0, stages, Some(3)).unwrap()
}

fn differences(support: &[i64]) -> BTreeSet<i64> {
    support.iter().flat_map(|a| support.iter().map(move |b| a - b)).collect()
}

#[test]
fn differences_from_e_m_appear_in_the_support() {
    for seed in 0..60 {
        let p = random_profile(seed);
        for j in 1..=3u64 {
            let law = limit_distribution(&p, j, R, Execution::Parallel).unwrap().law;
            let diffs = differences(&law.support());
            for m in 1..R as i64 {
                if 1u64 << (m - 1) <= j {
                    continue;
                }
                let (_, e) = sets_se(&p, m).unwrap();
                for d in e.into_iter().filter(|&d| d >= 1) {
                    assert!(diffs.contains(&d), "seed {seed} j {j} m {m} d {d}");
                }
            }
        }
    }
}

#[test]
fn support_differences_lie_in_the_e_m_lattice() {
    for seed in 100..160 {
        let p = random_profile(seed);
        let mut d = 0u64;
        for m in 1..=R as i64 {
            for x in sets_se(&p, m).unwrap().1 {
                d = d.gcd(&x.unsigned_abs());
            }
        }
        for j in 1..=3u64 {
            let law = limit_distribution(&p, j, R, Execution::Parallel).unwrap().law;
            if d == 0 {
                assert!(law.support().len() <= 1);
                continue;
            }
            for x in differences(&law.support()) {
                assert_eq!(x.rem_euclid(d as i64), 0, "seed {seed} j {j} d {d} diff {x}");
            }
        }
    }
}

#[test]
fn corrected_exponential_tail_holds() {
    for seed in 200..260 {
        let p = random_profile(seed);
        for j in 1..=3u64 {
            let l = limit_distribution(&p, j, R, Execution::Parallel).unwrap();
            assert!(l.corrected_tail_violations.is_empty(), "seed {seed} j {j}");
        }
    }
}

#[test]
fn stated_tail_fails_on_the_constant_one_cocycle() {
    let p = LimitProfile::constant(Stage::new(3, vec![1, 1, 0]).unwrap(), 0, 10).unwrap();
    let l = limit_distribution(&p, 1, 9, Execution::Sequential).unwrap();
    assert_eq!(l.law.support(), vec![1]);
    let (stated, corrected) = tail_checks(&l.law, 1, 1);
    assert_eq!(stated, vec![1]);
    assert!(corrected.is_empty());
}

#[test]
fn chacon_certificates() {
    let chacon = LimitProfile::constant(Stage::new(3, vec![0, 1, 0]).unwrap(), 0, 13).unwrap();
    let d = profile_invariants(&chacon).d_infinity;
    let laws: Vec<_> = (1..=5).map(|j| limit_distribution(&chacon, j, 12, Execution::Parallel).unwrap().law).collect();
    for j1 in 1..=5u64 {
        for j2 in j1 + 1..=5 {
            let v = disjointness_certificate(&laws[j1 as usize - 1], &laws[j2 as usize - 1], j1, j2, d, Some(12));
            assert_eq!(v.verdict, Verdict::Disjoint);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn invariants_ignore_window_shifts(seed in 0u64..10_000, shift in -5i64..6) {
        let p = random_profile(seed);
        let q = p.shifted(shift);
        prop_assert_eq!(profile_invariants(&p), profile_invariants(&q));
        for m in p.window_start..p.window_end() {
            prop_assert_eq!(sets_se(&p, m).unwrap(), sets_se(&q, m - shift).unwrap());
        }
    }

    #[test]
    fn laws_are_probability_vectors(seed in 0u64..10_000, j in 1u64..4) {
        let p = random_profile(seed);
        let l = limit_distribution(&p, j, R, Execution::Sequential).unwrap().law;
        prop_assert!(l.is_consistent());
        prop_assert!(l.support().iter().all(|&v| v >= 0));
    }
}
