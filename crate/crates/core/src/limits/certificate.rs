//! One-sided certificate for spectral disjointness of two powers.
//!
//! With `P_j` the limit laws, the powers `j1` and `j2` are spectrally
//! disjoint (on the continuous part) as soon as
//! `j2 * supp(P_{j1}) != j1 * supp(P_{j2})`. From truncated laws we can only
//! prove the inequality: we look for an element of one scaled support that
//! provably lies outside the other.

use num_rational::BigRational;
use num_traits::Zero;
use serde::Serialize;

use crate::distribution::IntegerDistribution;
use crate::rational::fmt;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    Disjoint,
    Inconclusive,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Disjoint => "DISJOINT",
            Verdict::Inconclusive => "INCONCLUSIVE",
        }
    }
}

/// Why a value cannot belong to a scaled support.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum Exclusion {
    /// Not a multiple of the scaling factor.
    NotMultiple { factor: u64 },
    /// Differs from a known support point by a non-multiple of `d`.
    Lattice { d: u64, anchor: i64 },
    /// The law lives on the non-negative integers.
    Negative,
    /// Not enumerated and below every unresolved outcome.
    Exhausted { tail_floor: Option<i64> },
}

impl Exclusion {
    fn describe(&self) -> String {
        match self {
            Exclusion::NotMultiple { factor } => format!("not a multiple of {factor}"),
            Exclusion::Lattice { d, anchor } => {
                format!("differs from support point {anchor} by a non-multiple of d={d}")
            }
            Exclusion::Negative => "negative".into(),
            Exclusion::Exhausted { tail_floor: Some(f) } => {
                format!("not enumerated and below the unresolved floor {f}")
            }
            Exclusion::Exhausted { tail_floor: None } => "not enumerated and no unresolved mass".into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DisjointnessVerdict {
    pub j1: u64,
    pub j2: u64,
    pub verdict: Verdict,
    pub witness: String,
    pub depth: Option<usize>,
    pub tail_bound: BigRational,
}

impl DisjointnessVerdict {
    pub fn csv_header() -> &'static str {
        "j1,j2,verdict,witness,depth,tail_bound"
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},\"{}\",{},{}",
            self.j1,
            self.j2,
            self.verdict.as_str(),
            self.witness.replace('"', "'"),
            self.depth.map(|d| d.to_string()).unwrap_or_default(),
            fmt(&self.tail_bound)
        )
    }
}

/// Is `u` provably outside the support of the untruncated law behind `p`?
fn excluded(p: &IntegerDistribution, u: i64, lattice: Option<u64>) -> Option<Exclusion> {
    let support = p.support();
    if support.binary_search(&u).is_ok() {
        return None;
    }
    if u < 0 {
        return Some(Exclusion::Negative);
    }
    if let Some(d) = lattice.filter(|&d| d > 1) {
        if let Some(&a) = support.iter().find(|&&a| (u - a).rem_euclid(d as i64) != 0) {
            return Some(Exclusion::Lattice { d, anchor: a });
        }
    }
    if !p.tail_may_contain(u) {
        return Some(Exclusion::Exhausted { tail_floor: p.tail_floor });
    }
    None
}

/// Looks for `x = a * v` with `v` in `supp(from)` and `x` provably not in
/// `b * supp(other)`.
fn witness(
    from: &IntegerDistribution,
    a: u64,
    other: &IntegerDistribution,
    b: u64,
    lattice: Option<u64>,
) -> Option<(i64, i64, Exclusion)> {
    for v in from.support() {
        let x = v * a as i64;
        if x.rem_euclid(b as i64) != 0 {
            return Some((x, v, Exclusion::NotMultiple { factor: b }));
        }
        if let Some(why) = excluded(other, x / b as i64, lattice) {
            return Some((x, v, why));
        }
    }
    None
}

/// Compares `j2 * supp(P_{j1})` with `j1 * supp(P_{j2})` using provably
/// positive masses only. `lattice` is the `d_infinity` of the profile, if
/// every `E_m` of the window lies in `d Z`.
pub fn disjointness_certificate(
    p_j1: &IntegerDistribution,
    p_j2: &IntegerDistribution,
    j1: u64,
    j2: u64,
    lattice: Option<u64>,
    depth: Option<usize>,
) -> DisjointnessVerdict {
    let tail_bound = if p_j1.tail_mass > p_j2.tail_mass {
        p_j1.tail_mass.clone()
    } else {
        p_j2.tail_mass.clone()
    };
    let found = witness(p_j2, j1, p_j1, j2, lattice)
        .map(|(x, v, why)| {
            format!(
                "{x} = {j1}*{v} is in {j1}*supp(P_{j2}) but not in {j2}*supp(P_{j1}): {}",
                why.describe()
            )
        })
        .or_else(|| {
            witness(p_j1, j2, p_j2, j1, lattice).map(|(x, v, why)| {
                format!(
                    "{x} = {j2}*{v} is in {j2}*supp(P_{j1}) but not in {j1}*supp(P_{j2}): {}",
                    why.describe()
                )
            })
        });
    let window = lattice.map(|d| format!(" [lattice d={d}]")).unwrap_or_default();
    match found {
        Some(w) => DisjointnessVerdict {
            j1,
            j2,
            verdict: Verdict::Disjoint,
            witness: w + &window,
            depth,
            tail_bound,
        },
        None => {
            let reason = if p_j1.support().is_empty() || p_j2.support().is_empty() {
                "no provably positive mass".to_string()
            } else if tail_bound.is_zero() {
                "scaled supports coincide".to_string()
            } else {
                "no element of either scaled support is provably absent from the other".to_string()
            };
            DisjointnessVerdict {
                j1,
                j2,
                verdict: Verdict::Inconclusive,
                witness: reason,
                depth,
                tail_bound,
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::construction::Stage;
    use crate::exec::Execution;
    use crate::limits::{limit_distribution, LimitProfile};
    use std::collections::BTreeMap;

    fn law(profile: &LimitProfile, j: u64) -> IntegerDistribution {
        limit_distribution(profile, j, 10, Execution::Parallel).unwrap().law
    }

    #[test]
    fn chacon_pairs_are_disjoint() {
        let p = LimitProfile::constant(Stage::new(3, vec![0, 1, 0]).unwrap(), 0, 11).unwrap();
        let laws: Vec<_> = (1..=5).map(|j| law(&p, j)).collect();
        for j1 in 1..=5u64 {
            for j2 in j1 + 1..=5 {
                let v = disjointness_certificate(
                    &laws[j1 as usize - 1],
                    &laws[j2 as usize - 1],
                    j1,
                    j2,
                    Some(1),
                    Some(10),
                );
                assert_eq!(v.verdict, Verdict::Disjoint, "{j1},{j2}: {}", v.witness);
            }
        }
        let v = disjointness_certificate(&laws[0], &laws[1], 1, 2, None, Some(10));
        assert!(v.witness.starts_with("1 = 1*1 is in 1*supp(P_2)"), "{}", v.witness);
    }

    #[test]
    fn equal_laws_and_flat_profiles_are_inconclusive() {
        let p = LimitProfile::constant(Stage::new(3, vec![0, 1, 0]).unwrap(), 0, 11).unwrap();
        let l = law(&p, 2);
        assert_eq!(disjointness_certificate(&l, &l, 2, 2, Some(1), None).verdict, Verdict::Inconclusive);
        let z = LimitProfile::constant(Stage::new(2, vec![0, 0]).unwrap(), 0, 11).unwrap();
        for (a, b) in [(1, 2), (2, 3), (1, 5)] {
            let v = disjointness_certificate(&law(&z, a), &law(&z, b), a, b, None, Some(10));
            assert_eq!(v.verdict, Verdict::Inconclusive);
        }
    }

    #[test]
    fn unresolved_mass_blocks_exhaustion() {
        let p1 = IntegerDistribution::from_counts(&BTreeMap::from([(0, 1u128)]), 1, Some(0), 2);
        let p2 = IntegerDistribution::from_counts(&BTreeMap::from([(0, 1u128), (2, 1)]), 0, None, 2);
        // 2 = 1*2 must be checked against 2*supp(P_1): is 1 in supp(P_1)?
        // The tail of P_1 starts at 0, so 1 cannot be excluded.
        let v = disjointness_certificate(&p1, &p2, 1, 2, None, None);
        assert_eq!(v.verdict, Verdict::Inconclusive);
        // the lattice of even numbers excludes 1
        let v = disjointness_certificate(&p1, &p2, 1, 2, Some(2), None);
        assert_eq!(v.verdict, Verdict::Disjoint);
        assert!(v.witness.contains("d=2"));
    }
}
