//! Flat steps, rational eigenvalue candidates and the three-way
//! classification of bounded constructions. All answers are read off a
//! finite stage range and labeled as prefix heuristics.

use std::collections::BTreeSet;

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::Zero;
use serde::Serialize;

use crate::construction::{heights, ConstructionParams};
use crate::error::{Error, Result};

/// Step `n` is flat when the gaps between consecutive canonical copies of
/// `B_n` inside `B_{n+2}` are all equal:
/// `s_{n,0} = ... = s_{n,p_n-2} = s_{n,p_n-1} + s_{n+1,j}` for `j <= p_{n+1}-2`.
pub fn flat_step_detect(params: &ConstructionParams, n: usize) -> Result<bool> {
    if n == 0 || n + 1 > params.depth() {
        return Err(Error::range("stage", n, format!("1..={}", params.depth().saturating_sub(1))));
    }
    let a = &params.stage(n).spacers;
    let b = &params.stage(n + 1).spacers;
    let inner = a[0];
    let last = a[a.len() - 1];
    Ok(a[..a.len() - 1].iter().all(|&s| s == inner)
        && b[..b.len() - 1].iter().all(|&s| last + s == inner))
}

/// Orders `2 <= k <= max_order` dividing every `h_n + s_{n,j}` with
/// `n` in `[n0, n1]` and `j <= p_n - 2`.
pub fn eigenvalue_search(
    params: &ConstructionParams,
    max_order: u64,
    range: (usize, usize),
) -> Result<BTreeSet<u64>> {
    let (n0, n1) = range;
    if n0 == 0 || n1 < n0 || n1 > params.depth() {
        return Err(Error::range("stage range", format!("{n0}..={n1}"), format!("1..={}", params.depth())));
    }
    let g = return_time_gcd(params, range)?;
    Ok((2..=max_order).filter(|&k| (&g % k).is_zero()).collect())
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Classification {
    WeaklyMixingCandidate,
    FiniteRationalEigenvalues { orders: BTreeSet<u64> },
    Odometer,
}

impl Classification {
    pub fn label(&self) -> String {
        match self {
            Classification::WeaklyMixingCandidate => "WEAKLY_MIXING_CANDIDATE".into(),
            Classification::FiniteRationalEigenvalues { orders } => {
                let o: Vec<String> = orders.iter().map(u64::to_string).collect();
                format!("FINITE_RATIONAL_EIGENVALUES({{{}}})", o.join(","))
            }
            Classification::Odometer => "ODOMETER".into(),
        }
    }
}

/// Odometer if every step of the second half of the range is flat;
/// otherwise rational eigenvalue orders up to `max_order` over the range,
/// or a weak mixing candidate when there are none. Refuses when the
/// parameters grow from the first half of the range to the second.
pub fn classify(
    params: &ConstructionParams,
    range: (usize, usize),
    max_order: u64,
) -> Result<Classification> {
    let (lo, hi) = range;
    if lo == 0 || hi <= lo || hi > params.depth() {
        return Err(Error::range("stage range", format!("{lo}..={hi}"), format!("1..={}", params.depth())));
    }
    let mid = lo + (hi - lo) / 2;
    let size = |n: usize| {
        let st = params.stage(n);
        st.cut.max(st.max_spacer())
    };
    let first = (lo..=mid).map(size).max().unwrap_or(0);
    let second = (mid + 1..=hi).map(size).max().unwrap_or(0);
    if second > first && (mid + 1..hi).all(|n| size(n + 1) >= size(n)) {
        return Err(Error::Refusal(format!(
            "parameters look unbounded on stages {lo}..={hi} (max {first} then {second}); \
             the level criterion for eigenvalues is not sound there"
        )));
    }
    let mut all_flat = true;
    for n in mid..hi {
        all_flat &= flat_step_detect(params, n)?;
    }
    if all_flat {
        return Ok(Classification::Odometer);
    }
    let orders = eigenvalue_search(params, max_order, range)?;
    Ok(if orders.is_empty() {
        Classification::WeaklyMixingCandidate
    } else {
        Classification::FiniteRationalEigenvalues { orders }
    })
}

/// `gcd` of `h_n + s_{n,j}` over `n` in the range and `j <= p_n - 2`.
pub fn return_time_gcd(params: &ConstructionParams, range: (usize, usize)) -> Result<BigUint> {
    let hs = heights(params, range.1)?;
    let mut g = BigUint::zero();
    for n in range.0..=range.1 {
        let st = params.stage(n);
        for &s in &st.spacers[..st.spacers.len() - 1] {
            g = g.gcd(&(hs.h(n) + s));
        }
    }
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::construction::Stage;

    pub(crate) fn parity(depth: usize) -> ConstructionParams {
        ConstructionParams::from_json(&format!(
            r#"{{"family":"custom","depth":{depth},"cuts":[3,3],"spacers":[[1,1,0],[1,1,2]],
                "generator":{{"kind":"thue_morse"}}}}"#
        ))
        .unwrap()
    }

    #[test]
    fn flat_examples() {
        let v = ConstructionParams::vnk(6);
        assert!((1..6).all(|n| flat_step_detect(&v, n).unwrap()));
        let c = ConstructionParams::chacon(6);
        assert!((1..6).all(|n| !flat_step_detect(&c, n).unwrap()));
        let mixed = ConstructionParams::custom(vec![
            Stage::new(2, vec![1, 0]).unwrap(),
            Stage::new(2, vec![1, 1]).unwrap(),
        ])
        .unwrap();
        assert!(flat_step_detect(&mixed, 1).unwrap());
        assert!(flat_step_detect(&mixed, 2).is_err());
        // constant (1,0): B_{n+2} = B_n 1 B_n 1 B_n 1 B_n
        let alt = ConstructionParams::periodic(&[Stage::new(2, vec![1, 0]).unwrap()], 6).unwrap();
        assert!(flat_step_detect(&alt, 3).unwrap());
    }

    #[test]
    fn eigen_examples() {
        let c = ConstructionParams::chacon(20);
        assert!(eigenvalue_search(&c, 12, (3, 20)).unwrap().is_empty());
        let p = parity(20);
        assert_eq!(eigenvalue_search(&p, 12, (3, 20)).unwrap(), BTreeSet::from([2]));
        let v = ConstructionParams::vnk(20);
        assert_eq!(eigenvalue_search(&v, 12, (5, 20)).unwrap(), BTreeSet::from([2, 4, 8]));
    }

    #[test]
    fn classification_examples() {
        assert_eq!(classify(&ConstructionParams::vnk(20), (3, 20), 12).unwrap(), Classification::Odometer);
        assert_eq!(
            classify(&ConstructionParams::chacon(20), (3, 20), 12).unwrap(),
            Classification::WeaklyMixingCandidate
        );
        assert_eq!(
            classify(&parity(20), (3, 20), 12).unwrap().label(),
            "FINITE_RATIONAL_EIGENVALUES({2})"
        );
        let alt = ConstructionParams::periodic(&[Stage::new(2, vec![1, 0]).unwrap()], 20).unwrap();
        assert_eq!(classify(&alt, (3, 20), 12).unwrap(), Classification::Odometer);
    }

    #[test]
    fn growing_parameters_are_refused() {
        let cuts: Vec<u64> = (1..=20).map(|n| 2 * n + 2).collect();
        let cols: Vec<u64> = cuts.iter().map(|p| p / 2).collect();
        let gc = ConstructionParams::generalized_chacon(&cuts, &cols).unwrap();
        assert!(classify(&gc, (3, 20), 12).unwrap_err().is_refusal());
    }
}
