//! Occurrence counting over the recursive layout.
//!
//! Once `|B_k| >= |W|`, every occurrence of `W` in `B_{k+1}` either lies in
//! one copy of `B_k` or meets exactly one spacer gap. So the count for
//! `B_{k+1}` is `p_k` times the count for `B_k` plus the occurrences in the
//! short junction words `suffix 1^s prefix`, where prefix and suffix have
//! length `|W| - 1`.

use std::collections::HashMap;

use num_bigint::BigUint;

use super::{naive_count, BlockDag};
use crate::error::{Error, Result};

pub fn count_occurrences(dag: &BlockDag, w: &[u8], n: usize) -> Result<BigUint> {
    dag.check_block(n)?;
    if w.iter().any(|&b| b > 1) {
        return Err(Error::Input("word has symbols outside {0,1}".into()));
    }
    let len = dag.len(n);
    if BigUint::from(w.len()) > *len {
        return Err(Error::range("word length", w.len(), format!("1..={len}")));
    }
    if w.is_empty() {
        return Ok(len + 1u32);
    }
    let l = w.len() as u64;
    // first stage long enough to host the word; it is short, so scan it
    let mut k = (1..=n).find(|&k| dag.hh(k) >= l).expect("|W| <= h(n)");
    let word = dag.segment(k, 0, dag.hh(k))?;
    let mut count = BigUint::from(naive_count(&word, w));
    let keep = w.len() - 1;
    let prefix = word[..keep].to_vec();
    let mut suffix = word[word.len() - keep..].to_vec();
    let all_ones = w.iter().all(|&b| b == 1);

    while k < n {
        let st = dag.params().stage(k);
        let mut memo: HashMap<u64, u64> = HashMap::new();
        let mut cross: u128 = 0;
        let last = st.spacers.len() - 1;
        for &s in &st.spacers[..last] {
            let c = *memo
                .entry(s)
                .or_insert_with(|| junction(&suffix, s, Some(&prefix), w, all_ones));
            cross += c as u128;
        }
        let s_last = st.spacers[last];
        cross += junction(&suffix, s_last, None, w, all_ones) as u128;
        count = count * st.cut + BigUint::from(cross);

        suffix = if s_last as usize >= keep {
            vec![1; keep]
        } else {
            let mut next = suffix[s_last as usize..].to_vec();
            next.extend(std::iter::repeat_n(1u8, s_last as usize));
            next
        };
        k += 1;
    }
    Ok(count)
}

/// Windows of `suffix 1^s [prefix]` of length `|w|`.
fn junction(suffix: &[u8], s: u64, prefix: Option<&[u8]>, w: &[u8], all_ones: bool) -> u64 {
    let l = w.len() as u64;
    if s <= 2 * l + 2 {
        let mut text = suffix.to_vec();
        text.extend(std::iter::repeat_n(1u8, s as usize));
        if let Some(p) = prefix {
            text.extend_from_slice(p);
        }
        return naive_count(&text, w);
    }
    let keep = w.len() - 1;
    let mut left = suffix.to_vec();
    left.extend(std::iter::repeat_n(1u8, keep));
    let mut total = naive_count(&left, w);
    if let Some(p) = prefix {
        let mut right = vec![1u8; keep];
        right.extend_from_slice(p);
        total += naive_count(&right, w);
    }
    if all_ones {
        total += s - l + 1;
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::blocks::parse_word;
    use crate::construction::{ConstructionParams, Stage};
    use proptest::prelude::*;

    #[test]
    fn chacon_examples() {
        let dag = BlockDag::new(&ConstructionParams::chacon(8));
        let c = |w: &str, n| count_occurrences(&dag, &parse_word(w).unwrap(), n).unwrap();
        assert_eq!(c("0010", 3), BigUint::from(3u32));
        assert_eq!(c("0010", 2), BigUint::from(1u32));
        assert_eq!(c("00", 3), BigUint::from(4u32));
        assert!(count_occurrences(&dag, &[0; 14], 3).is_err());
    }

    #[test]
    fn long_spacer_runs() {
        let st = vec![
            Stage::new(2, vec![0, 9]).unwrap(),
            Stage::new(3, vec![40, 0, 17]).unwrap(),
            Stage::new(2, vec![3, 25]).unwrap(),
        ];
        let params = ConstructionParams::custom(st).unwrap();
        let dag = BlockDag::new(&params);
        let full = dag.materialize(4).unwrap();
        for w in ["1", "11", "111", "0111", "1110", "01", "10", "1111111"] {
            let w = parse_word(w).unwrap();
            assert_eq!(
                count_occurrences(&dag, &w, 4).unwrap(),
                BigUint::from(naive_count(&full, &w)),
            );
        }
    }

    fn arb_params() -> impl Strategy<Value = ConstructionParams> {
        prop::collection::vec(
            (2u64..5).prop_flat_map(|p| {
                prop::collection::vec(0u64..4, p as usize)
                    .prop_map(move |s| Stage { cut: p, spacers: s })
            }),
            3..10,
        )
        .prop_map(|stages| ConstructionParams::custom(stages).unwrap())
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn recursion_matches_naive_scan(
            params in arb_params(),
            w in prop::collection::vec(0u8..2, 1..7),
        ) {
            let dag = BlockDag::new(&params);
            for n in 1..=dag.max_stage() {
                if dag.hh(n) > 100_000 {
                    break;
                }
                if (w.len() as u64) > dag.hh(n) {
                    continue;
                }
                let full = dag.materialize(n).unwrap();
                prop_assert_eq!(
                    count_occurrences(&dag, &w, n).unwrap(),
                    BigUint::from(naive_count(&full, &w))
                );
            }
        }
    }
}
