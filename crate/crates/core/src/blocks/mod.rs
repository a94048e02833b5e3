//! Building blocks `B_n` as a lazily evaluated recursive layout.
//!
//! `B_1 = 0` and `B_{n+1} = B_n 1^{s_{n,0}} B_n 1^{s_{n,1}} ... B_n 1^{s_{n,p_n-1}}`.
//! Words are `Vec<u8>` of 0/1 values; positions are 0-based internally and
//! 1-based in the public `symbol_at` / `spacer_order` entry points.

mod abc;
mod count;

pub use abc::{abc_decompose, abc_decompose_at, cover_threshold, AbcDecomposition, CoverBlock};
pub use count::count_occurrences;

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use serde::Serialize;

use crate::construction::{heights, ConstructionParams};
use crate::error::{Error, Result};
use crate::rational::{from_biguint, pow2};

pub const DEFAULT_CAP: u64 = 10_000_000;

/// Blocks up to this length are kept materialized for fast copying.
const LEAF_LEN: u64 = 1 << 12;

#[derive(Clone, Debug)]
pub struct BlockDag {
    params: ConstructionParams,
    heights: Vec<BigUint>,
    /// `h(k)` for the leading stages whose height fits comfortably in `u64`.
    small: Vec<u64>,
    /// Cumulative spacer counts per stage, for stages whose output fits.
    spacer_prefix: Vec<Vec<u64>>,
    leaves: Vec<Vec<u8>>,
    cap: u64,
}

/// Where a 0-based position of `B_{k+1}` falls in its layout.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Loc {
    Block { column: usize, offset: u64 },
    Spacer { column: usize, index: u64 },
}

impl BlockDag {
    pub fn new(params: &ConstructionParams) -> Self {
        BlockDag::with_cap(params, DEFAULT_CAP)
    }

    pub fn with_cap(params: &ConstructionParams, cap: u64) -> Self {
        let depth = params.depth();
        let hs = heights(params, depth).expect("depth is within range");
        let heights = hs.heights().to_vec();
        let mut small = Vec::new();
        for h in &heights {
            match h.to_u64() {
                Some(v) if v <= u64::MAX / 4 => small.push(v),
                _ => break,
            }
        }
        let mut spacer_prefix = Vec::new();
        for k in 1..small.len() {
            let st = params.stage(k);
            let mut acc = Vec::with_capacity(st.spacers.len() + 1);
            let mut s = 0u64;
            acc.push(0);
            for &x in &st.spacers {
                s += x;
                acc.push(s);
            }
            spacer_prefix.push(acc);
        }
        let mut dag = BlockDag {
            params: params.clone(),
            heights,
            small,
            spacer_prefix,
            leaves: Vec::new(),
            cap,
        };
        let mut leaves = vec![vec![0u8]];
        for k in 2..=dag.small.len() {
            if dag.small[k - 1] > LEAF_LEN {
                break;
            }
            let prev = &leaves[k - 2];
            let st = dag.params.stage(k - 1);
            let mut w = Vec::with_capacity(dag.small[k - 1] as usize);
            for &s in &st.spacers {
                w.extend_from_slice(prev);
                w.extend(std::iter::repeat_n(1u8, s as usize));
            }
            leaves.push(w);
        }
        dag.leaves = leaves;
        dag
    }

    pub fn params(&self) -> &ConstructionParams {
        &self.params
    }

    pub fn cap(&self) -> u64 {
        self.cap
    }

    /// Highest block index available, `depth + 1`.
    pub fn max_stage(&self) -> usize {
        self.heights.len()
    }

    /// Highest block index whose length fits the random-access path.
    pub fn addressable_stage(&self) -> usize {
        self.small.len()
    }

    /// `|B_n|`.
    pub fn len(&self, n: usize) -> &BigUint {
        &self.heights[n - 1]
    }

    pub(crate) fn check_block(&self, n: usize) -> Result<()> {
        if n == 0 || n > self.max_stage() {
            return Err(Error::range("block index", n, format!("1..={}", self.max_stage())));
        }
        Ok(())
    }

    /// `|B_n|` as `u64`, for stages on the random-access path.
    pub fn h(&self, n: usize) -> Result<u64> {
        self.check_block(n)?;
        self.small.get(n - 1).copied().ok_or_else(|| {
            Error::range("block index", n, format!("1..={} for random access", self.small.len()))
        })
    }

    #[inline]
    pub(crate) fn hh(&self, n: usize) -> u64 {
        self.small[n - 1]
    }

    #[inline]
    fn column_start(&self, k: usize, j: usize) -> u64 {
        j as u64 * self.small[k - 1] + self.spacer_prefix[k - 1][j]
    }

    /// Locates 0-based `x` inside `B_{k+1}` (`k >= 1`).
    pub(crate) fn locate(&self, k: usize, x: u64) -> Loc {
        let p = self.params.cut(k) as usize;
        let (mut lo, mut hi) = (0usize, p);
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if self.column_start(k, mid) <= x {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let inner = x - self.column_start(k, lo);
        let h = self.small[k - 1];
        if inner < h {
            Loc::Block { column: lo, offset: inner }
        } else {
            Loc::Spacer { column: lo, index: inner - h }
        }
    }

    pub(crate) fn symbol0(&self, n: usize, mut x: u64) -> u8 {
        let mut k = n;
        while k > 1 {
            if let Some(leaf) = self.leaves.get(k - 1) {
                return leaf[x as usize];
            }
            match self.locate(k - 1, x) {
                Loc::Block { offset, .. } => {
                    x = offset;
                    k -= 1;
                }
                Loc::Spacer { .. } => return 1,
            }
        }
        0
    }

    /// Symbol at 1-based position `i` of `B_n`.
    pub fn symbol_at(&self, n: usize, i: u64) -> Result<u8> {
        let h = self.h(n)?;
        if i == 0 || i > h {
            return Err(Error::range("position", i, format!("1..={h}")));
        }
        Ok(self.symbol0(n, i - 1))
    }

    /// The 0-based segment `[start, start+len)` of `B_n`.
    pub fn segment(&self, n: usize, start: u64, len: u64) -> Result<Vec<u8>> {
        let h = self.h(n)?;
        if start.checked_add(len).is_none_or(|e| e > h) {
            return Err(Error::range("segment end", start as u128 + len as u128, h));
        }
        if len > self.cap {
            return Err(Error::CapExceeded { required: len.to_string(), cap: self.cap });
        }
        let mut out = Vec::with_capacity(len as usize);
        self.write_range(n, start, len, &mut out);
        Ok(out)
    }

    pub(crate) fn write_range(&self, k: usize, mut start: u64, mut len: u64, out: &mut Vec<u8>) {
        if len == 0 {
            return;
        }
        if let Some(leaf) = self.leaves.get(k - 1) {
            out.extend_from_slice(&leaf[start as usize..(start + len) as usize]);
            return;
        }
        let h = self.small[k - 2];
        let st = self.params.stage(k - 1);
        let mut j = match self.locate(k - 1, start) {
            Loc::Block { column, .. } | Loc::Spacer { column, .. } => column,
        };
        while len > 0 {
            let off = self.column_start(k - 1, j);
            if start < off + h {
                let take = len.min(off + h - start);
                self.write_range(k - 1, start - off, take, out);
                start += take;
                len -= take;
            }
            let end = off + h + st.spacers[j];
            if len > 0 && start < end {
                let take = len.min(end - start);
                out.extend(std::iter::repeat_n(1u8, take as usize));
                start += take;
                len -= take;
            }
            j += 1;
        }
    }

    /// The explicit word `B_n`, refused above the materialization cap.
    pub fn materialize(&self, n: usize) -> Result<Vec<u8>> {
        self.check_block(n)?;
        let h = self.len(n);
        if h > &BigUint::from(self.cap) {
            return Err(Error::CapExceeded { required: h.to_string(), cap: self.cap });
        }
        let h = self.h(n)?;
        self.segment(n, 0, h)
    }

    /// Order of the spacer at 1-based position `i` of `B_n`: the index `k`
    /// of the smallest canonical block `B_k` in which it is a direct spacer.
    pub fn spacer_order(&self, n: usize, i: u64) -> Result<usize> {
        let h = self.h(n)?;
        if i == 0 || i > h {
            return Err(Error::range("position", i, format!("1..={h}")));
        }
        let mut x = i - 1;
        let mut k = n;
        while k > 1 {
            match self.locate(k - 1, x) {
                Loc::Block { offset, .. } => {
                    x = offset;
                    k -= 1;
                }
                Loc::Spacer { .. } => return Ok(k),
            }
        }
        Err(Error::Input(format!("position {i} of B_{n} holds 0, not a spacer")))
    }

    /// Frequency of `w` in `B_n`.
    pub fn frequency(&self, w: &[u8], n: usize) -> Result<CylinderMeasureEstimate> {
        let count = count_occurrences(self, w, n)?;
        let den = self.len(n) - BigUint::from(w.len()) + 1u32;
        let frequency = BigRational::new(count.clone().into(), den.clone().into());
        Ok(CylinderMeasureEstimate {
            word: word_to_string(w),
            stage: n,
            count,
            denominator: den,
            frequency,
        })
    }

    /// Smallest period `<= max_period` of the first `prefix_len` symbols of
    /// `B_infinity`. A prefix heuristic: a hit suggests, but does not prove,
    /// that the system is an odometer.
    pub fn is_eventually_periodic(&self, prefix_len: u64, max_period: u64) -> Result<Option<u64>> {
        if prefix_len > self.cap {
            return Err(Error::CapExceeded { required: prefix_len.to_string(), cap: self.cap });
        }
        let n = (1..=self.addressable_stage())
            .find(|&k| self.hh(k) >= prefix_len)
            .ok_or_else(|| {
                Error::range("prefix length", prefix_len, "at most the deepest block length")
            })?;
        let w = self.segment(n, 0, prefix_len)?;
        let period = smallest_period(&w);
        Ok((period <= max_period).then_some(period))
    }
}

/// Exact frequency of a word in one building block.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CylinderMeasureEstimate {
    pub word: String,
    pub stage: usize,
    pub count: BigUint,
    pub denominator: BigUint,
    pub frequency: BigRational,
}

pub fn parse_word(text: &str) -> Result<Vec<u8>> {
    text.bytes()
        .map(|b| match b {
            b'0' => Ok(0),
            b'1' => Ok(1),
            _ => Err(Error::Input(format!("word {text:?} has symbols outside {{0,1}}"))),
        })
        .collect()
}

pub fn word_to_string(w: &[u8]) -> String {
    w.iter().map(|&b| if b == 0 { '0' } else { '1' }).collect()
}

/// KMP failure table: `fail[i]` is the longest proper border of `w[..i]`.
pub(crate) fn failure(w: &[u8]) -> Vec<usize> {
    let mut fail = vec![0usize; w.len() + 1];
    let mut k = 0;
    for i in 1..w.len() {
        while k > 0 && w[i] != w[k] {
            k = fail[k];
        }
        if w[i] == w[k] {
            k += 1;
        }
        fail[i + 1] = k;
    }
    fail
}

pub(crate) fn smallest_period(w: &[u8]) -> u64 {
    if w.is_empty() {
        return 0;
    }
    (w.len() - failure(w)[w.len()]) as u64
}

/// Leftmost occurrence of `pat` in `text`.
pub(crate) fn find(text: &[u8], pat: &[u8]) -> Option<usize> {
    if pat.is_empty() {
        return Some(0);
    }
    let fail = failure(pat);
    let mut k = 0;
    for (i, &c) in text.iter().enumerate() {
        while k > 0 && c != pat[k] {
            k = fail[k];
        }
        if c == pat[k] {
            k += 1;
        }
        if k == pat.len() {
            return Some(i + 1 - pat.len());
        }
    }
    None
}

pub(crate) fn naive_count(text: &[u8], pat: &[u8]) -> u64 {
    if pat.len() > text.len() {
        return 0;
    }
    text.windows(pat.len()).filter(|w| *w == pat).count() as u64
}

/// Longest run of 1s.
pub fn max_run_of_ones(w: &[u8]) -> u64 {
    let (mut best, mut cur) = (0u64, 0u64);
    for &b in w {
        if b == 1 {
            cur += 1;
            best = best.max(cur);
        } else {
            cur = 0;
        }
    }
    best
}

/// The `index`-th cylinder of the canonical enumeration: words of length
/// 1, 2, ... anchored at position 0, lexicographic within each length.
pub fn cylinder(index: u64) -> Vec<u8> {
    let mut len = 1u32;
    let mut rest = index;
    while rest >= 1u64 << len {
        rest -= 1u64 << len;
        len += 1;
    }
    (0..len).rev().map(|b| ((rest >> b) & 1) as u8).collect()
}

/// Truncated `sum_{k<m} 2^{-k} |nu1(C_k) - nu2(C_k)|` and the bound
/// `2^{1-m}` on the omitted tail.
pub fn measure_distance<F, G>(nu1: F, nu2: G, m: u64) -> (BigRational, BigRational)
where
    F: Fn(&[u8]) -> BigRational,
    G: Fn(&[u8]) -> BigRational,
{
    let mut acc = BigRational::zero();
    for k in 0..m {
        let c = cylinder(k);
        let d = nu1(&c) - nu2(&c);
        let d = if d < BigRational::zero() { -d } else { d };
        acc += d * pow2(-(k as i64));
    }
    (acc, pow2(1 - m as i64))
}

/// Cylinder measure given by frequencies in a fixed block.
pub fn block_measure(dag: &BlockDag, n: usize) -> impl Fn(&[u8]) -> BigRational + '_ {
    move |w: &[u8]| {
        if BigUint::from(w.len()) > *dag.len(n) {
            return BigRational::zero();
        }
        let count = count_occurrences(dag, w, n).expect("length checked");
        let den = dag.len(n) - BigUint::from(w.len()) + 1u32;
        from_biguint(&count) / from_biguint(&den)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::construction::Stage;
    use crate::rational::{int, ratio};

    fn s(w: &[u8]) -> String {
        word_to_string(w)
    }

    #[test]
    fn chacon_b3() {
        let dag = BlockDag::new(&ConstructionParams::chacon(6));
        assert_eq!(s(&dag.materialize(3).unwrap()), "0010001010010");
        assert_eq!(s(&dag.materialize(1).unwrap()), "0");
    }

    #[test]
    fn vnk_and_generalized_chacon_blocks() {
        let dag = BlockDag::new(&ConstructionParams::vnk(4));
        assert_eq!(s(&dag.materialize(3).unwrap()), "0000");
        let gc = ConstructionParams::generalized_chacon(&[3], &[0]).unwrap();
        let dag = BlockDag::new(&gc);
        assert_eq!(s(&dag.materialize(2).unwrap()), "0100");
    }

    #[test]
    fn materialize_refuses_above_cap() {
        let dag = BlockDag::with_cap(&ConstructionParams::chacon(10), 100);
        let err = dag.materialize(6).unwrap_err();
        assert!(err.is_refusal());
        assert!(matches!(err, Error::CapExceeded { ref required, .. } if required == "364"));
    }

    #[test]
    fn symbol_at_examples() {
        let dag = BlockDag::new(&ConstructionParams::chacon(6));
        assert_eq!(dag.symbol_at(3, 9).unwrap(), 1);
        assert_eq!(dag.symbol_at(3, 13).unwrap(), 0);
        assert_eq!(dag.symbol_at(3, 1).unwrap(), 0);
        assert!(dag.symbol_at(3, 14).is_err());
        assert!(dag.symbol_at(3, 0).is_err());
    }

    #[test]
    fn random_access_beyond_leaves_matches_segment() {
        let dag = BlockDag::new(&ConstructionParams::chacon(12));
        let full = dag.materialize(11).unwrap();
        for i in (0..full.len()).step_by(997) {
            assert_eq!(dag.symbol0(11, i as u64), full[i]);
        }
        let seg = dag.segment(11, 12345, 777).unwrap();
        assert_eq!(&seg[..], &full[12345..12345 + 777]);
    }

    #[test]
    fn spacer_orders_in_chacon_b3() {
        let dag = BlockDag::new(&ConstructionParams::chacon(6));
        assert_eq!(dag.spacer_order(3, 9).unwrap(), 3);
        assert_eq!(dag.spacer_order(3, 3).unwrap(), 2);
        assert!(dag.spacer_order(3, 1).is_err());
    }

    #[test]
    fn frequency_examples() {
        let dag = BlockDag::new(&ConstructionParams::chacon(14));
        let f = dag.frequency(&[0, 0], 3).unwrap();
        assert_eq!(f.count, BigUint::from(4u32));
        assert_eq!(f.frequency, ratio(1, 3));
        for n in 1..=12usize {
            let f = dag.frequency(&[0], n).unwrap();
            let h = (3i64.pow(n as u32) - 1) / 2;
            assert_eq!(f.frequency, ratio(3i64.pow(n as u32 - 1), h));
        }
        let z = BlockDag::new(&ConstructionParams::vnk(6));
        assert!(z.frequency(&[1], 5).unwrap().frequency.is_zero());
    }

    #[test]
    fn measure_distance_examples() {
        let dag = BlockDag::new(&ConstructionParams::chacon(8));
        let mu = block_measure(&dag, 8);
        let (d, tail) = measure_distance(&mu, &mu, 10);
        assert!(d.is_zero());
        assert_eq!(tail, ratio(1, 512));
        let ones = |w: &[u8]| if w.iter().all(|&b| b == 1) { int(1) } else { int(0) };
        let limit = |w: &[u8]| if w == [0] { ratio(2, 3) } else { int(0) };
        let (d, _) = measure_distance(ones, limit, 1);
        assert_eq!(d, ratio(2, 3));
        let (d, tail) = measure_distance(ones, limit, 0);
        assert!(d.is_zero());
        assert_eq!(tail, int(2));
    }

    #[test]
    fn cylinder_enumeration_order() {
        let names: Vec<String> = (0..8).map(|k| s(&cylinder(k))).collect();
        assert_eq!(names, ["0", "1", "00", "01", "10", "11", "000", "001"]);
    }

    #[test]
    fn periodicity_examples() {
        let v = BlockDag::new(&ConstructionParams::vnk(8));
        assert_eq!(v.is_eventually_periodic(64, 8).unwrap(), Some(1));
        let c = BlockDag::new(&ConstructionParams::chacon(12));
        assert_eq!(c.is_eventually_periodic(10_000, 1000).unwrap(), None);
        let alt = ConstructionParams::periodic(&[Stage::new(2, vec![1, 0]).unwrap()], 8).unwrap();
        let a = BlockDag::new(&alt);
        assert_eq!(a.is_eventually_periodic(100, 4).unwrap(), Some(2));
        // s = (1,1) is not periodic: B_3 = 0101101011
        let both = ConstructionParams::periodic(&[Stage::new(2, vec![1, 1]).unwrap()], 8).unwrap();
        let b = BlockDag::new(&both);
        assert_eq!(s(&b.materialize(3).unwrap()), "0101101011");
        assert_eq!(b.is_eventually_periodic(100, 4).unwrap(), None);
    }

    #[test]
    fn parse_rejects_other_symbols() {
        assert!(parse_word("0120").is_err());
        assert_eq!(parse_word("0110").unwrap(), vec![0, 1, 1, 0]);
    }
}
