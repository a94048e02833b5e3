//! The `A 1^s C` structure of long words of the language.
//!
//! Given an occurrence of `W` inside `B_m`, the canonical decomposition of
//! `B_m` into copies of `B_k` induces a cover of `W` by the maximal canonical
//! blocks of index `>= ell` that lie entirely inside `W`. With `n0` the
//! largest index seen in the cover, a maximal run of 1s is *huge* when it
//! contains a spacer of order `>= n0 + 2`; there is at most one, and it is `B`.

use num_bigint::BigUint;
use num_rational::BigRational;
use serde::Serialize;

use super::{find, word_to_string, BlockDag, Loc};
use crate::construction::spacer_stats;
use crate::error::{Error, Result};
use crate::rational::int;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct CoverBlock {
    /// 0-based start inside `W`.
    pub position: u64,
    pub stage: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AbcDecomposition {
    pub a: String,
    /// `B = 1^b_len`.
    pub b_len: u64,
    pub c: String,
    pub cover: Vec<CoverBlock>,
    pub uncovered: u64,
    /// Largest block index in the cover.
    pub top_stage: Option<usize>,
    pub cover_stage: usize,
    /// `(m, start)`: `W` was read from `B_m` at 0-based `start`.
    pub occurrence: Option<(usize, u64)>,
    /// `W` was found in the language within the searched stages.
    pub valid: bool,
    /// Constructive `N(eps, ell)` and the enlarged `ell'` behind it, when
    /// the spacer ratios of the available prefix allow one.
    pub threshold: Option<BigUint>,
    pub ell_prime: Option<usize>,
}

/// Smallest `ell' >= ell` with `(t_1+...+t_n)/h_n < eps/4` for every
/// available `n >= ell'`, and `N = floor(4 h_{ell'} / eps) + 1`.
///
/// The supremum runs over the available prefix only.
pub fn cover_threshold(
    dag: &BlockDag,
    eps: &BigRational,
    ell: usize,
) -> Result<Option<(usize, BigUint)>> {
    if *eps <= int(0) {
        return Err(Error::Input("eps must be positive".into()));
    }
    let depth = dag.params().depth();
    let stats = spacer_stats(dag.params(), depth)?;
    let bound = eps / int(4);
    let mut ell_prime = None;
    for cand in (ell.max(1)..=depth).rev() {
        if stats.ratios[cand - 1] < bound {
            ell_prime = Some(cand);
        } else {
            break;
        }
    }
    Ok(ell_prime.map(|lp| {
        let n = (int(4) * crate::rational::from_biguint(dag.len(lp)) / eps).floor();
        let n = n.to_integer().to_biguint().expect("positive") + 1u32;
        (lp, n)
    }))
}

/// Decomposes the window `[start, start+len)` of `B_m` with cover blocks of
/// index `>= cover_stage`.
pub fn abc_decompose_at(
    dag: &BlockDag,
    m: usize,
    start: u64,
    len: u64,
    cover_stage: usize,
) -> Result<AbcDecomposition> {
    let h = dag.h(m)?;
    if start.checked_add(len).is_none_or(|e| e > h) {
        return Err(Error::range("window end", start as u128 + len as u128, h));
    }
    if cover_stage == 0 {
        return Err(Error::Input("cover stage must be at least 1".into()));
    }
    let w = dag.segment(m, start, len)?;
    let mut cover = Vec::new();
    collect_cover(dag, m, 0, start, start + len, cover_stage, &mut cover);
    let top = cover.iter().map(|c| c.stage).max();

    let runs = one_runs(&w);
    let huge = match top {
        Some(n0) => runs
            .iter()
            .filter(|&&(lo, hi)| max_order(dag, m, start + lo, start + hi) >= n0 + 2)
            .max_by_key(|&&(lo, hi)| (hi - lo, std::cmp::Reverse(lo)))
            .copied(),
        None => runs
            .iter()
            .max_by_key(|&&(lo, hi)| (hi - lo, std::cmp::Reverse(lo)))
            .copied(),
    };
    // a cover block may end with spacers that the run starts with
    let (b_lo, b_hi) = match huge {
        Some((lo, hi)) => {
            let trimmed = cover
                .iter()
                .map(|c| c.position + dag.hh(c.stage))
                .filter(|&end| end > lo && end <= hi)
                .max()
                .unwrap_or(lo);
            (trimmed, hi)
        }
        None => (len, len),
    };
    let covered: u64 = cover.iter().map(|c| dag.hh(c.stage)).sum();
    let uncovered = len - covered - (b_hi - b_lo);
    Ok(AbcDecomposition {
        a: word_to_string(&w[..b_lo as usize]),
        b_len: b_hi - b_lo,
        c: word_to_string(&w[b_hi as usize..]),
        cover,
        uncovered,
        top_stage: top,
        cover_stage,
        occurrence: Some((m, start)),
        valid: true,
        threshold: None,
        ell_prime: None,
    })
}

/// Decomposes an arbitrary word, locating its leftmost occurrence in the
/// deepest block of index `<= stage_bound` that fits the materialization cap.
pub fn abc_decompose(
    dag: &BlockDag,
    w: &[u8],
    eps: &BigRational,
    ell: usize,
    stage_bound: usize,
) -> Result<AbcDecomposition> {
    if w.iter().any(|&b| b > 1) {
        return Err(Error::Input("word has symbols outside {0,1}".into()));
    }
    if ell == 0 {
        return Err(Error::Input("ell must be at least 1".into()));
    }
    let threshold = cover_threshold(dag, eps, ell)?;
    let top = (1..=stage_bound.min(dag.addressable_stage()))
        .rev()
        .find(|&k| dag.hh(k) <= dag.cap());
    let hit = match top {
        Some(t) if dag.hh(t) >= w.len() as u64 => {
            let text = dag.materialize(t)?;
            find(&text, w).map(|pos| {
                let end = (pos + w.len()) as u64;
                let m = (1..=t).find(|&k| dag.hh(k) >= end).expect("found in B_t");
                (m, pos as u64)
            })
        }
        _ => None,
    };
    let mut out = match hit {
        Some((m, pos)) => abc_decompose_at(dag, m, pos, w.len() as u64, ell)?,
        None => best_effort(w, ell),
    };
    out.ell_prime = threshold.as_ref().map(|t| t.0);
    out.threshold = threshold.map(|t| t.1);
    Ok(out)
}

fn best_effort(w: &[u8], ell: usize) -> AbcDecomposition {
    let runs = one_runs(w);
    let (lo, hi) = runs
        .iter()
        .max_by_key(|&&(lo, hi)| (hi - lo, std::cmp::Reverse(lo)))
        .copied()
        .unwrap_or((w.len() as u64, w.len() as u64));
    AbcDecomposition {
        a: word_to_string(&w[..lo as usize]),
        b_len: hi - lo,
        c: word_to_string(&w[hi as usize..]),
        cover: Vec::new(),
        uncovered: w.len() as u64 - (hi - lo),
        top_stage: None,
        cover_stage: ell,
        occurrence: None,
        valid: false,
        threshold: None,
        ell_prime: None,
    }
}

fn collect_cover(
    dag: &BlockDag,
    k: usize,
    base: u64,
    lo: u64,
    hi: u64,
    cover_stage: usize,
    out: &mut Vec<CoverBlock>,
) {
    let h = dag.hh(k);
    let end = base + h;
    if end <= lo || base >= hi {
        return;
    }
    if base >= lo && end <= hi && k >= cover_stage {
        out.push(CoverBlock { position: base - lo, stage: k });
        return;
    }
    if k <= cover_stage || k == 1 {
        return;
    }
    let child = dag.hh(k - 1);
    let first = match dag.locate(k - 1, lo.max(base) - base) {
        Loc::Block { column, .. } | Loc::Spacer { column, .. } => column,
    };
    let p = dag.params().cut(k - 1) as usize;
    for j in first..p {
        let cb = base + dag.column_start(k - 1, j);
        if cb >= hi {
            break;
        }
        if cb + child > lo {
            collect_cover(dag, k - 1, cb, lo, hi, cover_stage, out);
        }
    }
}

/// Maximal runs of 1s as half-open intervals.
fn one_runs(w: &[u8]) -> Vec<(u64, u64)> {
    let mut runs = Vec::new();
    let mut i = 0;
    while i < w.len() {
        if w[i] == 1 {
            let s = i;
            while i < w.len() && w[i] == 1 {
                i += 1;
            }
            runs.push((s as u64, i as u64));
        } else {
            i += 1;
        }
    }
    runs
}

/// Largest spacer order among positions `[lo, hi)` of `B_m`, a run of 1s.
/// A run never contains the first symbol of a block, so it either stays in
/// one child block or reaches a spacer gap of the current block.
fn max_order(dag: &BlockDag, m: usize, lo: u64, hi: u64) -> usize {
    let (mut k, mut lo, mut hi) = (m, lo, hi);
    while k > 1 {
        match dag.locate(k - 1, lo) {
            Loc::Block { offset, .. } if offset + (hi - lo) <= dag.hh(k - 1) => {
                hi = offset + (hi - lo);
                lo = offset;
                k -= 1;
            }
            _ => return k,
        }
    }
    1
}
