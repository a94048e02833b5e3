//! Limit profiles of stabilizing subsequences and the laws `P_j`.
//!
//! Along a subsequence `n_k`, the parameters around `n_k` may converge:
//! `p_{n_k+m} -> pi_m` and `s_{n_k+m,j} -> eta_{m,j}`. The window of limit
//! parameters is a [`LimitProfile`]; `P_j` is the law of
//! `gamma + gamma∘S + ... + gamma∘S^{j-1}` on the limit odometer.

mod certificate;
mod classify;

pub use certificate::{disjointness_certificate, DisjointnessVerdict, Exclusion, Verdict};
pub use classify::{classify, eigenvalue_search, flat_step_detect, return_time_gcd, Classification};

use std::collections::{BTreeMap, BTreeSet};

use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::construction::{ConstructionParams, Stage};
use crate::distribution::IntegerDistribution;
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::odometer::Columns;
use crate::rational::{int, pow2, ratio};

/// Limit parameters `(pi_m, eta_m)` for `m` in
/// `window_start ..= window_start + stages.len() - 1`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LimitProfile {
    pub window_start: i64,
    pub stages: Vec<Stage>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bounded_by: Option<u64>,
}

impl LimitProfile {
    pub fn new(window_start: i64, stages: Vec<Stage>, bounded_by: Option<u64>) -> Result<Self> {
        if stages.is_empty() {
            return Err(Error::Input("empty profile window".into()));
        }
        for st in &stages {
            if st.cut < 2 || st.spacers.len() as u64 != st.cut {
                return Err(Error::Input(format!("invalid profile stage {st:?}")));
            }
            if let Some(b) = bounded_by {
                if st.max_spacer() > b {
                    return Err(Error::Input(format!(
                        "profile value {} exceeds declared bound {b}",
                        st.max_spacer()
                    )));
                }
            }
        }
        Ok(LimitProfile { window_start, stages, bounded_by })
    }

    /// The same stage repeated over `[lo, hi]`.
    pub fn constant(stage: Stage, lo: i64, hi: i64) -> Result<Self> {
        LimitProfile::periodic(&[stage], lo, hi)
    }

    /// `pattern[(m - 1) mod period]` at every `m` in `[lo, hi]`.
    pub fn periodic(pattern: &[Stage], lo: i64, hi: i64) -> Result<Self> {
        if pattern.is_empty() || hi < lo {
            return Err(Error::Input("empty periodic profile".into()));
        }
        let t = pattern.len() as i64;
        let stages = (lo..=hi).map(|m| pattern[(m - 1).rem_euclid(t) as usize].clone()).collect();
        let bound = pattern.iter().map(Stage::max_spacer).max();
        LimitProfile::new(lo, stages, bound)
    }

    pub fn window_end(&self) -> i64 {
        self.window_start + self.stages.len() as i64 - 1
    }

    pub fn get(&self, m: i64) -> Option<&Stage> {
        if m < self.window_start {
            return None;
        }
        self.stages.get((m - self.window_start) as usize)
    }

    fn stage(&self, m: i64) -> Result<&Stage> {
        self.get(m).ok_or_else(|| {
            Error::range("profile index", m, format!("{}..={}", self.window_start, self.window_end()))
        })
    }

    /// Re-indexes so that old index `m` becomes `m - shift`.
    pub fn shifted(&self, shift: i64) -> LimitProfile {
        LimitProfile { window_start: self.window_start - shift, ..self.clone() }
    }

    pub fn max_value(&self) -> u64 {
        self.stages.iter().map(Stage::max_spacer).max().unwrap_or(0)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let raw: LimitProfile = serde_json::from_str(text)?;
        LimitProfile::new(raw.window_start, raw.stages, raw.bounded_by)
    }
}

/// A group of stage indices sharing the same surrounding parameter window.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StabilizingCandidate {
    pub indices: Vec<usize>,
    /// `n = offset + step * k` when the indices form a progression.
    pub progression: Option<(usize, usize)>,
    pub profile: LimitProfile,
}

impl StabilizingCandidate {
    pub fn describe(&self) -> String {
        match self.progression {
            Some((a, 1)) => format!("all n >= {a} in range"),
            Some((a, d)) => format!("n = {a} + {d}k"),
            None => format!("n in {:?}", self.indices),
        }
    }
}

/// Groups `n` in `range` by the window of stages `[n - left, n + right]`
/// and returns every window that occurs at least twice. Refuses when a
/// parameter in range exceeds `max_value`.
pub fn detect_stabilizing(
    params: &ConstructionParams,
    left: usize,
    right: usize,
    range: (usize, usize),
    max_value: u64,
) -> Result<Vec<StabilizingCandidate>> {
    let (lo, hi) = range;
    if lo == 0 || hi < lo {
        return Err(Error::Input(format!("bad search range {lo}..={hi}")));
    }
    let first = lo.max(left + 1);
    let last = hi.min(params.depth().saturating_sub(right));
    for n in lo..=hi.min(params.depth()) {
        let st = params.stage(n);
        if st.cut > max_value || st.max_spacer() > max_value {
            return Err(Error::Refusal(format!(
                "parameters look unbounded: stage {n} has cut {} and max spacer {} (limit {max_value})",
                st.cut,
                st.max_spacer()
            )));
        }
    }
    let mut groups: BTreeMap<&[Stage], Vec<usize>> = BTreeMap::new();
    for n in first..=last {
        groups.entry(&params.stages()[n - left - 1..n + right]).or_default().push(n);
    }
    let mut out = Vec::new();
    for (window, indices) in groups {
        if indices.len() < 2 {
            continue;
        }
        let step = indices[1] - indices[0];
        let progression =
            indices.windows(2).all(|w| w[1] - w[0] == step).then_some((indices[0], step));
        let profile = LimitProfile::new(-(left as i64), window.to_vec(), None)?;
        out.push(StabilizingCandidate { indices, progression, profile });
    }
    out.sort_by_key(|c| c.indices[0]);
    Ok(out)
}

/// `S_m` and `E_m = S_m - S_m`.
pub fn sets_se(profile: &LimitProfile, m: i64) -> Result<(BTreeSet<i64>, BTreeSet<i64>)> {
    let a = profile.stage(m)?;
    let b = profile.stage(m + 1)?;
    let mut s: BTreeSet<i64> = a.spacers[..a.spacers.len() - 1].iter().map(|&x| x as i64).collect();
    let top = *a.spacers.last().expect("cut >= 2") as i64;
    s.extend(b.spacers[..b.spacers.len() - 1].iter().map(|&x| top + x as i64));
    let e = s.iter().flat_map(|x| s.iter().map(move |y| x - y)).collect();
    Ok((s, e))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ProfileInvariants {
    pub non_flat: bool,
    pub bounded_recurrent: bool,
    /// Largest limit spacer value in the window.
    pub bound: u64,
    pub d_infinity: Option<u64>,
    /// Number of `m` whose `E_m` entered the computation.
    pub window: usize,
}

/// Non-flatness, boundedness and `d_infinity`, restricted to the window.
pub fn profile_invariants(profile: &LimitProfile) -> ProfileInvariants {
    let mut g: u64 = 0;
    let mut non_flat = false;
    let mut window = 0;
    for m in profile.window_start..profile.window_end() {
        let (_, e) = sets_se(profile, m).expect("m and m+1 are in the window");
        window += 1;
        for d in e {
            if d != 0 {
                non_flat = true;
                g = g.gcd(&d.unsigned_abs());
            }
        }
    }
    let bound = profile.max_value();
    ProfileInvariants {
        non_flat,
        bounded_recurrent: profile.bounded_by.is_none_or(|b| bound <= b),
        bound: profile.bounded_by.unwrap_or(bound),
        d_infinity: (g > 0).then_some(g),
        window,
    }
}

/// `P_j` with the exponential-tail diagnostics.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LimitLaw {
    pub law: IntegerDistribution,
    pub depth: usize,
    pub j: u64,
    /// Values `v` violating `mass(>= v) <= j 2^{-v/(jR)}`.
    pub stated_tail_violations: Vec<i64>,
    /// Values `v` violating `mass(>= v) <= j 2^{1 - v/(jR)}`.
    pub corrected_tail_violations: Vec<i64>,
}

/// Exact `P_j` from coordinates `1..=r` of the profile.
pub fn limit_distribution(
    profile: &LimitProfile,
    j: u64,
    r: usize,
    exec: Execution,
) -> Result<LimitLaw> {
    if r == 0 || profile.window_start > 1 || profile.window_end() < r as i64 + 1 {
        return Err(Error::range(
            "profile window",
            format!("{}..={}", profile.window_start, profile.window_end()),
            format!("a window covering 1..={}", r + 1),
        ));
    }
    let cols = Columns {
        radices: (1..=r as i64).map(|m| profile.stage(m).map(|s| s.cut)).collect::<Result<_>>()?,
        spacers: (1..=r as i64)
            .map(|m| profile.stage(m).map(|s| &s.spacers[..]))
            .collect::<Result<_>>()?,
    };
    let law = cols.law_by_enumeration(j, exec)?;
    let (stated, corrected) = match profile.bounded_by.or(Some(profile.max_value())) {
        Some(bound) if bound > 0 => tail_checks(&law, j, bound),
        _ => (Vec::new(), Vec::new()),
    };
    Ok(LimitLaw {
        law,
        depth: r,
        j,
        stated_tail_violations: stated,
        corrected_tail_violations: corrected,
    })
}

/// Checks `mass(>= v) <= j 2^{c - v/(jR)}` for `c = 0` and `c = 1`, over
/// every enumerated value `v >= 1`. Exact: both sides are raised to the
/// power `jR`.
pub fn tail_checks(law: &IntegerDistribution, j: u64, bound: u64) -> (Vec<i64>, Vec<i64>) {
    let jr = (j * bound) as usize;
    let check = |v: i64, c: i64| {
        // (mass / j)^{jR} * 2^{v - c jR} <= 1
        let lhs = num_traits::pow(law.mass_at_least(v) / int(j as i64), jr) * pow2(v - c * jr as i64);
        lhs <= BigRational::one()
    };
    let values: Vec<i64> = law.masses.keys().copied().filter(|&v| v >= 1).collect();
    let stated = values.iter().copied().filter(|&v| !check(v, 0)).collect();
    let corrected = values.iter().copied().filter(|&v| !check(v, 1)).collect();
    (stated, corrected)
}

/// Closed form of `P_1` for a periodic profile whose maximal columns carry
/// no spacers (`eta_m(pi_m - 1) = 0` along the period). Then `gamma` is
/// `eta_t(y_t)` with `y_t` uniform below `pi_t - 1`, and summing the
/// geometric law of `t` over whole periods gives `Q / (1 - rho)`.
pub fn analytic_law_j1(pattern: &[Stage]) -> Option<BTreeMap<i64, BigRational>> {
    if pattern.is_empty() || pattern.iter().any(|s| *s.spacers.last().expect("cut >= 2") != 0) {
        return None;
    }
    let mut q: BTreeMap<i64, BigRational> = BTreeMap::new();
    let mut reach = BigRational::one();
    for st in pattern {
        let p = st.cut as i64;
        for &e in &st.spacers[..st.spacers.len() - 1] {
            *q.entry(e as i64).or_insert_with(BigRational::zero) += &reach * ratio(1, p);
        }
        reach *= ratio(1, p);
    }
    let scale = BigRational::one() / (BigRational::one() - reach);
    Some(q.into_iter().map(|(v, m)| (v, m * &scale)).collect())
}
