//! Cylinder correlations inside building blocks and the weak-limit
//! predictions they are checked against.
//!
//! `corr(W1, W2, m)` is the fraction of valid positions `i` of `B_n` with
//! `W1` at `i` and `W2` at `i + m`; valid means both words fit, so the
//! denominator is `h(n) - max(|W1|, m + |W2|) + 1`.

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Serialize, Serializer};

use crate::blocks::{count_occurrences, word_to_string, BlockDag};
use crate::construction::Family;
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::odometer::cocycle_distribution;
use crate::rational::{self, fmt, fmt_f64, from_biguint, int, ratio, to_f64};

/// Number of independent sampling streams.
pub const SHARDS: u64 = 64;
/// Longest word handled by the joint histogram.
const MAX_TABLE_LEN: usize = 8;
/// Largest number of free symbols expanded by [`exact_short_lag`].
const MAX_GAP: usize = 20;
const CHUNK: usize = 1 << 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "method", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Method {
    ExactScan,
    Sampled { samples: u64, seed: u64 },
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::ExactScan => "EXACT_SCAN",
            Method::Sampled { .. } => "SAMPLED",
        }
    }

    pub fn seed(&self) -> Option<u64> {
        match self {
            Method::ExactScan => None,
            Method::Sampled { seed, .. } => Some(*seed),
        }
    }
}

/// 95% Hoeffding half-width for the mean of `samples` indicators.
pub fn hoeffding_half_width(samples: u64) -> f64 {
    ((2.0f64 / 0.05).ln() / (2.0 * samples as f64)).sqrt()
}

#[derive(Clone, Debug, PartialEq)]
pub enum Estimate {
    Exact(BigRational),
    Sampled { value: f64, samples: u64, half_width: f64 },
}

impl Estimate {
    pub fn to_f64(&self) -> f64 {
        match self {
            Estimate::Exact(r) => to_f64(r),
            Estimate::Sampled { value, .. } => *value,
        }
    }

    pub fn half_width(&self) -> Option<f64> {
        match self {
            Estimate::Exact(_) => None,
            Estimate::Sampled { half_width, .. } => Some(*half_width),
        }
    }

    /// `num/den` when exact, 17 significant digits when sampled.
    pub fn render(&self) -> String {
        match self {
            Estimate::Exact(r) => fmt(r),
            Estimate::Sampled { value, .. } => fmt_f64(*value),
        }
    }
}

impl Serialize for Estimate {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.render())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CorrelationEstimate {
    pub w1: String,
    pub w2: String,
    pub lag: u64,
    pub stage: usize,
    pub method: Method,
    pub estimate: Estimate,
    pub hits: u64,
    /// Valid positions (exact) or samples drawn (sampled).
    pub trials: u64,
}

fn check_word(w: &[u8]) -> Result<()> {
    if w.is_empty() || w.iter().any(|&b| b > 1) {
        return Err(Error::Input(format!("bad cylinder word {:?}", word_to_string(w))));
    }
    Ok(())
}

/// Number of valid positions for the pair at this lag.
fn valid_positions(h: u64, l1: usize, lag: u64, l2: usize) -> Result<u64> {
    let need = (l1 as u64).max(lag.saturating_add(l2 as u64));
    if need > h {
        return Err(Error::range("lag", lag, format!("0..={}", h.saturating_sub(l2 as u64))));
    }
    Ok(h - need + 1)
}

/// `corr(W1, W2, lag)` in `B_n`.
pub fn correlation(
    dag: &BlockDag,
    w1: &[u8],
    w2: &[u8],
    lag: u64,
    n: usize,
    method: Method,
    exec: Execution,
) -> Result<CorrelationEstimate> {
    check_word(w1)?;
    check_word(w2)?;
    let h = dag.h(n)?;
    let valid = valid_positions(h, w1.len(), lag, w2.len())?;
    let (estimate, hits, trials) = match method {
        Method::ExactScan => {
            let text = dag.materialize(n)?;
            let hits = scan_count(&text, w1, w2, lag as usize, valid as usize, exec);
            (Estimate::Exact(ratio(hits, valid)), hits, valid)
        }
        Method::Sampled { samples, seed } => {
            if samples == 0 {
                return Err(Error::Input("sample budget must be positive".into()));
            }
            let hits = sample_hits(dag, n, w1, w2, lag, valid, samples, seed, exec);
            let value = hits as f64 / samples as f64;
            let half_width = hoeffding_half_width(samples);
            (Estimate::Sampled { value, samples, half_width }, hits, samples)
        }
    };
    Ok(CorrelationEstimate {
        w1: word_to_string(w1),
        w2: word_to_string(w2),
        lag,
        stage: n,
        method,
        estimate,
        hits,
        trials,
    })
}

fn matches_at(text: &[u8], w1: &[u8], w2: &[u8], lag: usize, i: usize) -> bool {
    text[i..i + w1.len()] == *w1 && text[i + lag..i + lag + w2.len()] == *w2
}

fn scan_count(text: &[u8], w1: &[u8], w2: &[u8], lag: usize, valid: usize, exec: Execution) -> u64 {
    let chunks = valid.div_ceil(CHUNK);
    exec.map_range(chunks, |c| {
        let hi = ((c + 1) * CHUNK).min(valid);
        (c * CHUNK..hi).filter(|&i| matches_at(text, w1, w2, lag, i)).count() as u64
    })
    .into_iter()
    .sum()
}

#[allow(clippy::too_many_arguments)]
fn sample_hits(
    dag: &BlockDag,
    n: usize,
    w1: &[u8],
    w2: &[u8],
    lag: u64,
    valid: u64,
    samples: u64,
    seed: u64,
    exec: Execution,
) -> u64 {
    let per = samples / SHARDS;
    let extra = samples % SHARDS;
    let hit = |i: u64| {
        w1.iter().enumerate().all(|(b, &s)| dag.symbol0(n, i + b as u64) == s)
            && w2.iter().enumerate().all(|(b, &s)| dag.symbol0(n, i + lag + b as u64) == s)
    };
    exec.map_range(SHARDS as usize, |shard| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(shard as u64);
        let draws = per + u64::from((shard as u64) < extra);
        (0..draws).filter(|_| hit(rng.gen_range(0..valid))).count() as u64
    })
    .into_iter()
    .sum()
}

/// Joint histogram of the length-`len` windows at `i` and `i + lag`, for
/// answering many pair counts at one lag with a single pass.
pub struct JointTable<'a> {
    text: &'a [u8],
    lag: usize,
    len: usize,
    counts: Vec<u64>,
    /// Positions `0..full` are in the histogram.
    full: usize,
}

fn window_code(w: &[u8]) -> usize {
    w.iter().enumerate().fold(0, |c, (b, &s)| c | (s as usize) << b)
}

impl<'a> JointTable<'a> {
    pub fn build(text: &'a [u8], lag: u64, len: usize, exec: Execution) -> Result<Self> {
        if len == 0 || len > MAX_TABLE_LEN {
            return Err(Error::range("table word length", len, format!("1..={MAX_TABLE_LEN}")));
        }
        let lag = lag as usize;
        let full = (text.len() + 1).saturating_sub(lag + len);
        let size = 1usize << (2 * len);
        let top = len - 1;
        let parts = exec.map_range(full.div_ceil(CHUNK), |c| {
            let lo = c * CHUNK;
            let hi = (lo + CHUNK).min(full);
            let mut hist = vec![0u64; size];
            let mut a = window_code(&text[lo..lo + len]);
            let mut b = window_code(&text[lo + lag..lo + lag + len]);
            for i in lo..hi {
                hist[a << len | b] += 1;
                if i + 1 < hi {
                    a = a >> 1 | (text[i + len] as usize) << top;
                    b = b >> 1 | (text[i + lag + len] as usize) << top;
                }
            }
            hist
        });
        let mut counts = vec![0u64; size];
        for part in parts {
            for (c, p) in counts.iter_mut().zip(part) {
                *c += p;
            }
        }
        Ok(JointTable { text, lag, len, counts, full })
    }

    /// Positions with `W1` at `i` and `W2` at `i + lag`, over all valid `i`.
    pub fn count(&self, w1: &[u8], w2: &[u8]) -> Result<u64> {
        check_word(w1)?;
        check_word(w2)?;
        if w1.len() > self.len || w2.len() > self.len {
            return Err(Error::range("word length", w1.len().max(w2.len()), format!("1..={}", self.len)));
        }
        let valid = valid_positions(self.text.len() as u64, w1.len(), self.lag as u64, w2.len())? as usize;
        let (c1, m1) = (window_code(w1), (1usize << w1.len()) - 1);
        let (c2, m2) = (window_code(w2), (1usize << w2.len()) - 1);
        let mut total = 0;
        // enumerate completions of the two prefixes to full windows
        for hi1 in 0..1usize << (self.len - w1.len()) {
            let a = c1 | hi1 << w1.len();
            debug_assert_eq!(a & m1, c1);
            for hi2 in 0..1usize << (self.len - w2.len()) {
                let b = c2 | hi2 << w2.len();
                debug_assert_eq!(b & m2, c2);
                total += self.counts[a << self.len | b];
            }
        }
        total += (self.full..valid).filter(|&i| matches_at(self.text, w1, w2, self.lag, i)).count() as u64;
        Ok(total)
    }
}

/// `corr(W1, W2, lag)` in `B_n` without scanning: the two placements merge
/// into one pattern with at most [`MAX_GAP`] free symbols, and each
/// completion is counted by the block recursion. Works at any stage.
pub fn exact_short_lag(dag: &BlockDag, w1: &[u8], w2: &[u8], lag: u64, n: usize) -> Result<BigRational> {
    check_word(w1)?;
    check_word(w2)?;
    let span = w1.len().max(lag as usize + w2.len());
    if span > w1.len() + w2.len() + MAX_GAP {
        return Err(Error::range("lag", lag, format!("at most {} for exact expansion", w1.len() + MAX_GAP)));
    }
    let h = dag.len(n);
    if BigUint::from(span) > *h {
        return Err(Error::range("lag", lag, format!("pair must fit in B_{n}")));
    }
    let den = from_biguint(&(h - BigUint::from(span) + 1u32));
    let mut pattern: Vec<Option<u8>> = vec![None; span];
    for (i, &s) in w1.iter().enumerate() {
        pattern[i] = Some(s);
    }
    for (i, &s) in w2.iter().enumerate() {
        let slot = &mut pattern[lag as usize + i];
        match *slot {
            Some(t) if t != s => return Ok(BigRational::zero()),
            _ => *slot = Some(s),
        }
    }
    let free: Vec<usize> = (0..span).filter(|&i| pattern[i].is_none()).collect();
    let mut word: Vec<u8> = pattern.iter().map(|s| s.unwrap_or(0)).collect();
    let mut total = BigUint::zero();
    for fill in 0..1u64 << free.len() {
        for (b, &i) in free.iter().enumerate() {
            word[i] = (fill >> b & 1) as u8;
        }
        total += count_occurrences(dag, &word, n)?;
    }
    Ok(from_biguint(&total) / den)
}

/// All binary words of length `1..=max_len`, shortest first.
pub fn words_up_to(max_len: usize) -> Vec<Vec<u8>> {
    (1..=max_len)
        .flat_map(|l| (0..1u32 << l).map(move |c| (0..l).rev().map(|b| (c >> b & 1) as u8).collect()))
        .collect()
}

/// Every ordered pair of words of length `1..=max_len`.
pub fn all_pairs(max_len: usize) -> Vec<(Vec<u8>, Vec<u8>)> {
    let words = words_up_to(max_len);
    words.iter().flat_map(|a| words.iter().map(move |b| (a.clone(), b.clone()))).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReportRow {
    pub family: String,
    pub stage: usize,
    pub j_or_alpha: String,
    pub lag: u64,
    pub w1: String,
    pub w2: String,
    pub observed: Estimate,
    #[serde(serialize_with = "rational::serialize")]
    pub predicted: BigRational,
    pub method: &'static str,
    pub seed: Option<u64>,
}

impl ReportRow {
    pub fn abs_error(&self) -> f64 {
        (self.observed.to_f64() - to_f64(&self.predicted)).abs()
    }

    fn abs_error_text(&self) -> String {
        match &self.observed {
            Estimate::Exact(r) => fmt(&(r - &self.predicted).abs()),
            Estimate::Sampled { .. } => fmt_f64(self.abs_error()),
        }
    }

    /// Exact comparison when the observation is exact.
    pub fn within(&self, tolerance: &BigRational) -> bool {
        match &self.observed {
            Estimate::Exact(r) => (r - &self.predicted).abs() <= *tolerance,
            Estimate::Sampled { .. } => self.abs_error() <= to_f64(tolerance),
        }
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            self.family,
            self.stage,
            self.j_or_alpha,
            self.lag,
            self.w1,
            self.w2,
            self.observed.render(),
            fmt(&self.predicted),
            self.abs_error_text(),
            self.observed.half_width().map(fmt_f64).unwrap_or_default(),
            self.method,
            self.seed.map(|s| s.to_string()).unwrap_or_default()
        )
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CorrelationReport {
    /// Stage whose block was scanned or sampled.
    pub scan_stage: usize,
    #[serde(serialize_with = "rational::serialize")]
    pub tolerance: BigRational,
    pub rows: Vec<ReportRow>,
    pub notes: Vec<String>,
}

impl CorrelationReport {
    pub const CSV_HEADER: &'static str = "family,stage,j_or_alpha,lag,W1,W2,observed,predicted,abs_error,ci,method,seed";

    pub fn passed(&self) -> bool {
        self.rows.iter().all(|r| r.within(&self.tolerance))
    }

    pub fn max_error(&self) -> f64 {
        self.rows.iter().map(ReportRow::abs_error).fold(0.0, f64::max)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(Self::CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            out.push_str(&r.csv_row());
            out.push('\n');
        }
        out
    }
}

/// Where and how the observed side of a report is measured.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScanOptions {
    /// Block to measure in; each check has its own default.
    pub stage: Option<usize>,
    pub method: Method,
    pub exec: Execution,
}

impl Default for ScanOptions {
    fn default() -> Self {
        ScanOptions { stage: None, method: Method::ExactScan, exec: Execution::Parallel }
    }
}

type Pair = (Vec<u8>, Vec<u8>);

fn max_len(pairs: &[Pair]) -> usize {
    pairs.iter().map(|(a, b)| a.len().max(b.len())).max().unwrap_or(0)
}

/// Observed `corr(W1, W2, lag)` in `B_stage` for every pair.
fn observe(dag: &BlockDag, stage: usize, pairs: &[Pair], lag: u64, opts: &ScanOptions) -> Result<Vec<Estimate>> {
    let h = dag.h(stage)?;
    if lag.saturating_add(max_len(pairs) as u64) > h {
        return Err(Error::Refusal(format!("lag {lag} does not fit in B_{stage} of length {h}")));
    }
    match opts.method {
        Method::ExactScan => {
            let text = dag.materialize(stage)?;
            let l = max_len(pairs);
            if l <= MAX_TABLE_LEN {
                let table = JointTable::build(&text, lag, l, opts.exec)?;
                pairs
                    .iter()
                    .map(|(a, b)| {
                        let valid = valid_positions(h, a.len(), lag, b.len())?;
                        Ok(Estimate::Exact(ratio(table.count(a, b)?, valid)))
                    })
                    .collect()
            } else {
                pairs
                    .iter()
                    .map(|(a, b)| {
                        let valid = valid_positions(h, a.len(), lag, b.len())?;
                        let hits = scan_count(&text, a, b, lag as usize, valid as usize, opts.exec);
                        Ok(Estimate::Exact(ratio(hits, valid)))
                    })
                    .collect()
            }
        }
        Method::Sampled { .. } => pairs
            .iter()
            .map(|(a, b)| Ok(correlation(dag, a, b, lag, stage, opts.method, opts.exec)?.estimate))
            .collect(),
    }
}

fn deepest_within_cap(dag: &BlockDag) -> usize {
    (1..=dag.addressable_stage()).rev().find(|&k| dag.hh(k) <= dag.cap()).unwrap_or(1)
}

/// Compares `corr(W1, W2, j h(n+1))` with `sum_v P(v) corr(W2, W1, v)`,
/// `P` being the law of `f^{(j q_n)} - j h_{n+1}` enumerated over `r`
/// coordinates. By default the observed side is measured in the deepest
/// block within the materialization cap.
#[allow(clippy::too_many_arguments)]
pub fn verify_pj_prediction(
    dag: &BlockDag,
    n: usize,
    j: u64,
    pairs: &[Pair],
    r: usize,
    tolerance: &BigRational,
    opts: &ScanOptions,
) -> Result<CorrelationReport> {
    if j == 0 {
        return Err(Error::Input("j must be positive".into()));
    }
    let params = dag.params();
    let law = cocycle_distribution(params, n, j, r, opts.exec)?;
    let stage = opts.stage.unwrap_or_else(|| deepest_within_cap(dag));
    if stage < n + 2 {
        return Err(Error::Refusal(format!(
            "scan stage {stage} is shallower than n + 2 = {}; raise the cap or lower n",
            n + 2
        )));
    }
    let lag = dag
        .h(n + 1)?
        .checked_mul(j)
        .ok_or_else(|| Error::Refusal("lag overflows".into()))?;
    let observed = observe(dag, stage, pairs, lag, opts)?;
    let mut rows = Vec::with_capacity(pairs.len());
    for ((a, b), obs) in pairs.iter().zip(observed) {
        let mut predicted = BigRational::zero();
        for (&v, mass) in &law.masses {
            predicted += mass * exact_short_lag(dag, b, a, v as u64, stage)?;
        }
        rows.push(ReportRow {
            family: params.family().name().into(),
            stage: n,
            j_or_alpha: j.to_string(),
            lag,
            w1: word_to_string(a),
            w2: word_to_string(b),
            observed: obs,
            predicted,
            method: opts.method.name(),
            seed: opts.method.seed(),
        });
    }
    let mut notes = vec![format!("law at stage {n}, {r} coordinates: {}", law.describe())];
    if law.tail_mass.is_positive() {
        notes.push(format!("unresolved mass {} is left out of the prediction", fmt(&law.tail_mass)));
    }
    Ok(CorrelationReport { scan_stage: stage, tolerance: tolerance.clone(), rows, notes })
}

/// Rigid generalized Chacon: `corr(W1, W2, j floor(alpha p_n) h_n)` against
/// `j alpha corr(W2, W1, 1) + (1 - j alpha) corr(W1, W2, 0)`. Measured in
/// `B_{n+2}` by default.
#[allow(clippy::too_many_arguments)]
pub fn verify_rigid_chacon(
    dag: &BlockDag,
    alpha: &BigRational,
    j: u64,
    n: usize,
    pairs: &[Pair],
    tolerance: &BigRational,
    opts: &ScanOptions,
) -> Result<CorrelationReport> {
    let params = dag.params();
    if !matches!(params.family(), Family::GeneralizedChacon { .. }) {
        return Err(Error::Input(format!(
            "rigid check needs a generalized Chacon construction, got {}",
            params.family().name()
        )));
    }
    if j == 0 || alpha.is_negative() {
        return Err(Error::Input("j must be positive and alpha non-negative".into()));
    }
    let ja = alpha * int(j);
    if ja >= int(1) {
        return Err(Error::Refusal(format!("j * alpha = {} is not below 1", fmt(&ja))));
    }
    params.check_stage(n)?;
    let p = params.cut(n);
    let k = (alpha * int(p)).floor().to_integer();
    let k: u64 = k.try_into().map_err(|_| Error::Input("alpha p_n out of range".into()))?;
    let lag = j * k * dag.h(n)?;
    let stage = opts.stage.unwrap_or(n + 2);
    let observed = observe(dag, stage, pairs, lag, opts)?;
    let mut rows = Vec::with_capacity(pairs.len());
    for ((a, b), obs) in pairs.iter().zip(observed) {
        let predicted = &ja * exact_short_lag(dag, b, a, 1, stage)?
            + (int(1) - &ja) * exact_short_lag(dag, a, b, 0, stage)?;
        rows.push(ReportRow {
            family: params.family().name().into(),
            stage: n,
            j_or_alpha: if j == 1 { fmt(alpha) } else { format!("{j}*{}", fmt(alpha)) },
            lag,
            w1: word_to_string(a),
            w2: word_to_string(b),
            observed: obs,
            predicted,
            method: opts.method.name(),
            seed: opts.method.seed(),
        });
    }
    let notes = vec![format!("p_{n} = {p}, floor(alpha p_n) = {k}")];
    Ok(CorrelationReport { scan_stage: stage, tolerance: tolerance.clone(), rows, notes })
}

/// Admissible `l_n` values: multiples of `h_n + 1` within `p_n^slack` of
/// `alpha p_n / 2`, nearest first (ties to the larger value).
pub fn katok_ell_candidates(h: u64, p: u64, alpha: &BigRational, slack: f64) -> (Vec<u64>, f64) {
    let centre = to_f64(alpha) * p as f64 / 2.0;
    let radius = (p as f64).powf(slack);
    let step = h + 1;
    let lo = ((centre - radius).max(0.0) / step as f64).ceil() as u64;
    let hi = ((centre + radius) / step as f64).floor() as u64;
    let mut out: Vec<u64> = (lo..=hi).map(|m| m * step).filter(|&l| l > 0).collect();
    out.sort_by(|a, b| {
        let (da, db) = ((*a as f64 - centre).abs(), (*b as f64 - centre).abs());
        da.total_cmp(&db).then(b.cmp(a))
    });
    (out, centre)
}

/// Katok: `corr(A, B, l_n h_n)` against
/// `alpha freq(A) freq(B) + (1 - alpha) corr(A, B, 0)`. `ell = None` picks
/// the admissible value nearest `alpha p_n / 2`. Measured in `B_{n+2}` by
/// default. Refuses when `p_k / h_k` does not grow along the prefix.
#[allow(clippy::too_many_arguments)]
pub fn verify_katok(
    dag: &BlockDag,
    alpha: &BigRational,
    n: usize,
    ell: Option<u64>,
    slack: f64,
    pairs: &[Pair],
    tolerance: &BigRational,
    opts: &ScanOptions,
) -> Result<CorrelationReport> {
    let params = dag.params();
    if *params.family() != Family::Katok {
        return Err(Error::Input(format!(
            "Katok check needs a katok construction, got {}",
            params.family().name()
        )));
    }
    if alpha.is_negative() || *alpha > int(1) {
        return Err(Error::Input(format!("alpha = {} outside [0, 1]", fmt(alpha))));
    }
    params.check_stage(n)?;
    let ratios: Vec<BigRational> = (1..=params.depth().min(dag.addressable_stage()))
        .map(|k| ratio(params.cut(k), dag.hh(k)))
        .collect();
    if ratios.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Refusal("p_n / h_n does not grow along the given stages".into()));
    }
    let h = dag.h(n)?;
    let p = params.cut(n);
    let (candidates, centre) = katok_ell_candidates(h, p, alpha, slack);
    let ell = match ell {
        Some(l) if candidates.contains(&l) => l,
        Some(l) => {
            return Err(Error::Refusal(format!(
                "l_{n} = {l} is not a multiple of h_{n} + 1 = {} within p_{n}^{slack} of {centre}; valid: {:?}",
                h + 1,
                &candidates[..candidates.len().min(4)]
            )))
        }
        None => match candidates.first() {
            Some(&l) => l,
            None => {
                let step = h + 1;
                let below = (centre / step as f64).floor() as u64 * step;
                return Err(Error::Refusal(format!(
                    "no multiple of {step} within p_{n}^{slack} of {centre}; nearest are {below} and {}",
                    below + step
                )));
            }
        },
    };
    let lag = ell * h;
    let stage = opts.stage.unwrap_or(n + 2);
    let observed = observe(dag, stage, pairs, lag, opts)?;
    let mut rows = Vec::with_capacity(pairs.len());
    for ((a, b), obs) in pairs.iter().zip(observed) {
        let fa = dag.frequency(a, stage)?.frequency;
        let fb = dag.frequency(b, stage)?.frequency;
        let predicted = alpha * fa * fb + (int(1) - alpha) * exact_short_lag(dag, a, b, 0, stage)?;
        rows.push(ReportRow {
            family: params.family().name().into(),
            stage: n,
            j_or_alpha: fmt(alpha),
            lag,
            w1: word_to_string(a),
            w2: word_to_string(b),
            observed: obs,
            predicted,
            method: opts.method.name(),
            seed: opts.method.seed(),
        });
    }
    let notes = vec![
        format!("l_{n} = {ell} (h_{n} + 1 = {}, alpha p_{n} / 2 = {centre})", h + 1),
        "p_n / h_n grows along the given stages".to_string(),
    ];
    Ok(CorrelationReport { scan_stage: stage, tolerance: tolerance.clone(), rows, notes })
}
