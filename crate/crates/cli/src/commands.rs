//! One function per subcommand. Arguments stay in their textual form so
//! that a manifest stores exactly what was asked for.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use clap::Args;
use num_rational::BigRational;
use rankone::blocks::{abc_decompose, parse_word, word_to_string, BlockDag};
use rankone::construction::heights;
use rankone::correlations::{
    all_pairs, correlation, verify_katok, verify_pj_prediction, verify_rigid_chacon, CorrelationReport, Method,
    ScanOptions,
};
use rankone::limits::{
    classify, detect_stabilizing, disjointness_certificate, eigenvalue_search, flat_step_detect, limit_distribution,
    profile_invariants, return_time_gcd, DisjointnessVerdict, LimitProfile,
};
use rankone::odometer::{cocycle_distribution, cocycle_distribution_transfer};
use rankone::rational::{self, fmt, fmt_f64};
use rankone::sarnak::{
    eigenfunction_sarnak_average, grid_csv, mobius, orbit_word, prime_power_correlation, sarnak_sum,
    suspension_sarnak_sum, trend_diagnostic, CylinderObservable, GridPoint, OrbitSpec, Suspension,
};
use rankone::{ConstructionParams, Error, Result};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::{Command, Ctx, Format, Output};

pub fn dispatch(cmd: &Command, ctx: &Ctx) -> Result<Output> {
    match cmd {
        Command::Heights(a) => run_heights(a, ctx),
        Command::Blocks(a) => run_blocks(a, ctx),
        Command::Freq(a) => run_freq(a, ctx),
        Command::Cocycle(a) => run_cocycle(a, ctx),
        Command::Pj(a) => run_pj(a, ctx),
        Command::Profile(a) => run_profile(a, ctx),
        Command::Certify(a) => run_certify(a, ctx),
        Command::Classify(a) => run_classify(a, ctx),
        Command::Eigen(a) => run_eigen(a, ctx),
        Command::Correlate(a) => run_correlate(a, ctx),
        Command::RigidChacon(a) => run_rigid(a, ctx),
        Command::Katok(a) => run_katok(a, ctx),
        Command::Sarnak(a) => run_sarnak(a, ctx),
        Command::Suspend(a) => run_suspend(a, ctx),
        Command::Replay(_) => Err(Error::Input("replay cannot be nested".into())),
    }
}

impl Ctx {
    fn params(&self) -> Result<ConstructionParams> {
        let cfg = self
            .construction
            .as_ref()
            .ok_or_else(|| Error::Input("this command needs --config or --family".into()))?;
        ConstructionParams::from_config(cfg)
    }

    /// The primary artifact in the requested format.
    fn primary(&self, name: &str, csv: String, json: Value) -> Result<(String, Vec<u8>)> {
        Ok(match self.format {
            Format::Csv => (format!("{name}.csv"), csv.into_bytes()),
            Format::Json => (format!("{name}.json"), (serde_json::to_string_pretty(&json)? + "\n").into_bytes()),
        })
    }
}

fn json_file(name: &str, v: &impl Serialize) -> Result<(String, Vec<u8>)> {
    Ok((name.to_string(), (serde_json::to_string_pretty(v)? + "\n").into_bytes()))
}

fn output(files: Vec<(String, Vec<u8>)>) -> Output {
    Output { files, notes: Vec::new() }
}

/// `a..b` (inclusive) or a single value.
fn parse_range(text: &str) -> Result<(usize, usize)> {
    let bad = || Error::Input(format!("bad range {text:?}, expected a..b"));
    match text.split_once("..") {
        Some((a, b)) => {
            let b = b.trim_start_matches('=');
            Ok((a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?))
        }
        None => {
            let v = text.trim().parse().map_err(|_| bad())?;
            Ok((v, v))
        }
    }
}

/// `1..5` (every pair inside) or `1:2,2:3`.
fn parse_power_pairs(text: &str) -> Result<Vec<(u64, u64)>> {
    if text.contains("..") {
        let (a, b) = parse_range(text)?;
        let (a, b) = (a as u64, b as u64);
        if a == 0 || b <= a {
            return Err(Error::Input(format!("pair range {text:?} needs 1 <= a < b")));
        }
        return Ok((a..=b).flat_map(|x| (x + 1..=b).map(move |y| (x, y))).collect());
    }
    text.split(',')
        .map(|p| {
            let bad = || Error::Input(format!("bad power pair {p:?}, expected j1:j2"));
            let (a, b) = p.split_once(':').ok_or_else(bad)?;
            let (a, b): (u64, u64) = (a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?);
            if a == 0 || a == b {
                return Err(bad());
            }
            Ok((a.min(b), a.max(b)))
        })
        .collect()
}

/// Cylinder pairs from `--pair W1:W2` flags, or every pair up to `max_len`.
fn word_pairs(pairs: &[String], max_len: usize) -> Result<Vec<(Vec<u8>, Vec<u8>)>> {
    if pairs.is_empty() {
        if max_len == 0 || max_len > 8 {
            return Err(Error::Input(format!("max length {max_len} outside 1..=8")));
        }
        return Ok(all_pairs(max_len));
    }
    pairs
        .iter()
        .map(|p| {
            let (a, b) = p
                .split_once(':')
                .ok_or_else(|| Error::Input(format!("bad word pair {p:?}, expected W1:W2")))?;
            Ok((parse_word(a)?, parse_word(b)?))
        })
        .collect()
}

fn method(samples: Option<u64>, seed: u64) -> Method {
    match samples {
        Some(samples) => Method::Sampled { samples, seed },
        None => Method::ExactScan,
    }
}

fn dag(params: &ConstructionParams, cap: Option<u64>) -> BlockDag {
    match cap {
        Some(c) => BlockDag::with_cap(params, c),
        None => BlockDag::new(params),
    }
}

// ---------------------------------------------------------------- heights

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct HeightsArgs {
    /// Last stage n; prints h_1..h_{n+1}. Defaults to the depth.
    #[arg(short = 'n')]
    pub n: Option<usize>,
}

fn run_heights(a: &HeightsArgs, ctx: &Ctx) -> Result<Output> {
    let params = ctx.params()?;
    let n = a.n.unwrap_or(params.depth());
    let hs = heights(&params, n)?;
    let mut csv = String::from("n,h_n,q_n\n");
    for (k, h) in hs.heights().iter().enumerate() {
        let q = hs.moduli().get(k).map(|q| q.to_string()).unwrap_or_default();
        let _ = writeln!(csv, "{},{h},{q}", k + 1);
    }
    let hv: Vec<String> = hs.heights().iter().map(|h| h.to_string()).collect();
    let qv: Vec<String> = hs.moduli().iter().map(|q| q.to_string()).collect();
    let mut out = output(vec![ctx.primary("heights", csv, json!({ "h": hv, "q": qv }))?]);
    out.notes.push(format!("h: {}", hv.join(",")));
    Ok(out)
}

// ---------------------------------------------------------------- blocks

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct BlocksArgs {
    /// Stage to materialize.
    #[arg(short = 'n')]
    pub n: Option<usize>,
    /// Decompose this word as A B C instead.
    #[arg(long)]
    pub abc: Option<String>,
    #[arg(long, default_value = "1/8")]
    pub eps: String,
    #[arg(long, default_value_t = 1)]
    pub ell: usize,
    /// Materialization cap in symbols.
    #[arg(long)]
    pub cap: Option<u64>,
}

fn run_blocks(a: &BlocksArgs, ctx: &Ctx) -> Result<Output> {
    let params = ctx.params()?;
    let dag = dag(&params, a.cap);
    if let Some(w) = &a.abc {
        let w = parse_word(w)?;
        let eps = rational::parse(&a.eps)?;
        let d = abc_decompose(&dag, &w, &eps, a.ell, dag.addressable_stage())?;
        let csv = format!(
            "A,B_len,C,uncovered,cover_blocks,top_stage,valid,threshold,ell_prime\n{},{},{},{},{},{},{},{},{}\n",
            d.a,
            d.b_len,
            d.c,
            d.uncovered,
            d.cover.len(),
            d.top_stage.map(|s| s.to_string()).unwrap_or_default(),
            d.valid,
            d.threshold.as_ref().map(|t| t.to_string()).unwrap_or_default(),
            d.ell_prime.map(|s| s.to_string()).unwrap_or_default(),
        );
        let json = serde_json::to_value(&d)?;
        let mut out = output(vec![ctx.primary("abc", csv, json)?]);
        if !d.valid {
            out.notes.push("word not found in the searched blocks; best-effort split only".into());
        }
        return Ok(out);
    }
    let n = a.n.unwrap_or(1);
    let block = word_to_string(&dag.materialize(n)?);
    let csv = format!("stage,length,block\n{n},{},{block}\n", block.len());
    Ok(output(vec![ctx.primary("blocks", csv, json!({ "stage": n, "length": block.len(), "block": block }))?]))
}

// ---------------------------------------------------------------- freq

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct FreqArgs {
    #[arg(short = 'n')]
    pub n: usize,
    /// Word to count; repeatable. Without it every word up to --max-len.
    #[arg(long = "word")]
    pub words: Vec<String>,
    #[arg(long, default_value_t = 2)]
    pub max_len: usize,
}

fn run_freq(a: &FreqArgs, ctx: &Ctx) -> Result<Output> {
    let params = ctx.params()?;
    let dag = BlockDag::new(&params);
    let words: Vec<Vec<u8>> = if a.words.is_empty() {
        rankone::correlations::words_up_to(a.max_len)
    } else {
        a.words.iter().map(|w| parse_word(w)).collect::<Result<_>>()?
    };
    let mut csv = String::from("word,stage,count,denominator,frequency_num,frequency_den\n");
    let mut rows = Vec::new();
    for w in &words {
        let f = dag.frequency(w, a.n)?;
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{}",
            f.word,
            f.stage,
            f.count,
            f.denominator,
            f.frequency.numer(),
            f.frequency.denom()
        );
        rows.push(json!({
            "word": f.word, "stage": f.stage, "count": f.count.to_string(),
            "denominator": f.denominator.to_string(), "frequency": fmt(&f.frequency),
        }));
    }
    Ok(output(vec![ctx.primary("freq", csv, Value::Array(rows))?]))
}

// ---------------------------------------------------------------- cocycle

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct CocycleArgs {
    #[arg(short = 'n', default_value_t = 1)]
    pub n: usize,
    #[arg(short = 'j', default_value_t = 1)]
    pub j: u64,
    /// Enumerated coordinates; unresolved mass is at most j 2^-r.
    #[arg(short = 'r', default_value_t = 10)]
    pub r: usize,
    /// Use the per-coordinate transfer instead of direct enumeration.
    #[arg(long)]
    pub transfer: bool,
}

fn run_cocycle(a: &CocycleArgs, ctx: &Ctx) -> Result<Output> {
    let params = ctx.params()?;
    let law = if a.transfer {
        cocycle_distribution_transfer(&params, a.n, a.j, a.r)?
    } else {
        cocycle_distribution(&params, a.n, a.j, a.r, ctx.exec)?
    };
    let mut out = output(vec![ctx.primary("cocycle", law.to_csv(), serde_json::to_value(&law)?)?]);
    out.notes.push(law.describe());
    Ok(out)
}

// ---------------------------------------------------------------- profiles

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct ProfileSource {
    /// Limit profile JSON. Without it the profile is read off the
    /// construction (see --at).
    #[arg(long)]
    pub profile: Option<String>,
    /// Use the stages from n = AT on as the profile. Without it the first
    /// window of stages that repeats along the construction is used.
    #[arg(long)]
    pub at: Option<usize>,
    /// Refuse when a parameter exceeds this value.
    #[arg(long, default_value_t = 64)]
    pub max_value: u64,
}

/// A profile whose window covers `0..=r+1`.
fn load_profile(src: &ProfileSource, r: usize, ctx: &Ctx) -> Result<(LimitProfile, String)> {
    if let Some(path) = &src.profile {
        let p = LimitProfile::from_json(&std::fs::read_to_string(path)?)?;
        return Ok((p, format!("profile from {path}")));
    }
    let params = ctx.params()?;
    if let Some(at) = src.at {
        if at == 0 || at + r + 1 > params.depth() {
            return Err(Error::Input(format!(
                "stages {at}..={} needed, construction has {}",
                at + r + 1,
                params.depth()
            )));
        }
        let stages = params.stages()[at - 1..at + r + 1].to_vec();
        let p = LimitProfile::new(0, stages, Some(src.max_value))?;
        return Ok((p, format!("stages {at}..={} of the construction", at + r + 1)));
    }
    let found = detect_stabilizing(&params, 0, r + 1, (1, params.depth()), src.max_value)?;
    match found.into_iter().next() {
        Some(c) => {
            let msg = format!("window of {} stages repeating at {}", r + 2, c.describe());
            Ok((c.profile, msg))
        }
        None => Err(Error::Refusal(format!(
            "no window of {} stages repeats within depth {}; pass --profile or --at, or lower -r",
            r + 2,
            params.depth()
        ))),
    }
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct PjArgs {
    #[arg(short = 'j', default_value_t = 1)]
    pub j: u64,
    #[arg(short = 'r', default_value_t = 10)]
    pub r: usize,
    #[command(flatten)]
    pub source: ProfileSource,
}

fn run_pj(a: &PjArgs, ctx: &Ctx) -> Result<Output> {
    let (profile, origin) = load_profile(&a.source, a.r, ctx)?;
    let law = limit_distribution(&profile, a.j, a.r, ctx.exec)?;
    let mut out = output(vec![
        ctx.primary("pj", law.law.to_csv(), serde_json::to_value(&law.law)?)?,
        json_file(
            "tails.json",
            &json!({
                "j": law.j, "depth": law.depth,
                "stated_tail_violations": law.stated_tail_violations,
                "corrected_tail_violations": law.corrected_tail_violations,
            }),
        )?,
    ]);
    out.notes.push(origin);
    out.notes.push(format!("P_{} = {}", a.j, law.law.describe()));
    if !law.stated_tail_violations.is_empty() {
        out.notes.push(format!(
            "mass(>= v) exceeds j 2^(-v/(jR)) at v in {:?}; j 2^(1-v/(jR)) holds",
            law.stated_tail_violations
        ));
    }
    Ok(out)
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct ProfileArgs {
    #[arg(long, default_value_t = 1)]
    pub left: usize,
    #[arg(long, default_value_t = 2)]
    pub right: usize,
    /// Stages to search, `a..b`; defaults to the whole construction.
    #[arg(long)]
    pub range: Option<String>,
    #[arg(long, default_value_t = 64)]
    pub max_value: u64,
}

fn run_profile(a: &ProfileArgs, ctx: &Ctx) -> Result<Output> {
    let params = ctx.params()?;
    let range = match &a.range {
        Some(r) => parse_range(r)?,
        None => (1, params.depth()),
    };
    let found = detect_stabilizing(&params, a.left, a.right, range, a.max_value)?;
    let mut csv = String::from("indices,progression,non_flat,bounded_recurrent,bound,d_infinity,window\n");
    let mut rows = Vec::new();
    for c in &found {
        let inv = profile_invariants(&c.profile);
        let idx: Vec<String> = c.indices.iter().map(|i| i.to_string()).collect();
        let _ = writeln!(
            csv,
            "{},\"{}\",{},{},{},{},{}",
            idx.join(" "),
            c.describe(),
            inv.non_flat,
            inv.bounded_recurrent,
            inv.bound,
            inv.d_infinity.map(|d| d.to_string()).unwrap_or_default(),
            inv.window
        );
        rows.push(json!({ "candidate": c, "invariants": inv }));
    }
    let mut out = output(vec![ctx.primary("profile", csv, Value::Array(rows))?]);
    if found.is_empty() {
        out.notes.push("no repeating window in range".into());
    }
    Ok(out)
}

// ---------------------------------------------------------------- certify

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct CertifyArgs {
    /// `a..b` for every pair inside, or `j1:j2,j1:j2`.
    #[arg(long, default_value = "1..5")]
    pub pairs: String,
    /// Enumerated coordinates; defaults to the largest value up to 12 the
    /// construction depth allows.
    #[arg(short = 'r')]
    pub r: Option<usize>,
    #[command(flatten)]
    pub source: ProfileSource,
}

fn run_certify(a: &CertifyArgs, ctx: &Ctx) -> Result<Output> {
    let pairs = parse_power_pairs(&a.pairs)?;
    let r = match a.r {
        Some(r) => r,
        None if a.source.profile.is_some() => 12,
        None => {
            let depth = ctx.params()?.depth();
            let slack = if a.source.at.is_some() { 2 } else { 3 };
            depth.checked_sub(slack).filter(|&r| r >= 1).ok_or_else(|| {
                Error::Input(format!("depth {depth} too small for a certificate"))
            })?.min(12)
        }
    };
    let (profile, origin) = load_profile(&a.source, r, ctx)?;
    let inv = profile_invariants(&profile);
    let powers: BTreeSet<u64> = pairs.iter().flat_map(|&(x, y)| [x, y]).collect();
    let powers: Vec<u64> = powers.into_iter().collect();
    let laws = powers
        .iter()
        .map(|&j| limit_distribution(&profile, j, r, ctx.exec).map(|l| (j, l.law)))
        .collect::<Result<Vec<_>>>()?;
    let law = |j: u64| &laws.iter().find(|(k, _)| *k == j).expect("computed").1;
    let verdicts: Vec<DisjointnessVerdict> = pairs
        .iter()
        .map(|&(x, y)| disjointness_certificate(law(x), law(y), x, y, inv.d_infinity, Some(r)))
        .collect();
    let mut csv = String::from(DisjointnessVerdict::csv_header());
    csv.push('\n');
    for v in &verdicts {
        csv.push_str(&v.csv_row());
        csv.push('\n');
    }
    let mut out = output(vec![ctx.primary("certify", csv, serde_json::to_value(&verdicts)?)?]);
    out.notes.push(origin);
    out.notes.push(format!(
        "non-flat: {}, bounded by {}, d_infinity: {}",
        inv.non_flat,
        inv.bound,
        inv.d_infinity.map(|d| d.to_string()).unwrap_or_else(|| "none".into())
    ));
    Ok(out)
}

// ---------------------------------------------------------------- classify

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct ClassifyArgs {
    /// Stages to read, `a..b`; defaults to `3..depth`.
    #[arg(long)]
    pub range: Option<String>,
    #[arg(long, default_value_t = 12)]
    pub max_order: u64,
}

fn stage_range(text: &Option<String>, params: &ConstructionParams) -> Result<(usize, usize)> {
    match text {
        Some(r) => parse_range(r),
        None => Ok((3.min(params.depth().saturating_sub(1)).max(1), params.depth())),
    }
}

fn run_classify(a: &ClassifyArgs, ctx: &Ctx) -> Result<Output> {
    let params = ctx.params()?;
    let range = stage_range(&a.range, &params)?;
    let c = classify(&params, range, a.max_order)?;
    let csv = format!("range,max_order,classification\n{}..{},{},{}\n", range.0, range.1, a.max_order, c.label());
    let mut out = output(vec![ctx.primary("classify", csv, serde_json::to_value(&c)?)?]);
    out.notes.push(format!("{} (read off stages {}..={}; a prefix heuristic)", c.label(), range.0, range.1));
    Ok(out)
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct EigenArgs {
    #[arg(long)]
    pub range: Option<String>,
    #[arg(long, default_value_t = 12)]
    pub max_order: u64,
}

fn run_eigen(a: &EigenArgs, ctx: &Ctx) -> Result<Output> {
    let params = ctx.params()?;
    let range = stage_range(&a.range, &params)?;
    let orders = eigenvalue_search(&params, a.max_order, range)?;
    let g = return_time_gcd(&params, range)?;
    let flat: Vec<usize> = (range.0..range.1)
        .map(|n| flat_step_detect(&params, n).map(|f| (n, f)))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .filter_map(|(n, f)| f.then_some(n))
        .collect();
    let mut csv = String::from("order\n");
    for k in &orders {
        let _ = writeln!(csv, "{k}");
    }
    let json = json!({ "orders": orders, "return_time_gcd": g.to_string(), "flat_steps": flat });
    let mut out = output(vec![ctx.primary("eigen", csv, json)?]);
    out.notes.push(format!("gcd of return times over {}..={}: {g}; flat steps: {flat:?}", range.0, range.1));
    Ok(out)
}

// ---------------------------------------------------------------- correlations

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct PairArgs {
    /// Cylinder pair `W1:W2`; repeatable. Without it every pair up to
    /// --max-len.
    #[arg(long = "pair")]
    pub pairs: Vec<String>,
    #[arg(long, default_value_t = 2)]
    pub max_len: usize,
    /// Absolute tolerance for the PASS/FAIL summary.
    #[arg(long, default_value = "1/50")]
    pub tol: String,
    /// Block to measure in.
    #[arg(long)]
    pub scan_stage: Option<usize>,
    /// Sample this many positions instead of scanning exactly.
    #[arg(long)]
    pub samples: Option<u64>,
    /// Materialization cap in symbols.
    #[arg(long)]
    pub cap: Option<u64>,
}

impl PairArgs {
    fn options(&self, ctx: &Ctx) -> ScanOptions {
        ScanOptions { stage: self.scan_stage, method: method(self.samples, ctx.seed), exec: ctx.exec }
    }
}

fn report_output(name: &str, report: &CorrelationReport, ctx: &Ctx) -> Result<Output> {
    let mut out = output(vec![ctx.primary(name, report.to_csv(), serde_json::to_value(report)?)?]);
    out.notes.extend(report.notes.iter().cloned());
    out.notes.push(format!(
        "{}: max |observed - predicted| = {} in B_{} (tolerance {})",
        if report.passed() { "PASS" } else { "FAIL" },
        fmt_f64(report.max_error()),
        report.scan_stage,
        fmt(&report.tolerance)
    ));
    Ok(out)
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct CorrelateArgs {
    /// Single correlation at this lag (needs --w1, --w2, --stage).
    #[arg(long)]
    pub lag: Option<u64>,
    #[arg(long)]
    pub w1: Option<String>,
    #[arg(long)]
    pub w2: Option<String>,
    #[arg(long)]
    pub stage: Option<usize>,
    /// Prediction check at lag j h_{n+1}.
    #[arg(short = 'n', default_value_t = 1)]
    pub n: usize,
    #[arg(short = 'j', default_value_t = 1)]
    pub j: u64,
    #[arg(short = 'r', default_value_t = 10)]
    pub r: usize,
    #[command(flatten)]
    pub scan: PairArgs,
}

fn run_correlate(a: &CorrelateArgs, ctx: &Ctx) -> Result<Output> {
    let params = ctx.params()?;
    let dag = dag(&params, a.scan.cap);
    if let Some(lag) = a.lag {
        let need = |o: &Option<String>, what: &str| {
            o.as_deref().ok_or_else(|| Error::Input(format!("--lag needs {what}"))).and_then(parse_word)
        };
        let (w1, w2) = (need(&a.w1, "--w1")?, need(&a.w2, "--w2")?);
        let stage = a.stage.ok_or_else(|| Error::Input("--lag needs --stage".into()))?;
        let est = correlation(&dag, &w1, &w2, lag, stage, method(a.scan.samples, ctx.seed), ctx.exec)?;
        let csv = format!(
            "W1,W2,lag,stage,estimate,ci,hits,trials,method,seed\n{},{},{},{},{},{},{},{},{},{}\n",
            est.w1,
            est.w2,
            est.lag,
            est.stage,
            est.estimate.render(),
            est.estimate.half_width().map(fmt_f64).unwrap_or_default(),
            est.hits,
            est.trials,
            est.method.name(),
            est.method.seed().map(|s| s.to_string()).unwrap_or_default()
        );
        return Ok(output(vec![ctx.primary("correlate", csv, serde_json::to_value(&est)?)?]));
    }
    let pairs = word_pairs(&a.scan.pairs, a.scan.max_len)?;
    let tol = rational::parse(&a.scan.tol)?;
    let report = verify_pj_prediction(&dag, a.n, a.j, &pairs, a.r, &tol, &a.scan.options(ctx))?;
    report_output("correlate", &report, ctx)
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct RigidArgs {
    #[arg(long, default_value = "1/2")]
    pub alpha: String,
    #[arg(short = 'j', default_value_t = 1)]
    pub j: u64,
    #[arg(short = 'n')]
    pub n: usize,
    #[command(flatten)]
    pub scan: PairArgs,
}

fn run_rigid(a: &RigidArgs, ctx: &Ctx) -> Result<Output> {
    let params = ctx.params()?;
    let dag = dag(&params, a.scan.cap);
    let alpha: BigRational = rational::parse(&a.alpha)?;
    let pairs = word_pairs(&a.scan.pairs, a.scan.max_len)?;
    let tol = rational::parse(&a.scan.tol)?;
    let report = verify_rigid_chacon(&dag, &alpha, a.j, a.n, &pairs, &tol, &a.scan.options(ctx))?;
    report_output("rigid", &report, ctx)
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct KatokArgs {
    #[arg(long, default_value = "1/2")]
    pub alpha: String,
    #[arg(short = 'n', default_value_t = 1)]
    pub n: usize,
    /// l_n; must be a multiple of h_n + 1 near alpha p_n / 2.
    #[arg(long)]
    pub ell: Option<u64>,
    /// Admissible l_n lie within p_n^slack of alpha p_n / 2.
    #[arg(long, default_value_t = 0.75)]
    pub slack: f64,
    #[command(flatten)]
    pub scan: PairArgs,
}

fn run_katok(a: &KatokArgs, ctx: &Ctx) -> Result<Output> {
    let params = ctx.params()?;
    let dag = dag(&params, a.scan.cap);
    let alpha = rational::parse(&a.alpha)?;
    let pairs = word_pairs(&a.scan.pairs, a.scan.max_len)?;
    let tol = rational::parse(&a.scan.tol)?;
    let report = verify_katok(&dag, &alpha, a.n, a.ell, a.slack, &pairs, &tol, &a.scan.options(ctx))?;
    report_output("katok", &report, ctx)
}

// ---------------------------------------------------------------- sarnak

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct OrbitArgs {
    /// `stage:K:OFFSET` or `spliced:K:SUFFIX:ONES`. Defaults to the start
    /// of the first block long enough.
    #[arg(long)]
    pub orbit: Option<String>,
    /// Horizon N.
    #[arg(long = "N", default_value_t = 1_000_000)]
    pub n_max: u64,
}

fn parse_orbit(text: &str) -> Result<OrbitSpec> {
    let f: Vec<&str> = text.split(':').collect();
    let bad = || Error::Input(format!("bad orbit {text:?}, expected stage:K:OFFSET or spliced:K:SUFFIX:ONES"));
    let num = |s: &str| s.parse::<u64>().map_err(|_| bad());
    match f.as_slice() {
        ["stage", k, off] => Ok(OrbitSpec::Stage { stage: num(k)? as usize, offset: num(off)? }),
        ["spliced", k, suf, ones] => {
            Ok(OrbitSpec::Spliced { stage: num(k)? as usize, suffix_len: num(suf)?, ones: num(ones)? })
        }
        _ => Err(bad()),
    }
}

impl OrbitArgs {
    fn spec(&self, dag: &BlockDag, len: u64) -> Result<OrbitSpec> {
        match &self.orbit {
            Some(t) => parse_orbit(t),
            None => {
                let stage = (1..=dag.addressable_stage())
                    .find(|&k| dag.h(k).is_ok_and(|h| h >= len))
                    .ok_or_else(|| Error::Refusal(format!("no block of the construction holds {len} symbols")))?;
                Ok(OrbitSpec::Stage { stage, offset: 0 })
            }
        }
    }
}

/// Stage whose block frequencies stand in for the invariant measure.
fn spec_stage(spec: &OrbitSpec) -> usize {
    match *spec {
        OrbitSpec::Stage { stage, .. } | OrbitSpec::Spliced { stage, .. } => stage,
    }
}

fn grid_output(name: &str, points: &[GridPoint], ctx: &Ctx, extra: Value) -> Result<Output> {
    let trend = trend_diagnostic(points);
    let json = json!({
        "points": points,
        "trend": trend,
    });
    let mut out = output(vec![
        ctx.primary(name, grid_csv(points), json)?,
        json_file("trend.json", &json!({ "trend": trend, "run": extra }))?,
    ]);
    if let Some(last) = points.last() {
        out.notes.push(format!("average at N' = {}: {}", last.n, fmt_f64(rational::to_f64(&last.average))));
    }
    out.notes.push(format!(
        "trend ({}): |average| shrinks on {} of {} grid steps",
        trend.label, trend.decreasing_steps, trend.steps
    ));
    Ok(out)
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct SarnakArgs {
    /// `cyl:W`, `cyl:W@c`, `const:c`, joined with `;`.
    #[arg(long)]
    pub observable: String,
    /// Subtract the mean under the block frequencies of the orbit stage.
    #[arg(long)]
    pub center: bool,
    /// Stage for the mean; defaults to the orbit stage.
    #[arg(long)]
    pub center_stage: Option<usize>,
    /// Correlate f(T^{pn}) f(T^{qn}) instead of weighting by mu: `p,q`.
    #[arg(long)]
    pub pq: Option<String>,
    #[command(flatten)]
    pub orbit: OrbitArgs,
}

fn run_sarnak(a: &SarnakArgs, ctx: &Ctx) -> Result<Output> {
    let params = ctx.params()?;
    let dag = BlockDag::new(&params);
    let mut obs = CylinderObservable::parse(&a.observable)?;
    let n = a.orbit.n_max;
    if n == 0 {
        return Err(Error::Input("N must be positive".into()));
    }
    let pq = match &a.pq {
        Some(t) => {
            let bad = || Error::Input(format!("bad --pq {t:?}, expected p,q"));
            let (p, q) = t.split_once(',').ok_or_else(bad)?;
            Some((p.trim().parse::<u64>().map_err(|_| bad())?, q.trim().parse::<u64>().map_err(|_| bad())?))
        }
        None => None,
    };
    let reach = pq.map_or(1, |(p, q)| p.max(q));
    let len = reach * n + 1 + obs.window() as u64;
    let spec = a.orbit.spec(&dag, len)?;
    if a.center {
        obs = obs.centered(&dag, a.center_stage.unwrap_or_else(|| spec_stage(&spec)))?;
    }
    let word = orbit_word(&dag, &spec, len)?;
    let points = match pq {
        Some((p, q)) => prime_power_correlation(&obs, &word.word, p, q, n, ctx.exec)?,
        None => {
            let mu = mobius(n as usize);
            sarnak_sum(&obs, &word.word, &mu, n, ctx.exec)?
        }
    };
    let extra = json!({
        "observable": obs.describe(), "orbit": spec, "spliced": word.spliced, "N": n, "pq": pq,
    });
    let mut out = grid_output("sarnak", &points, ctx, extra)?;
    out.notes.insert(0, format!("f = {}", obs.describe()));
    Ok(out)
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct SuspendArgs {
    /// Observable on floor i, in floor order; K is the number of floors.
    #[arg(long = "floor")]
    pub floors: Vec<String>,
    #[arg(long, default_value_t = 0)]
    pub initial_floor: usize,
    /// Subtract each floor's mean.
    #[arg(long)]
    pub center: bool,
    /// Pure eigenfunction e^{2 pi i floor / K} instead of --floor.
    #[arg(long)]
    pub eigen: Option<u64>,
    #[command(flatten)]
    pub orbit: OrbitArgs,
}

fn run_suspend(a: &SuspendArgs, ctx: &Ctx) -> Result<Output> {
    let n = a.orbit.n_max;
    if n == 0 {
        return Err(Error::Input("N must be positive".into()));
    }
    let mu = mobius(n as usize);
    if let Some(k) = a.eigen {
        let pts = eigenfunction_sarnak_average(k, a.initial_floor as u64, &mu, n)?;
        let mut csv = String::from("N_prime,abs_average\n");
        for (m, v) in &pts {
            let _ = writeln!(csv, "{m},{}", fmt_f64(*v));
        }
        let json: Vec<Value> = pts.iter().map(|(m, v)| json!({ "N_prime": m, "abs_average": v })).collect();
        let mut out = output(vec![ctx.primary("suspend", csv, Value::Array(json))?]);
        out.notes.push("complex modulus printed as a float; the Möbius sums per residue are exact".into());
        return Ok(out);
    }
    if a.floors.is_empty() {
        return Err(Error::Input("give --floor once per floor, or --eigen K".into()));
    }
    let params = ctx.params()?;
    let dag = BlockDag::new(&params);
    let floors = a.floors.iter().map(|f| CylinderObservable::parse(f)).collect::<Result<Vec<_>>>()?;
    let mut susp = Suspension::new(floors, a.initial_floor)?;
    let len = susp.base_len(n);
    let spec = a.orbit.spec(&dag, len)?;
    if a.center {
        susp = susp.floorwise_centered(&dag, spec_stage(&spec))?;
    }
    let word = orbit_word(&dag, &spec, len)?;
    let points = suspension_sarnak_sum(&susp, &word.word, &mu, n, ctx.exec)?;
    let floors: Vec<String> = susp.floors.iter().map(|f| f.describe()).collect();
    let extra = json!({ "floors": floors, "initial_floor": a.initial_floor, "orbit": spec, "N": n });
    grid_output("suspend", &points, ctx, extra)
}
