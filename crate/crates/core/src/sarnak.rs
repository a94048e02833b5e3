//! Möbius sieve and Sarnak-type averages along symbolic orbits.
//!
//! Observables are finite-cylinder functions `f = c + sum_t a_t 1_[W_t]`. On
//! an orbit word `w`, `f(T^n w) = f(w[n..])`, so `f` only depends on which
//! terms match at `n`. Sums are kept as exact integer histograms over these
//! match masks and turned into rational averages at the grid points.

use std::collections::HashMap;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::blocks::{parse_word, word_to_string, BlockDag};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::rational::{self, fmt, int, parse, to_f64};

pub const MAX_TERMS: usize = 16;
const CHUNK: usize = 1 << 16;

/// `mu(0..=n)` by a linear sieve; index 0 holds 0.
pub fn mobius(n: usize) -> Vec<i8> {
    let mut mu = vec![0i8; n + 1];
    if n == 0 {
        return mu;
    }
    mu[1] = 1;
    let mut composite = vec![false; n + 1];
    let mut primes: Vec<usize> = Vec::new();
    for i in 2..=n {
        if !composite[i] {
            primes.push(i);
            mu[i] = -1;
        }
        for &p in &primes {
            let ip = i * p;
            if ip > n {
                break;
            }
            composite[ip] = true;
            if i % p == 0 {
                mu[ip] = 0;
                break;
            }
            mu[ip] = -mu[i];
        }
    }
    mu
}

/// `sum_{k <= n} mu(k)`.
pub fn mertens(mu: &[i8], n: usize) -> i64 {
    mu[1..=n].iter().map(|&m| m as i64).sum()
}

pub fn is_prime(p: u64) -> bool {
    p >= 2 && (2..).take_while(|d| d * d <= p).all(|d| !p.is_multiple_of(d))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CylinderTerm {
    pub word: String,
    #[serde(serialize_with = "rational::serialize", deserialize_with = "de_ratio")]
    pub coefficient: BigRational,
}

fn de_ratio<'de, D: serde::Deserializer<'de>>(d: D) -> std::result::Result<BigRational, D::Error> {
    let s = String::deserialize(d)?;
    parse(&s).map_err(serde::de::Error::custom)
}

/// `c + sum_t a_t 1_[W_t]` with at most [`MAX_TERMS`] terms.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CylinderObservable {
    #[serde(serialize_with = "rational::serialize", deserialize_with = "de_ratio")]
    pub constant: BigRational,
    pub terms: Vec<CylinderTerm>,
    #[serde(skip)]
    words: Vec<Vec<u8>>,
}

impl CylinderObservable {
    pub fn new(constant: BigRational, terms: Vec<(Vec<u8>, BigRational)>) -> Result<Self> {
        if terms.len() > MAX_TERMS {
            return Err(Error::range("observable terms", terms.len(), format!("0..={MAX_TERMS}")));
        }
        let mut words = Vec::with_capacity(terms.len());
        let mut out = Vec::with_capacity(terms.len());
        for (w, a) in terms {
            if w.is_empty() || w.iter().any(|&b| b > 1) {
                return Err(Error::Input("observable words must be non-empty 0/1 words".into()));
            }
            out.push(CylinderTerm { word: word_to_string(&w), coefficient: a });
            words.push(w);
        }
        Ok(CylinderObservable { constant, terms: out, words })
    }

    pub fn constant(c: BigRational) -> Self {
        CylinderObservable { constant: c, terms: Vec::new(), words: Vec::new() }
    }

    /// `1_[W]`.
    pub fn cylinder(w: &[u8]) -> Result<Self> {
        CylinderObservable::new(int(0), vec![(w.to_vec(), int(1))])
    }

    /// `;`-separated items `cyl:W`, `cyl:W@coef` and `const:c`, e.g.
    /// `cyl:0;const:-2/3`.
    pub fn parse(text: &str) -> Result<Self> {
        let mut constant = int(0);
        let mut terms = Vec::new();
        for item in text.split(';').map(str::trim).filter(|s| !s.is_empty()) {
            if let Some(c) = item.strip_prefix("const:") {
                constant += parse(c)?;
            } else if let Some(rest) = item.strip_prefix("cyl:") {
                let (w, a) = match rest.split_once('@') {
                    Some((w, a)) => (w, parse(a)?),
                    None => (rest, int(1)),
                };
                terms.push((parse_word(w)?, a));
            } else {
                return Err(Error::Input(format!("unknown observable item {item:?}")));
            }
        }
        CylinderObservable::new(constant, terms)
    }

    /// Rebuilds the cached words after deserialization.
    pub fn validated(self) -> Result<Self> {
        let terms = self
            .terms
            .iter()
            .map(|t| Ok((parse_word(&t.word)?, t.coefficient.clone())))
            .collect::<Result<Vec<_>>>()?;
        CylinderObservable::new(self.constant, terms)
    }

    /// Symbols of look-ahead needed to evaluate at one position.
    pub fn window(&self) -> usize {
        self.words.iter().map(Vec::len).max().unwrap_or(0)
    }

    /// Which terms match at the start of `w`.
    fn mask(&self, w: &[u8]) -> u32 {
        self.words
            .iter()
            .enumerate()
            .filter(|(_, t)| w.starts_with(t))
            .fold(0, |m, (i, _)| m | 1 << i)
    }

    fn value_of_mask(&self, mask: u32) -> BigRational {
        self.terms
            .iter()
            .enumerate()
            .filter(|(i, _)| mask >> i & 1 == 1)
            .fold(self.constant.clone(), |v, (_, t)| v + &t.coefficient)
    }

    /// `f` at the start of `w`.
    pub fn eval(&self, w: &[u8]) -> BigRational {
        self.value_of_mask(self.mask(w))
    }

    /// Mean of `f` under the block frequencies of `B_stage`.
    pub fn mean(&self, dag: &BlockDag, stage: usize) -> Result<BigRational> {
        let mut m = self.constant.clone();
        for (w, t) in self.words.iter().zip(&self.terms) {
            m += &t.coefficient * dag.frequency(w, stage)?.frequency;
        }
        Ok(m)
    }

    /// `f - mean`.
    pub fn centered(&self, dag: &BlockDag, stage: usize) -> Result<Self> {
        let mut out = self.clone();
        out.constant -= self.mean(dag, stage)?;
        Ok(out)
    }

    pub fn describe(&self) -> String {
        let mut parts = vec![fmt(&self.constant)];
        parts.extend(self.terms.iter().map(|t| format!("{}*[{}]", fmt(&t.coefficient), t.word)));
        parts.join(" + ")
    }
}

/// Base point of an orbit.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OrbitSpec {
    /// The word read from `B_stage` starting at 0-based `offset`.
    Stage { stage: usize, offset: u64 },
    /// `A 1^ones C`: `A` the last `suffix_len` symbols of `B_stage`, `C` a
    /// prefix of the deepest addressable block. Points near the all-ones
    /// sequence; may leave the language.
    Spliced { stage: usize, suffix_len: u64, ones: u64 },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OrbitWord {
    pub word: Vec<u8>,
    pub spliced: bool,
}

/// The first `len` symbols of the orbit described by `spec`.
pub fn orbit_word(dag: &BlockDag, spec: &OrbitSpec, len: u64) -> Result<OrbitWord> {
    match *spec {
        OrbitSpec::Stage { stage, offset } => {
            let word = dag.segment(stage, offset, len)?;
            Ok(OrbitWord { word, spliced: false })
        }
        OrbitSpec::Spliced { stage, suffix_len, ones } => {
            let h = dag.h(stage)?;
            if suffix_len > h {
                return Err(Error::range("suffix length", suffix_len, format!("0..={h}")));
            }
            let head = suffix_len.saturating_add(ones);
            let mut word = dag.segment(stage, h - suffix_len, suffix_len.min(len))?;
            word.extend(std::iter::repeat_n(1u8, ones.min(len.saturating_sub(suffix_len)) as usize));
            let rest = len.saturating_sub(head);
            if rest > 0 {
                let top = (1..=dag.addressable_stage())
                    .find(|&k| dag.hh(k) >= rest)
                    .ok_or_else(|| Error::range("orbit length", len, "at most the deepest block length"))?;
                word.extend(dag.segment(top, 0, rest)?);
            }
            Ok(OrbitWord { word, spliced: true })
        }
    }
}

/// `ceil(n / 2^k)` for `k = 0, 1, ...`, ascending and without repeats.
pub fn geometric_grid(n: u64) -> Vec<u64> {
    let mut out: Vec<u64> = (0..64).map(|k| n.div_ceil(1u64 << k)).take_while(|&v| v >= 1).collect();
    out.dedup();
    out.reverse();
    out
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GridPoint {
    pub n: u64,
    #[serde(serialize_with = "rational::serialize")]
    pub average: BigRational,
}

/// For every grid point, `sum_{1 <= m <= N'} weight(m)` per key, as
/// cumulative histograms.
fn cumulative_histograms<K, W>(grid: &[u64], key: K, weight: W, exec: Execution) -> Vec<HashMap<u64, i64>>
where
    K: Fn(u64) -> u64 + Sync + Send,
    W: Fn(u64) -> i64 + Sync + Send,
{
    let n = *grid.last().unwrap_or(&0);
    let parts = exec.map_range((n as usize).div_ceil(CHUNK), |c| {
        let lo = (c * CHUNK) as u64 + 1;
        let hi = (((c + 1) * CHUNK) as u64).min(n);
        let mut slot = grid.partition_point(|&g| g < lo);
        let mut local: HashMap<(usize, u64), i64> = HashMap::new();
        for m in lo..=hi {
            while grid[slot] < m {
                slot += 1;
            }
            let w = weight(m);
            if w != 0 {
                *local.entry((slot, key(m))).or_default() += w;
            }
        }
        local
    });
    let mut per_slot: Vec<HashMap<u64, i64>> = vec![HashMap::new(); grid.len()];
    for part in parts {
        for ((slot, k), w) in part {
            *per_slot[slot].entry(k).or_default() += w;
        }
    }
    let mut running: HashMap<u64, i64> = HashMap::new();
    per_slot
        .into_iter()
        .map(|slot| {
            for (k, w) in slot {
                *running.entry(k).or_default() += w;
            }
            running.clone()
        })
        .collect()
}

fn averages<V>(grid: &[u64], hists: Vec<HashMap<u64, i64>>, value: V) -> Vec<GridPoint>
where
    V: Fn(u64) -> BigRational,
{
    let mut cache: HashMap<u64, BigRational> = HashMap::new();
    grid.iter()
        .zip(hists)
        .map(|(&n, hist)| {
            let mut keys: Vec<_> = hist.into_iter().filter(|(_, w)| *w != 0).collect();
            keys.sort_unstable();
            let mut sum = BigRational::zero();
            for (k, w) in keys {
                let v = cache.entry(k).or_insert_with(|| value(k));
                sum += &*v * BigRational::from_integer(BigInt::from(w));
            }
            GridPoint { n, average: sum / int(n) }
        })
        .collect()
}

fn masks(obs: &CylinderObservable, word: &[u8], count: usize, exec: Execution) -> Result<Vec<u32>> {
    let need = count + obs.window();
    if word.len() < need {
        return Err(Error::range("orbit word length", word.len(), format!(">= {need}")));
    }
    let parts = exec.map_range(count.div_ceil(CHUNK), |c| {
        let hi = ((c + 1) * CHUNK).min(count);
        (c * CHUNK..hi).map(|i| obs.mask(&word[i..])).collect::<Vec<_>>()
    });
    Ok(parts.concat())
}

fn check_mu(mu: &[i8], n: u64) -> Result<()> {
    if (mu.len() as u64) <= n {
        return Err(Error::range("horizon", n, format!("1..={}", mu.len().saturating_sub(1))));
    }
    Ok(())
}

/// `(1/N') sum_{n <= N'} f(T^n w) mu(n)` on the geometric grid below `n`.
/// `word` must hold at least `n + 1 + window` symbols.
pub fn sarnak_sum(
    obs: &CylinderObservable,
    word: &[u8],
    mu: &[i8],
    n: u64,
    exec: Execution,
) -> Result<Vec<GridPoint>> {
    check_mu(mu, n)?;
    let grid = geometric_grid(n);
    let masks = masks(obs, word, n as usize + 1, exec)?;
    let hists = cumulative_histograms(&grid, |m| masks[m as usize] as u64, |m| mu[m as usize] as i64, exec);
    Ok(averages(&grid, hists, |k| obs.value_of_mask(k as u32)))
}

/// `(1/N') sum_{n <= N'} f(T^{pn} w) f(T^{qn} w)` on the geometric grid.
/// `word` must hold at least `max(p, q) n + 1 + window` symbols.
pub fn prime_power_correlation(
    obs: &CylinderObservable,
    word: &[u8],
    p: u64,
    q: u64,
    n: u64,
    exec: Execution,
) -> Result<Vec<GridPoint>> {
    if p == q {
        return Err(Error::Input(format!("p and q must differ, both are {p}")));
    }
    if !is_prime(p) || !is_prime(q) {
        return Err(Error::Input(format!("{p} and {q} must be primes")));
    }
    let top = p.max(q).checked_mul(n).ok_or_else(|| Error::Input("horizon too large".into()))?;
    let grid = geometric_grid(n);
    let masks = masks(obs, word, top as usize + 1, exec)?;
    let key = |m: u64| (masks[(p * m) as usize] as u64) << 32 | masks[(q * m) as usize] as u64;
    let hists = cumulative_histograms(&grid, key, |_| 1, exec);
    Ok(averages(&grid, hists, |k| {
        obs.value_of_mask((k >> 32) as u32) * obs.value_of_mask(k as u32)
    }))
}

/// A function on the `K`-floor tower over the orbit: `g(w, i) = floors[i](w)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Suspension {
    pub floors: Vec<CylinderObservable>,
    pub initial_floor: usize,
}

impl Suspension {
    pub fn new(floors: Vec<CylinderObservable>, initial_floor: usize) -> Result<Self> {
        if floors.is_empty() || initial_floor >= floors.len() {
            return Err(Error::Input(format!(
                "need K >= 1 floors and initial floor below K, got K = {} and i0 = {initial_floor}",
                floors.len()
            )));
        }
        Ok(Suspension { floors, initial_floor })
    }

    pub fn k(&self) -> u64 {
        self.floors.len() as u64
    }

    /// `(floor, base shift)` of `T~^n (w, i0)`.
    pub fn position(&self, n: u64) -> (usize, u64) {
        let t = self.initial_floor as u64 + n;
        ((t % self.k()) as usize, t / self.k())
    }

    /// Subtracts from each floor its own mean, so that every floor
    /// integrates to zero.
    pub fn floorwise_centered(&self, dag: &BlockDag, stage: usize) -> Result<Self> {
        let floors = self.floors.iter().map(|f| f.centered(dag, stage)).collect::<Result<_>>()?;
        Ok(Suspension { floors, initial_floor: self.initial_floor })
    }

    /// Means of the floors under the frequencies of `B_stage`.
    pub fn floor_means(&self, dag: &BlockDag, stage: usize) -> Result<Vec<BigRational>> {
        self.floors.iter().map(|f| f.mean(dag, stage)).collect()
    }

    /// Base symbols needed for a horizon of `n`.
    pub fn base_len(&self, n: u64) -> u64 {
        self.position(n).1 + 1 + self.floors.iter().map(|f| f.window()).max().unwrap_or(0) as u64
    }
}

/// `g(T~^n (w, i0))` for `n = 0..count`.
pub fn suspension_orbit(susp: &Suspension, word: &[u8], count: u64) -> Result<Vec<BigRational>> {
    if (word.len() as u64) < susp.base_len(count.saturating_sub(1)) {
        return Err(Error::range("orbit word length", word.len(), format!(">= {}", susp.base_len(count))));
    }
    Ok((0..count)
        .map(|n| {
            let (floor, shift) = susp.position(n);
            susp.floors[floor].eval(&word[shift as usize..])
        })
        .collect())
}

/// Sarnak averages of `g` along the suspension orbit.
pub fn suspension_sarnak_sum(
    susp: &Suspension,
    word: &[u8],
    mu: &[i8],
    n: u64,
    exec: Execution,
) -> Result<Vec<GridPoint>> {
    check_mu(mu, n)?;
    let (_, last) = susp.position(n);
    let floor_masks: Vec<Vec<u32>> = susp
        .floors
        .iter()
        .map(|f| masks(f, word, last as usize + 1, exec))
        .collect::<Result<_>>()?;
    let grid = geometric_grid(n);
    let key = |m: u64| {
        let (floor, shift) = susp.position(m);
        (floor as u64) << 32 | floor_masks[floor][shift as usize] as u64
    };
    let hists = cumulative_histograms(&grid, key, |m| mu[m as usize] as i64, exec);
    Ok(averages(&grid, hists, |k| susp.floors[(k >> 32) as usize].value_of_mask(k as u32)))
}

/// `|(1/N') sum_{n <= N'} e^{2 pi i (i0 + n) / K} mu(n)|` on the grid: the
/// Sarnak average of the floor eigenfunction. The Möbius sums per residue
/// are exact; only the final modulus is a float.
pub fn eigenfunction_sarnak_average(k: u64, initial_floor: u64, mu: &[i8], n: u64) -> Result<Vec<(u64, f64)>> {
    if k == 0 {
        return Err(Error::Input("K must be positive".into()));
    }
    check_mu(mu, n)?;
    let grid = geometric_grid(n);
    let hists = cumulative_histograms(&grid, |m| (initial_floor + m) % k, |m| mu[m as usize] as i64, Execution::Sequential);
    Ok(grid
        .iter()
        .zip(hists)
        .map(|(&g, hist)| {
            let mut z = Complex64::new(0.0, 0.0);
            for r in 0..k {
                let s = hist.get(&r).copied().unwrap_or(0);
                z += Complex64::from_polar(s as f64, std::f64::consts::TAU * r as f64 / k as f64);
            }
            (g, z.norm() / g as f64)
        })
        .collect())
}

/// Non-proof diagnostic: does `|average|` shrink along the grid?
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrendDiagnostic {
    pub label: &'static str,
    pub steps: usize,
    pub decreasing_steps: usize,
    pub monotone: bool,
    pub first_abs: f64,
    pub last_abs: f64,
}

pub fn trend_diagnostic(points: &[GridPoint]) -> TrendDiagnostic {
    let abs: Vec<f64> = points.iter().map(|p| to_f64(&p.average.abs())).collect();
    let steps = abs.len().saturating_sub(1);
    let decreasing_steps = abs.windows(2).filter(|w| w[1] <= w[0]).count();
    TrendDiagnostic {
        label: "diagnostic only, not a test of the conjecture",
        steps,
        decreasing_steps,
        monotone: decreasing_steps == steps,
        first_abs: abs.first().copied().unwrap_or(0.0),
        last_abs: abs.last().copied().unwrap_or(0.0),
    }
}

/// `N_prime,partial_average_num,partial_average_den` rows.
pub fn grid_csv(points: &[GridPoint]) -> String {
    let mut out = String::from("N_prime,partial_average_num,partial_average_den\n");
    for p in points {
        out.push_str(&format!("{},{},{}\n", p.n, p.average.numer(), p.average.denom()));
    }
    out
}

/// Parses [`grid_csv`] output.
pub fn grid_from_csv(text: &str) -> Result<Vec<GridPoint>> {
    let bad = |l: &str| Error::Input(format!("malformed grid line {l:?}"));
    text.lines()
        .skip(1)
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            if f.len() != 3 {
                return Err(bad(l));
            }
            let n: u64 = f[0].parse().map_err(|_| bad(l))?;
            let num: BigInt = f[1].parse().map_err(|_| bad(l))?;
            let den: BigInt = f[2].parse().map_err(|_| bad(l))?;
            if den.is_zero() {
                return Err(bad(l));
            }
            Ok(GridPoint { n, average: BigRational::new(num, den) })
        })
        .collect()
}

/// Float view of a grid, for quick inspection.
pub fn grid_f64(points: &[GridPoint]) -> Vec<(u64, f64)> {
    points.iter().map(|p| (p.n, p.average.to_f64().unwrap_or(f64::NAN))).collect()
}
