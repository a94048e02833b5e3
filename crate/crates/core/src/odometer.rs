//! The odometer `Y = prod {0..p_n - 1}` with carry to the right, the
//! Morse-type cocycle `f = 1 + sum_n s_n` over it, and exact laws of the
//! centered sums `f^{(j q_n)} - j h_{n+1}`.

use std::collections::{BTreeMap, HashMap};

use num_bigint::BigUint;
use num_traits::Zero;
use serde::Serialize;

use crate::construction::ConstructionParams;
use crate::distribution::IntegerDistribution;
use crate::error::{Error, Result};
use crate::exec::Execution;

/// Largest enumeration (number of truncated points) we accept.
pub const MAX_ENUMERATION: u64 = 1 << 28;

/// A point truncated to its first `depth()` coordinates; later
/// coordinates are unknown.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct OdometerPoint {
    coords: Vec<u64>,
    radices: Vec<u64>,
}

impl OdometerPoint {
    pub fn new(coords: Vec<u64>, radices: Vec<u64>) -> Result<Self> {
        if coords.is_empty() || coords.len() != radices.len() {
            return Err(Error::Input("point needs one radix per coordinate, depth >= 1".into()));
        }
        for (k, (&y, &p)) in coords.iter().zip(&radices).enumerate() {
            if p < 2 || y >= p {
                return Err(Error::range("coordinate", y, format!("0..{p} at position {}", k + 1)));
            }
        }
        Ok(OdometerPoint { coords, radices })
    }

    pub fn zero(radices: Vec<u64>) -> Result<Self> {
        OdometerPoint::new(vec![0; radices.len()], radices)
    }

    /// Point with the given 0-based tower index among the first `depth`
    /// coordinates of `params`.
    pub fn from_index(params: &ConstructionParams, depth: usize, mut index: u64) -> Result<Self> {
        params.check_stage(depth)?;
        let radices: Vec<u64> = (1..=depth).map(|k| params.cut(k)).collect();
        let coords = radices
            .iter()
            .map(|&p| {
                let d = index % p;
                index /= p;
                d
            })
            .collect();
        OdometerPoint::new(coords, radices)
    }

    pub fn depth(&self) -> usize {
        self.coords.len()
    }

    /// `y_k`, 1-based.
    pub fn coord(&self, k: usize) -> u64 {
        self.coords[k - 1]
    }

    pub fn coords(&self) -> &[u64] {
        &self.coords
    }

    pub fn radices(&self) -> &[u64] {
        &self.radices
    }

    /// Adds one at coordinate `k` (1-based) and carries to the right. The
    /// flag reports a carry out of the last coordinate; the known
    /// coordinates are correct either way.
    pub fn add_at(&self, k: usize) -> (OdometerPoint, bool) {
        let mut next = self.clone();
        let overflow = next.step_at(k);
        (next, overflow)
    }

    pub fn add_one(&self) -> (OdometerPoint, bool) {
        self.add_at(1)
    }

    pub(crate) fn step_at(&mut self, k: usize) -> bool {
        for i in k - 1..self.coords.len() {
            self.coords[i] += 1;
            if self.coords[i] < self.radices[i] {
                return false;
            }
            self.coords[i] = 0;
        }
        true
    }

    /// `i` with `y` in `D^{(n)}_i`: `y_1 + y_2 q_1 + ... + y_n q_{n-1}`.
    pub fn tower_index(&self, n: usize) -> Result<BigUint> {
        if n > self.depth() {
            return Err(Error::range("tower level", n, format!("0..={}", self.depth())));
        }
        let mut idx = BigUint::zero();
        for k in (0..n).rev() {
            idx = idx * self.radices[k] + self.coords[k];
        }
        Ok(idx)
    }

    fn maxed(&self, k: usize) -> bool {
        self.coords[k - 1] == self.radices[k - 1] - 1
    }
}

fn check_radices(params: &ConstructionParams, y: &OdometerPoint, upto: usize) -> Result<()> {
    params.check_stage(upto.max(1))?;
    for k in 1..=upto.min(y.depth()) {
        if y.radices[k - 1] != params.cut(k) {
            return Err(Error::Input(format!("radix {k} of the point differs from p_{k}")));
        }
    }
    Ok(())
}

/// `s_n(y)`: `s_{n, y_n}` when `y_1..y_{n-1}` are all maximal, else 0.
pub fn spacer_cocycle(params: &ConstructionParams, y: &OdometerPoint, n: usize) -> Result<u64> {
    if n == 0 || n > y.depth() {
        return Err(Error::range("stage", n, format!("1..={}", y.depth())));
    }
    check_radices(params, y, n)?;
    Ok(spacer_value(params, y, n))
}

fn spacer_value(params: &ConstructionParams, y: &OdometerPoint, n: usize) -> u64 {
    if (1..n).all(|k| y.maxed(k)) {
        params.spacer(n, y.coord(n) as usize)
    } else {
        0
    }
}

/// `g_{n+1}(y) = sum_{m=1}^t s_{n+m, y_{n+m}}`, `t` the first `m` with
/// `y_{n+m} < p_{n+m} - 1`; `None` if no such `m` within the depth.
pub fn g_function(params: &ConstructionParams, y: &OdometerPoint, n: usize) -> Result<Option<u64>> {
    if n >= y.depth() {
        return Err(Error::range("stage", n, format!("0..{}", y.depth())));
    }
    check_radices(params, y, y.depth())?;
    let mut acc = 0;
    for k in n + 1..=y.depth() {
        acc += params.spacer(k, y.coord(k) as usize);
        if !y.maxed(k) {
            return Ok(Some(acc));
        }
    }
    Ok(None)
}

/// `f_{n+1}(y) = sum_{m > n} s_m(y)`; `None` if all known coordinates are
/// maximal, so that spacers beyond the depth could contribute.
pub fn f_tail(params: &ConstructionParams, y: &OdometerPoint, n: usize) -> Result<Option<u64>> {
    check_radices(params, y, y.depth())?;
    let first_low = (1..=y.depth()).find(|&k| !y.maxed(k));
    let u = match first_low {
        Some(u) => u,
        None => return Ok(None),
    };
    Ok(Some((n + 1..=u).map(|m| params.spacer(m, y.coord(m) as usize)).sum()))
}

/// `g + g∘S + ... + g∘S^{q-1}` at `y`. An undetermined value of `g` means
/// the point is too shallow.
pub fn cocycle_sum<G>(g: G, y: &OdometerPoint, q: u64) -> Result<i64>
where
    G: Fn(&OdometerPoint) -> Option<i64>,
{
    let mut p = y.clone();
    let mut acc = 0i64;
    for k in 0..q {
        acc += g(&p).ok_or(Error::Undetermined { depth: y.depth() })?;
        if k + 1 < q {
            p.step_at(1);
        }
    }
    Ok(acc)
}

/// Values of `g` on all points of depth `radices.len()`, by tower index.
pub fn cycle_values<G>(radices: &[u64], g: G, exec: Execution) -> Result<Vec<Option<i64>>>
where
    G: Fn(&OdometerPoint) -> Option<i64> + Sync + Send,
{
    let total = enumeration_size(radices)?;
    let chunk = 1u64 << 14;
    let chunks = total.div_ceil(chunk) as usize;
    let parts = exec.map_range(chunks, |c| {
        let lo = c as u64 * chunk;
        let hi = (lo + chunk).min(total);
        let mut p = point_at(radices, lo);
        let mut out = Vec::with_capacity((hi - lo) as usize);
        for _ in lo..hi {
            out.push(g(&p));
            p.step_at(1);
        }
        out
    });
    Ok(parts.concat())
}

/// Sums of `q` consecutive cycle values starting at every index, wrapping
/// around the cycle. `None` when an undetermined value falls in the window.
pub fn cycle_window_sums(values: &[Option<i64>], q: u64) -> Vec<Option<i64>> {
    let n = values.len();
    if n == 0 {
        return Vec::new();
    }
    let mut pre = vec![0i64; n + 1];
    let mut bad = vec![0u64; n + 1];
    for (i, v) in values.iter().enumerate() {
        pre[i + 1] = pre[i] + v.unwrap_or(0);
        bad[i + 1] = bad[i] + u64::from(v.is_none());
    }
    let (laps, rest) = (q / n as u64, (q % n as u64) as usize);
    (0..n)
        .map(|x| {
            let (mut s, mut b) = (pre[n] * laps as i64, bad[n] * laps);
            let end = x + rest;
            if end <= n {
                s += pre[end] - pre[x];
                b += bad[end] - bad[x];
            } else {
                s += pre[n] - pre[x] + pre[end - n];
                b += bad[n] - bad[x] + bad[end - n];
            }
            (b == 0).then_some(s)
        })
        .collect()
}

fn enumeration_size(radices: &[u64]) -> Result<u64> {
    let mut total: u64 = 1;
    for &p in radices {
        total = total
            .checked_mul(p)
            .filter(|&t| t <= MAX_ENUMERATION)
            .ok_or_else(|| Error::Refusal(format!("enumeration exceeds {MAX_ENUMERATION} points")))?;
    }
    Ok(total)
}

fn point_at(radices: &[u64], mut index: u64) -> OdometerPoint {
    let coords = radices
        .iter()
        .map(|&p| {
            let d = index % p;
            index /= p;
            d
        })
        .collect();
    OdometerPoint { coords, radices: radices.to_vec() }
}

/// A column system: radices `pi_1..pi_r` and spacer values `eta_m(.)`.
/// `gamma(y) = sum_{m <= t} eta_m(y_m)` with `t` the first non-maximal
/// coordinate, and the law of `gamma + gamma∘S + ... + gamma∘S^{j-1}`.
#[derive(Clone, Debug)]
pub struct Columns<'a> {
    pub radices: Vec<u64>,
    pub spacers: Vec<&'a [u64]>,
}

impl<'a> Columns<'a> {
    pub fn from_params(params: &'a ConstructionParams, first: usize, r: usize) -> Result<Self> {
        if first == 0 || first + r - 1 > params.depth() || r == 0 {
            return Err(Error::range(
                "stage window",
                format!("{first}..{}", first + r),
                format!("1..={}", params.depth()),
            ));
        }
        Ok(Columns {
            radices: (first..first + r).map(|k| params.cut(k)).collect(),
            spacers: (first..first + r).map(|k| &params.stage(k).spacers[..]).collect(),
        })
    }

    /// `gamma` at the mixed-radix index `x`, or the lower bound
    /// `sum_m eta_m(pi_m - 1)` flagged as undetermined.
    fn gamma(&self, mut x: u64) -> (i64, bool) {
        let mut acc = 0i64;
        for (k, &p) in self.radices.iter().enumerate() {
            let d = x % p;
            x /= p;
            acc += self.spacers[k][d as usize] as i64;
            if d < p - 1 {
                return (acc, true);
            }
        }
        (acc, false)
    }

    /// Exact law by enumerating all `prod pi_m` truncated points and
    /// summing `j` consecutive values of `gamma` along the cycle.
    pub fn law_by_enumeration(&self, j: u64, exec: Execution) -> Result<IntegerDistribution> {
        if j == 0 {
            return Err(Error::Input("j must be at least 1".into()));
        }
        let total = enumeration_size(&self.radices)?;
        let chunk = 1u64 << 15;
        let chunks = total.div_ceil(chunk) as usize;
        let parts = exec.map_range(chunks, |c| {
            let lo = c as u64 * chunk;
            let hi = (lo + chunk).min(total);
            let mut hist: BTreeMap<i64, u128> = BTreeMap::new();
            let (mut tail, mut floor) = (0u128, i64::MAX);
            // ring buffer of the current window
            let mut ring: Vec<(i64, bool)> = (0..j).map(|i| self.gamma((lo + i) % total)).collect();
            let mut sum: i64 = ring.iter().map(|v| v.0).sum();
            let mut unknown = ring.iter().filter(|v| !v.1).count();
            for x in lo..hi {
                if unknown == 0 {
                    *hist.entry(sum).or_default() += 1;
                } else {
                    tail += 1;
                    floor = floor.min(sum);
                }
                if x + 1 < hi {
                    let slot = ((x - lo) % j) as usize;
                    let old = ring[slot];
                    let new = self.gamma((x + j) % total);
                    sum += new.0 - old.0;
                    unknown = unknown + usize::from(!new.1) - usize::from(!old.1);
                    ring[slot] = new;
                }
            }
            (hist, tail, floor)
        });
        let mut hist: BTreeMap<i64, u128> = BTreeMap::new();
        let (mut tail, mut floor) = (0u128, i64::MAX);
        for (h, t, f) in parts {
            for (v, c) in h {
                *hist.entry(v).or_default() += c;
            }
            tail += t;
            floor = floor.min(f);
        }
        Ok(IntegerDistribution::from_counts(&hist, tail, Some(floor), total as u128))
    }

    /// The same law by a coordinate-by-coordinate transfer over states
    /// (carry per track, still-running tracks, partial sum).
    pub fn law_by_transfer(&self, j: u64) -> Result<IntegerDistribution> {
        if j == 0 || j > 64 {
            return Err(Error::range("j", j, "1..=64"));
        }
        let total = enumeration_size(&self.radices)? as u128;
        type State = (Vec<u64>, u64, i64);
        let all: u64 = if j == 64 { u64::MAX } else { (1u64 << j) - 1 };
        let mut states: HashMap<State, u128> = HashMap::new();
        states.insert(((0..j).collect(), all, 0), 1);
        let mut done: BTreeMap<i64, u128> = BTreeMap::new();
        let mut remaining: u128 = total;
        for (k, &p) in self.radices.iter().enumerate() {
            remaining /= p as u128;
            let eta = self.spacers[k];
            let mut next: HashMap<State, u128> = HashMap::new();
            for ((carries, active, sum), weight) in states {
                for d in 0..p {
                    let mut nc = Vec::with_capacity(carries.len());
                    let (mut act, mut s) = (active, sum);
                    for (i, &c) in carries.iter().enumerate() {
                        let z = d + c;
                        let digit = z % p;
                        nc.push(z / p);
                        if act >> i & 1 == 1 {
                            s += eta[digit as usize] as i64;
                            if digit < p - 1 {
                                act &= !(1u64 << i);
                            }
                        }
                    }
                    if act == 0 {
                        *done.entry(s).or_default() += weight * remaining;
                    } else {
                        *next.entry((nc, act, s)).or_default() += weight;
                    }
                }
            }
            states = next;
        }
        let mut tail = 0u128;
        let mut floor = i64::MAX;
        for ((_, _, s), w) in states {
            tail += w;
            floor = floor.min(s);
        }
        Ok(IntegerDistribution::from_counts(&done, tail, Some(floor), total))
    }
}

/// Law of `f^{(j q_n)} - j h_{n+1} = g_{n+1}^{(j, S^{q_n})}`, enumerating
/// coordinates `n+1..n+r`. The unresolved mass is at most `j 2^{-r}`.
pub fn cocycle_distribution(
    params: &ConstructionParams,
    n: usize,
    j: u64,
    r: usize,
    exec: Execution,
) -> Result<IntegerDistribution> {
    if n + r > params.depth() || r == 0 {
        return Err(Error::range("n + r", n + r, format!("1..={}", params.depth())));
    }
    Columns::from_params(params, n + 1, r)?.law_by_enumeration(j, exec)
}

/// The transfer-route counterpart of [`cocycle_distribution`].
pub fn cocycle_distribution_transfer(
    params: &ConstructionParams,
    n: usize,
    j: u64,
    r: usize,
) -> Result<IntegerDistribution> {
    if n + r > params.depth() || r == 0 {
        return Err(Error::range("n + r", n + r, format!("1..={}", params.depth())));
    }
    Columns::from_params(params, n + 1, r)?.law_by_transfer(j)
}
