//! Rank-one construction parameters and the integer sequences derived from
//! them: tower heights `h_n`, odometer moduli `q_n`, spacer statistics.
//!
//! Stages are indexed from 1, as in the usual presentation: stage `n` cuts
//! tower `n` into `cut(n)` columns and puts `spacers(n)[j]` spacers above
//! column `j`.

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Cutting parameter and spacer counts of one stage.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Stage {
    pub cut: u64,
    pub spacers: Vec<u64>,
}

impl Stage {
    pub fn new(cut: u64, spacers: Vec<u64>) -> Result<Self> {
        let stage = Stage { cut, spacers };
        stage.validate()?;
        Ok(stage)
    }

    fn validate(&self) -> Result<()> {
        if self.cut < 2 {
            return Err(Error::Input(format!("cut {} must be at least 2", self.cut)));
        }
        if self.spacers.len() as u64 != self.cut {
            return Err(Error::Input(format!(
                "stage with cut {} has {} spacer counts",
                self.cut,
                self.spacers.len()
            )));
        }
        Ok(())
    }

    pub fn total_spacers(&self) -> u64 {
        self.spacers.iter().sum()
    }

    pub fn max_spacer(&self) -> u64 {
        self.spacers.iter().copied().max().unwrap_or(0)
    }
}

/// Named construction families. Family-specific invariants are checked when
/// parameters are built.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Chacon,
    Vnk,
    /// `columns[n-1]` is the column `r_n` carrying the single spacer.
    GeneralizedChacon {
        columns: Vec<u64>,
    },
    Katok,
    Custom,
}

impl Family {
    pub fn name(&self) -> &'static str {
        match self {
            Family::Chacon => "chacon",
            Family::Vnk => "vnk",
            Family::GeneralizedChacon { .. } => "generalized_chacon",
            Family::Katok => "katok",
            Family::Custom => "custom",
        }
    }
}

/// Where the single spacer of a generalized Chacon stage goes.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SpacerColumn {
    Index(u64),
    Named(String),
}

impl SpacerColumn {
    fn resolve(&self, cut: u64) -> Result<u64> {
        match self {
            SpacerColumn::Index(i) => Ok((*i).min(cut - 1)),
            SpacerColumn::Named(name) => match name.as_str() {
                "first" => Ok(0),
                "middle" => Ok(cut / 2),
                "last" => Ok(cut - 1),
                other => Err(Error::Input(format!("unknown spacer column rule {other:?}"))),
            },
        }
    }
}

/// Generator rule extending an explicit prefix to the requested depth.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeneratorConfig {
    /// `periodic` (repeat the listed stages), `thue_morse` (two listed stages
    /// selected by the Thue-Morse bit of `n`), `linear` (generalized Chacon
    /// cuts `slope*n + offset`), `growth` (Katok cuts `2*factor*n*h_n`).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kind: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cut_slope: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cut_offset: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spacer_column: Option<SpacerColumn>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub factor: Option<u64>,
}

/// JSON document describing a construction.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConstructionConfig {
    pub family: String,
    pub depth: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub cuts: Vec<u64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub spacers: Vec<Vec<u64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generator: Option<GeneratorConfig>,
}

/// A finite prefix of a rank-one construction.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConstructionParams {
    family: Family,
    stages: Vec<Stage>,
}

pub(crate) fn thue_morse(n: usize) -> usize {
    (n.count_ones() % 2) as usize
}

impl ConstructionParams {
    pub fn new(family: Family, stages: Vec<Stage>) -> Result<Self> {
        if stages.is_empty() {
            return Err(Error::Input("a construction needs at least one stage".into()));
        }
        for stage in &stages {
            stage.validate()?;
        }
        let params = ConstructionParams { family, stages };
        params.validate_family()?;
        Ok(params)
    }

    fn validate_family(&self) -> Result<()> {
        match &self.family {
            Family::Katok => {
                for (i, st) in self.stages.iter().enumerate() {
                    let half = st.cut / 2;
                    let ok = st.cut % 2 == 0
                        && st
                            .spacers
                            .iter()
                            .enumerate()
                            .all(|(j, &s)| s == u64::from(j as u64 >= half));
                    if !ok {
                        return Err(Error::Input(format!(
                            "katok stage {} must have even cut and spacers 0^(p/2) 1^(p/2)",
                            i + 1
                        )));
                    }
                }
            }
            Family::GeneralizedChacon { columns } => {
                if columns.len() != self.stages.len() {
                    return Err(Error::Input("one spacer column per stage required".into()));
                }
                for (i, (st, &r)) in self.stages.iter().zip(columns).enumerate() {
                    let ok = st
                        .spacers
                        .iter()
                        .enumerate()
                        .all(|(j, &s)| s == u64::from(j as u64 == r));
                    if !ok {
                        return Err(Error::Input(format!(
                            "generalized chacon stage {} must carry exactly one spacer at column {r}",
                            i + 1
                        )));
                    }
                }
            }
            _ => {}
        }
        Ok(())
    }

    /// Classical Chacon: `B_{n+1} = B_n B_n 1 B_n`.
    pub fn chacon(depth: usize) -> Self {
        let stages = vec![Stage { cut: 3, spacers: vec![0, 1, 0] }; depth.max(1)];
        ConstructionParams { family: Family::Chacon, stages }
    }

    /// von Neumann-Kakutani odometer: `B_{n+1} = B_n B_n`.
    pub fn vnk(depth: usize) -> Self {
        let stages = vec![Stage { cut: 2, spacers: vec![0, 0] }; depth.max(1)];
        ConstructionParams { family: Family::Vnk, stages }
    }

    /// Generalized Chacon with the given cuts and spacer columns.
    pub fn generalized_chacon(cuts: &[u64], columns: &[u64]) -> Result<Self> {
        if cuts.len() != columns.len() {
            return Err(Error::Input("cuts and columns differ in length".into()));
        }
        let mut stages = Vec::with_capacity(cuts.len());
        for (&p, &r) in cuts.iter().zip(columns) {
            if p < 2 || r >= p {
                return Err(Error::Input(format!("invalid cut {p} / column {r}")));
            }
            let spacers = (0..p).map(|j| u64::from(j == r)).collect();
            stages.push(Stage { cut: p, spacers });
        }
        ConstructionParams::new(
            Family::GeneralizedChacon { columns: columns.to_vec() },
            stages,
        )
    }

    /// Katok construction from explicit even cuts.
    pub fn katok(cuts: &[u64]) -> Result<Self> {
        let mut stages = Vec::with_capacity(cuts.len());
        for &p in cuts {
            if p < 2 || p % 2 != 0 {
                return Err(Error::Input(format!("katok cut {p} must be even and >= 2")));
            }
            let spacers = (0..p).map(|j| u64::from(j >= p / 2)).collect();
            stages.push(Stage { cut: p, spacers });
        }
        ConstructionParams::new(Family::Katok, stages)
    }

    pub fn custom(stages: Vec<Stage>) -> Result<Self> {
        ConstructionParams::new(Family::Custom, stages)
    }

    /// Repeats `pattern` cyclically up to `depth` stages.
    pub fn periodic(pattern: &[Stage], depth: usize) -> Result<Self> {
        if pattern.is_empty() {
            return Err(Error::Input("empty stage pattern".into()));
        }
        let stages = (0..depth).map(|i| pattern[i % pattern.len()].clone()).collect();
        ConstructionParams::custom(stages)
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    pub fn depth(&self) -> usize {
        self.stages.len()
    }

    pub fn stages(&self) -> &[Stage] {
        &self.stages
    }

    /// Stage `n`, 1-based.
    pub fn stage(&self, n: usize) -> &Stage {
        &self.stages[n - 1]
    }

    pub fn cut(&self, n: usize) -> u64 {
        self.stages[n - 1].cut
    }

    pub fn spacer(&self, n: usize, j: usize) -> u64 {
        self.stages[n - 1].spacers[j]
    }

    pub(crate) fn check_stage(&self, n: usize) -> Result<()> {
        if n == 0 || n > self.depth() {
            return Err(Error::range("stage", n, format!("1..={}", self.depth())));
        }
        Ok(())
    }

    /// Builds parameters from a JSON configuration document.
    pub fn from_config(cfg: &ConstructionConfig) -> Result<Self> {
        if cfg.depth == 0 {
            return Err(Error::Input("depth must be positive".into()));
        }
        let depth = cfg.depth;
        let generator = cfg.generator.clone().unwrap_or_default();
        match cfg.family.as_str() {
            "chacon" => Ok(ConstructionParams::chacon(depth)),
            "vnk" => Ok(ConstructionParams::vnk(depth)),
            "generalized_chacon" => {
                let rule = generator
                    .spacer_column
                    .clone()
                    .unwrap_or(SpacerColumn::Named("middle".into()));
                let cuts: Vec<u64> = if cfg.cuts.is_empty() {
                    let slope = generator.cut_slope.unwrap_or(2);
                    let offset = generator.cut_offset.unwrap_or(2);
                    (1..=depth as u64).map(|n| slope * n + offset).collect()
                } else {
                    if cfg.cuts.len() < depth {
                        return Err(Error::Input("fewer cuts than depth".into()));
                    }
                    cfg.cuts[..depth].to_vec()
                };
                let columns = cuts
                    .iter()
                    .map(|&p| if p < 2 { Ok(0) } else { rule.resolve(p) })
                    .collect::<Result<Vec<_>>>()?;
                ConstructionParams::generalized_chacon(&cuts, &columns)
            }
            "katok" => {
                if !cfg.cuts.is_empty() {
                    if cfg.cuts.len() < depth {
                        return Err(Error::Input("fewer cuts than depth".into()));
                    }
                    return ConstructionParams::katok(&cfg.cuts[..depth]);
                }
                let factor = generator.factor.unwrap_or(1);
                let mut cuts = Vec::with_capacity(depth);
                let mut h: u64 = 1;
                for n in 1..=depth as u64 {
                    let p = 2u64
                        .checked_mul(factor)
                        .and_then(|x| x.checked_mul(n))
                        .and_then(|x| x.checked_mul(h))
                        .ok_or_else(|| Error::Input("katok growth schedule overflows".into()))?;
                    cuts.push(p);
                    h = p
                        .checked_mul(h)
                        .and_then(|x| x.checked_add(p / 2))
                        .ok_or_else(|| Error::Input("katok growth schedule overflows".into()))?;
                }
                ConstructionParams::katok(&cuts)
            }
            "custom" => {
                if cfg.cuts.len() != cfg.spacers.len() || cfg.cuts.is_empty() {
                    return Err(Error::Input(
                        "custom family needs matching non-empty cuts and spacers".into(),
                    ));
                }
                let pattern = cfg
                    .cuts
                    .iter()
                    .zip(&cfg.spacers)
                    .map(|(&p, s)| Stage::new(p, s.clone()))
                    .collect::<Result<Vec<_>>>()?;
                match generator.kind.as_deref() {
                    None if pattern.len() >= depth => {
                        ConstructionParams::custom(pattern[..depth].to_vec())
                    }
                    None => Err(Error::Input(
                        "explicit prefix shorter than depth and no generator".into(),
                    )),
                    Some("periodic") => ConstructionParams::periodic(&pattern, depth),
                    Some("thue_morse") => {
                        if pattern.len() != 2 {
                            return Err(Error::Input("thue_morse needs exactly two stages".into()));
                        }
                        let stages = (1..=depth).map(|n| pattern[thue_morse(n)].clone()).collect();
                        ConstructionParams::custom(stages)
                    }
                    Some(other) => Err(Error::Input(format!("unknown generator kind {other:?}"))),
                }
            }
            other => Err(Error::Input(format!("unknown family {other:?}"))),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ConstructionConfig = serde_json::from_str(text)?;
        ConstructionParams::from_config(&cfg)
    }

    /// Explicit (generator-free) configuration reproducing these parameters.
    pub fn to_config(&self) -> ConstructionConfig {
        ConstructionConfig {
            family: "custom".into(),
            depth: self.depth(),
            cuts: self.stages.iter().map(|s| s.cut).collect(),
            spacers: self.stages.iter().map(|s| s.spacers.clone()).collect(),
            generator: None,
        }
    }
}

/// Heights `h(1..=n+1)` and moduli `q(1..=n)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HeightSequence {
    heights: Vec<BigUint>,
    moduli: Vec<BigUint>,
}

impl HeightSequence {
    /// `h(k)`, 1-based.
    pub fn h(&self, k: usize) -> &BigUint {
        &self.heights[k - 1]
    }

    /// `q(k) = p_1 ... p_k`, 1-based; `q(0) = 1` is not stored.
    pub fn q(&self, k: usize) -> &BigUint {
        &self.moduli[k - 1]
    }

    pub fn heights(&self) -> &[BigUint] {
        &self.heights
    }

    pub fn moduli(&self) -> &[BigUint] {
        &self.moduli
    }
}

/// Heights through `h(n+1)` by `h(k+1) = p_k h(k) + sum_j s_{k,j}`.
pub fn heights(params: &ConstructionParams, n: usize) -> Result<HeightSequence> {
    if n > params.depth() {
        return Err(Error::range("stage", n, format!("0..={}", params.depth())));
    }
    let mut hs = Vec::with_capacity(n + 1);
    let mut qs = Vec::with_capacity(n);
    let mut h = BigUint::one();
    let mut q = BigUint::one();
    hs.push(h.clone());
    for st in &params.stages()[..n] {
        h = &h * st.cut + BigUint::from(st.total_spacers());
        q *= st.cut;
        hs.push(h.clone());
        qs.push(q.clone());
    }
    Ok(HeightSequence { heights: hs, moduli: qs })
}

/// Partial sums of `sum_k (1/h_{k+1}) sum_i s_{k,i}` plus a prefix-only
/// convergence heuristic.
#[derive(Clone, Debug, PartialEq)]
pub struct PartialSums {
    pub sums: Vec<BigRational>,
    /// Heuristic: last increment is below the threshold. Not a proof.
    pub heuristic_converging: bool,
}

pub fn finite_measure_partial_sums(
    params: &ConstructionParams,
    n: usize,
    threshold: &BigRational,
) -> Result<PartialSums> {
    let hs = heights(params, n)?;
    let mut acc = BigRational::zero();
    let mut sums = Vec::with_capacity(n);
    let mut last = BigRational::zero();
    for k in 1..=n {
        let inc = BigRational::new(
            params.stage(k).total_spacers().into(),
            hs.h(k + 1).clone().into(),
        );
        acc += &inc;
        sums.push(acc.clone());
        last = inc;
    }
    Ok(PartialSums { sums, heuristic_converging: &last < threshold })
}

/// `t_k = max_j s_{k,j}` and `(t_1+...+t_k)/h_k` for `k <= n`.
#[derive(Clone, Debug, PartialEq)]
pub struct SpacerStats {
    pub maxima: Vec<u64>,
    pub ratios: Vec<BigRational>,
    /// Heuristic: `t_k/h_k` strictly decreases (or is zero) along the prefix.
    pub heuristic_reasonable: bool,
}

pub fn spacer_stats(params: &ConstructionParams, n: usize) -> Result<SpacerStats> {
    let hs = heights(params, n)?;
    let maxima: Vec<u64> = (1..=n).map(|k| params.stage(k).max_spacer()).collect();
    let mut running = BigUint::zero();
    let mut ratios = Vec::with_capacity(n);
    let mut own = Vec::with_capacity(n);
    for (k, &t) in maxima.iter().enumerate() {
        running += t;
        let h: BigUint = hs.h(k + 1).clone();
        ratios.push(BigRational::new(running.clone().into(), h.clone().into()));
        own.push(BigRational::new(BigUint::from(t).into(), h.into()));
    }
    let heuristic_reasonable = own
        .windows(2)
        .all(|w| w[1].is_zero() || w[1] < w[0]);
    Ok(SpacerStats { maxima, ratios, heuristic_reasonable })
}
