//! Finitely supported laws on the integers with exact rational masses.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rational::{fmt, int, ratio};

/// Enumerated masses plus the probability of outcomes that were not
/// resolved. Every unresolved outcome is known to be `>= tail_floor`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntegerDistribution {
    pub masses: BTreeMap<i64, BigRational>,
    pub tail_mass: BigRational,
    pub tail_floor: Option<i64>,
}

impl IntegerDistribution {
    pub fn delta(v: i64) -> Self {
        IntegerDistribution {
            masses: BTreeMap::from([(v, BigRational::one())]),
            tail_mass: BigRational::zero(),
            tail_floor: None,
        }
    }

    /// Builds a law from outcome counts out of `total` equally likely cases.
    pub fn from_counts(
        counts: &BTreeMap<i64, u128>,
        tail: u128,
        tail_floor: Option<i64>,
        total: u128,
    ) -> Self {
        let masses = counts
            .iter()
            .filter(|(_, &c)| c > 0)
            .map(|(&v, &c)| (v, ratio(c, total)))
            .collect();
        IntegerDistribution {
            masses,
            tail_mass: ratio(tail, total),
            tail_floor: if tail > 0 { tail_floor } else { None },
        }
    }

    pub fn mass(&self, v: i64) -> BigRational {
        self.masses.get(&v).cloned().unwrap_or_else(BigRational::zero)
    }

    /// Values with provably positive mass.
    pub fn support(&self) -> Vec<i64> {
        self.masses
            .iter()
            .filter(|(_, m)| m.is_positive())
            .map(|(&v, _)| v)
            .collect()
    }

    pub fn enumerated_mass(&self) -> BigRational {
        self.masses.values().fold(BigRational::zero(), |a, b| a + b)
    }

    /// Enumerated mass at values `>= v`.
    pub fn mass_at_least(&self, v: i64) -> BigRational {
        self.masses.range(v..).fold(BigRational::zero(), |a, (_, b)| a + b)
    }

    /// Could `v` carry positive mass in the untruncated law?
    pub fn tail_may_contain(&self, v: i64) -> bool {
        self.tail_mass.is_positive() && self.tail_floor.is_none_or(|f| v >= f)
    }

    /// Masses sum with the tail to one, all non-negative.
    pub fn is_consistent(&self) -> bool {
        let nonneg = self.masses.values().all(|m| !m.is_negative()) && !self.tail_mass.is_negative();
        nonneg && self.enumerated_mass() + &self.tail_mass == int(1)
    }

    /// `value,numerator,denominator` rows followed by a tail footer.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("value,numerator,denominator\n");
        for (v, m) in &self.masses {
            let _ = writeln!(out, "{v},{},{}", m.numer(), m.denom());
        }
        let _ = writeln!(out, "tail_numerator,tail_denominator");
        let _ = writeln!(out, "{},{}", self.tail_mass.numer(), self.tail_mass.denom());
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let bad = |line: &str| Error::Input(format!("malformed distribution line {line:?}"));
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        if lines.next() != Some("value,numerator,denominator") {
            return Err(Error::Input("missing distribution header".into()));
        }
        let mut masses = BTreeMap::new();
        let mut tail = None;
        while let Some(line) = lines.next() {
            if line == "tail_numerator,tail_denominator" {
                let row = lines.next().ok_or_else(|| bad(line))?;
                let (n, d) = row.split_once(',').ok_or_else(|| bad(row))?;
                let n: i64 = n.parse().map_err(|_| bad(row))?;
                let d: i64 = d.parse().map_err(|_| bad(row))?;
                tail = Some(ratio(n, d));
                break;
            }
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 3 {
                return Err(bad(line));
            }
            let v: i64 = f[0].parse().map_err(|_| bad(line))?;
            let n: num_bigint::BigInt = f[1].parse().map_err(|_| bad(line))?;
            let d: num_bigint::BigInt = f[2].parse().map_err(|_| bad(line))?;
            masses.insert(v, BigRational::new(n, d));
        }
        let tail_mass = tail.ok_or_else(|| Error::Input("missing tail footer".into()))?;
        Ok(IntegerDistribution { masses, tail_mass, tail_floor: None })
    }

    pub fn describe(&self) -> String {
        let parts: Vec<String> = self.masses.iter().map(|(v, m)| format!("{v}:{}", fmt(m))).collect();
        format!("{{{}}} tail {}", parts.join(", "), fmt(&self.tail_mass))
    }
}
